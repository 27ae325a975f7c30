use std::path::Path;
use std::process::{Command, Output};

use coophunt::commands::{EquilibriaReport, IsoclineTable, NsOutput};
use coophunt::{Document, ErrorRecord};

fn coophunt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coophunt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = coophunt(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn error_record(out: &Output) -> ErrorRecord {
    let line = String::from_utf8_lossy(&out.stderr)
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .unwrap()
        .to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    serde_json::from_value(v["error"].clone()).unwrap()
}

const ONE_OVER_2_1: &str = "0.47619047619047616";
const BISTABLE_ALPHA: &str = "9.523809523809524";

#[test]
fn two_interior_rows_in_the_window() {
    let (h, rows) = csv_rows(&ok(&[
        "equilibria",
        "--lambda",
        "10",
        "--alpha",
        "15",
        "--beta",
        "0.09",
    ]));
    let kind = column(&h, "kind");
    let interior = rows.iter().filter(|r| r[kind] == "interior").count();
    assert_eq!(interior, 2);
}

#[test]
fn one_interior_row_above_invasion_threshold() {
    let (h, rows) = csv_rows(&ok(&[
        "equilibria",
        "--lambda",
        "5",
        "--alpha",
        ONE_OVER_2_1,
        "--beta",
        "0.525",
    ]));
    let kind = column(&h, "kind");
    assert_eq!(rows.iter().filter(|r| r[kind] == "interior").count(), 1);
}

#[test]
fn only_origin_when_prey_cannot_grow() {
    let text = ok(&[
        "equilibria",
        "--lambda",
        "0.5",
        "--beta",
        "1",
        "--format",
        "json",
    ]);
    let doc: Document<EquilibriaReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.data.equilibria.len(), 1);
    assert_eq!(
        doc.data.equilibria[0].equilibrium.state,
        coophunt_core::State::ORIGIN
    );
    assert!(doc.data.origin_globally_stable);
    assert!(doc.data.regime.is_none() && doc.data.critical.is_none());
}

#[test]
fn isocline_first_row_starts_at_carrying_capacity() {
    let (h, rows) = csv_rows(&ok(&[
        "isoclines",
        "--lambda",
        "5",
        "--beta",
        "0.4",
        "--alpha",
        "2",
    ]));
    let f: f64 = rows[0][column(&h, "f")].parse().unwrap();
    let y: f64 = rows[0][column(&h, "y")].parse().unwrap();
    assert_eq!((y, f), (0.0, 4.0));
    assert_eq!(rows.len(), 201);
}

#[test]
fn isoclines_touch_at_the_tangency_threshold() {
    let b = coophunt_core::equilibria::beta_star(10.0, 15.0)
        .unwrap()
        .beta_star
        .to_string();
    let text = ok(&[
        "isoclines",
        "--lambda",
        "10",
        "--alpha",
        "15",
        "--beta",
        &b,
        "--samples",
        "4001",
        "--format",
        "json",
    ]);
    let doc: Document<IsoclineTable> = serde_json::from_str(&text).unwrap();
    let gap = doc
        .data
        .rows
        .iter()
        .map(|r| (r.h - r.f).abs())
        .fold(f64::INFINITY, f64::min);
    assert!(gap < 1e-3, "{gap}");
}

#[test]
fn isoclines_apart_without_interior_states() {
    let text = ok(&[
        "isoclines",
        "--lambda",
        "15",
        "--alpha",
        "1.2",
        "--beta",
        "0.05",
        "--format",
        "json",
    ]);
    let doc: Document<IsoclineTable> = serde_json::from_str(&text).unwrap();
    assert!(doc.data.rows.iter().all(|r| r.h > r.f));
}

#[test]
fn ns_report_for_weak_cooperation() {
    let text = ok(&[
        "ns",
        "--lambda",
        "5",
        "--alpha",
        ONE_OVER_2_1,
        "--check",
        "--format",
        "json",
    ]);
    let doc: Document<NsOutput> = serde_json::from_str(&text).unwrap();
    let r = &doc.data.report;
    assert!((r.beta_d - 0.6).abs() < 0.02);
    assert_eq!(r.direction, coophunt_core::ns::Direction::Supercritical);
    assert!(doc.data.check.unwrap().consistent);
    assert!(doc.manifest.settings.contains_key("orbit.burn_in"));
}

#[test]
fn ns_report_for_moderate_cooperation() {
    let text = ok(&[
        "ns",
        "--lambda",
        "5",
        "--alpha",
        "1.4285714285714286",
        "--format",
        "json",
    ]);
    let doc: Document<NsOutput> = serde_json::from_str(&text).unwrap();
    assert!(doc.data.report.transversality > 0.0);
    assert_eq!(doc.data.report.b.len(), 7);
}

#[test]
fn no_ns_point_record() {
    let out = coophunt(&["ns", "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(4));
    let rec = error_record(&out);
    assert_eq!(rec.kind, "no_ns_point");
    assert_eq!(rec.exit_code, 4);
    assert!(out.stdout.is_empty());
}

#[test]
fn empty_beta_range_is_a_usage_error() {
    let out = coophunt(&[
        "sweep",
        "--lambda",
        "5",
        "--beta-min",
        "0.5",
        "--beta-max",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out).exit_code, 2);
}

#[test]
fn invalid_parameters_exit_with_record() {
    for args in [
        &["equilibria", "--lambda", "-1", "--beta", "1"][..],
        &["equilibria", "--lambda", "5", "--beta", "0"],
        &[
            "equilibria",
            "--lambda",
            "5",
            "--beta",
            "1",
            "--alpha",
            "-0.5",
        ],
        &["equilibria", "--lambda", "5"],
        &["basin", "--lambda", "5", "--beta", "1", "--grid", "1"],
        &[
            "simulate", "--lambda", "5", "--beta", "1", "--x0", "1", "--y0", "1", "--tol",
            "bogus=1",
        ],
        &[
            "simulate",
            "--lambda",
            "5",
            "--beta",
            "1",
            "--x0",
            "1",
            "--y0",
            "1",
            "--burn-in",
            "10",
        ],
    ] {
        let out = coophunt(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_record(&out).exit_code, 2, "{args:?}");
    }
}

#[test]
fn regime_precondition_exit_code() {
    let out = coophunt(&["isoclines", "--lambda", "0.9", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_record(&out).kind, "regime");
}

fn labels(args: &[&str]) -> Vec<String> {
    let (h, rows) = csv_rows(&ok(args));
    let i = column(&h, "label");
    let mut l: Vec<String> = rows.iter().map(|r| r[i].clone()).collect();
    l.sort();
    l.dedup();
    l
}

#[test]
fn bistable_window_shows_loop_and_predator_free_state() {
    let l = labels(&[
        "basin",
        "--lambda",
        "5",
        "--beta",
        "0.21",
        "--alpha",
        BISTABLE_ALPHA,
        "--grid",
        "6",
        "--x-range",
        "0.5,3.9",
        "--y-range",
        "0.01,0.3",
    ]);
    assert!(l.contains(&"invariant_loop".to_string()), "{l:?}");
    assert!(l.contains(&"boundary_e1".to_string()), "{l:?}");
}

#[test]
fn bistable_window_shows_fixed_point_and_predator_free_state() {
    let l = labels(&[
        "basin",
        "--lambda",
        "5",
        "--beta",
        "0.188",
        "--alpha",
        BISTABLE_ALPHA,
        "--grid",
        "6",
        "--x-range",
        "0.5,3.9",
        "--y-range",
        "0.01,0.3",
    ]);
    assert!(l.contains(&"fixed_point".to_string()), "{l:?}");
    assert!(l.contains(&"boundary_e1".to_string()), "{l:?}");
}

#[test]
fn raw_parameters_are_scaled() {
    let text = ok(&[
        "equilibria",
        "--lambda",
        "10",
        "--beta",
        "0.3",
        "--alpha",
        "15",
        "--raw",
        "--a",
        "2.1",
        "--k",
        "1",
        "--format",
        "json",
    ]);
    let doc: Document<EquilibriaReport> = serde_json::from_str(&text).unwrap();
    let p = doc.manifest.params.unwrap();
    assert!((p.beta - 0.63).abs() < 1e-15);
    assert!((p.alpha - 15.0 / 2.1).abs() < 1e-15);
    assert_eq!(doc.manifest.raw.unwrap().beta_raw, 0.3);
}

#[test]
fn csv_reals_round_trip_exactly() {
    let args = [
        "equilibria",
        "--lambda",
        "10",
        "--alpha",
        "15",
        "--beta",
        "0.09",
    ];
    let (h, rows) = csv_rows(&ok(&args));
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let doc: Document<EquilibriaReport> = serde_json::from_str(&ok(&json_args)).unwrap();
    let (x, y) = (column(&h, "x"), column(&h, "y"));
    for (row, e) in rows.iter().zip(&doc.data.equilibria) {
        assert_eq!(row[x].parse::<f64>().unwrap(), e.equilibrium.state.x);
        assert_eq!(row[y].parse::<f64>().unwrap(), e.equilibrium.state.y);
        let mantissa = row[x].split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }
}

#[test]
fn csv_output_file_gets_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("basin.csv");
    ok(&[
        "basin",
        "--lambda",
        "5",
        "--beta",
        "0.5",
        "--grid",
        "3",
        "--burn-in",
        "2000",
        "--window",
        "1000",
        "--tol",
        "loop_max_cv=0.4",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest: coophunt::Manifest = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("basin.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest.command, "basin");
    assert_eq!(
        manifest.settings["orbit.loop_max_cv"],
        coophunt::Setting::Real(0.4)
    );
    assert_eq!(
        manifest.settings["orbit.burn_in"],
        coophunt::Setting::Integer(2000)
    );
    assert!(Path::new(&out).exists());
}

fn bytes_of(args: &[&str], dir: &Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    let mut a = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    a.extend(["--out", &p]);
    ok(&a);
    std::fs::read(&path).unwrap()
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        &[
            "simulate",
            "--lambda",
            "5",
            "--beta",
            "0.5",
            "--alpha",
            "0.3",
            "--trials",
            "12",
            "--seed",
            "7",
            "--burn-in",
            "2000",
            "--window",
            "1000",
            "--format",
            "json",
        ][..],
        &[
            "sweep",
            "--lambda",
            "5",
            "--alpha",
            ONE_OVER_2_1,
            "--beta-min",
            "0.5",
            "--beta-max",
            "0.65",
            "--beta-steps",
            "6",
        ],
    ]
    .iter()
    .enumerate()
    {
        let a = bytes_of(args, dir.path(), &format!("a{i}"));
        let b = bytes_of(args, dir.path(), &format!("b{i}"));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "basin",
        "--lambda",
        "5",
        "--beta",
        "0.21",
        "--alpha",
        BISTABLE_ALPHA,
        "--grid",
        "5x4",
        "--format",
        "json",
    ];
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let mut four = base.to_vec();
    four.extend(["--threads", "4"]);
    assert_eq!(
        bytes_of(&one, dir.path(), "one.json"),
        bytes_of(&four, dir.path(), "four.json")
    );
}

#[test]
fn regime_table_rows_are_consistent() {
    let (h, rows) = csv_rows(&ok(&["regime-table", "--grid", "4"]));
    assert_eq!(rows.len(), 64);
    let c = column(&h, "consistent");
    assert!(rows.iter().all(|r| r[c] == "true"));
}

#[test]
fn simulate_writes_trajectory() {
    let (h, rows) = csv_rows(&ok(&[
        "simulate", "--lambda", "5", "--beta", "0.5", "--x0", "1", "--y0", "1", "--steps", "10",
    ]));
    assert_eq!(h, ["t", "x", "y"]);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn classify_single_state() {
    let (h, rows) = csv_rows(&ok(&[
        "classify", "--lambda", "5", "--beta", "0.5", "--x", "4", "--y", "0",
    ]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "kind")], "state");
    assert_eq!(rows[0][column(&h, "defect")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][column(&h, "stability")], "saddle");
}
