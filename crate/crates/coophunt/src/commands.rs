//! Command implementations. Each returns a serializable data section that
//! also implements [`Table`]; parallel drivers return exactly what the
//! sequential drivers in `coophunt_core::sim` return.

use coophunt_core::equilibria::{self, CountBound, EquilibriumKind, RegimeReport};
use coophunt_core::ns::{self, NsReport};
use coophunt_core::sim::{
    self, Attractor, BasinGrid, BasinSpec, DirectionCheck, OrbitCriteria, OrbitSummary,
    PersistenceReport, SweepRow, SweepSpec,
};
use coophunt_core::stability::{
    self, ClassifiedEquilibrium, CriticalSet, Jacobian2, StabilityClass,
};
use coophunt_core::{model, Error as CoreError, Params, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::table::{real, Table};

type CoreResult<T> = Result<T, CoreError>;

/// Collect in input order and report the first failure by position.
fn in_order<T>(results: Vec<CoreResult<T>>) -> CoreResult<Vec<T>> {
    results.into_iter().collect()
}

fn kind_str(k: EquilibriumKind) -> &'static str {
    match k {
        EquilibriumKind::Origin => "origin",
        EquilibriumKind::BoundaryE1 => "boundary_e1",
        EquilibriumKind::Interior => "interior",
    }
}

fn tag_str(c: &StabilityClass) -> &'static str {
    match c.tag {
        stability::StabilityTag::Sink => "sink",
        stability::StabilityTag::Source => "source",
        stability::StabilityTag::Saddle => "saddle",
        stability::StabilityTag::NonHyperbolic => "nonhyperbolic",
    }
}

fn bound_str(b: CountBound) -> String {
    match b {
        CountBound::Exactly(n) => n.to_string(),
        CountBound::AtMostTwo => "<=2".to_string(),
        CountBound::Unclassified => "unclassified".to_string(),
    }
}

fn attractor_cells(a: &Attractor) -> [String; 3] {
    match *a {
        Attractor::FixedPoint { state } => [real(state.x), real(state.y), String::new()],
        Attractor::InvariantLoop {
            center,
            mean_radius,
        } => [real(center.x), real(center.y), real(mean_radius)],
        _ => Default::default(),
    }
}

// ---------------------------------------------------------------- equilibria

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriaReport {
    pub params: Params,
    pub equilibria: Vec<ClassifiedEquilibrium>,
    pub interior_count: usize,
    /// Absent when `λ ≤ 1`.
    pub regime: Option<RegimeReport>,
    pub critical: Option<CriticalSet>,
    /// `λ ≤ 1`: every orbit tends to the origin.
    pub origin_globally_stable: bool,
    /// Sufficient condition for predator extinction with prey at `x̄`.
    pub extinction_condition: Option<bool>,
    pub persistence_condition: bool,
}

pub fn equilibria_report(p: &Params) -> Result<EquilibriaReport, CliError> {
    let equilibria = stability::analyze(p)?;
    let interior_count = equilibria
        .iter()
        .filter(|e| e.equilibrium.kind == EquilibriumKind::Interior)
        .count();
    let above = p.lambda > 1.0;
    Ok(EquilibriaReport {
        params: *p,
        interior_count,
        regime: above.then(|| equilibria::regime(p)).transpose()?,
        critical: above.then(|| stability::critical_set(p)).transpose()?,
        origin_globally_stable: !above,
        extinction_condition: above
            .then(|| stability::global_extinction_condition(p))
            .transpose()?,
        persistence_condition: stability::persistence_condition(p),
        equilibria,
    })
}

impl Table for EquilibriaReport {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "kind",
            "x",
            "y",
            "residual",
            "multiplicity",
            "stability",
            "modulus_1",
            "modulus_2",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.equilibria
            .iter()
            .map(|e| {
                let m = e.jacobian.moduli();
                vec![
                    kind_str(e.equilibrium.kind).to_string(),
                    real(e.equilibrium.state.x),
                    real(e.equilibrium.state.y),
                    real(e.equilibrium.residual),
                    e.equilibrium.multiplicity.to_string(),
                    tag_str(&e.class).to_string(),
                    real(m[0]),
                    real(m[1]),
                ]
            })
            .collect()
    }
}

// ---------------------------------------------------------------- isoclines

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoclineRow {
    pub y: f64,
    pub h: f64,
    pub f: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoclineTable {
    pub params: Params,
    pub y_c: f64,
    pub rows: Vec<IsoclineRow>,
}

/// `(y, h, f, w)` on `samples` equispaced nodes of `[0, y_c]`.
pub fn isocline_table(p: &Params, samples: usize) -> Result<IsoclineTable, CliError> {
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let y_c = equilibria::y_c(p)?;
    let rows = (0..samples)
        .map(|i| {
            let y = if i + 1 == samples {
                y_c
            } else {
                y_c * i as f64 / (samples - 1) as f64
            };
            IsoclineRow {
                y,
                h: equilibria::isocline_h(y, p),
                f: equilibria::isocline_f(y, p),
                w: equilibria::w(y, p),
            }
        })
        .collect();
    Ok(IsoclineTable {
        params: *p,
        y_c,
        rows,
    })
}

impl Table for IsoclineTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["y", "h", "f", "w"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![real(r.y), real(r.h), real(r.f), real(r.w)])
            .collect()
    }
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedState {
    pub state: State,
    /// Set when the state is one of the computed steady states.
    pub kind: Option<EquilibriumKind>,
    /// `|step(s) - s|∞`.
    pub defect: f64,
    pub jacobian: Jacobian2,
    pub class: StabilityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub params: Params,
    pub states: Vec<ClassifiedState>,
}

/// Jury classification of `state`, or of every steady state when `None`.
pub fn classify_report(p: &Params, state: Option<State>) -> Result<ClassifyReport, CliError> {
    p.validate()?;
    let states = match state {
        Some(s) => {
            if !(s.is_finite() && s.x >= 0.0 && s.y >= 0.0) {
                return Err(CliError::Usage(
                    "state must be finite and nonnegative".into(),
                ));
            }
            let j = stability::jacobian(s, p);
            vec![ClassifiedState {
                state: s,
                kind: None,
                defect: equilibria::fixed_point_defect(s, p),
                jacobian: j,
                class: stability::classify_jacobian(&j),
            }]
        }
        None => stability::analyze(p)?
            .into_iter()
            .map(|e| ClassifiedState {
                state: e.equilibrium.state,
                kind: Some(e.equilibrium.kind),
                defect: equilibria::fixed_point_defect(e.equilibrium.state, p),
                jacobian: e.jacobian,
                class: e.class,
            })
            .collect(),
    };
    Ok(ClassifyReport { params: *p, states })
}

impl Table for ClassifyReport {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "kind",
            "x",
            "y",
            "defect",
            "a11",
            "a12",
            "a21",
            "a22",
            "det",
            "trace",
            "ev1_re",
            "ev1_im",
            "ev2_re",
            "ev2_im",
            "modulus_1",
            "modulus_2",
            "jury_1",
            "jury_2",
            "jury_3",
            "stability",
            "marginal",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.states
            .iter()
            .map(|s| {
                let j = &s.jacobian;
                let m = j.moduli();
                vec![
                    s.kind.map(kind_str).unwrap_or("state").to_string(),
                    real(s.state.x),
                    real(s.state.y),
                    real(s.defect),
                    real(j.a11),
                    real(j.a12),
                    real(j.a21),
                    real(j.a22),
                    real(j.det),
                    real(j.tr),
                    real(j.eigenvalues[0].re),
                    real(j.eigenvalues[0].im),
                    real(j.eigenvalues[1].re),
                    real(j.eigenvalues[1].im),
                    real(m[0]),
                    real(m[1]),
                    s.class.jury[0].to_string(),
                    s.class.jury[1].to_string(),
                    s.class.jury[2].to_string(),
                    tag_str(&s.class).to_string(),
                    s.class.marginal.to_string(),
                ]
            })
            .collect()
    }
}

// ---------------------------------------------------------------- ns

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsOutput {
    pub report: NsReport,
    /// Simulations on both sides of `β_d`, when requested.
    pub check: Option<DirectionCheck>,
}

/// Locate `β_d` for `(λ, α)` and evaluate the full coefficient chain.
/// Regime failures become [`CliError::NoNsPoint`].
pub fn ns_output(
    lambda: f64,
    alpha: f64,
    beta_max: Option<f64>,
    check: Option<(usize, usize)>,
) -> Result<NsOutput, CliError> {
    Params::new(lambda, 1.0, alpha)?;
    let mut report = ns::neimark_sacker(lambda, alpha, beta_max).map_err(|e| {
        if e.is_regime() {
            CliError::NoNsPoint(e.to_string())
        } else {
            CliError::Core(e)
        }
    })?;
    let check = check
        .map(|(burn_in, window)| sim::corroborate_direction(&mut report, burn_in, window))
        .transpose()?;
    Ok(NsOutput { report, check })
}

impl Table for NsOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["quantity", "value"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let r = &self.report;
        let mut rows: Vec<(String, String)> = vec![
            ("lambda".into(), real(r.params.lambda)),
            ("alpha".into(), real(r.params.alpha)),
            ("beta_d".into(), real(r.beta_d)),
            ("x_star".into(), real(r.equilibrium.x)),
            ("y_star".into(), real(r.equilibrium.y)),
            ("a11".into(), real(r.jacobian.a11)),
            ("a12".into(), real(r.jacobian.a12)),
            ("a21".into(), real(r.jacobian.a21)),
            ("a22".into(), real(r.jacobian.a22)),
            ("mu".into(), real(r.mu)),
            ("omega".into(), real(r.omega)),
            ("transversality".into(), real(r.transversality)),
        ];
        let family = |rows: &mut Vec<(String, String)>, name: &str, v: &[f64]| {
            for (i, x) in v.iter().enumerate() {
                rows.push((format!("{name}{}", i + 1), real(*x)));
            }
        };
        family(&mut rows, "b", &r.b);
        family(&mut rows, "c", &r.c);
        family(&mut rows, "k", &r.k);
        family(&mut rows, "l", &r.l);
        for (name, z) in [
            ("xi20", r.xi20),
            ("xi11", r.xi11),
            ("xi02", r.xi02),
            ("xi21", r.xi21),
        ] {
            rows.push((format!("{name}_re"), real(z.re)));
            rows.push((format!("{name}_im"), real(z.im)));
        }
        rows.push(("c_star".into(), real(r.c_star)));
        rows.push((
            "direction".into(),
            format!("{:?}", r.direction).to_lowercase(),
        ));
        rows.push(("resonance_clear".into(), r.resonance_clear.to_string()));
        for d in &r.diagnostics {
            rows.push(("diagnostic".into(), format!("{d:?}")));
        }
        if let Some(c) = &self.check {
            rows.push(("check_beta_below".into(), real(c.beta_below)));
            rows.push((
                "check_label_below".into(),
                c.below.attractor.label().as_str().into(),
            ));
            rows.push(("check_beta_above".into(), real(c.beta_above)));
            rows.push((
                "check_label_above".into(),
                c.above.attractor.label().as_str().into(),
            ));
            rows.push(("check_consistent".into(), c.consistent.to_string()));
        }
        rows.into_iter().map(|(k, v)| vec![k, v]).collect()
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

/// Parallel [`sim::beta_sweep_with`].
pub fn sweep_parallel(spec: &SweepSpec, criteria: &OrbitCriteria) -> CoreResult<Vec<SweepRow>> {
    spec.validate()?;
    in_order(
        spec.betas()
            .par_iter()
            .map(|&b| sim::sweep_row_with(spec, b, criteria))
            .collect(),
    )
}

fn summary_cells(s: &OrbitSummary) -> Vec<String> {
    let [ax, ay, radius] = attractor_cells(&s.attractor);
    vec![
        s.attractor.label().as_str().to_string(),
        ax,
        ay,
        radius,
        real(s.final_state.x),
        real(s.final_state.y),
        real(s.tail_liminf_x),
        real(s.tail_max_x),
        real(s.tail_liminf_y),
        real(s.tail_max_y),
        real(s.tail_diameter),
    ]
}

const SUMMARY_COLUMNS: [&str; 11] = [
    "label",
    "attractor_x",
    "attractor_y",
    "loop_radius",
    "final_x",
    "final_y",
    "tail_min_x",
    "tail_max_x",
    "tail_min_y",
    "tail_max_y",
    "tail_diameter",
];

impl Table for Sweep {
    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["beta", "interior_count", "initial_x", "initial_y"];
        h.extend(SUMMARY_COLUMNS);
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    real(r.beta),
                    r.interior_count.to_string(),
                    real(r.initial.x),
                    real(r.initial.y),
                ];
                row.extend(summary_cells(&r.orbit));
                row
            })
            .collect()
    }
}

// ---------------------------------------------------------------- basin

/// Parallel [`sim::basin_scan_with`].
pub fn basin_parallel(
    p: &Params,
    spec: &BasinSpec,
    criteria: &OrbitCriteria,
) -> CoreResult<BasinGrid> {
    spec.validate()?;
    let summaries = in_order(
        spec.cells()
            .par_iter()
            .map(|&s0| sim::classify_orbit_with(s0, p, spec.burn_in, spec.window, criteria))
            .collect(),
    )?;
    Ok(sim::basin_grid(p, spec, summaries))
}

/// Newtype so the core grid can implement [`Table`] here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Basin(pub BasinGrid);

impl Table for Basin {
    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["i", "j", "x0", "y0"];
        h.extend(SUMMARY_COLUMNS);
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let g = &self.0;
        g.spec
            .cells()
            .iter()
            .zip(&g.summaries)
            .enumerate()
            .map(|(n, (s0, s))| {
                let mut row = vec![
                    (n % g.spec.nx).to_string(),
                    (n / g.spec.nx).to_string(),
                    real(s0.x),
                    real(s0.y),
                ];
                row.extend(summary_cells(s));
                row
            })
            .collect()
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub params: Params,
    pub initial: State,
    /// The first `steps + 1` states, starting with `initial`.
    pub trajectory: Vec<State>,
    /// Long-run classification from `initial`.
    pub summary: OrbitSummary,
}

pub fn simulate(
    p: &Params,
    initial: State,
    steps: usize,
    burn_in: usize,
    window: usize,
    criteria: &OrbitCriteria,
) -> Result<Simulation, CliError> {
    let trajectory = model::orbit(initial, p, steps)?;
    let summary = sim::classify_orbit_with(initial, p, burn_in, window, criteria)?;
    Ok(Simulation {
        params: *p,
        initial,
        trajectory,
        summary,
    })
}

impl Table for Simulation {
    fn header(&self) -> Vec<&'static str> {
        vec!["t", "x", "y"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.trajectory
            .iter()
            .enumerate()
            .map(|(t, s)| vec![t.to_string(), real(s.x), real(s.y)])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persistence {
    pub initials: Vec<State>,
    pub report: PersistenceReport,
}

/// Parallel [`sim::persistence_check_with`].
pub fn persistence_parallel(
    p: &Params,
    trials: usize,
    seed: u64,
    burn_in: usize,
    window: usize,
    criteria: &OrbitCriteria,
) -> CoreResult<Persistence> {
    let initials = sim::random_initials(p, trials, seed);
    let summaries = in_order(
        initials
            .par_iter()
            .map(|&s0| sim::classify_orbit_with(s0, p, burn_in, window, criteria))
            .collect(),
    )?;
    Ok(Persistence {
        initials,
        report: sim::persistence_report(p, seed, summaries),
    })
}

impl Table for Persistence {
    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["trial", "x0", "y0"];
        h.extend(SUMMARY_COLUMNS);
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.initials
            .iter()
            .zip(&self.report.summaries)
            .enumerate()
            .map(|(n, (s0, s))| {
                let mut row = vec![n.to_string(), real(s0.x), real(s0.y)];
                row.extend(summary_cells(s));
                row
            })
            .collect()
    }
}

/// Either a single orbit or a randomized persistence run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SimulateOutput {
    Orbit(Simulation),
    Persistence(Persistence),
}

impl Table for SimulateOutput {
    fn header(&self) -> Vec<&'static str> {
        match self {
            SimulateOutput::Orbit(s) => s.header(),
            SimulateOutput::Persistence(s) => s.header(),
        }
    }

    fn rows(&self) -> Vec<Vec<String>> {
        match self {
            SimulateOutput::Orbit(s) => s.rows(),
            SimulateOutput::Persistence(s) => s.rows(),
        }
    }
}

// ---------------------------------------------------------------- regime-table

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeGrid {
    pub lambda_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub alpha_range: (f64, f64),
    /// Nodes per axis, endpoints included.
    pub n: usize,
}

impl RegimeGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 2 {
            return Err(CliError::Usage("--grid must be at least 2".into()));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.lambda_range) || self.lambda_range.0 <= 1.0 {
            return Err(CliError::Usage(
                "lambda range must satisfy 1 < lo < hi".into(),
            ));
        }
        if !ok(self.beta_range) || self.beta_range.0 <= 0.0 {
            return Err(CliError::Usage(
                "beta range must satisfy 0 < lo < hi".into(),
            ));
        }
        if !ok(self.alpha_range) || self.alpha_range.0 < 0.0 {
            return Err(CliError::Usage(
                "alpha range must satisfy 0 <= lo < hi".into(),
            ));
        }
        Ok(())
    }

    fn axis(&self, (lo, hi): (f64, f64), i: usize) -> f64 {
        if i + 1 == self.n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (self.n - 1) as f64
        }
    }

    /// Cells with `α` fastest, then `β`, then `λ`.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.n.pow(3));
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    out.push((
                        self.axis(self.lambda_range, i),
                        self.axis(self.beta_range, j),
                        self.axis(self.alpha_range, k),
                    ));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub params: Params,
    pub regime: RegimeReport,
    pub interior_count: usize,
    /// The computed count satisfies the predicted bound.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTable {
    pub grid: RegimeGrid,
    pub rows: Vec<RegimeRow>,
}

fn regime_row((lambda, beta, alpha): (f64, f64, f64)) -> CoreResult<RegimeRow> {
    let p = Params::new(lambda, beta, alpha)?;
    let regime = equilibria::regime(&p)?;
    let interior_count = equilibria::interior_equilibria(&p)?.len();
    Ok(RegimeRow {
        params: p,
        regime,
        interior_count,
        consistent: regime.predicted_count_bound.admits(interior_count),
    })
}

pub fn regime_table(grid: &RegimeGrid) -> Result<RegimeTable, CliError> {
    grid.validate()?;
    let rows = in_order(grid.cells().into_par_iter().map(regime_row).collect())?;
    Ok(RegimeTable { grid: *grid, rows })
}

impl Table for RegimeTable {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "lambda",
            "beta",
            "alpha",
            "x_bar",
            "beta_x_bar",
            "cooperation_excess",
            "predicted_count",
            "interior_count",
            "consistent",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    real(r.params.lambda),
                    real(r.params.beta),
                    real(r.params.alpha),
                    real(r.regime.x_bar),
                    real(r.regime.maximal_reproductive_number),
                    real(r.regime.cooperation_excess),
                    bound_str(r.regime.predicted_count_bound),
                    r.interior_count.to_string(),
                    r.consistent.to_string(),
                ]
            })
            .collect()
    }
}

/// Used by sweeps when no initial state is given: offset from the largest
/// interior state, else halfway to `x̄` with a small predator population.
pub fn default_sweep_policy(lambda: f64) -> sim::InitialPolicy {
    sim::InitialPolicy::NearInterior {
        offset: 1e-2,
        fallback: State::new((0.5 * (lambda - 1.0)).max(0.1), 0.1),
    }
}
