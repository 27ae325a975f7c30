use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coophunt::commands::{self, Basin, RegimeGrid, SimulateOutput, Sweep};
use coophunt::error::{CliError, EXIT_OK};
use coophunt::{render, Document, Format, Manifest, Table};
use coophunt_core::model::{self, RawParams};
use coophunt_core::sim::{self, BasinSpec, OrbitCriteria, SweepSpec};
use coophunt_core::{Params, State};
use serde::Serialize;

/// Steady states, stability, Neimark-Sacker analysis and orbit
/// classification for a predator-prey map with cooperative hunting.
#[derive(Parser, Debug)]
#[command(name = "coophunt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,

    /// Output file (stdout when absent). CSV output also writes PATH.manifest.json
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for grid and sweep commands (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady states with residuals, regime verdict and critical thresholds
    #[command(allow_negative_numbers = true)]
    Equilibria(ModelArgs),
    /// Tabulate y, h(y), f(y), w(y) on [0, y_c]
    #[command(allow_negative_numbers = true)]
    Isoclines {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Jacobian, eigenvalues and Jury conditions of the steady states or of one state
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, requires = "y")]
        x: Option<f64>,
        #[arg(long, requires = "x")]
        y: Option<f64>,
    },
    /// Neimark-Sacker point beta_d and the direction coefficient
    #[command(allow_negative_numbers = true)]
    Ns {
        #[command(flatten)]
        model: ReducedModelArgs,
        /// Upper end of the beta search (default 50/x_bar)
        #[arg(long)]
        beta_max: Option<f64>,
        /// Corroborate the direction by simulating on both sides of beta_d
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Classify long-run orbits over a range of beta
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        model: ReducedModelArgs,
        #[arg(long)]
        beta_min: f64,
        #[arg(long)]
        beta_max: f64,
        #[arg(long, default_value_t = 101)]
        beta_steps: usize,
        /// Fixed initial prey density (default: next to the interior state)
        #[arg(long, requires = "y0")]
        x0: Option<f64>,
        #[arg(long, requires = "x0")]
        y0: Option<f64>,
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Classify long-run orbits over a grid of initial states
    #[command(allow_negative_numbers = true)]
    Basin {
        #[command(flatten)]
        model: ModelArgs,
        /// NX or NXxNY
        #[arg(long, default_value = "41")]
        grid: String,
        /// LO,HI (default 0.01,x_bar)
        #[arg(long)]
        x_range: Option<String>,
        /// LO,HI
        #[arg(long, default_value = "0.01,1")]
        y_range: String,
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Iterate one orbit, or run a randomized persistence experiment with --trials
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, required_unless_present = "trials")]
        x0: Option<f64>,
        #[arg(long, required_unless_present = "trials")]
        y0: Option<f64>,
        /// Trajectory length written out
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Random initial states drawn from [1e-3, x_bar]^2
        #[arg(long, conflicts_with_all = ["x0", "y0"])]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Predicted and computed interior-state counts over a (lambda, beta, alpha) grid
    #[command(allow_negative_numbers = true)]
    RegimeTable {
        #[arg(long, default_value_t = 1.1)]
        lambda_min: f64,
        #[arg(long, default_value_t = 20.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 0.005)]
        beta_min: f64,
        #[arg(long, default_value_t = 0.5)]
        beta_max: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 20.0)]
        alpha_max: f64,
        /// Nodes per axis
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
}

#[derive(Args, Debug)]
struct Scaling {
    /// Treat --beta and --alpha (and beta ranges) as raw parameters
    #[arg(long, requires_all = ["a", "k"])]
    raw: bool,
    /// Searching efficiency (with --raw)
    #[arg(long, requires = "raw")]
    a: Option<f64>,
    /// Crowding coefficient (with --raw)
    #[arg(long, requires = "raw")]
    k: Option<f64>,
}

impl Scaling {
    fn scales(&self) -> Option<(f64, f64)> {
        self.raw
            .then(|| (self.a.unwrap_or(f64::NAN), self.k.unwrap_or(f64::NAN)))
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[command(flatten)]
    scaling: Scaling,
}

impl ModelArgs {
    fn resolve(&self) -> Result<(Params, Option<RawParams>), CliError> {
        match self.scaling.scales() {
            None => Ok((Params::new(self.lambda, self.beta, self.alpha)?, None)),
            Some((a, k)) => {
                let raw = RawParams {
                    lambda: self.lambda,
                    a,
                    k,
                    beta_raw: self.beta,
                    alpha_raw: self.alpha,
                };
                Ok((model::nondimensionalize(&raw)?, Some(raw)))
            }
        }
    }
}

/// Model flags for commands that scan or solve for beta.
#[derive(Args, Debug)]
struct ReducedModelArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[command(flatten)]
    scaling: Scaling,
}

impl ReducedModelArgs {
    /// `(λ, α, β-scale)`; the scale converts raw β values.
    fn resolve(&self, m: &mut Manifest) -> Result<(f64, f64, f64), CliError> {
        let (alpha, beta_scale) = match self.scaling.scales() {
            None => (self.alpha, 1.0),
            Some((a, k)) => {
                let raw = RawParams {
                    lambda: self.lambda,
                    a,
                    k,
                    beta_raw: 1.0,
                    alpha_raw: self.alpha,
                };
                raw.validate()?;
                m.set("raw.a", a)
                    .set("raw.k", k)
                    .set("raw.alpha", self.alpha);
                (self.alpha / a, a / k)
            }
        };
        Params::new(self.lambda, 1.0, alpha)?;
        m.set("lambda", self.lambda).set("alpha", alpha);
        Ok((self.lambda, alpha, beta_scale))
    }
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[arg(long, default_value_t = sim::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = sim::DEFAULT_WINDOW)]
    window: usize,
    /// Classifier threshold override KEY=VALUE; keys: boundary_tol,
    /// fixed_diameter, loop_min_diameter, loop_max_cv, loop_max_drift
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
}

impl OrbitArgs {
    fn criteria(&self) -> Result<OrbitCriteria, CliError> {
        let mut c = OrbitCriteria::default();
        for item in &self.tol {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol expects KEY=VALUE, got {item:?}")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--tol {key}: not a number: {value:?}")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!(
                    "--tol {key}: must be finite and > 0"
                )));
            }
            let slot = match key.trim() {
                "boundary_tol" => &mut c.boundary_tol,
                "fixed_diameter" => &mut c.fixed_diameter,
                "loop_min_diameter" => &mut c.loop_min_diameter,
                "loop_max_cv" => &mut c.loop_max_cv,
                "loop_max_drift" => &mut c.loop_max_drift,
                other => return Err(CliError::Usage(format!("unknown --tol key {other:?}"))),
            };
            *slot = v;
        }
        Ok(c)
    }

    fn record(&self, m: &mut Manifest) -> Result<OrbitCriteria, CliError> {
        let c = self.criteria()?;
        m.set_orbit(self.burn_in, self.window, &c);
        Ok(c)
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("{what} expects LO,HI, got {s:?}"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--grid expects N or NXxNY, got {s:?}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn with_model(m: &mut Manifest, p: Params, raw: Option<RawParams>) {
    m.params = Some(p);
    m.raw = raw;
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn emit<T: Serialize + Table>(cli: &Cli, doc: Document<T>) -> Result<(), CliError> {
    let bytes = render(&doc, cli.format)?;
    let manifest = || -> Result<Vec<u8>, CliError> {
        let mut m = serde_json::to_vec_pretty(&doc.manifest)?;
        m.push(b'\n');
        Ok(m)
    };
    match (&cli.out, cli.format) {
        (Some(path), Format::Csv) => {
            fs::write(path, bytes)?;
            fs::write(sidecar(path), manifest()?)?;
        }
        (Some(path), Format::Json) => fs::write(path, bytes)?,
        (None, Format::Csv) => {
            io::stdout().write_all(&bytes)?;
            io::stderr().write_all(&manifest()?)?;
        }
        (None, Format::Json) => io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Equilibria(model) => {
            let (p, raw) = model.resolve()?;
            let mut m = Manifest::new("equilibria");
            with_model(&mut m, p, raw);
            emit(cli, Document::new(m, commands::equilibria_report(&p)?))
        }
        Command::Isoclines { model, samples } => {
            let (p, raw) = model.resolve()?;
            let mut m = Manifest::new("isoclines");
            with_model(&mut m, p, raw);
            m.set("samples", *samples);
            emit(
                cli,
                Document::new(m, commands::isocline_table(&p, *samples)?),
            )
        }
        Command::Classify { model, x, y } => {
            let (p, raw) = model.resolve()?;
            let mut m = Manifest::new("classify");
            with_model(&mut m, p, raw);
            let state = x.zip(*y).map(|(x, y)| State::new(x, y));
            if let Some(s) = state {
                m.set("x", s.x).set("y", s.y);
            }
            emit(cli, Document::new(m, commands::classify_report(&p, state)?))
        }
        Command::Ns {
            model,
            beta_max,
            check,
            orbit,
        } => {
            let mut m = Manifest::new("ns");
            let (lambda, alpha, scale) = model.resolve(&mut m)?;
            let beta_max = beta_max.map(|b| b * scale);
            match beta_max {
                Some(b) => m.set("beta_max", b),
                None => m.set("beta_max", "50/x_bar"),
            };
            m.set("check", *check);
            let budget = if *check {
                orbit.record(&mut m)?;
                m.set("check.beta_offset", sim::DIRECTION_BETA_OFFSET)
                    .set("check.perturbation", sim::DIRECTION_PERTURBATION);
                Some((orbit.burn_in, orbit.window))
            } else {
                None
            };
            let out = commands::ns_output(lambda, alpha, beta_max, budget)?;
            m.params = Some(out.report.params);
            emit(cli, Document::new(m, out))
        }
        Command::Sweep {
            model,
            beta_min,
            beta_max,
            beta_steps,
            x0,
            y0,
            orbit,
        } => {
            let mut m = Manifest::new("sweep");
            let (lambda, alpha, scale) = model.resolve(&mut m)?;
            let criteria = orbit.record(&mut m)?;
            let policy = match x0.zip(*y0) {
                Some((x, y)) => sim::InitialPolicy::Fixed(State::new(x, y)),
                None => commands::default_sweep_policy(lambda),
            };
            let spec = SweepSpec {
                lambda,
                alpha,
                beta_min: beta_min * scale,
                beta_max: beta_max * scale,
                samples: *beta_steps,
                policy,
                burn_in: orbit.burn_in,
                window: orbit.window,
            };
            m.set("beta_min", spec.beta_min)
                .set("beta_max", spec.beta_max)
                .set("beta_steps", spec.samples)
                .set("initial_policy", format!("{policy:?}"));
            let rows = commands::sweep_parallel(&spec, &criteria)?;
            emit(cli, Document::new(m, Sweep { spec, rows }))
        }
        Command::Basin {
            model,
            grid,
            x_range,
            y_range,
            orbit,
        } => {
            let (p, raw) = model.resolve()?;
            let mut m = Manifest::new("basin");
            with_model(&mut m, p, raw);
            let criteria = orbit.record(&mut m)?;
            let (nx, ny) = parse_grid(grid)?;
            let x_range = match x_range {
                Some(s) => parse_pair(s, "--x-range")?,
                None => (0.01, p.x_bar().unwrap_or(1.0).max(0.02)),
            };
            let spec = BasinSpec {
                x_range,
                y_range: parse_pair(y_range, "--y-range")?,
                nx,
                ny,
                burn_in: orbit.burn_in,
                window: orbit.window,
            };
            m.set("grid.nx", nx)
                .set("grid.ny", ny)
                .set("x_range.lo", spec.x_range.0)
                .set("x_range.hi", spec.x_range.1)
                .set("y_range.lo", spec.y_range.0)
                .set("y_range.hi", spec.y_range.1);
            let g = commands::basin_parallel(&p, &spec, &criteria)?;
            emit(cli, Document::new(m, Basin(g)))
        }
        Command::Simulate {
            model,
            x0,
            y0,
            steps,
            trials,
            seed,
            orbit,
        } => {
            let (p, raw) = model.resolve()?;
            let mut m = Manifest::new("simulate");
            with_model(&mut m, p, raw);
            let criteria = orbit.record(&mut m)?;
            let out = match trials {
                Some(n) => {
                    m.seed = Some(*seed);
                    m.set("trials", *n);
                    SimulateOutput::Persistence(commands::persistence_parallel(
                        &p,
                        *n,
                        *seed,
                        orbit.burn_in,
                        orbit.window,
                        &criteria,
                    )?)
                }
                None => {
                    let s0 = State::new(x0.unwrap_or_default(), y0.unwrap_or_default());
                    m.set("x0", s0.x).set("y0", s0.y).set("steps", *steps);
                    SimulateOutput::Orbit(commands::simulate(
                        &p,
                        s0,
                        *steps,
                        orbit.burn_in,
                        orbit.window,
                        &criteria,
                    )?)
                }
            };
            emit(cli, Document::new(m, out))
        }
        Command::RegimeTable {
            lambda_min,
            lambda_max,
            beta_min,
            beta_max,
            alpha_min,
            alpha_max,
            grid,
        } => {
            let g = RegimeGrid {
                lambda_range: (*lambda_min, *lambda_max),
                beta_range: (*beta_min, *beta_max),
                alpha_range: (*alpha_min, *alpha_max),
                n: *grid,
            };
            let mut m = Manifest::new("regime-table");
            m.set("lambda_min", g.lambda_range.0)
                .set("lambda_max", g.lambda_range.1)
                .set("beta_min", g.beta_range.0)
                .set("beta_max", g.beta_range.1)
                .set("alpha_min", g.alpha_range.0)
                .set("alpha_max", g.alpha_range.1)
                .set("grid", g.n);
            emit(cli, Document::new(m, commands::regime_table(&g)?))
        }
    }
}

fn report(e: &CliError) -> ExitCode {
    let record = serde_json::json!({ "error": e.record() });
    eprintln!("{record}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => {
            let _ = e.print();
            return report(&CliError::Usage(e.kind().to_string()));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
