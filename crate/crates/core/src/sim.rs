//! Long-run orbit analysis.
//!
//! An orbit is iterated for a burn-in period and then summarized over an
//! analysis window. The label is decided by the first rule that fires:
//! the window stays near the origin, stays near `E1`, has a tiny diameter
//! (fixed point), or circles its centroid with stationary radius
//! (invariant loop). Anything else is [`Attractor::Unclassified`].

use alloc::vec::Vec;
use libm::sqrt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibria;
use crate::error::{Error, Result};
use crate::model::{self, Params, State};
use crate::ns::{Direction, NsDiagnostic, NsReport};
use crate::stability::{self, ClassifiedEquilibrium};

pub const DEFAULT_BURN_IN: usize = 20_000;
pub const DEFAULT_WINDOW: usize = 5_000;
pub const MIN_BURN_IN: usize = 1_000;
pub const MIN_WINDOW: usize = 1_000;
/// Tail liminfs above this count as persistent.
pub const PERSISTENCE_FLOOR: f64 = 1e-6;
/// Lower end of the box random initial conditions are drawn from.
pub const INITIAL_MIN: f64 = 1e-3;

/// Thresholds of the orbit classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitCriteria {
    /// Max-norm distance from `E0` or `E1` over the whole window.
    pub boundary_tol: f64,
    /// Window diameter below which the orbit is a fixed point.
    pub fixed_diameter: f64,
    /// Window diameter above which a loop may be reported.
    pub loop_min_diameter: f64,
    /// Largest coefficient of variation of the radius about the centroid.
    pub loop_max_cv: f64,
    /// Largest relative change of the mean radius between window halves.
    pub loop_max_drift: f64,
}

impl Default for OrbitCriteria {
    fn default() -> Self {
        OrbitCriteria {
            boundary_tol: 1e-6,
            fixed_diameter: 1e-7,
            loop_min_diameter: 1e-5,
            loop_max_cv: 0.5,
            loop_max_drift: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Attractor {
    FixedPoint { state: State },
    InvariantLoop { center: State, mean_radius: f64 },
    BoundaryE1,
    Origin,
    Unclassified,
}

impl Attractor {
    pub fn label(&self) -> AttractorLabel {
        match self {
            Attractor::FixedPoint { .. } => AttractorLabel::FixedPoint,
            Attractor::InvariantLoop { .. } => AttractorLabel::InvariantLoop,
            Attractor::BoundaryE1 => AttractorLabel::BoundaryE1,
            Attractor::Origin => AttractorLabel::Origin,
            Attractor::Unclassified => AttractorLabel::Unclassified,
        }
    }
}

/// Attractor kind without its data; used for grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AttractorLabel {
    Origin,
    BoundaryE1,
    FixedPoint,
    InvariantLoop,
    Unclassified,
}

impl AttractorLabel {
    pub const ALL: [AttractorLabel; 5] = [
        AttractorLabel::Origin,
        AttractorLabel::BoundaryE1,
        AttractorLabel::FixedPoint,
        AttractorLabel::InvariantLoop,
        AttractorLabel::Unclassified,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttractorLabel::Origin => "origin",
            AttractorLabel::BoundaryE1 => "boundary_e1",
            AttractorLabel::FixedPoint => "fixed_point",
            AttractorLabel::InvariantLoop => "invariant_loop",
            AttractorLabel::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitSummary {
    pub attractor: Attractor,
    pub tail_liminf_x: f64,
    pub tail_liminf_y: f64,
    pub tail_max_x: f64,
    pub tail_max_y: f64,
    /// Largest coordinate extent of the window.
    pub tail_diameter: f64,
    pub final_state: State,
    pub steps_used: usize,
}

/// [`classify_orbit_with`] using the default criteria.
pub fn classify_orbit(
    s0: State,
    p: &Params,
    burn_in: usize,
    window: usize,
) -> Result<OrbitSummary> {
    classify_orbit_with(s0, p, burn_in, window, &OrbitCriteria::default())
}

pub fn classify_orbit_with(
    s0: State,
    p: &Params,
    burn_in: usize,
    window: usize,
    criteria: &OrbitCriteria,
) -> Result<OrbitSummary> {
    p.validate()?;
    if burn_in < MIN_BURN_IN {
        return Err(Error::InvalidParameter {
            name: "burn_in",
            value: burn_in as f64,
            reason: "must be at least 1000",
        });
    }
    if window < MIN_WINDOW {
        return Err(Error::InvalidParameter {
            name: "window",
            value: window as f64,
            reason: "must be at least 1000",
        });
    }
    let mut s = model::step(s0, p)?;
    for i in 1..burn_in {
        s = advance(s, p, i)?;
    }
    let mut tail = Vec::with_capacity(window);
    for i in 0..window {
        s = advance(s, p, burn_in + i)?;
        tail.push(s);
    }
    Ok(summarize(&tail, p, criteria, burn_in + window))
}

#[inline]
fn advance(s: State, p: &Params, step: usize) -> Result<State> {
    let (x, y) = model::apply(s.x, s.y, p);
    if x.is_finite() && y.is_finite() {
        Ok(State::new(x, y))
    } else {
        Err(Error::Diverged { step: step + 1 })
    }
}

fn summarize(tail: &[State], p: &Params, c: &OrbitCriteria, steps_used: usize) -> OrbitSummary {
    let fold =
        |f: fn(f64, f64) -> f64, init: f64, g: fn(&State) -> f64| tail.iter().map(g).fold(init, f);
    let min_x = fold(f64::min, f64::INFINITY, |s| s.x);
    let min_y = fold(f64::min, f64::INFINITY, |s| s.y);
    let max_x = fold(f64::max, f64::NEG_INFINITY, |s| s.x);
    let max_y = fold(f64::max, f64::NEG_INFINITY, |s| s.y);
    let diameter = (max_x - min_x).max(max_y - min_y);
    let final_state = *tail.last().expect("window is nonempty");

    let within = |target: State| {
        tail.iter()
            .all(|s| s.distance_inf(&target) <= c.boundary_tol)
    };
    let attractor = if within(State::ORIGIN) {
        Attractor::Origin
    } else if p.boundary_e1().is_some_and(within) {
        Attractor::BoundaryE1
    } else if diameter < c.fixed_diameter {
        Attractor::FixedPoint { state: final_state }
    } else if diameter > c.loop_min_diameter {
        loop_attractor(tail, c).unwrap_or(Attractor::Unclassified)
    } else {
        Attractor::Unclassified
    };

    OrbitSummary {
        attractor,
        tail_liminf_x: min_x,
        tail_liminf_y: min_y,
        tail_max_x: max_x,
        tail_max_y: max_y,
        tail_diameter: diameter,
        final_state,
        steps_used,
    }
}

fn loop_attractor(tail: &[State], c: &OrbitCriteria) -> Option<Attractor> {
    let n = tail.len() as f64;
    let cx = tail.iter().map(|s| s.x).sum::<f64>() / n;
    let cy = tail.iter().map(|s| s.y).sum::<f64>() / n;
    let radius = |s: &State| sqrt((s.x - cx) * (s.x - cx) + (s.y - cy) * (s.y - cy));
    let mean = tail.iter().map(radius).sum::<f64>() / n;
    if !(mean > 0.0) {
        return None;
    }
    let var = tail
        .iter()
        .map(|s| (radius(s) - mean) * (radius(s) - mean))
        .sum::<f64>()
        / n;
    let cv = sqrt(var) / mean;
    let half = tail.len() / 2;
    let mean_of = |part: &[State]| part.iter().map(radius).sum::<f64>() / part.len() as f64;
    let drift = (mean_of(&tail[..half]) - mean_of(&tail[half..])).abs() / mean;
    (cv < c.loop_max_cv && drift < c.loop_max_drift).then_some(Attractor::InvariantLoop {
        center: State::new(cx, cy),
        mean_radius: mean,
    })
}

/// Outcome of a randomized persistence experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PersistenceReport {
    pub params: Params,
    pub seed: u64,
    pub trials: usize,
    /// `βx̄ > 1` with `λ > 1`.
    pub hypothesis_holds: bool,
    pub min_liminf_x: f64,
    pub min_liminf_y: f64,
    /// Both minima exceed [`PERSISTENCE_FLOOR`].
    pub persistent: bool,
    pub summaries: Vec<OrbitSummary>,
}

/// Random interior initial conditions in `[1e-3, x̄]²` (`[1e-3, 1]²` when
/// `λ ≤ 1`), drawn from a ChaCha8 stream seeded with `seed`.
pub fn random_initials(p: &Params, count: usize, seed: u64) -> Vec<State> {
    let hi = p.x_bar().filter(|&xb| xb > INITIAL_MIN).unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = rng.gen_range(INITIAL_MIN..=hi);
            let y = rng.gen_range(INITIAL_MIN..=hi);
            State::new(x, y)
        })
        .collect()
}

pub fn persistence_check(
    p: &Params,
    trials: usize,
    seed: u64,
    burn_in: usize,
    window: usize,
) -> Result<PersistenceReport> {
    persistence_check_with(p, trials, seed, burn_in, window, &OrbitCriteria::default())
}

pub fn persistence_check_with(
    p: &Params,
    trials: usize,
    seed: u64,
    burn_in: usize,
    window: usize,
    criteria: &OrbitCriteria,
) -> Result<PersistenceReport> {
    let summaries = random_initials(p, trials, seed)
        .into_iter()
        .map(|s0| classify_orbit_with(s0, p, burn_in, window, criteria))
        .collect::<Result<Vec<_>>>()?;
    Ok(persistence_report(p, seed, summaries))
}

/// Assemble a report from per-trial summaries in draw order.
pub fn persistence_report(
    p: &Params,
    seed: u64,
    summaries: Vec<OrbitSummary>,
) -> PersistenceReport {
    let min_x = summaries
        .iter()
        .map(|s| s.tail_liminf_x)
        .fold(f64::INFINITY, f64::min);
    let min_y = summaries
        .iter()
        .map(|s| s.tail_liminf_y)
        .fold(f64::INFINITY, f64::min);
    PersistenceReport {
        params: *p,
        seed,
        trials: summaries.len(),
        hypothesis_holds: stability::persistence_condition(p),
        min_liminf_x: min_x,
        min_liminf_y: min_y,
        persistent: min_x > PERSISTENCE_FLOOR && min_y > PERSISTENCE_FLOOR,
        summaries,
    }
}

/// Rectangle of initial conditions; `nx × ny` nodes including the corners.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasinSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub burn_in: usize,
    pub window: usize,
}

impl BasinSpec {
    pub fn validate(&self) -> Result<()> {
        let range_ok =
            |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi;
        if !range_ok(self.x_range) {
            return Err(Error::InvalidParameter {
                name: "x_range",
                value: self.x_range.0,
                reason: "need 0 <= lo < hi",
            });
        }
        if !range_ok(self.y_range) {
            return Err(Error::InvalidParameter {
                name: "y_range",
                value: self.y_range.0,
                reason: "need 0 <= lo < hi",
            });
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: self.nx.min(self.ny) as f64,
                reason: "need at least 2 nodes per axis",
            });
        }
        Ok(())
    }

    /// Initial conditions in row-major order: `y` rows, `x` within a row.
    pub fn cells(&self) -> Vec<State> {
        let node =
            |(lo, hi): (f64, f64), i: usize, n: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(State::new(
                    node(self.x_range, i, self.nx),
                    node(self.y_range, j, self.ny),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasinGrid {
    pub spec: BasinSpec,
    pub params: Params,
    /// Row-major, matching [`BasinSpec::cells`].
    pub labels: Vec<AttractorLabel>,
    pub summaries: Vec<OrbitSummary>,
}

impl BasinGrid {
    pub fn count(&self, label: AttractorLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn label_at(&self, i: usize, j: usize) -> AttractorLabel {
        self.labels[j * self.spec.nx + i]
    }
}

pub fn basin_scan(p: &Params, spec: &BasinSpec) -> Result<BasinGrid> {
    basin_scan_with(p, spec, &OrbitCriteria::default())
}

pub fn basin_scan_with(
    p: &Params,
    spec: &BasinSpec,
    criteria: &OrbitCriteria,
) -> Result<BasinGrid> {
    spec.validate()?;
    let summaries = spec
        .cells()
        .into_iter()
        .map(|s0| classify_orbit_with(s0, p, spec.burn_in, spec.window, criteria))
        .collect::<Result<Vec<_>>>()?;
    Ok(basin_grid(p, spec, summaries))
}

/// Assemble a grid from per-cell summaries in [`BasinSpec::cells`] order.
pub fn basin_grid(p: &Params, spec: &BasinSpec, summaries: Vec<OrbitSummary>) -> BasinGrid {
    BasinGrid {
        spec: *spec,
        params: *p,
        labels: summaries.iter().map(|s| s.attractor.label()).collect(),
        summaries,
    }
}

/// How a sweep picks the initial state at each β.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InitialPolicy {
    Fixed(State),
    /// Offset `(offset, offset)` from the interior steady state with the
    /// largest `y`; `fallback` when there is none.
    NearInterior {
        offset: f64,
        fallback: State,
    },
}

impl InitialPolicy {
    pub fn initial(&self, equilibria: &[ClassifiedEquilibrium]) -> State {
        match *self {
            InitialPolicy::Fixed(s) => s,
            InitialPolicy::NearInterior { offset, fallback } => equilibria
                .iter()
                .filter(|e| e.equilibrium.kind == equilibria::EquilibriumKind::Interior)
                .map(|e| e.equilibrium.state)
                .next_back()
                .map(|s| State::new((s.x + offset).max(0.0), (s.y + offset).max(0.0)))
                .unwrap_or(fallback),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepSpec {
    pub lambda: f64,
    pub alpha: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub samples: usize,
    pub policy: InitialPolicy,
    pub burn_in: usize,
    pub window: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min.is_finite() && self.beta_min > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta_min",
                value: self.beta_min,
                reason: "must be finite and > 0",
            });
        }
        if !(self.beta_max.is_finite() && self.beta_max > self.beta_min) {
            return Err(Error::InvalidParameter {
                name: "beta_max",
                value: self.beta_max,
                reason: "beta range is empty",
            });
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter {
                name: "samples",
                value: self.samples as f64,
                reason: "need at least 2 samples",
            });
        }
        Params::new(self.lambda, self.beta_min, self.alpha).map(|_| ())
    }

    /// β values in increasing order, endpoints included.
    pub fn betas(&self) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.beta_max
                } else {
                    self.beta_min + (self.beta_max - self.beta_min) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub beta: f64,
    pub equilibria: Vec<ClassifiedEquilibrium>,
    pub interior_count: usize,
    pub initial: State,
    pub orbit: OrbitSummary,
}

/// One row of a sweep; rows are independent of each other.
pub fn sweep_row(spec: &SweepSpec, beta: f64) -> Result<SweepRow> {
    sweep_row_with(spec, beta, &OrbitCriteria::default())
}

pub fn sweep_row_with(spec: &SweepSpec, beta: f64, criteria: &OrbitCriteria) -> Result<SweepRow> {
    let p = Params::new(spec.lambda, beta, spec.alpha)?;
    let equilibria = stability::analyze(&p)?;
    let interior_count = equilibria
        .iter()
        .filter(|e| e.equilibrium.kind == equilibria::EquilibriumKind::Interior)
        .count();
    let initial = spec.policy.initial(&equilibria);
    let orbit = classify_orbit_with(initial, &p, spec.burn_in, spec.window, criteria)?;
    Ok(SweepRow {
        beta,
        equilibria,
        interior_count,
        initial,
        orbit,
    })
}

pub fn beta_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    beta_sweep_with(spec, &OrbitCriteria::default())
}

pub fn beta_sweep_with(spec: &SweepSpec, criteria: &OrbitCriteria) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.betas()
        .into_iter()
        .map(|b| sweep_row_with(spec, b, criteria))
        .collect()
}

/// Simulations on both sides of `β_d` compared with the sign of `C*`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionCheck {
    pub beta_below: f64,
    pub beta_above: f64,
    pub below: OrbitSummary,
    pub above: OrbitSummary,
    /// Fixed point below and loop above.
    pub simulated_supercritical: bool,
    pub consistent: bool,
}

/// Relative β offset of the corroborating simulations.
pub const DIRECTION_BETA_OFFSET: f64 = 0.02;
/// Perturbation of `E*` used as the initial state.
pub const DIRECTION_PERTURBATION: f64 = 1e-2;

/// Simulate at `β_d(1 ± 0.02)` from `E* + (0.01, 0.01)` and compare with
/// the reported direction. A contradiction adds
/// [`NsDiagnostic::ConventionMismatch`] to `report`; the sign of `C*` is
/// left as computed.
pub fn corroborate_direction(
    report: &mut NsReport,
    burn_in: usize,
    window: usize,
) -> Result<DirectionCheck> {
    let run = |beta: f64| -> Result<OrbitSummary> {
        let p = report.params.with_beta(beta);
        let y = stability::unique_interior_y(&p)?;
        let e = State::new(equilibria::isocline_f(y, &p), y);
        let s0 = State::new(e.x + DIRECTION_PERTURBATION, e.y + DIRECTION_PERTURBATION);
        classify_orbit(s0, &p, burn_in, window)
    };
    let beta_below = report.beta_d * (1.0 - DIRECTION_BETA_OFFSET);
    let beta_above = report.beta_d * (1.0 + DIRECTION_BETA_OFFSET);
    let below = run(beta_below)?;
    let above = run(beta_above)?;
    let simulated_supercritical = matches!(below.attractor, Attractor::FixedPoint { .. })
        && matches!(above.attractor, Attractor::InvariantLoop { .. });
    let consistent = match report.direction {
        Direction::Supercritical => simulated_supercritical,
        Direction::Subcritical => !simulated_supercritical,
        Direction::Inconclusive => true,
    };
    if !consistent
        && !report
            .diagnostics
            .contains(&NsDiagnostic::ConventionMismatch)
    {
        report.diagnostics.push(NsDiagnostic::ConventionMismatch);
    }
    Ok(DirectionCheck {
        beta_below,
        beta_above,
        below,
        above,
        simulated_supercritical,
        consistent,
    })
}
