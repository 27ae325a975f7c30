//! Steady states via isocline geometry.
//!
//! Interior steady states are the intersections of the predator isocline
//! `x = h(y)` with the prey isocline `x = f(y)` on `0 < y < y_c`. Eliminating
//! `x` gives the scalar problem `w(y) = y` with
//! `w(y) = β (λ e^{-◊} - 1)(1 - e^{-◊})`, which is what the solver works on.

use alloc::vec::Vec;
use libm::{exp, expm1, log, sqrt};

use crate::error::{Error, Result};
use crate::model::{self, diamond, Params, State};
use crate::roots;

/// Grid size used to bracket roots of `w(y) - y`.
pub const SCAN_POINTS: usize = 4096;
/// Roots closer than this to `0` or `y_c` are boundary artifacts.
pub const BOUNDARY_GUARD: f64 = 1e-8;
/// Final bracket width of the bisection stage.
pub const BISECTION_WIDTH: f64 = 1e-13;
/// A grid extremum of `w(y) - y` this close to zero is a double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-10;
/// Half-width of the band around `βx̄ = 1` treated as the boundary case.
pub const BOUNDARY_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EquilibriumKind {
    /// Extinction state `E0 = (0, 0)`.
    Origin,
    /// Predator-free state `E1 = (λ - 1, 0)`.
    BoundaryE1,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Equilibrium {
    pub state: State,
    pub kind: EquilibriumKind,
    /// `max(|h(y) - f(y)|, |step(s) - s|∞)`; only the fixed-point defect for
    /// boundary states.
    pub residual: f64,
    /// 2 for a tangential (double) intersection, otherwise 1.
    pub multiplicity: u8,
}

/// Values of `W(y) = (λe^{-◊} - 1)(1 - e^{-◊})` and its first two
/// derivatives. `w = β·W` does not otherwise depend on β.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WShape {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

pub(crate) fn w_shape(y: f64, lambda: f64, alpha: f64) -> WShape {
    let d = diamond(y, alpha);
    let psi = exp(-d);
    let q = -expm1(-d);
    let dd = 1.0 + 2.0 * alpha * y;
    let spread = 1.0 + lambda - 2.0 * lambda * psi;
    WShape {
        value: (lambda * psi - 1.0) * q,
        slope: -dd * psi * spread,
        curvature: -psi * (2.0 * alpha - dd * dd) * spread - 2.0 * lambda * dd * dd * psi * psi,
    }
}

/// Predator isocline `h(y) = y / (β(1 - e^{-◊}))`, with `h(0) = 1/β`.
pub fn isocline_h(y: f64, p: &Params) -> f64 {
    if y == 0.0 {
        return 1.0 / p.beta;
    }
    y / (p.beta * -expm1(-diamond(y, p.alpha)))
}

/// `h'(y)`, with the limit `(1 - 2α)/(2β)` at zero.
pub fn isocline_h_slope(y: f64, p: &Params) -> f64 {
    if y == 0.0 {
        return (1.0 - 2.0 * p.alpha) / (2.0 * p.beta);
    }
    let d = diamond(y, p.alpha);
    let psi = exp(-d);
    let q = -expm1(-d);
    (q - y * psi * (1.0 + 2.0 * p.alpha * y)) / (p.beta * q * q)
}

/// Prey isocline `f(y) = λe^{-◊} - 1`.
pub fn isocline_f(y: f64, p: &Params) -> f64 {
    p.lambda * exp(-diamond(y, p.alpha)) - 1.0
}

pub fn isocline_f_slope(y: f64, p: &Params) -> f64 {
    -p.lambda * exp(-diamond(y, p.alpha)) * (1.0 + 2.0 * p.alpha * y)
}

/// Predator density at which the prey isocline reaches zero,
/// i.e. the positive root of `y(1 + αy) = ln λ`.
pub fn y_c(p: &Params) -> Result<f64> {
    p.require_lambda_above_one()?;
    Ok(y_c_raw(p.lambda, p.alpha))
}

pub(crate) fn y_c_raw(lambda: f64, alpha: f64) -> f64 {
    // rationalized form of (-1 + sqrt(1 + 4α ln λ)) / (2α); exact at α = 0
    let ln = log(lambda);
    2.0 * ln / (1.0 + sqrt(1.0 + 4.0 * alpha * ln))
}

/// `w(y) = β(λe^{-◊} - 1)(1 - e^{-◊})`; interior states solve `w(y) = y`.
pub fn w(y: f64, p: &Params) -> f64 {
    p.beta * w_shape(y, p.lambda, p.alpha).value
}

pub fn w_slope(y: f64, p: &Params) -> f64 {
    p.beta * w_shape(y, p.lambda, p.alpha).slope
}

/// Fixed-point defect `|step(s) - s|∞`.
pub fn fixed_point_defect(s: State, p: &Params) -> f64 {
    let (x, y) = model::apply(s.x, s.y, p);
    (x - s.x).abs().max((y - s.y).abs())
}

fn interior_residual(s: State, p: &Params) -> f64 {
    let iso = (isocline_h(s.y, p) - isocline_f(s.y, p)).abs();
    iso.max(fixed_point_defect(s, p))
}

/// `E0` always, plus `E1` when `λ > 1`.
pub fn boundary_equilibria(p: &Params) -> Vec<Equilibrium> {
    let mut out = Vec::with_capacity(2);
    out.push(Equilibrium {
        state: State::ORIGIN,
        kind: EquilibriumKind::Origin,
        residual: fixed_point_defect(State::ORIGIN, p),
        multiplicity: 1,
    });
    if let Some(e1) = p.boundary_e1() {
        out.push(Equilibrium {
            state: e1,
            kind: EquilibriumKind::BoundaryE1,
            residual: fixed_point_defect(e1, p),
            multiplicity: 1,
        });
    }
    out
}

/// Every steady state: boundary ones first, then interior ones sorted by `y`.
pub fn all_equilibria(p: &Params) -> Result<Vec<Equilibrium>> {
    p.validate()?;
    let mut out = boundary_equilibria(p);
    if p.lambda > 1.0 {
        out.extend(interior_equilibria(p)?);
    }
    Ok(out)
}

/// Scan nodes over `(0, y_c)`: a uniform grid whose end nodes are pulled in
/// to the boundary guard.
pub(crate) fn scan_nodes(yc: f64, n: usize) -> (Vec<f64>, f64) {
    let guard = BOUNDARY_GUARD.min(0.25 * yc / n as f64);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(guard);
    for i in 1..n {
        nodes.push(yc * i as f64 / n as f64);
    }
    nodes.push(yc - guard);
    (nodes, guard)
}

/// All interior steady states, sorted by `y`.
///
/// Brackets sign changes of `w(y) - y` on a [`SCAN_POINTS`] grid, bisects to
/// [`BISECTION_WIDTH`] and takes one Newton step. Grid extrema of `w(y) - y`
/// that do not change sign are refined: a touch within [`DOUBLE_ROOT_TOL`]
/// becomes a single entry with multiplicity 2, a hidden crossing pair
/// becomes two simple roots.
pub fn interior_equilibria(p: &Params) -> Result<Vec<Equilibrium>> {
    p.require_lambda_above_one()?;
    let yc = y_c_raw(p.lambda, p.alpha);
    let g = |y: f64| w(y, p) - y;
    let dg = |y: f64| w_slope(y, p) - 1.0;

    let (nodes, guard) = scan_nodes(yc, SCAN_POINTS);
    let values: Vec<f64> = nodes.iter().map(|&y| g(y)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "isocline scan",
        });
    }

    let mut roots: Vec<(f64, u8)> = Vec::new();
    for i in roots::sign_changes(&values) {
        roots.push((polish(&g, &dg, nodes[i], nodes[i + 1])?, 1));
    }

    for i in 1..values.len() - 1 {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let same_sign = (a > 0.0 && b > 0.0 && c > 0.0) || (a < 0.0 && b < 0.0 && c < 0.0);
        if !same_sign || b.abs() > a.abs() || b.abs() > c.abs() {
            continue;
        }
        let (lo, hi) = (nodes[i - 1], nodes[i + 1]);
        let (slo, shi) = (dg(lo), dg(hi));
        if !(slo * shi < 0.0) {
            continue;
        }
        let ext = roots::bisect(dg, lo, hi, BISECTION_WIDTH, 200)?;
        let gext = g(ext);
        if gext.signum() != b.signum() && gext != 0.0 {
            roots.push((polish(&g, &dg, lo, ext)?, 1));
            roots.push((polish(&g, &dg, ext, hi)?, 1));
        } else if gext.abs() < DOUBLE_ROOT_TOL {
            roots.push((ext, 2));
        }
    }

    let mut out: Vec<Equilibrium> = roots
        .into_iter()
        .filter(|&(y, _)| y > guard && y < yc - guard)
        .map(|(y, multiplicity)| {
            let state = State::new(isocline_f(y, p), y);
            Equilibrium {
                state,
                kind: EquilibriumKind::Interior,
                residual: interior_residual(state, p),
                multiplicity,
            }
        })
        .collect();
    out.sort_by(|a, b| a.state.y.total_cmp(&b.state.y));
    Ok(out)
}

fn polish<G, D>(g: &G, dg: &D, lo: f64, hi: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let y = roots::bisect(g, lo, hi, BISECTION_WIDTH, 400)?;
    let gy = g(y);
    let slope = dg(y);
    if slope != 0.0 && gy != 0.0 {
        let cand = y - gy / slope;
        if cand > lo && cand < hi && g(cand).abs() <= gy.abs() {
            return Ok(cand);
        }
    }
    Ok(y)
}

/// Interior-state count predicted by the existence table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CountBound {
    Exactly(u8),
    AtMostTwo,
    /// `βx̄ = 1` with `α = 0`, which the existence results leave open.
    Unclassified,
}

impl CountBound {
    pub fn admits(&self, count: usize) -> bool {
        match *self {
            CountBound::Exactly(n) => count == n as usize,
            CountBound::AtMostTwo => count <= 2,
            CountBound::Unclassified => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeReport {
    pub x_bar: f64,
    /// `βx̄`.
    pub maximal_reproductive_number: f64,
    /// `2α - (3λ - 1)/(λ - 1)`.
    pub cooperation_excess: f64,
    pub predicted_count_bound: CountBound,
    /// `βx̄` lies within [`BOUNDARY_BAND`] of 1.
    pub boundary: bool,
}

/// Classify `p` by the existence table for interior steady states.
pub fn regime(p: &Params) -> Result<RegimeReport> {
    let x_bar = p.require_lambda_above_one()?;
    let r0 = p.beta * x_bar;
    let excess = 2.0 * p.alpha - (3.0 * p.lambda - 1.0) / (p.lambda - 1.0);
    let boundary = (r0 - 1.0).abs() <= BOUNDARY_BAND;
    let predicted_count_bound = if boundary {
        if excess > 0.0 {
            CountBound::Exactly(1)
        } else if p.alpha > 0.0 {
            CountBound::Exactly(0)
        } else {
            CountBound::Unclassified
        }
    } else if r0 > 1.0 {
        CountBound::Exactly(1)
    } else if excess <= 0.0 {
        CountBound::Exactly(0)
    } else {
        CountBound::AtMostTwo
    };
    Ok(RegimeReport {
        x_bar,
        maximal_reproductive_number: r0,
        cooperation_excess: excess,
        predicted_count_bound,
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TangencyMethod {
    Newton,
    CountBisection,
}

/// The conversion value β* at which the isoclines first touch.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TangencyResult {
    pub beta_star: f64,
    pub y_star: f64,
    pub x_star: f64,
    /// `f(y*) - h(y*)` at β*.
    pub residual_value: f64,
    /// `f'(y*) - h'(y*)` at β*.
    pub residual_slope: f64,
    pub method: TangencyMethod,
}

const TANGENCY_MAX_ITER: usize = 60;

/// Solve the tangency system `f = h`, `f' = h'` for `(β*, y*)`.
///
/// Requires `λ > 1` and `2α > (3λ - 1)/(λ - 1)`. Newton on
/// `(βW(y) - y, βW'(y) - 1)` seeded from the grid minimum of `y/W(y)`; if
/// that fails, bisection on β over the 0 → 2 change in the interior count.
pub fn beta_star(lambda: f64, alpha: f64) -> Result<TangencyResult> {
    let probe = Params::new(lambda, 1.0, alpha)?;
    probe.require_lambda_above_one()?;
    let excess = model::cooperation_excess(lambda, alpha).unwrap_or(f64::NAN);
    if !(excess > 0.0) {
        return Err(Error::Precondition(
            "tangency requires 2*alpha > (3*lambda - 1)/(lambda - 1)",
        ));
    }
    let yc = y_c_raw(lambda, alpha);
    let (nodes, _) = scan_nodes(yc, SCAN_POINTS);
    let (mut y, mut beta) = nodes
        .iter()
        .map(|&y| (y, y / w_shape(y, lambda, alpha).value))
        .filter(|(_, b)| b.is_finite() && *b > 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NonFinite {
            context: "tangency seed",
        })?;
    let seed = (y, beta);

    let mut converged = false;
    for _ in 0..TANGENCY_MAX_ITER {
        let s = w_shape(y, lambda, alpha);
        let f1 = beta * s.value - y;
        let f2 = beta * s.slope - 1.0;
        // [[βW' - 1, W], [βW'', W']]
        let j11 = beta * s.slope - 1.0;
        let j12 = s.value;
        let j21 = beta * s.curvature;
        let j22 = s.slope;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dy = (f1 * j22 - j12 * f2) / det;
        let db = (j11 * f2 - j21 * f1) / det;
        y -= dy;
        beta -= db;
        if !(y > 0.0 && y < yc && beta > 0.0) {
            break;
        }
        if dy.abs() <= 1e-14 * y && db.abs() <= 1e-14 * beta {
            break;
        }
    }
    if y > 0.0 && y < yc && beta > 0.0 {
        let s = w_shape(y, lambda, alpha);
        converged =
            (beta * s.value - y).abs() <= 1e-12 * y && (beta * s.slope - 1.0).abs() <= 1e-10;
    }
    let method = if converged {
        TangencyMethod::Newton
    } else {
        let (b, yy) = tangency_by_count(lambda, alpha, seed)?;
        beta = b;
        y = yy;
        TangencyMethod::CountBisection
    };

    let p = Params::new(lambda, beta, alpha)?;
    Ok(TangencyResult {
        beta_star: beta,
        y_star: y,
        x_star: isocline_f(y, &p),
        residual_value: isocline_f(y, &p) - isocline_h(y, &p),
        residual_slope: isocline_f_slope(y, &p) - isocline_h_slope(y, &p),
        method,
    })
}

fn tangency_by_count(lambda: f64, alpha: f64, seed: (f64, f64)) -> Result<(f64, f64)> {
    let x_bar = lambda - 1.0;
    let count = |beta: f64| -> Result<usize> {
        Ok(interior_equilibria(&Params::new(lambda, beta, alpha)?)?.len())
    };
    let mut lo = 0.5 * seed.1;
    let mut hi = 0.5 * (seed.1 + 1.0 / x_bar);
    if count(lo)? != 0 || count(hi)? != 2 {
        return Err(Error::NoConvergence {
            what: "tangency count bisection",
            iterations: 0,
        });
    }
    let mut iterations = 0;
    while hi - lo > 1e-14 * hi {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence {
                what: "tangency count bisection",
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if count(mid)? == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the touch point is the minimum of y/W(y)
    let yc = y_c_raw(lambda, alpha);
    let slope = |y: f64| {
        let s = w_shape(y, lambda, alpha);
        s.value - y * s.slope
    };
    let step = yc / SCAN_POINTS as f64;
    let a = (seed.0 - 2.0 * step).max(0.5 * step);
    let b = (seed.0 + 2.0 * step).min(yc - 0.5 * step);
    let y = roots::bisect(slope, a, b, 1e-15, 400)?;
    Ok((hi, y))
}

/// The chain `0 < y₁* < y_* < y₂* < y_e < y^* < y_c` for one (λ, α) family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderingChain {
    /// β inside `(β*, 1/x̄)` where the two interior states are taken.
    pub beta_two: f64,
    /// β above `1/x̄` where the unique interior state is taken.
    pub beta_one: f64,
    pub y1: f64,
    pub y_tangent: f64,
    pub y2: f64,
    pub y_e: f64,
    pub y_unique: f64,
    pub y_c: f64,
}

impl OrderingChain {
    pub fn holds(&self) -> bool {
        0.0 < self.y1
            && self.y1 < self.y_tangent
            && self.y_tangent < self.y2
            && self.y2 < self.y_e
            && self.y_e < self.y_unique
            && self.y_unique < self.y_c
    }
}

pub fn ordering_chain(
    lambda: f64,
    alpha: f64,
    beta_two: f64,
    beta_one: f64,
) -> Result<OrderingChain> {
    let t = beta_star(lambda, alpha)?;
    let x_bar = lambda - 1.0;
    if !(beta_two > t.beta_star && beta_two < 1.0 / x_bar) {
        return Err(Error::Precondition("beta_two must lie in (beta*, 1/x_bar)"));
    }
    if !(beta_one > 1.0 / x_bar) {
        return Err(Error::Precondition("beta_one must exceed 1/x_bar"));
    }
    let ys = |beta: f64| -> Result<Vec<f64>> {
        Ok(interior_equilibria(&Params::new(lambda, beta, alpha)?)?
            .iter()
            .map(|e| e.state.y)
            .collect())
    };
    let two = ys(beta_two)?;
    let at_threshold = ys(1.0 / x_bar)?;
    let one = ys(beta_one)?;
    if two.len() != 2 || at_threshold.len() != 1 || one.len() != 1 {
        return Err(Error::Precondition(
            "interior counts do not match the two-state window",
        ));
    }
    Ok(OrderingChain {
        beta_two,
        beta_one,
        y1: two[0],
        y_tangent: t.y_star,
        y2: two[1],
        y_e: at_threshold[0],
        y_unique: one[0],
        y_c: y_c_raw(lambda, alpha),
    })
}

/// Check the ordering chain for the (λ, α) family of `p`.
///
/// `p.beta` is used on whichever side of `1/x̄` it falls; the other side
/// takes the midpoint of `(β*, 1/x̄)` or `2/x̄`.
pub fn ordering_check(p: &Params) -> Result<bool> {
    let x_bar = p.require_lambda_above_one()?;
    let t = beta_star(p.lambda, p.alpha)?;
    let threshold = 1.0 / x_bar;
    let chain = if p.beta > t.beta_star && p.beta < threshold {
        ordering_chain(p.lambda, p.alpha, p.beta, 2.0 * threshold)?
    } else if p.beta > threshold {
        ordering_chain(p.lambda, p.alpha, 0.5 * (t.beta_star + threshold), p.beta)?
    } else {
        return Err(Error::Precondition(
            "beta must exceed beta* and differ from 1/x_bar",
        ));
    };
    Ok(chain.holds())
}
