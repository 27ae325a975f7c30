//! Linear stability: Jacobians, Jury classification and the critical
//! curves `det J = 1` (`y_d`, `β_d`) and `1 + det J - tr J = 0` (`y_t`).

use alloc::vec::Vec;
use libm::{exp, expm1, sqrt};
use num_complex::Complex64;

use crate::equilibria::{self, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{diamond, Params, State};
use crate::roots;

/// Eigenvalue moduli this close to 1 count as non-hyperbolic.
pub const NONHYPERBOLIC_BAND: f64 = 1e-9;
/// Moduli this close to 1 set the `marginal` flag.
pub const MARGINAL_BAND: f64 = 1e-6;
/// Default upper end of the β_d search, in units of `1/x̄`.
pub const BETA_MAX_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub det: f64,
    pub tr: f64,
    /// Roots of `z² - tr·z + det`, larger real part (or positive imaginary
    /// part) first.
    pub eigenvalues: [Complex64; 2],
}

impl Jacobian2 {
    pub fn from_entries(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        let det = a11 * a22 - a12 * a21;
        let tr = a11 + a22;
        let disc = tr * tr - 4.0 * det;
        let eigenvalues = if disc >= 0.0 {
            // avoid cancellation in the smaller root
            let s = sqrt(disc);
            let big = 0.5 * (tr + if tr >= 0.0 { s } else { -s });
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (hi, lo) = if big >= small {
                (big, small)
            } else {
                (small, big)
            };
            [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
        } else {
            let im = 0.5 * sqrt(-disc);
            [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
        };
        Jacobian2 {
            a11,
            a12,
            a21,
            a22,
            det,
            tr,
            eigenvalues,
        }
    }

    pub fn discriminant(&self) -> f64 {
        self.tr * self.tr - 4.0 * self.det
    }

    pub fn moduli(&self) -> [f64; 2] {
        [self.eigenvalues[0].norm(), self.eigenvalues[1].norm()]
    }
}

/// Jacobian of the map at an arbitrary state.
pub fn jacobian(s: State, p: &Params) -> Jacobian2 {
    let d = diamond(s.y, p.alpha);
    let psi = exp(-d);
    let dd = 1.0 + 2.0 * p.alpha * s.y;
    let one_x = 1.0 + s.x;
    Jacobian2::from_entries(
        p.lambda * psi / (one_x * one_x),
        -p.lambda * s.x * psi * dd / one_x,
        p.beta * -expm1(-d),
        p.beta * s.x * psi * dd,
    )
}

/// Jacobian at the interior steady state with ordinate `y`, written
/// through the isocline identities: `[[1/(λψ), -xD], [y/x, yDψ/(1-ψ)]]`
/// with `ψ = e^{-◊}`, `D = 1 + 2αy`, `x = f(y)`.
pub fn jacobian_interior(y: f64, p: &Params) -> Jacobian2 {
    let d = diamond(y, p.alpha);
    let psi = exp(-d);
    let q = -expm1(-d);
    let dd = 1.0 + 2.0 * p.alpha * y;
    let x = p.lambda * psi - 1.0;
    Jacobian2::from_entries(1.0 / (p.lambda * psi), -x * dd, y / x, y * dd * psi / q)
}

/// `det J` along the interior equilibrium curve,
/// `yD/(λ(1 - e^{-◊})) + yD`. Independent of β; `1/λ` at `y = 0`.
pub fn det_j_interior(y: f64, p: &Params) -> f64 {
    det_raw(y, p.lambda, p.alpha)
}

fn det_raw(y: f64, lambda: f64, alpha: f64) -> f64 {
    if y == 0.0 {
        return 1.0 / lambda;
    }
    let yd = y * (1.0 + 2.0 * alpha * y);
    yd / (lambda * -expm1(-diamond(y, alpha))) + yd
}

/// `V(y) = 1 + det J - tr J` along the interior equilibrium curve;
/// `V(0) = 0`.
#[allow(non_snake_case)]
pub fn V(y: f64, p: &Params) -> f64 {
    v_raw(y, p.lambda, p.alpha)
}

fn v_raw(y: f64, lambda: f64, alpha: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let d = diamond(y, alpha);
    let yd = y * (1.0 + 2.0 * alpha * y);
    1.0 - exp(d) / lambda + (2.0 - (1.0 - 1.0 / lambda) / -expm1(-d)) * yd
}

/// The unique `y ∈ (0, y_c)` with `det J = 1` on the interior curve.
pub fn y_d(p: &Params) -> Result<f64> {
    p.require_lambda_above_one()?;
    y_d_raw(p.lambda, p.alpha)
}

pub(crate) fn y_d_raw(lambda: f64, alpha: f64) -> Result<f64> {
    let yc = equilibria::y_c_raw(lambda, alpha);
    roots::illinois(
        |y| det_raw(y, lambda, alpha) - 1.0,
        0.0,
        yc,
        1e-15 * yc,
        1e-14,
        200,
    )
}

const YT_SCAN: usize = 4096;

/// The sign change of `V` in `(0, y_c)`, if any.
///
/// `V` is positive near `y_c`. With strong cooperation it dips below zero
/// right after the origin, and the crossing back up is `y_t`.
pub fn y_t(p: &Params) -> Result<Option<f64>> {
    p.require_lambda_above_one()?;
    y_t_raw(p.lambda, p.alpha)
}

fn y_t_raw(lambda: f64, alpha: f64) -> Result<Option<f64>> {
    if 2.0 * alpha <= 1.0 {
        return Ok(None);
    }
    let yc = equilibria::y_c_raw(lambda, alpha);
    let v = |y: f64| v_raw(y, lambda, alpha);
    // geometric prefix for crossings close to the origin, then a uniform grid
    let mut nodes: Vec<f64> = (0..=24)
        .rev()
        .map(|k| yc * libm::pow(2.0, -(k as f64) - 12.0))
        .collect();
    nodes.extend((1..YT_SCAN).map(|i| yc * i as f64 / YT_SCAN as f64));
    let values: Vec<f64> = nodes.iter().map(|&y| v(y)).collect();
    let Some(i) = values.windows(2).rposition(|w| w[0] < 0.0 && w[1] > 0.0) else {
        return Ok(None);
    };
    let (lo, hi) = (nodes[i], nodes[i + 1]);
    roots::illinois(v, lo, hi, 1e-16 * yc, 1e-14, 200).map(Some)
}

/// β_d with the default search ceiling `50/x̄`.
pub fn beta_d(lambda: f64, alpha: f64) -> Result<f64> {
    beta_d_with_max(lambda, alpha, None)
}

/// The conversion β at which the unique interior steady state (`βx̄ > 1`)
/// has `det J = 1`.
///
/// `det J` at the steady state increases with β because `y*` does, so the
/// crossing is bracketed on `(1/x̄, β_max]`. Fails with
/// [`Error::NoNsPoint`] when `det J < 1` at `β_max`.
pub fn beta_d_with_max(lambda: f64, alpha: f64, beta_max: Option<f64>) -> Result<f64> {
    let probe = Params::new(lambda, 1.0, alpha)?;
    let x_bar = probe.require_lambda_above_one()?;
    let lo = (1.0 + 1e-6) / x_bar;
    let hi = beta_max.unwrap_or(BETA_MAX_FACTOR / x_bar);
    if !(hi > lo) {
        return Err(Error::InvalidParameter {
            name: "beta_max",
            value: hi,
            reason: "must exceed 1/x_bar",
        });
    }
    let excess_det = |beta: f64| -> Result<f64> {
        let y = unique_interior_y(&probe.with_beta(beta))?;
        Ok(det_raw(y, lambda, alpha) - 1.0)
    };
    let flo = excess_det(lo)?;
    let fhi = excess_det(hi)?;
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoNsPoint { lo, hi });
    }
    // Illinois needs an infallible closure; remember the first failure.
    let failure = core::cell::Cell::new(None);
    let beta = roots::illinois(
        |b| match excess_det(b) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        lo,
        hi,
        1e-15 * hi,
        1e-12,
        200,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    beta
}

/// Ordinate of the unique interior steady state; errors unless exactly one
/// exists.
pub(crate) fn unique_interior_y(p: &Params) -> Result<f64> {
    let eqs = equilibria::interior_equilibria(p)?;
    match eqs.as_slice() {
        [e] => Ok(e.state.y),
        _ => Err(Error::Precondition(
            "expected a unique interior steady state",
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StabilityTag {
    Sink,
    Source,
    Saddle,
    NonHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityClass {
    pub tag: StabilityTag,
    /// `[|tr| < 1 + det, det < 1, 1 + det ± tr > 0]`.
    pub jury: [bool; 3],
    /// Some eigenvalue modulus lies within [`MARGINAL_BAND`] of 1.
    pub marginal: bool,
}

pub fn classify_jacobian(j: &Jacobian2) -> StabilityClass {
    let jury = [
        j.tr.abs() < 1.0 + j.det,
        j.det < 1.0,
        1.0 + j.det + j.tr > 0.0 && 1.0 + j.det - j.tr > 0.0,
    ];
    let m = j.moduli();
    let near = |band: f64| m.iter().any(|r| (r - 1.0).abs() < band);
    let tag = if near(NONHYPERBOLIC_BAND) {
        StabilityTag::NonHyperbolic
    } else {
        match m.iter().filter(|&&r| r > 1.0).count() {
            0 => StabilityTag::Sink,
            1 => StabilityTag::Saddle,
            _ => StabilityTag::Source,
        }
    };
    StabilityClass {
        tag,
        jury,
        marginal: near(MARGINAL_BAND),
    }
}

pub fn classify(e: &Equilibrium, p: &Params) -> StabilityClass {
    classify_jacobian(&jacobian(e.state, p))
}

/// A steady state together with its Jacobian and stability class.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifiedEquilibrium {
    pub equilibrium: Equilibrium,
    pub jacobian: Jacobian2,
    pub class: StabilityClass,
}

/// All steady states of `p` with their linear stability.
pub fn analyze(p: &Params) -> Result<Vec<ClassifiedEquilibrium>> {
    Ok(equilibria::all_equilibria(p)?
        .into_iter()
        .map(|e| {
            let j = jacobian(e.state, p);
            ClassifiedEquilibrium {
                equilibrium: e,
                jacobian: j,
                class: classify_jacobian(&j),
            }
        })
        .collect())
}

/// Sufficient condition for the predator to die out with the prey settling
/// at `x̄`: `βx̄ < 1` when `2α ≤ 1`, otherwise
/// `βx̄·√(2α)·e^{(1-2α)/(4α)} < 1`.
pub fn global_extinction_condition(p: &Params) -> Result<bool> {
    let x_bar = p.require_lambda_above_one()?;
    Ok(global_extinction_value(p, x_bar) < 1.0)
}

/// Left-hand side of [`global_extinction_condition`].
pub fn global_extinction_value(p: &Params, x_bar: f64) -> f64 {
    let r0 = p.beta * x_bar;
    if 2.0 * p.alpha <= 1.0 {
        r0
    } else {
        r0 * sqrt(2.0 * p.alpha) * exp((1.0 - 2.0 * p.alpha) / (4.0 * p.alpha))
    }
}

/// Uniform persistence hypothesis: `λ > 1` and `βx̄ > 1`.
pub fn persistence_condition(p: &Params) -> bool {
    p.max_reproductive_number().is_some_and(|r| r > 1.0)
}

/// Derived thresholds of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalSet {
    pub x_bar: f64,
    pub y_c: f64,
    pub y_d: Option<f64>,
    pub y_t: Option<f64>,
    pub beta_d: Option<f64>,
    pub beta_star: Option<f64>,
}

/// Compute every threshold defined at `p`; absent ones are `None`.
pub fn critical_set(p: &Params) -> Result<CriticalSet> {
    let x_bar = p.require_lambda_above_one()?;
    let beta_d = match beta_d(p.lambda, p.alpha) {
        Ok(b) => Some(b),
        Err(e) if e.is_regime() => None,
        Err(e) => return Err(e),
    };
    let beta_star = match p.cooperation_excess() {
        Some(ex) if ex > 0.0 => Some(equilibria::beta_star(p.lambda, p.alpha)?.beta_star),
        _ => None,
    };
    Ok(CriticalSet {
        x_bar,
        y_c: equilibria::y_c(p)?,
        y_d: Some(y_d(p)?),
        y_t: y_t(p)?,
        beta_d,
        beta_star,
    })
}
