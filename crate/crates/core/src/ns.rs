//! Neimark–Sacker bifurcation at `β_d` and its direction coefficient `C*`.
//!
//! The interior steady state `E*` is moved to the origin, the quadratic and
//! cubic Taylor terms of the shifted map are collected (`b₁..b₇` for the prey
//! component, `c₁..c₄` for the predator component), the linear part is put in
//! rotation form by `L = [[a₁₂, 0], [μ - a₁₁, -ω]]`, and the resulting
//! coefficients `k₁..k₇`, `l₁..l₇` feed the standard `ξ` combinations.
//!
//! `C* > 0` means an attracting invariant circle born for `β > β_d`.

use alloc::vec::Vec;
use libm::{exp, expm1};
use num_complex::Complex64;

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::model::{diamond, Params, State};
use crate::stability::{self, Jacobian2};

/// Below this `|a₁₂|` the transform `L` is treated as singular.
pub const DEGENERATE_A12: f64 = 1e-12;
/// `|C*|` below this gives no direction.
pub const INCONCLUSIVE_BAND: f64 = 1e-10;
/// Minimum distance of `tr J` from the strong-resonance traces.
pub const RESONANCE_BAND: f64 = 1e-6;
/// β step of the centered difference for `d(det J)/dβ`.
pub const TRANSVERSALITY_STEP: f64 = 1e-6;

/// Traces of the unit-modulus pairs with `λⁿ = 1`, `n = 1..4`.
const RESONANT_TRACES: [f64; 4] = [2.0, -2.0, 0.0, -1.0];

/// Taylor coefficients of the shifted map.
///
/// `f̂ = b₁X² + b₂XY + b₃Y² + b₄X³ + b₅X²Y + b₆XY² + b₇Y³`,
/// `ĝ = c₁XY + c₂Y² + c₃Y³ + c₄XY²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftCoefficients {
    pub b: [f64; 7],
    pub c: [f64; 4],
}

pub fn shift_coefficients(e: &Equilibrium, p: &Params) -> ShiftCoefficients {
    shift_coefficients_at(e.state, p)
}

pub fn shift_coefficients_at(s: State, p: &Params) -> ShiftCoefficients {
    let (x, y) = (s.x, s.y);
    let (l, a, beta) = (p.lambda, p.alpha, p.beta);
    let psi = exp(-diamond(y, a));
    let d = 1.0 + 2.0 * a * y;
    let d2 = d * d;
    let ox = 1.0 + x;
    let b = [
        -l * psi / (ox * ox * ox),
        -l * d * psi / (ox * ox),
        l * x * psi * (d2 - 2.0 * a) / (2.0 * ox),
        l * psi / (ox * ox * ox * ox),
        l * d * psi / (ox * ox * ox),
        l * psi * (d2 - 2.0 * a) / (2.0 * ox * ox),
        l * x * psi * d * (6.0 * a - d2) / (6.0 * ox),
    ];
    let c = [
        beta * psi * d,
        -beta * x * psi * (d2 - 2.0 * a) / 2.0,
        -beta * x * psi * d * (6.0 * a - d2) / 6.0,
        -beta * psi * (d2 - 2.0 * a) / 2.0,
    ];
    ShiftCoefficients { b, c }
}

/// `L = [[a₁₂, 0], [μ - a₁₁, -ω]]` and the eigenvalue `μ + iω`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearizingTransform {
    pub mu: f64,
    pub omega: f64,
    pub l: [[f64; 2]; 2],
}

impl LinearizingTransform {
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let a12 = self.l[0][0];
        let m = self.l[1][0];
        [
            [1.0 / a12, 0.0],
            [m / (a12 * self.omega), -1.0 / self.omega],
        ]
    }

    /// `L⁻¹ J L`, which should be `[[μ, -ω], [ω, μ]]`.
    pub fn conjugate(&self, j: &Jacobian2) -> [[f64; 2]; 2] {
        let a = [[j.a11, j.a12], [j.a21, j.a22]];
        mat_mul(&mat_mul(&self.inverse(), &a), &self.l)
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            out[i][k] = a[i][0] * b[0][k] + a[i][1] * b[1][k];
        }
    }
    out
}

pub fn linearizing_transform(j: &Jacobian2) -> Result<LinearizingTransform> {
    let disc = j.discriminant();
    if disc >= 0.0 {
        return Err(Error::RealEigenvalues { discriminant: disc });
    }
    if j.a12.abs() < DEGENERATE_A12 {
        return Err(Error::DegenerateTransform { a12: j.a12 });
    }
    let mu = j.eigenvalues[0].re;
    let omega = j.eigenvalues[0].im.abs();
    Ok(LinearizingTransform {
        mu,
        omega,
        l: [[j.a12, 0.0], [mu - j.a11, -omega]],
    })
}

/// Coefficients of the map in `(u, v)`:
/// `f̃ = (k₁u² + k₂v² + k₃uv + k₄u³ + k₅v³ + k₆u²v + k₇uv²)/a₁₂`,
/// `g̃ = l₁u² + l₂v² + l₃uv + l₄u³ + l₅v³ + l₆u²v + l₇uv²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UvCoefficients {
    pub k: [f64; 7],
    pub l: [f64; 7],
}

pub fn uv_coefficients(
    s: &ShiftCoefficients,
    mu: f64,
    omega: f64,
    a11: f64,
    a12: f64,
) -> Result<UvCoefficients> {
    if a12.abs() < DEGENERATE_A12 {
        return Err(Error::DegenerateTransform { a12 });
    }
    let [b1, b2, b3, b4, b5, b6, b7] = s.b;
    let [c1, c2, c3, c4] = s.c;
    let m = mu - a11;
    let w = omega;
    let w2 = w * w;
    let k = [
        b1 * a12 * a12 + b2 * a12 * m + b3 * m * m,
        b3 * w2,
        -b2 * a12 * w - 2.0 * b3 * w * m,
        b4 * a12 * a12 * a12 + b5 * a12 * a12 * m + b6 * a12 * m * m + b7 * m * m * m,
        -b7 * w2 * w,
        -b5 * a12 * a12 * w - 2.0 * b6 * a12 * w * m - 3.0 * b7 * w * m * m,
        b6 * a12 * w2 + 3.0 * b7 * m * w2,
    ];
    let r = m / (a12 * w);
    let l = [
        r * k[0] - (c1 * a12 * m + c2 * m * m) / w,
        b3 * m * w / a12 - c2 * w,
        r * k[2] + c1 * a12 + 2.0 * c2 * m,
        r * k[3] - m * m * (c3 * m + c4 * a12) / w,
        -m * b7 * w2 / a12 + c3 * w2,
        r * k[5] + m * (3.0 * c3 * m + 2.0 * c4 * a12),
        r * k[6] - (3.0 * c3 * m + c4 * a12) * w,
    ];
    Ok(UvCoefficients { k, l })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XiCoefficients {
    pub xi20: Complex64,
    pub xi11: Complex64,
    pub xi02: Complex64,
    pub xi21: Complex64,
}

/// Second and third partial derivatives of `(f̃, g̃)` at the origin, in the
/// order `uu, uv, vv, uuu, uuv, uvv, vvv`.
pub fn uv_partials(uv: &UvCoefficients, a12: f64) -> ([f64; 7], [f64; 7]) {
    let partials = |c: &[f64; 7], s: f64| {
        [
            2.0 * c[0] * s,
            c[2] * s,
            2.0 * c[1] * s,
            6.0 * c[3] * s,
            2.0 * c[5] * s,
            2.0 * c[6] * s,
            6.0 * c[4] * s,
        ]
    };
    (partials(&uv.k, 1.0 / a12), partials(&uv.l, 1.0))
}

pub fn xi_coefficients(uv: &UvCoefficients, a12: f64) -> XiCoefficients {
    let (f, g) = uv_partials(uv, a12);
    xi_from_partials(&f, &g)
}

/// The `ξ` combinations from partial derivatives ordered as in
/// [`uv_partials`].
pub fn xi_from_partials(f: &[f64; 7], g: &[f64; 7]) -> XiCoefficients {
    let [fuu, fuv, fvv, fuuu, fuuv, fuvv, fvvv] = *f;
    let [guu, guv, gvv, guuu, guuv, guvv, gvvv] = *g;
    XiCoefficients {
        xi20: Complex64::new(fuu - fvv + 2.0 * guv, guu - gvv - 2.0 * fuv) / 8.0,
        xi11: Complex64::new(fuu + fvv, guu + gvv) / 4.0,
        xi02: Complex64::new(fuu - fvv - 2.0 * guv, guu - gvv + 2.0 * fuv) / 8.0,
        xi21: Complex64::new(fuuu + fuvv + guuv + gvvv, guuu + guvv - fuuv - fvvv) / 16.0,
    }
}

/// `Re((1 - 2λ₊)λ₋²/(1 - λ₊)·ξ₂₀ξ₁₁) + ½|ξ₁₁|² + |ξ₀₂|² - Re(λ₋ξ₂₁)`.
pub fn c_star_value(xi: &XiCoefficients, mu: f64, omega: f64) -> f64 {
    let lp = Complex64::new(mu, omega);
    let lm = lp.conj();
    let one = Complex64::new(1.0, 0.0);
    let factor = (one - lp * 2.0) * lm * lm / (one - lp);
    (factor * xi.xi20 * xi.xi11).re + 0.5 * xi.xi11.norm_sqr() + xi.xi02.norm_sqr()
        - (lm * xi.xi21).re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction {
    /// `C* > 0`: attracting invariant circle for `β > β_d`.
    Supercritical,
    /// `C* < 0`: repelling invariant circle for `β < β_d`.
    Subcritical,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NsDiagnostic {
    /// `tr J` within [`RESONANCE_BAND`] of a strong-resonance trace.
    Resonance { trace: f64, resonant_trace: f64 },
    /// `|C*|` inside [`INCONCLUSIVE_BAND`].
    NearZeroCoefficient,
    /// Simulation near `β_d` contradicts the sign of `C*`.
    ConventionMismatch,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NsReport {
    pub params: Params,
    pub beta_d: f64,
    pub equilibrium: State,
    pub jacobian: Jacobian2,
    pub mu: f64,
    pub omega: f64,
    /// `d|λ±|/dβ = ½·d(det J)/dβ` along the equilibrium branch.
    pub transversality: f64,
    pub resonance_clear: bool,
    pub transform: LinearizingTransform,
    pub b: [f64; 7],
    pub c: [f64; 4],
    pub k: [f64; 7],
    pub l: [f64; 7],
    pub xi20: Complex64,
    pub xi11: Complex64,
    pub xi02: Complex64,
    pub xi21: Complex64,
    pub c_star: f64,
    pub direction: Direction,
    pub diagnostics: Vec<NsDiagnostic>,
}

/// Full coefficient chain and `C*` at `p`, which should sit at `β = β_d`.
pub fn c_star(p: &Params) -> Result<NsReport> {
    let y = stability::unique_interior_y(p)?;
    let state = State::new(crate::equilibria::isocline_f(y, p), y);
    let j = stability::jacobian(state, p);
    let t = linearizing_transform(&j)?;
    let shift = shift_coefficients_at(state, p);
    let uv = uv_coefficients(&shift, t.mu, t.omega, j.a11, j.a12)?;
    let xi = xi_coefficients(&uv, j.a12);
    let cs = c_star_value(&xi, t.mu, t.omega);

    let mut diagnostics = Vec::new();
    for &rt in &RESONANT_TRACES {
        if (j.tr - rt).abs() < RESONANCE_BAND {
            diagnostics.push(NsDiagnostic::Resonance {
                trace: j.tr,
                resonant_trace: rt,
            });
        }
    }
    let resonance_clear = diagnostics.is_empty();
    let direction = if !resonance_clear {
        Direction::Inconclusive
    } else if cs.abs() < INCONCLUSIVE_BAND {
        diagnostics.push(NsDiagnostic::NearZeroCoefficient);
        Direction::Inconclusive
    } else if cs > 0.0 {
        Direction::Supercritical
    } else {
        Direction::Subcritical
    };

    Ok(NsReport {
        params: *p,
        beta_d: p.beta,
        equilibrium: state,
        jacobian: j,
        mu: t.mu,
        omega: t.omega,
        transversality: transversality(p)?,
        resonance_clear,
        transform: t,
        b: shift.b,
        c: shift.c,
        k: uv.k,
        l: uv.l,
        xi20: xi.xi20,
        xi11: xi.xi11,
        xi02: xi.xi02,
        xi21: xi.xi21,
        c_star: cs,
        direction,
        diagnostics,
    })
}

/// `½·d(det J)/dβ` at the interior steady state, by centered difference.
pub fn transversality(p: &Params) -> Result<f64> {
    let h = TRANSVERSALITY_STEP;
    let det_at = |beta: f64| -> Result<f64> {
        let q = p.with_beta(beta);
        Ok(stability::det_j_interior(
            stability::unique_interior_y(&q)?,
            &q,
        ))
    };
    Ok(0.5 * (det_at(p.beta + h)? - det_at(p.beta - h)?) / (2.0 * h))
}

/// Locate `β_d` for `(λ, α)` and evaluate the full report there.
pub fn neimark_sacker(lambda: f64, alpha: f64, beta_max: Option<f64>) -> Result<NsReport> {
    let beta = stability::beta_d_with_max(lambda, alpha, beta_max)?;
    c_star(&Params::new(lambda, beta, alpha)?)
}

/// Shifted map `(X, Y) ↦ step(E* + (X, Y)) - E*` without the domain checks
/// of [`crate::model::step`]; used by derivative checks.
pub fn shifted_map(e: State, p: &Params, dx: f64, dy: f64) -> (f64, f64) {
    let x = e.x + dx;
    let y = e.y + dy;
    let d = diamond(y, p.alpha);
    (
        p.lambda * x / (1.0 + x) * exp(-d) - e.x,
        p.beta * x * -expm1(-d) - e.y,
    )
}
