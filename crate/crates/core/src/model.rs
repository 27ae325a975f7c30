//! The dimensionless map and its parameters.

use alloc::vec::Vec;
use libm::{exp, expm1};

use crate::error::{Error, Result};

/// Parameters of the map before nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawParams {
    /// Intrinsic prey growth rate (already dimensionless).
    pub lambda: f64,
    /// Predator searching efficiency.
    pub a: f64,
    /// Prey crowding coefficient.
    pub k: f64,
    /// Prey-to-predator conversion.
    pub beta_raw: f64,
    /// Degree of cooperation among hunting predators.
    pub alpha_raw: f64,
}

/// Dimensionless parameters (λ, β, α).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Params {
    pub lambda: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// A population pair (prey `x`, predator `y`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const ORIGIN: State = State { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        State { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Max-norm distance.
    pub fn distance_inf(&self, other: &State) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

impl RawParams {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("a", self.a)?;
        positive("k", self.k)?;
        positive("beta", self.beta_raw)?;
        nonnegative("alpha", self.alpha_raw)
    }
}

impl Params {
    pub fn new(lambda: f64, beta: f64, alpha: f64) -> Result<Self> {
        let p = Params {
            lambda,
            beta,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("beta", self.beta)?;
        nonnegative("alpha", self.alpha)
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Params { beta, ..self }
    }

    /// Prey carrying capacity `λ - 1`, defined only when `λ > 1`.
    pub fn x_bar(&self) -> Option<f64> {
        (self.lambda > 1.0).then_some(self.lambda - 1.0)
    }

    /// `β·x̄`, the predator's growth factor with prey at carrying capacity.
    pub fn max_reproductive_number(&self) -> Option<f64> {
        self.x_bar().map(|xb| self.beta * xb)
    }

    /// `2α - (3λ - 1)/(λ - 1)`; positive values admit two interior states.
    pub fn cooperation_excess(&self) -> Option<f64> {
        cooperation_excess(self.lambda, self.alpha)
    }

    /// The predator-free steady state `(λ - 1, 0)`.
    pub fn boundary_e1(&self) -> Option<State> {
        self.x_bar().map(|xb| State::new(xb, 0.0))
    }

    pub(crate) fn require_lambda_above_one(&self) -> Result<f64> {
        self.validate()?;
        self.x_bar()
            .ok_or(Error::Precondition("lambda must exceed 1"))
    }
}

pub fn cooperation_excess(lambda: f64, alpha: f64) -> Option<f64> {
    (lambda > 1.0).then(|| 2.0 * alpha - (3.0 * lambda - 1.0) / (lambda - 1.0))
}

/// Scale raw parameters to the three-parameter form:
/// `β = β_raw·a/k`, `α = α_raw/a`. The prey growth rate is unchanged.
pub fn nondimensionalize(raw: &RawParams) -> Result<Params> {
    raw.validate()?;
    Params::new(
        raw.lambda,
        raw.beta_raw * raw.a / raw.k,
        raw.alpha_raw / raw.a,
    )
}

/// The encounter exponent `◊ = y(1 + αy)`.
#[inline]
pub fn diamond(y: f64, alpha: f64) -> f64 {
    y * (1.0 + alpha * y)
}

/// One application of the map with no input checks.
#[inline]
pub(crate) fn apply(x: f64, y: f64, p: &Params) -> (f64, f64) {
    let d = diamond(y, p.alpha);
    let escape = exp(-d);
    let caught = -expm1(-d);
    (p.lambda * x / (1.0 + x) * escape, p.beta * x * caught)
}

/// Apply the map once.
///
/// Fails for negative or non-finite states; every nonnegative finite state
/// maps into the closed nonnegative quadrant.
pub fn step(s: State, p: &Params) -> Result<State> {
    if !s.is_finite() {
        return Err(Error::NonFinite {
            context: "step input",
        });
    }
    if s.x < 0.0 || s.y < 0.0 {
        return Err(Error::InvalidParameter {
            name: "state",
            value: s.x.min(s.y),
            reason: "state must lie in the nonnegative quadrant",
        });
    }
    let (x, y) = apply(s.x, s.y, p);
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::NonFinite {
            context: "step output",
        });
    }
    Ok(State { x, y })
}

/// Iterate `n` times and return all `n + 1` states, starting with `s0`.
pub fn orbit(s0: State, p: &Params, n: usize) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut s = s0;
    step_check(s0)?;
    out.push(s);
    for i in 0..n {
        s = step(s, p).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Diverged { step: i + 1 },
            other => other,
        })?;
        out.push(s);
    }
    Ok(out)
}

fn step_check(s: State) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NonFinite {
            context: "initial state",
        });
    }
    if s.x < 0.0 || s.y < 0.0 {
        return Err(Error::InvalidParameter {
            name: "state",
            value: s.x.min(s.y),
            reason: "state must lie in the nonnegative quadrant",
        });
    }
    Ok(())
}
