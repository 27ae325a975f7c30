use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every analysis in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// An orbit produced a non-finite state. Orbits of the map are bounded,
    /// so this only happens for pathological parameters.
    #[error("orbit diverged at step {step}")]
    Diverged { step: usize },

    #[error("precondition unmet: {0}")]
    Precondition(&'static str),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoBracket {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate linearizing transform: |a12| = {a12:e}")]
    DegenerateTransform { a12: f64 },

    #[error("Jacobian has real eigenvalues (discriminant {discriminant:e})")]
    RealEigenvalues { discriminant: f64 },

    #[error("no Neimark-Sacker point for beta in ({lo}, {hi}]")]
    NoNsPoint { lo: f64, hi: f64 },
}

impl Error {
    /// True for errors caused by parameters outside a regime that an analysis
    /// requires, as opposed to malformed input or numerical failure.
    pub fn is_regime(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_) | Error::NoNsPoint { .. } | Error::RealEigenvalues { .. }
        )
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Diverged { .. }
                | Error::NoConvergence { .. }
                | Error::NoBracket { .. }
                | Error::DegenerateTransform { .. }
        )
    }
}
