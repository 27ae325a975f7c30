//! Numerical analysis of the discrete-time predator–prey map with
//! cooperative hunting,
//!
//! ```text
//! x' = λ x / (1 + x) · exp(-◊)
//! y' = β x · (1 - exp(-◊)),        ◊ = y (1 + α y)
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the CLI and parallel drivers live in
//! the `coophunt` crate.
//!
//! Modules, bottom-up:
//!
//! * [`model`]: parameters, the map, orbits.
//! * [`equilibria`]: isoclines, interior steady states, the regime table and
//!   the tangency threshold β*.
//! * [`stability`]: Jacobians, Jury classification, `y_d`, `y_t`, `β_d`.
//! * [`ns`]: Neimark–Sacker normal-form coefficients and the direction
//!   coefficient C*.
//! * [`sim`]: long-run orbit classification, persistence checks, basin
//!   scans and β sweeps.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]
// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod equilibria;
pub mod error;
pub mod model;
pub mod ns;
pub mod roots;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use model::{Params, RawParams, State};
