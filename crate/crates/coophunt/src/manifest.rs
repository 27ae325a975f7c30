use std::collections::BTreeMap;

use coophunt_core::sim::{self, OrbitCriteria};
use coophunt_core::{equilibria, ns, stability, Params, RawParams};
use serde::{Deserialize, Serialize};

/// Bumped whenever a JSON data layout or a CSV column order changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Bool(bool),
    Integer(u64),
    Real(f64),
    Text(String),
}

impl From<bool> for Setting {
    fn from(v: bool) -> Self {
        Setting::Bool(v)
    }
}

impl From<usize> for Setting {
    fn from(v: usize) -> Self {
        Setting::Integer(v as u64)
    }
}

impl From<u64> for Setting {
    fn from(v: u64) -> Self {
        Setting::Integer(v)
    }
}

impl From<f64> for Setting {
    fn from(v: f64) -> Self {
        Setting::Real(v)
    }
}

impl From<&str> for Setting {
    fn from(v: &str) -> Self {
        Setting::Text(v.to_string())
    }
}

impl From<String> for Setting {
    fn from(v: String) -> Self {
        Setting::Text(v)
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    /// Dimensionless parameters actually used.
    pub params: Option<Params>,
    /// Raw parameters, when the run was given them.
    pub raw: Option<RawParams>,
    pub seed: Option<u64>,
    pub settings: BTreeMap<String, Setting>,
}

impl Manifest {
    /// A manifest pre-filled with the fixed solver tolerances.
    pub fn new(command: &str) -> Self {
        let mut m = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            params: None,
            raw: None,
            seed: None,
            settings: BTreeMap::new(),
        };
        m.set("solver.scan_points", equilibria::SCAN_POINTS)
            .set("solver.boundary_guard", equilibria::BOUNDARY_GUARD)
            .set("solver.bisection_width", equilibria::BISECTION_WIDTH)
            .set("solver.double_root_tol", equilibria::DOUBLE_ROOT_TOL)
            .set("solver.boundary_band", equilibria::BOUNDARY_BAND)
            .set(
                "stability.nonhyperbolic_band",
                stability::NONHYPERBOLIC_BAND,
            )
            .set("stability.marginal_band", stability::MARGINAL_BAND)
            .set("stability.beta_max_factor", stability::BETA_MAX_FACTOR)
            .set("ns.degenerate_a12", ns::DEGENERATE_A12)
            .set("ns.inconclusive_band", ns::INCONCLUSIVE_BAND)
            .set("ns.resonance_band", ns::RESONANCE_BAND)
            .set("ns.transversality_step", ns::TRANSVERSALITY_STEP);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Into<Setting>) -> &mut Self {
        self.settings.insert(key.to_string(), value.into());
        self
    }

    /// Record the orbit budget and every classifier threshold.
    pub fn set_orbit(&mut self, burn_in: usize, window: usize, c: &OrbitCriteria) -> &mut Self {
        self.set("orbit.burn_in", burn_in)
            .set("orbit.window", window)
            .set("orbit.boundary_tol", c.boundary_tol)
            .set("orbit.fixed_diameter", c.fixed_diameter)
            .set("orbit.loop_min_diameter", c.loop_min_diameter)
            .set("orbit.loop_max_cv", c.loop_max_cv)
            .set("orbit.loop_max_drift", c.loop_max_drift)
            .set("orbit.persistence_floor", sim::PERSISTENCE_FLOOR)
            .set("orbit.initial_min", sim::INITIAL_MIN)
    }
}

/// A manifest together with the data it describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: u32,
    pub manifest: Manifest,
    pub data: T,
}

impl<T> Document<T> {
    pub fn new(manifest: Manifest, data: T) -> Self {
        Document {
            schema_version: SCHEMA_VERSION,
            manifest,
            data,
        }
    }
}
