//! Numeric verification of the growth identities, the exact finite-N
//! Ginibre oracles, the universality of the fluctuation partition function,
//! and the CUE statistics of the layer angles.

mod cue;
mod ginibre;
mod identities;
mod universality;

pub use cue::{circular_spacings, cue_angular_statistics, cue_gap_cdf_m2, sample_cue_angles, CueConfig};
pub use ginibre::{
    exact_overlap_at, exact_overlap_ginibre, ginibre_mean_density, ginibre_quantile_radius,
    one_point_normalization, semiclassical_vs_exact,
};
pub use identities::{check_a_expansion, check_schwarz_velocity, check_stokes};
pub use universality::{partition_function_mc, UniversalityReport};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Outcome of one numeric check, reproducible from (seed, parameters).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Grid sizes, sample counts, fitted exponents, per-case errors.
    pub resolution: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

impl CheckReport {
    /// passed <=> rel_error <= tolerance, falling back to the absolute error
    /// when the target is at or near zero.
    pub fn evaluate(name: &str, lhs: f64, rhs: f64, tolerance: f64, near_zero: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        let rel_error = if rhs.abs() > near_zero { abs_error / rhs.abs() } else { abs_error };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            abs_error,
            rel_error,
            tolerance,
            passed: rel_error <= tolerance,
            resolution: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn with_resolution(mut self, key: &str, value: f64) -> Self {
        self.resolution.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}
