//! JSON run configuration: schema-validated before any computation,
//! unknown keys rejected. Every field has a documented default (see the
//! README and `schema/run_config.schema.json`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::LaurentMap;
use crate::error::{Error, Result};
use crate::potential::{map_from_moments, Background, MomentVector, Potential};
use crate::util::serde_complex_vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Finite-N Coulomb-gas ensemble and radial density.
    Gas,
    /// Layer sampling, width histogram, Darcy comparison.
    Grow,
    /// Classical moment-conserving evolution.
    Evolve,
    /// Fluctuation partition function estimate.
    Universality,
    /// The full battery of identity and oracle checks.
    VerifyAll,
}

/// Potential specification; hbar lives at the top level of the run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default, with = "serde_complex_vec")]
    pub couplings: Vec<Complex64>,
    #[serde(default = "default_background")]
    pub background: Background,
    #[serde(default = "default_cutoff")]
    pub origin_cutoff: f64,
}

fn default_background() -> Background {
    Background::Uniform
}

fn default_cutoff() -> f64 {
    1e-9
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            couplings: Vec::new(),
            background: default_background(),
            origin_cutoff: default_cutoff(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Sweeps per chain (gas and layer samplers). 20% burn-in.
    #[serde(default = "d_sweeps")]
    pub sweeps: u64,
    /// Initial gas step in units of sqrt(hbar).
    #[serde(default = "d_step_scale")]
    pub step_scale: f64,
    /// Independent chains per ensemble.
    #[serde(default = "d_ensemble")]
    pub ensemble: usize,
}

fn d_sweeps() -> u64 {
    300
}
fn d_step_scale() -> f64 {
    1.0
}
fn d_ensemble() -> usize {
    200
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { sweeps: d_sweeps(), step_scale: d_step_scale(), ensemble: d_ensemble() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    #[serde(default = "d_nodes")]
    pub boundary_nodes: usize,
    /// Angular quadrature size for contour/layer integrals.
    #[serde(default = "d_quad")]
    pub quadrature: usize,
    /// Histogram bins (radial or angular).
    #[serde(default = "d_bins")]
    pub bins: usize,
    /// Importance samples for the partition function.
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Moment truncation order.
    #[serde(default = "d_kmax")]
    pub k_max: usize,
}

fn d_nodes() -> usize {
    512
}
fn d_quad() -> usize {
    512
}
fn d_bins() -> usize {
    32
}
fn d_samples() -> usize {
    100_000
}
fn d_kmax() -> usize {
    16
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self {
            boundary_nodes: d_nodes(),
            quadrature: d_quad(),
            bins: d_bins(),
            samples: d_samples(),
            k_max: d_kmax(),
        }
    }
}

/// One experiment run. Unknown keys are rejected; all randomness flows from
/// `seed` (no wall-clock entropy anywhere).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub potential: PotentialConfig,
    /// Droplet as a Laurent map {"r": .., "u": [[re, im], ..]}.
    #[serde(default)]
    pub map: Option<LaurentMap>,
    /// Droplet as moments {"t0": .., "t": [..], "v": [..]}; solved by the
    /// inverse moment problem when no map is given.
    #[serde(default)]
    pub moments: Option<MomentVector>,
    #[serde(default = "d_hbar")]
    pub hbar: f64,
    /// Gas particles.
    #[serde(default = "d_n")]
    pub n: usize,
    /// Layer points.
    #[serde(default = "d_m")]
    pub m: usize,
    /// Area added per evolution step.
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    /// Output directory for artifacts.
    #[serde(default = "d_out")]
    pub output: String,
    /// Emit SVG snapshots.
    #[serde(default)]
    pub svg: bool,
}

fn d_hbar() -> f64 {
    0.01
}
fn d_n() -> usize {
    100
}
fn d_m() -> usize {
    32
}
fn d_eps() -> f64 {
    0.1 * std::f64::consts::PI
}
fn d_steps() -> usize {
    10
}
fn d_seed() -> u64 {
    1
}
fn d_out() -> String {
    "lg-lab-out".to_string()
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(Error::Validation("hbar must be positive".into()));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::Validation("n and m must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Validation("eps must be positive".into()));
        }
        if self.resolution.bins == 0 || self.resolution.boundary_nodes < self.resolution.bins {
            return Err(Error::Validation("bins must satisfy 1 <= bins <= boundary_nodes".into()));
        }
        if let Some(m) = &self.moments {
            m.validate()?;
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::new(
            self.hbar,
            self.potential.couplings.clone(),
            self.potential.background,
            self.potential.origin_cutoff,
        )
    }

    /// The droplet map: explicit map, else inverse-solved moments, else the
    /// unit disk.
    pub fn droplet(&self) -> Result<LaurentMap> {
        if let Some(map) = &self.map {
            map.certify_univalent()?;
            return Ok(map.clone());
        }
        if let Some(m) = &self.moments {
            return map_from_moments(m, m.k_max().max(self.resolution.k_max), None);
        }
        Ok(LaurentMap::disk(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_json(r#"{"experiment": "gas"}"#).unwrap();
        assert_eq!(cfg.experiment, Experiment::Gas);
        assert_eq!(cfg.hbar, 0.01);
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.resolution.samples, 100_000);
        assert!(!cfg.svg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"experiment": "gas", "bogus": 1}"#).unwrap_err();
        assert!(err.contains("bogus"), "{err}");
        let err =
            RunConfig::from_json(r#"{"experiment": "gas", "sampler": {"zzz": 3}}"#).unwrap_err();
        assert!(err.contains("zzz"), "{err}");
    }

    #[test]
    fn full_config_round_trip() {
        let text = r#"{
            "experiment": "universality",
            "potential": {"background": {"kind": "uniform"}},
            "map": {"r": 1.0, "u": [[0.0, 0.0], [0.2, 0.0]]},
            "hbar": 0.02,
            "m": 2,
            "seed": 42,
            "resolution": {"samples": 50000},
            "output": "out/universality"
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.seed, 42);
        let map = cfg.droplet().unwrap();
        assert_eq!(map.u.len(), 2);
        let p = cfg.potential().unwrap();
        assert!(p.is_uniform());
    }

    #[test]
    fn moments_config_solves_map() {
        let text = r#"{
            "experiment": "evolve",
            "moments": {"t0": 0.96, "t": [[0.0,0.0],[0.1,0.0]], "v": [[0.0,0.0],[0.0,0.0]]}
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let map = cfg.droplet().unwrap();
        assert!((map.r - 1.0).abs() < 1e-7);
        assert!((map.u[1].re - 0.2).abs() < 1e-7);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json(r#"{"experiment": "gas", "hbar": -1.0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"experiment": "gas", "n": 0}"#).is_err());
    }
}
