//! Angular statistics of the growth layer against the circular unitary
//! ensemble: in the w-plane the layer angles repel exactly like CUE
//! eigenphases, so nearest-neighbor spacings and arc number variance must
//! match a reference CUE sampler.

use rand::Rng;
use rayon::prelude::*;

use super::CheckReport;
use crate::conformal::invert_map;
use crate::error::{Error, Result};
use crate::growth::LayerSample;
use crate::util::{derive_seed, ks_critical_5pct, stream_rng, two_sample_ks, wrap_angle};

/// Size of the CUE reference ensemble and chain length per member.
#[derive(Debug, Clone, Copy)]
pub struct CueConfig {
    pub sweeps: u64,
    pub members: usize,
}

impl Default for CueConfig {
    fn default() -> Self {
        Self { sweeps: 200, members: 1000 }
    }
}

/// One CUE configuration of M angles by Metropolis on the circle,
/// targeting prod_{n<m} |e^{i a_n} - e^{i a_m}|^2.
pub fn sample_cue_angles(m: usize, seed: u64, sweeps: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 3);
    // Random global phase: the collective rotation mode mixes slowly.
    let phase: f64 = rng.gen_range(0.0..1.0);
    let mut angles: Vec<f64> = (0..m)
        .map(|j| {
            let jitter: f64 = rng.gen_range(-0.4..0.4);
            wrap_angle(std::f64::consts::TAU * (j as f64 + phase + jitter) / m as f64)
        })
        .collect();
    let mut step = std::f64::consts::TAU / m as f64 * 0.6;
    let burn = sweeps / 5;
    let pair_sum = |angles: &[f64], j: usize, aj: f64| -> f64 {
        let mut s = 0.0;
        for (i, &ai) in angles.iter().enumerate() {
            if i == j {
                continue;
            }
            // |e^{i a} - e^{i b}| = 2 |sin((a-b)/2)|
            let d = 2.0 * ((aj - ai) / 2.0).sin().abs();
            s += if d > 0.0 { 2.0 * d.ln() } else { f64::NEG_INFINITY };
        }
        s
    };
    for sweep in 0..sweeps {
        let mut accepted = 0u32;
        for _ in 0..m {
            let j = rng.gen_range(0..m);
            let d: f64 = rng.sample(rand_distr::StandardNormal);
            let proposal = wrap_angle(angles[j] + step * d);
            let delta = pair_sum(&angles, j, proposal) - pair_sum(&angles, j, angles[j]);
            if delta >= 0.0 || rng.gen::<f64>() < delta.exp() {
                angles[j] = proposal;
                accepted += 1;
            }
        }
        if sweep < burn {
            let rate = accepted as f64 / m as f64;
            if rate > 0.4 {
                step = (step * 1.1).min(std::f64::consts::PI);
            } else if rate < 0.25 {
                step *= 0.9;
            }
        }
    }
    angles
}

/// Nearest-neighbor spacings of a circular configuration, normalized so the
/// mean spacing is 1.
pub fn circular_spacings(angles: &[f64]) -> Vec<f64> {
    let m = angles.len();
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let next = if j + 1 == m {
            sorted[0] + std::f64::consts::TAU
        } else {
            sorted[j + 1]
        };
        out.push((next - sorted[j]) * m as f64 / std::f64::consts::TAU);
    }
    out
}

/// CDF of the angular gap between the two points of a CUE pair (M = 2):
/// density sin^2(u/2)/pi on [0, 2 pi).
pub fn cue_gap_cdf_m2(u: f64) -> f64 {
    (u - u.sin()) / std::f64::consts::TAU
}

fn number_variance(ensembles: &[Vec<f64>], arc: f64) -> f64 {
    // Variance of counts in a fixed arc, averaged over 16 arc positions.
    let mut acc = 0.0;
    let positions = 16;
    for k in 0..positions {
        let lo = std::f64::consts::TAU * k as f64 / positions as f64;
        let hi = lo + arc;
        let counts: Vec<f64> = ensembles
            .iter()
            .map(|angles| {
                angles
                    .iter()
                    .filter(|&&a| {
                        let shifted = if a < lo { a + std::f64::consts::TAU } else { a };
                        shifted >= lo && shifted < hi
                    })
                    .count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
            / (counts.len() as f64 - 1.0);
        acc += var;
    }
    acc / positions as f64
}

/// Compare the angular law of a layer ensemble against a CUE reference chain
/// by a two-sample Kolmogorov-Smirnov test on nearest-neighbor spacings at
/// the 5% level. Number variances in a quarter arc are reported alongside.
pub fn cue_angular_statistics(
    samples: &[LayerSample],
    reference_seed: u64,
    cfg: CueConfig,
) -> Result<CheckReport> {
    if samples.is_empty() {
        return Err(Error::Validation("need at least one layer sample".into()));
    }
    let m = samples[0].m;
    let map = &samples[0].map;
    let mut layer_angles: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    for s in samples {
        let mut angles = Vec::with_capacity(s.m);
        for &z in &s.points {
            angles.push(wrap_angle(invert_map(map, z)?.arg()));
        }
        layer_angles.push(angles);
    }
    let layer_spacings: Vec<f64> =
        layer_angles.iter().flat_map(|a| circular_spacings(a)).collect();

    let cue_angles: Vec<Vec<f64>> = (0..cfg.members)
        .into_par_iter()
        .map(|i| sample_cue_angles(m, derive_seed(reference_seed, i as u64), cfg.sweeps))
        .collect();
    let cue_spacings: Vec<f64> = cue_angles.iter().flat_map(|a| circular_spacings(a)).collect();

    let d = two_sample_ks(&layer_spacings, &cue_spacings);
    let crit = ks_critical_5pct(layer_spacings.len(), cue_spacings.len());
    let arc = std::f64::consts::PI / 2.0;
    Ok(CheckReport {
        name: "cue_angular_statistics".to_string(),
        lhs: d,
        rhs: 0.0,
        abs_error: d,
        rel_error: d / crit,
        tolerance: crit,
        passed: d <= crit,
        resolution: Default::default(),
        seed: Some(reference_seed),
    }
    .with_resolution("m", m as f64)
    .with_resolution("layer_members", layer_angles.len() as f64)
    .with_resolution("cue_members", cfg.members as f64)
    .with_resolution("number_variance_layer_quarter_arc", number_variance(&layer_angles, arc))
    .with_resolution("number_variance_cue_quarter_arc", number_variance(&cue_angles, arc)))
}
