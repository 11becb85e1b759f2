//! Importance-sampling estimate of the fluctuation partition function
//!
//!   Z = int...int |Delta(w(z))|^2 prod_j |w'(z_j)| e^{-2A_j/hbar} d^2z_j / hbar^{1/2},
//!
//! which is universal: (c_p)^{M/2} independent of the droplet shape, with
//! c_p = 2 pi^3 for the uniform background.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::GrowthDensity;
use crate::util::stream_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub shape_id: String,
    pub m: usize,
    pub hbar: f64,
    pub z_estimate: f64,
    /// Jackknife standard error over sample blocks.
    pub stderr: f64,
    /// (c_p)^{M/2} with the uniform-background constant.
    pub reference: f64,
    /// Z^{2/M}, the empirical prefactor constant.
    pub c_p_fitted: f64,
    pub ess: f64,
    pub n_samples: usize,
    pub seed: u64,
}

const BLOCKS: usize = 64;

/// Estimate Z by importance sampling. The proposal draws each point
/// independently: angle uniform in the uniformizing phi, normal coordinate
/// rho Gaussian around the unit circle with the position-dependent scale
/// sqrt(hbar/(4 sigma))/|z'| (the boundary-layer width in rho units); the
/// Vandermonde repulsion enters only through the weights.
///
/// Two normalization facts the estimator encodes:
/// - the integral runs over both sides of the curve: the layer Gaussian
///   e^{-2A/hbar} is two-sided and its full mass is what makes
///   Z = (c_p)^{M/2} (the exterior half alone integrates to 2^{-M} of it);
/// - the labeled-configuration integral overcounts unordered M-point
///   configurations by M!, so the estimate divides it out (the exact
///   two-particle overlap integrates to 2!, not 1 -- see the M = 2 test).
///
/// `a_scale` deliberately mis-scales A for sensitivity controls; 1.0 is the
/// physical value.
pub fn partition_function_mc_scaled(
    density: &GrowthDensity,
    m_points: usize,
    n_samples: usize,
    seed: u64,
    a_scale: f64,
    shape_id: &str,
) -> Result<UniversalityReport> {
    if m_points == 0 {
        return Err(Error::Validation("M must be at least 1".into()));
    }
    if n_samples < BLOCKS {
        return Err(Error::Validation(format!("need at least {BLOCKS} samples")));
    }
    let hbar = density.hbar;
    let map = &density.map;
    let rho_floor = (density.w_floor() + 0.02).max(0.05);
    let per_block = n_samples / BLOCKS;
    let n_used = per_block * BLOCKS;

    let block_stats: Vec<(f64, f64)> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, 2000 + b as u64);
            let mut sum_w = 0.0f64;
            let mut sum_w2 = 0.0f64;
            let mut ws = vec![Complex64::default(); m_points];
            for _ in 0..per_block {
                let mut log_w = 0.0f64;
                let mut dead = false;
                for wj in ws.iter_mut() {
                    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                    let foot = Complex64::from_polar(1.0, theta);
                    let dz_foot = map.eval_raw(foot).1.norm();
                    let s = (hbar / 4.0).sqrt() / dz_foot;
                    let xi: f64 = rng.sample(rand_distr::StandardNormal);
                    let rho = 1.0 + s * xi;
                    if rho <= rho_floor {
                        dead = true;
                        break;
                    }
                    let w = Complex64::from_polar(rho, theta);
                    *wj = w;
                    let (_, dz_norm, a) = density.point_terms_at(w);
                    // target (theta, rho) density: |z'| rho e^{-2A/hbar} / sqrt(hbar)
                    let target =
                        dz_norm.ln() + rho.ln() - 2.0 * a_scale * a / hbar - 0.5 * hbar.ln();
                    // proposal: (1/2pi) * Normal(rho; 1, s^2)
                    let proposal = -(std::f64::consts::TAU).ln()
                        - (s * std::f64::consts::TAU.sqrt()).ln()
                        - 0.5 * xi * xi;
                    log_w += target - proposal;
                }
                if dead {
                    continue;
                }
                for i in 0..m_points {
                    for j in (i + 1)..m_points {
                        let d = (ws[i] - ws[j]).norm();
                        if d == 0.0 {
                            dead = true;
                            break;
                        }
                        log_w += 2.0 * d.ln();
                    }
                    if dead {
                        break;
                    }
                }
                if dead {
                    continue;
                }
                let w = log_w.exp();
                sum_w += w;
                sum_w2 += w * w;
            }
            (sum_w, sum_w2)
        })
        .collect();

    let total_w: f64 = block_stats.iter().map(|(s, _)| s).sum();
    let total_w2: f64 = block_stats.iter().map(|(_, s2)| s2).sum();
    let m_factorial: f64 = (1..=m_points).map(|k| k as f64).product();
    let z_estimate = total_w / n_used as f64 / m_factorial;
    let ess = if total_w2 > 0.0 { total_w * total_w / total_w2 } else { 0.0 };
    if ess < 0.01 * n_used as f64 {
        return Err(Error::UnreliableEstimate { ess, n: n_used });
    }
    // Delete-one-block jackknife of the mean.
    let block_means: Vec<f64> =
        block_stats.iter().map(|(s, _)| s / per_block as f64 / m_factorial).collect();
    let mean_b = block_means.iter().sum::<f64>() / BLOCKS as f64;
    let var_b = block_means.iter().map(|m| (m - mean_b) * (m - mean_b)).sum::<f64>()
        / (BLOCKS as f64 - 1.0);
    let stderr = (var_b / BLOCKS as f64).sqrt();

    let reference = crate::growth::C_P_UNIFORM.powf(m_points as f64 / 2.0);
    Ok(UniversalityReport {
        shape_id: shape_id.to_string(),
        m: m_points,
        hbar,
        z_estimate,
        stderr,
        reference,
        c_p_fitted: z_estimate.powf(2.0 / m_points as f64),
        ess,
        n_samples: n_used,
        seed,
    })
}

/// Estimate the fluctuation partition function for the given droplet.
pub fn partition_function_mc(
    density: &GrowthDensity,
    m_points: usize,
    n_samples: usize,
    seed: u64,
    shape_id: &str,
) -> Result<UniversalityReport> {
    partition_function_mc_scaled(density, m_points, n_samples, seed, 1.0, shape_id)
}
