//! The stochastic growth core: modified Schwarz potential, one-point and
//! joint M-point growth densities, MCMC layer sampling, classical
//! width/velocity, and classical (Darcy) evolution of the droplet by
//! moment conservation.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{boundary_grid, invert_map, invert_map_annulus, Boundary, LaurentMap, SchwarzSeries};
use crate::error::{Error, Result};
use crate::potential::{map_from_moments, moments_from_map, MomentVector, Potential};
use crate::util::stream_rng;

/// Universal prefactor constant of the quasi-harmonic (uniform) background.
pub const C_P_UNIFORM: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// Cached evaluator for the generating function Omega, the modified Schwarz
/// potential A = U/2 - Re Omega, and the one-point / joint growth densities.
///
/// Omega is the antiderivative of the Schwarz function, fixed by
/// Re Omega = U/2 on the boundary. Its z-Laurent series converges only in
/// the annulus outside the Schwarz-function singularities (the foci of an
/// ellipse), which for eccentric shapes excludes part of the curve itself.
/// The evaluator therefore represents Omega through the w-plane:
///
///   Omega(z) = sum_k t_k z^k + t0 (ln r + ln w(z)) + Phi(w(z)) + C,
///
/// with Phi analytic in |w| > w_floor and reconstructed from the boundary
/// data U/2 - Re sum t_k z^k - t0 ln r by a discrete Fourier transform.
/// This is the analytic continuation of the z-series and converges
/// geometrically throughout the growth layer, on both sides of the curve.
pub struct GrowthDensity {
    pub map: LaurentMap,
    pub potential: Potential,
    pub moments: MomentVector,
    pub hbar: f64,
    /// Prefactor constant c_p; 2 pi^3 for the uniform background, an input
    /// parameter otherwise (the universality machinery estimates it).
    pub c_p: f64,
    series: SchwarzSeries,
    /// Fourier tail coefficients c_m of Phi(w) = a0 + sum_m c_m w^{-m}.
    tail: Vec<Complex64>,
    tail_a0: f64,
    /// Additive constant fixing A = 0 at the anchor node phi = 0.
    anchor_c: f64,
    /// Inner radius of the w-annulus where the continuation is trusted.
    w_floor: f64,
}

const FOURIER_GRID: usize = 2048;
const FOURIER_MODES: usize = 600;

impl GrowthDensity {
    pub fn new(map: &LaurentMap, p: &Potential, m: &MomentVector, hbar: f64) -> Result<Self> {
        Self::with_c_p(map, p, m, hbar, C_P_UNIFORM)
    }

    pub fn with_c_p(
        map: &LaurentMap,
        p: &Potential,
        m: &MomentVector,
        hbar: f64,
        c_p: f64,
    ) -> Result<Self> {
        if !p.is_uniform() {
            return Err(Error::Validation(
                "growth densities require the uniform background".into(),
            ));
        }
        if !(hbar > 0.0) {
            return Err(Error::Validation("hbar must be positive".into()));
        }
        m.validate()?;
        let series = crate::conformal::schwarz_series(m)?;

        // Boundary data of the analytic tail in the w-plane.
        let n = FOURIER_GRID;
        let mut g = vec![0.0f64; n];
        let mut scale = 0.0f64;
        for (j, gj) in g.iter_mut().enumerate() {
            let phi = std::f64::consts::TAU * j as f64 / n as f64;
            let w = Complex64::from_polar(1.0, phi);
            let z = map.eval_raw(w).0;
            let u = p.eval_u(z)?;
            *gj = 0.5 * u - poly_re(&m.t, z) - m.t0 * map.r.ln();
            scale = scale.max(gj.abs());
        }
        let a0 = g.iter().sum::<f64>() / n as f64;
        let mut tail = Vec::with_capacity(FOURIER_MODES);
        for mm in 1..=FOURIER_MODES.min(n / 2 - 1) {
            let mut c = Complex64::default();
            for (j, &gj) in g.iter().enumerate() {
                let phi = std::f64::consts::TAU * (j as f64) * (mm as f64) / n as f64;
                c += gj * Complex64::from_polar(1.0, phi);
            }
            tail.push(c * 2.0 / n as f64);
        }
        // Coefficients at the DFT rounding floor are noise; evaluating them
        // at |w| < 1 would amplify that noise by w^{-m}, so they must go.
        let noise_floor = 1e-12 * scale.max(1.0);
        while tail.last().is_some_and(|c| c.norm() < noise_floor) {
            tail.pop();
        }

        // Inner validity radius: walk inward until z'(w) starts degenerating.
        let mut w_floor: f64 = 0.97;
        let mut rho = 0.97;
        while rho > 0.35 {
            let min_dz = (0..256)
                .map(|j| {
                    let phi = std::f64::consts::TAU * j as f64 / 256.0;
                    map.eval_raw(Complex64::from_polar(rho, phi)).1.norm()
                })
                .fold(f64::INFINITY, f64::min);
            if min_dz < 0.15 * map.r {
                break;
            }
            w_floor = rho;
            rho -= 0.02;
        }

        let mut gd = Self {
            map: map.clone(),
            potential: p.clone(),
            moments: m.clone(),
            hbar,
            c_p,
            series,
            tail,
            tail_a0: a0,
            anchor_c: 0.0,
            w_floor,
        };
        // Fix the constant so A vanishes at the anchor node phi = 0.
        let w0 = Complex64::new(1.0, 0.0);
        let z0 = map.eval_raw(w0).0;
        let u0 = p.eval_u(z0)?;
        gd.anchor_c = 0.5 * u0 - gd.omega_at(z0, w0).re;
        Ok(gd)
    }

    pub fn w_floor(&self) -> f64 {
        self.w_floor
    }

    pub fn series(&self) -> &SchwarzSeries {
        &self.series
    }

    /// Omega evaluated with the w-preimage already known.
    fn omega_at(&self, z: Complex64, w: Complex64) -> Complex64 {
        let mut omega = Complex64::new(self.tail_a0 + self.anchor_c, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        for t in &self.moments.t {
            zk *= z;
            omega += t * zk;
        }
        omega += self.moments.t0 * (Complex64::new(self.map.r.ln(), 0.0) + w.ln());
        let winv = 1.0 / w;
        let mut wm = winv;
        for c in &self.tail {
            omega += c * wm;
            wm *= winv;
        }
        omega
    }

    /// Reference evaluation by the termwise z-series antiderivative,
    /// sum t_k z^k + t0 Ln z - sum (v_k / k) z^{-k} + C. Valid only in the
    /// annulus outside the Schwarz singularities; used for cross-checks.
    pub fn omega_series(&self, z: Complex64) -> Complex64 {
        let mut omega = Complex64::new(0.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        for t in &self.moments.t {
            zk *= z;
            omega += t * zk;
        }
        omega += self.moments.t0 * z.ln();
        let zinv = 1.0 / z;
        let mut zmk = Complex64::new(1.0, 0.0);
        for (i, v) in self.moments.v.iter().enumerate() {
            zmk *= zinv;
            omega -= v / (i + 1) as f64 * zmk;
        }
        omega + self.series_anchor()
    }

    fn series_anchor(&self) -> f64 {
        // Anchor the z-series the same way: Re Omega = U/2 at phi = 0.
        let z0 = self.map.eval_raw(Complex64::new(1.0, 0.0)).0;
        let mut re0 = 0.0;
        let mut zk = Complex64::new(1.0, 0.0);
        for t in &self.moments.t {
            zk *= z0;
            re0 += (t * zk).re;
        }
        re0 += self.moments.t0 * z0.norm().ln();
        let zinv = 1.0 / z0;
        let mut zmk = Complex64::new(1.0, 0.0);
        for (i, v) in self.moments.v.iter().enumerate() {
            zmk *= zinv;
            re0 -= (v / (i + 1) as f64 * zmk).re;
        }
        0.5 * z0.norm_sqr() - re0
    }

    fn invert(&self, z: Complex64) -> Result<Complex64> {
        invert_map_annulus(&self.map, z, self.w_floor)
    }

    /// Generating function Omega(z) in the layer annulus.
    pub fn omega(&self, z: Complex64) -> Result<Complex64> {
        let w = self.invert(z)?;
        Ok(self.omega_at(z, w))
    }

    /// Modified Schwarz potential A(z) = U/2 - Re Omega; zero with zero
    /// gradient on the curve, growing like sigma * (normal distance)^2.
    pub fn schwarz_potential(&self, z: Complex64) -> Result<f64> {
        let w = self.invert(z)?;
        Ok(self.a_at(z, w))
    }

    fn a_at(&self, z: Complex64, w: Complex64) -> f64 {
        0.5 * z.norm_sqr() - self.omega_at(z, w).re
    }

    /// (z, |z'(w)|, A) at a w-plane location.
    pub(crate) fn point_terms_at(&self, w: Complex64) -> (Complex64, f64, f64) {
        let (z, dz) = self.map.eval_raw(w);
        (z, dz.norm(), self.a_at(z, w))
    }

    /// log P(z) for one added eigenvalue (the M = 1 reduction of the joint
    /// density): -1/2 log(c_p hbar) + log|w'(z)| - 2 A(z)/hbar.
    pub fn one_point_log(&self, z: Complex64) -> Result<f64> {
        self.joint_log(std::slice::from_ref(&z))
    }

    /// log P(z_1..z_M): the Vandermonde of the w-images plus per-point
    /// one-point factors.
    pub fn joint_log(&self, points: &[Complex64]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::Validation("joint density needs M >= 1 points".into()));
        }
        let ws: Vec<Complex64> = points
            .iter()
            .map(|&z| self.invert(z))
            .collect::<Result<_>>()?;
        let mut log_p = -(points.len() as f64) * 0.5 * (self.c_p * self.hbar).ln();
        for i in 0..ws.len() {
            for j in (i + 1)..ws.len() {
                let d = (ws[i] - ws[j]).norm();
                if d == 0.0 {
                    return Err(Error::CoincidentPoints(j));
                }
                log_p += 2.0 * d.ln();
            }
        }
        for &w in &ws {
            let (_, dz_norm, a) = self.point_terms_at(w);
            // |w'(z)| = 1 / |z'(w)|
            log_p += -dz_norm.ln() - 2.0 * a / self.hbar;
        }
        Ok(log_p)
    }
}

fn poly_re(t: &[Complex64], z: Complex64) -> f64 {
    let mut s = 0.0;
    let mut zk = Complex64::new(1.0, 0.0);
    for tt in t {
        zk *= z;
        s += (tt * zk).re;
    }
    s
}

/// Generating function Omega(z) = int^z S, fixed by Re Omega = U/2 at the
/// phi = 0 anchor (so the modified Schwarz potential vanishes there).
pub fn generating_function(
    map: &LaurentMap,
    p: &Potential,
    m: &MomentVector,
    z: Complex64,
) -> Result<Complex64> {
    GrowthDensity::new(map, p, m, 1.0)?.omega(z)
}

/// Modified Schwarz potential A(z) = U/2 - Re Omega(z).
pub fn schwarz_potential(
    map: &LaurentMap,
    p: &Potential,
    m: &MomentVector,
    z: Complex64,
) -> Result<f64> {
    GrowthDensity::new(map, p, m, 1.0)?.schwarz_potential(z)
}

/// One-point growth density, log P(z) = -1/2 log(c_p hbar) + log|w'| - 2A/hbar.
pub fn one_point_logdensity(
    map: &LaurentMap,
    p: &Potential,
    m: &MomentVector,
    hbar: f64,
    z: Complex64,
) -> Result<f64> {
    GrowthDensity::new(map, p, m, hbar)?.one_point_log(z)
}

/// Joint M-point growth density.
pub fn joint_logdensity(
    map: &LaurentMap,
    p: &Potential,
    m: &MomentVector,
    hbar: f64,
    points: &[Complex64],
) -> Result<f64> {
    GrowthDensity::new(map, p, m, hbar)?.joint_log(points)
}

/// M sampled eigenvalue positions in the exterior, with chain diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerSample {
    pub points: Vec<Complex64>,
    pub m: usize,
    pub seed: u64,
    pub sweeps: u64,
    pub acceptance_tangential: f64,
    pub acceptance_normal: f64,
    /// Map and scale the sample was drawn against.
    pub map: LaurentMap,
    pub hbar: f64,
}

impl LayerSample {
    /// Mixing diagnostic: either move type accepting under 5% after
    /// adaptation froze flags a stuck chain.
    pub fn poor_mixing(&self) -> bool {
        self.acceptance_tangential < 0.05 || self.acceptance_normal < 0.05
    }
}

/// Metropolis chain for the M-point layer density, parametrized in the
/// w-plane as (theta_j, rho_j) with rho_j > 1 (points strictly exterior).
/// Proposals decompose into tangential (theta) and normal (rho) moves with
/// scales ~ 2 pi / M and ~ sqrt(hbar)/|z'| respectively, adapted during
/// burn-in. The (theta, rho) random walk is symmetric, so plain Metropolis
/// against the density including the |z'(w)|^2 rho Jacobian is exact.
pub struct LayerSampler<'a> {
    density: &'a GrowthDensity,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    w: Vec<Complex64>,
    point_log: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
    s_theta: f64,
    s_rho: f64,
    adapting: bool,
    acc_t: u64,
    prop_t: u64,
    acc_n: u64,
    prop_n: u64,
    sweeps_done: u64,
}

impl<'a> LayerSampler<'a> {
    pub fn new(density: &'a GrowthDensity, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Validation("layer needs M >= 1 points".into()));
        }
        let mut rng = stream_rng(seed, 1);
        let r_typ = density.map.r;
        let s_rho0 = (density.hbar.sqrt() / (2.0 * r_typ)).min(0.2);
        // The collective rotation of the angular lattice relaxes slowly, so
        // the initial lattice phase must be randomized per chain or the
        // whole ensemble shares one phase and bin statistics never decorrelate.
        let phase: f64 = rng.gen_range(0.0..1.0);
        let mut theta = Vec::with_capacity(m);
        let mut rho = Vec::with_capacity(m);
        for j in 0..m {
            let jitter: f64 = rng.gen_range(-0.5..0.5);
            theta.push(crate::util::wrap_angle(
                std::f64::consts::TAU * (j as f64 + phase + 0.5 * jitter) / m as f64,
            ));
            let x: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
            rho.push(1.0 + s_rho0 * (x.abs() + 0.05));
        }
        let w: Vec<Complex64> = theta
            .iter()
            .zip(&rho)
            .map(|(&t, &r)| Complex64::from_polar(r, t))
            .collect();
        let point_log = w.iter().map(|&wj| Self::point_log(density, wj)).collect();
        Ok(Self {
            density,
            theta,
            rho,
            w,
            point_log,
            rng,
            s_theta: std::f64::consts::TAU / m as f64 * 0.6,
            s_rho: s_rho0,
            adapting: true,
            acc_t: 0,
            prop_t: 0,
            acc_n: 0,
            prop_n: 0,
            sweeps_done: 0,
        })
    }

    /// Per-point part of the log target in (theta, rho) coordinates:
    /// log|z'(w)| + log rho - 2 A / hbar (the |z'|^2 rho Jacobian combined
    /// with the 1/|z'| of |w'(z)|).
    fn point_log(density: &GrowthDensity, w: Complex64) -> f64 {
        let (_, dz_norm, a) = density.point_terms_at(w);
        dz_norm.ln() + w.norm().ln() - 2.0 * a / density.hbar
    }

    fn pair_sum(&self, j: usize, wj: Complex64) -> Option<f64> {
        let mut s = 0.0;
        for (i, &wi) in self.w.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = (wj - wi).norm();
            if d == 0.0 {
                return None;
            }
            s += 2.0 * d.ln();
        }
        Some(s)
    }

    fn micro_step(&mut self) {
        let m = self.theta.len();
        let j = self.rng.gen_range(0..m);
        let tangential = self.rng.gen::<f64>() < 0.5;
        let (theta_new, rho_new) = if tangential {
            self.prop_t += 1;
            let d: f64 = self.rng.sample(rand_distr::StandardNormal);
            (crate::util::wrap_angle(self.theta[j] + self.s_theta * d), self.rho[j])
        } else {
            self.prop_n += 1;
            let d: f64 = self.rng.sample(rand_distr::StandardNormal);
            (self.theta[j], self.rho[j] + self.s_rho * d)
        };
        // Interior proposals are rejected outright.
        if rho_new <= 1.0 {
            return;
        }
        let w_new = Complex64::from_polar(rho_new, theta_new);
        let pair_old = match self.pair_sum(j, self.w[j]) {
            Some(v) => v,
            None => return,
        };
        let pair_new = match self.pair_sum(j, w_new) {
            Some(v) => v,
            None => return,
        };
        let pl_new = Self::point_log(self.density, w_new);
        let delta = pair_new - pair_old + pl_new - self.point_log[j];
        if delta >= 0.0 || self.rng.gen::<f64>() < delta.exp() {
            self.theta[j] = theta_new;
            self.rho[j] = rho_new;
            self.w[j] = w_new;
            self.point_log[j] = pl_new;
            if tangential {
                self.acc_t += 1;
            } else {
                self.acc_n += 1;
            }
        }
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.theta.len() {
            self.micro_step();
        }
        self.sweeps_done += 1;
        if self.adapting {
            if self.prop_t > 0 {
                let r = self.acc_t as f64 / self.prop_t as f64;
                if r > 0.4 {
                    self.s_theta = (self.s_theta * 1.1).min(std::f64::consts::PI);
                } else if r < 0.25 {
                    self.s_theta *= 0.9;
                }
            }
            if self.prop_n > 0 {
                let r = self.acc_n as f64 / self.prop_n as f64;
                if r > 0.4 {
                    self.s_rho *= 1.1;
                } else if r < 0.25 {
                    self.s_rho *= 0.9;
                }
            }
        }
    }

    pub fn freeze_adaptation(&mut self) {
        self.adapting = false;
        self.acc_t = 0;
        self.prop_t = 0;
        self.acc_n = 0;
        self.prop_n = 0;
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.w.iter().map(|&w| self.density.map.eval_raw(w).0).collect()
    }

    fn into_sample(self, seed: u64) -> LayerSample {
        let points = self.points();
        LayerSample {
            m: points.len(),
            points,
            seed,
            sweeps: self.sweeps_done,
            acceptance_tangential: if self.prop_t == 0 {
                0.0
            } else {
                self.acc_t as f64 / self.prop_t as f64
            },
            acceptance_normal: if self.prop_n == 0 {
                0.0
            } else {
                self.acc_n as f64 / self.prop_n as f64
            },
            map: self.density.map.clone(),
            hbar: self.density.hbar,
        }
    }
}

pub(crate) fn sample_layer_with(
    density: &GrowthDensity,
    m_points: usize,
    seed: u64,
    sweeps: u64,
) -> Result<LayerSample> {
    let mut sampler = LayerSampler::new(density, m_points, seed)?;
    let burn = sweeps / 5;
    for _ in 0..burn {
        sampler.sweep();
    }
    sampler.freeze_adaptation();
    for _ in burn..sweeps {
        sampler.sweep();
    }
    Ok(sampler.into_sample(seed))
}

/// Draw one M-point layer configuration by Metropolis; 20% of the sweeps are
/// burn-in with proposal adaptation, then the scales freeze.
pub fn sample_layer(
    map: &LaurentMap,
    p: &Potential,
    m: &MomentVector,
    hbar: f64,
    m_points: usize,
    seed: u64,
    sweeps: u64,
) -> Result<LayerSample> {
    let density = GrowthDensity::new(map, p, m, hbar)?;
    sample_layer_with(&density, m_points, seed, sweeps)
}

/// How sampled points are assigned to boundary bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthAssignment {
    /// By the phase of w(z) (the conformal foot point). Default.
    ConformalFoot,
    /// By the nearest boundary node in the z-plane, for cross-validation.
    NearestNode,
}

/// Per-bin layer width statistics from an ensemble of layer samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidthHistogram {
    pub phi_low: Vec<f64>,
    pub phi_high: Vec<f64>,
    /// Width estimate h(phi): area collected per unit arc length over sigma.
    pub mean_h: Vec<f64>,
    /// Standard error of mean_h across the ensemble.
    pub stderr: Vec<f64>,
    /// Raw mean normal displacement of the points in each bin.
    pub mean_displacement: Vec<f64>,
    pub counts: Vec<u64>,
    /// Bins that received no points (flagged, not an error).
    pub empty: Vec<bool>,
    pub hbar: f64,
}

impl WidthHistogram {
    pub fn bins(&self) -> usize {
        self.mean_h.len()
    }

    /// Total collected area sum h sigma |dz| implied by the histogram.
    pub fn collected_area(&self, b: &Boundary) -> f64 {
        let bins = self.bins();
        let mut total = 0.0;
        for (bin, h) in self.mean_h.iter().enumerate() {
            let ds = bin_arc_length(b, bins, bin);
            total += h * bin_sigma(b, bins, bin) * ds;
        }
        total
    }
}

fn bin_arc_length(b: &Boundary, bins: usize, bin: usize) -> f64 {
    let dphi = std::f64::consts::TAU / bins as f64;
    let lo = dphi * bin as f64;
    let hi = lo + dphi;
    let node_dphi = b.delta_phi();
    b.nodes
        .iter()
        .filter(|n| n.phi >= lo && n.phi < hi)
        .map(|n| n.dz_dw.norm() * node_dphi)
        .sum()
}

fn bin_sigma(b: &Boundary, bins: usize, bin: usize) -> f64 {
    let dphi = std::f64::consts::TAU / bins as f64;
    let lo = dphi * bin as f64;
    let hi = lo + dphi;
    let mut s = 0.0;
    let mut c = 0;
    for n in &b.nodes {
        if n.phi >= lo && n.phi < hi {
            s += n.sigma;
            c += 1;
        }
    }
    if c == 0 {
        1.0
    } else {
        s / c as f64
    }
}

/// Assign each sampled point a normal displacement from the boundary
/// (displacement = (|w(z)| - 1) |z'(w/|w|)| at the conformal foot point),
/// bin by the foot angle, and estimate the layer width per bin.
///
/// Each point carries one quantum of area hbar, so the width estimate is
/// h(bin) = hbar * (points per unit arc length) / sigma, which is the
/// quantity Darcy's law predicts and is independent of the layer's internal
/// (half-Gaussian) profile. The raw mean displacement per bin is reported
/// alongside; its absolute scale carries the profile factor.
pub fn layer_width_histogram(
    samples: &[LayerSample],
    b: &Boundary,
    bins: usize,
    assignment: WidthAssignment,
) -> Result<WidthHistogram> {
    if samples.is_empty() {
        return Err(Error::Validation("width histogram needs at least one sample".into()));
    }
    if bins == 0 || b.n_nodes() < bins {
        return Err(Error::Validation(
            "width histogram needs 1 <= bins <= boundary nodes".into(),
        ));
    }
    let map = &samples[0].map;
    let hbar = samples[0].hbar;
    for s in samples {
        if s.map != *map {
            return Err(Error::Validation("layer samples come from different maps".into()));
        }
    }
    let dphi = std::f64::consts::TAU / bins as f64;
    let n_samples = samples.len();
    let mut counts_per = vec![vec![0.0f64; bins]; n_samples];
    let mut disp_sum = vec![0.0f64; bins];
    let mut counts = vec![0u64; bins];
    for (si, s) in samples.iter().enumerate() {
        for &z in &s.points {
            let w = invert_map(map, z)?;
            let theta = crate::util::wrap_angle(w.arg());
            let foot = Complex64::from_polar(1.0, theta);
            let dz_foot = map.eval_raw(foot).1.norm();
            let disp = (w.norm() - 1.0) * dz_foot;
            let bin = match assignment {
                WidthAssignment::ConformalFoot => ((theta / dphi) as usize).min(bins - 1),
                WidthAssignment::NearestNode => {
                    let mut best = 0usize;
                    let mut best_d = f64::INFINITY;
                    for (ni, node) in b.nodes.iter().enumerate() {
                        let d = (node.z - z).norm();
                        if d < best_d {
                            best_d = d;
                            best = ni;
                        }
                    }
                    ((b.nodes[best].phi / dphi) as usize).min(bins - 1)
                }
            };
            counts_per[si][bin] += 1.0;
            disp_sum[bin] += disp;
            counts[bin] += 1;
        }
    }
    let mut mean_h = vec![0.0; bins];
    let mut stderr = vec![0.0; bins];
    let mut mean_disp = vec![0.0; bins];
    let mut empty = vec![false; bins];
    let mut phi_low = vec![0.0; bins];
    let mut phi_high = vec![0.0; bins];
    for bin in 0..bins {
        phi_low[bin] = dphi * bin as f64;
        phi_high[bin] = dphi * (bin + 1) as f64;
        let ds = bin_arc_length(b, bins, bin);
        let sigma = bin_sigma(b, bins, bin);
        let vals: Vec<f64> = counts_per
            .iter()
            .map(|row| hbar * row[bin] / (sigma * ds))
            .collect();
        let mean = vals.iter().sum::<f64>() / n_samples as f64;
        let var = if n_samples > 1 {
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_samples as f64 - 1.0)
        } else {
            0.0
        };
        mean_h[bin] = mean;
        stderr[bin] = (var / n_samples as f64).sqrt();
        if counts[bin] == 0 {
            empty[bin] = true;
        } else {
            mean_disp[bin] = disp_sum[bin] / counts[bin] as f64;
        }
    }
    Ok(WidthHistogram {
        phi_low,
        phi_high,
        mean_h,
        stderr,
        mean_displacement: mean_disp,
        counts,
        empty,
        hbar,
    })
}

/// Classical layer width at a boundary node: h_cl = (eps / (2 pi sigma)) |w'(z)|,
/// from the Green's-function solution with partial_n G(z, inf) = -|w'(z)|.
pub fn classical_width(b: &Boundary, eps: f64, node_index: usize) -> f64 {
    let node = &b.nodes[node_index];
    eps / (std::f64::consts::TAU * node.sigma) * node.wprime_abs
}

/// Darcy's law: v_n = (eps_rate / (2 pi sigma)) |w'(z)|.
pub fn classical_velocity(b: &Boundary, eps_rate: f64, node_index: usize) -> f64 {
    classical_width(b, eps_rate, node_index)
}

/// One step of classical evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthStep {
    pub before: LaurentMap,
    pub after: LaurentMap,
    pub eps: f64,
    /// Moments measured on `after`; exterior entries match `before` by
    /// construction of the step.
    pub conserved_moments: MomentVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuspInfo {
    /// Index of the step at which univalence failed.
    pub step: usize,
    pub min_abs_dz: f64,
}

/// Result of evolve_classical: the initial map, the completed steps, and
/// cusp information if the evolution terminated early (the last valid map
/// is then `maps().last()`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evolution {
    pub initial: LaurentMap,
    pub steps: Vec<GrowthStep>,
    pub cusp: Option<CuspInfo>,
}

impl Evolution {
    pub fn maps(&self) -> Vec<LaurentMap> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.initial.clone());
        out.extend(self.steps.iter().map(|s| s.after.clone()));
        out
    }
}

enum StepOutcome {
    Advanced(LaurentMap),
    Cusp(f64),
}

/// Advance the droplet area by eps while conserving the exterior moments,
/// splitting the increment recursively when the inverse solve fails. A step
/// that lands past the cusp time has no solution: Newton stagnates rather
/// than producing a cusped map, so persistent failure with a collapsed
/// min |z'| is a cusp, anything else a genuine solver failure.
fn advance(
    current: &LaurentMap,
    p: &Potential,
    k: usize,
    eps: f64,
    depth: usize,
) -> Result<StepOutcome> {
    let mut target = moments_from_map(current, p, k)?;
    target.t0 += eps / std::f64::consts::PI;
    match map_from_moments(&target, k, Some(current)) {
        Ok(m) => Ok(StepOutcome::Advanced(m)),
        Err(Error::Cusp { min_abs_dz }) => Ok(StepOutcome::Cusp(min_abs_dz)),
        Err(e) => {
            if depth >= 6 {
                let min_abs_dz = current.univalence_report().min_abs_dz;
                if min_abs_dz < 0.2 * current.r {
                    return Ok(StepOutcome::Cusp(min_abs_dz));
                }
                return Err(e);
            }
            match advance(current, p, k, eps / 2.0, depth + 1)? {
                StepOutcome::Cusp(v) => Ok(StepOutcome::Cusp(v)),
                StepOutcome::Advanced(mid) => advance(&mid, p, k, eps / 2.0, depth + 1),
            }
        }
    }
}

/// Classical (Darcy) evolution by moment conservation: per step, measure the
/// moments, advance t0 by eps/pi (area grows by eps), hold every t_k fixed,
/// and re-solve the inverse moment problem seeded at the previous map.
/// Stops with cusp information if univalence fails; Newton failures propagate.
pub fn evolve_classical(
    map: &LaurentMap,
    p: &Potential,
    eps: f64,
    n_steps: usize,
) -> Result<Evolution> {
    if !(eps > 0.0) {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let k = map.coeff_count().max(1);
    let mut current = map.clone();
    let mut steps = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let before = moments_from_map(&current, p, k)?;
        let next = match advance(&current, p, k, eps, 0) {
            Ok(StepOutcome::Advanced(m)) => m,
            Ok(StepOutcome::Cusp(min_abs_dz)) => {
                return Ok(Evolution {
                    initial: map.clone(),
                    steps,
                    cusp: Some(CuspInfo { step, min_abs_dz }),
                });
            }
            Err(e) => return Err(e),
        };
        let after = moments_from_map(&next, p, k)?;
        let area_growth = after.t0 - before.t0;
        if (area_growth - eps / std::f64::consts::PI).abs() > 1e-8 {
            return Err(Error::Accuracy(format!(
                "step {step}: t0 advanced by {:.3e} instead of {:.3e}",
                area_growth,
                eps / std::f64::consts::PI
            )));
        }
        for kk in 0..k {
            if (after.t[kk] - before.t[kk]).norm() > 1e-8 {
                return Err(Error::Accuracy(format!(
                    "step {step}: exterior moment t_{} drifted by {:.3e}",
                    kk + 1,
                    (after.t[kk] - before.t[kk]).norm()
                )));
            }
        }
        steps.push(GrowthStep {
            before: current.clone(),
            after: next.clone(),
            eps,
            conserved_moments: after,
        });
        current = next;
    }
    Ok(Evolution { initial: map.clone(), steps, cusp: None })
}

/// Pointwise comparison of the empirical mean layer width against the
/// classical (Darcy) width over an ensemble of layer samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DarcyReport {
    pub l2_rel_error: f64,
    pub m: usize,
    pub hbar: f64,
    pub ensemble: usize,
    pub bins: usize,
    pub phi_mid: Vec<f64>,
    pub mean_h: Vec<f64>,
    pub stderr: Vec<f64>,
    pub classical: Vec<f64>,
    pub seed: u64,
}

/// Sampler settings for the Darcy agreement check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DarcyConfig {
    pub sweeps: u64,
    pub bins: usize,
    pub boundary_nodes: usize,
}

impl Default for DarcyConfig {
    fn default() -> Self {
        Self { sweeps: 240, bins: 32, boundary_nodes: 512 }
    }
}

/// Run a layer-sample ensemble, build the width histogram, and report the
/// relative L2 error against h_cl = (eps / 2 pi sigma) |w'| with eps = M hbar.
pub fn check_darcy_agreement(
    map: &LaurentMap,
    p: &Potential,
    hbar: f64,
    m_points: usize,
    ensemble: usize,
    seed: u64,
    cfg: DarcyConfig,
) -> Result<DarcyReport> {
    if ensemble == 0 {
        return Err(Error::Validation("ensemble must be nonempty".into()));
    }
    let m = moments_from_map(map, p, map.coeff_count().max(8))?;
    let density = GrowthDensity::new(map, p, &m, hbar)?;
    let samples: Vec<LayerSample> = (0..ensemble)
        .into_par_iter()
        .map(|i| {
            sample_layer_with(&density, m_points, crate::util::derive_seed(seed, i as u64), cfg.sweeps)
        })
        .collect::<Result<_>>()?;
    let b = boundary_grid(map, p, cfg.boundary_nodes)?;
    let hist = layer_width_histogram(&samples, &b, cfg.bins, WidthAssignment::ConformalFoot)?;

    let eps = m_points as f64 * hbar;
    let dphi = std::f64::consts::TAU / cfg.bins as f64;
    let mut classical = vec![0.0; cfg.bins];
    let mut phi_mid = vec![0.0; cfg.bins];
    for bin in 0..cfg.bins {
        // Classical width at the exact bin midpoint (not the nearest node).
        let phi = dphi * (bin as f64 + 0.5);
        let (z, dz) = map.eval_raw(Complex64::from_polar(1.0, phi));
        classical[bin] = eps / (std::f64::consts::TAU * p.eval_sigma(z)?) / dz.norm();
        phi_mid[bin] = phi;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for bin in 0..cfg.bins {
        let d = hist.mean_h[bin] - classical[bin];
        num += d * d;
        den += classical[bin] * classical[bin];
    }
    Ok(DarcyReport {
        l2_rel_error: (num / den).sqrt(),
        m: m_points,
        hbar,
        ensemble,
        bins: cfg.bins,
        phi_mid,
        mean_h: hist.mean_h,
        stderr: hist.stderr,
        classical,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::c64;

    fn uniform() -> Potential {
        Potential::uniform(1.0)
    }

    fn disk_density(hbar: f64) -> GrowthDensity {
        let map = LaurentMap::disk(1.0);
        let m = moments_from_map(&map, &uniform(), 4).unwrap();
        GrowthDensity::new(&map, &uniform(), &m, hbar).unwrap()
    }

    fn ellipse() -> LaurentMap {
        LaurentMap::new(1.0, vec![c64(0.0, 0.0), c64(0.2, 0.0)]).unwrap()
    }

    fn ellipse_density(hbar: f64) -> GrowthDensity {
        let map = ellipse();
        let m = moments_from_map(&map, &uniform(), 16).unwrap();
        GrowthDensity::new(&map, &uniform(), &m, hbar).unwrap()
    }

    #[test]
    fn omega_disk_closed_form() {
        let d = disk_density(1.0);
        // Omega = log z + 1/2 for the unit-disk droplet: Re Omega on |z| = 1
        // is U/2 = 1/2, and d/dz Omega = 1/z = S.
        let z = c64(1.3, 0.4);
        let omega = d.omega(z).unwrap();
        assert!((omega.re - (z.norm().ln() + 0.5)).abs() < 1e-10, "omega = {omega}");
        // Antiderivative property by central difference against the series.
        let h = 1e-6;
        let dz = (d.omega(z + c64(h, 0.0)).unwrap() - d.omega(z - c64(h, 0.0)).unwrap()) / (2.0 * h);
        let s = d.series().eval(z);
        assert!((dz - s).norm() < 1e-8, "dz = {dz}, S = {s}");
    }

    #[test]
    fn omega_matches_series_in_annulus() {
        // The w-route and the termwise z-series agree (in Re) where the
        // series converges; the series truncation error follows the
        // geometric envelope (focal / |z|)^k_max.
        let d = ellipse_density(1.0);
        let focal = 2.0 * 0.2f64.sqrt();
        let k_max = d.moments.k_max() as i32;
        for &(rho, phi) in &[(1.3, 0.4), (1.15, 2.0), (1.05, 3.4), (1.5, 5.2)] {
            let z = d.map.eval_raw(Complex64::from_polar(rho, phi)).0;
            if z.norm() < 1.1 {
                continue;
            }
            let w_route = d.omega(z).unwrap().re;
            let series = d.omega_series(z).re;
            let envelope = 10.0 * (focal / z.norm()).powi(k_max) + 1e-10;
            assert!(
                (w_route - series).abs() < envelope,
                "rho {rho} phi {phi}: {w_route} vs {series} (envelope {envelope:.2e})"
            );
        }
    }

    #[test]
    fn a_vanishes_on_curve() {
        // Re Omega - U/2 = -A vanishes at all boundary nodes, not just the
        // anchor (and in particular never dips below -1e-10). This
        // exercises the ellipse whose minor axis lies inside the z-series'
        // divergence region.
        let d = ellipse_density(1.0);
        for j in 0..128 {
            let phi = std::f64::consts::TAU * j as f64 / 128.0;
            let z = d.map.eval_raw(Complex64::from_polar(1.0, phi)).0;
            let a = d.schwarz_potential(z).unwrap();
            assert!(a.abs() < 1e-10, "phi = {phi}: A = {a:.3e}");
            assert!(a >= -1e-10);
        }
    }

    #[test]
    fn a_disk_values() {
        let d = disk_density(1.0);
        let a = d.schwarz_potential(c64(1.0, 0.0)).unwrap();
        assert!(a.abs() < 1e-12);
        let a = d.schwarz_potential(c64(1.1, 0.0)).unwrap();
        assert!((a - (0.21 / 2.0 - 1.1f64.ln())).abs() < 1e-10, "A = {a}");
        let a = d.schwarz_potential(c64(0.0, 1.01)).unwrap();
        assert!((a - 9.967e-5).abs() < 2e-7, "A = {a:.6e}");
    }

    /// A deep inside the droplet against the closed form; a regression
    /// guard for DFT-noise amplification in the w^{-m} tail.
    #[test]
    fn a_disk_deep_interior() {
        let radius = 0.5f64.sqrt();
        let p = uniform();
        let map = LaurentMap::disk(radius);
        let m = moments_from_map(&map, &p, 2).unwrap();
        let d = GrowthDensity::new(&map, &p, &m, 0.01).unwrap();
        for i in 0..=10 {
            let r = radius * (0.85 + 0.3 * i as f64 / 10.0);
            let a = d.schwarz_potential(c64(r, 0.0)).unwrap();
            let closed =
                0.5 * (r * r - radius * radius) - radius * radius * (r / radius).ln();
            assert!((a - closed).abs() < 1e-10, "r/R = {}: A = {a} vs {closed}", r / radius);
        }
    }

    #[test]
    fn a_positive_and_flat_on_curve() {
        // A >= 0 near the curve on both sides, zero gradient along the normal.
        for d in [disk_density(1.0), ellipse_density(1.0)] {
            let sqrt_t0 = d.moments.t0.sqrt();
            for j in 0..16 {
                let phi = std::f64::consts::TAU * j as f64 / 16.0;
                let w = Complex64::from_polar(1.0, phi);
                let (z, dz) = d.map.eval_raw(w);
                let normal = w * dz / dz.norm();
                let probe = z + 0.01 * sqrt_t0 * normal;
                assert!(d.schwarz_potential(probe).unwrap() > 0.0);
                let probe_in = z - 0.01 * sqrt_t0 * normal;
                assert!(d.schwarz_potential(probe_in).unwrap() > 0.0);
                // Two-sided difference of A along the normal vanishes on the curve.
                let h = 1e-4;
                let grad = (d.schwarz_potential(z + h * normal).unwrap()
                    - d.schwarz_potential(z - h * normal).unwrap())
                    / (2.0 * h);
                assert!(grad.abs() < 1e-6 + 4.0 * h, "grad = {grad:.3e}");
            }
        }
    }

    #[test]
    fn quadratic_growth_ratio() {
        // A(z + delta n) / (sigma delta^2) -> 1 as delta -> 0 (16 nodes).
        let d = ellipse_density(1.0);
        for j in 0..16 {
            let phi = std::f64::consts::TAU * j as f64 / 16.0;
            let w = Complex64::from_polar(1.0, phi);
            let (z, dz) = d.map.eval_raw(w);
            let normal = w * dz / dz.norm();
            let mut prev_err = f64::INFINITY;
            for &delta in &[1e-2, 5e-3, 2.5e-3] {
                let a = d.schwarz_potential(z + delta * normal).unwrap();
                let err = (a / (delta * delta) - 1.0).abs();
                assert!(err < prev_err * 1.01, "ratio error not shrinking at phi = {phi}");
                prev_err = err;
            }
            assert!(prev_err < 0.02, "phi = {phi}: err = {prev_err}");
        }
    }

    #[test]
    fn one_point_boundary_value() {
        let hbar = 0.02;
        let d = disk_density(hbar);
        let lp = d.one_point_log(c64(1.0, 0.0)).unwrap();
        let expected = (C_P_UNIFORM * hbar).powf(-0.5);
        assert!((lp.exp() - expected).abs() < 1e-10 * expected, "P = {}", lp.exp());
        assert!((lp.exp() - 0.89794).abs() < 1e-4);
    }

    #[test]
    fn joint_reduces_to_one_point_bitwise() {
        let d = ellipse_density(0.05);
        for &z in &[c64(1.25, 0.1), c64(0.1, 0.95), c64(-1.3, 0.2)] {
            let a = d.one_point_log(z).unwrap();
            let b = d.joint_log(&[z]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn joint_permutation_and_vandermonde() {
        let d = ellipse_density(0.05);
        let pts = [c64(1.3, 0.0), c64(0.0, 1.1), c64(-1.25, 0.3), c64(0.4, -1.05)];
        let a = d.joint_log(&pts).unwrap();
        let perm = [pts[3], pts[1], pts[0], pts[2]];
        let b = d.joint_log(&perm).unwrap();
        assert!((a - b).abs() < 1e-10);

        // Merging w-images: log P drops like 2 log|w1 - w2|.
        let base = d.map.eval_raw(c64(1.3, 0.0)).0;
        let mut prev = 0.0;
        for (i, &eta) in [1e-2f64, 1e-3, 1e-4].iter().enumerate() {
            let z2 = d.map.eval_raw(Complex64::from_polar(1.3, eta)).0;
            let lp = d.joint_log(&[base, z2]).unwrap();
            if i > 0 {
                let drop = prev - lp;
                assert!((drop - 2.0 * 10.0f64.ln()).abs() < 0.05, "drop = {drop}");
            }
            prev = lp;
        }

        let z = c64(1.3, 0.0);
        assert!(matches!(d.joint_log(&[z, z]), Err(Error::CoincidentPoints(_))));
    }

    #[test]
    fn interior_point_rejected() {
        let d = ellipse_density(0.05);
        assert!(matches!(
            d.one_point_log(c64(0.0, 0.0)),
            Err(Error::InteriorPoint(_)) | Err(Error::NoConvergence(_))
        ));
    }

    #[test]
    fn classical_width_values() {
        let p = uniform();
        let b = boundary_grid(&LaurentMap::disk(1.0), &p, 64).unwrap();
        for j in 0..64 {
            let h = classical_width(&b, 0.1, j);
            assert!((h - 0.1 / std::f64::consts::TAU).abs() < 1e-12);
        }
        let b = boundary_grid(&ellipse(), &p, 64).unwrap();
        let h = classical_width(&b, 0.1, 0);
        assert!((h - 0.0198944).abs() < 1e-6, "h = {h}");

        // Velocity consistency: width(eps)/dt = velocity(eps/dt) exactly.
        let dt = 0.25;
        assert_eq!(classical_width(&b, 0.1, 5) / dt, classical_velocity(&b, 0.1 / dt, 5) * dt / dt);
        assert!((classical_width(&b, 0.1, 5) / dt - classical_velocity(&b, 0.1 / dt, 5)).abs() < 1e-18);

        // Disk, eps_rate = 2 pi: v_n = 1 uniformly.
        let b = boundary_grid(&LaurentMap::disk(1.0), &p, 16).unwrap();
        assert!((classical_velocity(&b, std::f64::consts::TAU, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_width_channel_background() {
        // sigma = 1/|z|^2 at |z| = 2 gives 4x the uniform width at equal |w'|.
        let chan = Potential::new(1.0, vec![], crate::potential::Background::Channel, 1e-6).unwrap();
        let p = uniform();
        let map = LaurentMap::disk(2.0);
        let b_u = boundary_grid(&map, &p, 16).unwrap();
        let b_c = boundary_grid(&map, &chan, 16).unwrap();
        let ratio = classical_width(&b_c, 0.1, 0) / classical_width(&b_u, 0.1, 0);
        assert!((ratio - 4.0).abs() < 1e-10);

        // alpha = 1 wedge reduces to uniform.
        let wedge =
            Potential::new(1.0, vec![], crate::potential::Background::Wedge { alpha: 1.0 }, 1e-6)
                .unwrap();
        let b_w = boundary_grid(&map, &wedge, 16).unwrap();
        assert!((classical_width(&b_w, 0.1, 3) - classical_width(&b_u, 0.1, 3)).abs() < 1e-12);
    }

    #[test]
    fn evolve_disk() {
        let p = uniform();
        let ev = evolve_classical(&LaurentMap::disk(1.0), &p, 0.1 * std::f64::consts::PI, 5).unwrap();
        assert!(ev.cusp.is_none());
        assert_eq!(ev.steps.len(), 5);
        let last = &ev.steps[4].after;
        assert!((last.r - 1.5f64.sqrt()).abs() < 1e-8, "r = {}", last.r);
        for u in &last.u {
            assert!(u.norm() < 1e-8);
        }
    }

    #[test]
    fn evolve_ellipse_conserves_t2() {
        let p = uniform();
        let m0 = MomentVector {
            t0: 0.96,
            t: vec![c64(0.0, 0.0), c64(0.1, 0.0)],
            v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
            v0: None,
        };
        let map0 = map_from_moments(&m0, 2, None).unwrap();
        let ev = evolve_classical(&map0, &p, 0.1 * std::f64::consts::PI, 1).unwrap();
        let after = &ev.steps[0].after;
        let m1 = moments_from_map(after, &p, 2).unwrap();
        assert!((m1.t0 - 1.06).abs() < 1e-8);
        assert!((m1.t[1] - c64(0.1, 0.0)).norm() < 1e-8);
        // Closed-form step: r^2 - u^2 = 1.06 with u = 0.2 r.
        let r_expected = (1.06 / 0.96f64).sqrt();
        assert!((after.r - r_expected).abs() < 1e-7, "r = {}", after.r);
        assert!((after.u[1].re - 0.2 * r_expected).abs() < 1e-7);
    }

    #[test]
    fn evolve_reaches_cusp() {
        // t3 fixed while the droplet grows: u2 = 3 t3 r^2 grows faster than
        // r/2, so min |z'| hits zero in finite time.
        let p = uniform();
        let map0 = LaurentMap::new(1.0, vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.3, 0.0)]).unwrap();
        map0.certify_univalent().unwrap();
        let ev = evolve_classical(&map0, &p, 0.15 * std::f64::consts::PI, 40).unwrap();
        let cusp = ev.cusp.clone().expect("evolution should reach a cusp");
        assert!(!ev.steps.is_empty(), "some steps should complete first");
        assert!(cusp.step < 40);
        // min |z'| was decreasing along the way.
        let maps = ev.maps();
        let min_dz: Vec<f64> = maps.iter().map(|m| m.univalence_report().min_abs_dz).collect();
        assert!(min_dz.last().unwrap() < &min_dz[0]);
    }

    #[test]
    fn layer_sampler_determinism() {
        let d = disk_density(0.01);
        let a = sample_layer_with(&d, 8, 77, 60).unwrap();
        let b = sample_layer_with(&d, 8, 77, 60).unwrap();
        assert_eq!(a.points, b.points);
        let c = sample_layer_with(&d, 8, 78, 60).unwrap();
        assert_ne!(a.points, c.points);
        // Every point strictly exterior.
        for &z in &a.points {
            let w = invert_map(&d.map, z).unwrap();
            assert!(w.norm() > 1.0);
        }
    }

    #[test]
    fn layer_angular_marginal_uniform() {
        // Disk layer: chi-square over 64 angular bins at the 5% level
        // (pre-registered seed; critical value for 63 dof).
        let d = disk_density(0.002);
        let m_points = 32;
        let n_samples = 320u64;
        let samples: Vec<LayerSample> = (0..n_samples)
            .into_par_iter()
            .map(|i| sample_layer_with(&d, m_points, crate::util::derive_seed(4242, i), 200).unwrap())
            .collect();
        let mut counts = vec![0u64; 64];
        for s in &samples {
            for &z in &s.points {
                let w = invert_map(&d.map, z).unwrap();
                let theta = crate::util::wrap_angle(w.arg());
                let bin = ((theta / std::f64::consts::TAU * 64.0) as usize).min(63);
                counts[bin] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / 64.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 5% critical value of chi-square with 63 dof.
        assert!(chi2 < 82.53, "chi2 = {chi2}, total = {total}");
    }

    /// M = 1 layer samples against a direct rejection-sampling oracle:
    /// two-sample Kolmogorov-Smirnov on the normal displacement at 5%.
    #[test]
    fn layer_m1_matches_rejection_oracle() {
        let hbar = 0.01;
        let d = disk_density(hbar);
        let n = 4000usize;
        let mcmc: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = sample_layer_with(&d, 1, crate::util::derive_seed(99, i as u64), 80).unwrap();
                let w = invert_map(&d.map, s.points[0]).unwrap();
                w.norm() - 1.0
            })
            .collect();
        // Rejection oracle for the radial density ~ e^{-2A(r)/hbar} r on r > 1.
        let mut rng = stream_rng(1717, 9);
        let mut oracle = Vec::with_capacity(n);
        let s_scale = (hbar / 4.0).sqrt();
        while oracle.len() < n {
            let delta = rng.gen_range(0.0..8.0 * s_scale);
            let r = 1.0 + delta;
            let a = d.schwarz_potential(c64(r, 0.0)).unwrap();
            let target = (-2.0 * a / hbar).exp() * r;
            let bound = 1.0 + 8.0 * s_scale;
            if rng.gen::<f64>() * bound < target {
                oracle.push(delta);
            }
        }
        let dks = two_sample_ks(&mcmc, &oracle);
        let crit = 1.358 * ((2.0 * n as f64) / (n as f64 * n as f64)).sqrt();
        assert!(dks < crit, "KS D = {dks}, crit = {crit}");
    }

    fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
        let mut a: Vec<f64> = a.to_vec();
        let mut b: Vec<f64> = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j) = (0usize, 0usize);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    /// Width histogram: disk constant, ellipse proportional to |w'|, total
    /// collected area ~ M hbar, half-Gaussian displacement profile scale.
    #[test]
    fn width_histogram_properties() {
        let hbar = 0.005;
        let m_points = 32;
        let p = uniform();

        // Disk: h(phi) flat and equal to eps/(2 pi).
        let d = disk_density(hbar);
        let samples: Vec<LayerSample> = (0..400u64)
            .into_par_iter()
            .map(|i| sample_layer_with(&d, m_points, crate::util::derive_seed(5050, i), 200).unwrap())
            .collect();
        let b = boundary_grid(&d.map, &p, 512).unwrap();
        let hist = layer_width_histogram(&samples, &b, 16, WidthAssignment::ConformalFoot).unwrap();
        let eps = m_points as f64 * hbar;
        let h_cl = eps / std::f64::consts::TAU;
        for bin in 0..16 {
            assert!(!hist.empty[bin]);
            assert!(
                (hist.mean_h[bin] - h_cl).abs() < 2.5 * hist.stderr[bin] + 0.05 * h_cl,
                "bin {bin}: {} vs {h_cl}",
                hist.mean_h[bin]
            );
        }
        let total = hist.collected_area(&b);
        assert!((total / eps - 1.0).abs() < 0.05, "area {total} vs {eps}");

        // Ellipse: h(0)/h(pi/2) matches the |w'| ratio 1.5.
        let de = ellipse_density(hbar);
        let samples: Vec<LayerSample> = (0..600u64)
            .into_par_iter()
            .map(|i| sample_layer_with(&de, m_points, crate::util::derive_seed(6060, i), 200).unwrap())
            .collect();
        let be = boundary_grid(&de.map, &p, 512).unwrap();
        let hist = layer_width_histogram(&samples, &be, 16, WidthAssignment::ConformalFoot).unwrap();
        let ratio = hist.mean_h[0] / hist.mean_h[4]; // phi ~ 0 vs phi ~ pi/2
        assert!((ratio - 1.5).abs() < 0.075 * 1.5, "ratio = {ratio}");

        // Nearest-node assignment cross-validates the conformal foot.
        let hist_nn = layer_width_histogram(&samples, &be, 16, WidthAssignment::NearestNode).unwrap();
        let ratio_nn = hist_nn.mean_h[0] / hist_nn.mean_h[4];
        assert!((ratio_nn - 1.5).abs() < 0.12 * 1.5, "ratio_nn = {ratio_nn}");
    }

    /// For M = 1 (no Vandermonde coupling, no classical advance) the normal
    /// displacements are half-Gaussian with scale sqrt(hbar/(4 sigma)).
    #[test]
    fn m1_displacements_half_gaussian() {
        let hbar = 0.005;
        let d = disk_density(hbar);
        let p = uniform();
        let samples: Vec<LayerSample> = (0..2000u64)
            .into_par_iter()
            .map(|i| sample_layer_with(&d, 1, crate::util::derive_seed(8080, i), 80).unwrap())
            .collect();
        let b = boundary_grid(&d.map, &p, 64).unwrap();
        let hist = layer_width_histogram(&samples, &b, 1, WidthAssignment::ConformalFoot).unwrap();
        let s_fit = hist.mean_displacement[0] / (2.0 / std::f64::consts::PI).sqrt();
        let s_expected = (hbar / 4.0).sqrt();
        assert!(
            (s_fit / s_expected - 1.0).abs() < 0.05,
            "s_fit = {s_fit}, expected {s_expected}"
        );
    }

    #[test]
    fn darcy_agreement_disk_quick() {
        // Small smoke version; the acceptance suite runs the full criterion.
        let cfg = DarcyConfig { sweeps: 200, bins: 16, boundary_nodes: 256 };
        let report =
            check_darcy_agreement(&LaurentMap::disk(1.0), &uniform(), 0.005, 32, 200, 31337, cfg)
                .unwrap();
        assert!(report.l2_rel_error < 0.07, "L2 = {}", report.l2_rel_error);
        // CLT scaling: the residual is dominated by sampling noise, so a 9x
        // larger ensemble shrinks the L2 error markedly (a small finite-hbar
        // floor keeps the ratio above the pure-noise 1/3).
        let big =
            check_darcy_agreement(&LaurentMap::disk(1.0), &uniform(), 0.005, 32, 1800, 31337, cfg)
                .unwrap();
        assert!(
            big.l2_rel_error < 0.75 * report.l2_rel_error,
            "L2(1800) = {} vs L2(200) = {}",
            big.l2_rel_error,
            report.l2_rel_error
        );
    }

    #[test]
    fn layer_mixing_flag() {
        let d = disk_density(0.01);
        let s = sample_layer_with(&d, 8, 5, 100).unwrap();
        assert!(!s.poor_mixing(), "healthy chain flagged: {s:?}");
    }
}
