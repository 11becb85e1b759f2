//! External potential family, background charge densities, and the harmonic
//! moment maps in both directions (domain -> moments, moments -> domain).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::LaurentMap;
use crate::error::{Error, Result};
use crate::util::{serde_complex_vec, solve_dense};

/// Background charge density kind. The non-harmonic part U of the potential
/// satisfies dz dzbar U = sigma for each kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    /// sigma = 1, U = |z|^2 (the quasi-harmonic case).
    Uniform,
    /// sigma = |z|^(2 alpha - 2), U = |z|^(2 alpha) / alpha^2.
    /// Maps to growth in a wedge of opening angle 2 pi alpha.
    Wedge { alpha: f64 },
    /// sigma = |z|^-2, U = (log |z|^2)^2 / 2. Maps to growth in a periodic channel.
    Channel,
}

impl Background {
    pub fn is_singular(&self) -> bool {
        match self {
            Background::Uniform => false,
            Background::Wedge { alpha } => (*alpha - 1.0).abs() > 1e-15,
            Background::Channel => true,
        }
    }
}

/// External potential W(z, zbar) = -U(z, zbar) + 2 Re sum_k t_k z^k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    /// Area of one quantum; the droplet has area pi t0 = N hbar.
    pub hbar: f64,
    /// Couplings t_k, k = 1..=k_max (index 0 holds t_1).
    #[serde(with = "serde_complex_vec")]
    pub couplings: Vec<Complex64>,
    pub background: Background,
    /// Evaluations at |z| below this are rejected for singular backgrounds.
    pub origin_cutoff: f64,
}

impl Potential {
    pub fn new(
        hbar: f64,
        couplings: Vec<Complex64>,
        background: Background,
        origin_cutoff: f64,
    ) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::Validation(format!("hbar must be positive, got {hbar}")));
        }
        if !(origin_cutoff > 0.0) {
            return Err(Error::Validation("origin_cutoff must be positive".into()));
        }
        if couplings.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Validation("couplings must be finite".into()));
        }
        if let Background::Wedge { alpha } = background {
            if !(alpha > 0.0) {
                return Err(Error::Validation(format!("wedge alpha must be positive, got {alpha}")));
            }
        }
        Ok(Self { hbar, couplings, background, origin_cutoff })
    }

    /// Quasi-harmonic potential with all couplings zero.
    pub fn uniform(hbar: f64) -> Self {
        Self::new(hbar, Vec::new(), Background::Uniform, 1e-9).expect("valid")
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.background, Background::Uniform)
    }

    fn check_cutoff(&self, z: Complex64) -> Result<()> {
        if self.background.is_singular() && z.norm() < self.origin_cutoff {
            return Err(Error::Domain(format!(
                "|z| = {:.3e} below origin cutoff {:.3e} for singular background",
                z.norm(),
                self.origin_cutoff
            )));
        }
        Ok(())
    }

    /// Non-harmonic part U(z, zbar).
    pub fn eval_u(&self, z: Complex64) -> Result<f64> {
        self.check_cutoff(z)?;
        Ok(match self.background {
            Background::Uniform => z.norm_sqr(),
            Background::Wedge { alpha } => z.norm_sqr().powf(alpha) / (alpha * alpha),
            Background::Channel => {
                let l = z.norm_sqr().ln();
                0.5 * l * l
            }
        })
    }

    /// W(z, zbar) = -U + 2 Re sum t_k z^k.
    pub fn eval_potential(&self, z: Complex64) -> Result<f64> {
        let u = self.eval_u(z)?;
        let mut harm = 0.0;
        let mut zk = Complex64::new(1.0, 0.0);
        for t in &self.couplings {
            zk *= z;
            harm += 2.0 * (t * zk).re;
        }
        Ok(-u + harm)
    }

    /// Background charge density sigma(z) = dz dzbar U.
    pub fn eval_sigma(&self, z: Complex64) -> Result<f64> {
        self.check_cutoff(z)?;
        Ok(match self.background {
            Background::Uniform => 1.0,
            Background::Wedge { alpha } => z.norm_sqr().powf(alpha - 1.0),
            Background::Channel => 1.0 / z.norm_sqr(),
        })
    }

    /// dz U, the boundary value of the (generalized) Schwarz function.
    pub fn schwarz_boundary_value(&self, z: Complex64) -> Result<Complex64> {
        self.check_cutoff(z)?;
        Ok(match self.background {
            Background::Uniform => z.conj(),
            Background::Wedge { alpha } => {
                // dz (z zbar)^alpha / alpha^2 = z^(alpha-1) zbar^alpha / alpha
                let r2 = z.norm_sqr();
                r2.powf(alpha - 1.0) * z.conj() / alpha
            }
            Background::Channel => z.norm_sqr().ln() / z,
        })
    }
}

/// Harmonic moments of a droplet: t0 parametrizes area (Area = pi t0),
/// exterior moments t_k stay fixed under growth, interior moments v_k
/// respond to the shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentVector {
    pub t0: f64,
    #[serde(with = "serde_complex_vec")]
    pub t: Vec<Complex64>,
    #[serde(with = "serde_complex_vec")]
    pub v: Vec<Complex64>,
    /// Optional logarithmic interior moment (1/pi) int_D log|z|^2 sigma d2z.
    #[serde(skip)]
    pub v0: Option<f64>,
}

impl MomentVector {
    pub fn k_max(&self) -> usize {
        self.t.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(Error::Validation(format!("t0 must be positive, got {}", self.t0)));
        }
        if self.t.len() != self.v.len() {
            return Err(Error::Validation(format!(
                "exterior/interior truncations differ: {} vs {}",
                self.t.len(),
                self.v.len()
            )));
        }
        Ok(())
    }
}

/// Trapezoidal contour quadrature of the moment integrals in the uniformizing
/// angle, on an n-point grid. Spectrally accurate for analytic boundaries.
fn moments_quadrature(map: &LaurentMap, k_max: usize, n: usize) -> MomentVector {
    let h = std::f64::consts::TAU / n as f64;
    let mut area = 0.0;
    let mut t = vec![Complex64::default(); k_max];
    let mut v = vec![Complex64::default(); k_max];
    let mut v0 = 0.0;
    for j in 0..n {
        let phi = h * j as f64;
        let w = Complex64::from_polar(1.0, phi);
        let (z, dz) = map.eval_raw(w);
        // dz along the curve is z'(w) i w dphi; the common factor below is
        // conj(z) z'(w) w, so that Re drops the i where needed.
        let f = z.conj() * dz * w;
        area += 0.5 * f.re * h;
        v0 += (z.conj() * (z.norm_sqr().ln() - 1.0) * dz * w).re * 0.5 * h;
        let zinv = 1.0 / z;
        let mut zk_neg = Complex64::new(1.0, 0.0);
        let mut zk_pos = Complex64::new(1.0, 0.0);
        for k in 1..=k_max {
            zk_neg *= zinv;
            zk_pos *= z;
            t[k - 1] += f * zk_neg * h / (std::f64::consts::TAU * k as f64);
            v[k - 1] += f * zk_pos * h / std::f64::consts::TAU;
        }
    }
    MomentVector { t0: area / std::f64::consts::PI, t, v, v0: Some(v0 / std::f64::consts::PI) }
}

/// Measure (t0, t_1..t_kmax, v_1..v_kmax) of the droplet bounded by `map`.
///
/// t0 = Area/pi; t_k and v_k by contour quadrature with S(z) = zbar on the
/// boundary. Only the uniform background carries a moment reduction to the
/// boundary; other backgrounds are handled by mapping to uniform problems.
pub fn moments_from_map(map: &LaurentMap, p: &Potential, k_max: usize) -> Result<MomentVector> {
    if !p.is_uniform() {
        return Err(Error::Validation(
            "moments_from_map supports the uniform background only".into(),
        ));
    }
    map.certify_univalent()?;
    let n0 = (256usize).max(8 * (k_max + map.coeff_count() + 1)).next_power_of_two();
    let coarse = moments_quadrature(map, k_max, n0);
    let fine = moments_quadrature(map, k_max, 2 * n0);
    // Convergence across one refinement; trapezoid converges geometrically
    // for analytic curves so this is normally at rounding level.
    let scale = fine.t0.abs().max(1.0);
    let mut err = (coarse.t0 - fine.t0).abs();
    for k in 0..k_max {
        err = err.max((coarse.t[k] - fine.t[k]).norm());
        err = err.max((coarse.v[k] - fine.v[k]).norm());
    }
    if err > 1e-8 * scale {
        return Err(Error::Accuracy(format!(
            "moment quadrature did not converge: refinement delta {err:.3e} at n = {n0}"
        )));
    }
    Ok(fine)
}

/// Droplet area from the Laurent coefficients: pi (r^2 - sum_k k |u_k|^2).
/// The constant u_0 is a translation and does not contribute.
pub fn area_from_coefficients(map: &LaurentMap) -> f64 {
    let mut s = map.r * map.r;
    for (i, u) in map.u.iter().enumerate() {
        let k = i as f64;
        s -= k * u.norm_sqr();
    }
    std::f64::consts::PI * s
}

/// Shoelace area of the discretized boundary polygon with n nodes.
pub fn area_shoelace(map: &LaurentMap, n: usize) -> f64 {
    let mut area = 0.0;
    let mut prev = map.eval_raw(Complex64::new(1.0, 0.0)).0;
    let first = prev;
    for j in 1..n {
        let phi = std::f64::consts::TAU * j as f64 / n as f64;
        let z = map.eval_raw(Complex64::from_polar(1.0, phi)).0;
        area += prev.re * z.im - z.re * prev.im;
        prev = z;
    }
    area += prev.re * first.im - first.re * prev.im;
    0.5 * area
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

fn residual(map: &LaurentMap, targets: &MomentVector, k_max: usize, n_quad: usize) -> Vec<f64> {
    let m = moments_quadrature(map, k_max, n_quad);
    let mut f = Vec::with_capacity(2 * k_max + 1);
    f.push(m.t0 - targets.t0);
    for k in 0..k_max {
        let target = targets.t.get(k).copied().unwrap_or_default();
        let d = m.t[k] - target;
        f.push(d.re);
        f.push(d.im);
    }
    f
}

fn unpack(x: &[f64]) -> LaurentMap {
    let k = (x.len() - 1) / 2;
    let mut u = Vec::with_capacity(k);
    for i in 0..k {
        u.push(Complex64::new(x[1 + 2 * i], x[2 + 2 * i]));
    }
    LaurentMap::new_unchecked(x[0], u)
}

fn norm2(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve the inverse moment problem: find the exterior map whose droplet has
/// the prescribed moments. Damped Newton on (r, u_0..u_{K-1}) with a
/// finite-difference Jacobian; the initial guess is a disk of radius sqrt(t0)
/// unless supplied.
pub fn map_from_moments(
    m: &MomentVector,
    k_coeffs: usize,
    guess: Option<&LaurentMap>,
) -> Result<LaurentMap> {
    m.validate()?;
    if m.k_max() > k_coeffs {
        return Err(Error::Validation(format!(
            "K = {} must cover the moment truncation k_max = {}",
            k_coeffs,
            m.k_max()
        )));
    }
    let dim = 2 * k_coeffs + 1;
    let n_quad = (256usize).max(16 * (k_coeffs + 1)).next_power_of_two();
    let scale: f64 = m
        .t
        .iter()
        .map(|c| c.norm())
        .fold(m.t0.abs().max(1.0), f64::max);

    let mut x = vec![0.0; dim];
    match guess {
        Some(g) => {
            x[0] = g.r;
            for i in 0..k_coeffs {
                let u = g.u.get(i).copied().unwrap_or_default();
                x[1 + 2 * i] = u.re;
                x[2 + 2 * i] = u.im;
            }
        }
        None => x[0] = m.t0.sqrt(),
    }

    let mut f = residual(&unpack(&x), m, k_coeffs, n_quad);
    let mut fnorm = norm2(&f);
    for _iter in 0..NEWTON_MAX_ITER {
        let max_f = f.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if max_f <= NEWTON_TOL * scale {
            let map = unpack(&x);
            map.certify_univalent()?;
            return Ok(map);
        }
        // Forward-difference Jacobian, column by column.
        let mut jac = vec![0.0; dim * dim];
        for col in 0..dim {
            let h = 1e-6 * x[col].abs().max(1.0);
            let mut xp = x.clone();
            xp[col] += h;
            let fp = residual(&unpack(&xp), m, k_coeffs, n_quad);
            for row in 0..dim {
                jac[row * dim + col] = (fp[row] - f[row]) / h;
            }
        }
        let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = solve_dense(&mut jac, &mut rhs, dim)
            .ok_or_else(|| Error::NoConvergence("singular Jacobian in moment inversion".into()))?;

        // Step halving on residual increase; also keeps r positive.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let mut xt = x.clone();
            for i in 0..dim {
                xt[i] += lambda * delta[i];
            }
            if xt[0] > 0.0 {
                let ft = residual(&unpack(&xt), m, k_coeffs, n_quad);
                let fn_t = norm2(&ft);
                if fn_t < fnorm {
                    x = xt;
                    f = ft;
                    fnorm = fn_t;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence(format!(
                "Newton stagnated at residual {fnorm:.3e} (tol {NEWTON_TOL:.0e})"
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "moment inversion did not reach tolerance in {NEWTON_MAX_ITER} iterations (residual {fnorm:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::c64;

    fn ellipse() -> LaurentMap {
        LaurentMap::new(1.0, vec![c64(0.0, 0.0), c64(0.2, 0.0)]).unwrap()
    }

    #[test]
    fn potential_values() {
        let p = Potential::uniform(1.0);
        assert_eq!(p.eval_potential(c64(1.0, 1.0)).unwrap(), -2.0);

        let p = Potential::new(1.0, vec![c64(0.5, 0.0)], Background::Uniform, 1e-9).unwrap();
        assert_eq!(p.eval_potential(c64(2.0, 0.0)).unwrap(), -2.0);

        // alpha = 1 wedge reduces to uniform.
        let p = Potential::new(1.0, vec![], Background::Wedge { alpha: 1.0 }, 1e-9).unwrap();
        assert!((p.eval_potential(c64(3.0, 0.0)).unwrap() + 9.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_values() {
        let p = Potential::uniform(1.0);
        assert_eq!(p.eval_sigma(c64(5.0, 5.0)).unwrap(), 1.0);

        let p = Potential::new(1.0, vec![], Background::Wedge { alpha: 2.0 }, 1e-9).unwrap();
        assert!((p.eval_sigma(c64(2.0, 0.0)).unwrap() - 4.0).abs() < 1e-12);

        let p = Potential::new(1.0, vec![], Background::Channel, 1e-9).unwrap();
        assert!((p.eval_sigma(c64(0.0, 2.0)).unwrap() - 0.25).abs() < 1e-12);
    }

    /// dz U by finite differences against the closed forms for every
    /// background (the boundary value of the generalized Schwarz function).
    #[test]
    fn schwarz_boundary_value_matches_gradient() {
        let backgrounds = [
            Background::Uniform,
            Background::Wedge { alpha: 1.6 },
            Background::Channel,
        ];
        for bg in backgrounds {
            let p = Potential::new(1.0, vec![], bg, 1e-6).unwrap();
            for z in [c64(1.3, 0.4), c64(-0.8, 0.9), c64(0.5, -1.7)] {
                let s = p.schwarz_boundary_value(z).unwrap();
                let h = 1e-6;
                // dz U = (U_x - i U_y) / 2
                let ux = (p.eval_u(z + c64(h, 0.0)).unwrap() - p.eval_u(z - c64(h, 0.0)).unwrap())
                    / (2.0 * h);
                let uy = (p.eval_u(z + c64(0.0, h)).unwrap() - p.eval_u(z - c64(0.0, h)).unwrap())
                    / (2.0 * h);
                let fd = 0.5 * c64(ux, -uy);
                assert!((s - fd).norm() < 1e-8 * s.norm().max(1.0), "bg {bg:?} z {z}: {s} vs {fd}");
            }
        }
    }

    #[test]
    fn cutoff_rejected() {
        let p = Potential::new(1.0, vec![], Background::Channel, 1e-3).unwrap();
        assert!(matches!(p.eval_sigma(c64(1e-4, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(p.eval_potential(c64(1e-4, 0.0)), Err(Error::Domain(_))));
        // Uniform background has no cutoff.
        assert!(Potential::uniform(1.0).eval_sigma(c64(0.0, 0.0)).is_ok());
    }

    /// Finite-difference Laplacian of U equals 4 sigma for every background.
    #[test]
    fn laplacian_consistency() {
        use rand::Rng;
        let mut rng = crate::util::stream_rng(11, 0);
        let backgrounds = [
            Background::Uniform,
            Background::Wedge { alpha: 1.7 },
            Background::Channel,
        ];
        for bg in backgrounds {
            let p = Potential::new(1.0, vec![], bg, 1e-6).unwrap();
            for _ in 0..100 {
                let z = c64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                if z.norm() < 0.3 {
                    continue;
                }
                let h = 1e-5 * z.norm().max(1.0);
                let u0 = p.eval_u(z).unwrap();
                let lap = (p.eval_u(z + c64(h, 0.0)).unwrap()
                    + p.eval_u(z - c64(h, 0.0)).unwrap()
                    + p.eval_u(z + c64(0.0, h)).unwrap()
                    + p.eval_u(z - c64(0.0, h)).unwrap()
                    - 4.0 * u0)
                    / (h * h);
                let sigma = p.eval_sigma(z).unwrap();
                assert!(
                    (lap - 4.0 * sigma).abs() <= 1e-6 * (4.0 * sigma).abs().max(1.0) * 10.0,
                    "bg {bg:?} z {z} lap {lap} sigma {sigma}"
                );
            }
        }
    }

    #[test]
    fn disk_moments_trivial() {
        let map = LaurentMap::new(1.0, vec![]).unwrap();
        let m = moments_from_map(&map, &Potential::uniform(1.0), 6).unwrap();
        assert!((m.t0 - 1.0).abs() < 1e-12);
        for k in 0..6 {
            assert!(m.t[k].norm() < 1e-12, "t_{} = {}", k + 1, m.t[k]);
            assert!(m.v[k].norm() < 1e-12);
        }
    }

    /// Oracle for the ellipse moments: contour quadrature at two resolutions,
    /// checked against the closed forms t0 = r^2 - u^2 and t2 = u/(2r).
    #[test]
    fn ellipse_moments_oracle() {
        let map = ellipse();
        let coarse = moments_quadrature(&map, 4, 512);
        let fine = moments_quadrature(&map, 4, 1024);
        assert!((coarse.t0 - fine.t0).abs() < 1e-12);
        assert!((coarse.t[1] - fine.t[1]).norm() < 1e-12);

        let m = moments_from_map(&map, &Potential::uniform(1.0), 4).unwrap();
        assert!((m.t0 - 0.96).abs() < 1e-10, "t0 = {}", m.t0);
        assert!((m.t[1] - c64(0.1, 0.0)).norm() < 1e-10, "t2 = {}", m.t[1]);
        for k in [0usize, 2, 3] {
            assert!(m.t[k].norm() < 1e-10);
        }
        // z -> -z symmetry of the ellipse: odd interior moments vanish too.
        assert!(m.v[0].norm() < 1e-10);
        assert!(m.v[2].norm() < 1e-10);
    }

    /// Three-fold symmetric map: t3 is the only nonzero exterior moment,
    /// with closed form u2/(3 r^2) frozen from the quadrature oracle.
    #[test]
    fn threefold_moments() {
        let map = LaurentMap::new(1.0, vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.1, 0.0)]).unwrap();
        let m = moments_from_map(&map, &Potential::uniform(1.0), 6).unwrap();
        for k in 0..6 {
            if k == 2 {
                assert!((m.t[2] - c64(0.1 / 3.0, 0.0)).norm() < 1e-10, "t3 = {}", m.t[2]);
            } else {
                assert!(m.t[k].norm() < 1e-10, "t_{} = {}", k + 1, m.t[k]);
            }
        }
    }

    #[test]
    fn area_three_ways() {
        let map = LaurentMap::new(1.3, vec![c64(0.3, 0.1), c64(0.15, -0.05), c64(0.02, 0.0)])
            .unwrap();
        let m = moments_from_map(&map, &Potential::uniform(1.0), 4).unwrap();
        let a_coef = area_from_coefficients(&map);
        let a_quad = std::f64::consts::PI * m.t0;
        let a_poly = area_shoelace(&map, 4096);
        assert!((a_coef - a_quad).abs() < 1e-8, "{a_coef} vs {a_quad}");
        // Shoelace on a polygon is only O(1/n^2) accurate.
        assert!((a_poly - a_coef).abs() < 1e-4 * a_coef);
        let a_poly_fine = area_shoelace(&map, 1 << 16);
        assert!((a_poly_fine - a_coef).abs() < 1e-8, "{a_poly_fine} vs {a_coef}");
    }

    /// Doubling boundary nodes reduces the moment error at least 4x while
    /// above rounding level (spectral convergence).
    #[test]
    fn moment_quadrature_spectral() {
        let map = LaurentMap::new(1.0, vec![c64(0.1, 0.0), c64(0.2, 0.05), c64(0.0, 0.1), c64(0.05, 0.0)])
            .unwrap();
        let reference = moments_quadrature(&map, 8, 4096);
        let err = |n: usize| -> f64 {
            let m = moments_quadrature(&map, 8, n);
            let mut e = (m.t0 - reference.t0).abs();
            for k in 0..8 {
                e = e.max((m.t[k] - reference.t[k]).norm());
                e = e.max((m.v[k] - reference.v[k]).norm());
            }
            e
        };
        let mut prev = err(16);
        for n in [32usize, 64] {
            let cur = err(n);
            if prev < 1e-13 {
                break;
            }
            assert!(cur <= prev / 4.0, "n = {n}: {cur:.3e} vs {prev:.3e}");
            prev = cur;
        }
    }

    #[test]
    fn inverse_disk_fixed_point() {
        let m = MomentVector { t0: 1.0, t: vec![], v: vec![], v0: None };
        let map = map_from_moments(&m, 4, None).unwrap();
        assert!((map.r - 1.0).abs() < 1e-10);
        for u in &map.u {
            assert!(u.norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_recovers_ellipse() {
        let m = MomentVector {
            t0: 0.96,
            t: vec![c64(0.0, 0.0), c64(0.1, 0.0)],
            v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
            v0: None,
        };
        let map = map_from_moments(&m, 4, None).unwrap();
        assert!((map.r - 1.0).abs() < 1e-8, "r = {}", map.r);
        assert!((map.u[1] - c64(0.2, 0.0)).norm() < 1e-8, "u1 = {}", map.u[1]);
    }

    /// (t0 = 1, t2 = 0.4) solves to the very eccentric ellipse
    /// r = 5/3, u1 = 4/3: u1 < r always holds on the pure-ellipse branch
    /// (r^2 - u^2 = t0 > 0), so the map stays univalent.
    #[test]
    fn inverse_large_t2_stays_univalent() {
        let m = MomentVector {
            t0: 1.0,
            t: vec![c64(0.0, 0.0), c64(0.4, 0.0)],
            v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
            v0: None,
        };
        let map = map_from_moments(&m, 3, None).unwrap();
        assert!((map.r - 5.0 / 3.0).abs() < 1e-7, "r = {}", map.r);
        assert!((map.u[1].re - 4.0 / 3.0).abs() < 1e-7, "u1 = {}", map.u[1]);
        let back = moments_from_map(&map, &Potential::uniform(1.0), 3).unwrap();
        assert!((back.t0 - 1.0).abs() < 1e-9);
        assert!((back.t[1].re - 0.4).abs() < 1e-9);
    }

    /// Scanning min |z'| along the pure-ellipse branch while ramping t2:
    /// min |z'| = r - u = t0 / (r + u) stays strictly positive, so no cusp
    /// occurs in the (t0, t2)-only family.
    #[test]
    fn ellipse_branch_min_dz_positive() {
        for &t2 in &[0.1, 0.2, 0.3, 0.4, 0.45] {
            let m = MomentVector {
                t0: 1.0,
                t: vec![c64(0.0, 0.0), c64(t2, 0.0)],
                v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
                v0: None,
            };
            let map = map_from_moments(&m, 2, None).unwrap();
            let cert = map.univalence_report();
            assert!(cert.min_abs_dz > 1e-3, "t2 = {t2}: min|z'| = {}", cert.min_abs_dz);
        }
    }

    #[test]
    fn moment_round_trip_random_maps() {
        use rand::Rng;
        let p = Potential::uniform(1.0);
        let mut rng = crate::util::stream_rng(23, 1);
        for case in 0..6 {
            // Random univalent-ish maps with sum k |u_k| < 0.5 r.
            let r = rng.gen_range(0.7..1.5);
            let k = rng.gen_range(2..5usize);
            let mut u = vec![Complex64::default(); k];
            let mut budget = 0.45 * r;
            for (i, ui) in u.iter_mut().enumerate() {
                let kk = (i + 1) as f64;
                let mag = rng.gen_range(0.0..budget / (kk * 2.0));
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                *ui = Complex64::from_polar(mag, phase);
                budget -= kk * mag;
            }
            // u0 (translation) kept small so the origin stays inside.
            let map = LaurentMap::new(r, u).unwrap();
            let m = moments_from_map(&map, &p, k).unwrap();
            let back = map_from_moments(&m, k, None).unwrap();
            assert!((back.r - map.r).abs() < 1e-8, "case {case}: r {} vs {}", back.r, map.r);
            for i in 0..k {
                assert!(
                    (back.u[i] - map.u[i]).norm() < 1e-8,
                    "case {case}: u_{i} {} vs {}",
                    back.u[i],
                    map.u[i]
                );
            }
        }
    }

    #[test]
    fn moment_json_schema() {
        let m = MomentVector {
            t0: 0.96,
            t: vec![c64(0.0, 0.0), c64(0.1, 0.0)],
            v: vec![c64(0.5, -0.25), c64(0.0, 0.0)],
            v0: Some(0.3),
        };
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["t0"], 0.96);
        assert_eq!(json["t"][1][0], 0.1);
        assert_eq!(json["v"][0][1], -0.25);
        assert!(json.get("v0").is_none());
        let back: MomentVector = serde_json::from_value(json).unwrap();
        assert_eq!(back.t0, m.t0);
        assert_eq!(back.t, m.t);
    }
}
