//! Exterior conformal maps z(w) = r w + sum_k u_k w^{-k}, their Newton
//! inversion, boundary discretization, the exterior Green's function, and
//! the Schwarz function on and near the boundary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{MomentVector, Potential};
use crate::util::serde_complex_vec;

/// Truncated exterior map from |w| > 1 onto the droplet complement.
/// `u[0]` is the constant term u_0 (a translation), `u[k]` multiplies w^{-k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentMap {
    /// Conformal radius; real and positive by the normalization of the map.
    pub r: f64,
    #[serde(with = "serde_complex_vec")]
    pub u: Vec<Complex64>,
}

/// Numerical univalence certificate for a map.
#[derive(Debug, Clone, Copy)]
pub struct UnivalenceReport {
    /// min |z'(e^{i phi})| over a fine grid.
    pub min_abs_dz: f64,
    /// Whether the discretized boundary is a simple (non self-intersecting) curve.
    pub simple: bool,
}

const UNIVALENCE_GRID: usize = 4096;
const SIMPLE_CURVE_GRID: usize = 512;
const INVERT_TOL: f64 = 1e-12;
const INVERT_MAX_ITER: usize = 100;

impl LaurentMap {
    pub fn new(r: f64, u: Vec<Complex64>) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Validation(format!("conformal radius must be positive, got {r}")));
        }
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Validation("map coefficients must be finite".into()));
        }
        Ok(Self { r, u })
    }

    pub(crate) fn new_unchecked(r: f64, u: Vec<Complex64>) -> Self {
        Self { r, u }
    }

    pub fn disk(r: f64) -> Self {
        Self { r, u: Vec::new() }
    }

    /// Number of stored Laurent coefficients (the truncation order K).
    pub fn coeff_count(&self) -> usize {
        self.u.len()
    }

    /// Series evaluation without the |w| >= 1 domain check. Used internally
    /// where the analytic continuation slightly inside the unit circle is
    /// legitimate (thin-layer quadratures).
    pub(crate) fn eval_raw(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut z = self.r * w;
        let mut dz = Complex64::new(self.r, 0.0);
        let winv = 1.0 / w;
        let mut wk = Complex64::new(1.0, 0.0); // w^{-k}
        for (i, &u) in self.u.iter().enumerate() {
            let k = i as f64;
            // u_k w^{-k}; derivative -k u_k w^{-k-1}
            z += u * wk;
            dz -= k * u * wk * winv;
            wk *= winv;
        }
        (z, dz)
    }

    /// z''(w) = sum_k k (k+1) u_k w^{-k-2}.
    pub(crate) fn second_deriv(&self, w: Complex64) -> Complex64 {
        let winv = 1.0 / w;
        let mut wk = winv * winv; // w^{-k-2} starting at k = 0
        let mut d2 = Complex64::default();
        for (i, &u) in self.u.iter().enumerate() {
            let k = i as f64;
            d2 += k * (k + 1.0) * u * wk;
            wk *= winv;
        }
        d2
    }

    /// Univalence certificate: min |z'| on a fine grid plus a segment
    /// intersection test on the discretized curve.
    pub fn univalence_report(&self) -> UnivalenceReport {
        let mut min_abs = f64::INFINITY;
        for j in 0..UNIVALENCE_GRID {
            let phi = std::f64::consts::TAU * j as f64 / UNIVALENCE_GRID as f64;
            let (_, dz) = self.eval_raw(Complex64::from_polar(1.0, phi));
            min_abs = min_abs.min(dz.norm());
        }
        UnivalenceReport { min_abs_dz: min_abs, simple: self.curve_is_simple() }
    }

    pub fn certify_univalent(&self) -> Result<()> {
        let rep = self.univalence_report();
        if rep.min_abs_dz < 1e-9 * self.r || !rep.simple {
            return Err(Error::Cusp { min_abs_dz: rep.min_abs_dz });
        }
        Ok(())
    }

    fn curve_is_simple(&self) -> bool {
        let n = SIMPLE_CURVE_GRID;
        let pts: Vec<Complex64> = (0..n)
            .map(|j| {
                self.eval_raw(Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).0
            })
            .collect();
        for i in 0..n {
            let a1 = pts[i];
            let a2 = pts[(i + 1) % n];
            for j in (i + 2)..n {
                // Skip segments sharing an endpoint (j adjacent to i).
                if i == 0 && j == n - 1 {
                    continue;
                }
                let b1 = pts[j];
                let b2 = pts[(j + 1) % n];
                if segments_intersect(a1, a2, b1, b2) {
                    return false;
                }
            }
        }
        true
    }

    /// Winding-number test for z strictly inside the droplet.
    pub fn contains(&self, z: Complex64) -> bool {
        let n = 1024;
        let mut winding = 0.0;
        let mut prev = self.eval_raw(Complex64::new(1.0, 0.0)).0 - z;
        for j in 1..=n {
            let phi = std::f64::consts::TAU * j as f64 / n as f64;
            let cur = self.eval_raw(Complex64::from_polar(1.0, phi)).0 - z;
            winding += (cur / prev).arg();
            prev = cur;
        }
        winding.abs() > std::f64::consts::PI
    }
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Evaluate the map and its derivative at |w| >= 1.
pub fn eval_map(map: &LaurentMap, w: Complex64) -> Result<(Complex64, Complex64)> {
    if w.norm() < 1.0 - 1e-12 {
        return Err(Error::Domain(format!("|w| = {} < 1", w.norm())));
    }
    Ok(map.eval_raw(w))
}

fn newton_invert(map: &LaurentMap, z: Complex64, seed: Complex64) -> Option<Complex64> {
    let mut w = seed;
    for _ in 0..INVERT_MAX_ITER {
        let (zw, dz) = map.eval_raw(w);
        let f = zw - z;
        if f.norm() <= INVERT_TOL {
            return Some(w);
        }
        if dz.norm() < 1e-14 || w.norm() < 1e-9 {
            return None;
        }
        w -= f / dz;
    }
    let (zw, _) = map.eval_raw(w);
    if (zw - z).norm() <= INVERT_TOL {
        Some(w)
    } else {
        None
    }
}

fn invert_with_floor(map: &LaurentMap, z: Complex64, floor: f64) -> Result<Complex64> {
    // Primary seed w = z/r, then a deterministic boundary-grid fallback.
    let candidates = newton_invert(map, z, z / map.r).filter(|w| w.norm() >= floor);
    let w = match candidates {
        Some(w) => Some(w),
        None => {
            let n = 4096;
            let mut best = Complex64::new(1.0, 0.0);
            let mut best_d = f64::INFINITY;
            for j in 0..n {
                let wj = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
                let d = (map.eval_raw(wj).0 - z).norm();
                if d < best_d {
                    best_d = d;
                    best = wj;
                }
            }
            newton_invert(map, z, best * 1.000001).filter(|w| w.norm() >= floor)
        }
    };
    match w {
        Some(w) => Ok(w),
        None => {
            if map.contains(z) {
                Err(Error::InteriorPoint(format!("z = {z} lies inside the droplet")))
            } else {
                Err(Error::NoConvergence(format!("map inversion failed at z = {z}")))
            }
        }
    }
}

/// Invert the exterior map: the unique w with |w| >= 1 and z(w) = z.
pub fn invert_map(map: &LaurentMap, z: Complex64) -> Result<Complex64> {
    invert_with_floor(map, z, 1.0 - 1e-9)
}

/// Inversion extended into the annulus of analytic continuation just inside
/// the unit circle, for thin-layer evaluations on both sides of the boundary.
pub(crate) fn invert_map_annulus(map: &LaurentMap, z: Complex64, w_floor: f64) -> Result<Complex64> {
    invert_with_floor(map, z, w_floor)
}

/// One node of a discretized droplet edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryNode {
    pub phi: f64,
    pub z: Complex64,
    /// z'(e^{i phi})
    pub dz_dw: Complex64,
    /// Unit normal pointing into the exterior.
    pub normal: Complex64,
    /// Unit tangent, tangent = i * normal.
    pub tangent: Complex64,
    pub sigma: f64,
    /// |w'(z)| = 1 / |z'(w)|.
    pub wprime_abs: f64,
}

/// Discretized droplet edge on a uniform grid in the uniformizing angle.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub nodes: Vec<BoundaryNode>,
}

impl Boundary {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn delta_phi(&self) -> f64 {
        std::f64::consts::TAU / self.nodes.len() as f64
    }

    /// Total arc length by the trapezoid rule: sum |z'| dphi.
    pub fn arc_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.dz_dw.norm()).sum::<f64>() * self.delta_phi()
    }
}

/// Discretize the droplet edge into n nodes with frames and densities.
/// n >= 64 (powers of two preferred) is recommended for quadrature use;
/// smaller grids are allowed for inspection.
pub fn boundary_grid(map: &LaurentMap, p: &Potential, n: usize) -> Result<Boundary> {
    if n < 4 {
        return Err(Error::Validation(format!("boundary grid needs n >= 4, got {n}")));
    }
    map.certify_univalent()?;
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let phi = std::f64::consts::TAU * j as f64 / n as f64;
        let w = Complex64::from_polar(1.0, phi);
        let (z, dz) = map.eval_raw(w);
        let normal = w * dz / dz.norm();
        let node = BoundaryNode {
            phi,
            z,
            dz_dw: dz,
            normal,
            tangent: Complex64::new(0.0, 1.0) * normal,
            sigma: p.eval_sigma(z)?,
            wprime_abs: 1.0 / dz.norm(),
        };
        nodes.push(node);
    }
    Ok(Boundary { nodes })
}

/// Second argument of the Green's function: a finite exterior point or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenPoint {
    Finite(Complex64),
    Infinity,
}

impl From<Complex64> for GreenPoint {
    fn from(z: Complex64) -> Self {
        GreenPoint::Finite(z)
    }
}

/// Green's function of the exterior Dirichlet problem,
/// G(z, z2) = log |(w(z) - w(z2)) / (1 - w(z) conj(w(z2)))|,
/// with G(z, infinity) = -log |w(z)|.
pub fn green(map: &LaurentMap, z: Complex64, z2: GreenPoint) -> Result<f64> {
    let w1 = invert_map(map, z)?;
    match z2 {
        GreenPoint::Infinity => Ok(-w1.norm().ln()),
        GreenPoint::Finite(z2) => {
            let w2 = invert_map(map, z2)?;
            if (w1 - w2).norm() < 1e-14 {
                return Err(Error::Domain("Green's function evaluated at z = z2".into()));
            }
            Ok(((w1 - w2) / (Complex64::new(1.0, 0.0) - w1 * w2.conj())).norm().ln())
        }
    }
}

/// Normal derivative of G(., infinity) at a boundary node: -|w'(z)|.
pub fn green_normal_deriv_at_infinity(b: &Boundary, node_index: usize) -> f64 {
    -b.nodes[node_index].wprime_abs
}

/// Boundary value of the (generalized) Schwarz function at a node:
/// S(z) = dz U, which is zbar for the uniform background.
pub fn schwarz_on_boundary(map: &LaurentMap, p: &Potential, node: &BoundaryNode) -> Result<Complex64> {
    let _ = map;
    p.schwarz_boundary_value(node.z)
}

/// Two-sided Laurent series of the Schwarz function,
/// S(z) = sum_k k t_k z^{k-1} + t0/z + sum_k v_k z^{-k-1},
/// valid in an annular neighborhood of the droplet edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchwarzSeries {
    /// Coefficients k * t_k for k = 1..=k_max.
    #[serde(with = "serde_complex_vec")]
    pub exterior: Vec<Complex64>,
    pub t0: f64,
    /// Coefficients v_k for k = 1..=k_max.
    #[serde(with = "serde_complex_vec")]
    pub interior: Vec<Complex64>,
}

impl SchwarzSeries {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(self.t0, 0.0) / z;
        let mut zk = Complex64::new(1.0, 0.0); // z^{k-1}
        for c in &self.exterior {
            s += c * zk;
            zk *= z;
        }
        let zinv = 1.0 / z;
        let mut zmk = zinv * zinv; // z^{-k-1}
        for v in &self.interior {
            s += v * zmk;
            zmk *= zinv;
        }
        s
    }

    pub fn k_max(&self) -> usize {
        self.exterior.len()
    }
}

/// Schwarz function of the curve by reflection: S(z) = G(1/w(z)) with G the
/// conjugate-coefficient map, G(xi) = r xi + sum_k conj(u_k) xi^{-k}. On the
/// curve this is exactly zbar (uniform background); off the curve it is the
/// analytic continuation, valid wherever the map inverts -- unlike the
/// two-sided Laurent series, whose inner convergence radius is set by the
/// Schwarz singularities (the foci of an ellipse).
pub fn schwarz_reflection(map: &LaurentMap, z: Complex64) -> Result<Complex64> {
    let w = invert_map_annulus(map, z, 0.5)?;
    let xi = 1.0 / w;
    let mut s = map.r * xi;
    let xi_inv = w;
    let mut xk = Complex64::new(1.0, 0.0); // xi^{-k}
    for u in &map.u {
        s += u.conj() * xk;
        xk *= xi_inv;
    }
    Ok(s)
}

/// Package a moment vector as the Schwarz-function Laurent series.
pub fn schwarz_series(m: &MomentVector) -> Result<SchwarzSeries> {
    m.validate()?;
    let exterior = m
        .t
        .iter()
        .enumerate()
        .map(|(i, t)| (i + 1) as f64 * t)
        .collect();
    Ok(SchwarzSeries { exterior, t0: m.t0, interior: m.v.clone() })
}
