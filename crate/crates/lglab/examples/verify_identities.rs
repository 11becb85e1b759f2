//! Numeric checks of the interface identities: the Schwarz-velocity
//! relation on the moving boundary, the quadratic growth of the modified
//! Schwarz potential, the layer <-> contour (Stokes) identity, and the
//! semiclassical density against the exact finite-N oracle.
//!
//! Run with: cargo run --release --example verify_identities

use lglab::conformal::LaurentMap;
use lglab::growth::evolve_classical;
use lglab::potential::{map_from_moments, moments_from_map, MomentVector, Potential};
use lglab::util::c64;
use lglab::verify::{
    check_a_expansion, check_schwarz_velocity, check_stokes, semiclassical_vs_exact, CheckReport,
};

fn show(r: &CheckReport) {
    println!(
        "{:<28} lhs = {:>12.6e}  rhs = {:>12.6e}  rel = {:.3e}  {}",
        r.name,
        r.lhs,
        r.rhs,
        r.rel_error,
        if r.passed { "pass" } else { "FAIL" }
    );
}

fn main() {
    let p = Potential::uniform(1.0);
    let disk = LaurentMap::disk(1.0);
    let m0 = MomentVector {
        t0: 0.96,
        t: vec![c64(0.0, 0.0), c64(0.1, 0.0)],
        v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
        v0: None,
    };
    let ellipse = map_from_moments(&m0, 2, None).unwrap();

    // dS/dt = 2 sigma conj(v) on the evolving ellipse.
    let ev = evolve_classical(&ellipse, &p, 1e-3 * std::f64::consts::PI, 3).unwrap();
    show(&check_schwarz_velocity(&ev.maps(), &p, 1.0, 64).unwrap());

    // A(z + delta n) = sigma delta^2 + O(delta^3).
    let m_disk = moments_from_map(&disk, &p, 4).unwrap();
    let r = check_a_expansion(&disk, &p, &m_disk, 16, &[1e-2, 5e-3, 2.5e-3]).unwrap();
    println!(
        "{:<28} ratio err = {:.3e}, residual exponent = {:.4}  {}",
        r.name,
        r.abs_error,
        r.resolution["residual_exponent"],
        if r.passed { "pass" } else { "FAIL" }
    );

    // Layer <-> contour identity on an annulus layer and an ellipse layer.
    show(&check_stokes(&disk, &LaurentMap::disk(1.05f64.sqrt()), &p, 512).unwrap());
    let mut m_after = m0.clone();
    m_after.t0 = 1.01;
    let after = map_from_moments(&m_after, 2, Some(&ellipse)).unwrap();
    show(&check_stokes(&ellipse, &after, &p, 512).unwrap());

    // Semiclassical one-point density vs the exact finite-N overlap.
    let r = semiclassical_vs_exact(&[50, 100, 200], 0.01).unwrap();
    println!(
        "{:<28} sup rel err: N=50 {:.3e} -> N=200 {:.3e}  {}",
        r.name,
        r.resolution["err_N_50"],
        r.resolution["err_N_200"],
        if r.passed { "pass" } else { "FAIL" }
    );
}
