//! The harmonic moment maps in both directions: measure (t0, t_k, v_k) of a
//! droplet by contour quadrature, then recover the conformal map back from
//! the moments by damped Newton.
//!
//! Run with: cargo run --release --example inverse_moments

use lglab::conformal::LaurentMap;
use lglab::potential::{map_from_moments, moments_from_map, MomentVector, Potential};
use lglab::util::c64;

fn main() {
    let p = Potential::uniform(1.0);

    // Forward: moments of an ellipse-like droplet.
    let map = LaurentMap::new(1.0, vec![c64(0.05, 0.0), c64(0.2, 0.0), c64(0.0, 0.04)]).unwrap();
    let m = moments_from_map(&map, &p, 6).unwrap();
    println!("droplet r = {}, u = {:?}", map.r, map.u);
    println!("t0 = {:.12}", m.t0);
    for (k, t) in m.t.iter().enumerate() {
        if t.norm() > 1e-14 {
            println!("t_{} = {:.6} + {:.6}i", k + 1, t.re, t.im);
        }
    }

    // Inverse: recover the map from the measured moments.
    let back = map_from_moments(&m, 6, None).unwrap();
    println!("\nrecovered r = {:.12}", back.r);
    let err: f64 = back
        .u
        .iter()
        .zip(&map.u)
        .map(|(a, b)| (a - b).norm())
        .fold((back.r - map.r).abs(), f64::max);
    println!("max coefficient error: {err:.3e}");

    // The pure-(t0, t2) family stays an ellipse for any t2: solving at
    // t2 = 0.4 gives the very eccentric r = 5/3, u1 = 4/3 --
    // min |z'| = r - u stays positive (no cusp on this branch).
    let eccentric = MomentVector {
        t0: 1.0,
        t: vec![c64(0.0, 0.0), c64(0.4, 0.0)],
        v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
        v0: None,
    };
    let sol = map_from_moments(&eccentric, 2, None).unwrap();
    println!(
        "\n(t0 = 1, t2 = 0.4) -> r = {:.6}, u1 = {:.6}, min |z'| = {:.4}",
        sol.r,
        sol.u[1].re,
        sol.univalence_report().min_abs_dz
    );

    // A three-fold perturbation t3 does lose univalence when pushed:
    // u2 = 3 t3 r^2 crosses r/2.
    for t3 in [0.05, 0.1, 0.15, 0.16, 0.17] {
        let m3 = MomentVector {
            t0: 1.0,
            t: vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(t3, 0.0)],
            v: vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
            v0: None,
        };
        match map_from_moments(&m3, 3, None) {
            Ok(sol) => println!(
                "t3 = {t3}: r = {:.4}, u2 = {:.4}, min |z'| = {:.4}",
                sol.r,
                sol.u[2].re,
                sol.univalence_report().min_abs_dz
            ),
            Err(e) => println!("t3 = {t3}: {e}"),
        }
    }
}
