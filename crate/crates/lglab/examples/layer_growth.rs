//! Stochastic growth layer: sample M-point layers from the joint growth
//! density, histogram the layer width around the boundary, and compare
//! with the classical (Darcy) width h_cl = (eps / 2 pi sigma) |w'|.
//!
//! Run with: cargo run --release --example layer_growth

use lglab::conformal::boundary_grid;
use lglab::growth::{
    check_darcy_agreement, classical_width, layer_width_histogram, sample_layer, DarcyConfig,
    LayerSample, WidthAssignment,
};
use lglab::potential::{map_from_moments, moments_from_map, MomentVector, Potential};
use lglab::util::{c64, derive_seed};
use rayon::prelude::*;

fn main() {
    let hbar = 0.005;
    let m_points = 32; // eigenvalues added per layer
    let ensemble = 400usize;
    let seed = 7u64;

    // The reference ellipse droplet (t0 = 0.96, t2 = 0.1).
    let moments0 = MomentVector {
        t0: 0.96,
        t: vec![c64(0.0, 0.0), c64(0.1, 0.0)],
        v: vec![c64(0.0, 0.0), c64(0.0, 0.0)],
        v0: None,
    };
    let map = map_from_moments(&moments0, 2, None).unwrap();
    let p = Potential::uniform(hbar);
    let m = moments_from_map(&map, &p, 16).unwrap();

    println!("sampling {ensemble} layers of M = {m_points} eigenvalues (eps = M hbar = {}) ...", m_points as f64 * hbar);
    let samples: Vec<LayerSample> = (0..ensemble)
        .into_par_iter()
        .map(|i| sample_layer(&map, &p, &m, hbar, m_points, derive_seed(seed, i as u64), 240).unwrap())
        .collect();

    let b = boundary_grid(&map, &p, 512).unwrap();
    let hist = layer_width_histogram(&samples, &b, 16, WidthAssignment::ConformalFoot).unwrap();
    let eps = m_points as f64 * hbar;

    println!("{:>8} {:>12} {:>12} {:>10}", "phi", "mean_h", "h_classical", "stderr");
    for bin in 0..hist.bins() {
        let node = bin * (512 / 16) + 16;
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:>10.6}",
            0.5 * (hist.phi_low[bin] + hist.phi_high[bin]),
            hist.mean_h[bin],
            classical_width(&b, eps, node),
            hist.stderr[bin]
        );
    }
    println!(
        "collected area: {:.5} (layer area M hbar = {:.5})",
        hist.collected_area(&b),
        eps
    );

    let rep = check_darcy_agreement(&map, &p, hbar, m_points, ensemble, seed, DarcyConfig::default())
        .unwrap();
    println!("relative L2 error vs Darcy: {:.4}", rep.l2_rel_error);
}
