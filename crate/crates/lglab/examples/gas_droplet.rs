//! Finite-N Coulomb-gas droplet: sample an ensemble of eigenvalue
//! configurations, estimate the droplet radius, and compare the radial
//! density against the exact finite-N kernel.
//!
//! Run with: cargo run --release --example gas_droplet

use lglab::gas::{droplet_radius_estimate, radial_density, sample_gas, GasState};
use lglab::potential::Potential;
use lglab::util::derive_seed;
use lglab::verify::ginibre_mean_density;
use rayon::prelude::*;

fn main() {
    let n = 100usize; // eigenvalues per configuration
    let hbar = 0.01; // droplet area = pi N hbar = pi
    let sweeps = 300u64;
    let ensemble = 100usize;
    let seed = 42u64;

    println!("sampling {ensemble} chains of N = {n} eigenvalues, {sweeps} sweeps each ...");
    let p = Potential::uniform(hbar);
    let states: Vec<GasState> = (0..ensemble)
        .into_par_iter()
        .map(|i| sample_gas(&p, n, sweeps, derive_seed(seed, i as u64), 1.0).unwrap())
        .collect();

    let acc: f64 = states.iter().map(|s| s.acceptance_rate).sum::<f64>() / ensemble as f64;
    println!("mean acceptance rate: {acc:.3}");

    let r_hat = droplet_radius_estimate(&states, n as u64, hbar).unwrap();
    println!(
        "droplet radius estimate: {r_hat:.4}  (semiclassical sqrt(N hbar) = {:.4})",
        (n as f64 * hbar).sqrt()
    );

    println!("\nradial density vs the exact finite-N kernel (plateau 1/(pi hbar) = {:.2}):", 1.0 / (std::f64::consts::PI * hbar));
    let hist = radial_density(&states, 12).unwrap();
    println!("{:>8} {:>12} {:>12} {:>12}", "r_mid", "measured", "kernel", "stderr");
    for b in 0..12 {
        let r_mid = 0.5 * (hist.edges[b] + hist.edges[b + 1]);
        let kernel = ginibre_mean_density(n as u64, hbar, r_mid);
        println!(
            "{:>8.3} {:>12.3} {:>12.3} {:>12.3}",
            r_mid, hist.density[b], kernel, hist.stderr[b]
        );
    }
}
