//! Simulation laboratory for stochastic Laplacian growth in the normal
//! random matrix picture: finite-N Coulomb-gas sampling, growth-layer
//! statistics, classical (Darcy) interface evolution via conserved harmonic
//! moments, and numerical checks of the underlying identities, including
//! the universality of the fluctuation partition function.
//!
//! The crate is organized around the physical pipeline:
//!
//! - [`potential`]: external potentials, backgrounds, harmonic moment maps
//! - [`conformal`]: exterior Laurent maps, inversion, Green's function
//! - [`gas`]: finite-N Metropolis sampling of the eigenvalue gas
//! - [`growth`]: layer densities and samplers, classical width/velocity,
//!   moment-conserving evolution
//! - [`verify`]: identity checks, exact Ginibre oracles, the fluctuation
//!   partition function, CUE angular statistics
//! - [`config`] / [`runner`]: batch front end behind the `lg-lab` binary
//!
//! Runnable walkthroughs live in `examples/`; see the README.

pub mod artifact;
pub mod config;
pub mod conformal;
pub mod error;
pub mod gas;
pub mod growth;
pub mod potential;
pub mod runner;
pub mod svg;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
