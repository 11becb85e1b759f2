//! Config-driven experiment runner behind the `lg-lab` binary: executes
//! the named experiment, writes CSV/JSON/SVG artifacts plus a manifest with
//! content hashes, and maps failures onto stable exit codes.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::artifact::{ArtifactWriter, CsvField};
use crate::config::{Experiment, RunConfig};
use crate::conformal::{boundary_grid, LaurentMap};
use crate::error::Error;
use crate::gas::{radial_density, sample_gas, GasState};
use crate::growth::{
    check_darcy_agreement, classical_width, evolve_classical, layer_width_histogram, sample_layer,
    DarcyConfig, GrowthDensity, LayerSample, WidthAssignment,
};
use crate::potential::moments_from_map;
use crate::svg::{render_boundary_svg, SvgOptions};
use crate::util::derive_seed;
use crate::verify::{
    check_a_expansion, check_schwarz_velocity, check_stokes, cue_angular_statistics,
    one_point_normalization, partition_function_mc, semiclassical_vs_exact, CheckReport, CueConfig,
};

/// Runner failure, carrying the process exit code contract:
/// config errors exit 2, numerical errors 3, I/O errors 4.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    /// Failed checks for verify-all (0 for other experiments).
    pub checks_failed: usize,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Execute an experiment. All randomness flows from the (possibly
/// overridden) config seed; ensemble parallelism is order-stable, so the
/// emitted artifacts are byte-identical across re-runs and thread counts.
pub fn run(config: &RunConfig, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let mut config = config.clone();
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.output = out.to_string_lossy().into_owned();
    }
    config.validate().map_err(|e| RunError::Config(e.to_string()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(overrides.jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    pool.install(|| dispatch(&config))
}

fn dispatch(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let out_dir = Path::new(&config.output);
    let mut writer = ArtifactWriter::new(out_dir)?;
    let checks_failed = match config.experiment {
        Experiment::Gas => {
            run_gas(config, &mut writer)?;
            0
        }
        Experiment::Grow => {
            run_grow(config, &mut writer)?;
            0
        }
        Experiment::Evolve => {
            run_evolve(config, &mut writer)?;
            0
        }
        Experiment::Universality => {
            run_universality(config, &mut writer)?;
            0
        }
        Experiment::VerifyAll => run_verify_all(config, &mut writer)?,
    };
    writer.finish(serde_json::json!({
        "experiment": format!("{:?}", config.experiment),
        "seed": config.seed,
        "hbar": config.hbar,
    }))?;
    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), checks_failed })
}

fn write_boundary_csv(
    writer: &mut ArtifactWriter,
    b: &crate::conformal::Boundary,
) -> Result<(), RunError> {
    let rows: Vec<Vec<CsvField>> = b
        .nodes
        .iter()
        .map(|n| {
            vec![
                CsvField::Float(n.phi),
                CsvField::Float(n.z.re),
                CsvField::Float(n.z.im),
                CsvField::Float(n.wprime_abs),
                CsvField::Float(n.sigma),
            ]
        })
        .collect();
    writer.write_csv("boundary.csv", &["phi", "re_z", "im_z", "wprime_abs", "sigma"], &rows)?;
    Ok(())
}

fn run_gas(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<(), RunError> {
    let p = config.potential()?;
    let states: Vec<GasState> = (0..config.sampler.ensemble)
        .into_par_iter()
        .map(|i| {
            sample_gas(
                &p,
                config.n,
                config.sampler.sweeps,
                derive_seed(config.seed, i as u64),
                config.sampler.step_scale,
            )
        })
        .collect::<crate::error::Result<_>>()?;

    let mut rows = Vec::new();
    for (i, s) in states.iter().enumerate() {
        for z in &s.points {
            rows.push(vec![CsvField::UInt(i as u64), CsvField::Float(z.re), CsvField::Float(z.im)]);
        }
    }
    writer.write_csv("eigenvalues.csv", &["sample_id", "re", "im"], &rows)?;

    // Plain snapshot of the first state, one eigenvalue per row.
    let rows: Vec<Vec<CsvField>> = states[0]
        .points
        .iter()
        .map(|z| vec![CsvField::Float(z.re), CsvField::Float(z.im)])
        .collect();
    writer.write_csv("snapshot.csv", &["re", "im"], &rows)?;

    let hist = radial_density(&states, config.resolution.bins)?;
    let rows: Vec<Vec<CsvField>> = (0..hist.density.len())
        .map(|b| {
            vec![
                CsvField::Float(hist.edges[b]),
                CsvField::Float(hist.edges[b + 1]),
                CsvField::Float(hist.density[b]),
                CsvField::Float(hist.stderr[b]),
                CsvField::UInt(hist.counts[b]),
            ]
        })
        .collect();
    writer.write_csv(
        "radial_density.csv",
        &["r_low", "r_high", "density", "stderr", "count"],
        &rows,
    )?;

    writer.write_json(
        "run.json",
        &serde_json::json!({
            "seed": config.seed,
            "potential": p,
            "n": config.n,
            "sweeps": config.sampler.sweeps,
            "ensemble": config.sampler.ensemble,
            "acceptance": states.iter().map(|s| s.acceptance_rate).collect::<Vec<_>>(),
        }),
    )?;

    if config.svg {
        let radius = (config.n as f64 * config.hbar).sqrt();
        let svg = render_boundary_svg(
            &[LaurentMap::disk(radius)],
            &SvgOptions { points: states[0].points.clone(), ..Default::default() },
        )?;
        writer.write_bytes("gas.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn run_grow(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<(), RunError> {
    let p = config.potential()?;
    let map = config.droplet()?;
    let m = moments_from_map(&map, &p, config.resolution.k_max.max(map.coeff_count()))?;
    let density = GrowthDensity::new(&map, &p, &m, config.hbar)?;
    let samples: Vec<LayerSample> = (0..config.sampler.ensemble)
        .into_par_iter()
        .map(|i| {
            crate::growth::sample_layer(
                &map,
                &p,
                &m,
                config.hbar,
                config.m,
                derive_seed(config.seed, i as u64),
                config.sampler.sweeps,
            )
        })
        .collect::<crate::error::Result<_>>()?;
    let _ = &density;

    let mut rows = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        for z in &s.points {
            rows.push(vec![CsvField::UInt(i as u64), CsvField::Float(z.re), CsvField::Float(z.im)]);
        }
    }
    writer.write_csv("layer_points.csv", &["sample_id", "re", "im"], &rows)?;

    let b = boundary_grid(&map, &p, config.resolution.boundary_nodes)?;
    write_boundary_csv(writer, &b)?;
    let hist =
        layer_width_histogram(&samples, &b, config.resolution.bins, WidthAssignment::ConformalFoot)?;
    let rows: Vec<Vec<CsvField>> = (0..hist.bins())
        .map(|bin| {
            vec![
                CsvField::Float(hist.phi_low[bin]),
                CsvField::Float(hist.phi_high[bin]),
                CsvField::Float(hist.mean_h[bin]),
                CsvField::Float(hist.stderr[bin]),
            ]
        })
        .collect();
    writer.write_csv(
        "width_histogram.csv",
        &["phi_low", "phi_high", "mean_h", "stderr"],
        &rows,
    )?;

    let report = check_darcy_agreement(
        &map,
        &p,
        config.hbar,
        config.m,
        config.sampler.ensemble,
        config.seed,
        DarcyConfig {
            sweeps: config.sampler.sweeps,
            bins: config.resolution.bins,
            boundary_nodes: config.resolution.boundary_nodes,
        },
    )?;
    writer.write_json("darcy_report.json", &report)?;

    if config.svg {
        let eps = config.m as f64 * config.hbar;
        let widths: Vec<f64> = (0..b.n_nodes()).map(|j| classical_width(&b, eps, j)).collect();
        let svg = render_boundary_svg(
            std::slice::from_ref(&map),
            &SvgOptions {
                points: samples[0].points.clone(),
                width_overlay: Some(widths),
                ..Default::default()
            },
        )?;
        writer.write_bytes("grow.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn run_evolve(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<(), RunError> {
    let p = config.potential()?;
    let map = config.droplet()?;
    let evolution = evolve_classical(&map, &p, config.eps, config.steps)?;
    let maps = evolution.maps();

    // JSON-lines: one map per line.
    let mut jsonl = String::new();
    for m in &maps {
        jsonl.push_str(&serde_json::to_string(m).map_err(std::io::Error::from)?);
        jsonl.push('\n');
    }
    writer.write_bytes("evolution.jsonl", jsonl.as_bytes())?;

    let rows: Vec<Vec<CsvField>> = evolution
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                CsvField::UInt(i as u64),
                CsvField::Float(s.conserved_moments.t0),
                CsvField::Float(s.after.r),
                CsvField::Float(s.eps),
            ]
        })
        .collect();
    writer.write_csv("steps.csv", &["step", "t0", "r", "eps"], &rows)?;

    if let Some(cusp) = &evolution.cusp {
        writer.write_json("cusp.json", cusp)?;
    }

    if config.svg {
        let combined = render_boundary_svg(&maps, &SvgOptions::default())?;
        writer.write_bytes("evolution.svg", combined.as_bytes())?;
        for (i, m) in maps.iter().enumerate() {
            let frame = render_boundary_svg(std::slice::from_ref(m), &SvgOptions::default())?;
            writer.write_bytes(&format!("frame_{i:04}.svg"), frame.as_bytes())?;
        }
    }
    Ok(())
}

fn run_universality(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<(), RunError> {
    let p = config.potential()?;
    let map = config.droplet()?;
    let m = moments_from_map(&map, &p, config.resolution.k_max.max(map.coeff_count()))?;
    let density = GrowthDensity::new(&map, &p, &m, config.hbar)?;
    let shape_id = if map.u.iter().all(|u| u.norm() < 1e-12) { "disk" } else { "custom" };
    let report = partition_function_mc(
        &density,
        config.m,
        config.resolution.samples,
        config.seed,
        shape_id,
    )?;
    writer.write_json("universality_report.json", &report)?;
    writer.write_csv(
        "universality_summary.csv",
        &["shape", "m", "hbar", "z_estimate", "stderr", "reference", "c_p_fitted", "ess"],
        &[vec![
            CsvField::Str(report.shape_id.clone()),
            CsvField::UInt(report.m as u64),
            CsvField::Float(report.hbar),
            CsvField::Float(report.z_estimate),
            CsvField::Float(report.stderr),
            CsvField::Float(report.reference),
            CsvField::Float(report.c_p_fitted),
            CsvField::Float(report.ess),
        ]],
    )?;
    Ok(())
}

fn run_verify_all(config: &RunConfig, writer: &mut ArtifactWriter) -> Result<usize, RunError> {
    let reports = verify_all(config)?;
    writer.write_json("checks.json", &reports)?;
    let rows: Vec<Vec<CsvField>> = reports
        .iter()
        .map(|r| {
            vec![
                CsvField::Str(r.name.clone()),
                CsvField::Float(r.lhs),
                CsvField::Float(r.rhs),
                CsvField::Float(r.rel_error),
                CsvField::Float(r.tolerance),
                CsvField::Bool(r.passed),
            ]
        })
        .collect();
    writer.write_csv(
        "summary.csv",
        &["check", "lhs", "rhs", "rel_error", "tol", "passed"],
        &rows,
    )?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        writer.write_json(
            "failure_report.json",
            &serde_json::json!({
                "failed": reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect::<Vec<_>>(),
            }),
        )?;
    }
    Ok(failed)
}

/// The default verification battery: identity checks on the disk and the
/// reference ellipse, the exact-oracle comparisons, the partition-function
/// universality pair, and the CUE angular statistics.
pub fn verify_all(config: &RunConfig) -> Result<Vec<CheckReport>, RunError> {
    let p = config.potential()?;
    if !p.is_uniform() {
        return Err(RunError::Config(
            "verify-all runs on the uniform background".into(),
        ));
    }
    let seed = config.seed;
    let mut reports = Vec::new();

    let ellipse = LaurentMap::new(1.0, vec![Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.0)])?;
    let disk = LaurentMap::disk(1.0);

    // Schwarz-velocity identity on the evolving ellipse.
    let m_ellipse = moments_from_map(&ellipse, &p, 16)?;
    let ev = evolve_classical(&ellipse, &p, 1e-3 * std::f64::consts::PI, 3)?;
    let mut r = check_schwarz_velocity(&ev.maps(), &p, 1.0, 64)?;
    r.name = "schwarz_velocity_ellipse".into();
    reports.push(r);

    // Quadratic expansion of A.
    let m_disk = moments_from_map(&disk, &p, 4)?;
    let mut r = check_a_expansion(&disk, &p, &m_disk, 16, &[1e-2, 5e-3, 2.5e-3])?;
    r.name = "a_expansion_disk".into();
    reports.push(r);
    let mut r = check_a_expansion(&ellipse, &p, &m_ellipse, 16, &[1e-2, 5e-3, 2.5e-3])?;
    r.name = "a_expansion_ellipse".into();
    reports.push(r);

    // Layer <-> contour identity on the annulus and an ellipse layer.
    let mut r = check_stokes(
        &disk,
        &LaurentMap::disk(1.05f64.sqrt()),
        &p,
        config.resolution.quadrature,
    )?;
    r.name = "stokes_annulus".into();
    reports.push(r);
    let mut m_after = moments_from_map(&ellipse, &p, 2)?;
    m_after.t0 += 0.05;
    let ellipse_after =
        crate::potential::map_from_moments(&m_after, 2, Some(&ellipse))?;
    let mut r = check_stokes(&ellipse, &ellipse_after, &p, config.resolution.quadrature)?;
    r.name = "stokes_ellipse".into();
    reports.push(r);

    // Semiclassical density against the exact finite-N oracle.
    reports.push(semiclassical_vs_exact(&[50, 100, 200], config.hbar)?);

    // One-point normalization integral (disk, within 2%).
    let density = GrowthDensity::new(&disk, &p, &m_disk, config.hbar)?;
    let integral = one_point_normalization(&density, 256, 96)?;
    reports.push(
        CheckReport::evaluate("one_point_normalization", integral, 1.0, 0.02, 1e-12)
            .with_resolution("n_theta", 256.0)
            .with_resolution("n_rho", 96.0),
    );

    // Universality: disk vs ellipse at M = 2.
    let hbar_u = 0.02;
    let p_u = crate::potential::Potential::uniform(hbar_u);
    let m_disk_u = moments_from_map(&disk, &p_u, 4)?;
    let m_ell_u = moments_from_map(&ellipse, &p_u, 16)?;
    let d_disk = GrowthDensity::new(&disk, &p_u, &m_disk_u, hbar_u)?;
    let d_ell = GrowthDensity::new(&ellipse, &p_u, &m_ell_u, hbar_u)?;
    let rep_disk =
        partition_function_mc(&d_disk, 2, config.resolution.samples, seed, "disk")?;
    let rep_ell = partition_function_mc(
        &d_ell,
        2,
        config.resolution.samples,
        derive_seed(seed, 1),
        "ellipse",
    )?;
    let reference = crate::growth::C_P_UNIFORM;
    reports.push(
        CheckReport::evaluate("universality_disk_m2", rep_disk.z_estimate, reference, 0.05, 1e-12)
            .with_resolution("stderr", rep_disk.stderr)
            .with_resolution("ess", rep_disk.ess)
            .with_seed(seed),
    );
    let combined = (rep_disk.stderr.powi(2) + rep_ell.stderr.powi(2)).sqrt();
    let shape_diff = (rep_disk.z_estimate - rep_ell.z_estimate).abs();
    reports.push(CheckReport {
        name: "universality_shape_independence".into(),
        lhs: rep_disk.z_estimate,
        rhs: rep_ell.z_estimate,
        abs_error: shape_diff,
        rel_error: shape_diff / combined.max(1e-300),
        tolerance: 2.0,
        passed: shape_diff <= 2.0 * combined,
        resolution: [("combined_stderr".to_string(), combined)].into_iter().collect(),
        seed: Some(seed),
    });

    // CUE angular statistics of the layer on the disk.
    let hbar_cue = 5e-4;
    let p_cue = crate::potential::Potential::uniform(hbar_cue);
    let m_disk_cue = moments_from_map(&disk, &p_cue, 4)?;
    let members = config.sampler.ensemble.max(200);
    let samples: Vec<LayerSample> = (0..members)
        .into_par_iter()
        .map(|i| {
            sample_layer(
                &disk,
                &p_cue,
                &m_disk_cue,
                hbar_cue,
                config.m,
                derive_seed(seed, 100 + i as u64),
                config.sampler.sweeps.max(400),
            )
        })
        .collect::<crate::error::Result<_>>()?;
    reports.push(cue_angular_statistics(
        &samples,
        derive_seed(seed, 7),
        CueConfig { sweeps: config.sampler.sweeps.max(400), members },
    )?);

    Ok(reports)
}
