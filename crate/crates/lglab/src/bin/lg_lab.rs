//! `lg-lab`: batch front end for the growth laboratory.
//!
//! Subcommands map onto the library experiments; every run writes its
//! artifacts plus a manifest with content hashes into the output directory.
//! Exit codes: 0 success, 2 config error, 3 numerical/check failure,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lglab::config::{Experiment, RunConfig};
use lglab::runner::{run, Overrides};

#[derive(Parser)]
#[command(name = "lg-lab", version, about = "Stochastic Laplacian growth laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed override (replaces the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles (default: all cores; env LG_LAB_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ShapeArgs {
    /// Droplet area moment t0 (area = pi t0).
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    /// Exterior moment t2 (real part).
    #[arg(long, default_value_t = 0.0)]
    t2: f64,
    /// Exterior moment t3 (real part).
    #[arg(long, default_value_t = 0.0)]
    t3: f64,
}

impl ShapeArgs {
    fn to_moments_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t0": self.t0,
            "t": [[0.0, 0.0], [self.t2, 0.0], [self.t3, 0.0]],
            "v": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-N Coulomb-gas ensemble and radial density.
    Gas {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        hbar: f64,
        #[arg(long, default_value_t = 300)]
        sweeps: u64,
        #[arg(long, default_value_t = 200)]
        ensemble: usize,
        #[arg(long)]
        svg: bool,
    },
    /// Sample growth layers and compare widths with Darcy's law.
    Grow {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 32)]
        m: usize,
        #[arg(long, default_value_t = 0.005)]
        hbar: f64,
        #[arg(long, default_value_t = 240)]
        sweeps: u64,
        #[arg(long, default_value_t = 400)]
        ensemble: usize,
        #[arg(long)]
        svg: bool,
    },
    /// Classical moment-conserving evolution of the droplet.
    Evolve {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 0.0628)]
        eps: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        svg: bool,
    },
    /// Estimate the fluctuation partition function.
    Universality {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.02)]
        hbar: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Run the verification battery.
    Verify {
        /// Run every check (the default and only mode).
        #[arg(long)]
        all: bool,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let json = match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            return RunConfig::from_json(&text);
        }
        Command::Gas { n, hbar, sweeps, ensemble, svg } => serde_json::json!({
            "experiment": "gas",
            "n": n, "hbar": hbar, "svg": svg,
            "sampler": {"sweeps": sweeps, "ensemble": ensemble},
            "output": "lg-lab-out/gas",
        }),
        Command::Grow { shape, m, hbar, sweeps, ensemble, svg } => serde_json::json!({
            "experiment": "grow",
            "moments": shape.to_moments_json(),
            "m": m, "hbar": hbar, "svg": svg,
            "sampler": {"sweeps": sweeps, "ensemble": ensemble},
            "output": "lg-lab-out/grow",
        }),
        Command::Evolve { shape, eps, steps, svg } => serde_json::json!({
            "experiment": "evolve",
            "moments": shape.to_moments_json(),
            "eps": eps, "steps": steps, "svg": svg,
            "output": "lg-lab-out/evolve",
        }),
        Command::Universality { shape, m, hbar, samples } => serde_json::json!({
            "experiment": "universality",
            "moments": shape.to_moments_json(),
            "m": m, "hbar": hbar,
            "resolution": {"samples": samples},
            "output": "lg-lab-out/universality",
        }),
        Command::Verify { all: _ } => serde_json::json!({
            "experiment": "verify-all",
            "output": "lg-lab-out/verify",
        }),
    };
    RunConfig::from_json(&json.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let jobs = cli
        .jobs
        .or_else(|| std::env::var("LG_LAB_JOBS").ok().and_then(|v| v.parse().ok()));
    let overrides = Overrides { seed: cli.seed, out: cli.out.clone(), jobs };
    match run(&config, &overrides) {
        Ok(outcome) => {
            if matches!(config.experiment, Experiment::VerifyAll) {
                let summary = outcome.out_dir.join("checks.json");
                if let Ok(text) = std::fs::read_to_string(&summary) {
                    if let Ok(reports) = serde_json::from_str::<Vec<serde_json::Value>>(&text) {
                        for r in &reports {
                            let name = r["name"].as_str().unwrap_or("?");
                            let passed = r["passed"].as_bool().unwrap_or(false);
                            println!("{}: {}", name, if passed { "pass" } else { "FAIL" });
                        }
                    }
                }
                if outcome.checks_failed > 0 {
                    eprintln!("{} check(s) failed", outcome.checks_failed);
                    return ExitCode::from(3);
                }
            }
            println!("artifacts in {}", outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
