use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dsab_core::enumeration::with_jobs;
use dsab_core::model::DamperConfiguration;
use dsab_core::moea::Algorithm;
use dsab_core::study::{self, StudyConfig};

/// Seismic response and damper placement for two coupled adjacent buildings.
#[derive(Parser, Debug)]
#[command(name = "dsab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Study configuration (TOML). Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Seed for `optimize`, base seed for `benchmark`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, short, default_value_t = 0)]
    jobs: usize,
    /// Write the fully resolved configuration to the output directory.
    #[arg(long)]
    emit_effective_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Top-floor response without and with dampers.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Damper positions, e.g. 2-4-7.
        #[arg(long)]
        dampers: Option<DamperConfiguration>,
    },
    /// Evaluate every placement and extract the exact front.
    Enumerate {
        #[command(flatten)]
        common: Common,
    },
    /// One seeded evolutionary run.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// nsga2, mopso1 or mopso2.
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Success rates of the configured algorithms against the exact front.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<StudyConfig> {
    match &common.config {
        Some(path) => Ok(StudyConfig::load(path)?),
        None => Ok(StudyConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, mut cfg) = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Enumerate { common }
        | Command::Optimize { common, .. }
        | Command::Benchmark { common } => (common.clone(), load(common)?),
    };
    match &cli.command {
        Command::Simulate { dampers: Some(d), .. } => cfg.simulate.configuration = Some(d.clone()),
        Command::Optimize { algorithm: Some(a), .. } => cfg.moea.algorithm = *a,
        _ => {}
    }
    if let Some(seed) = common.seed {
        cfg.moea.seed = seed;
        cfg.benchmark.base_seed = seed;
    }
    cfg.validate().context("invalid configuration")?;

    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("cannot create {}", common.out.display()))?;
    if common.emit_effective_config {
        let path = study::write_effective_config(&cfg, &common.out)?;
        eprintln!("wrote {}", path.display());
    }
    let out = common.out.as_path();

    with_jobs(common.jobs, || -> Result<()> {
        match &cli.command {
            Command::Simulate { .. } => {
                for p in study::simulate(&cfg, out)? {
                    println!(
                        "dampers {:<12} peak top displacement left {:.3} mm, right {:.3} mm",
                        p.configuration,
                        p.top_left * 1e3,
                        p.top_right * 1e3
                    );
                }
            }
            Command::Enumerate { .. } => {
                let (front, timing) = study::enumerate(&cfg, out)?;
                println!(
                    "{} configurations, {} front points, {:.3} ms per evaluation",
                    timing.configurations,
                    front.len(),
                    timing.mean_ms_per_evaluation
                );
            }
            Command::Optimize { .. } => {
                let (result, path) = study::optimize(&cfg, out)?;
                println!(
                    "{} seed {}: {} nondominated points, {} evaluations -> {}",
                    result.algorithm,
                    result.seed,
                    result.points.len(),
                    result.n_fe,
                    path.display()
                );
            }
            Command::Benchmark { .. } => {
                study::benchmark(&cfg, out)?;
                print!("{}", std::fs::read_to_string(out.join("benchmark.txt"))?);
            }
        }
        Ok(())
    })??;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
