//! Experiment runner CLI: validates cocycle fixtures, evaluates natural maps
//! with certificates, sweeps slice Jacobians, integrates volumes and runs the
//! degree-inequality and property batteries. Reports are JSON
//! (natmap-report/1) plus optional CSV; identical config and seed reproduce
//! byte-identical reports except for the timestamp field.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use natmap_core::cli::{run, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "natmap", version, about = "Busemann barycenters and natural maps for measurable cocycles")]
struct Cli {
    /// Path to the TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for report.json / report.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Scale all quadrature budgets by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    budget_scale: f64,

    /// Print the default config as TOML and exit.
    #[arg(long, global = true)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Relator descent and cocycle-identity validation of the fixture.
    ValidateCocycle,
    /// Evaluate the natural map with barycenter certificates.
    NaturalMap,
    /// Slice Jacobians (analytic, finite-difference, bound chain) over s.
    JacobianSweep,
    /// Volume of a slice family over the fundamental domain.
    Volume,
    /// Mapping-degree inequality on the double-cover fixture.
    DegreeCheck,
    /// Randomized property battery across all modules.
    PropertySuite,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_toml(&text).map_err(|e| format!("{e}"))?
        }
        None => match cli.seed {
            Some(seed) => ExperimentConfig::default_with_seed(seed),
            None => {
                return Err(
                    "a config file (--config) or an explicit --seed is required".to_string()
                )
            }
        },
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.budget_scale != 1.0 {
        if cli.budget_scale <= 0.0 {
            return Err("--budget-scale must be positive".into());
        }
        config.scale_budgets(cli.budget_scale);
    }
    Ok(config)
}

fn emit(report: &Report, csv: Option<&str>, out: &Option<PathBuf>) -> std::io::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let json_path = dir.join("report.json");
            std::fs::write(&json_path, report.to_json())?;
            eprintln!("wrote {}", json_path.display());
            if let Some(csv) = csv {
                let csv_path = dir.join("report.csv");
                std::fs::write(&csv_path, csv)?;
                eprintln!("wrote {}", csv_path.display());
            }
        }
        None => println!("{}", report.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.print_defaults {
        println!("{}", ExperimentConfig::default_with_seed(42).to_toml());
        return ExitCode::SUCCESS;
    }

    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
    };

    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see --help");
        return ExitCode::from(1);
    };

    let outcome = match command {
        Command::ValidateCocycle => run::run_validate_cocycle(&config).map(|r| (r, None)),
        Command::NaturalMap => run::run_natural_map(&config).map(|r| (r, None)),
        Command::JacobianSweep => {
            run::run_jacobian_sweep(&config).map(|(r, csv)| (r, Some(csv)))
        }
        Command::Volume => run::run_volume(&config).map(|(r, csv)| (r, Some(csv))),
        Command::DegreeCheck => run::run_degree_check(&config).map(|r| (r, None)),
        Command::PropertySuite => run::run_property_suite(&config).map(|r| (r, None)),
    };

    match outcome {
        Ok((report, csv)) => {
            if emit(&report, csv.as_deref(), &cli.out).is_err() {
                eprintln!("failed to write the report");
                return ExitCode::from(1);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("FAIL: certificates embedded in the report");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
