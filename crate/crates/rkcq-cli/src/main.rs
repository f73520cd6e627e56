//! Command line driver: single runs, convergence studies and self-tests.
//!
//! Thread count follows rayon's RAYON_NUM_THREADS environment variable.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rkcq::bem::SurfaceMesh;
use rkcq::harness::{self, RunConfig, StudyMode};

#[derive(Parser)]
#[command(name = "rkcq", about = "Transparent-boundary Schrödinger solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run described by a JSON config; writes per-step CSV.
    Run {
        config: PathBuf,
    },
    /// Refinement study on top of a base config.
    Study {
        config: PathBuf,
        /// Number of refinement levels (>= 3 for order fitting).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// time | simultaneous
        #[arg(long, default_value = "time")]
        mode: String,
        /// Optional CSV output path for the study table.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Convolution-weight oracle diagnostics.
    WeightsSelftest,
    /// Calderón residual decay diagnostics.
    CalderonSelftest {
        /// Refinement levels.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Surface mesh file (ASCII); default: built-in cube sequence.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let out = harness::run(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", out.csv);
            }
            eprintln!("{}", out.summary);
            if let Some(ext) = &out.exterior {
                for (p, flag) in ext.near_field.iter().enumerate() {
                    if *flag {
                        eprintln!("note: monitor point {p} is near the boundary; values are flagged");
                    }
                }
                let last = ext.values.last().unwrap();
                let line: Vec<String> = last.iter().map(|v| format!("{:.6e}", v.norm())).collect();
                eprintln!("exterior |u*| at final step: [{}]", line.join(", "));
            }
            Ok(out.monitors.is_non_expansive(1e-10))
        }
        Command::Study {
            config,
            levels,
            mode,
            output,
        } => {
            let cfg = RunConfig::from_file(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let mode = StudyMode::parse(&mode)?;
            let report = harness::convergence_study(&cfg, levels, mode)?;
            let table = report.table();
            match output {
                Some(path) => std::fs::write(&path, &table)?,
                None => print!("{table}"),
            }
            Ok(report.rows.iter().all(|r| r.max_l2_error.is_finite()))
        }
        Command::WeightsSelftest => {
            let report = harness::weights_selftest()?;
            println!("{}", report.text());
            Ok(report.pass)
        }
        Command::CalderonSelftest { levels, mesh } => {
            let base = match mesh {
                Some(path) => Some(SurfaceMesh::read_ascii(&path)?),
                None => None,
            };
            let report = harness::calderon_selftest(levels, base)?;
            println!("{}", report.text());
            Ok(report.pass)
        }
    }
}
