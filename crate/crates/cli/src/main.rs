use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dyncirc::Family;
use dyncirc_cli::commands::{self, CNOT_FAMILIES, GHZ_FAMILIES};
use dyncirc_cli::config::{ExperimentConfig, Overrides};
use dyncirc_cli::output::{csv_bytes, emit, jsonl_bytes, sidecar_path, write_file, Sidecar};
use dyncirc_cli::verify::{verify, VerifyPlan};
use dyncirc_cli::CliResult;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "dyncirc", version, about = "Long-range gates with dynamic circuits: checks, sweeps, budgets")]
struct Cli {
    /// JSON experiment config (noise parameters plus sweep fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per certification sample.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Certification samples per sweep point.
    #[arg(long, global = true)]
    m_samples: Option<usize>,
    /// Output file; a JSON sidecar is written next to it. Stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the wall-clock timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Noiseless equivalence suite; exit status 1 on any failure.
    Verify,
    /// Long-range CNOT: model bound and certified gate fidelity per size.
    CnotSweep {
        /// Per-sample certification records as JSON lines.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// GHZ preparation: model bound and certified state fidelity per size.
    GhzSweep {
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Error budget of one family at one size, as JSON.
    Budget {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        size: usize,
    },
    /// Crossover size over a (λ_CNOT, λ_meas) grid.
    Crossover,
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    family: &'a str,
    size: usize,
    check: &'a str,
    result: &'a str,
    detail: &'a str,
}

fn write_outputs<C: Serialize>(cli: &Cli, command: &str, config: &C, bytes: &[u8]) -> CliResult<()> {
    emit(cli.out.as_deref(), bytes)?;
    if let Some(out) = &cli.out {
        let side = Sidecar::new(command, config, cli.reproducible);
        let mut text = serde_json::to_vec_pretty(&side)?;
        text.push(b'\n');
        write_file(&sidecar_path(out), &text)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        shots: cli.shots,
        m_samples: cli.m_samples,
    });
    cfg.validate()?;
    if let Some(w) = cfg.params.physicality_warning() {
        eprintln!("warning: {w}");
    }
    match &cli.cmd {
        Cmd::Verify => {
            let checks = verify(&VerifyPlan::default(), cfg.seed)?;
            println!("{:<20} {:>5}  {:<22} {:<6} detail", "family", "size", "check", "result");
            for c in &checks {
                let r = if c.passed { "PASS" } else { "FAIL" };
                println!("{:<20} {:>5}  {:<22} {:<6} {}", c.family, c.size, c.check, r, c.detail);
                if let Some(inst) = &c.instance {
                    eprintln!("failing instance {} n={}: {}", c.family, c.size, inst);
                }
            }
            if let Some(out) = &cli.out {
                let rows: Vec<VerifyRow> = checks
                    .iter()
                    .map(|c| VerifyRow {
                        family: &c.family,
                        size: c.size,
                        check: c.check,
                        result: if c.passed { "pass" } else { "fail" },
                        detail: &c.detail,
                    })
                    .collect();
                write_file(out, &csv_bytes(&rows)?)?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(failed == 0)
        }
        Cmd::CnotSweep { samples } => {
            let sweep = commands::cnot_sweep(&cfg)?;
            for v in &sweep.bound_violations {
                eprintln!("warning: {v}");
            }
            if let Some(p) = samples {
                write_file(p, &jsonl_bytes(&sweep.samples)?)?;
            }
            let resolved = cfg.resolve(&CNOT_FAMILIES, 1, 12, 1);
            let side = serde_json::json!({ "experiment": cfg, "resolved": resolved });
            write_outputs(cli, "cnot-sweep", &side, &csv_bytes(&sweep.rows)?)?;
            Ok(true)
        }
        Cmd::GhzSweep { samples } => {
            let sweep = commands::ghz_sweep(&cfg)?;
            for v in &sweep.bound_violations {
                eprintln!("warning: {v}");
            }
            if let Some(p) = samples {
                write_file(p, &jsonl_bytes(&sweep.samples)?)?;
            }
            let resolved = cfg.resolve(&GHZ_FAMILIES, 4, 12, 2);
            let side = serde_json::json!({ "experiment": cfg, "resolved": resolved });
            write_outputs(cli, "ghz-sweep", &side, &csv_bytes(&sweep.rows)?)?;
            Ok(true)
        }
        Cmd::Budget { family, size } => {
            let b = commands::budget_record(*family, *size, &cfg.model_params())?;
            let mut text = serde_json::to_vec_pretty(&b)?;
            text.push(b'\n');
            write_outputs(cli, "budget", &cfg, &text)?;
            Ok(true)
        }
        Cmd::Crossover => {
            let rows = commands::crossover_grid(&cfg)?;
            write_outputs(cli, "crossover", &cfg, &csv_bytes(&rows)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(Into::into)
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
