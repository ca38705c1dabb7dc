//! `sjls` — robustness analysis of stochastic jump linear systems.
//!
//! Subcommands:
//! * `analyze --config <file> --out <csv> [--summary <txt>]` — run the
//!   configured engines, write the trace CSV, print the summary.
//! * `validate --config <file>` — parse and validate only.
//! * `compare --config <file> --oracle-horizon <k>` — print the maximum
//!   absolute deviation between the split-and-merge trace and the
//!   enumeration oracle over `k` steps.
//!
//! Exit codes: 0 success, 1 validation/usage failure, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sjls_cli::{
    AnalysisConfig, load_config, output, run_analysis,
};
use sjls_core::propagation::{enumerate_mixture, run_split_and_merge};
use sjls_core::LawMode;

#[derive(Parser)]
#[command(name = "sjls", version, about = "Wasserstein robustness analysis for stochastic jump linear systems")]
struct Cli {
    /// Override the Monte Carlo seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured engines and write the trace CSV.
    Analyze {
        /// Analysis config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional path for the plain-text summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Parse and validate a config, reporting what it describes.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the split-and-merge trace against the enumeration oracle.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Enumerate up to this step (component count grows as m^k).
        #[arg(long)]
        oracle_horizon: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version are successful outcomes; anything else is a
            // usage failure.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Analyze {
            config,
            out,
            summary,
        } => {
            let cfg = match load_with_seed(&config, cli.seed) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let result = match run_analysis(&cfg) {
                Ok(result) => result,
                Err(err) => {
                    eprintln!("error: {err}");
                    return 2;
                }
            };
            if let Err(err) = output::emit_csv(&result.merged, result.num_modes, &out) {
                eprintln!("error: cannot write {}: {err}", out.display());
                return 2;
            }
            let text = output::render_summary(&cfg, &result);
            if let Some(path) = summary
                && let Err(err) = std::fs::write(&path, &text)
            {
                eprintln!("error: cannot write {}: {err}", path.display());
                return 2;
            }
            print!("{text}");
            println!("trace written to {}", out.display());
            0
        }
        Command::Validate { config } => match load_with_seed(&config, cli.seed) {
            Ok(cfg) => {
                let law_kind = match &cfg.law {
                    sjls_core::SwitchingLaw::Iid { .. } => "iid",
                    sjls_core::SwitchingLaw::Schedule { .. } => "schedule",
                    sjls_core::SwitchingLaw::Markov { .. } => "markov",
                };
                println!(
                    "config ok: {} modes, state dim {}, {} law, horizon {}, engines [{}]",
                    cfg.system.num_modes(),
                    cfg.system.dim(),
                    law_kind,
                    cfg.horizon,
                    cfg.engines
                        .iter()
                        .map(|e| e.name())
                        .collect::<Vec<_>>()
                        .join(", "),
                );
                0
            }
            Err(code) => code,
        },
        Command::Compare {
            config,
            oracle_horizon,
        } => {
            let cfg = match load_with_seed(&config, cli.seed) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            if oracle_horizon == 0 || oracle_horizon > cfg.horizon {
                eprintln!(
                    "error: oracle-horizon must be within 1..={}",
                    cfg.horizon
                );
                return 1;
            }
            let trace = match run_split_and_merge(
                &cfg.system,
                &cfg.law,
                &cfg.initial_state,
                oracle_horizon,
            ) {
                Ok(trace) => trace,
                Err(err) => {
                    eprintln!("error: split_merge: {err}");
                    return 2;
                }
            };
            let mut worst = 0.0f64;
            for k in 1..=oracle_horizon {
                let mix = match enumerate_mixture(
                    &cfg.system,
                    &cfg.law,
                    LawMode::ProductOfMarginals,
                    &cfg.initial_state,
                    k,
                    None,
                ) {
                    Ok(mix) => mix,
                    Err(err) => {
                        eprintln!("error: enumerate: {err}");
                        return 2;
                    }
                };
                let w_oracle = mix.wasserstein_sq_to_dirac().sqrt();
                worst = worst.max((trace.w_at(k).unwrap() - w_oracle).abs());
            }
            println!(
                "max |w_hat - w_oracle| over k = 1..={oracle_horizon}: {worst:.3e}"
            );
            0
        }
    }
}

fn load_with_seed(path: &PathBuf, seed: Option<u64>) -> Result<AnalysisConfig, u8> {
    let mut cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return Err(1);
        }
    };
    if let (Some(seed), Some(mc)) = (seed, cfg.mc.as_mut()) {
        mc.seed = seed;
    }
    Ok(cfg)
}
