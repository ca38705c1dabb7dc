//! Batch front end for jump linear system robustness analysis: config
//! loading, engine orchestration, CSV trace emission and the convergence
//! summary. The `sjls` binary is a thin wrapper over this library.

pub mod analysis;
pub mod config;
pub mod output;

pub use analysis::{
    AnalysisError, AnalysisResult, ConvergenceStatus, ConvergenceVerdict, convergence_verdict,
    run_analysis,
};
pub use config::{AnalysisConfig, ConfigError, Engine, McSettings, load_config, parse_config};
pub use output::{emit_csv, render_summary, write_csv};
