//! Trace CSV emission and the human-readable run summary.
//!
//! The CSV is the plotting interface: one row per time step, header
//! `k,w_hat,w_sq_hat,w_oracle,w_mode_1,...,w_mode_m,w_markov_exact,mc_mean_sq,mc_stderr`,
//! absent values as empty fields, floats rendered with 17 significant
//! digits so they round-trip exactly.

use std::io::{self, Write};
use std::path::Path;

use sjls_core::WassersteinTrace;

use crate::analysis::AnalysisResult;
use crate::config::{AnalysisConfig, Engine};

/// 17 significant digits: enough for exact `f64` round-trips.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Writes the merged trace as CSV, rows ordered by `k` ascending.
pub fn write_csv<W: Write>(
    out: &mut W,
    trace: &WassersteinTrace,
    num_modes: usize,
) -> io::Result<()> {
    let mode_cols: Vec<String> = (1..=num_modes).map(|j| format!("w_mode_{j}")).collect();
    writeln!(
        out,
        "k,w_hat,w_sq_hat,w_oracle,{},w_markov_exact,mc_mean_sq,mc_stderr",
        mode_cols.join(",")
    )?;
    for entry in &trace.entries {
        let per_mode: Vec<String> = match &entry.per_mode_w {
            Some(ws) => ws.iter().map(|&w| fmt_float(w)).collect(),
            None => vec![String::new(); num_modes],
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            entry.k,
            fmt_float(entry.w_hat),
            fmt_float(entry.w_sq_hat),
            fmt_opt(entry.w_oracle),
            per_mode.join(","),
            fmt_opt(entry.w_markov_exact),
            fmt_opt(entry.mc_mean_sq),
            fmt_opt(entry.mc_stderr),
        )?;
    }
    Ok(())
}

/// Writes the CSV to a file.
pub fn emit_csv(
    trace: &WassersteinTrace,
    num_modes: usize,
    path: impl AsRef<Path>,
) -> io::Result<()> {
    let mut buf = Vec::new();
    write_csv(&mut buf, trace, num_modes)?;
    std::fs::write(path, buf)
}

/// Renders the plain-text run summary. The verdict it reports is a pure
/// function of the emitted trace plus the configured epsilon/window, so it
/// can be recomputed from the CSV alone.
pub fn render_summary(cfg: &AnalysisConfig, result: &AnalysisResult) -> String {
    let mut s = String::new();
    let law_kind = match &cfg.law {
        sjls_core::SwitchingLaw::Iid { .. } => "iid",
        sjls_core::SwitchingLaw::Schedule { .. } => "schedule",
        sjls_core::SwitchingLaw::Markov { .. } => "markov",
    };
    s.push_str(&format!(
        "jump linear system analysis: {} modes, state dim {}, {} law, horizon {}\n",
        cfg.system.num_modes(),
        cfg.system.dim(),
        law_kind,
        cfg.horizon,
    ));
    s.push_str(&format!(
        "engines: {}\n",
        cfg.engines
            .iter()
            .map(|e| e.name())
            .collect::<Vec<_>>()
            .join(", ")
    ));

    let w0 = result.merged.w_at(0).unwrap_or(f64::NAN);
    s.push_str(&format!(
        "w(0) = {:.9}, w({}) = {:.9}\n",
        w0,
        result.merged.horizon(),
        result.verdict.final_w,
    ));
    s.push_str(&format!(
        "convergence: status={} epsilon={:e} window={}",
        result.verdict.status.name(),
        cfg.convergence.epsilon,
        cfg.convergence.window,
    ));
    match result.verdict.first_k_below_epsilon {
        Some(k) => s.push_str(&format!(" first_k_below_epsilon={k}\n")),
        None => s.push_str(" first_k_below_epsilon=none\n"),
    }

    if let Some(dev) = result.oracle_max_abs_dev {
        s.push_str(&format!(
            "enumeration oracle (product-of-marginals law, k <= {}): max |w_hat - w_oracle| = {:.3e}\n",
            cfg.oracle_horizon, dev,
        ));
    }
    if let Some(report) = &result.mc_report {
        let passed = report.checks.iter().filter(|c| c.pass).count();
        let reference = result
            .mc_reference
            .map(Engine::name)
            .unwrap_or("none");
        let mc = cfg.mc.as_ref().expect("mc report implies mc settings");
        s.push_str(&format!(
            "monte carlo (N={}, seed={}, k <= {}): {}/{} steps within {} sigma of {}\n",
            mc.num_trajectories,
            mc.seed,
            mc.horizon,
            passed,
            report.checks.len(),
            report.sigma_mult,
            reference,
        ));
    }
    if let Some(entry) = result.merged.entries.last()
        && let Some(per_mode) = &entry.per_mode_w
    {
        let final_modes: Vec<String> = per_mode
            .iter()
            .enumerate()
            .map(|(j, w)| format!("w_mode_{}={:.6}", j + 1, w))
            .collect();
        s.push_str(&format!(
            "no-switch traces at k={}: {}\n",
            entry.k,
            final_modes.join(", ")
        ));
    }
    s
}
