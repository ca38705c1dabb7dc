//! Runs the engines a config requests and merges their outputs into one
//! trace table keyed by time step, plus a convergence verdict.

use thiserror::Error;

use sjls_core::montecarlo::{self, SamplerConfig, ValidationReport};
use sjls_core::propagation;
use sjls_core::{LawMode, WassersteinTrace};

use crate::config::{AnalysisConfig, Engine, MC_SIGMA_MULT};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{engine}: {source}")]
    Engine {
        engine: &'static str,
        #[source]
        source: sjls_core::Error,
    },
}

fn engine_err(engine: &'static str) -> impl FnOnce(sjls_core::Error) -> AnalysisError {
    move |source| AnalysisError::Engine { engine, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Converged,
    Diverging,
    Inconclusive,
}

impl ConvergenceStatus {
    pub fn name(self) -> &'static str {
        match self {
            ConvergenceStatus::Converged => "converged",
            ConvergenceStatus::Diverging => "diverging",
            ConvergenceStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Convergence assessment of the split-and-merge trace.
#[derive(Debug, Clone)]
pub struct ConvergenceVerdict {
    pub status: ConvergenceStatus,
    pub first_k_below_epsilon: Option<usize>,
    pub final_w: f64,
}

/// Threshold-plus-window verdict on a `W(k)` series:
/// converged when the last `window` values sit below `epsilon`, diverging
/// when they are strictly increasing and the final value exceeds the
/// initial one, inconclusive otherwise.
pub fn convergence_verdict(w: &[f64], epsilon: f64, window: usize) -> ConvergenceVerdict {
    let final_w = *w.last().expect("traces are never empty");
    let first_k_below_epsilon = w.iter().position(|&v| v < epsilon);

    let status = if w.len() >= window && w[w.len() - window..].iter().all(|&v| v < epsilon) {
        ConvergenceStatus::Converged
    } else if w.len() > window
        && w[w.len() - window - 1..].windows(2).all(|p| p[1] > p[0])
        && final_w > w[0]
    {
        ConvergenceStatus::Diverging
    } else {
        ConvergenceStatus::Inconclusive
    };

    ConvergenceVerdict {
        status,
        first_k_below_epsilon,
        final_w,
    }
}

/// Everything `analyze` produces: the merged per-step table, the verdict,
/// and the side reports of the optional engines.
#[derive(Debug)]
pub struct AnalysisResult {
    pub merged: WassersteinTrace,
    pub verdict: ConvergenceVerdict,
    pub num_modes: usize,
    /// `max |w_hat - w_oracle|` over the enumerated steps, when the
    /// enumeration oracle ran.
    pub oracle_max_abs_dev: Option<f64>,
    pub mc_report: Option<ValidationReport<f64>>,
    /// Engine whose trace the Monte Carlo run was validated against.
    pub mc_reference: Option<Engine>,
}

/// Runs every requested engine and merges the outputs.
pub fn run_analysis(cfg: &AnalysisConfig) -> Result<AnalysisResult, AnalysisError> {
    let sys = &cfg.system;
    let law = &cfg.law;
    let init = &cfg.initial_state;

    let split_merge = propagation::run_split_and_merge(sys, law, init, cfg.horizon)
        .map_err(engine_err("split_merge"))?;
    let mut merged = split_merge.clone();

    if cfg.wants(Engine::SingleModes) {
        let mut per_mode: Vec<WassersteinTrace> = Vec::with_capacity(sys.num_modes());
        for j in 0..sys.num_modes() {
            per_mode.push(
                propagation::run_single_mode(sys, j, init, cfg.horizon)
                    .map_err(engine_err("single_modes"))?,
            );
        }
        for (k, entry) in merged.entries.iter_mut().enumerate() {
            entry.per_mode_w = Some(
                per_mode
                    .iter()
                    .map(|t| t.w_at(k).expect("same horizon"))
                    .collect(),
            );
        }
    }

    if cfg.wants(Engine::ModeConditional) {
        let trace = propagation::run_mode_conditional(sys, law, init, cfg.horizon)
            .map_err(engine_err("mode_conditional"))?;
        for (entry, mc_entry) in merged.entries.iter_mut().zip(&trace.entries) {
            entry.w_markov_exact = Some(mc_entry.w_hat);
        }
    }

    let mut oracle_max_abs_dev = None;
    if cfg.wants(Engine::Enumerate) {
        let mut worst = 0.0f64;
        for (k, entry) in merged
            .entries
            .iter_mut()
            .enumerate()
            .take(cfg.oracle_horizon + 1)
        {
            let w_oracle = if k == 0 {
                init.wasserstein_to_dirac()
            } else {
                propagation::enumerate_mixture(
                    sys,
                    law,
                    LawMode::ProductOfMarginals,
                    init,
                    k,
                    None,
                )
                .map_err(engine_err("enumerate"))?
                .wasserstein_sq_to_dirac()
                .sqrt()
            };
            entry.w_oracle = Some(w_oracle);
            if k > 0 {
                worst = worst.max((entry.w_hat - w_oracle).abs());
            }
        }
        oracle_max_abs_dev = Some(worst);
    }

    let mut mc_report = None;
    let mut mc_reference = None;
    if cfg.wants(Engine::Montecarlo) {
        let mc = cfg.mc.as_ref().expect("validated: montecarlo needs mc");
        let moments = montecarlo::run_sampler(
            sys,
            law,
            init,
            &SamplerConfig {
                num_trajectories: mc.num_trajectories,
                seed: mc.seed,
                horizon: mc.horizon,
                law_mode: mc.law_mode,
            },
        )
        .map_err(engine_err("montecarlo"))?;
        for (entry, m) in merged.entries.iter_mut().zip(&moments.entries) {
            entry.mc_mean_sq = Some(m.mean_sq);
            entry.mc_stderr = Some(m.stderr);
        }
        // Validate against the engine that is exact for the sampled law:
        // the chain law against the mode-conditional recursion (when it
        // ran), the product-of-marginals law against split-and-merge.
        let reference = match mc.law_mode {
            LawMode::Chain if law.is_markov() && cfg.wants(Engine::ModeConditional) => {
                let trace = propagation::run_mode_conditional(sys, law, init, mc.horizon)
                    .map_err(engine_err("mode_conditional"))?;
                Some((Engine::ModeConditional, trace))
            }
            LawMode::Chain if law.is_markov() => None,
            _ => Some((Engine::SplitMerge, split_merge.truncated(mc.horizon))),
        };
        if let Some((engine, reference_trace)) = reference {
            mc_report = Some(
                montecarlo::validate_trace(&reference_trace, &moments, MC_SIGMA_MULT)
                    .map_err(engine_err("montecarlo"))?,
            );
            mc_reference = Some(engine);
        }
    }

    let w_series: Vec<f64> = merged.entries.iter().map(|e| e.w_hat).collect();
    let verdict = convergence_verdict(&w_series, cfg.convergence.epsilon, cfg.convergence.window);

    Ok(AnalysisResult {
        merged,
        verdict,
        num_modes: sys.num_modes(),
        oracle_max_abs_dev,
        mc_report,
        mc_reference,
    })
}
