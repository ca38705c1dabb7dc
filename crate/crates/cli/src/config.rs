//! JSON analysis configuration: schema, parsing and validation.
//!
//! A config is a single versioned JSON document with row-major matrices:
//!
//! ```json
//! {
//!   "version": 1,
//!   "system": { "modes": [[[0.7, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 0.85]]] },
//!   "switching": { "type": "markov", "pi0": [0.5, 0.5],
//!                  "transition": [[0.75, 0.25], [0.2, 0.8]] },
//!   "initial_state": { "mean": [5.0, 5.0], "cov": [[0.1, 0.0], [0.0, 0.1]] },
//!   "horizon": 64,
//!   "engines": ["split_merge", "enumerate"],
//!   "oracle_horizon": 12,
//!   "mc": { "num_trajectories": 100000, "seed": 7,
//!           "horizon": 20, "law_mode": "product_of_marginals" },
//!   "convergence": { "epsilon": 0.05, "window": 5 }
//! }
//! ```
//!
//! Switching variants: `iid` (`pi`), `schedule` (`marginals`, one vector
//! per step starting at step 1) and `markov` (`pi0`, `transition`).
//!
//! Mode-timing convention: the mode applied to `x(k) -> x(k+1)` is
//! distributed as the step-`k+1` occupation marginal; for a Markov law the
//! first applied mode is therefore drawn from `pi0 · P`, with `pi0` acting
//! as a pre-dynamics prior. All engines, the sampler and every shipped
//! fixture use this convention.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sjls_core::{Gaussian, JumpLinearSystem, LawMode, Matrix, SwitchingLaw};

/// Default enumeration horizon when the `enumerate` engine is requested
/// without an explicit `oracle_horizon`.
const DEFAULT_ORACLE_HORIZON: usize = 12;

/// Convergence defaults: threshold on `W(k)` and trailing window length.
const DEFAULT_EPSILON: f64 = 1e-2;
const DEFAULT_WINDOW: usize = 5;

/// Multiple of the Monte Carlo standard error allowed between analytic
/// and sampled mean-square values.
pub const MC_SIGMA_MULT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Parse failures carry serde_json's line/column report.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unsupported config version {found} (this tool reads version 1)")]
    Version { found: u32 },

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Engines selectable in a config. `split_merge` is always required: the
/// convergence verdict is defined on its trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    SplitMerge,
    ModeConditional,
    Enumerate,
    SingleModes,
    Montecarlo,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::SplitMerge => "split_merge",
            Engine::ModeConditional => "mode_conditional",
            Engine::Enumerate => "enumerate",
            Engine::SingleModes => "single_modes",
            Engine::Montecarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LawModeArg {
    ProductOfMarginals,
    Chain,
}

impl From<LawModeArg> for LawMode {
    fn from(arg: LawModeArg) -> Self {
        match arg {
            LawModeArg::ProductOfMarginals => LawMode::ProductOfMarginals,
            LawModeArg::Chain => LawMode::Chain,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    system: RawSystem,
    switching: RawSwitching,
    initial_state: RawInitialState,
    horizon: usize,
    engines: Vec<Engine>,
    #[serde(default)]
    oracle_horizon: Option<usize>,
    #[serde(default)]
    mc: Option<RawMc>,
    #[serde(default)]
    convergence: Option<RawConvergence>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    modes: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    mode_names: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawSwitching {
    Iid { pi: Vec<f64> },
    Schedule { marginals: Vec<Vec<f64>> },
    Markov { pi0: Vec<f64>, transition: Vec<Vec<f64>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialState {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    num_trajectories: usize,
    seed: u64,
    #[serde(default)]
    horizon: Option<usize>,
    #[serde(default)]
    law_mode: Option<LawModeArg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    epsilon: f64,
    window: usize,
}

/// Monte Carlo settings with defaults resolved.
#[derive(Debug, Clone)]
pub struct McSettings {
    pub num_trajectories: usize,
    pub seed: u64,
    pub horizon: usize,
    pub law_mode: LawMode,
}

/// Convergence assessment settings.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceSettings {
    pub epsilon: f64,
    pub window: usize,
}

/// Fully validated analysis configuration.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub system: JumpLinearSystem,
    pub law: SwitchingLaw,
    pub initial_state: Gaussian,
    pub horizon: usize,
    /// Deduplicated, in canonical execution order.
    pub engines: Vec<Engine>,
    pub oracle_horizon: usize,
    pub mc: Option<McSettings>,
    pub convergence: ConvergenceSettings,
}

impl AnalysisConfig {
    pub fn wants(&self, engine: Engine) -> bool {
        self.engines.contains(&engine)
    }
}

/// Loads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<AnalysisConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a config from its JSON text.
pub fn parse_config(text: &str) -> Result<AnalysisConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    if raw.version != 1 {
        return Err(ConfigError::Version { found: raw.version });
    }

    let modes = raw
        .system
        .modes
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            Matrix::from_rows(rows).map_err(|e| invalid(&format!("system.modes[{i}]"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut system =
        JumpLinearSystem::new(modes).map_err(|e| invalid("system.modes", e))?;
    if let Some(names) = raw.system.mode_names {
        system = system
            .with_mode_names(names)
            .map_err(|e| invalid("system.mode_names", e))?;
    }

    let law = match raw.switching {
        RawSwitching::Iid { pi } => {
            SwitchingLaw::iid(pi).map_err(|e| invalid("switching.pi", e))?
        }
        RawSwitching::Schedule { marginals } => {
            SwitchingLaw::schedule(marginals).map_err(|e| invalid("switching.marginals", e))?
        }
        RawSwitching::Markov { pi0, transition } => {
            let transition = Matrix::from_rows(&transition)
                .map_err(|e| invalid("switching.transition", e))?;
            SwitchingLaw::markov(pi0, transition).map_err(|e| invalid("switching", e))?
        }
    };
    if law.num_modes() != system.num_modes() {
        return Err(invalid(
            "switching",
            format!(
                "law covers {} modes, system has {}",
                law.num_modes(),
                system.num_modes()
            ),
        ));
    }

    let cov = Matrix::from_rows(&raw.initial_state.cov)
        .map_err(|e| invalid("initial_state.cov", e))?;
    if raw.initial_state.mean.len() != system.dim() {
        return Err(invalid(
            "initial_state.mean",
            format!(
                "length {} does not match state dimension {}",
                raw.initial_state.mean.len(),
                system.dim()
            ),
        ));
    }
    let initial_state = Gaussian::new(raw.initial_state.mean, cov)
        .map_err(|e| invalid("initial_state", e))?;

    if raw.horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let horizon = raw.horizon;

    if raw.engines.is_empty() {
        return Err(invalid("engines", "at least one engine is required"));
    }
    let requested: BTreeSet<Engine> = raw.engines.iter().copied().collect();
    if !requested.contains(&Engine::SplitMerge) {
        return Err(invalid(
            "engines",
            "split_merge is required (the convergence verdict is defined on its trace)",
        ));
    }
    if requested.contains(&Engine::ModeConditional) && !law.is_markov() {
        return Err(invalid(
            "engines",
            "mode_conditional requires a markov switching law",
        ));
    }
    // Canonical execution order.
    let engines: Vec<Engine> = [
        Engine::SplitMerge,
        Engine::SingleModes,
        Engine::ModeConditional,
        Engine::Enumerate,
        Engine::Montecarlo,
    ]
    .into_iter()
    .filter(|e| requested.contains(e))
    .collect();

    let oracle_horizon = match raw.oracle_horizon {
        Some(k) => {
            if k == 0 {
                return Err(invalid("oracle_horizon", "must be at least 1"));
            }
            if k > horizon {
                return Err(invalid(
                    "oracle_horizon",
                    format!("{k} exceeds the analysis horizon {horizon}"),
                ));
            }
            k
        }
        None => DEFAULT_ORACLE_HORIZON.min(horizon),
    };

    let mc = match raw.mc {
        Some(raw_mc) => {
            if raw_mc.num_trajectories < 2 {
                return Err(invalid("mc.num_trajectories", "need at least 2"));
            }
            let mc_horizon = raw_mc.horizon.unwrap_or(horizon);
            if mc_horizon == 0 || mc_horizon > horizon {
                return Err(invalid(
                    "mc.horizon",
                    format!("must be within 1..={horizon}"),
                ));
            }
            Some(McSettings {
                num_trajectories: raw_mc.num_trajectories,
                seed: raw_mc.seed,
                horizon: mc_horizon,
                law_mode: raw_mc
                    .law_mode
                    .map(LawMode::from)
                    .unwrap_or(LawMode::ProductOfMarginals),
            })
        }
        None => None,
    };
    if requested.contains(&Engine::Montecarlo) && mc.is_none() {
        return Err(invalid(
            "mc",
            "the montecarlo engine needs an mc settings block",
        ));
    }

    let convergence = match raw.convergence {
        Some(c) => {
            if !c.epsilon.is_finite() || c.epsilon <= 0.0 {
                return Err(invalid("convergence.epsilon", "must be positive"));
            }
            if c.window == 0 {
                return Err(invalid("convergence.window", "must be at least 1"));
            }
            ConvergenceSettings {
                epsilon: c.epsilon,
                window: c.window,
            }
        }
        None => ConvergenceSettings {
            epsilon: DEFAULT_EPSILON,
            window: DEFAULT_WINDOW,
        },
    };

    // Schedules must cover the horizon up front.
    law.ensure_horizon(horizon)
        .map_err(|e| invalid("switching.marginals", e))?;

    Ok(AnalysisConfig {
        system,
        law,
        initial_state,
        horizon,
        engines,
        oracle_horizon,
        mc,
        convergence,
    })
}
