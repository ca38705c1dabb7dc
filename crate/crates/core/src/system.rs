//! Jump linear systems and the stochastic switching laws that drive them.
//!
//! A jump linear system is a finite family of square state maps
//! `A_1, ..., A_m`; at every step one map is selected at random and applied
//! to the state. The switching law describes the distribution of those
//! selections: i.i.d., an explicit per-step schedule, or a Markov chain
//! `(pi(0), P)` whose step-`k` marginal is `pi(k) = pi(0) · P^k`.
//!
//! # Timing convention
//!
//! The mode applied to the transition `x(k) -> x(k+1)` is distributed as
//! [`SwitchingLaw::marginal_at`]`(k + 1)`. For a Markov law this means the
//! first applied mode is drawn from `pi(0) · P`: the configured `pi(0)` is
//! a pre-dynamics prior, not the distribution of the first applied mode.
//! All engines, samplers and shipped fixtures follow this convention.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Scalar, lossy};

/// Finite family of square state maps sharing one state dimension.
#[derive(Debug, Clone)]
pub struct JumpLinearSystem<T> {
    modes: Vec<Matrix<T>>,
    dim: usize,
    mode_names: Option<Vec<String>>,
}

impl<T: Scalar> JumpLinearSystem<T> {
    /// Validates and builds a system. Fails on an empty mode set, a
    /// non-square or inconsistently sized mode, or non-finite entries.
    pub fn new(modes: Vec<Matrix<T>>) -> Result<Self> {
        let dim = match modes.first() {
            Some(first) => first.rows(),
            None => return Err(Error::EmptyModeSet),
        };
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        for (index, mode) in modes.iter().enumerate() {
            if mode.rows() != dim || mode.cols() != dim {
                return Err(Error::ModeShape {
                    index,
                    rows: mode.rows(),
                    cols: mode.cols(),
                    dim,
                });
            }
            if !mode.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("mode {index}"),
                });
            }
        }
        Ok(Self {
            modes,
            dim,
            mode_names: None,
        })
    }

    pub fn with_mode_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.modes.len() {
            return Err(Error::DimensionMismatch {
                what: "mode names".into(),
                expected: self.modes.len(),
                found: names.len(),
            });
        }
        self.mode_names = Some(names);
        Ok(self)
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Matrix<T>] {
        &self.modes
    }

    pub fn mode(&self, index: usize) -> Result<&Matrix<T>> {
        self.modes.get(index).ok_or(Error::ModeIndexOutOfRange {
            index,
            modes: self.modes.len(),
        })
    }

    pub fn mode_names(&self) -> Option<&[String]> {
        self.mode_names.as_deref()
    }
}

/// How a full mode sequence is weighted.
///
/// `ProductOfMarginals` multiplies the per-step occupation marginals, which
/// treats the steps as independent. `Chain` uses the true Markov path law
/// (first-step marginal times transition entries). The two coincide for
/// i.i.d. and scheduled laws, and for Markov laws with identical rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawMode {
    ProductOfMarginals,
    Chain,
}

/// Probability law over mode sequences.
#[derive(Debug, Clone)]
pub enum SwitchingLaw<T> {
    /// One fixed marginal for every step.
    Iid { probs: Vec<T> },
    /// Explicit marginals for steps `1..=horizon`; requests past the end
    /// are an error rather than an extrapolation.
    Schedule { marginals: Vec<Vec<T>> },
    /// Markov chain with pre-dynamics prior `initial` and row-stochastic
    /// `transition`.
    Markov {
        initial: Vec<T>,
        transition: Matrix<T>,
    },
}

impl<T: Scalar> SwitchingLaw<T> {
    pub fn iid(probs: Vec<T>) -> Result<Self> {
        let probs = normalized_prob_vector(probs, "switching probabilities")?;
        Ok(Self::Iid { probs })
    }

    pub fn schedule(marginals: Vec<Vec<T>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::ScheduleExhausted {
                step: 1,
                horizon: 0,
            });
        }
        let m = marginals[0].len();
        let mut validated = Vec::with_capacity(marginals.len());
        for (i, pi) in marginals.into_iter().enumerate() {
            if pi.len() != m {
                return Err(Error::DimensionMismatch {
                    what: format!("schedule entry {i}"),
                    expected: m,
                    found: pi.len(),
                });
            }
            validated.push(normalized_prob_vector(pi, &format!("schedule entry {i}"))?);
        }
        Ok(Self::Schedule {
            marginals: validated,
        })
    }

    pub fn markov(initial: Vec<T>, transition: Matrix<T>) -> Result<Self> {
        let m = initial.len();
        let initial = normalized_prob_vector(initial, "initial switching probabilities")?;
        if transition.rows() != m || transition.cols() != m {
            return Err(Error::TransitionShape {
                m,
                rows: transition.rows(),
                cols: transition.cols(),
            });
        }
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            rows.push(normalized_prob_vector(
                transition.row(i).to_vec(),
                &format!("transition row {i}"),
            )?);
        }
        Ok(Self::Markov {
            initial,
            transition: Matrix::from_rows(&rows)?,
        })
    }

    /// Number of modes the law covers.
    pub fn num_modes(&self) -> usize {
        match self {
            Self::Iid { probs } => probs.len(),
            Self::Schedule { marginals } => marginals[0].len(),
            Self::Markov { initial, .. } => initial.len(),
        }
    }

    pub fn is_markov(&self) -> bool {
        matches!(self, Self::Markov { .. })
    }

    /// Errors unless the law can serve marginals for steps `1..=horizon`.
    pub fn ensure_horizon(&self, horizon: usize) -> Result<()> {
        if let Self::Schedule { marginals } = self
            && horizon > marginals.len()
        {
            return Err(Error::ScheduleExhausted {
                step: marginals.len() + 1,
                horizon: marginals.len(),
            });
        }
        Ok(())
    }

    /// Occupation marginal `pi(k)` for `k >= 1`.
    ///
    /// The mode applied to the transition `x(k) -> x(k+1)` is distributed
    /// as `marginal_at(k + 1)`; for Markov laws `pi(k) = pi(0) · P^k`,
    /// computed iteratively.
    pub fn marginal_at(&self, k: usize) -> Result<Vec<T>> {
        if k == 0 {
            return Err(Error::StepIndexZero);
        }
        match self {
            Self::Iid { probs } => Ok(probs.clone()),
            Self::Schedule { marginals } => {
                marginals
                    .get(k - 1)
                    .cloned()
                    .ok_or(Error::ScheduleExhausted {
                        step: k,
                        horizon: marginals.len(),
                    })
            }
            Self::Markov {
                initial,
                transition,
            } => {
                let mut pi = initial.clone();
                for _ in 0..k {
                    pi = step_markov(&pi, transition);
                }
                Ok(pi)
            }
        }
    }

    /// Probability of an exact mode sequence under the selected law mode.
    /// `path.step(r)` is the mode applied to `x(r-1) -> x(r)`.
    pub fn path_probability(&self, path: &ModePath, mode: LawMode) -> Result<T> {
        let m = self.num_modes();
        for &j in path.steps() {
            if j >= m {
                return Err(Error::ModeIndexOutOfRange { index: j, modes: m });
            }
        }
        self.ensure_horizon(path.len())?;

        match (mode, self) {
            (
                LawMode::Chain,
                Self::Markov {
                    initial,
                    transition,
                },
            ) => {
                let first_marginal = step_markov(initial, transition);
                let steps = path.steps();
                let mut p = first_marginal[steps[0]];
                for pair in steps.windows(2) {
                    p *= transition[(pair[0], pair[1])];
                }
                Ok(p)
            }
            _ => {
                // Product-of-marginals; also the chain law for laws without
                // step-to-step dependence.
                let mut p = T::one();
                match self {
                    Self::Markov {
                        initial,
                        transition,
                    } => {
                        let mut pi = initial.clone();
                        for &j in path.steps() {
                            pi = step_markov(&pi, transition);
                            p *= pi[j];
                        }
                    }
                    _ => {
                        for (r, &j) in path.steps().iter().enumerate() {
                            p *= self.marginal_at(r + 1)?[j];
                        }
                    }
                }
                Ok(p)
            }
        }
    }
}

/// One realized mode sequence `(j_1, ..., j_k)`; `j_r` is the (zero-based)
/// mode applied to the transition `x(r-1) -> x(r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePath(Vec<usize>);

impl ModePath {
    pub fn new(steps: Vec<usize>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyPath);
        }
        Ok(Self(steps))
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `pi · P` for a row vector.
pub(crate) fn step_markov<T: Scalar>(pi: &[T], transition: &Matrix<T>) -> Vec<T> {
    let m = pi.len();
    let mut out = vec![T::zero(); m];
    for (i, &pi_i) in pi.iter().enumerate() {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot += pi_i * transition[(i, j)];
        }
    }
    out
}

/// Validates a probability vector: finite entries inside `[0, 1]` (up to
/// the scalar's probability tolerance) summing to one within that same
/// tolerance. Vectors inside the tolerance are renormalized silently and
/// tiny negative entries clamped to zero; anything worse is rejected.
pub(crate) fn normalized_prob_vector<T: Scalar>(v: Vec<T>, what: &str) -> Result<Vec<T>> {
    if v.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite { what: what.into() });
    }
    let tol = T::PROB_TOL;
    for (index, &p) in v.iter().enumerate() {
        if p < -tol || p > T::one() + tol {
            return Err(Error::ProbabilityEntry {
                what: what.into(),
                index,
                value: lossy(p),
            });
        }
    }
    let sum = v.iter().fold(T::zero(), |acc, &p| acc + p);
    if (sum - T::one()).abs() > tol {
        return Err(Error::ProbabilitySum {
            what: what.into(),
            sum: lossy(sum),
            tol: lossy(tol),
        });
    }
    Ok(v
        .into_iter()
        .map(|p| (p / sum).max(T::zero()).min(T::one()))
        .collect())
}
