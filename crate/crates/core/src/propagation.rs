//! Propagation engines for the state distribution of a stochastic jump
//! linear system started from a Gaussian.
//!
//! Three routes are provided:
//!
//! * [`enumerate_mixture`] — the exact mixture with one Gaussian per mode
//!   path (`m^k` components at step `k`). This is the oracle: exponential
//!   in time, capped by a configurable component budget.
//! * [`run_split_and_merge`] — the constant-cost recursion. Each step
//!   pushes the current Gaussian through every mode ("split") and
//!   moment-matches the resulting mixture back to one synthetic Gaussian
//!   ("merge"). The Wasserstein distance to the Dirac reference is
//!   preserved exactly, so the trace equals the enumeration's at every
//!   step under the product-of-marginals path law, at `O(m·n^3)` per step.
//! * [`run_mode_conditional`] — a constant-cost recursion that is exact
//!   under the true Markov chain path law, carrying one occupation mass,
//!   conditional mean and conditional second moment per mode.
//!
//! [`run_single_mode`] propagates along one mode without switching, for
//! no-switch comparison traces.

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, GaussianMixture};
use crate::linalg::{self, Matrix};
use crate::scalar::{Scalar, lossy};
use crate::system::{JumpLinearSystem, LawMode, SwitchingLaw, step_markov};

/// Default cap on the number of enumerated mixture components.
pub const DEFAULT_COMPONENT_CAP: usize = 1 << 20;

/// One row of a Wasserstein trace. `w_hat`/`w_sq_hat` are always present;
/// the remaining columns are filled by whichever engines ran.
#[derive(Debug, Clone)]
pub struct TraceEntry<T> {
    pub k: usize,
    pub w_hat: T,
    pub w_sq_hat: T,
    /// No-switch `W_j(k)` per mode, when single-mode traces were merged in.
    pub per_mode_w: Option<Vec<T>>,
    /// Enumeration-oracle `W(k)`, when available.
    pub w_oracle: Option<T>,
    /// Chain-law (mode-conditional) `W(k)`, when available.
    pub w_markov_exact: Option<T>,
    /// Monte Carlo estimate of `E|x(k)|^2`, when available.
    pub mc_mean_sq: Option<T>,
    /// Standard error of the Monte Carlo estimate.
    pub mc_stderr: Option<T>,
}

/// Per-step record of Wasserstein distances to the Dirac reference,
/// starting at `k = 0` with the initial Gaussian's distance.
#[derive(Debug, Clone)]
pub struct WassersteinTrace<T> {
    pub entries: Vec<TraceEntry<T>>,
}

impl<T: Scalar> WassersteinTrace<T> {
    /// Builds a trace from the squared-distance series; `series[k]` is
    /// `W^2(k)` for `k = 0..`.
    pub fn from_w_sq_series(series: Vec<T>) -> Self {
        let entries = series
            .into_iter()
            .enumerate()
            .map(|(k, w_sq)| TraceEntry {
                k,
                w_hat: w_sq.sqrt(),
                w_sq_hat: w_sq,
                per_mode_w: None,
                w_oracle: None,
                w_markov_exact: None,
                mc_mean_sq: None,
                mc_stderr: None,
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Horizon `K`; the trace holds `K + 1` entries.
    pub fn horizon(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn w_at(&self, k: usize) -> Option<T> {
        self.entries.get(k).map(|e| e.w_hat)
    }

    pub fn w_sq_at(&self, k: usize) -> Option<T> {
        self.entries.get(k).map(|e| e.w_sq_hat)
    }

    pub fn final_w(&self) -> T {
        self.entries.last().map(|e| e.w_hat).unwrap_or(T::zero())
    }

    /// Copy of the first `k + 1` entries.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            entries: self.entries.iter().take(k + 1).cloned().collect(),
        }
    }
}

/// Exact state mixture after `horizon_k` steps: one component per mode
/// path, weighted by the path probability under the selected law mode,
/// ordered lexicographically by path (first step most significant).
///
/// The component count `m^horizon_k` must stay within `cap`
/// (default [`DEFAULT_COMPONENT_CAP`]); the error reports the memory the
/// request would have needed.
pub fn enumerate_mixture<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    law_mode: LawMode,
    init: &Gaussian<T>,
    horizon_k: usize,
    cap: Option<usize>,
) -> Result<GaussianMixture<T>> {
    if horizon_k == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_inputs(sys, law, init)?;
    law.ensure_horizon(horizon_k)?;

    let m = sys.num_modes() as u128;
    let cap = cap.unwrap_or(DEFAULT_COMPONENT_CAP) as u128;
    let required = m
        .checked_pow(horizon_k as u32)
        .ok_or(Error::ComponentCapExceeded {
            required: u128::MAX,
            cap,
            approx_mib: f64::INFINITY,
        })?;
    if required > cap {
        let n = sys.dim() as u128;
        let floats_per_component = n * n + n + 1;
        let bytes = required as f64 * floats_per_component as f64 * size_of::<T>() as f64;
        return Err(Error::ComponentCapExceeded {
            required,
            cap,
            approx_mib: bytes / (1024.0 * 1024.0),
        });
    }

    let factors = StepFactors::build(law, law_mode, horizon_k)?;
    let mut components = Vec::with_capacity(required as usize);
    let mut walker = PathWalker {
        sys,
        init,
        factors: &factors,
        target_depth: horizon_k,
        components: &mut components,
    };
    walker.descend(0, 0, T::one(), Matrix::identity(sys.dim()))?;
    GaussianMixture::new(components)
}

/// Per-step weighting factors resolved ahead of the path walk.
enum StepFactors<T> {
    /// `marginals[r - 1]` weights the mode applied at step `r`.
    PerStep(Vec<Vec<T>>),
    /// First-step marginal plus transition rows (Markov chain law).
    Chain { first: Vec<T>, rows: Matrix<T> },
}

impl<T: Scalar> StepFactors<T> {
    fn build(law: &SwitchingLaw<T>, mode: LawMode, horizon: usize) -> Result<Self> {
        match (mode, law) {
            (LawMode::Chain, SwitchingLaw::Markov { transition, .. }) => Ok(Self::Chain {
                first: law.marginal_at(1)?,
                rows: transition.clone(),
            }),
            _ => {
                let marginals = (1..=horizon)
                    .map(|r| law.marginal_at(r))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::PerStep(marginals))
            }
        }
    }

    fn factor(&self, depth: usize, prev_mode: usize, mode: usize) -> T {
        match self {
            Self::PerStep(marginals) => marginals[depth][mode],
            Self::Chain { first, rows } => {
                if depth == 0 {
                    first[mode]
                } else {
                    rows[(prev_mode, mode)]
                }
            }
        }
    }
}

struct PathWalker<'a, T: Scalar> {
    sys: &'a JumpLinearSystem<T>,
    init: &'a Gaussian<T>,
    factors: &'a StepFactors<T>,
    target_depth: usize,
    components: &'a mut Vec<(T, Gaussian<T>)>,
}

impl<T: Scalar> PathWalker<'_, T> {
    /// Depth-first over mode choices in ascending order, which yields
    /// components in lexicographic path order. `product` is the
    /// accumulated map `A_{j_depth} ··· A_{j_1}`.
    fn descend(
        &mut self,
        depth: usize,
        prev_mode: usize,
        weight: T,
        product: Matrix<T>,
    ) -> Result<()> {
        if depth == self.target_depth {
            let mean = product.mul_vec(self.init.mean());
            let cov = product.congruence(self.init.cov());
            self.components.push((weight, Gaussian::new(mean, cov)?));
            return Ok(());
        }
        for mode in 0..self.sys.num_modes() {
            let w = weight * self.factors.factor(depth, prev_mode, mode);
            let next = self.sys.modes()[mode].mul(&product);
            self.descend(depth + 1, mode, w, next)?;
        }
        Ok(())
    }
}

/// One split-and-merge step: push `g` through every mode, form the mixture
/// weighted by `pi_next`, and moment-match it back to a single Gaussian.
/// Returns the merged Gaussian and its Wasserstein distance to the Dirac
/// reference.
pub fn split_and_merge_step<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    pi_next: &[T],
    g: &Gaussian<T>,
) -> Result<(Gaussian<T>, T)> {
    if pi_next.len() != sys.num_modes() {
        return Err(Error::DimensionMismatch {
            what: "split weights".into(),
            expected: sys.num_modes(),
            found: pi_next.len(),
        });
    }
    if g.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            what: "state dimension".into(),
            expected: sys.dim(),
            found: g.dim(),
        });
    }
    let components = sys
        .modes()
        .iter()
        .zip(pi_next)
        .map(|(mode, &w)| Ok((w, g.pushforward(mode)?)))
        .collect::<Result<Vec<_>>>()?;
    let merged = GaussianMixture::new(components)?.merge();
    let w = merged.wasserstein_to_dirac();
    Ok((merged, w))
}

/// Split-and-merge recursion over `horizon` steps. The recursion state is
/// a single Gaussian regardless of `k`, so cost and memory per step are
/// constant in time.
pub fn run_split_and_merge<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    init: &Gaussian<T>,
    horizon: usize,
) -> Result<WassersteinTrace<T>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_inputs(sys, law, init)?;
    law.ensure_horizon(horizon)?;

    let mut series = Vec::with_capacity(horizon + 1);
    series.push(init.wasserstein_sq_to_dirac());
    let mut state = init.clone();
    for k in 0..horizon {
        let pi_next = law.marginal_at(k + 1)?;
        let (merged, _) = split_and_merge_step(sys, &pi_next, &state)?;
        series.push(merged.wasserstein_sq_to_dirac());
        state = merged;
    }
    Ok(WassersteinTrace::from_w_sq_series(series))
}

/// Constant-memory carrier for the Markov-exact recursion: per mode, an
/// occupation mass, the conditional state mean and the conditional second
/// moment. Masses must sum to one (within the probability tolerance,
/// without silent renormalization — the recursion preserves the sum);
/// second moments are validated symmetric PSD under the usual clamp
/// policy.
#[derive(Debug, Clone)]
pub struct ModeConditionalState<T> {
    masses: Vec<T>,
    means: Vec<Vec<T>>,
    second_moments: Vec<Matrix<T>>,
}

impl<T: Scalar> ModeConditionalState<T> {
    pub fn new(masses: Vec<T>, means: Vec<Vec<T>>, second_moments: Vec<Matrix<T>>) -> Result<Self> {
        let m = masses.len();
        if means.len() != m || second_moments.len() != m {
            return Err(Error::DimensionMismatch {
                what: "mode-conditional state".into(),
                expected: m,
                found: means.len().min(second_moments.len()),
            });
        }
        let sum = masses.iter().fold(T::zero(), |acc, &q| acc + q);
        if (sum - T::one()).abs() > T::PROB_TOL {
            return Err(Error::ProbabilitySum {
                what: "occupation masses".into(),
                sum: lossy(sum),
                tol: lossy(T::PROB_TOL),
            });
        }
        let second_moments = second_moments
            .into_iter()
            .map(|mat| linalg::clamp_psd(&mat.symmetrized()).map(|(fixed, _)| fixed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            masses,
            means,
            second_moments,
        })
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn second_moments(&self) -> &[Matrix<T>] {
        &self.second_moments
    }

    pub fn num_modes(&self) -> usize {
        self.masses.len()
    }

    pub fn dim(&self) -> usize {
        self.second_moments[0].rows()
    }

    /// `W^2` to the Dirac reference: the mass-weighted trace of the
    /// conditional second moments.
    pub fn wasserstein_sq_to_dirac(&self) -> T {
        self.masses
            .iter()
            .zip(&self.second_moments)
            .fold(T::zero(), |acc, (&q, m)| acc + q * m.trace())
    }
}

/// Mode-conditional recursion, exact under the Markov chain path law.
///
/// The mass-scaled second moments evolve as
/// `q_j(k+1) M_j(k+1) = A_j (sum_i P_ij q_i(k) M_i(k)) A_jᵀ`, means
/// analogously, and `W^2(k)` is the mass-weighted trace. Errors unless the
/// law is Markov.
pub fn run_mode_conditional<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    init: &Gaussian<T>,
    horizon: usize,
) -> Result<WassersteinTrace<T>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_inputs(sys, law, init)?;
    let SwitchingLaw::Markov { transition, .. } = law else {
        return Err(Error::MarkovLawRequired);
    };

    let n = sys.dim();
    let m = sys.num_modes();
    let init_second = init
        .cov()
        .add(&linalg::outer(init.mean(), init.mean()));

    let mut series = Vec::with_capacity(horizon + 1);
    series.push(init.wasserstein_sq_to_dirac());

    // State at k = 1: the first applied mode has marginal pi(1).
    let pi_1 = law.marginal_at(1)?;
    let mut masses = pi_1.clone();
    let mut scaled_means: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut scaled_seconds: Vec<Matrix<T>> = Vec::with_capacity(m);
    for (a, &mass) in sys.modes().iter().zip(&pi_1) {
        scaled_means.push(scale_vec(&a.mul_vec(init.mean()), mass));
        scaled_seconds.push(a.congruence(&init_second).scale(mass));
    }
    let mut state = conditional_state(&masses, &scaled_means, &scaled_seconds)?;
    series.push(state.wasserstein_sq_to_dirac());

    for _ in 2..=horizon {
        let mut next_means: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut next_seconds: Vec<Matrix<T>> = Vec::with_capacity(m);
        for j in 0..m {
            let a = &sys.modes()[j];
            let mut inflow_mean = vec![T::zero(); n];
            let mut inflow_second = Matrix::zeros(n, n);
            for i in 0..m {
                let p_ij = transition[(i, j)];
                if p_ij == T::zero() {
                    continue;
                }
                for (slot, &v) in inflow_mean.iter_mut().zip(&scaled_means[i]) {
                    *slot += p_ij * v;
                }
                inflow_second.add_assign(&scaled_seconds[i].scale(p_ij));
            }
            next_means.push(a.mul_vec(&inflow_mean));
            next_seconds.push(a.congruence(&inflow_second));
        }
        masses = step_markov(&masses, transition);
        scaled_means = next_means;
        scaled_seconds = next_seconds;
        state = conditional_state(&masses, &scaled_means, &scaled_seconds)?;
        series.push(state.wasserstein_sq_to_dirac());
    }

    Ok(WassersteinTrace::from_w_sq_series(series))
}

/// Splits mass-scaled carriers back into the per-mode conditional view.
fn conditional_state<T: Scalar>(
    masses: &[T],
    scaled_means: &[Vec<T>],
    scaled_seconds: &[Matrix<T>],
) -> Result<ModeConditionalState<T>> {
    let mut means = Vec::with_capacity(masses.len());
    let mut seconds = Vec::with_capacity(masses.len());
    for ((&q, v), s) in masses.iter().zip(scaled_means).zip(scaled_seconds) {
        if q > T::zero() {
            means.push(scale_vec(v, q.recip()));
            seconds.push(s.scale(q.recip()));
        } else {
            means.push(vec![T::zero(); v.len()]);
            seconds.push(Matrix::zeros(s.rows(), s.cols()));
        }
    }
    ModeConditionalState::new(masses.to_vec(), means, seconds)
}

fn scale_vec<T: Scalar>(v: &[T], s: T) -> Vec<T> {
    v.iter().map(|&x| x * s).collect()
}

/// No-switch propagation along a single mode.
pub fn run_single_mode<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    mode_index: usize,
    init: &Gaussian<T>,
    horizon: usize,
) -> Result<WassersteinTrace<T>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if init.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            what: "state dimension".into(),
            expected: sys.dim(),
            found: init.dim(),
        });
    }
    let mode = sys.mode(mode_index)?;
    let mut series = Vec::with_capacity(horizon + 1);
    series.push(init.wasserstein_sq_to_dirac());
    let mut state = init.clone();
    for _ in 0..horizon {
        state = state.pushforward(mode)?;
        series.push(state.wasserstein_sq_to_dirac());
    }
    Ok(WassersteinTrace::from_w_sq_series(series))
}

fn check_inputs<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    init: &Gaussian<T>,
) -> Result<()> {
    if law.num_modes() != sys.num_modes() {
        return Err(Error::DimensionMismatch {
            what: "switching law mode count".into(),
            expected: sys.num_modes(),
            found: law.num_modes(),
        });
    }
    if init.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            what: "state dimension".into(),
            expected: sys.dim(),
            found: init.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_system() -> JumpLinearSystem<f64> {
        JumpLinearSystem::new(vec![
            Matrix::diagonal(&[0.7, 1.0]),
            Matrix::diagonal(&[1.0, 0.85]),
        ])
        .unwrap()
    }

    fn acc_law() -> SwitchingLaw<f64> {
        SwitchingLaw::markov(
            vec![0.5, 0.5],
            Matrix::from_rows(&[vec![0.75, 0.25], vec![0.2, 0.8]]).unwrap(),
        )
        .unwrap()
    }

    fn acc_init() -> Gaussian<f64> {
        Gaussian::new(vec![5.0, 5.0], Matrix::diagonal(&[0.1, 0.1])).unwrap()
    }

    #[test]
    fn enumerate_k1_equal_weights() {
        // Step-1 mixture with weights [0.5, 0.5]: realized with a schedule
        // whose first marginal is uniform (the Markov convention draws the
        // first mode from pi(0)·P instead).
        let sys = acc_system();
        let law = SwitchingLaw::schedule(vec![vec![0.5, 0.5]]).unwrap();
        let mix =
            enumerate_mixture(&sys, &law, LawMode::ProductOfMarginals, &acc_init(), 1, None)
                .unwrap();
        assert_eq!(mix.len(), 2);
        let (w0, g0) = &mix.components()[0];
        let (w1, g1) = &mix.components()[1];
        assert!((w0 - 0.5).abs() < 1e-15);
        assert!((w1 - 0.5).abs() < 1e-15);
        assert!((g0.mean()[0] - 3.5).abs() < 1e-15);
        assert!((g0.cov()[(0, 0)] - 0.049).abs() < 1e-15);
        assert!((g1.mean()[1] - 4.25).abs() < 1e-15);
        assert!((g1.cov()[(1, 1)] - 0.07225).abs() < 1e-15);
        assert!((mix.wasserstein_sq_to_dirac() - 40.316875).abs() < 1e-12);
    }

    #[test]
    fn enumerate_single_mode_system() {
        let sys = JumpLinearSystem::new(vec![Matrix::diagonal(&[0.5, 0.5])]).unwrap();
        let law = SwitchingLaw::iid(vec![1.0]).unwrap();
        let mix = enumerate_mixture(
            &sys,
            &law,
            LawMode::ProductOfMarginals,
            &acc_init(),
            4,
            None,
        )
        .unwrap();
        assert_eq!(mix.len(), 1);
        let (w, g) = &mix.components()[0];
        assert_eq!(*w, 1.0);
        // A^4 with A = 0.5 I.
        assert!((g.mean()[0] - 5.0 * 0.5f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn enumerate_component_count_and_weight_sum() {
        let sys = acc_system();
        let law = acc_law();
        for mode in [LawMode::ProductOfMarginals, LawMode::Chain] {
            let mix = enumerate_mixture(&sys, &law, mode, &acc_init(), 3, None).unwrap();
            assert_eq!(mix.len(), 8);
            let total: f64 = mix.components().iter().map(|(w, _)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn enumerate_lexicographic_order() {
        let sys = acc_system();
        let law = SwitchingLaw::iid(vec![0.5, 0.5]).unwrap();
        let mix = enumerate_mixture(
            &sys,
            &law,
            LawMode::ProductOfMarginals,
            &acc_init(),
            2,
            None,
        )
        .unwrap();
        // Paths in order (0,0), (0,1), (1,0), (1,1); mean x-entries are
        // 0.49, 0.7, 0.7, 1.0 times 5.
        let xs: Vec<f64> = mix.components().iter().map(|(_, g)| g.mean()[0]).collect();
        assert!((xs[0] - 5.0 * 0.49).abs() < 1e-12);
        assert!((xs[1] - 5.0 * 0.7).abs() < 1e-12);
        assert!((xs[2] - 5.0 * 0.7).abs() < 1e-12);
        assert!((xs[3] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn enumerate_cap_is_enforced() {
        let sys = acc_system();
        let law = acc_law();
        let err = enumerate_mixture(
            &sys,
            &law,
            LawMode::ProductOfMarginals,
            &acc_init(),
            4,
            Some(8),
        )
        .unwrap_err();
        match err {
            Error::ComponentCapExceeded {
                required,
                cap,
                approx_mib,
            } => {
                assert_eq!(required, 16);
                assert_eq!(cap, 8);
                assert!(approx_mib > 0.0);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn split_step_degenerate_weight_returns_pushforward() {
        let sys = acc_system();
        let g = acc_init();
        let (merged, _) = split_and_merge_step(&sys, &[0.0, 1.0], &g).unwrap();
        let expect = g.pushforward(&sys.modes()[1]).unwrap();
        assert_eq!(merged.mean(), expect.mean());
        assert_eq!(merged.cov(), expect.cov());
    }

    #[test]
    fn split_step_acc_values() {
        let sys = acc_system();
        let (merged, w) = split_and_merge_step(&sys, &[0.5, 0.5], &acc_init()).unwrap();
        assert!((merged.mean()[0] - 4.25).abs() < 1e-12);
        assert!((merged.mean()[1] - 4.625).abs() < 1e-12);
        assert!((w * w - 40.316875).abs() < 1e-12);
    }

    #[test]
    fn split_step_identical_modes_collapse() {
        let a = Matrix::from_rows(&[vec![0.3, 0.1], vec![-0.2, 0.9]]).unwrap();
        let sys = JumpLinearSystem::new(vec![a.clone(), a.clone(), a.clone()]).unwrap();
        let g = acc_init();
        let (merged, _) = split_and_merge_step(&sys, &[0.2, 0.5, 0.3], &g).unwrap();
        let expect = g.pushforward(&a).unwrap();
        for i in 0..2 {
            assert!((merged.mean()[i] - expect.mean()[i]).abs() < 1e-14);
            for j in 0..2 {
                assert!((merged.cov()[(i, j)] - expect.cov()[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn split_merge_trace_shape_and_monotonicity() {
        let trace = run_split_and_merge(&acc_system(), &acc_law(), &acc_init(), 20).unwrap();
        assert_eq!(trace.len(), 21);
        assert_eq!(trace.entries[0].k, 0);
        assert!((trace.w_at(0).unwrap() - 50.2f64.sqrt()).abs() < 1e-12);
        assert!(trace.entries.iter().all(|e| e.w_hat > 0.0));
        assert!(trace.w_at(20).unwrap() < trace.w_at(0).unwrap());
        // w_sq_hat is the square of w_hat.
        for e in &trace.entries {
            assert!((e.w_sq_hat - e.w_hat * e.w_hat).abs() <= 1e-12 * (1.0 + e.w_sq_hat));
        }
    }

    #[test]
    fn split_merge_scaling_single_mode() {
        let sys = JumpLinearSystem::new(vec![Matrix::diagonal(&[0.5, 0.5])]).unwrap();
        let law = SwitchingLaw::iid(vec![1.0]).unwrap();
        let trace = run_split_and_merge(&sys, &law, &acc_init(), 10).unwrap();
        let w0 = trace.w_at(0).unwrap();
        for k in 0..=10 {
            let expect = 0.5f64.powi(k as i32) * w0;
            assert!(
                (trace.w_at(k).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect),
                "k={k}"
            );
        }
    }

    #[test]
    fn split_merge_identity_modes_hold_distance() {
        let sys =
            JumpLinearSystem::new(vec![Matrix::identity(2), Matrix::identity(2)]).unwrap();
        let trace = run_split_and_merge(&sys, &acc_law(), &acc_init(), 15).unwrap();
        let w0 = trace.w_at(0).unwrap();
        for e in &trace.entries {
            assert!((e.w_hat - w0).abs() <= 1e-12 * (1.0 + w0));
        }
    }

    #[test]
    fn split_merge_respects_schedule_horizon() {
        let sys = acc_system();
        let law = SwitchingLaw::schedule(vec![vec![0.5, 0.5], vec![0.4, 0.6]]).unwrap();
        assert!(run_split_and_merge(&sys, &law, &acc_init(), 2).is_ok());
        assert!(matches!(
            run_split_and_merge(&sys, &law, &acc_init(), 3),
            Err(Error::ScheduleExhausted { .. })
        ));
    }

    #[test]
    fn split_merge_state_stays_constant_size() {
        // Structural check on the recursion state: after any number of
        // steps the carried state is one n-dimensional Gaussian and the
        // per-step mixture has exactly m components.
        let sys = acc_system();
        let law = acc_law();
        let mut g = acc_init();
        for k in 0..50 {
            let pi = law.marginal_at(k + 1).unwrap();
            let (merged, _) = split_and_merge_step(&sys, &pi, &g).unwrap();
            assert_eq!(merged.dim(), sys.dim());
            assert_eq!(merged.cov().rows(), sys.dim());
            g = merged;
        }
    }

    #[test]
    fn mode_conditional_requires_markov() {
        let sys = acc_system();
        let law = SwitchingLaw::iid(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            run_mode_conditional(&sys, &law, &acc_init(), 5),
            Err(Error::MarkovLawRequired)
        ));
    }

    #[test]
    fn mode_conditional_identity_transition_decouples() {
        // P = I keeps each mode's flow separate: W^2(k) is the pi(0)-weighted
        // sum of the no-switch second moments.
        let sys = acc_system();
        let law = SwitchingLaw::markov(vec![0.3, 0.7], Matrix::identity(2)).unwrap();
        let init = acc_init();
        let trace = run_mode_conditional(&sys, &law, &init, 10).unwrap();
        let solo_0 = run_single_mode(&sys, 0, &init, 10).unwrap();
        let solo_1 = run_single_mode(&sys, 1, &init, 10).unwrap();
        for k in 1..=10 {
            let expect = 0.3 * solo_0.w_sq_at(k).unwrap() + 0.7 * solo_1.w_sq_at(k).unwrap();
            let got = trace.w_sq_at(k).unwrap();
            assert!(
                (got - expect).abs() <= 1e-12 * (1.0 + expect),
                "k={k}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn mode_conditional_rank_one_matches_split_merge() {
        // All transition rows equal: chain and product-of-marginals laws
        // coincide, so the two constant-cost engines agree.
        let sys = acc_system();
        let law = SwitchingLaw::markov(
            vec![0.5, 0.5],
            Matrix::from_rows(&[vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap(),
        )
        .unwrap();
        let init = acc_init();
        let a = run_mode_conditional(&sys, &law, &init, 15).unwrap();
        let b = run_split_and_merge(&sys, &law, &init, 15).unwrap();
        for k in 0..=15 {
            let (x, y) = (a.w_sq_at(k).unwrap(), b.w_sq_at(k).unwrap());
            assert!((x - y).abs() <= 1e-12 * (1.0 + x), "k={k}: {x} vs {y}");
        }
    }

    #[test]
    fn single_mode_nilpotent_hits_zero() {
        let nilpotent = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let sys = JumpLinearSystem::new(vec![nilpotent]).unwrap();
        let trace = run_single_mode(&sys, 0, &acc_init(), 5).unwrap();
        assert!(trace.w_at(1).unwrap() > 0.0);
        for k in 2..=5 {
            assert_eq!(trace.w_at(k).unwrap(), 0.0, "k={k}");
        }
    }

    #[test]
    fn single_mode_invalid_index() {
        assert!(matches!(
            run_single_mode(&acc_system(), 2, &acc_init(), 5),
            Err(Error::ModeIndexOutOfRange { index: 2, modes: 2 })
        ));
    }

    #[test]
    fn degenerate_initial_covariance_is_accepted_everywhere() {
        let sys = acc_system();
        let law = acc_law();
        let dirac_start = Gaussian::new(vec![2.0, -1.0], Matrix::zeros(2, 2)).unwrap();
        assert!(run_split_and_merge(&sys, &law, &dirac_start, 5).is_ok());
        assert!(run_mode_conditional(&sys, &law, &dirac_start, 5).is_ok());
        assert!(
            enumerate_mixture(&sys, &law, LawMode::Chain, &dirac_start, 5, None).is_ok()
        );
        assert!(run_single_mode(&sys, 0, &dirac_start, 5).is_ok());
    }

    #[test]
    fn trace_truncation() {
        let trace = run_split_and_merge(&acc_system(), &acc_law(), &acc_init(), 10).unwrap();
        let head = trace.truncated(4);
        assert_eq!(head.len(), 5);
        assert_eq!(head.horizon(), 4);
        assert_eq!(head.w_at(4), trace.w_at(4));
    }
}
