//! Trajectory-level sampling of the jump linear system, used to validate
//! the analytic traces: the squared Wasserstein distance to the Dirac
//! reference equals the mean-square state norm, so `E|x(k)|^2` estimated
//! from trajectories must bracket the engine outputs.
//!
//! # Determinism
//!
//! Each trajectory owns a dedicated ChaCha stream keyed by
//! `(seed, trajectory index)`, so trajectories are independent of each
//! other and of scheduling order. Sampling runs in parallel over
//! trajectory ranges split recursively at midpoints; partial sums are
//! combined pairwise along that fixed binary tree, making every estimate
//! bit-identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::linalg::{self, Matrix};
use crate::scalar::{Scalar, cast, lossy};
use crate::system::{JumpLinearSystem, LawMode, SwitchingLaw};

/// Number of trajectories a leaf of the reduction tree handles
/// sequentially before ranges stop splitting.
const LEAF_TRAJECTORIES: usize = 256;

/// Sampling run parameters.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub num_trajectories: usize,
    pub seed: u64,
    pub horizon: usize,
    pub law_mode: LawMode,
}

/// Empirical moments at one time step.
#[derive(Debug, Clone)]
pub struct MomentsEntry<T> {
    pub k: usize,
    /// Sample mean of `|x(k)|^2`.
    pub mean_sq: T,
    /// Standard error of that estimate (sample std over sqrt(N)).
    pub stderr: T,
    pub sample_mean: Vec<T>,
    pub sample_cov: Matrix<T>,
}

/// Per-step empirical moments plus mode-occupation frequencies.
#[derive(Debug, Clone)]
pub struct EmpiricalMoments<T> {
    pub entries: Vec<MomentsEntry<T>>,
    /// `mode_frequencies[r - 1][j]`: fraction of trajectories that applied
    /// mode `j` at step `r`.
    pub mode_frequencies: Vec<Vec<T>>,
    pub num_trajectories: usize,
}

impl<T: Scalar> EmpiricalMoments<T> {
    pub fn horizon(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }
}

/// Mode-draw distributions resolved to `f64` ahead of sampling.
enum DrawPlan {
    /// `dists[r - 1]` is the distribution of the mode applied at step `r`.
    PerStep(Vec<Vec<f64>>),
    /// First-step marginal plus transition rows (Markov chain sampling).
    Chain {
        first: Vec<f64>,
        rows: Vec<Vec<f64>>,
    },
}

impl DrawPlan {
    fn build<T: Scalar>(
        law: &SwitchingLaw<T>,
        law_mode: LawMode,
        horizon: usize,
    ) -> Result<Self> {
        match (law_mode, law) {
            (LawMode::Chain, SwitchingLaw::Markov { transition, .. }) => {
                let first = to_f64(&law.marginal_at(1)?);
                let rows = (0..transition.rows())
                    .map(|i| to_f64(transition.row(i)))
                    .collect();
                Ok(Self::Chain { first, rows })
            }
            _ => {
                let dists = (1..=horizon)
                    .map(|r| Ok(to_f64(&law.marginal_at(r)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::PerStep(dists))
            }
        }
    }

    fn dist(&self, step: usize, prev_mode: usize) -> &[f64] {
        match self {
            Self::PerStep(dists) => &dists[step - 1],
            Self::Chain { first, rows } => {
                if step == 1 {
                    first
                } else {
                    &rows[prev_mode]
                }
            }
        }
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| lossy(x)).collect()
}

fn draw_index(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    dist.len() - 1
}

/// Everything a trajectory draw needs, shared read-only across workers.
struct SimContext<'a, T: Scalar> {
    sys: &'a JumpLinearSystem<T>,
    plan: &'a DrawPlan,
    init_mean: &'a [T],
    init_factor: &'a Matrix<T>,
    horizon: usize,
    seed: u64,
}

/// Shared simulation kernel. Draws `dim` standard normals for the initial
/// state, then one uniform per step for the mode, filling `states`
/// (`horizon + 1` entries) and `modes` (`horizon` entries).
fn simulate_one<T: Scalar>(
    ctx: &SimContext<'_, T>,
    trajectory_index: u64,
    states: &mut Vec<Vec<T>>,
    modes: &mut Vec<usize>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    rng.set_stream(trajectory_index);

    let n = ctx.init_mean.len();
    let z: Vec<T> = (0..n)
        .map(|_| cast::<T>(<StandardNormal as Distribution<f64>>::sample(
            &StandardNormal,
            &mut rng,
        )))
        .collect();
    let spread = ctx.init_factor.mul_vec(&z);
    let mut x: Vec<T> = ctx
        .init_mean
        .iter()
        .zip(&spread)
        .map(|(&m, &s)| m + s)
        .collect();

    states.clear();
    modes.clear();
    states.push(x.clone());
    let mut prev_mode = 0usize;
    for step in 1..=ctx.horizon {
        let u: f64 = rng.random();
        let j = draw_index(ctx.plan.dist(step, prev_mode), u);
        x = ctx.sys.modes()[j].mul_vec(&x);
        states.push(x.clone());
        modes.push(j);
        prev_mode = j;
    }
}

/// Samples one trajectory: `x(0) ~ init`, then at each step a mode drawn
/// per the law (independently from the step marginal in
/// product-of-marginals mode, from the previous mode's transition row in
/// chain mode) and applied. Deterministic in `(seed, trajectory_index)`.
pub fn sample_trajectory<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    law_mode: LawMode,
    init: &Gaussian<T>,
    horizon: usize,
    seed: u64,
    trajectory_index: u64,
) -> Result<Vec<Vec<T>>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_inputs(sys, law, init)?;
    law.ensure_horizon(horizon)?;
    let plan = DrawPlan::build(law, law_mode, horizon)?;
    let factor = linalg::psd_sqrt_factor(init.cov());
    let ctx = SimContext {
        sys,
        plan: &plan,
        init_mean: init.mean(),
        init_factor: &factor,
        horizon,
        seed,
    };
    let mut states = Vec::with_capacity(horizon + 1);
    let mut modes = Vec::with_capacity(horizon);
    simulate_one(&ctx, trajectory_index, &mut states, &mut modes);
    Ok(states)
}

/// Partial sums over a contiguous trajectory range.
struct Accumulator<T> {
    /// Per k: sum of |x|^2 and of |x|^4 (for the standard error).
    sum_sq: Vec<T>,
    sum_sq_sq: Vec<T>,
    /// Per k: sum of x and of x·xᵀ.
    sum_x: Vec<Vec<T>>,
    sum_xxt: Vec<Matrix<T>>,
    /// Per step (1-based, stored at r-1): mode counts.
    mode_counts: Vec<Vec<u64>>,
}

impl<T: Scalar> Accumulator<T> {
    fn new(horizon: usize, dim: usize, modes: usize) -> Self {
        Self {
            sum_sq: vec![T::zero(); horizon + 1],
            sum_sq_sq: vec![T::zero(); horizon + 1],
            sum_x: vec![vec![T::zero(); dim]; horizon + 1],
            sum_xxt: vec![Matrix::zeros(dim, dim); horizon + 1],
            mode_counts: vec![vec![0; modes]; horizon],
        }
    }

    fn record(&mut self, states: &[Vec<T>], modes: &[usize]) {
        for (k, x) in states.iter().enumerate() {
            let nsq = linalg::norm_sq(x);
            self.sum_sq[k] += nsq;
            self.sum_sq_sq[k] += nsq * nsq;
            for (slot, &v) in self.sum_x[k].iter_mut().zip(x) {
                *slot += v;
            }
            self.sum_xxt[k].add_assign(&linalg::outer(x, x));
        }
        for (r, &j) in modes.iter().enumerate() {
            self.mode_counts[r][j] += 1;
        }
    }

    /// Pairwise combine; the call tree fixes the summation order.
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.sum_sq.iter_mut().zip(other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.sum_sq_sq.iter_mut().zip(other.sum_sq_sq) {
            *a += b;
        }
        for (row, other_row) in self.sum_x.iter_mut().zip(other.sum_x) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        for (m, om) in self.sum_xxt.iter_mut().zip(&other.sum_xxt) {
            m.add_assign(om);
        }
        for (row, other_row) in self.mode_counts.iter_mut().zip(other.mode_counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        self
    }
}

fn sample_range<T: Scalar>(ctx: &SimContext<'_, T>, lo: usize, hi: usize) -> Accumulator<T> {
    let n = ctx.init_mean.len();
    let m = ctx.sys.num_modes();
    if hi - lo <= LEAF_TRAJECTORIES {
        let mut acc = Accumulator::new(ctx.horizon, n, m);
        let mut states = Vec::with_capacity(ctx.horizon + 1);
        let mut modes = Vec::with_capacity(ctx.horizon);
        for idx in lo..hi {
            simulate_one(ctx, idx as u64, &mut states, &mut modes);
            acc.record(&states, &modes);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let (left, right) = rayon::join(
        || sample_range(ctx, lo, mid),
        || sample_range(ctx, mid, hi),
    );
    left.merge(right)
}

/// Runs the full sampling experiment and reduces it to per-step empirical
/// moments. Requires at least two trajectories (for the standard error).
pub fn run_sampler<T: Scalar>(
    sys: &JumpLinearSystem<T>,
    law: &SwitchingLaw<T>,
    init: &Gaussian<T>,
    cfg: &SamplerConfig,
) -> Result<EmpiricalMoments<T>> {
    if cfg.horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if cfg.num_trajectories < 2 {
        return Err(Error::NotEnoughTrajectories {
            needed: 2,
            got: cfg.num_trajectories,
        });
    }
    check_inputs(sys, law, init)?;
    law.ensure_horizon(cfg.horizon)?;

    let plan = DrawPlan::build(law, cfg.law_mode, cfg.horizon)?;
    let factor = linalg::psd_sqrt_factor(init.cov());
    let ctx = SimContext {
        sys,
        plan: &plan,
        init_mean: init.mean(),
        init_factor: &factor,
        horizon: cfg.horizon,
        seed: cfg.seed,
    };
    let acc = sample_range(&ctx, 0, cfg.num_trajectories);
    Ok(finalize(acc, cfg.num_trajectories))
}

fn finalize<T: Scalar>(acc: Accumulator<T>, count: usize) -> EmpiricalMoments<T> {
    let n_t = cast::<T>(count as f64);
    let n_minus_one = cast::<T>((count - 1) as f64);
    let dim = acc.sum_x[0].len();

    let entries = (0..acc.sum_sq.len())
        .map(|k| {
            let mean_sq = acc.sum_sq[k] / n_t;
            // Unbiased variance of |x|^2, guarded against round-off.
            let var = ((acc.sum_sq_sq[k] - acc.sum_sq[k] * acc.sum_sq[k] / n_t) / n_minus_one)
                .max(T::zero());
            let stderr = (var / n_t).sqrt();
            let sample_mean: Vec<T> = acc.sum_x[k].iter().map(|&s| s / n_t).collect();
            let mut sample_cov = Matrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let centered =
                        acc.sum_xxt[k][(i, j)] - acc.sum_x[k][i] * acc.sum_x[k][j] / n_t;
                    sample_cov[(i, j)] = centered / n_minus_one;
                }
            }
            MomentsEntry {
                k,
                mean_sq,
                stderr,
                sample_mean,
                sample_cov,
            }
        })
        .collect();

    let mode_frequencies = acc
        .mode_counts
        .iter()
        .map(|counts| counts.iter().map(|&c| cast::<T>(c as f64) / n_t).collect())
        .collect();

    EmpiricalMoments {
        entries,
        mode_frequencies,
        num_trajectories: count,
    }
}

/// Moment estimate at one step from materialized trajectories, with
/// unbiased standard error. Needs at least two trajectories.
pub fn estimate_moments<T: Scalar>(
    trajectories: &[Vec<Vec<T>>],
    k: usize,
) -> Result<MomentsEntry<T>> {
    if trajectories.len() < 2 {
        return Err(Error::NotEnoughTrajectories {
            needed: 2,
            got: trajectories.len(),
        });
    }
    let dim = trajectories[0]
        .first()
        .map(Vec::len)
        .unwrap_or(0);
    let mut acc = Accumulator::<T>::new(0, dim, 1);
    for traj in trajectories {
        let x = traj.get(k).ok_or(Error::TrajectoryTooShort {
            k,
            len: traj.len(),
        })?;
        acc.record(std::slice::from_ref(x), &[]);
    }
    let mut moments = finalize(acc, trajectories.len());
    let mut entry = moments.entries.remove(0);
    entry.k = k;
    Ok(entry)
}

/// One per-step consistency check of an analytic trace against sampled
/// moments.
#[derive(Debug, Clone)]
pub struct TraceCheck<T> {
    pub k: usize,
    pub analytic_w_sq: T,
    pub mc_mean_sq: T,
    pub stderr: T,
    pub pass: bool,
}

/// Outcome of [`validate_trace`].
#[derive(Debug, Clone)]
pub struct ValidationReport<T> {
    pub sigma_mult: T,
    pub checks: Vec<TraceCheck<T>>,
}

impl<T: Scalar> ValidationReport<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TraceCheck<T>> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Checks `|W^2(k) - mean_sq(k)| <= sigma_mult · stderr(k)` at every step.
/// The trace and moments must cover the same horizon.
pub fn validate_trace<T: Scalar>(
    trace: &crate::propagation::WassersteinTrace<T>,
    moments: &EmpiricalMoments<T>,
    sigma_mult: T,
) -> Result<ValidationReport<T>> {
    if trace.len() != moments.entries.len() {
        return Err(Error::HorizonMismatch {
            trace: trace.len(),
            moments: moments.entries.len(),
        });
    }
    let checks = trace
        .entries
        .iter()
        .zip(&moments.entries)
        .map(|(t, m)| {
            let diff = (t.w_sq_hat - m.mean_sq).abs();
            TraceCheck {
                k: t.k,
                analytic_w_sq: t.w_sq_hat,
                mc_mean_sq: m.mean_sq,
                stderr: m.stderr,
                pass: diff <= sigma_mult * m.stderr,
            }
        })
        .collect();
    Ok(ValidationReport { sigma_mult, checks })
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
