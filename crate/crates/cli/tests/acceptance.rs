//! Acceptance suite: one test per shipped claim, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The benchmark system throughout is the shipped two-mode Markov config
//! (`examples/acc_markov.json`).

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sjls_cli::{ConvergenceStatus, load_config, run_analysis};
use sjls_core::gaussian::{Gaussian, GaussianMixture};
use sjls_core::linalg::{self, Matrix};
use sjls_core::montecarlo::{SamplerConfig, run_sampler, validate_trace};
use sjls_core::propagation::{
    enumerate_mixture, run_mode_conditional, run_single_mode, run_split_and_merge,
};
use sjls_core::system::{LawMode, ModePath};

fn shipped_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/acc_markov.json")
}

fn report(id: u32, title: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("acceptance criterion {id} ({title}): PASS");
    } else {
        println!("acceptance criterion {id} ({title}): FAIL");
        for failure in failures {
            println!("  - {failure}");
        }
        panic!("criterion {id} ({title}) failed:\n{}", failures.join("\n"));
    }
}

/// Random PSD covariance with entries of order one.
fn random_psd(rng: &mut ChaCha8Rng, n: usize, ridge: f64) -> Matrix<f64> {
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let mut out = g.mul(&g.transpose());
    for i in 0..n {
        out[(i, i)] += ridge;
    }
    out
}

fn random_mixture(rng: &mut ChaCha8Rng, ridge: f64) -> GaussianMixture<f64> {
    let n = rng.random_range(1..=4usize);
    let comps = rng.random_range(1..=16usize);
    let mut weights: Vec<f64> = (0..comps).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let components = weights
        .into_iter()
        .map(|w| {
            let mean: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            (w, Gaussian::new(mean, random_psd(rng, n, ridge)).unwrap())
        })
        .collect();
    GaussianMixture::new(components).unwrap()
}

#[test]
fn a1_split_merge_matches_enumeration_oracle() {
    let cfg = load_config(shipped_config()).unwrap();
    let start = Instant::now();
    let trace =
        run_split_and_merge(&cfg.system, &cfg.law, &cfg.initial_state, 12).unwrap();
    let mut failures = Vec::new();
    for k in 1..=12usize {
        let mix = enumerate_mixture(
            &cfg.system,
            &cfg.law,
            LawMode::ProductOfMarginals,
            &cfg.initial_state,
            k,
            None,
        )
        .unwrap();
        if mix.len() != 1 << k {
            failures.push(format!("k={k}: {} components, expected {}", mix.len(), 1 << k));
        }
        let w_oracle = mix.wasserstein_sq_to_dirac().sqrt();
        let w_hat = trace.w_at(k).unwrap();
        if (w_hat - w_oracle).abs() > 1e-9 * (1.0 + w_hat) {
            failures.push(format!("k={k}: split-merge {w_hat} vs oracle {w_oracle}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 5.0 {
        failures.push(format!("runtime {elapsed:.2}s exceeds the 5s target"));
    }
    report(1, "split-and-merge equals the enumeration oracle", &failures);
}

#[test]
fn a2_mixture_w_sq_is_weight_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = Vec::new();
    for i in 0..200 {
        let ridge = if rng.random_bool(0.25) { 0.0 } else { 0.05 };
        let mix = random_mixture(&mut rng, ridge);
        let direct = mix.wasserstein_sq_to_dirac();
        // Independent evaluation: closed form per component, reverse order.
        let mut recomputed = 0.0f64;
        for (w, g) in mix.components().iter().rev() {
            recomputed += w * (g.mean().iter().map(|m| m * m).sum::<f64>() + g.cov().trace());
        }
        if (direct - recomputed).abs() > 1e-12 * (1.0 + direct.abs()) {
            failures.push(format!("mixture {i}: {direct} vs {recomputed}"));
        }
    }
    report(2, "mixture W^2 is the weighted component sum", &failures);
}

#[test]
fn a3_merge_moments_match_sampled_mixtures() {
    const SAMPLES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut failures = Vec::new();

    for mixture_index in 0..20 {
        let mix = random_mixture(&mut rng, 0.05);
        let n = mix.dim();
        let merged = mix.merge();
        let mu_hat = merged.mean();
        let sigma_hat = merged.cov();

        let cumulative: Vec<f64> = mix
            .components()
            .iter()
            .scan(0.0, |acc, (w, _)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let factors: Vec<(Vec<f64>, Matrix<f64>)> = mix
            .components()
            .iter()
            .map(|(_, g)| (g.mean().to_vec(), linalg::psd_sqrt_factor(g.cov())))
            .collect();

        let mut sum_x = vec![0.0f64; n];
        let mut sum_x_sq = vec![0.0f64; n];
        // Products centered at the analytic merged mean, plus their squares
        // for the per-entry standard error.
        let mut sum_q = Matrix::<f64>::zeros(n, n);
        let mut sum_q_sq = Matrix::<f64>::zeros(n, n);

        let mut z = vec![0.0f64; n];
        for _ in 0..SAMPLES {
            let u: f64 = rng.random();
            let comp = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(factors.len() - 1);
            let (mean, factor) = &factors[comp];
            for slot in z.iter_mut() {
                *slot = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            }
            let spread = factor.mul_vec(&z);
            for i in 0..n {
                let xi = mean[i] + spread[i];
                sum_x[i] += xi;
                sum_x_sq[i] += xi * xi;
                let di = xi - mu_hat[i];
                for j in 0..n {
                    let xj = mean[j] + spread[j];
                    let q = di * (xj - mu_hat[j]);
                    sum_q[(i, j)] += q;
                    sum_q_sq[(i, j)] += q * q;
                }
            }
        }

        let n_f = SAMPLES as f64;
        for i in 0..n {
            let emp_mean = sum_x[i] / n_f;
            let var = ((sum_x_sq[i] - sum_x[i] * sum_x[i] / n_f) / (n_f - 1.0)).max(0.0);
            let stderr = (var / n_f).sqrt();
            if (mu_hat[i] - emp_mean).abs() > 4.0 * stderr {
                failures.push(format!(
                    "mixture {mixture_index}: mean[{i}] {} vs sampled {emp_mean} (stderr {stderr})",
                    mu_hat[i]
                ));
            }
            for j in 0..n {
                let emp_cov = sum_q[(i, j)] / n_f;
                let var_q =
                    ((sum_q_sq[(i, j)] - sum_q[(i, j)] * sum_q[(i, j)] / n_f) / (n_f - 1.0))
                        .max(0.0);
                let stderr_q = (var_q / n_f).sqrt();
                if (sigma_hat[(i, j)] - emp_cov).abs() > 4.0 * stderr_q {
                    failures.push(format!(
                        "mixture {mixture_index}: cov[{i},{j}] {} vs sampled {emp_cov} (stderr {stderr_q})",
                        sigma_hat[(i, j)]
                    ));
                }
            }
        }
    }
    report(3, "merged moments match sampled mixtures", &failures);
}

/// KNOWN RED. Two of the benchmark's target figures are tighter than the
/// closed-form dynamics allow: the switched trace first drops below 0.05
/// at k = 56 (so W(50) = 0.0774579... misses the `< 0.05` target), and
/// the slow no-switch mode contracts by 0.85^2 per squared step, leaving
/// it 1.459e-4 from sqrt(25.1) at k = 30 (within 1e-6 only from k = 46).
/// The targets stay enforced, and failing, rather than loosened.
#[test]
fn a4_benchmark_convergence_reproduction() {
    let cfg = load_config(shipped_config()).unwrap();
    let result = run_analysis(&cfg).unwrap();
    let mut failures = Vec::new();

    if !result.merged.entries.iter().all(|e| e.w_hat > 0.0) {
        failures.push("w_hat not strictly positive along the trace".into());
    }
    let w50 = result.merged.w_at(50).unwrap();
    if w50 >= 0.05 {
        failures.push(format!("w_hat(50) = {w50:.10}, expected < 0.05"));
    }
    if result.verdict.status != ConvergenceStatus::Converged {
        failures.push(format!(
            "verdict {} at epsilon {} window {}, expected converged",
            result.verdict.status.name(),
            cfg.convergence.epsilon,
            cfg.convergence.window
        ));
    }

    let limit = 25.1f64.sqrt();
    for j in 0..cfg.system.num_modes() {
        let solo = run_single_mode(&cfg.system, j, &cfg.initial_state, 30).unwrap();
        let dev = (solo.w_at(30).unwrap() - limit).abs();
        if dev > 1e-6 {
            failures.push(format!(
                "no-switch mode {}: |W(30) - sqrt(25.1)| = {dev:.3e}, expected <= 1e-6",
                j + 1
            ));
        }
    }
    report(4, "benchmark convergence reproduction", &failures);
}

#[test]
fn a5_monte_carlo_brackets_both_engines() {
    let cfg = load_config(shipped_config()).unwrap();
    let start = Instant::now();
    let mut failures = Vec::new();

    let split_merge =
        run_split_and_merge(&cfg.system, &cfg.law, &cfg.initial_state, 20).unwrap();
    let product_moments = run_sampler(
        &cfg.system,
        &cfg.law,
        &cfg.initial_state,
        &SamplerConfig {
            num_trajectories: 100_000,
            seed: 2024,
            horizon: 20,
            law_mode: LawMode::ProductOfMarginals,
        },
    )
    .unwrap();
    let report_product = validate_trace(&split_merge, &product_moments, 4.0).unwrap();
    for check in report_product.failures() {
        failures.push(format!(
            "product law k={}: analytic {} vs sampled {} (stderr {})",
            check.k, check.analytic_w_sq, check.mc_mean_sq, check.stderr
        ));
    }

    let mode_conditional =
        run_mode_conditional(&cfg.system, &cfg.law, &cfg.initial_state, 20).unwrap();
    let chain_moments = run_sampler(
        &cfg.system,
        &cfg.law,
        &cfg.initial_state,
        &SamplerConfig {
            num_trajectories: 100_000,
            seed: 2025,
            horizon: 20,
            law_mode: LawMode::Chain,
        },
    )
    .unwrap();
    let report_chain = validate_trace(&mode_conditional, &chain_moments, 4.0).unwrap();
    for check in report_chain.failures() {
        failures.push(format!(
            "chain law k={}: analytic {} vs sampled {} (stderr {})",
            check.k, check.analytic_w_sq, check.mc_mean_sq, check.stderr
        ));
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        failures.push(format!("runtime {elapsed:.2}s exceeds the 30s target"));
    }
    report(5, "Monte Carlo brackets both engines", &failures);
}

#[test]
fn a6_mode_conditional_matches_chain_enumeration() {
    let cfg = load_config(shipped_config()).unwrap();
    let trace =
        run_mode_conditional(&cfg.system, &cfg.law, &cfg.initial_state, 12).unwrap();
    let mut failures = Vec::new();
    for k in 1..=12usize {
        let mix = enumerate_mixture(
            &cfg.system,
            &cfg.law,
            LawMode::Chain,
            &cfg.initial_state,
            k,
            None,
        )
        .unwrap();
        let w_oracle = mix.wasserstein_sq_to_dirac().sqrt();
        let w = trace.w_at(k).unwrap();
        if (w - w_oracle).abs() > 1e-9 * (1.0 + w) {
            failures.push(format!("k={k}: mode-conditional {w} vs chain oracle {w_oracle}"));
        }
    }
    report(6, "mode-conditional equals chain-law enumeration", &failures);
}

#[test]
fn a7_path_law_sanity() {
    let cfg = load_config(shipped_config()).unwrap();
    let law = &cfg.law;
    let mut failures = Vec::new();
    for mode in [LawMode::ProductOfMarginals, LawMode::Chain] {
        for k in 1..=8usize {
            let mut total = 0.0f64;
            let mut by_end = [0.0f64; 2];
            for code in 0..(1usize << k) {
                let steps: Vec<usize> = (0..k).map(|r| (code >> r) & 1).collect();
                let end = steps[k - 1];
                let p = law
                    .path_probability(&ModePath::new(steps).unwrap(), mode)
                    .unwrap();
                total += p;
                by_end[end] += p;
            }
            if (total - 1.0).abs() > 1e-12 {
                failures.push(format!("{mode:?} k={k}: total path mass {total}"));
            }
            let pi = law.marginal_at(k).unwrap();
            for j in 0..2 {
                if (by_end[j] - pi[j]).abs() > 1e-12 {
                    failures.push(format!(
                        "{mode:?} k={k}: mass ending in mode {j} is {} vs marginal {}",
                        by_end[j], pi[j]
                    ));
                }
            }
        }
    }
    report(7, "path masses normalize and aggregate to marginals", &failures);
}

#[test]
fn a8_analyze_is_byte_deterministic() {
    let mut failures = Vec::new();
    let out_a = std::env::temp_dir().join(format!("sjls_acc_det_a_{}.csv", std::process::id()));
    let out_b = std::env::temp_dir().join(format!("sjls_acc_det_b_{}.csv", std::process::id()));

    let run = |out: &PathBuf, single_thread: bool| {
        let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_sjls"));
        cmd.args(["analyze", "--config"])
            .arg(shipped_config())
            .arg("--out")
            .arg(out);
        if single_thread {
            cmd.env("RAYON_NUM_THREADS", "1");
        }
        cmd.output().unwrap().status
    };

    if !run(&out_a, false).success() {
        failures.push("first analyze run failed".into());
    }
    if !run(&out_b, true).success() {
        failures.push("second analyze run failed".into());
    }
    if failures.is_empty() {
        let a = std::fs::read(&out_a).unwrap();
        let b = std::fs::read(&out_b).unwrap();
        if a != b {
            failures.push("CSV bytes differ between runs/thread counts".into());
        }
    }
    std::fs::remove_file(&out_a).ok();
    std::fs::remove_file(&out_b).ok();
    report(8, "analyze output is byte-deterministic", &failures);
}
