//! Acceptance suite: fifteen numbered statistical and exactness criteria,
//! one test per criterion. Every test prints a single
//! `[criterion N] PASS/FAIL — detail` line (visible with `--nocapture`; the
//! line is also shown automatically whenever a criterion fails) and then
//! asserts the verdict, so the suite is both a human-readable scoreboard and
//! a hard gate. All tolerances are pinned here, next to the criterion they
//! guard; all seeds are fixed, so verdicts are reproducible bit for bit.

use std::collections::HashMap;

use cdrp_core::analysis::{
    brownian_relation_check, fit_loglog, fit_tail, ks_test, moc_statistic, normal_cdf,
    stationarity_test, BrownianRelationConfig, PathFunctional,
};
use cdrp_core::environment::{
    generate_environment, replica_rng, EnvironmentParams, LatticeEnvironment, StreamDomain,
};
use cdrp_core::gibbs::{
    gibbs_sweep, monotone_coupling_check, monotone_event_bound_check, Boundary, CouplingConfig,
    CouplingMode, EventBoundConfig, LineEnsembleState, MonotoneEvent,
};
use cdrp_core::partition::{
    build_field, compose_log, evaluate_f_process, log_partition_between, log_profile, sheet_long,
    Direction, FieldAnchor, SheetRegime,
};
use cdrp_core::sampler::{
    laplace_concentration_check, quenched_marginal, rescale, GridFunction, PathKind,
    QuenchedSampler, RescaleRegime,
};
use cdrp_core::environment::map_to_lattice;
use rand::Rng;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Print the criterion's scoreboard line and return the verdict.
fn verdict(criterion: u32, passed: bool, detail: &str) -> bool {
    println!(
        "[criterion {criterion}] {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn make_env(seed: u64, n_steps: usize, horizon: f64, half_width: usize) -> LatticeEnvironment {
    generate_environment(&EnvironmentParams {
        seed,
        n_steps,
        horizon,
        half_width,
        sigma_override: None,
    })
    .expect("environment construction")
}

/// Grid half-width covering diffusive spread plus `extra` transversal slack.
fn w_for(n_steps: usize, horizon: f64, extra: f64) -> usize {
    let dx = (horizon / n_steps as f64).sqrt();
    let w = ((4.0 * horizon.sqrt() + extra) / dx).ceil() as usize + 8;
    w.clamp(8.min(n_steps), n_steps)
}

fn env_seed_for(master: u64, index: u64) -> u64 {
    replica_rng(master, StreamDomain::Ensemble, index).random::<u64>()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile of a pre-sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs
}

// ---------------------------------------------------------------------------
// 1. Sampler exactness against exhaustive enumeration
// ---------------------------------------------------------------------------

/// All pinned lattice paths of a short environment, as (bitmask, probability).
fn enumerate_pinned(env: &LatticeEnvironment, endpoint: i64) -> HashMap<u64, f64> {
    let n = env.calibration().n_steps;
    let mut masks = Vec::new();
    let mut logw = Vec::new();
    for mask in 0u64..(1 << n) {
        let mut site = 0i64;
        let mut lw = 0.0;
        for k in 0..n {
            site += if (mask >> k) & 1 == 1 { 1 } else { -1 };
            lw += env.weight(k + 1, site);
        }
        if site == endpoint {
            masks.push(mask);
            logw.push(lw);
        }
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|l| (l - max).exp()).sum();
    masks
        .into_iter()
        .zip(logw)
        .map(|(m, l)| (m, (l - max).exp() / total))
        .collect()
}

#[test]
fn criterion_01_sampling_matches_exhaustive_enumeration() {
    let draws = 100_000usize;
    let cases: [(u64, i64); 5] = [(0, 0), (1, 0), (2, 0), (3, 2), (4, -4)];
    let mut worst_sigma = 0.0f64;
    let mut atoms_checked = 0usize;

    for (idx, endpoint) in cases {
        let env = make_env(101 + idx, 6, 1.0, 6);
        let atoms = enumerate_pinned(&env, endpoint);
        let sampler = QuenchedSampler::new_point_to_point(&env, endpoint).unwrap();
        let dt = env.calibration().dt;
        let times: Vec<f64> = (0..=6).map(|k| k as f64 * dt).collect();
        let mut rng = replica_rng(env.seed(), StreamDomain::PathSampling, 0);

        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..draws {
            let path = sampler.sample(&times, &mut rng).unwrap();
            assert_eq!(path.sites.len(), 7, "full trajectory expected");
            let mut mask = 0u64;
            for k in 0..6 {
                if path.sites[k + 1] > path.sites[k] {
                    mask |= 1 << k;
                }
            }
            assert!(
                atoms.contains_key(&mask),
                "sampler produced a path outside the enumerated support"
            );
            *counts.entry(mask).or_insert(0) += 1;
        }

        for (mask, &p) in &atoms {
            if p < 1e-3 {
                continue;
            }
            atoms_checked += 1;
            let freq = *counts.get(mask).unwrap_or(&0) as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            worst_sigma = worst_sigma.max((freq - p).abs() / sigma);
        }
    }

    let passed = worst_sigma <= 4.0 && atoms_checked >= 50;
    assert!(
        verdict(
            1,
            passed,
            &format!(
                "worst atom deviation {worst_sigma:.2} sigma over {atoms_checked} atoms \
                 (5 environments, 1e5 draws each; bound 4 sigma)"
            ),
        ),
        "sampled path frequencies deviate from exhaustive enumeration"
    );
}

// ---------------------------------------------------------------------------
// 2. Composition over an intermediate step reproduces the direct value
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_composition_matches_direct_log_partition() {
    let env = make_env(202, 256, 1.0, 256);
    let anchors: [(usize, i64); 3] = [(0, 0), (0, 8), (0, -8)];
    let queries: [(usize, i64); 3] = [(256, 0), (256, 32), (256, -32)];
    let mids = [64usize, 128, 192];

    let mut worst_rel = 0.0f64;
    let mut triples = 0usize;
    for &a in &anchors {
        let fwd = build_field(&env, FieldAnchor::point(a.0, a.1), Direction::Forward).unwrap();
        for &q in &queries {
            let bwd = build_field(&env, FieldAnchor::point(q.0, q.1), Direction::Backward).unwrap();
            let direct = log_partition_between(&env, a, q).unwrap();
            for &m in &mids {
                let composed = compose_log(&env, &fwd, &bwd, m).unwrap();
                let rel = (composed - direct).abs() / direct.abs().max(1.0);
                worst_rel = worst_rel.max(rel);
                triples += 1;
            }
        }
    }

    let passed = worst_rel <= 1e-10 && triples == 27;
    assert!(
        verdict(
            2,
            passed,
            &format!(
                "worst relative log error {worst_rel:.2e} over {triples} \
                 (anchor, midpoint, query) triples on n = 256 (bound 1e-10)"
            ),
        ),
        "composed and direct log partition values disagree"
    );
}

// ---------------------------------------------------------------------------
// 3. Zero-noise reduction to Brownian bridge / motion marginals
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_zero_noise_marginals_are_gaussian() {
    let env = generate_environment(&EnvironmentParams {
        seed: 0,
        n_steps: 512,
        horizon: 1.0,
        half_width: 512,
        sigma_override: Some(0.0),
    })
    .unwrap();
    let draws = 10_000usize;

    let pinned = quenched_marginal(&env, PathKind::PointToPoint, Some(0), 0.5).unwrap();
    let mut rng = replica_rng(303, StreamDomain::PathSampling, 0);
    let bridge: Vec<f64> = (0..draws).map(|_| pinned.sample_position_smoothed(&mut rng)).collect();
    let ks_bridge = ks_test(&bridge, |x| normal_cdf(x, 0.0, 0.25f64.sqrt())).unwrap();

    let free = quenched_marginal(&env, PathKind::PointToLine, None, 0.5).unwrap();
    let mut rng = replica_rng(303, StreamDomain::PathSampling, 1);
    let walk: Vec<f64> = (0..draws).map(|_| free.sample_position_smoothed(&mut rng)).collect();
    let ks_walk = ks_test(&walk, |x| normal_cdf(x, 0.0, 0.5f64.sqrt())).unwrap();

    let passed = ks_bridge.p_value > 0.01 && ks_walk.p_value > 0.01;
    assert!(
        verdict(
            3,
            passed,
            &format!(
                "pinned t=1/2 marginal vs Normal(0, 1/4): p = {:.4}; \
                 free-endpoint marginal vs Normal(0, 1/2): p = {:.4} \
                 (n = 512, sigma = 0, 1e4 draws, both must exceed 0.01)",
                ks_bridge.p_value, ks_walk.p_value
            ),
        ),
        "zero-noise marginals do not match the Gaussian laws"
    );
}

// ---------------------------------------------------------------------------
// 4. Disorder average of the partition function equals the heat kernel
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_mean_partition_function_matches_heat_kernel() {
    let n_envs = 10_000usize;
    let n = 256usize;
    let w = w_for(n, 1.0, 0.0);
    let zs: Vec<f64> = (0..n_envs)
        .map(|r| {
            let env = make_env(env_seed_for(404, r as u64), n, 1.0, w);
            log_partition_between(&env, (0, 0), (n, 0)).unwrap().exp()
        })
        .collect();
    let m = mean(&zs);
    let se = sample_sd(&zs) / (n_envs as f64).sqrt();
    let target = 0.398_942_280_401_432_7; // Gaussian density at the origin, unit variance
    let z_score = (m - target).abs() / se;

    let passed = z_score <= 3.0;
    assert!(
        verdict(
            4,
            passed,
            &format!(
                "mean partition value {m:.5} vs 0.39894, z = {z_score:.2} \
                 (1e4 environments, n = 256, bound 3 standard errors)"
            ),
        ),
        "disorder-averaged partition function drifts from the heat kernel"
    );
}

// ---------------------------------------------------------------------------
// 5. Partition-weighted quenched functional equals bridge expectation
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_weighted_quenched_functional_matches_bridge() {
    let n = 512usize;
    let cfg = BrownianRelationConfig {
        seed: 505,
        n_steps: n,
        horizon: 1.0,
        half_width: w_for(n, 1.0, 0.0),
        n_envs: 10_000,
        paths_per_env: 10,
        functional: PathFunctional::SquaredPosition { time: 0.5 },
    };
    let report = brownian_relation_check(&cfg).unwrap();
    let gap = (report.lhs - report.rhs).abs();
    let bound = 1.96 * report.lhs_se;

    let passed = gap <= bound;
    assert!(
        verdict(
            5,
            passed,
            &format!(
                "X(T/2)^2: weighted quenched mean {:.5} +- {:.5} vs bridge value {:.5} \
                 (1e4 environments x 10 paths, 95% interval half-width {:.5})",
                report.lhs, report.lhs_se, report.rhs, bound
            ),
        ),
        "weighted quenched functional disagrees with the bridge expectation"
    );
}

// ---------------------------------------------------------------------------
// 6. Short-horizon rescaled marginal approaches the bridge law
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_short_horizon_ks_distance_is_nonincreasing() {
    let eps_list = [0.4f64, 0.1, 0.025];
    let per_eps = 4_000usize;
    // Fixed step count per horizon: the rescaled lattice resolution is then
    // identical across eps, so the only eps-dependent effect is the disorder
    // strength, which is what the criterion is about.
    let n = 512usize;
    let mut distances = Vec::new();

    for (ei, &eps) in eps_list.iter().enumerate() {
        let w = w_for(n, eps, 0.0);
        let mut ys = Vec::with_capacity(per_eps);
        for r in 0..per_eps {
            let seed = env_seed_for(606, (ei * per_eps + r) as u64);
            let env = make_env(seed, n, eps, w);
            let marginal =
                quenched_marginal(&env, PathKind::PointToPoint, Some(0), eps / 2.0).unwrap();
            let mut rng = replica_rng(seed, StreamDomain::PathSampling, 0);
            ys.push(marginal.sample_position_smoothed(&mut rng) / eps.sqrt());
        }
        let ks = ks_test(&ys, |x| normal_cdf(x, 0.0, 0.25f64.sqrt())).unwrap();
        distances.push(ks.statistic);
    }

    let passed =
        distances[1] <= 1.1 * distances[0] && distances[2] <= 1.1 * distances[1];
    assert!(
        verdict(
            6,
            passed,
            &format!(
                "KS distance to Normal(0, 1/4): {:.4} (eps 0.4) -> {:.4} (eps 0.1) -> \
                 {:.4} (eps 0.025); each step must not grow by more than 10% \
                 (4e3 annealed samples per eps, 512 steps per horizon)",
                distances[0], distances[1], distances[2]
            ),
        ),
        "short-horizon rescaled marginal is not converging to the bridge law"
    );
}

// ---------------------------------------------------------------------------
// 7. Long-horizon transversal exponent near 2/3
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_transversal_exponent_in_window() {
    let horizons = [8.0f64, 16.0, 32.0, 64.0];
    let envs_per_t = 250usize;
    let paths_per_env = 8usize;
    let mut sds = Vec::new();

    for (ti, &t) in horizons.iter().enumerate() {
        let n = (128.0 * t) as usize;
        let w = w_for(n, t, 2.0 * t.powf(2.0 / 3.0));
        let mut xs = Vec::with_capacity(envs_per_t * paths_per_env);
        for r in 0..envs_per_t {
            let seed = env_seed_for(707, (ti * envs_per_t + r) as u64);
            let env = make_env(seed, n, t, w);
            let marginal =
                quenched_marginal(&env, PathKind::PointToPoint, Some(0), t / 2.0).unwrap();
            let mut rng = replica_rng(seed, StreamDomain::PathSampling, 0);
            for _ in 0..paths_per_env {
                xs.push(marginal.sample_position(&mut rng));
            }
        }
        sds.push(sample_sd(&xs));
    }

    let fit = fit_loglog(&horizons, &sds).unwrap();
    let passed = fit.slope >= 0.55 && fit.slope <= 0.80;
    assert!(
        verdict(
            7,
            passed,
            &format!(
                "midpoint spread at T = 8/16/32/64: {:.3}/{:.3}/{:.3}/{:.3}, \
                 log-log slope {:.3} +- {:.3} (window [0.55, 0.80], dt = 1/128, \
                 2e3 annealed samples per horizon)",
                sds[0], sds[1], sds[2], sds[3], fit.slope, fit.stderr
            ),
        ),
        "transversal exponent outside the acceptance window"
    );
}

// ---------------------------------------------------------------------------
// 8. Shift invariance of the parabola-corrected sheet
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_sheet_values_are_shift_invariant() {
    let t = 16.0f64;
    let n = 512usize;
    let per_shift = 1_000usize;
    let w = w_for(n, t, 1.1 * t.powf(2.0 / 3.0));

    let sample_at = |offset: u64, x: f64| -> Vec<f64> {
        (0..per_shift)
            .map(|r| {
                let env = make_env(env_seed_for(808, offset + r as u64), n, t, w);
                sheet_long(&env, 0.0, t, &[0.0], &[x]).unwrap().values[0][0]
            })
            .collect()
    };
    let at_zero = sample_at(0, 0.0);
    let at_one = sample_at(per_shift as u64, 1.0);

    let report =
        stationarity_test(SheetRegime::Long, t, &[0.0, 1.0], &[at_zero, at_one]).unwrap();
    let passed = report.min_p > 0.01;
    assert!(
        verdict(
            8,
            passed,
            &format!(
                "two-sample KS of corrected sheet values at x = 0 vs x = 1: p = {:.4} \
                 (T = 16, 1e3 disjoint environments per shift, bound p > 0.01)",
                report.min_p
            ),
        ),
        "parabola-corrected sheet values fail shift invariance"
    );
}

// ---------------------------------------------------------------------------
// 9. Tail exponent of the normalized log partition value
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_tail_exponent_is_controlled() {
    let t = 16.0f64;
    let n = 256usize;
    let n_envs = 10_000usize;
    let w = w_for(n, t, 2.0 * t.powf(2.0 / 3.0));

    let values: Vec<f64> = (0..n_envs)
        .map(|r| {
            let env = make_env(env_seed_for(909, r as u64), n, t, w);
            sheet_long(&env, 0.0, t, &[0.0], &[0.0]).unwrap().values[0][0].abs()
        })
        .collect();

    let s = sorted(values.clone());
    let thresholds = [
        quantile(&s, 0.80),
        quantile(&s, 0.90),
        quantile(&s, 0.95),
        quantile(&s, 0.975),
    ];
    let fit = fit_tail(&values, &thresholds).unwrap();
    let passed = fit.alpha >= 1.0 && fit.alpha <= 3.0;
    assert!(
        verdict(
            9,
            passed,
            &format!(
                "|sheet value| tail exponent {:.3} +- {:.3} over thresholds \
                 {:.3}/{:.3}/{:.3}/{:.3} (T = 16, 1e4 environments, window [1.0, 3.0])",
                fit.alpha, fit.stderr, thresholds[0], thresholds[1], thresholds[2], thresholds[3]
            ),
        ),
        "tail exponent outside the acceptance window"
    );
}

// ---------------------------------------------------------------------------
// 10. Modulus-of-continuity tightness across horizon scales
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_modulus_statistic_is_tight_across_scales() {
    let eps_list = [1.0f64, 0.25, 0.0625];
    let replicas = 500usize;
    let delta = 0.25f64;
    let depth = 8u32;
    let m = 1usize << depth;

    let mut q99s = Vec::new();
    let mut pooled = Vec::new();
    for (ei, &eps) in eps_list.iter().enumerate() {
        let horizon = 1.0 / eps;
        let n = ((128.0 * horizon) as usize).max(m).div_ceil(m) * m;
        let w = w_for(n, horizon, 2.0 * horizon.powf(2.0 / 3.0));
        let times: Vec<f64> = (1..m).map(|i| i as f64 * horizon / m as f64).collect();
        let mut vals = Vec::with_capacity(replicas);
        for r in 0..replicas {
            let seed = env_seed_for(1010, (ei * replicas + r) as u64);
            let env = make_env(seed, n, horizon, w);
            let sampler = QuenchedSampler::new_point_to_line(&env).unwrap();
            let mut rng = replica_rng(seed, StreamDomain::PathSampling, 0);
            let path = sampler.sample(&times, &mut rng).unwrap();
            let scaled = rescale(&path, RescaleRegime::Long, eps).unwrap();
            let stat = moc_statistic(&scaled, delta).unwrap();
            assert_eq!(stat.depth, depth);
            vals.push(stat.value);
        }
        pooled.extend_from_slice(&vals);
        q99s.push(quantile(&sorted(vals), 0.99));
    }

    let q_hi = q99s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let q_lo = q99s.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = q_hi / q_lo;

    let ps = sorted(pooled.clone());
    let lo = quantile(&ps, 0.50);
    let hi = quantile(&ps, 0.98);
    let thresholds: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
    let n_total = pooled.len() as f64;
    let log_surv: Vec<f64> = thresholds
        .iter()
        .map(|&tau| (pooled.iter().filter(|&&v| v > tau).count() as f64 / n_total).ln())
        .collect();
    let strictly_decreasing = log_surv.windows(2).all(|p| p[1] < p[0]);
    let second_diff_violations = (0..log_surv.len().saturating_sub(2))
        .filter(|&i| log_surv[i + 2] - 2.0 * log_surv[i + 1] + log_surv[i] > 1e-12)
        .count();

    let passed = ratio <= 2.0 && strictly_decreasing && second_diff_violations <= 1;
    assert!(
        verdict(
            10,
            passed,
            &format!(
                "99th-percentile modulus statistic {:.3}/{:.3}/{:.3} across eps 1, 1/4, 1/16 \
                 (ratio {ratio:.3}, bound 2); pooled log-survival strictly decreasing: \
                 {strictly_decreasing}, concavity violations {second_diff_violations} (allow 1)",
                q99s[0], q99s[1], q99s[2]
            ),
        ),
        "modulus-of-continuity statistic is not tight across scales"
    );
}

// ---------------------------------------------------------------------------
// 11. Parabolic decay of the two-segment free-energy surface
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_f_surface_maximum_has_superexponential_tail() {
    let eps = 1.0f64 / 16.0;
    let horizon = 16.0f64;
    let n = 512usize;
    // 2e3 environments so that the top fitting threshold can sit exactly at
    // the 99th percentile while keeping 20 exceedances above it.
    let n_envs = 2_000usize;
    let w = w_for(n, horizon, 2.0 * horizon.powf(2.0 / 3.0));
    let grid = [-1.0f64, -0.5, 0.0, 0.5, 1.0];
    let space_scale = eps.powf(-2.0 / 3.0);
    let eps13 = eps.powf(1.0 / 3.0);

    // Lattice nodes for both time slices of each scaled grid position.
    let cal_env = make_env(0, n, horizon, w);
    let cal = cal_env.calibration().clone();
    let mid_nodes: Vec<(usize, i64, f64)> = grid
        .iter()
        .map(|&x| {
            let (k, j) = map_to_lattice(&cal, x * space_scale, horizon / 2.0).unwrap();
            assert_eq!(k, n / 2);
            (k, j, j as f64 * cal.dx / space_scale)
        })
        .collect();
    let end_nodes: Vec<(usize, i64, f64)> = grid
        .iter()
        .map(|&x| {
            let (k, j) = map_to_lattice(&cal, x * space_scale, horizon).unwrap();
            assert_eq!(k, n);
            (k, j, j as f64 * cal.dx / space_scale)
        })
        .collect();
    let seg_dur = horizon / 2.0;

    let mut maxima = Vec::with_capacity(n_envs);
    for r in 0..n_envs {
        let env = make_env(env_seed_for(1111, r as u64), n, horizon, w);
        let first_row =
            log_profile(&env, FieldAnchor::point(0, 0), Direction::Forward, n / 2).unwrap();
        let mut best = f64::NEG_INFINITY;
        for &(_, j1, x1) in &mid_nodes {
            let bracket1 = first_row[env.site_index(j1)] + seg_dur / 24.0;
            let second_row =
                log_profile(&env, FieldAnchor::point(n / 2, j1), Direction::Forward, n).unwrap();
            for &(_, j2, x2) in &end_nodes {
                let bracket2 = second_row[env.site_index(j2)] + seg_dur / 24.0;
                let f_value = eps13 * (bracket1 + bracket2);
                let parabola = 0.5 * (x1 * x1 + (x2 - x1) * (x2 - x1));
                best = best.max(f_value + parabola);
            }
        }
        maxima.push(best);

        if r == 0 {
            // Cross-check the manual composition against the reference
            // evaluator on a few grid tuples.
            for (i1, i2) in [(2usize, 2usize), (0, 4), (3, 1)] {
                let reference =
                    evaluate_f_process(&env, eps, &[0.5, 1.0], &[grid[i1], grid[i2]]).unwrap();
                let manual = eps13
                    * (first_row[env.site_index(mid_nodes[i1].1)]
                        + seg_dur / 24.0
                        + log_profile(
                            &env,
                            FieldAnchor::point(n / 2, mid_nodes[i1].1),
                            Direction::Forward,
                            n,
                        )
                        .unwrap()[env.site_index(end_nodes[i2].1)]
                        + seg_dur / 24.0);
                assert!(
                    (reference.value - manual).abs() <= 1e-9,
                    "manual segment composition must match the evaluator"
                );
            }
        }
    }

    let s = sorted(maxima.clone());
    let med = quantile(&s, 0.5);
    let shifted: Vec<f64> = maxima.iter().map(|v| v - med).collect();
    let ss = sorted(shifted.clone());
    let thresholds = [quantile(&ss, 0.92), quantile(&ss, 0.96), quantile(&ss, 0.99)];
    let fit = fit_tail(&shifted, &thresholds).unwrap();

    let passed = fit.alpha >= 1.0;
    assert!(
        verdict(
            11,
            passed,
            &format!(
                "grid maximum of F + parabolas: centered tail exponent {:.3} +- {:.3} \
                 over thresholds {:.3}/{:.3}/{:.3} up to the 99th percentile \
                 (2e3 environments, k = 2, eps = 1/16, requirement >= 1.0)",
                fit.alpha, fit.stderr, thresholds[0], thresholds[1], thresholds[2]
            ),
        ),
        "free-energy surface maximum decays too slowly"
    );
}

// ---------------------------------------------------------------------------
// 12. Free single-curve chain reproduces the bridge midpoint law
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_free_chain_midpoints_match_bridge_law() {
    let (a, b) = (-1.0f64, 1.0f64);
    let grid_points = 17usize;
    let mut state =
        LineEnsembleState::new(1.0, a, b, grid_points, vec![0.0], vec![0.0], Boundary::NegInf)
            .unwrap();
    let mut rng = replica_rng(1212, StreamDomain::PathSampling, 0);

    for _ in 0..200 {
        gibbs_sweep(&mut state, 0, &mut rng).unwrap(); // burn-in
    }
    let sweeps = 10_000usize;
    let mid = grid_points / 2;
    let mut accepted = 0usize;
    let mut midpoints = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        if gibbs_sweep(&mut state, 0, &mut rng).unwrap().accepted {
            accepted += 1;
        }
        midpoints.push(state.curves[0][mid]);
    }
    let sd = ((b - a) / 4.0).sqrt();
    let ks = ks_test(&midpoints, |x| normal_cdf(x, 0.0, sd)).unwrap();

    let passed = ks.p_value > 0.01 && accepted == sweeps;
    assert!(
        verdict(
            12,
            passed,
            &format!(
                "midpoint KS vs Normal(0, (b-a)/4): p = {:.4}; acceptance {accepted}/{sweeps} \
                 (boundary-free proposals must always accept; bound p > 0.01)",
                ks.p_value
            ),
        ),
        "free-chain midpoints do not match the exact bridge law"
    );
}

// ---------------------------------------------------------------------------
// 13. Shared-quantile coupling preserves the boundary ordering
// ---------------------------------------------------------------------------

#[test]
fn criterion_13_coupled_chains_never_cross() {
    let grid_points = 17usize;
    let entries = vec![0.0, -0.7];
    let hi = LineEnsembleState::new(
        1.0,
        -1.0,
        1.0,
        grid_points,
        entries.clone(),
        entries.clone(),
        Boundary::Curve(vec![-1.4; grid_points]),
    )
    .unwrap();
    let lo = LineEnsembleState::new(
        1.0,
        -1.0,
        1.0,
        grid_points,
        entries.clone(),
        entries,
        Boundary::NegInf,
    )
    .unwrap();
    let cfg = CouplingConfig {
        sweeps: 10_000,
        value_grid_points: 513,
        mode: CouplingMode::SharedQuantile,
        seed: 1313,
    };
    let report = monotone_coupling_check(&hi, &lo, &cfg).unwrap();

    let passed = report.violation_sweeps == 0 && !report.identical;
    assert!(
        verdict(
            13,
            passed,
            &format!(
                "{} ordering violations in {} coupled sweeps (floored vs free chain, \
                 two curves; requirement: zero violations, distinct trajectories)",
                report.violation_sweeps, report.sweeps
            ),
        ),
        "shared-quantile coupling broke the stochastic ordering"
    );
}

// ---------------------------------------------------------------------------
// 14. Conditioning on a floor bounds decreasing events
// ---------------------------------------------------------------------------

#[test]
fn criterion_14_floored_chain_event_probabilities_are_bounded() {
    let grid_points = 17usize;
    let levels = [-0.8f64, -0.5, -0.2];
    let mut all_within = true;
    let mut details = Vec::new();
    for (i, &level) in levels.iter().enumerate() {
        let state = LineEnsembleState::new(
            1.0,
            -1.0,
            1.0,
            grid_points,
            vec![0.0],
            vec![0.0],
            Boundary::Curve(vec![-0.3; grid_points]),
        )
        .unwrap();
        let cfg = EventBoundConfig {
            burn_in_sweeps: 1_000,
            thinning: 10,
            replicas: 1_000,
            free_replicas: 10_000,
            seed: 1414 + i as u64,
        };
        let report =
            monotone_event_bound_check(&state, MonotoneEvent::MinAtMost { level }, &cfg).unwrap();
        all_within &= report.within_bound;
        details.push(format!(
            "c = {level}: {:.3} vs {:.3} (+- {:.3})",
            report.conditioned,
            report.free,
            3.0 * (report.conditioned_se * report.conditioned_se
                + report.free_se * report.free_se)
                .sqrt()
        ));
    }

    assert!(
        verdict(
            14,
            all_within,
            &format!(
                "conditioned vs free probability of a low minimum at three levels: {} \
                 (each conditioned estimate must not exceed free + 3 SE)",
                details.join("; ")
            ),
        ),
        "floored-chain event probability exceeded the free bound"
    );
}

// ---------------------------------------------------------------------------
// 15. Laplace concentration of Gibbs-type densities
// ---------------------------------------------------------------------------

#[test]
fn criterion_15_laplace_mass_concentrates_in_the_delta_box() {
    let axis: Vec<f64> = (0..=800).map(|i| -2.0 + i as f64 * 0.005).collect();
    let f = GridFunction::from_fn(vec![axis], |x| -x[0] * x[0]).unwrap();
    let delta = 0.1f64;

    let report = laplace_concentration_check(&f, &[1e-1, 1e-2, 1e-3], delta).unwrap();
    let masses: Vec<f64> = report.masses.iter().map(|&(_, m)| m).collect();
    let final_mass = masses[2];
    let supplementary = laplace_concentration_check(&f, &[1e-9], delta).unwrap().masses[0].1;

    let passed = final_mass >= 0.99 && report.monotone_in_epsilon;
    assert!(
        verdict(
            15,
            passed,
            &format!(
                "delta-box mass along eps 1e-1/1e-2/1e-3: {:.4}/{:.4}/{:.4} \
                 (requirement: >= 0.99 at eps = 1e-3, monotone: {}); \
                 at eps = 1e-9 the mass is {:.5}",
                masses[0], masses[1], masses[2], report.monotone_in_epsilon, supplementary
            ),
        ),
        "delta-box mass at eps = 1e-3 is far below 0.99; the concentration sets in \
         only near eps ~ 1e-8 for this density scaling (see the eps = 1e-9 mass in \
         the verdict line), so this criterion records an honest failure"
    );
}
