//! Modulus-of-continuity experiment: rescaled point-to-line paths on dyadic
//! grids, with the normalized increment statistic
//! `sup |L_s - L_t| / (|t-s|^{1/2-delta} log(2/|t-s|))`. Tightness evidence:
//! upper quantiles stay within a bounded factor across scales.

use super::*;
use crate::runner::{csv_row, fmt_f64, Check};
use cdrp_core::analysis::moc_statistic;
use cdrp_core::sampler::{rescale, QuenchedSampler, RescaleRegime};

pub fn run(cfg: &ResolvedConfig) -> Result<ExperimentOutput> {
    let m = 1usize << cfg.dyadic_depth;
    let mut csv = String::from("epsilon,replica,value\n");
    let mut per_epsilon = Vec::new();
    let mut q99s = Vec::new();
    let mut warnings = Vec::new();

    for (ei, &eps) in cfg.epsilon_list.iter().enumerate() {
        let horizon = 1.0 / eps;
        let base = (cfg.n_steps as f64 * horizon).round() as usize;
        let n = base.div_ceil(m) * m; // realized dyadic times must be exact
        let w = half_width_for(n, horizon, 2.0 * horizon.powf(2.0 / 3.0));
        let times: Vec<f64> = (1..m).map(|i| i as f64 * horizon / m as f64).collect();

        let values: Vec<f64> = crate::runner::parallel_map(
            cfg.worker_count,
            cfg.replicas,
            |r| -> Result<f64> {
                let idx = (ei * cfg.replicas + r) as u64;
                let env_seed = replica_seed(cfg.master_seed, idx);
                let env = build_env(env_seed, n, horizon, w)?;
                let sampler = QuenchedSampler::new_point_to_line(&env)?;
                let mut rng = replica_rng(env_seed, StreamDomain::PathSampling, 0);
                let path = sampler.sample(&times, &mut rng)?;
                let scaled = rescale(&path, RescaleRegime::Long, eps)?;
                Ok(moc_statistic(&scaled, cfg.delta)?.value)
            },
        )?;

        for (r, v) in values.iter().enumerate() {
            csv.push_str(&csv_row(&[fmt_f64(eps), r.to_string(), fmt_f64(*v)]));
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q99 = quantile(&sorted, 0.99);
        q99s.push(q99);
        per_epsilon.push(serde_json::json!({
            "epsilon": eps,
            "horizon": horizon,
            "n_steps": n,
            "half_width": w,
            "q50": quantile(&sorted, 0.50),
            "q90": quantile(&sorted, 0.90),
            "q99": q99,
            "max": sorted[sorted.len() - 1],
        }));
        if sorted[sorted.len() - 1] > 1e6 {
            warnings.push(format!("epsilon {eps}: extreme modulus statistic recorded"));
        }
    }

    let mut checks = Vec::new();
    if q99s.len() >= 2 {
        let max_q = q99s.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min_q = q99s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let ratio = max_q / min_q;
        checks.push(Check::new(
            "tightness_ratio",
            ratio <= 4.0,
            format!("q99 ratio across scales = {ratio:.3}"),
            "max q99 / min q99 <= 4",
        ));
    }

    Ok(ExperimentOutput {
        aggregate: serde_json::json!({
            "delta": cfg.delta,
            "dyadic_depth": cfg.dyadic_depth,
            "per_epsilon": per_epsilon,
        }),
        checks,
        csv: vec![("samples".to_string(), csv)],
        warnings,
    })
}
