//! Short-time experiment: on a horizon-`eps` lattice, pinned polymer paths
//! rescaled by `Y(t) = eps^{-1/2} X(eps t)` should approach the Brownian
//! bridge as `eps` shrinks. Per (eps, time) the built-in check is a KS test
//! of the cell-smoothed rescaled marginal against Normal(0, t(1-t)).

use super::*;
use crate::runner::{csv_row, fmt_f64, Check};
use cdrp_core::analysis::{ks_test, normal_cdf};
use cdrp_core::sampler::QuenchedSampler;

struct ReplicaOut {
    /// Per requested time: (site position scaled, smoothed position scaled).
    points: Vec<(f64, f64)>,
    warnings: Vec<String>,
}

pub fn run(cfg: &ResolvedConfig) -> Result<ExperimentOutput> {
    let mut csv = String::from("epsilon,replica,time,position,position_smoothed\n");
    let mut per_epsilon = Vec::new();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    for (ei, &eps) in cfg.epsilon_list.iter().enumerate() {
        let n = even_at_least(cfg.n_steps as f64 * eps, 16);
        let w = half_width_for(n, eps, 0.0);
        let dt = eps / n as f64;
        let dx = dt.sqrt();
        let scale = eps.powf(-0.5);
        let real_times: Vec<f64> = cfg.times.iter().map(|t| t * eps).collect();

        let outs: Vec<ReplicaOut> = crate::runner::parallel_map(
            cfg.worker_count,
            cfg.replicas,
            |r| -> Result<ReplicaOut> {
                let idx = (ei * cfg.replicas + r) as u64;
                let env_seed = replica_seed(cfg.master_seed, idx);
                let env = build_env(env_seed, n, eps, w)?;
                let sampler = QuenchedSampler::new_point_to_point(&env, 0)?;
                let mut rng = replica_rng(env_seed, StreamDomain::PathSampling, 0);
                let path = sampler.sample(&real_times, &mut rng)?;
                let mut points = Vec::with_capacity(real_times.len());
                for &t in &real_times {
                    let step = (t / dt).round() as usize;
                    let at = path
                        .steps
                        .binary_search(&step)
                        .expect("requested step is recorded");
                    let site = path.sites[at] as f64;
                    let dither: f64 = rng.random_range(-1.0..1.0);
                    points.push((site * dx * scale, (site + dither) * dx * scale));
                }
                Ok(ReplicaOut {
                    points,
                    warnings: path.warnings,
                })
            },
        )?;

        let mut per_time = Vec::new();
        for (ti, &t) in cfg.times.iter().enumerate() {
            let mut raw = Vec::with_capacity(outs.len());
            let mut smoothed = Vec::with_capacity(outs.len());
            for (r, o) in outs.iter().enumerate() {
                let (p, s) = o.points[ti];
                raw.push(p);
                smoothed.push(s);
                csv.push_str(&csv_row(&[
                    fmt_f64(eps),
                    r.to_string(),
                    fmt_f64(t),
                    fmt_f64(p),
                    fmt_f64(s),
                ]));
            }
            let sd = (t * (1.0 - t)).sqrt();
            let ks = ks_test(&smoothed, |x| normal_cdf(x, 0.0, sd))?;
            checks.push(Check::new(
                format!("bridge_ks[eps={eps},t={t}]"),
                ks.p_value >= cfg.p_threshold,
                format!("p = {:.4}", ks.p_value),
                format!("p >= {}", cfg.p_threshold),
            ));
            per_time.push(serde_json::json!({
                "time": t,
                "mean": sample_mean(&raw),
                "variance": sample_sd(&raw).powi(2),
                "bridge_variance": t * (1.0 - t),
                "ks_statistic": ks.statistic,
                "ks_p": ks.p_value,
                "ks_method": ks.method,
            }));
        }
        for o in outs {
            warnings.extend(o.warnings);
        }
        per_epsilon.push(serde_json::json!({
            "epsilon": eps,
            "n_steps": n,
            "half_width": w,
            "per_time": per_time,
        }));
    }

    Ok(ExperimentOutput {
        aggregate: serde_json::json!({ "per_epsilon": per_epsilon }),
        checks,
        csv: vec![("samples".to_string(), csv)],
        warnings,
    })
}
