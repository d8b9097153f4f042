//! Long-time experiment: the transversal spread of the pinned polymer's
//! midpoint grows like `T^zeta` with nominal `zeta = 2/3`. Horizons are the
//! inverses of the configured scale parameters; each replica is an annealed
//! draw (fresh environment, one quenched midpoint sample).

use super::*;
use crate::runner::{csv_row, fmt_f64, Check};
use cdrp_core::analysis::fit_loglog;
use cdrp_core::sampler::{quenched_marginal, PathKind};

pub fn run(cfg: &ResolvedConfig) -> Result<ExperimentOutput> {
    let mut csv = String::from("horizon,replica,position\n");
    let mut horizons = Vec::new();
    let mut spreads = Vec::new();
    let mut per_horizon = Vec::new();
    let warnings = Vec::new();

    for (ei, &eps) in cfg.epsilon_list.iter().enumerate() {
        let horizon = 1.0 / eps;
        let n = even_at_least(cfg.n_steps as f64 * horizon, 32);
        let w = half_width_for(n, horizon, 2.0 * horizon.powf(2.0 / 3.0));

        let positions: Vec<f64> = crate::runner::parallel_map(
            cfg.worker_count,
            cfg.replicas,
            |r| -> Result<f64> {
                let idx = (ei * cfg.replicas + r) as u64;
                let env_seed = replica_seed(cfg.master_seed, idx);
                let env = build_env(env_seed, n, horizon, w)?;
                let m = quenched_marginal(&env, PathKind::PointToPoint, Some(0), horizon / 2.0)?;
                let mut rng = replica_rng(env_seed, StreamDomain::PathSampling, 0);
                Ok(m.sample_position(&mut rng))
            },
        )?;

        for (r, p) in positions.iter().enumerate() {
            csv.push_str(&csv_row(&[fmt_f64(horizon), r.to_string(), fmt_f64(*p)]));
        }
        let sd = sample_sd(&positions);
        horizons.push(horizon);
        spreads.push(sd);
        per_horizon.push(serde_json::json!({
            "horizon": horizon,
            "n_steps": n,
            "half_width": w,
            "midpoint_sd": sd,
            "midpoint_mean": sample_mean(&positions),
        }));
    }

    let fit = fit_loglog(&horizons, &spreads)?;
    let in_range = fit.slope >= cfg.fit_range[0] && fit.slope <= cfg.fit_range[1];
    let checks = vec![Check::new(
        "transversal_exponent",
        in_range,
        format!("slope = {:.4} +- {:.4}", fit.slope, fit.stderr),
        format!(
            "slope in [{}, {}] (nominal 2/3)",
            cfg.fit_range[0], cfg.fit_range[1]
        ),
    )];

    Ok(ExperimentOutput {
        aggregate: serde_json::json!({
            "per_horizon": per_horizon,
            "fit": {
                "slope": fit.slope,
                "stderr": fit.stderr,
                "intercept": fit.intercept,
                "nominal": 2.0 / 3.0,
            },
        }),
        checks,
        csv: vec![("samples".to_string(), csv)],
        warnings,
    })
}
