//! Quenched-vs-annealed bridge identity: the disorder average of
//! `Z * E_quenched[phi(path)]` should equal the Brownian-bridge expectation
//! of `phi` once the partition normalizer is accounted for.

use super::*;
use crate::error::LabError;
use crate::runner::{csv_row, fmt_f64, Check};
use cdrp_core::analysis::{brownian_relation_check, BrownianRelationConfig, PathFunctional};

fn parse_functional(name: &str, time: f64) -> Result<PathFunctional> {
    match name {
        "constant" => Ok(PathFunctional::Constant),
        "position" => Ok(PathFunctional::Position { time }),
        "squared_position" => Ok(PathFunctional::SquaredPosition { time }),
        "abs_position" => Ok(PathFunctional::AbsPosition { time }),
        other => Err(LabError::Config(format!("unknown functional '{other}'"))),
    }
}

pub fn run(cfg: &ResolvedConfig) -> Result<ExperimentOutput> {
    let horizon = cfg.horizon;
    let n = even_at_least(cfg.n_steps as f64 * horizon, 16);
    let functional = parse_functional(&cfg.functional, cfg.times[0])?;

    let core_cfg = BrownianRelationConfig {
        seed: cfg.master_seed,
        n_steps: n,
        horizon,
        half_width: half_width_for(n, horizon, 0.0),
        n_envs: cfg.replicas,
        paths_per_env: cfg.paths_per_env,
        functional,
    };
    let report = brownian_relation_check(&core_cfg)?;

    let mut csv = String::from("replica,value\n");
    for (r, v) in report.per_env.iter().enumerate() {
        csv.push_str(&csv_row(&[r.to_string(), fmt_f64(*v)]));
    }

    let z = if report.lhs_se > 0.0 {
        (report.lhs - report.rhs).abs() / report.lhs_se
    } else {
        f64::INFINITY
    };
    let checks = vec![Check::new(
        "bridge_identity",
        z <= 4.0,
        format!(
            "lhs = {:.6} +- {:.6}, rhs = {:.6}, z = {:.3}",
            report.lhs, report.lhs_se, report.rhs, z
        ),
        "|lhs - rhs| <= 4 standard errors",
    )];

    Ok(ExperimentOutput {
        aggregate: serde_json::json!({
            "lhs": report.lhs,
            "lhs_se": report.lhs_se,
            "rhs": report.rhs,
            "rhs_method": report.rhs_method,
            "z_score": z,
            "n_envs": report.n_envs,
            "paths_per_env": cfg.paths_per_env,
            "functional": cfg.functional,
            "functional_time": cfg.times[0],
            "n_steps": n,
        }),
        checks,
        csv: vec![("samples".to_string(), csv)],
        warnings: Vec::new(),
    })
}
