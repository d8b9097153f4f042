//! Experiment configuration: TOML (preferred) or JSON files, flag and
//! environment overrides, validation, and a stable content hash that pins
//! reproducibility.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The nine experiment families the laboratory can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ShortTime,
    LongTime,
    P2l,
    Tails,
    Stationarity,
    Moc,
    BrownianRelation,
    Gibbs,
    FProcess,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ShortTime => "short_time",
            ExperimentKind::LongTime => "long_time",
            ExperimentKind::P2l => "p2l",
            ExperimentKind::Tails => "tails",
            ExperimentKind::Stationarity => "stationarity",
            ExperimentKind::Moc => "moc",
            ExperimentKind::BrownianRelation => "brownian_relation",
            ExperimentKind::Gibbs => "gibbs",
            ExperimentKind::FProcess => "f_process",
        }
    }
}

/// Line-ensemble sub-settings (the `[gibbs]` section).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSection {
    /// Number of non-intersecting curves in the coupling study.
    pub curves: Option<usize>,
    /// Interval endpoints.
    pub t: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Nodes per curve (counting both endpoints).
    pub grid_points: Option<usize>,
    /// Full resampling sweeps for the coupling and calibration studies.
    pub sweeps: Option<usize>,
    /// Common value-grid resolution for the quantile-coupled updates.
    pub value_grid_points: Option<usize>,
    /// Levels `c` for the `{min <= c}` event-bound study.
    pub event_levels: Option<Vec<f64>>,
}

/// A configuration file as written by the user; every field except
/// `experiment` is optional and falls back to a per-experiment default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: ExperimentKind,
    pub master_seed: Option<u64>,
    /// Lattice steps per unit of time (resolution, not total step count).
    pub n_steps: Option<usize>,
    /// Time horizon, for experiments parameterized by a single horizon.
    pub horizon: Option<f64>,
    /// Scale parameters in (0, 1], for experiments that sweep a scale.
    pub epsilon_list: Option<Vec<f64>>,
    /// Independent replicas (environments, paths, or chains).
    pub replicas: Option<usize>,
    /// Recording times / spatial shifts / functional times, per experiment.
    pub times: Option<Vec<f64>>,
    /// Dyadic refinement depth for modulus-of-continuity paths.
    pub dyadic_depth: Option<usize>,
    /// Holder-defect parameter in (0, 1/2) (moc) or box half-width (laplace).
    pub delta: Option<f64>,
    /// Tail-fit thresholds, ascending and positive.
    pub thresholds: Option<Vec<f64>>,
    pub output_dir: Option<String>,
    pub worker_count: Option<usize>,
    /// p-value floor used by built-in distributional checks.
    pub p_threshold: Option<f64>,
    /// Quenched paths drawn per environment (brownian_relation).
    pub paths_per_env: Option<usize>,
    /// Path functional name (brownian_relation): constant | position |
    /// squared_position | abs_position.
    pub functional: Option<String>,
    /// Acceptance interval for fitted exponents (long_time slope, tails alpha).
    pub fit_range: Option<[f64; 2]>,
    pub gibbs: Option<GibbsSection>,
}

/// Command-line / environment overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

/// Fully resolved configuration: every field concrete and validated.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub n_steps: usize,
    pub horizon: f64,
    pub epsilon_list: Vec<f64>,
    pub replicas: usize,
    pub times: Vec<f64>,
    pub dyadic_depth: usize,
    pub delta: f64,
    pub thresholds: Vec<f64>,
    pub p_threshold: f64,
    pub paths_per_env: usize,
    pub functional: String,
    pub fit_range: [f64; 2],
    pub gibbs: ResolvedGibbs,
    #[serde(skip)]
    pub output_dir: String,
    #[serde(skip)]
    pub worker_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedGibbs {
    pub curves: usize,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub grid_points: usize,
    pub sweeps: usize,
    pub value_grid_points: usize,
    pub event_levels: Vec<f64>,
}

fn cfg_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

/// Parse a config file. `.json` files are parsed as JSON; anything else is
/// parsed as TOML first with JSON as a fallback.
pub fn parse_file(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        serde_json::from_str(&text).map_err(|e| cfg_err(format!("invalid JSON config: {e}")))
    } else {
        match toml::from_str::<RawConfig>(&text) {
            Ok(c) => Ok(c),
            Err(toml_err) => serde_json::from_str(&text).map_err(|_| {
                cfg_err(format!("invalid TOML config: {toml_err}"))
            }),
        }
    }
}

/// Effective master seed: `CDRP_LAB_SEED` env var > `--seed` flag > file.
pub fn effective_seed(file_seed: Option<u64>, flag_seed: Option<u64>) -> Result<u64> {
    if let Ok(s) = std::env::var("CDRP_LAB_SEED") {
        return s
            .trim()
            .parse::<u64>()
            .map_err(|_| cfg_err(format!("CDRP_LAB_SEED must be an unsigned integer, got {s:?}")));
    }
    Ok(flag_seed.or(file_seed).unwrap_or(0))
}

fn require_unit_interval(name: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(cfg_err(format!("{name} must not be empty")));
    }
    for &e in list {
        if !(e > 0.0 && e <= 1.0) {
            return Err(cfg_err(format!("{name} entries must lie in (0, 1], got {e}")));
        }
    }
    Ok(())
}

impl RawConfig {
    /// Validate and fill defaults, honoring overrides. Invalid settings are
    /// reported as config errors (exit code 1).
    pub fn resolve(&self, ov: &Overrides) -> Result<ResolvedConfig> {
        let kind = self.experiment;
        let master_seed = effective_seed(self.master_seed, ov.seed)?;
        let worker_count = ov.workers.or(self.worker_count).unwrap_or(1);
        if worker_count == 0 {
            return Err(cfg_err("worker_count must be at least 1"));
        }
        let output_dir = ov
            .out
            .clone()
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| "cdrp-out".to_string());

        let replicas = self.replicas.unwrap_or(match kind {
            ExperimentKind::ShortTime => 400,
            ExperimentKind::LongTime => 300,
            ExperimentKind::P2l => 800,
            ExperimentKind::Tails => 3000,
            ExperimentKind::Stationarity => 600,
            ExperimentKind::Moc => 300,
            ExperimentKind::BrownianRelation => 2000,
            ExperimentKind::Gibbs => 1000,
            ExperimentKind::FProcess => 400,
        });
        if replicas == 0 {
            return Err(cfg_err("replicas must be at least 1"));
        }

        let n_steps = self.n_steps.unwrap_or(match kind {
            ExperimentKind::ShortTime | ExperimentKind::P2l => 1280,
            ExperimentKind::BrownianRelation => 512,
            ExperimentKind::FProcess => 128,
            _ => 64,
        });
        if n_steps == 0 {
            return Err(cfg_err("n_steps must be at least 1"));
        }

        let horizon = self.horizon.unwrap_or(match kind {
            ExperimentKind::Tails | ExperimentKind::Stationarity => 16.0,
            _ => 1.0,
        });
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(cfg_err(format!("horizon must be positive, got {horizon}")));
        }

        let epsilon_list = self.epsilon_list.clone().unwrap_or(match kind {
            ExperimentKind::ShortTime | ExperimentKind::P2l => vec![0.04],
            ExperimentKind::LongTime => vec![0.125, 0.0625, 0.03125],
            ExperimentKind::Moc => vec![1.0, 0.25],
            ExperimentKind::FProcess => vec![1.0, 0.5],
            _ => vec![1.0],
        });
        require_unit_interval("epsilon_list", &epsilon_list)?;

        let times = self.times.clone().unwrap_or(match kind {
            ExperimentKind::ShortTime => vec![0.25, 0.5, 0.75],
            ExperimentKind::Stationarity => vec![0.0, 1.0],
            ExperimentKind::BrownianRelation => vec![0.5 * horizon],
            ExperimentKind::FProcess => vec![0.5, 1.0],
            _ => vec![0.5],
        });
        match kind {
            ExperimentKind::ShortTime => {
                if times.is_empty()
                    || times.iter().any(|&t| !(t > 0.0 && t < 1.0))
                    || times.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(cfg_err(
                        "times must be strictly increasing scaled times in (0, 1)",
                    ));
                }
            }
            ExperimentKind::Stationarity => {
                if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
                    return Err(cfg_err("times (spatial shifts) must be finite"));
                }
                if replicas < 500 {
                    return Err(cfg_err(
                        "stationarity needs at least 500 replicas per shift",
                    ));
                }
            }
            ExperimentKind::FProcess => {
                if times.is_empty()
                    || times[0] <= 0.0
                    || times.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(cfg_err(
                        "times must be strictly increasing positive scaled times",
                    ));
                }
            }
            ExperimentKind::BrownianRelation => {
                if times.is_empty() || !(times[0] >= 0.0 && times[0] <= horizon) {
                    return Err(cfg_err("times[0] must be a real time within [0, horizon]"));
                }
            }
            _ => {}
        }

        let dyadic_depth = self.dyadic_depth.unwrap_or(6);
        if kind == ExperimentKind::Moc && !(4..=12).contains(&dyadic_depth) {
            return Err(cfg_err("dyadic_depth must lie in [4, 12]"));
        }

        let delta = self.delta.unwrap_or(0.25);
        if kind == ExperimentKind::Moc && !(delta > 0.0 && delta < 0.5) {
            return Err(cfg_err(format!("delta must lie in (0, 1/2), got {delta}")));
        }

        let thresholds = self.thresholds.clone().unwrap_or(match kind {
            ExperimentKind::Tails => vec![1.0, 1.4, 1.8, 2.2],
            _ => vec![1.0],
        });
        if kind == ExperimentKind::Tails {
            if thresholds.len() < 3 {
                return Err(cfg_err("tails needs at least 3 thresholds"));
            }
            if thresholds.iter().any(|&t| !(t > 0.0) || !t.is_finite())
                || thresholds.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(cfg_err("thresholds must be positive and strictly increasing"));
            }
            if replicas < 1000 {
                return Err(cfg_err("tails needs at least 1000 replicas"));
            }
        }

        let p_threshold = self.p_threshold.unwrap_or(0.005);
        if !(p_threshold > 0.0 && p_threshold < 1.0) {
            return Err(cfg_err("p_threshold must lie in (0, 1)"));
        }

        let paths_per_env = self.paths_per_env.unwrap_or(8);
        if paths_per_env == 0 {
            return Err(cfg_err("paths_per_env must be at least 1"));
        }

        let functional = self
            .functional
            .clone()
            .unwrap_or_else(|| "squared_position".to_string());
        if !matches!(
            functional.as_str(),
            "constant" | "position" | "squared_position" | "abs_position"
        ) {
            return Err(cfg_err(format!(
                "unknown functional {functional:?}; use constant | position | squared_position | abs_position"
            )));
        }

        let fit_range = self.fit_range.unwrap_or(match kind {
            ExperimentKind::LongTime => [0.5, 0.85],
            _ => [0.8, 3.5],
        });
        if !(fit_range[0] < fit_range[1]) {
            return Err(cfg_err("fit_range must be an increasing pair"));
        }

        let g = self.gibbs.clone().unwrap_or(GibbsSection {
            curves: None,
            t: None,
            a: None,
            b: None,
            grid_points: None,
            sweeps: None,
            value_grid_points: None,
            event_levels: None,
        });
        let gibbs = ResolvedGibbs {
            curves: g.curves.unwrap_or(2),
            t: g.t.unwrap_or(1.0),
            a: g.a.unwrap_or(-1.0),
            b: g.b.unwrap_or(1.0),
            grid_points: g.grid_points.unwrap_or(17),
            sweeps: g.sweeps.unwrap_or(2000),
            value_grid_points: g.value_grid_points.unwrap_or(513),
            // Negative levels keep the events non-trivial for curves pinned
            // at zero: the minimum reaches them with probability in (0, 1).
            event_levels: g.event_levels.unwrap_or_else(|| vec![-0.8, -0.5, -0.2]),
        };
        if kind == ExperimentKind::Gibbs {
            if gibbs.curves == 0
                || gibbs.grid_points < 3
                || gibbs.grid_points % 2 == 0
                || gibbs.sweeps == 0
            {
                return Err(cfg_err(
                    "gibbs needs curves >= 1, odd grid_points >= 3, sweeps >= 1",
                ));
            }
            if !(gibbs.t > 0.0) || !(gibbs.a < gibbs.b) {
                return Err(cfg_err("gibbs needs t > 0 and a < b"));
            }
            if gibbs.value_grid_points < 33 {
                return Err(cfg_err("gibbs value_grid_points must be at least 33"));
            }
            if gibbs.event_levels.is_empty()
                || gibbs.event_levels.iter().any(|c| !c.is_finite())
            {
                return Err(cfg_err("gibbs event_levels must be finite and non-empty"));
            }
            if replicas < 100 {
                return Err(cfg_err("gibbs needs at least 100 replicas"));
            }
        }

        Ok(ResolvedConfig {
            experiment: kind,
            master_seed,
            n_steps,
            horizon,
            epsilon_list,
            replicas,
            times,
            dyadic_depth,
            delta,
            thresholds,
            p_threshold,
            paths_per_env,
            functional,
            fit_range,
            gibbs,
            output_dir,
            worker_count,
        })
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl ResolvedConfig {
    /// Stable hash of every semantic field (seed and experiment parameters;
    /// not output location or worker count, which cannot change results).
    pub fn hash(&self) -> String {
        let canonical =
            serde_json::to_string(self).expect("resolved config serializes infallibly");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("cdrp-lab-cfg-{}-{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn toml_and_json_parse_to_the_same_config() {
        let toml_path = write_temp("a.toml", "experiment = \"short_time\"\nreplicas = 7\n");
        let json_path = write_temp("a.json", "{\"experiment\": \"short_time\", \"replicas\": 7}");
        let a = parse_file(&toml_path).unwrap();
        let b = parse_file(&json_path).unwrap();
        let ra = a.resolve(&Overrides::default()).unwrap();
        let rb = b.resolve(&Overrides::default()).unwrap();
        assert_eq!(ra.hash(), rb.hash());
        std::fs::remove_file(toml_path).ok();
        std::fs::remove_file(json_path).ok();
    }

    #[test]
    fn unknown_fields_and_bad_values_are_config_errors() {
        let p = write_temp("bad.toml", "experiment = \"short_time\"\nbogus = 1\n");
        assert!(parse_file(&p).is_err());
        std::fs::remove_file(p).ok();

        let base = RawConfig {
            experiment: ExperimentKind::ShortTime,
            master_seed: None,
            n_steps: None,
            horizon: None,
            epsilon_list: None,
            replicas: Some(0),
            times: None,
            dyadic_depth: None,
            delta: None,
            thresholds: None,
            output_dir: None,
            worker_count: None,
            p_threshold: None,
            paths_per_env: None,
            functional: None,
            fit_range: None,
            gibbs: None,
        };
        assert!(base.resolve(&Overrides::default()).is_err());

        let mut eps = base.clone();
        eps.replicas = Some(10);
        eps.epsilon_list = Some(vec![1.5]);
        assert!(eps.resolve(&Overrides::default()).is_err());

        let mut moc = base.clone();
        moc.experiment = ExperimentKind::Moc;
        moc.replicas = Some(10);
        moc.delta = Some(0.75);
        assert!(moc.resolve(&Overrides::default()).is_err());

        let mut tails = base.clone();
        tails.experiment = ExperimentKind::Tails;
        tails.replicas = Some(10);
        assert!(tails.resolve(&Overrides::default()).is_err()); // under 1000
    }

    #[test]
    fn hash_ignores_output_location_and_workers() {
        let raw = RawConfig {
            experiment: ExperimentKind::ShortTime,
            master_seed: Some(5),
            n_steps: None,
            horizon: None,
            epsilon_list: None,
            replicas: Some(10),
            times: None,
            dyadic_depth: None,
            delta: None,
            thresholds: None,
            output_dir: Some("x".into()),
            worker_count: Some(2),
            p_threshold: None,
            paths_per_env: None,
            functional: None,
            fit_range: None,
            gibbs: None,
        };
        let a = raw.resolve(&Overrides::default()).unwrap();
        let b = raw
            .resolve(&Overrides {
                seed: None,
                workers: Some(7),
                out: Some("elsewhere".into()),
            })
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = raw
            .resolve(&Overrides {
                seed: Some(6),
                workers: None,
                out: None,
            })
            .unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn seed_precedence_is_env_then_flag_then_file() {
        // The env var branch is exercised in the CLI integration tests to
        // avoid mutating process-global state here.
        assert_eq!(effective_seed(Some(3), None).unwrap(), 3);
        assert_eq!(effective_seed(Some(3), Some(9)).unwrap(), 9);
        assert_eq!(effective_seed(None, None).unwrap(), 0);
    }
}
