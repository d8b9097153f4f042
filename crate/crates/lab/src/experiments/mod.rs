//! The nine experiment families, each composing the core library and
//! returning aggregates, built-in checks, and per-replica CSV bodies.

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::error::Result;
use crate::runner::ExperimentOutput;
use cdrp_core::environment::{
    generate_environment, replica_rng, EnvironmentParams, LatticeEnvironment, StreamDomain,
};
use rand::Rng;

mod brownian;
mod f_process;
mod gibbs;
mod long_time;
mod moc;
mod p2l;
mod short_time;
mod stationarity;
mod tails;

pub fn run(cfg: &ResolvedConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::ShortTime => short_time::run(cfg),
        ExperimentKind::LongTime => long_time::run(cfg),
        ExperimentKind::P2l => p2l::run(cfg),
        ExperimentKind::Tails => tails::run(cfg),
        ExperimentKind::Stationarity => stationarity::run(cfg),
        ExperimentKind::Moc => moc::run(cfg),
        ExperimentKind::BrownianRelation => brownian::run(cfg),
        ExperimentKind::Gibbs => gibbs::run(cfg),
        ExperimentKind::FProcess => f_process::run(cfg),
    }
}

/// Derive an independent 64-bit seed for one replica from the master seed.
pub(crate) fn replica_seed(master: u64, index: u64) -> u64 {
    replica_rng(master, StreamDomain::Ensemble, index).random::<u64>()
}

/// Round up to the nearest even integer, with a floor.
pub(crate) fn even_at_least(x: f64, floor: usize) -> usize {
    let n = x.round().max(floor as f64) as usize;
    n + (n % 2)
}

/// Grid half-width in sites covering `4 sqrt(horizon)` of diffusive spread
/// plus `extra` in real units, capped at the light cone.
pub(crate) fn half_width_for(n_steps: usize, horizon: f64, extra: f64) -> usize {
    let dx = (horizon / n_steps as f64).sqrt();
    let sites = ((4.0 * horizon.sqrt() + extra) / dx).ceil() as usize + 8;
    sites.min(n_steps).max(8.min(n_steps))
}

pub(crate) fn build_env(
    seed: u64,
    n_steps: usize,
    horizon: f64,
    half_width: usize,
) -> Result<LatticeEnvironment> {
    Ok(generate_environment(&EnvironmentParams {
        seed,
        n_steps,
        horizon,
        half_width,
        sigma_override: None,
    })?)
}

/// Sample standard deviation.
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub(crate) fn sample_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Empirical quantile by nearest-rank interpolation on the sorted sample.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
