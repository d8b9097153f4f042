//! Statistical verification battery.
//!
//! Pure statistics over sample arrays (exponent fits, tail fits,
//! modulus-of-continuity and local-fluctuation statistics, one- and
//! two-sample Kolmogorov–Smirnov tests) plus the one Monte Carlo identity
//! check that needs its own replica loop, the Brownian-relation check
//! `E[Z(0,0;0,T) sqrt(2 pi T) L(X)] = E[L(B)]` against the Brownian bridge.

use rand::Rng;

use crate::environment::{generate_environment, replica_rng, EnvironmentParams, StreamDomain};
use crate::error::{CoreError, Result};
use crate::partition::{short_time_parabola, KpzSheetSample, SheetRegime};
use crate::sampler::{QuenchedSampler, RescaledPath};

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Normal CDF with the given mean and standard deviation.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    standard_normal_cdf((x - mean) / sd)
}

/// Survival function of the Kolmogorov distribution, `Q(lambda) =
/// P(sup |B°| > lambda)`. Uses the theta-function series on each side of the
/// standard crossover so both tails are accurate.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 1e-10 {
        return 1.0;
    }
    if lambda < 1.18 {
        // CDF-side series: K(x) = sqrt(2 pi)/x * sum_{k odd} exp(-k^2 pi^2 / (8 x^2)).
        let mut cdf = 0.0;
        let a = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut k = 1.0;
        loop {
            let term = (-k * k * a).exp();
            cdf += term;
            if term < 1e-16 * cdf.max(1e-300) || k > 199.0 {
                break;
            }
            k += 2.0;
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let term = sign * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
            q += term;
            if term.abs() < 1e-16 {
                break;
            }
            sign = -sign;
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic p-value; NaN when the sample is too small for one
    /// (`method` says so).
    pub p_value: f64,
    /// Effective sample size (harmonic combination for two-sample tests).
    pub n_effective: f64,
    pub method: String,
}

fn ks_p_value(d: f64, n_eff: f64) -> (f64, String) {
    if n_eff < 8.0 {
        return (
            f64::NAN,
            format!("statistic-only (n_eff = {n_eff:.1} below 8)"),
        );
    }
    // Finite-sample adjustment of the asymptotic Kolmogorov law; accurate to
    // about a percent down to n ~ 8 and converging to sqrt(n) * D above.
    let root = n_eff.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    let label = if n_eff >= 35.0 {
        "adjusted-asymptotic"
    } else {
        "adjusted-asymptotic (small sample)"
    };
    (kolmogorov_q(lambda), format!("{label}, n_eff = {n_eff:.1}"))
}

/// One-sample Kolmogorov–Smirnov test against a continuous reference CDF.
///
/// The statistic is computed for any non-empty sample; the p-value requires
/// at least 8 points and is NaN below that (recorded in `method`).
pub fn ks_test(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(CoreError::domain("KS test needs at least one sample".to_string()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(CoreError::data("KS samples must not contain NaN".to_string()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference_cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(CoreError::data(format!(
                "reference CDF returned {f} outside [0, 1] at {x}"
            )));
        }
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let (p_value, method) = ks_p_value(d, n);
    Ok(KsResult {
        statistic: d,
        p_value,
        n_effective: n,
        method,
    })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::domain("KS test needs non-empty samples".to_string()));
    }
    if a.iter().chain(b.iter()).any(|x| x.is_nan()) {
        return Err(CoreError::data("KS samples must not contain NaN".to_string()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < n || j < m {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    let (p_value, method) = ks_p_value(d, n_eff);
    Ok(KsResult {
        statistic: d,
        p_value,
        n_effective: n_eff,
        method,
    })
}

/// Ordinary least squares on a double-log plot.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub log_abscissae: Vec<f64>,
    pub log_ordinates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(CoreError::domain(
            "abscissae are all equal; slope is undefined".to_string(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

/// Least-squares exponent estimate on `(log abscissa, log ordinate)`.
/// Needs at least three strictly positive points.
pub fn fit_loglog(abscissae: &[f64], ordinates: &[f64]) -> Result<ExponentFit> {
    if abscissae.len() != ordinates.len() {
        return Err(CoreError::domain(
            "abscissae and ordinates must have equal length".to_string(),
        ));
    }
    if abscissae.len() < 3 {
        return Err(CoreError::domain(
            "log-log fit needs at least three points".to_string(),
        ));
    }
    if abscissae
        .iter()
        .chain(ordinates.iter())
        .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return Err(CoreError::domain(
            "log-log fit needs strictly positive finite inputs".to_string(),
        ));
    }
    let lx: Vec<f64> = abscissae.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ordinates.iter().map(|v| v.ln()).collect();
    let (slope, intercept, stderr) = ols(&lx, &ly)?;
    Ok(ExponentFit {
        log_abscissae: lx,
        log_ordinates: ly,
        slope,
        intercept,
        stderr,
    })
}

/// Tail-shape fit: `P(X > s) ≈ exp(-c s^alpha)` estimated by least squares
/// on `(log s, log(-log survival))`.
#[derive(Debug, Clone)]
pub struct TailFit {
    /// Thresholds retained by the exceedance rule, ascending.
    pub thresholds: Vec<f64>,
    /// Empirical log-survival at the retained thresholds.
    pub log_survival: Vec<f64>,
    /// Fitted tail exponent.
    pub alpha: f64,
    /// Fitted rate constant.
    pub c: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
}

/// Minimum exceedance count for a threshold to enter the tail regression.
pub const TAIL_MIN_EXCEEDANCES: usize = 20;

/// Fit the tail exponent from empirical survival at the given thresholds.
///
/// Thresholds keep their point only when at least [`TAIL_MIN_EXCEEDANCES`]
/// samples exceed them and at least one does not (so the double log is
/// finite); fewer than three surviving thresholds is an estimation error.
pub fn fit_tail(samples: &[f64], thresholds: &[f64]) -> Result<TailFit> {
    if samples.len() < 1000 {
        return Err(CoreError::estimation(format!(
            "tail fit needs at least 1000 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(CoreError::data("tail samples must not contain NaN".to_string()));
    }
    if thresholds.is_empty() || thresholds.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(CoreError::domain(
            "thresholds must be positive finite reals".to_string(),
        ));
    }
    let mut ts = thresholds.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let n = samples.len();
    let mut used = Vec::new();
    let mut log_surv = Vec::new();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &s in &ts {
        let count = samples.iter().filter(|&&x| x > s).count();
        if count >= TAIL_MIN_EXCEEDANCES && count < n {
            let survival = count as f64 / n as f64;
            used.push(s);
            log_surv.push(survival.ln());
            lx.push(s.ln());
            ly.push((-survival.ln()).ln());
        }
    }
    if used.len() < 3 {
        return Err(CoreError::estimation(format!(
            "only {} thresholds satisfy the {TAIL_MIN_EXCEEDANCES}-exceedance rule; need 3",
            used.len()
        )));
    }
    let (alpha, intercept, stderr) = ols(&lx, &ly)?;
    Ok(TailFit {
        thresholds: used,
        log_survival: log_surv,
        alpha,
        c: intercept.exp(),
        stderr,
    })
}

/// Modulus-of-continuity statistic over a dyadic grid.
#[derive(Debug, Clone)]
pub struct MocStatistic {
    pub delta: f64,
    /// Dyadic depth of the grid the path was sampled on.
    pub depth: u32,
    /// `sup |L_s - L_t| / (|t-s|^{1/2-delta} log(2/|t-s|))` over grid pairs.
    pub value: f64,
}

/// Compute the modulus statistic for a path sampled on a dyadic grid of
/// depth at least 4 on `[0, 1]` (nodes `i / 2^d` within 1e-9).
pub fn moc_statistic(path: &RescaledPath, delta: f64) -> Result<MocStatistic> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CoreError::domain(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    let times = &path.times;
    let values = &path.values;
    if times.len() != values.len() {
        return Err(CoreError::data("times and values must have equal length".to_string()));
    }
    let m = times.len().saturating_sub(1);
    if m < 16 || !m.is_power_of_two() {
        return Err(CoreError::domain(format!(
            "path must be sampled on a dyadic grid of depth >= 4 on [0, 1]; got {} nodes",
            times.len()
        )));
    }
    for (i, &t) in times.iter().enumerate() {
        let ideal = i as f64 / m as f64;
        if (t - ideal).abs() > 1e-9 {
            return Err(CoreError::domain(format!(
                "time grid is not dyadic on [0, 1]: node {i} is {t}, expected {ideal}"
            )));
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::data("path values must be finite".to_string()));
    }
    let exponent = 0.5 - delta;
    let mut sup: f64 = 0.0;
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            let dt = times[j] - times[i];
            let denom = dt.powf(exponent) * (2.0 / dt).ln();
            sup = sup.max((values[j] - values[i]).abs() / denom);
        }
    }
    Ok(MocStatistic {
        delta,
        depth: m.trailing_zeros(),
        value: sup,
    })
}

/// Local fluctuation of a one-source sheet section, parabola-corrected and
/// normalized by `sqrt(gamma)`:
/// `sup_{z in [x, x+gamma]} |sheet(z) + parabola(z) - sheet(x) - parabola(x)| / sqrt(gamma)`
/// with parabola `z^2/2` (long regime) or `m_span(z)` (short regime).
///
/// The short regime requires `gamma < sqrt(span)`; the long regime requires
/// `gamma <= 1`.
pub fn local_fluctuation_stat(sheet: &KpzSheetSample, x: f64, gamma: f64) -> Result<f64> {
    let span = sheet.t - sheet.s;
    match sheet.regime {
        SheetRegime::Long => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(CoreError::domain(format!(
                    "long-regime gamma must lie in (0, 1], got {gamma}"
                )));
            }
        }
        SheetRegime::Short => {
            if !(gamma > 0.0 && gamma < span.sqrt()) {
                return Err(CoreError::domain(format!(
                    "short-regime gamma must lie in (0, sqrt(span)) = (0, {}), got {gamma}",
                    span.sqrt()
                )));
            }
        }
    }
    if sheet.values.len() != 1 {
        return Err(CoreError::domain(
            "local fluctuation statistic needs a single-source sheet section".to_string(),
        ));
    }
    let row = &sheet.values[0];
    let source = sheet.x_real[0];
    let parabola = |z: f64| -> f64 {
        let r = z - source;
        match sheet.regime {
            SheetRegime::Long => r * r / 2.0,
            SheetRegime::Short => short_time_parabola(span, r),
        }
    };
    // Locate the base node at x.
    let mut base = None;
    let mut best = f64::INFINITY;
    for (idx, &y) in sheet.y_real.iter().enumerate() {
        let d = (y - x).abs();
        if d < best {
            best = d;
            base = Some(idx);
        }
    }
    let base = base.ok_or_else(|| CoreError::domain("sheet has no nodes".to_string()))?;
    let spacing = sheet
        .y_real
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    let tol = if spacing.is_finite() { 0.51 * spacing } else { 1e-9 } + 1e-12;
    if best > tol {
        return Err(CoreError::domain(format!(
            "x = {x} is not on the sheet grid (nearest node is {} away)",
            best
        )));
    }
    let y0 = sheet.y_real[base];
    if !row[base].is_finite() {
        return Err(CoreError::data("sheet value at the base point is not finite".to_string()));
    }
    let base_val = row[base] + parabola(y0);
    let mut sup: f64 = 0.0;
    for (idx, &y) in sheet.y_real.iter().enumerate() {
        if y < y0 - 1e-12 || y > x + gamma + 1e-12 {
            continue;
        }
        let v = row[idx];
        if !v.is_finite() {
            return Err(CoreError::data(format!(
                "sheet value at node {idx} (y = {y}) is not finite"
            )));
        }
        sup = sup.max((v + parabola(y) - base_val).abs());
    }
    Ok(sup / gamma.sqrt())
}

/// One pairwise comparison from [`stationarity_test`].
#[derive(Debug, Clone)]
pub struct ShiftPairKs {
    pub i: usize,
    pub j: usize,
    pub shift_i: f64,
    pub shift_j: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Result of the parabola-corrected stationarity test.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub pairs: Vec<ShiftPairKs>,
    pub min_p: f64,
}

/// Minimum replica count per shift for the stationarity test.
pub const STATIONARITY_MIN_REPLICAS: usize = 500;

/// Two-sample KS on parabola-corrected one-point values for every pair of
/// spatial shifts. `samples[i]` holds replicas of the uncorrected sheet value
/// at `shifts[i]` (realized sheet coordinates); the correction `x^2/2` (long)
/// or `m_span(x)` (short) is applied here.
pub fn stationarity_test(
    regime: SheetRegime,
    span: f64,
    shifts: &[f64],
    samples: &[Vec<f64>],
) -> Result<StationarityReport> {
    if shifts.len() != samples.len() || shifts.len() < 2 {
        return Err(CoreError::domain(
            "need at least two shifts with matching sample arrays".to_string(),
        ));
    }
    if !(span > 0.0) {
        return Err(CoreError::domain(format!("span must be positive, got {span}")));
    }
    for (i, arr) in samples.iter().enumerate() {
        if arr.len() < STATIONARITY_MIN_REPLICAS {
            return Err(CoreError::estimation(format!(
                "shift {} has {} replicas; the test needs {STATIONARITY_MIN_REPLICAS}",
                shifts[i],
                arr.len()
            )));
        }
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::data(format!(
                "samples at shift {} contain non-finite values",
                shifts[i]
            )));
        }
    }
    let correct = |x: f64, v: f64| -> f64 {
        match regime {
            SheetRegime::Long => v + x * x / 2.0,
            SheetRegime::Short => v + short_time_parabola(span, x),
        }
    };
    let corrected: Vec<Vec<f64>> = shifts
        .iter()
        .zip(samples)
        .map(|(&x, arr)| arr.iter().map(|&v| correct(x, v)).collect())
        .collect();
    let mut pairs = Vec::new();
    let mut min_p = f64::INFINITY;
    for i in 0..shifts.len() {
        for j in (i + 1)..shifts.len() {
            let ks = ks_two_sample(&corrected[i], &corrected[j])?;
            min_p = min_p.min(ks.p_value);
            pairs.push(ShiftPairKs {
                i,
                j,
                shift_i: shifts[i],
                shift_j: shifts[j],
                statistic: ks.statistic,
                p_value: ks.p_value,
            });
        }
    }
    Ok(StationarityReport { pairs, min_p })
}

/// Path functionals with closed-form Brownian-bridge expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathFunctional {
    Constant,
    /// `X(time)` — bridge expectation 0.
    Position { time: f64 },
    /// `X(time)^2` — bridge expectation `time (T - time) / T`.
    SquaredPosition { time: f64 },
    /// `|X(time)|` — bridge expectation `sqrt(2 v / pi)` with the bridge
    /// variance `v`.
    AbsPosition { time: f64 },
}

impl PathFunctional {
    /// Times at which the path must be recorded to evaluate the functional.
    pub fn marginal_times(&self) -> Vec<f64> {
        match *self {
            PathFunctional::Constant => Vec::new(),
            PathFunctional::Position { time }
            | PathFunctional::SquaredPosition { time }
            | PathFunctional::AbsPosition { time } => vec![time],
        }
    }

    /// Evaluate on a recorded path (nearest recorded node per marginal time).
    pub fn evaluate(&self, times: &[f64], positions: &[f64]) -> f64 {
        let at = |t: f64| -> f64 {
            let mut best = 0usize;
            let mut dist = f64::INFINITY;
            for (i, &u) in times.iter().enumerate() {
                let d = (u - t).abs();
                if d < dist {
                    dist = d;
                    best = i;
                }
            }
            positions[best]
        };
        match *self {
            PathFunctional::Constant => 1.0,
            PathFunctional::Position { time } => at(time),
            PathFunctional::SquaredPosition { time } => {
                let x = at(time);
                x * x
            }
            PathFunctional::AbsPosition { time } => at(time).abs(),
        }
    }

    /// Exact expectation under the standard Brownian bridge from 0 to 0 on
    /// `[0, horizon]`.
    pub fn bridge_expectation(&self, horizon: f64) -> f64 {
        let variance = |u: f64| u * (horizon - u) / horizon;
        match *self {
            PathFunctional::Constant => 1.0,
            PathFunctional::Position { .. } => 0.0,
            PathFunctional::SquaredPosition { time } => variance(time),
            PathFunctional::AbsPosition { time } => {
                (2.0 * variance(time) / std::f64::consts::PI).sqrt()
            }
        }
    }
}

/// Configuration of the Brownian-relation Monte Carlo check.
#[derive(Debug, Clone)]
pub struct BrownianRelationConfig {
    pub seed: u64,
    pub n_steps: usize,
    pub horizon: f64,
    pub half_width: usize,
    pub n_envs: usize,
    pub paths_per_env: usize,
    pub functional: PathFunctional,
}

/// Monte Carlo estimates of both sides of the Brownian relation.
#[derive(Debug, Clone)]
pub struct BrownianRelationReport {
    /// `mean over environments of exp(logZ + log sqrt(2 pi T)) * mean_q L`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Brownian-bridge expectation of the functional.
    pub rhs: f64,
    pub rhs_se: f64,
    pub rhs_method: String,
    pub n_envs: usize,
    /// Per-environment estimates `exp(logZ + log sqrt(2 pi T)) * mean_q L`,
    /// ordered by environment replica index.
    pub per_env: Vec<f64>,
}

/// Monte Carlo check of the identity
/// `E[Z(0,0;0,T) sqrt(2 pi T) L(X)] = E[L(B)]`:
/// the disorder average of the normalized point-to-point partition function
/// times the quenched mean of `L` equals the Brownian-bridge expectation.
pub fn brownian_relation_check(cfg: &BrownianRelationConfig) -> Result<BrownianRelationReport> {
    if cfg.n_envs < 2 {
        return Err(CoreError::config("need at least two environment replicas".to_string()));
    }
    if cfg.paths_per_env == 0 {
        return Err(CoreError::config("paths_per_env must be positive".to_string()));
    }
    if cfg.n_steps % 2 != 0 {
        return Err(CoreError::config(
            "n_steps must be even so the origin-pinned endpoint is reachable".to_string(),
        ));
    }
    let marginal_times = cfg.functional.marginal_times();
    for &t in &marginal_times {
        if !(0.0..=cfg.horizon).contains(&t) {
            return Err(CoreError::domain(format!(
                "functional time {t} lies outside [0, {}]",
                cfg.horizon
            )));
        }
    }
    let log_norm = 0.5 * (2.0 * std::f64::consts::PI * cfg.horizon).ln();
    let mut ys = Vec::with_capacity(cfg.n_envs);
    for rep in 0..cfg.n_envs {
        let env_seed = replica_rng(cfg.seed, StreamDomain::Ensemble, rep as u64).random::<u64>();
        let env = generate_environment(&EnvironmentParams {
            seed: env_seed,
            n_steps: cfg.n_steps,
            horizon: cfg.horizon,
            half_width: cfg.half_width,
            sigma_override: None,
        })?;
        let sampler = QuenchedSampler::new_point_to_point(&env, 0)?;
        let weight = (sampler.log_partition() + log_norm).exp();
        let mean_f = if marginal_times.is_empty() {
            1.0
        } else {
            let mut rng = replica_rng(env_seed, StreamDomain::PathSampling, 0);
            let mut acc = 0.0;
            for _ in 0..cfg.paths_per_env {
                let path = sampler.sample(&marginal_times, &mut rng)?;
                let v = cfg.functional.evaluate(&path.times, &path.positions);
                if v.is_nan() {
                    return Err(CoreError::data(
                        "path functional returned NaN".to_string(),
                    ));
                }
                acc += v;
            }
            acc / cfg.paths_per_env as f64
        };
        ys.push(weight * mean_f);
    }
    let n = ys.len() as f64;
    let lhs = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - lhs) * (y - lhs)).sum::<f64>() / (n - 1.0);
    let lhs_se = (var / n).sqrt();
    Ok(BrownianRelationReport {
        lhs,
        lhs_se,
        rhs: cfg.functional.bridge_expectation(cfg.horizon),
        rhs_se: 0.0,
        rhs_method: "closed-form".to_string(),
        n_envs: cfg.n_envs,
        per_env: ys,
    })
}
