//! Exact quenched path sampling and derived observables.
//!
//! Conditional on one disorder environment, the polymer path law is a Markov
//! chain in the backward partition field (a Doob transform): from node
//! `(k, j)` the walk moves to `(k+1, j')` with probability proportional to
//! `exp(w(k+1, j') + W(k+1, j'))`, where `W` is the backward log field to the
//! pinned endpoint (point-to-point) or to the flat terminal condition
//! (point-to-line). Sampling the chain is exact: no approximation beyond the
//! lattice itself, and the accumulated log transition probabilities give the
//! trajectory's quenched probability mass.
//!
//! Marginals at one intermediate time combine a forward and a backward row,
//! `mass(z) ∝ exp(fwd(z) + bwd(z))`, normalized. For comparisons against
//! continuum laws, sampled sites can be smoothed uniformly over their
//! sublattice cell of width `2 dx`; the piecewise-linear CDF this induces
//! removes the O(dx) staircase that a lattice atom distribution would
//! otherwise contribute to any distance against a continuous reference.

use rand::Rng;

use crate::environment::{map_to_lattice, LatticeEnvironment};
use crate::error::{CoreError, Result};
use crate::numeric::logsumexp2;
use crate::partition::{
    build_field, log_profile, Direction, FieldAnchor, PartitionField,
};

/// Terminal condition of the polymer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Pinned at a lattice site at the horizon.
    PointToPoint,
    /// Free at the horizon (terminal point integrated out).
    PointToLine,
}

/// One sampled polymer trajectory, recorded at a set of lattice steps.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub kind: PathKind,
    /// Continuum endpoint for point-to-point paths.
    pub endpoint: Option<f64>,
    /// Realized times of the recorded nodes (includes 0 and the horizon).
    pub times: Vec<f64>,
    /// Continuum positions at `times` (exact site coordinates).
    pub positions: Vec<f64>,
    /// Lattice sites at `times`.
    pub sites: Vec<i64>,
    /// Lattice steps at `times`.
    pub steps: Vec<usize>,
    /// Log of the quenched probability mass of the full lattice trajectory.
    pub log_quenched_density: f64,
    /// Times as requested by the caller, in ascending order.
    pub requested_times: Vec<f64>,
    /// `|realized - requested|` per requested time.
    pub snap_distances: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Reusable quenched sampler for one environment and terminal condition.
///
/// Holds the full backward field, so repeated draws cost one lattice sweep
/// each and marginals cost one forward stream.
pub struct QuenchedSampler<'a> {
    env: &'a LatticeEnvironment,
    kind: PathKind,
    endpoint_site: Option<i64>,
    backward: PartitionField,
}

fn truncation_warning(env: &LatticeEnvironment) -> Option<String> {
    let cal = env.calibration();
    let needed = 4.0 * cal.horizon.sqrt() / cal.dx;
    if (cal.half_width as f64) < needed {
        Some(format!(
            "grid half-width {} is below 4*sqrt(horizon)/dx = {:.1}: free-endpoint mass is truncated",
            cal.half_width, needed
        ))
    } else {
        None
    }
}

impl<'a> QuenchedSampler<'a> {
    /// Point-to-point sampler pinned at `(n_steps, endpoint_site)`.
    pub fn new_point_to_point(env: &'a LatticeEnvironment, endpoint_site: i64) -> Result<Self> {
        let cal = env.calibration();
        let n = cal.n_steps;
        if endpoint_site.unsigned_abs() as usize > cal.half_width.min(n) {
            return Err(CoreError::domain(format!(
                "endpoint site {endpoint_site} unreachable within {n} steps on half-width {}",
                cal.half_width
            )));
        }
        if endpoint_site.rem_euclid(2) != (n % 2) as i64 {
            return Err(CoreError::domain(format!(
                "endpoint site {endpoint_site} violates parity at step {n}"
            )));
        }
        let backward = build_field(env, FieldAnchor::point(n, endpoint_site), Direction::Backward)?;
        Ok(QuenchedSampler {
            env,
            kind: PathKind::PointToPoint,
            endpoint_site: Some(endpoint_site),
            backward,
        })
    }

    /// Point-to-line sampler (flat backward condition at the horizon).
    pub fn new_point_to_line(env: &'a LatticeEnvironment) -> Result<Self> {
        let n = env.calibration().n_steps;
        let backward = build_field(env, FieldAnchor::line(n), Direction::Backward)?;
        Ok(QuenchedSampler {
            env,
            kind: PathKind::PointToLine,
            endpoint_site: None,
            backward,
        })
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn backward_field(&self) -> &PartitionField {
        &self.backward
    }

    /// Log partition function from the origin to the sampler's terminal
    /// condition (density-normalized for point-to-point).
    pub fn log_partition(&self) -> f64 {
        self.backward.log_z(0, 0)
    }

    /// Draw one path, recording it at the lattice steps nearest to
    /// `requested_times` (the origin and the horizon are always recorded).
    pub fn sample(&self, requested_times: &[f64], rng: &mut impl Rng) -> Result<PathSample> {
        let cal = self.env.calibration();
        let n = cal.n_steps;
        let w = cal.half_width as i64;

        let mut requested: Vec<f64> = requested_times.to_vec();
        requested.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut record_steps = Vec::with_capacity(requested.len() + 2);
        let mut snap = Vec::with_capacity(requested.len());
        for &t in &requested {
            let (k, _) = map_to_lattice(cal, 0.0, t)?;
            snap.push((k as f64 * cal.dt - t).abs());
            record_steps.push(k);
        }
        record_steps.push(0);
        record_steps.push(n);
        record_steps.sort_unstable();
        record_steps.dedup();

        let mut sites = Vec::with_capacity(record_steps.len());
        let mut next_record = 0usize;
        let mut j = 0i64;
        let mut log_density = 0.0;
        if record_steps[next_record] == 0 {
            sites.push(j);
            next_record += 1;
        }
        for k in 0..n {
            let up_site = j + 1;
            let dn_site = j - 1;
            let lift = |site: i64| -> f64 {
                if site.abs() > w {
                    f64::NEG_INFINITY
                } else {
                    let bz = self.backward.log_z(k + 1, site);
                    if bz == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        self.env.weight(k + 1, site) + bz
                    }
                }
            };
            let up = lift(up_site);
            let dn = lift(dn_site);
            let norm = logsumexp2(up, dn);
            if norm == f64::NEG_INFINITY {
                return Err(CoreError::data(format!(
                    "stranded walk at step {k}, site {j}: no continuation carries mass"
                )));
            }
            let p_up = (up - norm).exp();
            let go_up = rng.random::<f64>() < p_up;
            if go_up {
                j = up_site;
                log_density += up - norm;
            } else {
                j = dn_site;
                log_density += dn - norm;
            }
            if next_record < record_steps.len() && record_steps[next_record] == k + 1 {
                sites.push(j);
                next_record += 1;
            }
        }

        let mut warnings = Vec::new();
        if self.kind == PathKind::PointToLine {
            if let Some(wmsg) = truncation_warning(self.env) {
                warnings.push(wmsg);
            }
        }
        Ok(PathSample {
            kind: self.kind,
            endpoint: self.endpoint_site.map(|s| s as f64 * cal.dx),
            times: record_steps.iter().map(|&k| k as f64 * cal.dt).collect(),
            positions: sites.iter().map(|&s| s as f64 * cal.dx).collect(),
            sites,
            steps: record_steps,
            log_quenched_density: log_density,
            requested_times: requested,
            snap_distances: snap,
            warnings,
        })
    }

    /// Quenched single-time marginal using the stored backward field and one
    /// forward stream.
    pub fn marginal(&self, u: f64) -> Result<QuenchedMarginal> {
        let cal = self.env.calibration();
        let (step, _) = map_to_lattice(cal, 0.0, u)?;
        let fwd = log_profile(
            self.env,
            FieldAnchor::point(0, 0),
            Direction::Forward,
            step,
        )?;
        marginal_from_rows(self.env, step, &fwd, self.backward.row(step))
    }
}

/// Draw one point-to-point path (single-use convenience around
/// [`QuenchedSampler`]).
pub fn sample_p2p(
    env: &LatticeEnvironment,
    endpoint_site: i64,
    requested_times: &[f64],
    rng: &mut impl Rng,
) -> Result<PathSample> {
    QuenchedSampler::new_point_to_point(env, endpoint_site)?.sample(requested_times, rng)
}

/// Draw one point-to-line path (single-use convenience).
pub fn sample_p2l(
    env: &LatticeEnvironment,
    requested_times: &[f64],
    rng: &mut impl Rng,
) -> Result<PathSample> {
    QuenchedSampler::new_point_to_line(env)?.sample(requested_times, rng)
}

/// The quenched law of the polymer position at one time, as an atom list on
/// the reachable sublattice.
#[derive(Debug, Clone)]
pub struct QuenchedMarginal {
    pub step: usize,
    /// Realized time `step * dt`.
    pub u: f64,
    pub dx: f64,
    /// Sites carrying mass, ascending.
    pub sites: Vec<i64>,
    /// Normalized probability per site (sums to one).
    pub probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl QuenchedMarginal {
    /// Assemble a marginal from explicit atoms (deterministic studies, tests).
    pub fn from_parts(step: usize, u: f64, dx: f64, sites: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if sites.len() != probs.len() || sites.is_empty() {
            return Err(CoreError::config(
                "sites and probs must be non-empty and of equal length".to_string(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(CoreError::data("atom masses must sum to a positive finite value".to_string()));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(QuenchedMarginal {
            step,
            u,
            dx,
            sites,
            probs,
            cumulative,
        })
    }

    pub fn mean(&self) -> f64 {
        self.sites
            .iter()
            .zip(&self.probs)
            .map(|(&s, &p)| p * s as f64 * self.dx)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sites
            .iter()
            .zip(&self.probs)
            .map(|(&s, &p)| {
                let d = s as f64 * self.dx - m;
                p * d * d
            })
            .sum()
    }

    /// Most probable position; equal masses resolve to the larger coordinate.
    pub fn mode_position(&self) -> f64 {
        let mut best_site = self.sites[0];
        let mut best_p = self.probs[0];
        for (&s, &p) in self.sites.iter().zip(&self.probs) {
            if p >= best_p {
                best_p = p;
                best_site = s;
            }
        }
        best_site as f64 * self.dx
    }

    pub fn sample_site(&self, rng: &mut impl Rng) -> i64 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.sites[idx.min(self.sites.len() - 1)]
    }

    /// Sampled position at the exact site coordinate.
    pub fn sample_position(&self, rng: &mut impl Rng) -> f64 {
        self.sample_site(rng) as f64 * self.dx
    }

    /// Sampled position smoothed uniformly over the site's sublattice cell
    /// `(site - 1, site + 1) * dx`. Use for comparisons against continuous
    /// reference laws; the smoothed law's CDF interpolates the atom CDF
    /// linearly, removing the lattice staircase while keeping cell-level
    /// agreement exact.
    pub fn sample_position_smoothed(&self, rng: &mut impl Rng) -> f64 {
        let site = self.sample_site(rng) as f64;
        let offset: f64 = rng.random_range(-1.0..1.0);
        (site + offset) * self.dx
    }
}

fn marginal_from_rows(
    env: &LatticeEnvironment,
    step: usize,
    fwd: &[f64],
    bwd: &[f64],
) -> Result<QuenchedMarginal> {
    let cal = env.calibration();
    let w = cal.half_width as i64;
    let mut max = f64::NEG_INFINITY;
    for i in 0..fwd.len() {
        let v = fwd[i] + bwd[i];
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(CoreError::data(format!(
            "no mass at step {step}: forward and backward fields do not overlap"
        )));
    }
    let mut sites = Vec::new();
    let mut masses = Vec::new();
    let mut total = 0.0;
    for i in 0..fwd.len() {
        let v = fwd[i] + bwd[i];
        if v > f64::NEG_INFINITY {
            let m = (v - max).exp();
            sites.push(i as i64 - w);
            masses.push(m);
            total += m;
        }
    }
    for m in &mut masses {
        *m /= total;
    }
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cumulative.push(acc);
    }
    *cumulative.last_mut().unwrap() = 1.0;
    Ok(QuenchedMarginal {
        step,
        u: step as f64 * cal.dt,
        dx: cal.dx,
        sites,
        probs: masses,
        cumulative,
    })
}

/// Quenched marginal at time `u`, streaming both fields (memory stays at a
/// few rows regardless of lattice size).
pub fn quenched_marginal(
    env: &LatticeEnvironment,
    kind: PathKind,
    endpoint_site: Option<i64>,
    u: f64,
) -> Result<QuenchedMarginal> {
    let cal = env.calibration();
    let n = cal.n_steps;
    let (step, _) = map_to_lattice(cal, 0.0, u)?;
    let fwd = log_profile(env, FieldAnchor::point(0, 0), Direction::Forward, step)?;
    let back_anchor = match kind {
        PathKind::PointToPoint => {
            let site = endpoint_site.ok_or_else(|| {
                CoreError::config("point-to-point marginal needs an endpoint site".to_string())
            })?;
            FieldAnchor::point(n, site)
        }
        PathKind::PointToLine => FieldAnchor::line(n),
    };
    let bwd = log_profile(env, back_anchor, Direction::Backward, step)?;
    marginal_from_rows(env, step, &fwd, &bwd)
}

/// Most probable quenched position at time `u` (ties resolve to the larger
/// coordinate).
pub fn quenched_mode(
    env: &LatticeEnvironment,
    kind: PathKind,
    endpoint_site: Option<i64>,
    u: f64,
) -> Result<f64> {
    Ok(quenched_marginal(env, kind, endpoint_site, u)?.mode_position())
}

/// Which diffusive rescaling to apply to a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleRegime {
    /// `Y(t) = eps^{-1/2} X(eps t)` on a horizon-`eps` path.
    Short,
    /// `L(t) = eps^{2/3} X(t / eps)` on a horizon-`1/eps` path.
    Long,
}

/// A path brought to the unit time interval by one of the two rescalings.
#[derive(Debug, Clone)]
pub struct RescaledPath {
    pub regime: RescaleRegime,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Rescale a sampled path. The path's horizon must equal `eps` (short regime)
/// or `1/eps` (long regime); `eps` must lie in `(0, 1]`.
pub fn rescale(path: &PathSample, regime: RescaleRegime, epsilon: f64) -> Result<RescaledPath> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(CoreError::domain(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let horizon = *path.times.last().ok_or_else(|| {
        CoreError::data("path has no recorded nodes".to_string())
    })?;
    let (expected, time_factor, space_factor) = match regime {
        RescaleRegime::Short => (epsilon, 1.0 / epsilon, epsilon.powf(-0.5)),
        RescaleRegime::Long => (1.0 / epsilon, epsilon, epsilon.powf(2.0 / 3.0)),
    };
    if (horizon - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(CoreError::domain(format!(
            "path horizon {horizon} does not match the regime's expected horizon {expected}"
        )));
    }
    Ok(RescaledPath {
        regime,
        epsilon,
        times: path.times.iter().map(|t| t * time_factor).collect(),
        values: path.positions.iter().map(|x| x * space_factor).collect(),
    })
}

/// A finite function sampled on a rectangular grid box.
#[derive(Debug, Clone)]
pub struct GridFunction {
    /// Node coordinates per dimension, strictly ascending, at least two each.
    pub axes: Vec<Vec<f64>>,
    /// Row-major values (last axis fastest).
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(CoreError::config("grid needs at least one axis".to_string()));
        }
        let mut size = 1usize;
        for ax in &axes {
            if ax.len() < 2 {
                return Err(CoreError::config("each axis needs at least two nodes".to_string()));
            }
            if ax.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CoreError::config("axis nodes must be strictly ascending".to_string()));
            }
            size = size
                .checked_mul(ax.len())
                .ok_or_else(|| CoreError::config("grid size overflows".to_string()))?;
        }
        if values.len() != size {
            return Err(CoreError::config(format!(
                "expected {size} grid values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::data("grid values must all be finite".to_string()));
        }
        Ok(GridFunction { axes, values })
    }

    pub fn from_fn(axes: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let size: usize = shape.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut coords = vec![0.0; axes.len()];
        for flat in 0..size {
            decode(flat, &shape, &axes, &mut coords);
            values.push(f(&coords));
        }
        GridFunction::from_values(axes, values)
    }
}

fn decode(flat: usize, shape: &[usize], axes: &[Vec<f64>], coords: &mut [f64]) {
    let mut rem = flat;
    for d in (0..shape.len()).rev() {
        let i = rem % shape[d];
        rem /= shape[d];
        coords[d] = axes[d][i];
    }
}

/// Trapezoid weight of node `i` on an axis.
fn trapezoid_weight(axis: &[f64], i: usize) -> f64 {
    let n = axis.len();
    if i == 0 {
        (axis[1] - axis[0]) / 2.0
    } else if i + 1 == n {
        (axis[n - 1] - axis[n - 2]) / 2.0
    } else {
        (axis[i + 1] - axis[i - 1]) / 2.0
    }
}

/// Concentration report for the Gibbs-type densities
/// `g_eps ∝ exp(eps^{-1/3} f)` on the grid box.
#[derive(Debug, Clone)]
pub struct LaplaceReport {
    /// Coordinates of the maximizing node used as box center.
    pub argmax: Vec<f64>,
    /// Whether the maximum was attained at more than one node (resolved by
    /// preferring the node closest to the origin, then the lexicographically
    /// largest coordinates).
    pub tie_flagged: bool,
    /// `(epsilon, mass of the delta-box around argmax)` per requested epsilon.
    pub masses: Vec<(f64, f64)>,
    /// Whether mass is nondecreasing as epsilon decreases through the list.
    pub monotone_in_epsilon: bool,
}

/// Quadrature check of Laplace-type concentration: for each `eps`, the mass
/// that `g_eps ∝ exp(eps^{-1/3} f)` assigns to the closed `delta`-box (per
/// coordinate) around the argmax of `f`.
pub fn laplace_concentration_check(
    f: &GridFunction,
    epsilon_list: &[f64],
    delta: f64,
) -> Result<LaplaceReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(CoreError::domain(format!("delta must be positive, got {delta}")));
    }
    if epsilon_list.is_empty() || epsilon_list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(CoreError::domain(
            "epsilon_list must be non-empty with positive entries".to_string(),
        ));
    }
    let shape: Vec<usize> = f.axes.iter().map(|a| a.len()).collect();
    let size = f.values.len();

    let fmax = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut coords = vec![0.0; shape.len()];
    let mut argmax: Option<Vec<f64>> = None;
    let mut ties = 0usize;
    for flat in 0..size {
        if f.values[flat] == fmax {
            ties += 1;
            decode(flat, &shape, &f.axes, &mut coords);
            let better = match &argmax {
                None => true,
                Some(cur) => {
                    let norm_new: f64 = coords.iter().map(|c| c * c).sum();
                    let norm_cur: f64 = cur.iter().map(|c| c * c).sum();
                    if norm_new < norm_cur - 1e-15 {
                        true
                    } else if norm_new > norm_cur + 1e-15 {
                        false
                    } else {
                        match coords.iter().zip(cur.iter()).find(|(a, b)| a != b) {
                            Some((a, b)) => a > b,
                            None => false,
                        }
                    }
                }
            };
            if better {
                argmax = Some(coords.clone());
            }
        }
    }
    let argmax = argmax.expect("finite grid has a maximum");
    let tie_flagged = ties > 1;

    let mut masses = Vec::with_capacity(epsilon_list.len());
    for &eps in epsilon_list {
        let beta = eps.powf(-1.0 / 3.0);
        let mut total = 0.0;
        let mut inside = 0.0;
        for flat in 0..size {
            decode(flat, &shape, &f.axes, &mut coords);
            let mut weight = (beta * (f.values[flat] - fmax)).exp();
            let mut rem = flat;
            for d in (0..shape.len()).rev() {
                let i = rem % shape[d];
                rem /= shape[d];
                weight *= trapezoid_weight(&f.axes[d], i);
            }
            total += weight;
            if coords
                .iter()
                .zip(argmax.iter())
                .all(|(c, a)| (c - a).abs() <= delta + 1e-12)
            {
                inside += weight;
            }
        }
        masses.push((eps, inside / total));
    }
    let mut sorted = masses.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let monotone_in_epsilon = sorted.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    Ok(LaplaceReport {
        argmax,
        tie_flagged,
        masses,
        monotone_in_epsilon,
    })
}
