//! Finite line ensembles under an exponential pairwise interaction.
//!
//! A state holds K curves pinned at both ends of an interval, discretized on
//! a uniform time grid, with an optional lower boundary curve. The target
//! law reweights independent Brownian bridges by
//! `exp(-sum_i integral G_t(L_i - L_{i-1}))`, where consecutive-curve gaps are
//! penalized through the convex interaction
//! `G_t(x) = sqrt(pi t / 4) * exp((pi t / 4)^{1/4} x)`, the curve above the
//! top one is `+inf` (its interaction term vanishes), and the curve below the
//! bottom one is the configured boundary (`-inf` again contributing zero).
//!
//! Two MCMC kernels are provided. [`gibbs_sweep`] is an independence
//! Metropolis step on one whole curve: propose a fresh Brownian bridge
//! between the pinned endpoints and accept with probability
//! `min(1, exp(-delta E))`, which is in detailed balance with the target
//! because the bridge part of the density cancels. [`monotone_coupling_check`]
//! instead uses single-site heat-bath resampling driven by shared quantile
//! uniforms: each site's full conditional is log-concave and stochastically
//! monotone in its neighbors and boundary, so two chains with ordered
//! boundaries, identical endpoints, and shared uniforms stay ordered --
//! realizing an explicitly checkable monotone coupling.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::environment::{replica_rng, StreamDomain};
use crate::error::{CoreError, Result};

/// The pairwise interaction `G_t(x) = sqrt(pi t / 4) exp((pi t / 4)^{1/4} x)`.
/// A `-inf` argument returns 0 (the no-contact limit); large arguments may
/// overflow to `+inf`, which samplers treat as an auto-rejected move.
pub fn interaction_g(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(CoreError::domain(format!(
            "interaction temperature must be positive, got {t}"
        )));
    }
    Ok(interaction_g_raw(t, x))
}

fn interaction_g_raw(t: f64, x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let base = std::f64::consts::PI * t / 4.0;
    base.sqrt() * (base.powf(0.25) * x).exp()
}

/// Lower boundary below the bottom curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// No boundary: the bottom interaction term is identically zero.
    NegInf,
    /// A fixed curve given by its values on the grid.
    Curve(Vec<f64>),
}

/// K pinned curves on a uniform grid over `[a, b]`.
#[derive(Debug, Clone)]
pub struct LineEnsembleState {
    /// Interaction temperature parameter.
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// Uniform time grid including both endpoints, at least three nodes.
    pub grid: Vec<f64>,
    /// Curves top to bottom; `curves[k][m]` is curve `k` at `grid[m]`.
    pub curves: Vec<Vec<f64>>,
    /// Entry values (at `a`) per curve.
    pub entry: Vec<f64>,
    /// Exit values (at `b`) per curve.
    pub exit: Vec<f64>,
    pub lower_boundary: Boundary,
    /// Cumulative Metropolis sweep count.
    pub sweeps: u64,
    /// Cumulative accepted Metropolis sweeps.
    pub accepts: u64,
    /// Proposals rejected because the energy difference was not finite.
    pub overflow_rejections: u64,
}

impl LineEnsembleState {
    /// Build a state with straight-line initial curves between the pinned
    /// endpoints.
    pub fn new(
        t: f64,
        a: f64,
        b: f64,
        grid_len: usize,
        entry: Vec<f64>,
        exit: Vec<f64>,
        lower_boundary: Boundary,
    ) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(CoreError::config(format!(
                "interaction temperature must be positive, got {t}"
            )));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(CoreError::config(format!("need a < b, got a = {a}, b = {b}")));
        }
        if grid_len < 3 {
            return Err(CoreError::config(format!(
                "grid needs at least 3 nodes, got {grid_len}"
            )));
        }
        if entry.len() != exit.len() || entry.is_empty() {
            return Err(CoreError::config(
                "entry and exit values must be non-empty and matched per curve".to_string(),
            ));
        }
        if entry.iter().chain(exit.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::config("curve endpoints must be finite".to_string()));
        }
        let grid: Vec<f64> = (0..grid_len)
            .map(|m| a + (b - a) * m as f64 / (grid_len - 1) as f64)
            .collect();
        if let Boundary::Curve(vals) = &lower_boundary {
            if vals.len() != grid_len {
                return Err(CoreError::config(format!(
                    "boundary curve has {} values for a grid of {grid_len}",
                    vals.len()
                )));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::config(
                    "boundary curve values must be finite (use NegInf for no boundary)".to_string(),
                ));
            }
        }
        let curves = entry
            .iter()
            .zip(&exit)
            .map(|(&x0, &x1)| {
                (0..grid_len)
                    .map(|m| {
                        let s = m as f64 / (grid_len - 1) as f64;
                        x0 + (x1 - x0) * s
                    })
                    .collect()
            })
            .collect();
        Ok(LineEnsembleState {
            t,
            a,
            b,
            grid,
            curves,
            entry,
            exit,
            lower_boundary,
            sweeps: 0,
            accepts: 0,
            overflow_rejections: 0,
        })
    }

    pub fn curve_count(&self) -> usize {
        self.curves.len()
    }

    pub fn grid_spacing(&self) -> f64 {
        (self.b - self.a) / (self.grid.len() - 1) as f64
    }

    fn neighbor_above(&self, k: usize, m: usize) -> f64 {
        if k == 0 {
            f64::INFINITY
        } else {
            self.curves[k - 1][m]
        }
    }

    fn neighbor_below(&self, k: usize, m: usize) -> f64 {
        if k + 1 < self.curves.len() {
            self.curves[k + 1][m]
        } else {
            match &self.lower_boundary {
                Boundary::NegInf => f64::NEG_INFINITY,
                Boundary::Curve(vals) => vals[m],
            }
        }
    }
}

/// Trapezoid-rule interaction energy of substituting `curve` as curve `k`:
/// the integral of `G_t(curve - neighbor above) + G_t(neighbor below - curve)`
/// over `[a, b]`. May be `+inf` when the interaction overflows.
pub fn curve_interaction_energy(
    state: &LineEnsembleState,
    k: usize,
    curve: &[f64],
) -> Result<f64> {
    if k >= state.curves.len() {
        return Err(CoreError::domain(format!(
            "curve index {k} out of range for {} curves",
            state.curves.len()
        )));
    }
    if curve.len() != state.grid.len() {
        return Err(CoreError::domain(format!(
            "curve has {} nodes; the grid has {}",
            curve.len(),
            state.grid.len()
        )));
    }
    let h = state.grid_spacing();
    let last = state.grid.len() - 1;
    let mut energy = 0.0;
    for m in 0..=last {
        let w = if m == 0 || m == last { h / 2.0 } else { h };
        let above = state.neighbor_above(k, m);
        let below = state.neighbor_below(k, m);
        let up_term = if above == f64::INFINITY {
            0.0
        } else {
            interaction_g_raw(state.t, curve[m] - above)
        };
        let down_term = interaction_g_raw(state.t, below - curve[m]);
        energy += w * (up_term + down_term);
    }
    Ok(energy)
}

/// Sample a Brownian bridge from `(grid[0], entry)` to `(grid[last], exit)`
/// at the grid nodes (exact finite-dimensional law, sequential construction).
pub fn sample_free_bridge(grid: &[f64], entry: f64, exit: f64, rng: &mut impl Rng) -> Vec<f64> {
    let last = grid.len() - 1;
    let mut out = Vec::with_capacity(grid.len());
    out.push(entry);
    let mut x = entry;
    for m in 1..last {
        let dt = grid[m] - grid[m - 1];
        let rem = grid[last] - grid[m - 1];
        let mean = x + (exit - x) * dt / rem;
        let var = dt * (rem - dt) / rem;
        let z: f64 = rng.sample(StandardNormal);
        x = mean + var.sqrt() * z;
        out.push(x);
    }
    out.push(exit);
    out
}

/// Outcome of one Metropolis sweep of a single curve.
#[derive(Debug, Clone, Copy)]
pub struct SweepOutcome {
    pub accepted: bool,
    /// Energy difference `E(proposal) - E(current)`; may be non-finite.
    pub delta_e: f64,
    /// True when the move was auto-rejected because `delta_e` was not finite.
    pub overflow_rejected: bool,
}

/// One independence-Metropolis resampling of curve `k`: propose a fresh
/// Brownian bridge between its pinned endpoints and accept with probability
/// `min(1, exp(-(E_proposal - E_current)))`. A non-finite energy difference
/// auto-rejects and is counted on the state.
pub fn gibbs_sweep(
    state: &mut LineEnsembleState,
    k: usize,
    rng: &mut impl Rng,
) -> Result<SweepOutcome> {
    if k >= state.curves.len() {
        return Err(CoreError::domain(format!(
            "curve index {k} out of range for {} curves",
            state.curves.len()
        )));
    }
    let proposal = sample_free_bridge(&state.grid, state.entry[k], state.exit[k], rng);
    let e_current = curve_interaction_energy(state, k, &state.curves[k])?;
    let e_proposal = curve_interaction_energy(state, k, &proposal)?;
    let delta_e = e_proposal - e_current;
    state.sweeps += 1;
    if !delta_e.is_finite() {
        state.overflow_rejections += 1;
        return Ok(SweepOutcome {
            accepted: false,
            delta_e,
            overflow_rejected: true,
        });
    }
    let accept_p = (-delta_e).exp().min(1.0);
    let accepted = rng.random::<f64>() < accept_p;
    if accepted {
        state.curves[k] = proposal;
        state.accepts += 1;
    }
    Ok(SweepOutcome {
        accepted,
        delta_e,
        overflow_rejected: false,
    })
}

/// One Metropolis sweep over every curve, top to bottom.
pub fn sweep_all(state: &mut LineEnsembleState, rng: &mut impl Rng) -> Result<()> {
    for k in 0..state.curves.len() {
        gibbs_sweep(state, k, rng)?;
    }
    Ok(())
}

/// How the two chains of [`monotone_coupling_check`] consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Both chains share every site's quantile uniform (the monotone
    /// coupling).
    SharedQuantile,
    /// Each chain has its own stream (negative control; ordering may break).
    IndependentStreams,
}

/// Configuration for [`monotone_coupling_check`].
#[derive(Debug, Clone)]
pub struct CouplingConfig {
    pub sweeps: usize,
    /// Nodes of the common value grid used to invert each site conditional.
    pub value_grid_points: usize,
    pub mode: CouplingMode,
    pub seed: u64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            sweeps: 1000,
            value_grid_points: 513,
            mode: CouplingMode::SharedQuantile,
            seed: 0,
        }
    }
}

/// Report from a coupled run.
#[derive(Debug, Clone)]
pub struct CouplingReport {
    pub sweeps: usize,
    /// Sweeps after which some node had the upper chain strictly below the
    /// lower chain.
    pub violation_sweeps: usize,
    /// `(sweep, curve, node, gap)` of the first violation, if any.
    pub first_violation: Option<(usize, usize, usize, f64)>,
    /// Whether the two trajectories stayed bitwise identical throughout.
    pub identical: bool,
}

fn boundary_value(state: &LineEnsembleState, m: usize) -> f64 {
    match &state.lower_boundary {
        Boundary::NegInf => f64::NEG_INFINITY,
        Boundary::Curve(vals) => vals[m],
    }
}

/// Log-density (up to a constant) of the site-`m` conditional for curve `k`.
fn site_log_density(
    t: f64,
    h: f64,
    left: f64,
    right: f64,
    above: f64,
    below: f64,
    w: f64,
    v: f64,
) -> f64 {
    let gauss = -((v - left) * (v - left) + (right - v) * (right - v)) / (2.0 * h);
    let up_term = if above == f64::INFINITY {
        0.0
    } else {
        interaction_g_raw(t, v - above)
    };
    let down_term = interaction_g_raw(t, below - v);
    gauss - w * (up_term + down_term)
}

/// Single-site heat-bath update of both chains at `(k, m)` on a common value
/// grid. Each chain's conditional CDF is inverted at its uniform; because the
/// conditionals are likelihood-ratio ordered whenever the chains' neighbors
/// and boundaries are ordered, a shared uniform yields ordered draws.
fn coupled_site_update(
    hi: &mut LineEnsembleState,
    lo: &mut LineEnsembleState,
    k: usize,
    m: usize,
    u_hi: f64,
    u_lo: f64,
    grid_points: usize,
) {
    let h = hi.grid_spacing();
    let w = h; // interior trapezoid weight
    let params = |st: &LineEnsembleState| {
        (
            st.curves[k][m - 1],
            st.curves[k][m + 1],
            st.neighbor_above(k, m),
            st.neighbor_below(k, m),
        )
    };
    let (l_hi, r_hi, a_hi, b_hi) = params(hi);
    let (l_lo, r_lo, a_lo, b_lo) = params(lo);
    // Anchors that the conditional mode can sit near: the Gaussian centers
    // and any finite repelling neighbor.
    let mut vmin = l_hi.min(r_hi).min(l_lo).min(r_lo);
    let mut vmax = l_hi.max(r_hi).max(l_lo).max(r_lo);
    for anchor in [a_hi, a_lo, b_hi, b_lo] {
        if anchor.is_finite() {
            vmin = vmin.min(anchor);
            vmax = vmax.max(anchor);
        }
    }
    let sd = (h / 2.0).sqrt();
    vmin -= 8.0 * sd;
    vmax += 8.0 * sd;
    let step = (vmax - vmin) / (grid_points - 1) as f64;

    let draw = |left: f64, right: f64, above: f64, below: f64, u: f64| -> f64 {
        let mut logs = Vec::with_capacity(grid_points);
        let mut max = f64::NEG_INFINITY;
        for i in 0..grid_points {
            let v = vmin + step * i as f64;
            let ld = site_log_density(hi.t, h, left, right, above, below, w, v);
            if ld > max {
                max = ld;
            }
            logs.push(ld);
        }
        let mut total = 0.0;
        for ld in &mut logs {
            *ld = (*ld - max).exp();
            total += *ld;
        }
        let target = u * total;
        let mut acc = 0.0;
        for (i, mass) in logs.iter().enumerate() {
            acc += mass;
            if acc >= target {
                return vmin + step * i as f64;
            }
        }
        vmax
    };
    hi.curves[k][m] = draw(l_hi, r_hi, a_hi, b_hi, u_hi);
    lo.curves[k][m] = draw(l_lo, r_lo, a_lo, b_lo, u_lo);
}

/// Run two chains with ordered lower boundaries and identical endpoints under
/// the shared-quantile heat-bath coupling (or independent streams as a
/// negative control) and report whether the pointwise curve ordering
/// `hi >= lo` survived every sweep.
pub fn monotone_coupling_check(
    state_hi: &LineEnsembleState,
    state_lo: &LineEnsembleState,
    cfg: &CouplingConfig,
) -> Result<CouplingReport> {
    if state_hi.grid.len() != state_lo.grid.len()
        || state_hi
            .grid
            .iter()
            .zip(&state_lo.grid)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(CoreError::domain("coupled chains need identical grids".to_string()));
    }
    if state_hi.t != state_lo.t {
        return Err(CoreError::domain(
            "coupled chains need the same interaction temperature".to_string(),
        ));
    }
    if state_hi.curve_count() != state_lo.curve_count() {
        return Err(CoreError::domain("coupled chains need the same curve count".to_string()));
    }
    if state_hi.entry != state_lo.entry || state_hi.exit != state_lo.exit {
        return Err(CoreError::domain(
            "coupled chains need identical pinned endpoints".to_string(),
        ));
    }
    for m in 0..state_hi.grid.len() {
        let b_hi = boundary_value(state_hi, m);
        let b_lo = boundary_value(state_lo, m);
        if b_lo > b_hi {
            return Err(CoreError::domain(format!(
                "boundaries must be ordered: lower chain exceeds upper chain at node {m}"
            )));
        }
    }
    if cfg.sweeps == 0 {
        return Err(CoreError::config("coupling run needs at least one sweep".to_string()));
    }
    if cfg.value_grid_points < 16 {
        return Err(CoreError::config("value grid needs at least 16 points".to_string()));
    }

    let mut hi = state_hi.clone();
    let mut lo = state_lo.clone();
    let mut rng_shared = replica_rng(cfg.seed, StreamDomain::Ensemble, 0);
    let mut rng_lo = replica_rng(cfg.seed, StreamDomain::Ensemble, 1);
    let interior = hi.grid.len() - 1;
    let mut violation_sweeps = 0usize;
    let mut first_violation = None;
    let mut identical = true;
    for sweep in 1..=cfg.sweeps {
        for k in 0..hi.curve_count() {
            for m in 1..interior {
                let u_hi: f64 = rng_shared.random();
                let u_lo = match cfg.mode {
                    CouplingMode::SharedQuantile => u_hi,
                    CouplingMode::IndependentStreams => rng_lo.random(),
                };
                coupled_site_update(&mut hi, &mut lo, k, m, u_hi, u_lo, cfg.value_grid_points);
            }
        }
        let mut violated_here = false;
        for k in 0..hi.curve_count() {
            for m in 0..hi.grid.len() {
                let gap = hi.curves[k][m] - lo.curves[k][m];
                if gap < 0.0 {
                    violated_here = true;
                    if first_violation.is_none() {
                        first_violation = Some((sweep, k, m, gap));
                    }
                }
                if gap != 0.0 {
                    identical = false;
                }
            }
        }
        if violated_here {
            violation_sweeps += 1;
        }
    }
    Ok(CouplingReport {
        sweeps: cfg.sweeps,
        violation_sweeps,
        first_violation,
        identical,
    })
}

/// Decreasing events on the top curve (if a curve is in the event, so is any
/// pointwise-lower curve).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneEvent {
    WholeSpace,
    Empty,
    /// The minimum of the curve over the interval is at most `level`.
    MinAtMost { level: f64 },
}

impl MonotoneEvent {
    pub fn holds(&self, curve: &[f64]) -> bool {
        match *self {
            MonotoneEvent::WholeSpace => true,
            MonotoneEvent::Empty => false,
            MonotoneEvent::MinAtMost { level } => {
                curve.iter().copied().fold(f64::INFINITY, f64::min) <= level
            }
        }
    }
}

/// Configuration for [`monotone_event_bound_check`].
#[derive(Debug, Clone)]
pub struct EventBoundConfig {
    pub burn_in_sweeps: usize,
    pub thinning: usize,
    /// Retained Gibbs samples.
    pub replicas: usize,
    /// Independent free-bridge draws.
    pub free_replicas: usize,
    pub seed: u64,
}

impl Default for EventBoundConfig {
    fn default() -> Self {
        EventBoundConfig {
            burn_in_sweeps: 1000,
            thinning: 10,
            replicas: 1000,
            free_replicas: 10000,
            seed: 0,
        }
    }
}

/// Monte Carlo comparison of a decreasing event's probability under the
/// boundary-conditioned Gibbs law versus the free bridge with the same
/// endpoints.
#[derive(Debug, Clone)]
pub struct EventBoundReport {
    pub conditioned: f64,
    /// Batch-means standard error of the conditioned estimate.
    pub conditioned_se: f64,
    pub free: f64,
    pub free_se: f64,
    /// Whether `conditioned <= free + 3 * combined standard error`.
    pub within_bound: bool,
    pub replicas: usize,
    pub free_replicas: usize,
    pub acceptance_rate: f64,
}

/// Estimate a decreasing event on the top curve under the Gibbs-conditioned
/// law (Metropolis chain with burn-in and thinning, batch-means errors) and
/// under the free Brownian bridge, and test the domination
/// `conditioned <= free + 3 se`.
pub fn monotone_event_bound_check(
    state: &LineEnsembleState,
    event: MonotoneEvent,
    cfg: &EventBoundConfig,
) -> Result<EventBoundReport> {
    if cfg.replicas < 100 || cfg.free_replicas < 100 {
        return Err(CoreError::estimation(format!(
            "need at least 100 replicas on both sides, got {} conditioned / {} free",
            cfg.replicas, cfg.free_replicas
        )));
    }
    if cfg.thinning == 0 {
        return Err(CoreError::config("thinning must be at least 1".to_string()));
    }
    let mut chain = state.clone();
    let mut rng = replica_rng(cfg.seed, StreamDomain::Ensemble, 0);
    for _ in 0..cfg.burn_in_sweeps {
        sweep_all(&mut chain, &mut rng)?;
    }
    let sweeps_before = chain.sweeps;
    let accepts_before = chain.accepts;
    let mut indicators = Vec::with_capacity(cfg.replicas);
    for _ in 0..cfg.replicas {
        for _ in 0..cfg.thinning {
            sweep_all(&mut chain, &mut rng)?;
        }
        indicators.push(if event.holds(&chain.curves[0]) { 1.0 } else { 0.0 });
    }
    let acceptance_rate = (chain.accepts - accepts_before) as f64
        / (chain.sweeps - sweeps_before).max(1) as f64;
    let conditioned = indicators.iter().sum::<f64>() / indicators.len() as f64;
    // Batch means against autocorrelation left after thinning.
    let n_batches = (indicators.len() as f64).sqrt().floor() as usize;
    let batch_size = indicators.len() / n_batches;
    let mut batch_means = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let chunk = &indicators[b * batch_size..(b + 1) * batch_size];
        batch_means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
    }
    let bm = batch_means.iter().sum::<f64>() / n_batches as f64;
    let bvar = batch_means
        .iter()
        .map(|x| (x - bm) * (x - bm))
        .sum::<f64>()
        / (n_batches - 1) as f64;
    let conditioned_se = (bvar / n_batches as f64).sqrt();

    let mut rng_free = replica_rng(cfg.seed, StreamDomain::Reference, 0);
    let mut hits = 0usize;
    for _ in 0..cfg.free_replicas {
        let bridge = sample_free_bridge(&state.grid, state.entry[0], state.exit[0], &mut rng_free);
        if event.holds(&bridge) {
            hits += 1;
        }
    }
    let free = hits as f64 / cfg.free_replicas as f64;
    let free_se = (free * (1.0 - free) / cfg.free_replicas as f64).sqrt();
    let combined = (conditioned_se * conditioned_se + free_se * free_se).sqrt();
    Ok(EventBoundReport {
        conditioned,
        conditioned_se,
        free,
        free_se,
        within_bound: conditioned <= free + 3.0 * combined,
        replicas: cfg.replicas,
        free_replicas: cfg.free_replicas,
        acceptance_rate,
    })
}
