//! Quenched disorder on the polymer lattice.
//!
//! A lattice environment is an i.i.d. Gaussian weight per (step, site) pair on
//! the space-time grid `{1..=n_steps} x {-half_width..=half_width}`. The
//! calibration ties the grid to continuum coordinates: a horizon `T` split
//! into `n` steps gives `dt = T/n`, `dx = sqrt(dt)`, and a disorder standard
//! deviation `sigma = dt^(1/4)` unless overridden. Under this scaling the
//! polymer partition function converges to the continuum multiplicative
//! stochastic heat equation, and the per-step centering `sigma^2/2` (the
//! Gaussian log moment generating function at 1) removes the annealed drift.
//!
//! Randomness is organized as counter-constructed streams: a 256-bit ChaCha
//! key is assembled directly from `(seed, domain, index)`, so distinct
//! replicas, distinct purposes (environment vs. path sampling vs. ensemble
//! resampling), and distinct weight rows can never collide, and any row can be
//! regenerated on demand without touching the others.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};

/// Purpose tag for a derived random stream. Streams with different domains
/// are independent even for the same master seed and replica index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    /// Disorder weights of a replica's environment.
    Environment,
    /// Quenched path sampling (Doob-chain transitions, cell smoothing).
    PathSampling,
    /// Line-ensemble resampling chains.
    Ensemble,
    /// Auxiliary simulation randomness (reference bridges, calibration runs).
    Reference,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Environment => 0x454e56,
            StreamDomain::PathSampling => 0x504154,
            StreamDomain::Ensemble => 0x474942,
            StreamDomain::Reference => 0x524546,
        }
    }
}

/// Row tag for per-row weight regeneration, distinct from every
/// `StreamDomain` tag.
const ROW_TAG: u64 = 0x524f57;

fn keyed_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Deterministic, collision-free stream for `(master_seed, domain, replica)`.
///
/// This is the only sanctioned way to derive per-replica randomness; it keeps
/// results independent of worker scheduling and guarantees that environment
/// disorder and quenched sampling randomness never share a stream.
pub fn replica_rng(master_seed: u64, domain: StreamDomain, replica: u64) -> ChaCha8Rng {
    keyed_rng(master_seed, domain.tag(), replica)
}

/// Continuum-lattice correspondence for one environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeCalibration {
    pub n_steps: usize,
    pub horizon: f64,
    pub half_width: usize,
    /// Time step `horizon / n_steps`.
    pub dt: f64,
    /// Site spacing `sqrt(dt)` (diffusive scaling).
    pub dx: f64,
    /// Disorder standard deviation actually in force.
    pub sigma: f64,
    /// Per-step annealed centering `sigma^2 / 2`.
    pub centering: f64,
    /// `-log(2 dx)`: log-weight of a Dirac initial condition, i.e. point mass
    /// one on a sublattice cell of width `2 dx` (consecutive reachable sites
    /// at a fixed step differ by 2 because parity is conserved).
    pub log_delta_correction: f64,
}

impl LatticeCalibration {
    fn new(n_steps: usize, horizon: f64, half_width: usize, sigma: f64) -> Self {
        let dt = horizon / n_steps as f64;
        let dx = dt.sqrt();
        LatticeCalibration {
            n_steps,
            horizon,
            half_width,
            dt,
            dx,
            sigma,
            centering: sigma * sigma / 2.0,
            log_delta_correction: -(2.0 * dx).ln(),
        }
    }

    /// Continuum coordinates of a lattice node.
    pub fn node_position(&self, step: usize, site: i64) -> (f64, f64) {
        (step as f64 * self.dt, site as f64 * self.dx)
    }
}

/// Map a continuum space-time point to the nearest admissible lattice node.
///
/// The step index is the nearest integer to `u/dt`; the site is the nearest
/// integer to `x/dx` with the same parity as the step (nearest-neighbour
/// walks conserve `step + site` parity), preferring the smaller `|site|` when
/// two admissible sites are equidistant. Points outside the grid are domain
/// errors.
pub fn map_to_lattice(cal: &LatticeCalibration, x: f64, u: f64) -> Result<(usize, i64)> {
    let tol = 1e-9 * cal.horizon.max(1.0);
    if !u.is_finite() || u < -tol || u > cal.horizon + tol {
        return Err(CoreError::domain(format!(
            "time u = {u} outside [0, {}]",
            cal.horizon
        )));
    }
    let k = (u / cal.dt).round().clamp(0.0, cal.n_steps as f64) as usize;

    let max_x = cal.half_width as f64 * cal.dx;
    if !x.is_finite() || x.abs() > max_x + tol {
        return Err(CoreError::domain(format!(
            "position x = {x} outside [-{max_x}, {max_x}]"
        )));
    }
    let parity = (k % 2) as i64;
    let j0 = x / cal.dx;
    let mut lo = j0.floor() as i64;
    if lo.rem_euclid(2) != parity {
        lo -= 1;
    }
    let hi = lo + 2;
    let (dl, dh) = (j0 - lo as f64, hi as f64 - j0);
    let mut j = if dl < dh {
        lo
    } else if dh < dl {
        hi
    } else if lo.abs() <= hi.abs() {
        lo
    } else {
        hi
    };
    let w = cal.half_width as i64;
    if j.abs() > w {
        // Nearest admissible site fell just outside; clamp by parity-preserving
        // retreat of one sublattice cell if the point itself was in range.
        j = if j > 0 { j - 2 } else { j + 2 };
        if j.abs() > w {
            return Err(CoreError::domain(format!(
                "position x = {x} has no admissible site within half-width {w}"
            )));
        }
    }
    Ok((k, j))
}

/// Construction parameters for [`generate_environment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentParams {
    pub seed: u64,
    pub n_steps: usize,
    pub horizon: f64,
    pub half_width: usize,
    /// Replaces the calibrated `dt^(1/4)` when set; zero gives the
    /// noise-free surrogate whose log partition function is the discrete
    /// heat kernel.
    pub sigma_override: Option<f64>,
}

/// How disorder weights are held in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightStorage {
    /// Materialize if `n_steps * (2 half_width + 1)` is at most `10^8`
    /// entries, regenerate per row otherwise.
    Auto,
    /// Always materialize.
    Dense,
    /// Always regenerate rows from the counter-constructed stream.
    Lazy,
}

const DENSE_ENTRY_LIMIT: usize = 100_000_000;

enum WeightStore {
    Dense(Vec<f64>),
    Lazy,
    /// Explicit weights injected by a caller (deterministic studies, tests).
    Injected(Vec<f64>),
}

/// One realized disorder environment plus its calibration.
pub struct LatticeEnvironment {
    seed: u64,
    cal: LatticeCalibration,
    store: WeightStore,
    warnings: Vec<String>,
}

/// Generate the environment for `params` with automatic weight storage.
pub fn generate_environment(params: &EnvironmentParams) -> Result<LatticeEnvironment> {
    generate_environment_with_storage(params, WeightStorage::Auto)
}

/// Generate the environment for `params`, choosing the storage mode
/// explicitly. Dense and lazy storage produce bit-identical weights.
pub fn generate_environment_with_storage(
    params: &EnvironmentParams,
    storage: WeightStorage,
) -> Result<LatticeEnvironment> {
    if params.n_steps < 1 {
        return Err(CoreError::config("n_steps must be at least 1"));
    }
    if !(params.horizon > 0.0) || !params.horizon.is_finite() {
        return Err(CoreError::config(format!(
            "horizon must be a positive real, got {}",
            params.horizon
        )));
    }
    if params.half_width < 1 {
        return Err(CoreError::config("half_width must be at least 1"));
    }
    let mut cal = LatticeCalibration::new(params.n_steps, params.horizon, params.half_width, 0.0);
    let sigma = match params.sigma_override {
        Some(s) if s < 0.0 || !s.is_finite() => {
            return Err(CoreError::config(format!(
                "sigma_override must be a finite non-negative real, got {s}"
            )))
        }
        Some(s) => s,
        None => cal.dt.powf(0.25),
    };
    cal = LatticeCalibration::new(params.n_steps, params.horizon, params.half_width, sigma);

    let mut warnings = Vec::new();
    if params.half_width < params.n_steps {
        warnings.push(format!(
            "half_width {} is below n_steps {}: walks can reach the grid edge and \
             partition sums are truncated there",
            params.half_width, params.n_steps
        ));
    }

    let width = 2 * params.half_width + 1;
    let entries = params.n_steps.checked_mul(width).ok_or_else(|| {
        CoreError::config("n_steps * (2 half_width + 1) overflows usize".to_string())
    })?;
    let dense = match storage {
        WeightStorage::Dense => true,
        WeightStorage::Lazy => false,
        WeightStorage::Auto => entries <= DENSE_ENTRY_LIMIT,
    };

    let store = if dense {
        let mut weights = vec![0.0; entries];
        for k in 1..=params.n_steps {
            let row = &mut weights[(k - 1) * width..k * width];
            fill_row_from_stream(params.seed, sigma, k, row);
        }
        WeightStore::Dense(weights)
    } else {
        WeightStore::Lazy
    };

    Ok(LatticeEnvironment {
        seed: params.seed,
        cal,
        store,
        warnings,
    })
}

fn fill_row_from_stream(seed: u64, sigma: f64, step: usize, row: &mut [f64]) {
    if sigma == 0.0 {
        row.fill(0.0);
        return;
    }
    let mut rng = keyed_rng(seed, ROW_TAG, step as u64);
    for w in row.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *w = sigma * z;
    }
}

impl LatticeEnvironment {
    /// Build an environment from explicit weights, row-major over steps
    /// `1..=n_steps` with `2 * half_width + 1` sites per row. Intended for
    /// deterministic studies and exactness tests.
    pub fn with_weights(
        n_steps: usize,
        horizon: f64,
        half_width: usize,
        sigma_label: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let width = 2 * half_width + 1;
        if weights.len() != n_steps * width {
            return Err(CoreError::config(format!(
                "expected {} weights ({} steps x {} sites), got {}",
                n_steps * width,
                n_steps,
                width,
                weights.len()
            )));
        }
        Ok(LatticeEnvironment {
            seed: 0,
            cal: LatticeCalibration::new(n_steps, horizon, half_width, sigma_label),
            store: WeightStore::Injected(weights),
            warnings: Vec::new(),
        })
    }

    pub fn calibration(&self) -> &LatticeCalibration {
        &self.cal
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn push_warning(&mut self, w: String) {
        self.warnings.push(w);
    }

    /// Number of sites per row, `2 * half_width + 1`.
    pub fn width(&self) -> usize {
        2 * self.cal.half_width + 1
    }

    /// Column index of site `j` within a row.
    #[inline]
    pub fn site_index(&self, site: i64) -> usize {
        (site + self.cal.half_width as i64) as usize
    }

    /// Disorder weight at `(step, site)`, `step` in `1..=n_steps`.
    pub fn weight(&self, step: usize, site: i64) -> f64 {
        debug_assert!(step >= 1 && step <= self.cal.n_steps);
        debug_assert!(site.unsigned_abs() as usize <= self.cal.half_width);
        let idx = self.site_index(site);
        match &self.store {
            WeightStore::Dense(w) | WeightStore::Injected(w) => {
                w[(step - 1) * self.width() + idx]
            }
            WeightStore::Lazy => {
                let mut row = vec![0.0; self.width()];
                fill_row_from_stream(self.seed, self.cal.sigma, step, &mut row);
                row[idx]
            }
        }
    }

    /// Copy the weight row for `step` (in `1..=n_steps`) into `buf`.
    pub fn fill_weight_row(&self, step: usize, buf: &mut [f64]) {
        debug_assert!(step >= 1 && step <= self.cal.n_steps);
        debug_assert_eq!(buf.len(), self.width());
        match &self.store {
            WeightStore::Dense(w) | WeightStore::Injected(w) => {
                buf.copy_from_slice(&w[(step - 1) * self.width()..step * self.width()]);
            }
            WeightStore::Lazy => fill_row_from_stream(self.seed, self.cal.sigma, step, buf),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64, n: usize, horizon: f64, w: usize) -> EnvironmentParams {
        EnvironmentParams {
            seed,
            n_steps: n,
            horizon,
            half_width: w,
            sigma_override: None,
        }
    }

    #[test]
    fn calibration_sigma_is_quarter_power_of_dt() {
        let env = generate_environment(&params(1, 16, 1.0, 16)).unwrap();
        let cal = env.calibration();
        assert!((cal.dt - 1.0 / 16.0).abs() < 1e-15);
        assert!((cal.dx - 0.25).abs() < 1e-15);
        assert!((cal.sigma - 0.5).abs() < 1e-15);
        assert!((cal.centering - 0.125).abs() < 1e-15);
        assert!((cal.log_delta_correction - -(0.5_f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn sigma_override_replaces_calibrated_value() {
        let mut p = params(1, 16, 1.0, 16);
        p.sigma_override = Some(0.0);
        let env = generate_environment(&p).unwrap();
        assert_eq!(env.calibration().sigma, 0.0);
        assert_eq!(env.weight(3, 1), 0.0);

        p.sigma_override = Some(-0.1);
        assert!(generate_environment(&p).is_err());
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        assert!(generate_environment(&params(1, 0, 1.0, 4)).is_err());
        assert!(generate_environment(&params(1, 4, 0.0, 4)).is_err());
        assert!(generate_environment(&params(1, 4, -1.0, 4)).is_err());
        assert!(generate_environment(&params(1, 4, f64::NAN, 4)).is_err());
        assert!(generate_environment(&params(1, 4, 1.0, 0)).is_err());
    }

    #[test]
    fn same_seed_reproduces_weights_and_seeds_differ() {
        let a = generate_environment(&params(7, 8, 1.0, 8)).unwrap();
        let b = generate_environment(&params(7, 8, 1.0, 8)).unwrap();
        let c = generate_environment(&params(8, 8, 1.0, 8)).unwrap();
        let mut identical = true;
        let mut any_diff = false;
        for k in 1..=8 {
            for j in -8..=8 {
                identical &= a.weight(k, j) == b.weight(k, j);
                any_diff |= a.weight(k, j) != c.weight(k, j);
            }
        }
        assert!(identical);
        assert!(any_diff);
    }

    #[test]
    fn dense_and_lazy_storage_agree_bitwise() {
        let p = params(99, 12, 2.0, 10);
        let dense = generate_environment_with_storage(&p, WeightStorage::Dense).unwrap();
        let lazy = generate_environment_with_storage(&p, WeightStorage::Lazy).unwrap();
        let mut buf_d = vec![0.0; dense.width()];
        let mut buf_l = vec![0.0; lazy.width()];
        for k in 1..=12 {
            dense.fill_weight_row(k, &mut buf_d);
            lazy.fill_weight_row(k, &mut buf_l);
            assert_eq!(buf_d, buf_l);
            for j in [-10i64, -3, 0, 5, 10] {
                assert_eq!(dense.weight(k, j), lazy.weight(k, j));
            }
        }
    }

    #[test]
    fn replica_streams_do_not_collide() {
        let mut a = replica_rng(5, StreamDomain::Environment, 0);
        let mut b = replica_rng(5, StreamDomain::Environment, 1);
        let mut c = replica_rng(5, StreamDomain::PathSampling, 0);
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.random()).collect();
        assert_ne!(xa, xb);
        assert_ne!(xa, xc);
        let mut a2 = replica_rng(5, StreamDomain::Environment, 0);
        let ya: Vec<u64> = (0..4).map(|_| a2.random()).collect();
        assert_eq!(xa, ya);
    }

    #[test]
    fn map_snaps_to_parity_compatible_node() {
        let cal = LatticeCalibration::new(16, 1.0, 16, 0.5);
        assert_eq!(map_to_lattice(&cal, 0.5, 0.5).unwrap(), (8, 2));
        assert_eq!(map_to_lattice(&cal, 0.0, 0.0).unwrap(), (0, 0));
        // Step 8 is even: x = 0.24 (j0 = 0.96) snaps down to j = 0, while
        // x = 0.26 (j0 = 1.04) snaps up to the nearer even site j = 2.
        assert_eq!(map_to_lattice(&cal, 0.24, 0.5).unwrap(), (8, 0));
        assert_eq!(map_to_lattice(&cal, 0.26, 0.5).unwrap(), (8, 2));
        // Equidistant between j = -4 and j = -2 at even parity: prefer |j| small.
        assert_eq!(map_to_lattice(&cal, -0.75, 0.5).unwrap(), (8, -2));
        assert_eq!(map_to_lattice(&cal, 0.75, 0.5).unwrap(), (8, 2));
    }

    #[test]
    fn map_rejects_out_of_range_points() {
        let cal = LatticeCalibration::new(16, 1.0, 16, 0.5);
        assert!(map_to_lattice(&cal, 0.0, 1.5).is_err());
        assert!(map_to_lattice(&cal, 0.0, -0.5).is_err());
        assert!(map_to_lattice(&cal, 4.5, 0.5).is_err());
        assert!(map_to_lattice(&cal, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn map_parity_always_matches_step() {
        let cal = LatticeCalibration::new(10, 1.0, 10, 0.5);
        for ku in 0..=10usize {
            let u = ku as f64 * cal.dt;
            let mut x = -0.9;
            while x < 0.9 {
                let (k, j) = map_to_lattice(&cal, x, u).unwrap();
                assert_eq!((k % 2) as i64, j.rem_euclid(2), "x={x} u={u}");
                assert!((j as f64 * cal.dx - x).abs() <= cal.dx + 1e-12);
                x += 0.07;
            }
        }
    }
}
