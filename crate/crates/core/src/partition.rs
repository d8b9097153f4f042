//! Log-domain polymer partition functions and their KPZ rescalings.
//!
//! The four-parameter field is approximated on the lattice by the transfer
//! recursion
//!
//! ```text
//! logZ(k+1, j) = w(k+1, j) - centering + log((e^{logZ(k, j-1)} + e^{logZ(k, j+1)}) / 2)
//! ```
//!
//! started from a Dirac initial condition `logZ(anchor) = -log(2 dx)`: point
//! mass one spread over one sublattice cell, so that `exp(logZ)` is a density
//! in the continuum coordinates and the zero-noise field reduces to the heat
//! kernel. Reachable sites at a fixed step are `2 dx` apart (parity), which
//! makes
//!
//! ```text
//! sum_z exp(logZ(anchor -> (z, r)) + logZ((z, r) -> query)) * 2 dx
//! ```
//!
//! an exact lattice identity for the direct partition function — the
//! composition law the continuum field satisfies between intermediate times.
//! Backward fields run the same recursion in reverse time; a flat backward
//! initial condition realizes the point-to-line partition function
//! (integral over the terminal point).

use crate::environment::{map_to_lattice, LatticeEnvironment};
use crate::error::{CoreError, Result};
use crate::numeric::logsumexp2;

/// Which way a field propagates from its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// What the field is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorKind {
    /// Dirac mass at a single site.
    Point(i64),
    /// Flat (log value zero at every site): integrates out the anchored end,
    /// giving point-to-line partition functions. Backward fields only.
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldAnchor {
    pub step: usize,
    pub kind: AnchorKind,
}

impl FieldAnchor {
    pub fn point(step: usize, site: i64) -> Self {
        FieldAnchor {
            step,
            kind: AnchorKind::Point(site),
        }
    }
    pub fn line(step: usize) -> Self {
        FieldAnchor {
            step,
            kind: AnchorKind::Line,
        }
    }
}

/// A materialized log partition field over a contiguous step range.
pub struct PartitionField {
    pub direction: Direction,
    pub anchor: FieldAnchor,
    first_step: usize,
    width: usize,
    half_width: usize,
    rows: Vec<f64>,
}

impl PartitionField {
    /// Covered step range, inclusive on both ends.
    pub fn step_range(&self) -> (usize, usize) {
        (
            self.first_step,
            self.first_step + self.rows.len() / self.width - 1,
        )
    }

    /// Log partition value between the anchor and `(step, site)`.
    pub fn log_z(&self, step: usize, site: i64) -> f64 {
        let (lo, hi) = self.step_range();
        assert!(
            step >= lo && step <= hi,
            "step {step} outside field range [{lo}, {hi}]"
        );
        assert!(
            site.unsigned_abs() as usize <= self.half_width,
            "site {site} outside grid"
        );
        self.rows[(step - self.first_step) * self.width
            + (site + self.half_width as i64) as usize]
    }

    /// Full row of log values at `step`, indexed by `site + half_width`.
    pub fn row(&self, step: usize) -> &[f64] {
        let (lo, hi) = self.step_range();
        assert!(step >= lo && step <= hi);
        &self.rows[(step - self.first_step) * self.width..(step - self.first_step + 1) * self.width]
    }
}

fn validate_anchor(env: &LatticeEnvironment, anchor: &FieldAnchor, direction: Direction) -> Result<()> {
    let cal = env.calibration();
    if anchor.step > cal.n_steps {
        return Err(CoreError::domain(format!(
            "anchor step {} beyond horizon step {}",
            anchor.step, cal.n_steps
        )));
    }
    match anchor.kind {
        AnchorKind::Point(site) => {
            if site.unsigned_abs() as usize > cal.half_width {
                return Err(CoreError::domain(format!(
                    "anchor site {site} outside half-width {}",
                    cal.half_width
                )));
            }
            if (anchor.step % 2) as i64 != site.rem_euclid(2) {
                return Err(CoreError::domain(format!(
                    "anchor (step {}, site {site}) violates lattice parity",
                    anchor.step
                )));
            }
        }
        AnchorKind::Line => {
            if direction != Direction::Backward {
                return Err(CoreError::domain(
                    "flat (line) anchors are only meaningful for backward fields".to_string(),
                ));
            }
        }
    }
    Ok(())
}

fn initial_row(env: &LatticeEnvironment, anchor: &FieldAnchor) -> Vec<f64> {
    let cal = env.calibration();
    match anchor.kind {
        AnchorKind::Point(site) => {
            let mut row = vec![f64::NEG_INFINITY; env.width()];
            row[env.site_index(site)] = cal.log_delta_correction;
            row
        }
        AnchorKind::Line => vec![0.0; env.width()],
    }
}

fn check_finite_weights(step: usize, weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| w.is_nan()) {
        return Err(CoreError::data(format!(
            "NaN disorder weight in step {step}"
        )));
    }
    Ok(())
}

/// One forward transfer step: `cur` holds log values at `step`, the result is
/// the row at `step + 1` given that step's weights.
fn transfer_row(cur: &[f64], weights: &[f64], centering: f64, next: &mut [f64]) {
    let width = cur.len();
    for idx in 0..width {
        let left = if idx > 0 { cur[idx - 1] } else { f64::NEG_INFINITY };
        let right = if idx + 1 < width {
            cur[idx + 1]
        } else {
            f64::NEG_INFINITY
        };
        let merged = logsumexp2(left, right);
        next[idx] = if merged == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            weights[idx] - centering + merged - std::f64::consts::LN_2
        };
    }
}

/// One backward transfer step: `cur` holds log values at `step + 1` and
/// `weights` that step's disorder; the result is the row at `step`.
fn transfer_row_back(cur: &[f64], weights: &[f64], centering: f64, prev: &mut [f64]) {
    let width = cur.len();
    let lift = |idx: usize| {
        let v = cur[idx];
        if v == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            v + weights[idx] - centering
        }
    };
    for idx in 0..width {
        let left = if idx > 0 { lift(idx - 1) } else { f64::NEG_INFINITY };
        let right = if idx + 1 < width {
            lift(idx + 1)
        } else {
            f64::NEG_INFINITY
        };
        let merged = logsumexp2(left, right);
        prev[idx] = if merged == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            merged - std::f64::consts::LN_2
        };
    }
}

fn run_field(
    env: &LatticeEnvironment,
    anchor: &FieldAnchor,
    direction: Direction,
    stop_step: usize,
    mut on_row: impl FnMut(usize, &[f64]),
) -> Result<()> {
    validate_anchor(env, anchor, direction)?;
    let cal = env.calibration();
    let width = env.width();
    let mut cur = initial_row(env, anchor);
    let mut next = vec![0.0; width];
    let mut wbuf = vec![0.0; width];
    on_row(anchor.step, &cur);
    match direction {
        Direction::Forward => {
            if stop_step < anchor.step || stop_step > cal.n_steps {
                return Err(CoreError::domain(format!(
                    "forward field from step {} cannot stop at {stop_step}",
                    anchor.step
                )));
            }
            for k in anchor.step..stop_step {
                env.fill_weight_row(k + 1, &mut wbuf);
                check_finite_weights(k + 1, &wbuf)?;
                transfer_row(&cur, &wbuf, cal.centering, &mut next);
                std::mem::swap(&mut cur, &mut next);
                on_row(k + 1, &cur);
            }
        }
        Direction::Backward => {
            if stop_step > anchor.step {
                return Err(CoreError::domain(format!(
                    "backward field from step {} cannot stop at {stop_step}",
                    anchor.step
                )));
            }
            for k in (stop_step..anchor.step).rev() {
                env.fill_weight_row(k + 1, &mut wbuf);
                check_finite_weights(k + 1, &wbuf)?;
                transfer_row_back(&cur, &wbuf, cal.centering, &mut next);
                std::mem::swap(&mut cur, &mut next);
                on_row(k, &cur);
            }
        }
    }
    Ok(())
}

/// Build the full field from `anchor` in `direction`: forward fields cover
/// `anchor.step ..= n_steps`, backward fields cover `0 ..= anchor.step`.
pub fn build_field(
    env: &LatticeEnvironment,
    anchor: FieldAnchor,
    direction: Direction,
) -> Result<PartitionField> {
    let cal = env.calibration();
    let stop = match direction {
        Direction::Forward => cal.n_steps,
        Direction::Backward => 0,
    };
    build_field_to(env, anchor, direction, stop)
}

/// Build the field only as far as `stop_step` (inclusive), storing all rows
/// between the anchor and the stop.
pub fn build_field_to(
    env: &LatticeEnvironment,
    anchor: FieldAnchor,
    direction: Direction,
    stop_step: usize,
) -> Result<PartitionField> {
    let width = env.width();
    let n_rows = match direction {
        Direction::Forward => stop_step.saturating_sub(anchor.step) + 1,
        Direction::Backward => anchor.step.saturating_sub(stop_step) + 1,
    };
    let first_step = match direction {
        Direction::Forward => anchor.step,
        Direction::Backward => stop_step,
    };
    let mut rows = vec![0.0; n_rows * width];
    run_field(env, &anchor, direction, stop_step, |step, row| {
        rows[(step - first_step) * width..(step - first_step + 1) * width].copy_from_slice(row);
    })?;
    Ok(PartitionField {
        direction,
        anchor,
        first_step,
        width,
        half_width: env.calibration().half_width,
        rows,
    })
}

/// Stream the recursion from `anchor` and return only the row at
/// `target_step`. Memory stays at two rows regardless of lattice size.
pub fn log_profile(
    env: &LatticeEnvironment,
    anchor: FieldAnchor,
    direction: Direction,
    target_step: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![f64::NEG_INFINITY; env.width()];
    run_field(env, &anchor, direction, target_step, |step, row| {
        if step == target_step {
            out.copy_from_slice(row);
        }
    })?;
    Ok(out)
}

/// Log partition function between two lattice nodes, streamed.
pub fn log_partition_between(
    env: &LatticeEnvironment,
    from: (usize, i64),
    to: (usize, i64),
) -> Result<f64> {
    if from.0 >= to.0 {
        return Err(CoreError::domain(format!(
            "need from.step < to.step, got {} and {}",
            from.0, to.0
        )));
    }
    let row = log_profile(env, FieldAnchor::point(from.0, from.1), Direction::Forward, to.0)?;
    let idx = (to.1 + env.calibration().half_width as i64) as usize;
    if to.1.unsigned_abs() as usize > env.calibration().half_width {
        return Err(CoreError::domain(format!("query site {} outside grid", to.1)));
    }
    Ok(row[idx])
}

/// Compose a forward and a backward field at an intermediate step:
/// `log sum_z exp(fwd + bwd) + log(2 dx)`. With a point backward anchor this
/// reproduces the direct log partition function exactly (up to float
/// rounding); with a flat backward anchor it is the point-to-line value.
pub fn compose_log(
    env: &LatticeEnvironment,
    fwd: &PartitionField,
    bwd: &PartitionField,
    step: usize,
) -> Result<f64> {
    if fwd.direction != Direction::Forward || bwd.direction != Direction::Backward {
        return Err(CoreError::domain(
            "compose_log needs a forward and a backward field, in that order".to_string(),
        ));
    }
    let (flo, fhi) = fwd.step_range();
    let (blo, bhi) = bwd.step_range();
    if step < flo || step > fhi || step < blo || step > bhi {
        return Err(CoreError::domain(format!(
            "step {step} not covered by both fields ([{flo},{fhi}] and [{blo},{bhi}])"
        )));
    }
    let fr = fwd.row(step);
    let br = bwd.row(step);
    let mut max = f64::NEG_INFINITY;
    for i in 0..fr.len() {
        let v = fr[i] + br[i];
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut sum = 0.0;
    for i in 0..fr.len() {
        let v = fr[i] + br[i];
        if v > f64::NEG_INFINITY {
            sum += (v - max).exp();
        }
    }
    Ok(max + sum.ln() + (2.0 * env.calibration().dx).ln())
}

/// Log of the standard heat kernel `p(x, t)` (Gaussian density with variance
/// `t` at `x`). `t <= 0` is a domain error.
pub fn heat_kernel_log(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(CoreError::domain(format!(
            "heat kernel needs t > 0, got {t}"
        )));
    }
    if !x.is_finite() {
        return Err(CoreError::domain(format!("heat kernel needs finite x, got {x}")));
    }
    Ok(-0.5 * (2.0 * std::f64::consts::PI * t).ln() - x * x / (2.0 * t))
}

/// Which rescaling a sheet sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetRegime {
    /// Short-time: Gaussian-scale recentring, fourth-root normalization.
    Short,
    /// Long-time: KPZ `(2/3, 1/3)` exponents with linear-in-time centering.
    Long,
}

/// A rescaled free-energy sheet sampled on a grid of scaled coordinates.
///
/// `values[i][l]` is the rescaled field between scaled start point
/// `x_grid[i]` (at time `s`) and scaled end point `y_grid[l]` (at time `t`).
/// `x_real`/`y_real` hold the scaled coordinates actually realized after
/// snapping to the lattice; `s` and `t` are the realized times. Entries are
/// `-inf` when the lattice walk cannot join the two nodes (query outside the
/// speed-limit cone).
#[derive(Debug, Clone)]
pub struct KpzSheetSample {
    pub regime: SheetRegime,
    pub s: f64,
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub x_real: Vec<f64>,
    pub y_real: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Parabolic recentring of the short-time sheet:
/// `m_t(x) = (pi t / 4)^{3/4} x^2 / (2 t)`.
pub fn short_time_parabola(t: f64, x: f64) -> f64 {
    (std::f64::consts::PI * t / 4.0).powf(0.75) * x * x / (2.0 * t)
}

fn sheet_common(
    env: &LatticeEnvironment,
    s: f64,
    t: f64,
    x_grid: &[f64],
    y_grid: &[f64],
    regime: SheetRegime,
) -> Result<KpzSheetSample> {
    let cal = env.calibration();
    if !(t > s) {
        return Err(CoreError::domain(format!("need s < t, got s = {s}, t = {t}")));
    }
    if x_grid.is_empty() || y_grid.is_empty() {
        return Err(CoreError::domain("empty sheet grid".to_string()));
    }
    let (ks, _) = map_to_lattice(cal, 0.0, s)?;
    let (kt, _) = map_to_lattice(cal, 0.0, t)?;
    if ks >= kt {
        return Err(CoreError::domain(format!(
            "times s = {s}, t = {t} snap to the same lattice step"
        )));
    }
    let s_real = ks as f64 * cal.dt;
    let t_real = kt as f64 * cal.dt;
    let span = t_real - s_real;
    // Spatial scale of the regime and the (centering, normalization) pair.
    let (space_scale, centering, norm) = match regime {
        SheetRegime::Long => (
            span.powf(2.0 / 3.0),
            span / 24.0,
            span.powf(1.0 / 3.0),
        ),
        SheetRegime::Short => (
            (std::f64::consts::PI * span / 4.0).sqrt(),
            0.5 * (2.0 * std::f64::consts::PI * span).ln(),
            (std::f64::consts::PI * span / 4.0).powf(0.25),
        ),
    };

    let mut x_real = Vec::with_capacity(x_grid.len());
    let mut y_sites = Vec::with_capacity(y_grid.len());
    let mut y_real = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let (_, j) = map_to_lattice(cal, y * space_scale, t_real)?;
        y_sites.push(j);
        y_real.push(j as f64 * cal.dx / space_scale);
    }
    let mut values = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (_, jx) = map_to_lattice(cal, x * space_scale, s_real)?;
        x_real.push(jx as f64 * cal.dx / space_scale);
        let row = log_profile(env, FieldAnchor::point(ks, jx), Direction::Forward, kt)?;
        let vals: Vec<f64> = y_sites
            .iter()
            .map(|&j| {
                let lz = row[(j + cal.half_width as i64) as usize];
                if lz == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    (lz + centering) / norm
                }
            })
            .collect();
        values.push(vals);
    }
    Ok(KpzSheetSample {
        regime,
        s: s_real,
        t: t_real,
        x_grid: x_grid.to_vec(),
        y_grid: y_grid.to_vec(),
        x_real,
        y_real,
        values,
    })
}

/// Long-time rescaled sheet:
/// `(logZ(span^{2/3} x, s; span^{2/3} y, t) + span/24) / span^{1/3}`.
pub fn sheet_long(
    env: &LatticeEnvironment,
    s: f64,
    t: f64,
    x_grid: &[f64],
    y_grid: &[f64],
) -> Result<KpzSheetSample> {
    sheet_common(env, s, t, x_grid, y_grid, SheetRegime::Long)
}

/// Short-time rescaled sheet:
/// `(logZ(b x, s; b y, t) + log sqrt(2 pi span)) / (pi span / 4)^{1/4}` with
/// `b = sqrt(pi span / 4)`. In zero noise this equals
/// `-m_span(y - x)` with the parabola from [`short_time_parabola`].
pub fn sheet_short(
    env: &LatticeEnvironment,
    s: f64,
    t: f64,
    x_grid: &[f64],
    y_grid: &[f64],
) -> Result<KpzSheetSample> {
    sheet_common(env, s, t, x_grid, y_grid, SheetRegime::Short)
}

/// The multi-time spatial process built from consecutive sheet increments.
///
/// For scaled times `0 = t_0 < t_1 < ... < t_k` (with `t_k` matching the
/// environment horizon times `epsilon`) and scaled positions
/// `x_0 = 0, x_1, ..., x_k`, the value is
///
/// ```text
/// eps^{1/3} * sum_i [ logZ(x_i eps^{-2/3}, t_i/eps; x_{i+1} eps^{-2/3}, t_{i+1}/eps)
///                     + (t_{i+1} - t_i) / (24 eps)
///                     + 1{t_{i+1} - t_i <= eps} log sqrt(2 pi (t_{i+1} - t_i)/eps) ]
/// ```
///
/// `segments[i]` carries the i-th bracket already multiplied by `eps^{1/3}`,
/// so `value` is exactly their sum.
#[derive(Debug, Clone)]
pub struct SpatialProcessSample {
    pub epsilon: f64,
    pub t_grid: Vec<f64>,
    pub x_points: Vec<f64>,
    pub t_real: Vec<f64>,
    pub x_real: Vec<f64>,
    pub segments: Vec<f64>,
    pub value: f64,
}

/// Evaluate the multi-segment spatial process at one tuple of scaled
/// positions. `t_grid` lists `t_1 .. t_k` (strictly increasing, positive);
/// `x_points` lists `x_1 .. x_k`.
pub fn evaluate_f_process(
    env: &LatticeEnvironment,
    epsilon: f64,
    t_grid: &[f64],
    x_points: &[f64],
) -> Result<SpatialProcessSample> {
    let cal = env.calibration();
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(CoreError::domain(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if t_grid.is_empty() || t_grid.len() != x_points.len() {
        return Err(CoreError::domain(
            "t_grid and x_points must be non-empty and of equal length".to_string(),
        ));
    }
    let mut prev = 0.0;
    for &t in t_grid {
        if !(t > prev) {
            return Err(CoreError::domain(
                "scaled times must be strictly increasing and positive".to_string(),
            ));
        }
        prev = t;
    }
    let t_k = *t_grid.last().unwrap();
    let horizon_needed = t_k / epsilon;
    if (cal.horizon - horizon_needed).abs() > 1e-9 * horizon_needed.max(1.0) {
        return Err(CoreError::domain(format!(
            "environment horizon {} does not match t_k/epsilon = {horizon_needed}",
            cal.horizon
        )));
    }

    let space_scale = epsilon.powf(-2.0 / 3.0);
    let eps13 = epsilon.powf(1.0 / 3.0);
    let mut times = vec![0.0];
    times.extend(t_grid.iter().map(|t| t / epsilon));
    let mut points = vec![0.0];
    points.extend(x_points.iter().map(|x| x * space_scale));

    let mut nodes = Vec::with_capacity(times.len());
    for (u, x) in times.iter().zip(points.iter()) {
        nodes.push(map_to_lattice(cal, *x, *u)?);
    }
    let mut t_real = Vec::with_capacity(t_grid.len());
    let mut x_real = Vec::with_capacity(x_points.len());
    for (k, j) in nodes.iter().skip(1) {
        t_real.push(*k as f64 * cal.dt * epsilon);
        x_real.push(*j as f64 * cal.dx / space_scale);
    }

    let mut segments = Vec::with_capacity(nodes.len() - 1);
    for i in 0..nodes.len() - 1 {
        let (k0, j0) = nodes[i];
        let (k1, j1) = nodes[i + 1];
        if k0 >= k1 {
            return Err(CoreError::domain(format!(
                "scaled times {} and {} snap to the same lattice step",
                if i == 0 { 0.0 } else { t_grid[i - 1] },
                t_grid[i]
            )));
        }
        let duration = (k1 - k0) as f64 * cal.dt;
        let lz = log_partition_between(env, (k0, j0), (k1, j1))?;
        let mut bracket = lz + duration / 24.0;
        if duration <= 1.0 + 1e-12 {
            bracket += 0.5 * (2.0 * std::f64::consts::PI * duration).ln();
        }
        segments.push(eps13 * bracket);
    }
    let value = segments.iter().sum();
    Ok(SpatialProcessSample {
        epsilon,
        t_grid: t_grid.to_vec(),
        x_points: x_points.to_vec(),
        t_real,
        x_real,
        segments,
        value,
    })
}
