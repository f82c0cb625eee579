//! Box-counting estimators for the range `M(I)` and the graph `{(t, M_t)}`.

use serde::Serialize;

use super::stats::ols;
use crate::error::{invalid, Error, Result};
use crate::path::SamplePath;
use crate::scalar::Scalar;

/// Largest dyadic depth accepted by the graph estimators.
pub const MAX_GRAPH_DEPTH: u32 = 24;

/// Which scales enter the log–log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowRule {
    pub drop_coarse: usize,
    pub drop_fine: usize,
    /// Scales at or below this are excluded (resolution floor).
    pub min_scale: f64,
    /// Scales whose count exceeds this are excluded: a finite point set
    /// saturates well before every point has a box of its own.
    pub max_count: Option<u64>,
}

impl Default for WindowRule {
    fn default() -> Self {
        Self {
            drop_coarse: 2,
            drop_fine: 2,
            min_scale: 0.0,
            max_count: None,
        }
    }
}

/// Counts above `n_points / SATURATION_DIVISOR` are treated as saturated.
pub const SATURATION_DIVISOR: u64 = 64;

impl WindowRule {
    /// Default trimming plus the resolution floor of a path with `n_points`
    /// states whose neglected small jumps move it by about `displacement`.
    pub fn for_resolution(n_points: usize, displacement: f64) -> Self {
        Self {
            min_scale: resolution_floor(n_points, displacement),
            max_count: Some((n_points as u64 / SATURATION_DIVISOR).max(1)),
            ..Self::default()
        }
    }
}

/// Smallest usable box size: the larger of `1/n_points` and `displacement`.
pub fn resolution_floor(n_points: usize, displacement: f64) -> f64 {
    (1.0 / n_points.max(1) as f64).max(displacement)
}

/// Typical size of the jumps a cutoff `ε` discards, `ε^{1/β_max}`.
pub fn displacement_scale(epsilon: f64, beta_max: f64) -> f64 {
    epsilon.powf(1.0 / beta_max)
}

/// Dyadic scales from `1` down to the finest power of two above the resolution floor.
pub fn default_range_scales(n_points: usize, displacement: f64) -> Vec<f64> {
    let floor = resolution_floor(n_points, displacement);
    let fine = (-floor.log2()).ceil() as i32 - 1;
    dyadic_scales(0, fine.clamp(4, 40))
}

/// Graph depth for a path with `n_points` states: `log2(n) - 4`, within `[4, 24]`.
pub fn default_graph_depth(n_points: usize) -> u32 {
    let lg = (n_points.max(1) as f64).log2().floor() as i64 - 4;
    lg.clamp(4, MAX_GRAPH_DEPTH as i64) as u32
}

/// R² below this flags the fit.
pub const MIN_R2: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    /// Box sizes, strictly decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub fit_r2: f64,
    /// `[δ_min, δ_max]` of the scales used in the fit.
    pub scale_window: (f64, f64),
    /// Index range `lo..hi` into `scales` used in the fit.
    pub window: (usize, usize),
    /// The set is a single box at every fitted scale.
    pub degenerate: bool,
    pub poor_fit: bool,
}

/// Fits `log N_δ` against `log 1/δ` over the window selected by `rule`.
pub fn fit_dimension(scales: Vec<f64>, counts: Vec<u64>, rule: &WindowRule) -> Result<DimensionEstimate> {
    if scales.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: scales.len(),
            got: counts.len(),
        });
    }
    let n = scales.len();
    let hi = n.saturating_sub(rule.drop_fine);
    let lo = rule.drop_coarse.min(hi);
    let cap = rule.max_count.unwrap_or(u64::MAX);
    let idx: Vec<usize> = (lo..hi)
        .filter(|&i| scales[i] > rule.min_scale && counts[i] <= cap)
        .collect();
    if idx.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: idx.len(),
        });
    }
    let (first, last) = (idx[0], *idx.last().unwrap());
    let degenerate = idx.iter().all(|&i| counts[i] <= 1);
    let (slope, intercept, r2) = if degenerate {
        (0.0, 0.0, 1.0)
    } else {
        let x: Vec<f64> = idx.iter().map(|&i| -scales[i].ln()).collect();
        let y: Vec<f64> = idx.iter().map(|&i| (counts[i].max(1) as f64).ln()).collect();
        let f = ols(&x, &y).ok_or(Error::InsufficientSamples { needed: 2, got: 1 })?;
        (f.slope, f.intercept, f.r2)
    };
    Ok(DimensionEstimate {
        scale_window: (scales[last], scales[first]),
        window: (first, last + 1),
        scales,
        counts,
        slope,
        intercept,
        fit_r2: r2,
        degenerate,
        poor_fit: r2 < MIN_R2,
    })
}

/// `2^{-coarse}, ..., 2^{-fine}`; exponents may be negative.
pub fn dyadic_scales(coarse: i32, fine: i32) -> Vec<f64> {
    (coarse..=fine).map(|k| 2f64.powi(-k)).collect()
}

/// Ratio of each scale to the next, checking that the scales are strictly
/// decreasing and nested.
fn nesting_ratios(scales: &[f64]) -> Result<Vec<i64>> {
    if scales.is_empty() {
        return Err(Error::InvalidScales("no scales given".into()));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidScales("scales must be positive and finite".into()));
    }
    scales
        .windows(2)
        .map(|w| {
            let r = w[0] / w[1];
            let k = r.round();
            if !(w[0] > w[1]) || (r - k).abs() > 1e-9 * r {
                Err(Error::InvalidScales(format!("{} / {} is not an integer > 1", w[0], w[1])))
            } else {
                Ok(k as i64)
            }
        })
        .collect()
}

#[inline]
fn div_floor(a: i64, m: i64) -> i64 {
    a.div_euclid(m)
}

const CELL_LIMIT: f64 = 4.0e18;

fn cell_index(v: f64, offset: f64, delta: f64) -> Result<i64> {
    let c = ((v - offset) / delta).floor();
    if !(c.abs() < CELL_LIMIT) {
        return Err(Error::Malformed(format!("coordinate {v} too large for grid size {delta}")));
    }
    Ok(c as i64)
}

/// Distinct keys after each successive coarsening, finest first.
fn level_counts<K: Ord + Copy>(mut keys: Vec<K>, ratios_fine_to_coarse: &[i64], coarsen: impl Fn(K, i64) -> K) -> Vec<u64> {
    keys.sort_unstable();
    keys.dedup();
    let mut out = vec![keys.len() as u64];
    for &m in ratios_fine_to_coarse {
        for k in keys.iter_mut() {
            *k = coarsen(*k, m);
        }
        keys.sort_unstable();
        keys.dedup();
        out.push(keys.len() as u64);
    }
    out
}

/// Number of grid cells of side `δ` hit by a finite point set, for every `δ` in
/// `scales` (strictly decreasing, each an integer multiple of the next). The grid
/// is anchored at `offset` (the origin by default).
pub fn range_counts<T: Scalar>(points: &[T], dim: usize, scales: &[f64], offset: Option<&[f64]>) -> Result<Vec<u64>> {
    let ratios = nesting_ratios(scales)?;
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(invalid("dim", "point buffer is not a whole number of points"));
    }
    if points.is_empty() {
        return Ok(vec![0; scales.len()]);
    }
    let zero = vec![0.0; dim];
    let offset = offset.unwrap_or(&zero);
    if offset.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: offset.len(),
        });
    }
    let finest = *scales.last().unwrap();
    let rev: Vec<i64> = ratios.iter().rev().copied().collect();
    let mut counts = match dim {
        1 => {
            let keys = points
                .iter()
                .map(|v| cell_index(v.to_f64_lossless(), offset[0], finest))
                .collect::<Result<Vec<_>>>()?;
            level_counts(keys, &rev, div_floor)
        }
        2..=4 => {
            let mut keys = Vec::with_capacity(points.len() / dim);
            for p in points.chunks_exact(dim) {
                let mut k = [0i64; 4];
                for i in 0..dim {
                    k[i] = cell_index(p[i].to_f64_lossless(), offset[i], finest)?;
                }
                keys.push(k);
            }
            level_counts(keys, &rev, |k, m| k.map(|c| div_floor(c, m)))
        }
        _ => return Err(Error::Unsupported(format!("range box counting in dimension {dim} (max 4)"))),
    };
    counts.reverse();
    Ok(counts)
}

/// Options for [`box_count_range_with`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RangeOptions {
    pub window: WindowRule,
    /// Grid anchor, one coordinate per dimension.
    pub offset: Option<Vec<f64>>,
    /// Restrict to `M([start, end])`; the whole horizon by default.
    pub interval: Option<(f64, f64)>,
}

/// Box-counting dimension of the range with the default window.
pub fn box_count_range<T: Scalar>(path: &SamplePath<T>, scales: &[f64]) -> Result<DimensionEstimate> {
    box_count_range_with(path, scales, &RangeOptions::default())
}

pub fn box_count_range_with<T: Scalar>(
    path: &SamplePath<T>,
    scales: &[f64],
    opts: &RangeOptions,
) -> Result<DimensionEstimate> {
    let states = match opts.interval {
        None => path.states_flat(),
        Some((a, b)) => {
            let r = path.entries_in(T::lit(a), T::lit(b))?;
            &path.states_flat()[r.start() * path.dim()..(r.end() + 1) * path.dim()]
        }
    };
    let counts = range_counts(states, path.dim(), scales, opts.offset.as_deref())?;
    fit_dimension(scales.to_vec(), counts, &opts.window)
}

fn check_depth(max_depth: u32) -> Result<()> {
    if max_depth > MAX_GRAPH_DEPTH {
        return Err(invalid("max_depth", format!("must be <= {MAX_GRAPH_DEPTH}")));
    }
    Ok(())
}

/// Entry ranges in force on each closed column `[k/n, (k+1)/n]` of normalized time.
fn column_ranges(times: &[f64], n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut hi = 0usize;
    for k in 0..n {
        let end = (k + 1) as f64 / n as f64;
        while hi + 1 < times.len() && times[hi + 1] <= end {
            hi += 1;
        }
        out.push((lo, hi));
        // The next column starts at `end`: the entry in force there.
        lo = hi;
    }
    out
}

fn normalized_times<T: Scalar>(path: &SamplePath<T>) -> Vec<f64> {
    let h = path.horizon().to_f64_lossless();
    path.times().iter().map(|t| t.to_f64_lossless() / h).collect()
}

/// Oscillation covering of the graph in `d = 1`:
/// `N_j = Σ_k (ceil(2^j Osc(M, I_{j,k})) + 2)` for `j = 0..=max_depth`, over the
/// closed dyadic intervals of the horizon rescaled to `[0, 1]`.
pub fn graph_oscillation_counts<T: Scalar>(path: &SamplePath<T>, max_depth: u32) -> Result<Vec<u64>> {
    check_depth(max_depth)?;
    if path.dim() != 1 {
        return Err(Error::Unsupported("the oscillation covering is one-dimensional".into()));
    }
    let times = normalized_times(path);
    let x: Vec<f64> = path.states_flat().iter().map(|v| v.to_f64_lossless()).collect();
    let n = 1usize << max_depth;
    let mut lo_v = Vec::with_capacity(n);
    let mut hi_v = Vec::with_capacity(n);
    for (a, b) in column_ranges(&times, n) {
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &x[a..=b] {
            mn = mn.min(v);
            mx = mx.max(v);
        }
        lo_v.push(mn);
        hi_v.push(mx);
    }
    let mut counts = vec![0u64; max_depth as usize + 1];
    for j in (0..=max_depth).rev() {
        let scale = 2f64.powi(j as i32);
        let total: f64 = lo_v
            .iter()
            .zip(&hi_v)
            .map(|(a, b)| ((b - a) * scale).ceil() + 2.0)
            .sum();
        counts[j as usize] = total as u64;
        if j > 0 {
            lo_v = lo_v.chunks_exact(2).map(|c| c[0].min(c[1])).collect();
            hi_v = hi_v.chunks_exact(2).map(|c| c[0].max(c[1])).collect();
        }
    }
    Ok(counts)
}

/// Exact grid count of the graph: for each `j`, the number of cubes of side `2^-j`
/// in `[0, 1] x R^d` (normalized time) containing a point `(t, M_t)`. Each time
/// column contributes the distinct spatial cells of the states in force on it.
pub fn graph_grid_counts<T: Scalar>(path: &SamplePath<T>, max_depth: u32) -> Result<Vec<u64>> {
    check_depth(max_depth)?;
    let d = path.dim();
    if d > 4 {
        return Err(Error::Unsupported(format!("graph box counting in dimension {d} (max 4)")));
    }
    let times = normalized_times(path);
    let n = 1usize << max_depth;
    let delta = 1.0 / n as f64;
    // Cubes nest across depths, so the finest level determines all coarser ones.
    let mut keys: Vec<[i64; 5]> = Vec::with_capacity(path.len() + n);
    let mut cell = vec![[0i64; 4]; path.len()];
    for (c, x) in cell.iter_mut().zip(path.states()) {
        for i in 0..d {
            c[i] = cell_index(x[i].to_f64_lossless(), 0.0, delta)?;
        }
    }
    for (col, (a, b)) in column_ranges(&times, n).into_iter().enumerate() {
        for c in &cell[a..=b] {
            keys.push([col as i64, c[0], c[1], c[2], c[3]]);
        }
    }
    let ratios = vec![2i64; max_depth as usize];
    let mut counts = level_counts(keys, &ratios, |k, _| k.map(|v| v >> 1));
    counts.reverse();
    Ok(counts)
}

/// Graph box-counting dimension over depths `0..=max_depth`, with scales `2^-j`.
/// In `d = 1` the counts come from the oscillation covering; in `d >= 2` from the
/// exact grid count.
pub fn box_count_graph<T: Scalar>(path: &SamplePath<T>, max_depth: u32) -> Result<DimensionEstimate> {
    box_count_graph_with(path, max_depth, &WindowRule::default())
}

pub fn box_count_graph_with<T: Scalar>(path: &SamplePath<T>, max_depth: u32, rule: &WindowRule) -> Result<DimensionEstimate> {
    let counts = if path.dim() == 1 {
        graph_oscillation_counts(path, max_depth)?
    } else {
        graph_grid_counts(path, max_depth)?
    };
    let scales = dyadic_scales(0, max_depth as i32);
    fit_dimension(scales, counts, rule)
}
