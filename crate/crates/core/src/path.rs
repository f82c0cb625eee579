//! Piecewise-constant càdlàg sample paths.

use crate::error::{invalid, Error, Result};
use crate::index::IndexFunction;
use crate::scalar::{distance, Scalar};

/// A càdlàg, piecewise-constant path in `R^d` on `[0, horizon]`.
///
/// Entry `k` holds the state in force on `[times[k], times[k+1])`. States are stored
/// flat, `dim` values per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    times: Vec<T>,
    states: Vec<T>,
    jump_flags: Vec<bool>,
    horizon: T,
    dim: usize,
}

impl<T: Scalar> SamplePath<T> {
    /// Builds a path, checking every structural invariant.
    pub fn new(
        times: Vec<T>,
        states: Vec<T>,
        jump_flags: Vec<bool>,
        horizon: T,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be >= 1"));
        }
        if times.is_empty() {
            return Err(invalid("times", "a path needs at least its initial entry"));
        }
        if states.len() != times.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: times.len() * dim,
                got: states.len(),
            });
        }
        if jump_flags.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: jump_flags.len(),
            });
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(invalid("horizon", "must be positive and finite"));
        }
        if times[0] != T::zero() {
            return Err(invalid("times", "path must start at t = 0"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("times", "times must be strictly increasing"));
        }
        if times[times.len() - 1] > horizon {
            return Err(invalid("times", "times exceed the horizon"));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path state"));
        }
        Ok(Self::from_parts(times, states, jump_flags, horizon, dim))
    }

    pub(crate) fn from_parts(
        times: Vec<T>,
        states: Vec<T>,
        jump_flags: Vec<bool>,
        horizon: T,
        dim: usize,
    ) -> Self {
        Self {
            times,
            states,
            jump_flags,
            horizon,
            dim,
        }
    }

    /// The path that sits at `x0` for the whole horizon.
    pub fn constant(x0: &[T], horizon: T) -> Result<Self> {
        Self::new(vec![T::zero()], x0.to_vec(), vec![false], horizon, x0.len())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn jump_flags(&self) -> &[bool] {
        &self.jump_flags
    }

    /// All states, `dim` consecutive values per entry.
    pub fn states_flat(&self) -> &[T] {
        &self.states
    }

    #[inline]
    pub fn state(&self, k: usize) -> &[T] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    /// Number of entries flagged as jumps.
    pub fn jump_count(&self) -> usize {
        self.jump_flags.iter().filter(|&&j| j).count()
    }

    /// Jump increments `(k, X_{t_k} - X_{t_k-})` for every flagged entry.
    pub fn jumps(&self) -> impl Iterator<Item = (usize, Vec<T>)> + '_ {
        (1..self.len()).filter(|&k| self.jump_flags[k]).map(move |k| {
            let delta = self
                .state(k)
                .iter()
                .zip(self.state(k - 1))
                .map(|(&a, &b)| a - b)
                .collect();
            (k, delta)
        })
    }

    /// Index of the entry in force at `t`: the largest `k` with `times[k] <= t`.
    #[inline]
    pub fn index_at(&self, t: T) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !(t >= T::zero() && t <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                t: t.to_f64_lossless(),
                horizon: self.horizon.to_f64_lossless(),
            });
        }
        Ok(())
    }

    fn check_interval(&self, start: T, end: T) -> Result<()> {
        if !(start <= end) {
            return Err(Error::InvalidInterval {
                start: start.to_f64_lossless(),
                end: end.to_f64_lossless(),
            });
        }
        self.check_time(start)?;
        self.check_time(end)
    }

    /// Right-continuous lookup of `X_t`.
    pub fn value_at(&self, t: T) -> Result<&[T]> {
        self.check_time(t)?;
        Ok(self.state(self.index_at(t)))
    }

    /// Entries visited on `[start, end]`: the one in force at `start` through the one in
    /// force at `end`.
    pub fn entries_in(&self, start: T, end: T) -> Result<std::ops::RangeInclusive<usize>> {
        self.check_interval(start, end)?;
        Ok(self.index_at(start)..=self.index_at(end))
    }

    /// `sup { |X_u - X_v| : u, v in [start, end] }`, exact over the stored states.
    pub fn oscillation(&self, start: T, end: T) -> Result<T> {
        if !(start < end) {
            return Err(Error::InvalidInterval {
                start: start.to_f64_lossless(),
                end: end.to_f64_lossless(),
            });
        }
        let range = self.entries_in(start, end)?;
        Ok(diameter(&self.states[range.start() * self.dim..(range.end() + 1) * self.dim], self.dim))
    }

    /// `sup_{s in [start, end]} beta(X_s)`, exact because the path only takes its stored values.
    pub fn sup_index_along(&self, beta: &IndexFunction<T>, start: T, end: T) -> Result<T> {
        let range = self.entries_in(start, end)?;
        Ok(range
            .map(|k| beta.eval(self.state(k)))
            .fold(T::neg_infinity(), T::max))
    }

    /// Largest `|X_t|` along the path.
    pub fn max_norm(&self) -> T {
        self.states()
            .map(crate::scalar::norm)
            .fold(T::zero(), T::max)
    }
}

/// Diameter of a finite point set given as flat coordinates.
pub(crate) fn diameter<T: Scalar>(flat: &[T], dim: usize) -> T {
    let n = flat.len() / dim;
    if n <= 1 {
        return T::zero();
    }
    match dim {
        1 => {
            let (lo, hi) = flat
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            hi - lo
        }
        2 => {
            let hull = convex_hull_2d(flat);
            pairwise_max(&hull, 2)
        }
        _ => pairwise_max(flat, dim),
    }
}

fn pairwise_max<T: Scalar>(flat: &[T], dim: usize) -> T {
    let pts: Vec<&[T]> = flat.chunks_exact(dim).collect();
    let mut best = T::zero();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(distance(pts[i], pts[j]));
        }
    }
    best
}

/// Andrew's monotone chain; returns hull vertices flat.
fn convex_hull_2d<T: Scalar>(flat: &[T]) -> Vec<T> {
    let mut pts: Vec<(T, T)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    pts.dedup();
    if pts.len() <= 2 {
        return pts.into_iter().flat_map(|(x, y)| [x, y]).collect();
    }
    let cross = |o: (T, T), a: (T, T), b: (T, T)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(T, T)> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull.into_iter().flat_map(|(x, y)| [x, y]).collect()
}
