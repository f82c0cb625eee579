//! Event-driven integrator for `dX = θ r^{1/β(X_-)} N(dt, dθ, dr)` driven by a
//! truncated jump stream.
//!
//! Between events the state is constant, so the recursion
//! `X_t = X_{t-} + θ r^{1/β(X_{t-})}` is exact on the truncated measure. The
//! compensator of the small jumps is zero because `H` is symmetric, so no drift
//! is added.

use crate::error::{invalid, Error, Result};
use crate::index::IndexFunction;
use crate::jumps::JumpStream;
use crate::path::SamplePath;
use crate::scalar::{distance, norm, Scalar};

/// Default index-drop threshold used by the coupling stopping times.
pub const DEFAULT_INDEX_DROP: f64 = 0.05;

/// Paths whose state norm exceeds this are aborted and reported as censored.
pub const DEFAULT_EXPLOSION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SimulationConfig<T> {
    pub beta: IndexFunction<T>,
    pub x0: Vec<T>,
    pub horizon: T,
    pub epsilon: T,
    pub seed: u64,
    /// `ε_c` in `τ_x = inf{t : β(M_t) <= β(x0) - ε_c}`.
    pub index_drop: T,
    pub explosion_limit: T,
}

impl<T: Scalar> SimulationConfig<T> {
    pub fn new(beta: IndexFunction<T>, x0: Vec<T>, horizon: T, epsilon: T, seed: u64) -> Result<Self> {
        let cfg = Self {
            beta,
            x0,
            horizon,
            epsilon,
            seed,
            index_drop: T::lit(DEFAULT_INDEX_DROP),
            explosion_limit: T::lit(DEFAULT_EXPLOSION_LIMIT),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_index_drop(mut self, eps_c: T) -> Result<Self> {
        self.index_drop = eps_c;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn validate(&self) -> Result<()> {
        crate::jumps::check_stream_params(self.horizon, self.epsilon, self.x0.len())?;
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0"));
        }
        if !(self.index_drop > T::zero()) {
            return Err(invalid("index_drop", "must be > 0"));
        }
        if !(self.explosion_limit > T::zero()) {
            return Err(invalid("explosion_limit", "must be > 0"));
        }
        truncation_bound(self).map(|_| ())
    }

    fn check_stream(&self, stream: &JumpStream<T>) -> Result<()> {
        if stream.dim() != self.dim() {
            return Err(Error::StreamMismatch(format!(
                "stream dimension {} but x0 has dimension {}",
                stream.dim(),
                self.dim()
            )));
        }
        if stream.horizon() != self.horizon {
            return Err(Error::StreamMismatch(format!(
                "stream horizon {} but configured horizon {}",
                stream.horizon(),
                self.horizon
            )));
        }
        if stream.epsilon() != self.epsilon {
            return Err(Error::StreamMismatch(format!(
                "stream cutoff {} but configured cutoff {}",
                stream.epsilon(),
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `T ε^{2/β_max - 1} / (2/β_max - 1)`: bound on the mean squared displacement
/// carried by the discarded jumps `r <= ε`.
pub fn truncation_bound<T: Scalar>(config: &SimulationConfig<T>) -> Result<T> {
    truncation_bound_for(config.beta.beta_max(), config.epsilon, config.horizon)
}

pub fn truncation_bound_for<T: Scalar>(beta_max: T, epsilon: T, horizon: T) -> Result<T> {
    if !(beta_max < T::lit(2.0)) {
        return Err(invalid("beta_max", "truncation bound needs beta_max < 2"));
    }
    let e = T::lit(2.0) / beta_max - T::one();
    Ok(horizon * epsilon.powf(e) / e)
}

/// Limits that keep the automatic cutoff affordable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBudget {
    /// Target for `truncation_bound / T`.
    pub target_ratio: f64,
    /// Expected events per path below which box-count scales run out of points.
    pub min_events_per_path: f64,
    /// Upper limit on the expected number of events `T/ε` per path.
    pub max_events_per_path: f64,
    /// Upper limit on the expected number of events summed over a batch.
    pub max_total_events: f64,
}

impl Default for EpsilonBudget {
    fn default() -> Self {
        Self {
            target_ratio: 1e-6,
            min_events_per_path: 1e6,
            max_events_per_path: 1e6,
            max_total_events: 2e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoEpsilon {
    pub epsilon: f64,
    /// Cutoff that would meet the target ratio on its own.
    pub target_epsilon: f64,
    /// True when the event budget forced a larger cutoff than the target.
    pub budget_limited: bool,
    pub truncation_bound: f64,
}

/// Chooses `ε` so that `truncation_bound <= target_ratio * T` and a path carries at
/// least `min_events_per_path` events, raised if needed so that a batch of
/// `n_paths` stays within the event budget.
pub fn auto_epsilon(beta_max: f64, horizon: f64, n_paths: usize, budget: &EpsilonBudget) -> Result<AutoEpsilon> {
    if !(beta_max > 0.0 && beta_max < 2.0) {
        return Err(invalid("beta_max", "must lie in (0, 2)"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid("horizon", "must be positive and finite"));
    }
    let e = 2.0 / beta_max - 1.0;
    let target = (budget.target_ratio * e).powf(1.0 / e);
    let floor_path = horizon / budget.max_events_per_path;
    let floor_batch = n_paths.max(1) as f64 * horizon / budget.max_total_events;
    let floor = floor_path.max(floor_batch);
    let wanted = target.min(horizon / budget.min_events_per_path);
    let epsilon = wanted.max(floor).min(0.5);
    Ok(AutoEpsilon {
        epsilon,
        target_epsilon: target,
        budget_limited: floor > wanted,
        truncation_bound: horizon * epsilon.powf(e) / e,
    })
}

fn run<T: Scalar>(
    config: &SimulationConfig<T>,
    beta: &IndexFunction<T>,
    stream: &JumpStream<T>,
) -> Result<SamplePath<T>> {
    config.check_stream(stream)?;
    let d = config.dim();
    let n = stream.len();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity((n + 1) * d);
    let mut flags = Vec::with_capacity(n + 1);
    let mut x = config.x0.clone();
    times.push(T::zero());
    states.extend_from_slice(&x);
    flags.push(false);

    for ev in stream.events() {
        let b = beta.eval(&x);
        let mag = ev.r.powf(b.recip());
        for (xi, &th) in x.iter_mut().zip(ev.theta) {
            *xi = *xi + th * mag;
        }
        let size = norm(&x);
        if !size.is_finite() || size > config.explosion_limit {
            return Err(Error::Exploded {
                time: ev.t.to_f64_lossless(),
                magnitude: size.to_f64_lossless(),
            });
        }
        // Events at identical times collapse into one path entry.
        if *times.last().unwrap() == ev.t {
            let start = states.len() - d;
            states[start..].copy_from_slice(&x);
        } else {
            times.push(ev.t);
            states.extend_from_slice(&x);
            flags.push(true);
        }
    }
    Ok(SamplePath::from_parts(times, states, flags, config.horizon, d))
}

/// Solves the SDE exactly on the given stream.
pub fn simulate<T: Scalar>(config: &SimulationConfig<T>, stream: &JumpStream<T>) -> Result<SamplePath<T>> {
    config.validate()?;
    run(config, &config.beta, stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport<T> {
    pub tau_x: Option<T>,
    pub tau_xa: Option<T>,
    pub tau_ge1: Option<T>,
    /// `min(τ_x, τ_{x,a}, τ_{>=1})` (infinite stopping times are `None`).
    pub tau_min: Option<T>,
    /// `tau_min / 2`, or the horizon when no stopping time occurs.
    pub tau: T,
    pub max_discrepancy_before_tau: T,
    pub identical_before_tau: bool,
    /// Bitwise equality of the two paths at every entry with `t <= tau_min`.
    pub identical_before_tau_min: bool,
}

fn first_drop<T: Scalar>(path: &SamplePath<T>, beta: &IndexFunction<T>, threshold: T) -> Option<T> {
    (0..path.len())
        .find(|&k| beta.eval(path.state(k)) <= threshold)
        .map(|k| path.times()[k])
}

/// Runs the original and the `β ∨ a` process on one stream and compares them up to
/// the coupling time.
pub fn simulate_coupled<T: Scalar>(
    config: &SimulationConfig<T>,
    a: T,
    stream: &JumpStream<T>,
) -> Result<(SamplePath<T>, SamplePath<T>, CouplingReport<T>)> {
    config.validate()?;
    if !(a > T::zero() && a < T::lit(2.0)) {
        return Err(invalid("a", format!("clamp level must lie in (0, 2), got {a}")));
    }
    let clamped = IndexFunction::clamped(config.beta.clone(), a)?;
    let m = run(config, &config.beta, stream)?;
    let ma = run(config, &clamped, stream)?;

    let threshold = config.beta.eval(&config.x0) - config.index_drop;
    let tau_x = first_drop(&m, &config.beta, threshold);
    let tau_xa = first_drop(&ma, &config.beta, threshold);
    let tau_ge1 = stream.first_large_jump_time();
    let tau_min = [tau_x, tau_xa, tau_ge1].into_iter().flatten().reduce(T::min);
    let tau = tau_min.map_or(config.horizon, |t| t / T::lit(2.0));
    let tau_cap = tau_min.unwrap_or(config.horizon);

    let mut max_disc = T::zero();
    let mut identical = true;
    let mut identical_min = true;
    for k in 0..m.len().min(ma.len()) {
        let t = m.times()[k];
        if t > tau_cap {
            break;
        }
        let same = m.state(k) == ma.state(k) && ma.times()[k] == t;
        identical_min &= same;
        if t <= tau {
            identical &= same;
            max_disc = max_disc.max(distance(m.state(k), ma.state(k)));
        }
    }
    let report = CouplingReport {
        tau_x,
        tau_xa,
        tau_ge1,
        tau_min,
        tau,
        max_discrepancy_before_tau: max_disc,
        identical_before_tau: identical,
        identical_before_tau_min: identical_min,
    };
    Ok((m, ma, report))
}

/// Per-slice sums of `|ΔX|^{p_k}` over small jumps (`|ΔX| < 1`, equivalently
/// `r < 1`), where a jump belongs to slice `k` when its pre-jump index lies in
/// `[2k/m, (2k+2)/m)`.
pub fn slice_jump_sums<T: Scalar>(
    path: &SamplePath<T>,
    beta: &IndexFunction<T>,
    m: usize,
    p_of_slice: impl Fn(usize) -> T,
) -> Result<Vec<T>> {
    if m < 1 {
        return Err(invalid("m", "need at least one slice"));
    }
    let p: Vec<T> = (0..m).map(&p_of_slice).collect();
    let mut sums = vec![T::zero(); m];
    let half_m = T::from_usize(m).unwrap() / T::lit(2.0);
    let mut delta = vec![T::zero(); path.dim()];
    for k in 1..path.len() {
        if !path.jump_flags()[k] {
            continue;
        }
        let (pre, post) = (path.state(k - 1), path.state(k));
        for ((dv, &b), &a) in delta.iter_mut().zip(post).zip(pre) {
            *dv = b - a;
        }
        let size = norm(&delta);
        if !(size < T::one()) {
            continue;
        }
        let slice = (beta.eval(pre) * half_m).floor().to_usize().unwrap_or(0).min(m - 1);
        sums[slice] = sums[slice] + size.powf(p[slice]);
    }
    Ok(sums)
}

/// `Σ |ΔX|^p` over the path's jumps; with `small_only` jumps of size `>= 1` are skipped.
pub fn jump_power_sum<T: Scalar>(path: &SamplePath<T>, p: T, small_only: bool) -> T {
    let mut total = T::zero();
    for k in 1..path.len() {
        if !path.jump_flags()[k] {
            continue;
        }
        let size = distance(path.state(k), path.state(k - 1));
        if small_only && !(size < T::one()) {
            continue;
        }
        total = total + size.powf(p);
    }
    total
}
