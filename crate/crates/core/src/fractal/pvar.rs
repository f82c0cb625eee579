//! Strong p-variation along dyadic partitions and jump power sums.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::path::SamplePath;
use crate::scalar::{distance, Scalar};
use crate::sde::jump_power_sum;

/// Deepest dyadic partition accepted.
pub const MAX_PVAR_DEPTH: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PVariationProfile {
    pub p_grid: Vec<f64>,
    pub depths: Vec<u32>,
    /// `v_values[i][k]`: `V_{p_i}` over the partition of depth `depths[k]`.
    pub v_values: Vec<Vec<f64>>,
    /// `S_{p_i}`: sum of `|ΔM|^{p_i}` over all stored jumps.
    pub s_values: Vec<f64>,
    /// Smallest `p` whose `V_p` is non-increasing over the last three depths.
    pub p_hat: Option<f64>,
    /// Smallest `p` whose `V_p` increments are non-increasing over the last
    /// three steps (see [`PVariationProfile::decelerates`]).
    pub p_hat_decelerating: Option<f64>,
}

impl PVariationProfile {
    /// `V_p` non-increasing over the last three depths.
    pub fn stabilizes(&self, i: usize) -> bool {
        last_three(&self.v_values[i]).is_some_and(|[a, b, c]| a >= b && b >= c)
    }

    /// `V_p` strictly increasing over the last three depths.
    pub fn grows(&self, i: usize) -> bool {
        last_three(&self.v_values[i]).is_some_and(|[a, b, c]| a < b && b < c)
    }
}

impl PVariationProfile {
    /// Increments `V_p(j+1) - V_p(j)` non-increasing over the last three steps
    /// (four depths). On a pure-jump path `V_p` approaches the jump sum from below
    /// under refinement, so boundedness shows up as shrinking increments rather
    /// than as a decreasing sequence.
    pub fn decelerates(&self, i: usize) -> bool {
        let v = &self.v_values[i];
        let n = v.len();
        if n < 4 {
            return false;
        }
        let d: Vec<f64> = v[n - 4..].windows(2).map(|w| w[1] - w[0]).collect();
        d[0] >= d[1] && d[1] >= d[2]
    }
}

fn last_three(v: &[f64]) -> Option<[f64; 3]> {
    let n = v.len();
    (n >= 3).then(|| [v[n - 3], v[n - 2], v[n - 1]])
}

/// Values `M(k T / 2^j)` for `k = 0..=2^j`, flat.
fn dyadic_samples<T: Scalar>(path: &SamplePath<T>, j: u32) -> Vec<f64> {
    let n = 1usize << j;
    let h = path.horizon().to_f64_lossless();
    let times = path.times();
    let d = path.dim();
    let mut out = Vec::with_capacity((n + 1) * d);
    let mut idx = 0usize;
    for k in 0..=n {
        let t = T::lit(h * k as f64 / n as f64);
        while idx + 1 < times.len() && times[idx + 1] <= t {
            idx += 1;
        }
        out.extend(path.state(idx).iter().map(|v| v.to_f64_lossless()));
    }
    out
}

/// `V_p(M, P_j) = Σ_k |M(t_{k+1}) - M(t_k)|^p` over dyadic partitions of `[0, T]`
/// for every `p` in `p_grid` and depth in `depths`, together with the jump sums
/// `S_p`.
pub fn p_variation<T: Scalar>(path: &SamplePath<T>, p_grid: &[f64], depths: &[u32]) -> Result<PVariationProfile> {
    if p_grid.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(invalid("p_grid", "exponents must be positive"));
    }
    if depths.iter().any(|&j| j > MAX_PVAR_DEPTH) {
        return Err(invalid("depths", format!("must be <= {MAX_PVAR_DEPTH}")));
    }
    let d = path.dim();
    let mut v_values = vec![Vec::with_capacity(depths.len()); p_grid.len()];
    for &j in depths {
        let samples = dyadic_samples(path, j);
        let inc: Vec<f64> = samples
            .chunks_exact(d)
            .zip(samples.chunks_exact(d).skip(1))
            .map(|(a, b)| distance(a, b))
            .filter(|&v| v > 0.0)
            .collect();
        for (i, &p) in p_grid.iter().enumerate() {
            v_values[i].push(inc.iter().map(|v| v.powf(p)).sum());
        }
    }
    let s_values = p_grid
        .iter()
        .map(|&p| jump_power_sum(path, T::lit(p), false).to_f64_lossless())
        .collect();
    let mut profile = PVariationProfile {
        p_grid: p_grid.to_vec(),
        depths: depths.to_vec(),
        v_values,
        s_values,
        p_hat: None,
        p_hat_decelerating: None,
    };
    let mut order: Vec<usize> = (0..p_grid.len()).collect();
    order.sort_by(|&a, &b| p_grid[a].total_cmp(&p_grid[b]));
    profile.p_hat = order.iter().find(|&&i| profile.stabilizes(i)).map(|&i| p_grid[i]);
    profile.p_hat_decelerating = order.iter().find(|&&i| profile.decelerates(i)).map(|&i| p_grid[i]);
    Ok(profile)
}
