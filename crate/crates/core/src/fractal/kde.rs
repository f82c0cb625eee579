//! Gaussian kernel density estimates of one-dimensional transition densities and
//! the `t^{-d/α}` heat-kernel growth check.

use serde::Serialize;

use super::stats::{ols, quantile_sorted};
use crate::error::{invalid, Error, Result};

/// Fewest endpoints accepted per time.
pub const MIN_KDE_SAMPLES: usize = 10_000;

const GRID_POINTS: usize = 1024;
const KERNEL_REACH: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    sorted: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde {
    /// Silverman's rule of thumb `0.9 min(sd, IQR/1.34) n^{-1/5}` computed on the
    /// central 98% of the sample; the density itself uses every point.
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kde sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let cut = (0.01 * n as f64).floor() as usize;
        let core = &sorted[cut..n - cut];
        let m = core.len() as f64;
        let mean = core.iter().sum::<f64>() / m;
        let sd = (core.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0)).sqrt();
        let iqr = quantile_sorted(core, 0.75) - quantile_sorted(core, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 0.0) {
            return Err(invalid("samples", "degenerate sample: zero spread"));
        }
        let bandwidth = 0.9 * spread * (n as f64).powf(-0.2);
        Ok(Self { sorted, bandwidth })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Density at `y`; kernels beyond 8 bandwidths are ignored.
    pub fn density(&self, y: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted.partition_point(|&v| v < y - KERNEL_REACH * h);
        let hi = self.sorted.partition_point(|&v| v <= y + KERNEL_REACH * h);
        let s: f64 = self.sorted[lo..hi]
            .iter()
            .map(|&v| {
                let z = (y - v) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        s / (self.sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Maximum of the density over a grid spanning the central 98% of the sample.
    pub fn sup_density(&self) -> f64 {
        let a = quantile_sorted(&self.sorted, 0.01);
        let b = quantile_sorted(&self.sorted, 0.99);
        let step = ((b - a) / (GRID_POINTS - 1) as f64).min(self.bandwidth / 4.0);
        let count = (((b - a) / step).ceil() as usize + 1).min(1 << 20);
        (0..count).map(|k| self.density(a + k as f64 * step)).fold(0.0, f64::max)
    }

    /// Trapezoid integral of the density over every region within reach of a sample.
    pub fn mass(&self) -> f64 {
        let h = self.bandwidth;
        let step = h / 4.0;
        let reach = KERNEL_REACH * h;
        // Integrate over the union of [x - reach, x + reach], merged into runs.
        let mut total = 0.0;
        let mut i = 0;
        let s = &self.sorted;
        while i < s.len() {
            let start = s[i] - reach;
            let mut end = s[i] + reach;
            while i + 1 < s.len() && s[i + 1] - reach <= end {
                i += 1;
                end = s[i] + reach;
            }
            let k = ((end - start) / step).ceil().max(1.0) as usize;
            let dx = (end - start) / k as f64;
            let mut run = 0.5 * (self.density(start) + self.density(end));
            for j in 1..k {
                run += self.density(start + j as f64 * dx);
            }
            total += run * dx;
            i += 1;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatKernelRow {
    pub t: f64,
    pub sup_density: f64,
    pub bandwidth: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatKernelReport {
    pub rows: Vec<HeatKernelRow>,
    /// Slope of `log sup p(t, ·)` against `log t`.
    pub slope: f64,
    /// `-d/α`.
    pub predicted_slope: f64,
    /// `slope >= -d/α - 0.15`.
    pub passes: bool,
}

/// Slack below `-d/α` tolerated for the fitted slope.
pub const HEAT_KERNEL_SLACK: f64 = 0.15;

/// Fits the sup-density growth from one-dimensional endpoint samples per time.
pub fn heat_kernel_from_samples(samples: &[(f64, Vec<f64>)], alpha: f64) -> Result<HeatKernelReport> {
    if samples.len() < 2 {
        return Err(invalid("t_grid", "need at least two times"));
    }
    let mut rows = Vec::with_capacity(samples.len());
    for (t, xs) in samples {
        if !(*t > 0.0 && *t < 1.0) {
            return Err(invalid("t_grid", "times must lie in (0, 1)"));
        }
        if xs.len() < MIN_KDE_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_KDE_SAMPLES,
                got: xs.len(),
            });
        }
        let kde = Kde::new(xs)?;
        rows.push(HeatKernelRow {
            t: *t,
            sup_density: kde.sup_density(),
            bandwidth: kde.bandwidth,
            n: xs.len(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.sup_density.ln()).collect();
    let fit = ols(&x, &y).ok_or_else(|| invalid("t_grid", "times must be distinct"))?;
    let predicted = -1.0 / alpha;
    Ok(HeatKernelReport {
        rows,
        slope: fit.slope,
        predicted_slope: predicted,
        passes: fit.slope >= predicted - HEAT_KERNEL_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect()
    }

    #[test]
    fn gaussian_peak_and_mass() {
        let k = Kde::new(&normal(20_000, 1.0, 1)).unwrap();
        let peak = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((k.sup_density() - peak).abs() / peak < 0.05);
        assert!((k.mass() - 1.0).abs() < 0.02);
    }

    #[test]
    fn scaling_of_gaussian_family() {
        // Brownian scaling: sup density ∝ t^{-1/2}.
        let s: Vec<(f64, Vec<f64>)> = [0.01, 0.04, 0.16]
            .iter()
            .enumerate()
            .map(|(i, &t): (usize, &f64)| (t, normal(10_000, t.sqrt(), i as u64)))
            .collect();
        let r = heat_kernel_from_samples(&s, 2.0).unwrap();
        assert!((r.slope + 0.5).abs() < 0.05);
        assert!(r.passes);
    }

    #[test]
    fn rejects_small_samples() {
        assert!(heat_kernel_from_samples(&[(0.1, vec![0.0; 10]), (0.2, vec![0.0; 10])], 1.5).is_err());
    }
}
