//! Sojourn times `T_{t0}(a, s) = ∫_{t0}^{t0+s} 1{|M_t - M_{t0}| <= a} dt`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::path::SamplePath;
use crate::scalar::{distance, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SojournStats {
    pub t0: f64,
    pub a: f64,
    pub s: f64,
    pub value: f64,
}

/// Lebesgue time in `[start, end]` spent in the closed ball `B(center, a)`, exact
/// for the piecewise-constant path.
pub fn time_in_ball<T: Scalar>(path: &SamplePath<T>, center: &[T], a: T, start: T, end: T) -> Result<T> {
    if center.len() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: path.dim(),
            got: center.len(),
        });
    }
    let range = path.entries_in(start, end)?;
    let times = path.times();
    let mut total = T::zero();
    for k in range {
        let lo = times[k].max(start);
        let hi = if k + 1 < times.len() { times[k + 1].min(end) } else { end };
        if hi > lo && distance(path.state(k), center) <= a {
            total = total + (hi - lo);
        }
    }
    Ok(total)
}

/// `T_{t0}(a, s)`.
pub fn sojourn<T: Scalar>(path: &SamplePath<T>, t0: T, a: T, s: T) -> Result<SojournStats> {
    if !(a >= T::zero()) || !(s >= T::zero()) {
        return Err(invalid("a, s", "radius and window must be non-negative"));
    }
    let center = path.value_at(t0)?.to_vec();
    let value = time_in_ball(path, &center, a, t0, t0 + s)?;
    Ok(SojournStats {
        t0: t0.to_f64_lossless(),
        a: a.to_f64_lossless(),
        s: s.to_f64_lossless(),
        value: value.to_f64_lossless(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SojournTailRow {
    pub lambda: f64,
    /// `λ a s^{1 - 1/β}`.
    pub threshold: f64,
    /// Fraction of samples with `T >= threshold`.
    pub empirical: f64,
    /// `exp(-λ / (2C))` with `C = 2 / (1 - 1/β)`.
    pub bound: f64,
}

/// Empirical tail of sojourn samples against the exponential bound, for index
/// `beta > 1`.
pub fn sojourn_tail(values: &[f64], a: f64, s: f64, beta: f64, lambdas: &[f64]) -> Result<Vec<SojournTailRow>> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(invalid("beta", "the tail bound needs 1 < beta < 2"));
    }
    if values.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let c = 2.0 / (1.0 - 1.0 / beta);
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let threshold = lambda * a * s.powf(1.0 - 1.0 / beta);
            let hits = values.iter().filter(|&&v| v >= threshold).count();
            SojournTailRow {
                lambda,
                threshold,
                empirical: hits as f64 / values.len() as f64,
                bound: (-lambda / (2.0 * c)).exp(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_path_stays() {
        let p = SamplePath::constant(&[1.0f64, 2.0], 1.0).unwrap();
        assert_eq!(sojourn(&p, 0.25, 0.1, 0.5).unwrap().value, 0.5);
    }

    #[test]
    fn leaving_at_first_event() {
        let p = SamplePath::new(vec![0.0, 0.35], vec![0.0, 5.0], vec![false, true], 1.0, 1).unwrap();
        let v = sojourn(&p, 0.25, 1.0, 0.5).unwrap().value;
        assert!((v - 0.1).abs() < 1e-15);
        assert!(sojourn(&p, 0.75, 1.0, 0.5).is_err());
    }

    #[test]
    fn additivity_with_fixed_center() {
        let p = SamplePath::new(
            vec![0.0, 0.125, 0.25, 0.5, 0.625],
            vec![0.0, 0.5, 2.0, 0.25, -3.0],
            vec![false, true, true, true, true],
            1.0,
            1,
        )
        .unwrap();
        let c = [0.0];
        let whole = time_in_ball(&p, &c, 1.0, 0.0, 0.75).unwrap();
        let parts = time_in_ball(&p, &c, 1.0, 0.0, 0.375).unwrap() + time_in_ball(&p, &c, 1.0, 0.375, 0.75).unwrap();
        assert_eq!(whole, parts);
        assert_eq!(whole, 0.25 + 0.125);
    }

    #[test]
    fn tail_rows() {
        let rows = sojourn_tail(&[0.0, 0.5, 1.0, 2.0], 1.0, 1.0, 1.5, &[0.75]).unwrap();
        assert_eq!(rows[0].empirical, 0.5);
        assert!((rows[0].bound - (-0.75f64 / 12.0).exp()).abs() < 1e-15);
    }
}
