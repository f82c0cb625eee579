//! Truncated Poisson random measure on `R+ x S^{d-1} x R+` with intensity
//! `dt ⊗ H(dθ) ⊗ r^{-2} dr`, restricted to radial marks `r > ε`.
//!
//! On `(0, T]` the restricted measure has finitely many atoms: their number is
//! Poisson with mean `T / ε` (because `∫_ε^∞ r^{-2} dr = 1/ε`), times are i.i.d.
//! uniform, directions are uniform on the sphere and marks satisfy `P(r > m) = ε/m`.
//!
//! Draw order for a stream (fixed, so streams are reproducible from their seed):
//! the event count, then all event times, then per event (in time order) the
//! direction followed by the radial mark.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;
use crate::scalar::{norm, Scalar};

/// One atom of the jump measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<'a, T> {
    pub t: T,
    pub theta: &'a [T],
    pub r: T,
}

/// A realization of the truncated jump measure on `(0, horizon]`, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpStream<T> {
    times: Vec<T>,
    thetas: Vec<T>,
    radii: Vec<T>,
    dim: usize,
    epsilon: T,
    horizon: T,
    seed: u64,
}

fn unit_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

pub(crate) fn check_stream_params<T: Scalar>(horizon: T, epsilon: T, d: usize) -> Result<()> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(invalid("horizon", "must be positive and finite"));
    }
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    if d < 1 {
        return Err(invalid("d", "dimension must be >= 1"));
    }
    Ok(())
}

impl<T: Scalar> JumpStream<T> {
    /// Builds a stream from explicit `(t, θ, r)` events, validating every invariant.
    /// Equal times are kept in the given order.
    pub fn from_events(
        events: Vec<(T, Vec<T>, T)>,
        epsilon: T,
        horizon: T,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        check_stream_params(horizon, epsilon, dim)?;
        let mut times = Vec::with_capacity(events.len());
        let mut thetas = Vec::with_capacity(events.len() * dim);
        let mut radii = Vec::with_capacity(events.len());
        for (t, theta, r) in events {
            if theta.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: theta.len(),
                });
            }
            times.push(t);
            thetas.extend_from_slice(&theta);
            radii.push(r);
        }
        let stream = Self {
            times,
            thetas,
            radii,
            dim,
            epsilon,
            horizon,
            seed,
        };
        stream.validate()?;
        Ok(stream)
    }

    /// Checks ordering, time range, mark cutoff and direction normalization.
    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Malformed("event times not sorted".into()));
        }
        if let Some(&t) = self.times.iter().find(|&&t| !(t > T::zero() && t <= self.horizon)) {
            return Err(Error::TimeOutOfRange {
                t: t.to_f64_lossless(),
                horizon: self.horizon.to_f64_lossless(),
            });
        }
        if let Some(&r) = self.radii.iter().find(|&&r| !(r > self.epsilon) || !r.is_finite()) {
            return Err(Error::Malformed(format!("radial mark {r} not above cutoff {}", self.epsilon)));
        }
        let tol = unit_tolerance::<T>();
        for theta in self.thetas.chunks_exact(self.dim) {
            if (norm(theta) - T::one()).abs() > tol {
                return Err(Error::Malformed(format!("direction {theta:?} is not a unit vector")));
            }
        }
        Ok(())
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

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Directions, `dim` values per event.
    pub fn thetas_flat(&self) -> &[T] {
        &self.thetas
    }

    #[inline]
    pub fn event(&self, i: usize) -> JumpEvent<'_, T> {
        JumpEvent {
            t: self.times[i],
            theta: &self.thetas[i * self.dim..(i + 1) * self.dim],
            r: self.radii[i],
        }
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = JumpEvent<'_, T>> + '_ {
        (0..self.len()).map(move |i| self.event(i))
    }

    /// Time of the first event with `r >= 1`, i.e. the first large jump.
    pub fn first_large_jump_time(&self) -> Option<T> {
        self.events().find(|e| e.r >= T::one()).map(|e| e.t)
    }
}

/// Samples the truncated jump measure on `(0, horizon]` with cutoff `epsilon`.
pub fn sample_stream<T: Scalar>(horizon: T, epsilon: T, d: usize, seed: u64) -> Result<JumpStream<T>> {
    check_stream_params(horizon, epsilon, d)?;
    let mut rng = stream_rng(seed);
    let h = horizon.to_f64_lossless();
    let eps = epsilon.to_f64_lossless();

    let mean = h / eps;
    let count = Poisson::new(mean)
        .map_err(|e| invalid("epsilon", format!("event count mean {mean}: {e}")))?
        .sample(&mut rng) as usize;

    // Uniform order statistics on (0, T].
    let mut times_f: Vec<f64> = (0..count)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            h * u
        })
        .collect();
    times_f.sort_unstable_by(f64::total_cmp);

    let mut thetas = Vec::with_capacity(count * d);
    let mut radii = Vec::with_capacity(count);
    let mut dir = vec![T::zero(); d];
    for _ in 0..count {
        sample_direction_into(&mut rng, &mut dir);
        thetas.extend_from_slice(&dir);
        radii.push(sample_radial_mark(&mut rng, epsilon));
    }

    Ok(JumpStream {
        times: times_f.into_iter().map(T::lit).collect(),
        thetas,
        radii,
        dim: d,
        epsilon,
        horizon,
        seed,
    })
}

/// Inverse CDF of the truncated mark law: `P(r > m) = ε/m` gives `r = ε/U`.
#[inline]
pub fn radial_mark_from_uniform<T: Scalar>(epsilon: T, u: T) -> T {
    epsilon / u
}

fn sample_radial_mark<T: Scalar, R: Rng + ?Sized>(rng: &mut R, epsilon: T) -> T {
    loop {
        let u: f64 = rng.sample(Open01);
        let r = T::lit(epsilon.to_f64_lossless() / u);
        // Rounding can land exactly on the cutoff when u is within an ulp of 1.
        if r > epsilon {
            return r;
        }
    }
}

/// A direction uniform on `S^{d-1}`: a random sign for `d = 1`, a normalized
/// standard Gaussian vector otherwise.
pub fn sample_direction<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<T>> {
    if d < 1 {
        return Err(invalid("d", "dimension must be >= 1"));
    }
    let mut out = vec![T::zero(); d];
    sample_direction_into(rng, &mut out);
    Ok(out)
}

fn sample_direction_into<T: Scalar, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { T::one() } else { -T::one() };
        return;
    }
    let d = out.len();
    let mut stack = [0.0f64; 16];
    let mut heap = Vec::new();
    let g: &mut [f64] = if d <= stack.len() {
        &mut stack[..d]
    } else {
        heap.resize(d, 0.0);
        &mut heap
    };
    loop {
        let mut sq = 0.0f64;
        for z in g.iter_mut() {
            *z = rng.sample(StandardNormal);
            sq += *z * *z;
        }
        if sq > 1e-300 {
            let inv = 1.0 / sq.sqrt();
            for (o, z) in out.iter_mut().zip(g.iter()) {
                *o = T::lit(z * inv);
            }
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn inverse_cdf_example() {
        assert!((radial_mark_from_uniform(0.1f64, 0.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_stream::<f64>(1.0, 0.0, 1, 1).is_err());
        assert!(sample_stream::<f64>(1.0, 1.0, 1, 1).is_err());
        assert!(sample_stream::<f64>(0.0, 0.5, 1, 1).is_err());
        assert!(sample_stream::<f64>(1.0, 0.5, 0, 1).is_err());
        assert!(sample_direction::<f64, _>(0, &mut stream_rng(1)).is_err());
    }

    #[test]
    fn stream_invariants() {
        for seed in 0..20 {
            let s = sample_stream::<f64>(2.0, 0.01, 3, seed).unwrap();
            s.validate().unwrap();
            assert!(s.radii().iter().all(|&r| r > 0.01));
        }
    }

    #[test]
    fn determinism() {
        let a = sample_stream::<f64>(1.0, 1e-3, 2, 99).unwrap();
        let b = sample_stream::<f64>(1.0, 1e-3, 2, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_stream::<f64>(1.0, 1e-3, 2, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn first_large_jump_examples() {
        let none = JumpStream::from_events(vec![(0.2, vec![1.0], 0.5)], 0.1, 1.0, 1, 0).unwrap();
        assert_eq!(none.first_large_jump_time(), None);
        let two = JumpStream::from_events(
            vec![(0.4, vec![1.0], 2.0), (0.7, vec![-1.0], 1.5)],
            0.1,
            1.0,
            1,
            0,
        )
        .unwrap();
        assert_eq!(two.first_large_jump_time(), Some(0.4));
    }

    #[test]
    fn from_events_validates() {
        assert!(JumpStream::from_events(vec![(0.5, vec![1.0], 0.05)], 0.1, 1.0, 1, 0).is_err());
        assert!(JumpStream::from_events(vec![(0.5, vec![0.9], 0.5)], 0.1, 1.0, 1, 0).is_err());
        assert!(JumpStream::from_events(
            vec![(0.5, vec![1.0], 0.5), (0.4, vec![1.0], 0.5)],
            0.1,
            1.0,
            1,
            0
        )
        .is_err());
        assert!(JumpStream::from_events(vec![(1.5, vec![1.0], 0.5)], 0.1, 1.0, 1, 0).is_err());
        assert!(JumpStream::from_events(vec![(0.5, vec![1.0, 0.0], 0.5)], 0.1, 1.0, 1, 0).is_err());
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = stream_rng(5);
        for d in 1..6 {
            for _ in 0..100 {
                let v: Vec<f64> = sample_direction(d, &mut rng).unwrap();
                assert!((norm(&v) - 1.0).abs() < 1e-12);
            }
        }
    }
}
