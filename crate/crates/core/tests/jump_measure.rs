mod common;

use common::{ks_critical, ks_distance, mean_var};
use stablelike::{derive_seed, sample_direction, sample_stream, stream_rng};

#[test]
fn counts_are_poisson() {
    let (horizon, eps) = (1.0, 0.05);
    let counts: Vec<f64> = (0..10_000)
        .map(|i| sample_stream(horizon, eps, 1, derive_seed(11, i)).unwrap().len() as f64)
        .collect();
    let (m, v) = mean_var(&counts);
    let lambda = horizon / eps;
    let n = counts.len() as f64;
    // SE of the sample mean is sqrt(λ/n); of the sample variance about λ sqrt(2/n) for large λ.
    assert!((m - lambda).abs() < 5.0 * (lambda / n).sqrt(), "mean {m}");
    assert!((v - lambda).abs() < 5.0 * lambda * (2.0 / n).sqrt() * 1.1, "variance {v}");
}

#[test]
fn radial_marks_follow_pareto_tail() {
    let eps = 1e-3;
    let mut r = Vec::new();
    for i in 0..20 {
        let s = sample_stream(10.0, eps, 1, derive_seed(12, i)).unwrap();
        r.extend_from_slice(s.radii());
    }
    assert!(r.iter().all(|&v| v > eps));
    let n = r.len() as f64;
    for m in [2e-3, 1e-2, 0.1, 1.0, 10.0] {
        let p = eps / m;
        let emp = r.iter().filter(|&&v| v > m).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((emp - p).abs() < 5.0 * se, "m {m}: {emp} vs {p}");
    }
    // P(r > m) = ε/m is the CDF 1 - ε/r.
    let mut sub: Vec<f64> = r.iter().take(50_000).copied().collect();
    let k = sub.len();
    assert!(ks_distance(&mut sub, |x| 1.0 - eps / x) < ks_critical(k));
}

#[test]
fn first_large_jump_is_exponential() {
    let horizon = 20.0;
    let mut taus: Vec<f64> = (0..5000)
        .map(|i| {
            sample_stream(horizon, 0.5, 1, derive_seed(13, i))
                .unwrap()
                .first_large_jump_time()
                .expect("P(no large jump before 20) = e^-20")
        })
        .collect();
    let n = taus.len();
    assert!(ks_distance(&mut taus, |t| 1.0 - (-t).exp()) < ks_critical(n));
}

#[test]
fn directions_are_symmetric() {
    let mut rng = stream_rng(14);
    let n = 100_000;
    for d in [1usize, 2, 3] {
        let mut sum = vec![0.0; d];
        let mut abs_first = 0.0;
        for _ in 0..n {
            let th: Vec<f64> = sample_direction(d, &mut rng).unwrap();
            for (s, v) in sum.iter_mut().zip(&th) {
                *s += v;
            }
            abs_first += th[0].abs();
        }
        // Each coordinate has variance 1/d.
        let se = (1.0 / (d as f64 * n as f64)).sqrt();
        for s in &sum {
            assert!((s / n as f64).abs() < 3.0 * se, "d {d}: mean {}", s / n as f64);
        }
        if d == 3 {
            // |θ·e₁| is uniform on [0, 1] in three dimensions: mean 1/2, variance 1/12.
            let m = abs_first / n as f64;
            assert!((m - 0.5).abs() < 3.0 * (1.0 / 12.0 / n as f64).sqrt(), "{m}");
        }
    }
}

#[test]
fn compensator_vanishes_in_a_long_stream() {
    let s = sample_stream(50.0, 1e-4, 2, 15).unwrap();
    let n = s.len() as f64;
    let th = s.thetas_flat();
    for k in 0..2 {
        let m: f64 = th.iter().skip(k).step_by(2).sum::<f64>() / n;
        assert!(m.abs() < 5.0 * (0.5 / n).sqrt());
    }
}

#[test]
fn large_jump_fraction_is_epsilon() {
    let eps = 0.01;
    let (mut big, mut all) = (0usize, 0usize);
    for i in 0..200 {
        let s = sample_stream(10.0, eps, 1, derive_seed(16, i)).unwrap();
        big += s.radii().iter().filter(|&&r| r >= 1.0).count();
        all += s.len();
    }
    let p = big as f64 / all as f64;
    assert!((p - eps).abs() < 5.0 * (eps * (1.0 - eps) / all as f64).sqrt(), "{p}");
}
