mod common;

use common::mean_var;
use proptest::prelude::*;
use stablelike::fractal::stats::ols;
use stablelike::sde::{jump_power_sum, slice_jump_sums};
use stablelike::{derive_seed, sample_stream, simulate, simulate_coupled, IndexFunction, SimulationConfig};

fn constant(alpha: f64) -> IndexFunction<f64> {
    IndexFunction::constant(alpha).unwrap()
}

fn bump() -> IndexFunction<f64> {
    IndexFunction::rational_bump(0.6, 0.8, 1.0).unwrap()
}

#[test]
fn jump_magnitude_tail_has_slope_minus_alpha() {
    let alpha = 1.3;
    let eps = 1e-4;
    let cfg = SimulationConfig::new(constant(alpha), vec![0.0], 50.0, eps, 0).unwrap();
    let stream = sample_stream(50.0, eps, 1, 21).unwrap();
    let path = simulate(&cfg, &stream).unwrap();
    let mut sizes: Vec<f64> = (1..path.len())
        .map(|k| (path.state(k)[0] - path.state(k - 1)[0]).abs())
        .collect();
    sizes.sort_by(f64::total_cmp);
    let n = sizes.len() as f64;
    let floor = eps.powf(1.0 / alpha);
    let ms: Vec<f64> = (0..10).map(|k| floor * 4.0 * 2f64.powi(k)).collect();
    let x: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
    let y: Vec<f64> = ms
        .iter()
        .map(|&m| ((n - sizes.partition_point(|&s| s <= m) as f64) / n).ln())
        .collect();
    let fit = ols(&x, &y).unwrap();
    assert!((fit.slope + alpha).abs() < 0.05, "slope {}", fit.slope);
}

#[test]
fn compensated_part_is_a_martingale() {
    let alpha = 1.2;
    let t = 0.5;
    let cfg = SimulationConfig::new(constant(alpha), vec![0.0], t, 1e-3, 0).unwrap();
    let mut ends = Vec::new();
    let mut i = 0u64;
    while ends.len() < 10_000 {
        let s = sample_stream(t, 1e-3, 1, derive_seed(22, i)).unwrap();
        i += 1;
        if s.first_large_jump_time().is_some() {
            continue;
        }
        ends.push({
            let p = simulate(&cfg, &s).unwrap();
            p.state(p.len() - 1)[0]
        });
    }
    let (m, v) = mean_var(&ends);
    let se = (v / ends.len() as f64).sqrt();
    assert!(v.is_finite() && m.abs() < 5.0 * se, "mean {m}, se {se}");
    // E X_t² = t ∫_ε^1 r^{2/α - 2} dr for the small jumps.
    let e = 2.0 / alpha - 1.0;
    let second = t * (1.0 - 1e-3f64.powf(e)) / e;
    let m2 = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
    assert!((m2 - second).abs() < 0.1 * second, "{m2} vs {second}");
}

#[test]
fn slice_sums_match_their_moment() {
    // β ≡ 1.2 lies in slice k = 2 of m = 4 ([1, 1.5)); p_k = (2k + 5/2)/m.
    let (alpha, m, eps) = (1.2, 4usize, 1e-3);
    let cfg = SimulationConfig::new(constant(alpha), vec![0.0], 1.0, eps, 0).unwrap();
    let p = |k: usize| (2.0 * k as f64 + 2.5) / m as f64;
    let mut draws = Vec::new();
    for i in 0..4000 {
        let s = sample_stream(1.0, eps, 1, derive_seed(23, i)).unwrap();
        let path = simulate(&cfg, &s).unwrap();
        let sums = slice_jump_sums(&path, &cfg.beta, m, p).unwrap();
        assert!(sums.iter().enumerate().all(|(k, &v)| k == 2 || v == 0.0));
        let whole = jump_power_sum(&path, p(2), true);
        assert!((sums[2] - whole).abs() <= 1e-12 * whole.max(1.0));
        draws.push(sums[2]);
    }
    let (mean, var) = mean_var(&draws);
    let q = p(2) / alpha;
    let exact = (1.0 - eps.powf(q - 1.0)) / (q - 1.0);
    assert!((mean - exact).abs() < 5.0 * (var / draws.len() as f64).sqrt(), "{mean} vs {exact}");
    // The slice bound ∫_0^1 r^{(2k+5/2)/(2k+2) - 2} dr = 4k + 4.
    assert!(mean <= 12.0);
}

#[test]
fn coupling_with_floor_clamp_is_the_identity() {
    let cfg = SimulationConfig::new(bump(), vec![0.3], 1.0, 1e-4, 0).unwrap();
    for i in 0..20 {
        let s = sample_stream(1.0, 1e-4, 1, derive_seed(24, i)).unwrap();
        let (a, b, rep) = simulate_coupled(&cfg, 0.6, &s).unwrap();
        assert_eq!(a, b);
        assert!(rep.identical_before_tau && rep.identical_before_tau_min);
        assert_eq!(rep.max_discrepancy_before_tau, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupled_paths_agree_up_to_tau(seed in any::<u64>(), a in 0.2f64..1.9, x0 in -2.0f64..2.0) {
        let cfg = SimulationConfig::new(bump(), vec![x0], 1.0, 1e-3, 0).unwrap();
        let s = sample_stream(1.0, 1e-3, 1, seed).unwrap();
        let (m, ma, rep) = simulate_coupled(&cfg, a, &s).unwrap();
        if a < cfg.beta.eval(&[x0]) - 0.05 {
            prop_assert!(rep.identical_before_tau_min);
            prop_assert!(rep.identical_before_tau);
            prop_assert_eq!(rep.max_discrepancy_before_tau, 0.0);
        }
        for t in [rep.tau_x, rep.tau_xa, rep.tau_ge1].into_iter().flatten() {
            prop_assert!(rep.tau <= t);
        }
        if rep.identical_before_tau {
            prop_assert_eq!(rep.max_discrepancy_before_tau, 0.0);
        }
        prop_assert_eq!(m.len(), ma.len());
    }

    #[test]
    fn replay_is_pure(seed in any::<u64>(), d in 1usize..4) {
        let cfg = SimulationConfig::new(bump(), vec![0.0; d], 1.0, 1e-2, 0).unwrap();
        let s = sample_stream(1.0, 1e-2, d, seed).unwrap();
        prop_assert_eq!(simulate(&cfg, &s).unwrap(), simulate(&cfg, &s).unwrap());
        prop_assert_eq!(sample_stream(1.0, 1e-2, d, seed).unwrap(), s);
    }
}
