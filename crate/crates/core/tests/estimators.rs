use proptest::prelude::*;
use stablelike::fractal::{
    box_count_graph_with, default_graph_depth, dyadic_scales, graph_grid_counts, graph_oscillation_counts,
    p_variation, range_counts, sojourn, time_in_ball, WindowRule,
};
use stablelike::{derive_seed, sample_stream, simulate, IndexFunction, SamplePath, SimulationConfig};

fn path(alpha: f64, d: usize, eps: f64, seed: u64) -> SamplePath<f64> {
    let cfg = SimulationConfig::new(IndexFunction::constant(alpha).unwrap(), vec![0.0; d], 1.0, eps, 0).unwrap();
    simulate(&cfg, &sample_stream(1.0, eps, d, seed).unwrap()).unwrap()
}

#[test]
fn oscillation_covering_is_within_six_of_the_grid_count() {
    for (alpha, seed) in [(0.7, 1), (1.2, 2), (1.5, 3), (1.9, 4)] {
        let p = path(alpha, 1, 1e-5, derive_seed(31, seed));
        let depth = default_graph_depth(p.len());
        let osc = graph_oscillation_counts(&p, depth).unwrap();
        let grid = graph_grid_counts(&p, depth).unwrap();
        let est = box_count_graph_with(&p, depth, &WindowRule::default()).unwrap();
        let ratios: Vec<f64> = (est.window.0..est.window.1)
            .map(|j| osc[j] as f64 / grid[j] as f64)
            .collect();
        for &r in &ratios {
            assert!((1.0..=6.0).contains(&r), "alpha {alpha}: ratios {ratios:?}");
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 3.0, "alpha {alpha}: unstable ratios {ratios:?}");
    }
}

#[test]
fn variation_equals_jump_sum_once_jumps_are_separated() {
    for seed in 0..20 {
        let p = path(1.2, 1, 0.05, derive_seed(32, seed));
        let times: Vec<f64> = p.times()[1..].to_vec();
        let depth = (1..=24u32)
            .find(|&j| {
                let cells: Vec<u64> = times.iter().map(|t| (t * 2f64.powi(j as i32)).ceil() as u64).collect();
                cells.windows(2).all(|w| w[0] != w[1])
            })
            .expect("distinct jump times separate by depth 24");
        let grid = [0.5, 1.0, 1.2, 1.5, 2.0];
        let prof = p_variation(&p, &grid, &[depth]).unwrap();
        for (i, &pp) in grid.iter().enumerate() {
            let (v, s) = (prof.v_values[i][0], prof.s_values[i]);
            assert!((v - s).abs() <= 1e-12 * s.max(1e-300), "p {pp}: V {v} vs S {s}");
        }
    }
}

#[test]
fn total_variation_is_monotone_in_depth() {
    // The triangle inequality makes V_1 non-decreasing under refinement, bounded by S_1.
    let p = path(1.5, 1, 1e-4, 33);
    let prof = p_variation(&p, &[1.0], &[4, 6, 8, 10, 12, 14, 20]).unwrap();
    let row = &prof.v_values[0];
    assert!(row.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{row:?}");
    assert!(*row.last().unwrap() <= prof.s_values[0] * (1.0 + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn range_counts_are_translation_stable(
        d in 1usize..4,
        pts in prop::collection::vec(-2.0f64..2.0, 3..600),
        offsets in prop::collection::vec(0.0f64..1.0, 15),
    ) {
        let n = pts.len() / d * d;
        let pts = &pts[..n];
        let scales = dyadic_scales(0, 8);
        let base = range_counts(pts, d, &scales, None).unwrap();
        let bound = 3f64.powi(d as i32);
        for off in offsets.chunks(d).take(5) {
            if off.len() < d {
                continue;
            }
            let moved = range_counts(pts, d, &scales, Some(off)).unwrap();
            for (a, b) in base.iter().zip(&moved) {
                prop_assert!(*a as f64 <= bound * *b as f64 && *b as f64 <= bound * *a as f64);
            }
        }
    }

    #[test]
    fn sojourn_is_monotone_and_additive(
        seed in any::<u64>(),
        a in 0.0f64..0.5,
        da in 0.0f64..0.5,
        s in 0.0f64..0.5,
        ds in 0.0f64..0.4,
        t0 in 0.0f64..0.1,
    ) {
        let p = path(1.5, 1, 1e-3, seed);
        let base = sojourn(&p, t0, a, s).unwrap().value;
        prop_assert!(base >= 0.0 && base <= s + 1e-15);
        prop_assert!(sojourn(&p, t0, a + da, s).unwrap().value >= base);
        prop_assert!(sojourn(&p, t0, a, s + ds).unwrap().value >= base);
        let c = p.value_at(t0).unwrap().to_vec();
        let mid = t0 + s;
        let whole = time_in_ball(&p, &c, a, t0, mid + ds).unwrap();
        let parts = time_in_ball(&p, &c, a, t0, mid).unwrap() + time_in_ball(&p, &c, a, mid, mid + ds).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12);
    }
}
