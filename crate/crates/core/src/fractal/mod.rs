//! Fractal estimators for simulated paths: box counting of range and graph,
//! p-variation, sojourn times and transition-density growth.

pub mod boxcount;
pub mod kde;
pub mod predict;
pub mod pvar;
pub mod sojourn;
pub mod stats;

pub use boxcount::{
    box_count_graph, box_count_graph_with, box_count_range, box_count_range_with, default_graph_depth,
    default_range_scales, displacement_scale, dyadic_scales, fit_dimension, resolution_floor,
    graph_grid_counts, graph_oscillation_counts, range_counts, DimensionEstimate, RangeOptions, WindowRule,
};
pub use kde::{heat_kernel_from_samples, HeatKernelReport, HeatKernelRow, Kde};
pub use predict::{dimension_vs_prediction, path_prediction, predicted_dimension, DimensionKind, PredictionReport};
pub use pvar::{p_variation, PVariationProfile};
pub use sojourn::{sojourn, sojourn_tail, time_in_ball, SojournStats, SojournTailRow};

use crate::error::{Error, Result};
use crate::index::IndexFunction;
use crate::jumps::sample_stream;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::sde::{simulate, SimulationConfig};

/// Simulates `n_paths` one-dimensional paths from `x0` up to the largest time in
/// `t_grid` and checks the growth of the transition density's supremum against
/// `t^{-1/α}` with `α = beta_min`. Exploded paths are skipped.
pub fn heat_kernel_bound_check<T: Scalar>(
    beta: &IndexFunction<T>,
    t_grid: &[f64],
    x0: T,
    n_paths: usize,
    epsilon: T,
    root_seed: u64,
) -> Result<HeatKernelReport> {
    if n_paths < kde::MIN_KDE_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: kde::MIN_KDE_SAMPLES,
            got: n_paths,
        });
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let config = SimulationConfig::new(beta.clone(), vec![x0], T::lit(horizon), epsilon, root_seed)?;
    let mut samples: Vec<(f64, Vec<f64>)> = t_grid.iter().map(|&t| (t, Vec::with_capacity(n_paths))).collect();
    for i in 0..n_paths {
        let seed = derive_seed(root_seed, i as u64);
        let stream = sample_stream(config.horizon, config.epsilon, 1, seed)?;
        let path = match simulate(&config, &stream) {
            Ok(p) => p,
            Err(Error::Exploded { .. }) => continue,
            Err(e) => return Err(e),
        };
        for (t, xs) in samples.iter_mut() {
            xs.push(path.value_at(T::lit(*t))?[0].to_f64_lossless());
        }
    }
    heat_kernel_from_samples(&samples, beta.beta_min().to_f64_lossless())
}
