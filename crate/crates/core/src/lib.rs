//! Exact event-driven simulation of stable-like jump processes, their
//! symbols, and fractal-dimension estimators for the resulting paths.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fractal;
pub mod index;
pub mod io;
pub mod jumps;
pub mod path;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod symbol;

pub use error::{Error, Result};
pub use index::{eval_index, IndexDescriptor, IndexFunction, TableAxis};
pub use jumps::{sample_direction, sample_stream, JumpEvent, JumpStream};
pub use path::SamplePath;
pub use rng::{derive_seed, stream_rng};
pub use scalar::Scalar;
pub use sde::{
    auto_epsilon, simulate, simulate_coupled, truncation_bound, AutoEpsilon, CouplingReport, EpsilonBudget,
    SimulationConfig,
};

pub type IndexFunction64 = IndexFunction<f64>;
pub type IndexFunction32 = IndexFunction<f32>;
pub type JumpStream64 = JumpStream<f64>;
pub type JumpStream32 = JumpStream<f32>;
pub type SamplePath64 = SamplePath<f64>;
pub type SamplePath32 = SamplePath<f32>;
pub type SimulationConfig64 = SimulationConfig<f64>;
pub type SimulationConfig32 = SimulationConfig<f32>;
