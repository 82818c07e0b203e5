//! Shared fixtures for the benchmarks.

use autolab_core::{GridSpec, ModelParams, SimConfig};

pub fn params() -> ModelParams {
    ModelParams::baseline()
}

/// Ensemble size used by the simulation benchmarks.
pub fn sim_config(n_paths: usize) -> SimConfig {
    SimConfig { n_paths, ..SimConfig::default() }
}

/// A 60 x 50 grid with few stored slices: large enough to exercise every stencil branch.
pub fn coarse_grid(p: &ModelParams) -> GridSpec {
    GridSpec { n_t: 20, ..GridSpec::with_resolution(p, 60, 50) }
}
