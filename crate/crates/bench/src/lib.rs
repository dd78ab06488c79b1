//! Fixtures shared by the benchmarks.

use ersl_core::{generate_window, EdgeGrid, ModelKind, ModelParams, RealizationSpec};

pub fn moderate_spec(n: u64, seed: u64) -> RealizationSpec {
    RealizationSpec::new(ModelParams::moderate(), n, seed, ModelKind::Ersl)
}

pub fn moderate_grid(n: u64, seed: u64) -> EdgeGrid {
    generate_window(&moderate_spec(n, seed)).expect("moderate parameters generate")
}

pub fn bernoulli_grid(n: u64, p0: f64, seed: u64) -> EdgeGrid {
    let spec = RealizationSpec::new(ModelParams::moderate(), n, seed, ModelKind::Bernoulli { p0 });
    generate_window(&spec).expect("bernoulli generates")
}
