use serde::Serialize;

use crate::lattice::{count_open_in_layer_column, BadLayerHit, ColumnCount, EdgeGrid, LatticeError};
use crate::params::{DerivedConstants, ModelParams};

/// Upper bound on the minimal energy from the potential that ramps linearly
/// across one bad layer and is constant elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerCertificate {
    pub hit: BadLayerHit,
    pub count: ColumnCount,
    /// Energy of the ramp potential, exactly `count.open / width`.
    pub test_energy: f64,
    /// `ℓ_n` for the grid's window size.
    pub threshold: f64,
    /// `2 n p^{ℓ_n}`: the sparse-layer cap on the column count.
    pub column_cap: f64,
    /// `2 n^{1-1/γ}`, the per-edge form of the decay bound.
    pub bound_value: f64,
    /// The layer is bad enough and sparse enough for `test_energy <= bound_value`.
    pub certificate_valid: bool,
}

/// The ramp potential: 0 left of the layer, `(u - X)/S` across it, 1 right of it.
pub fn test_function_potential(grid: &EdgeGrid, hit: &BadLayerHit) -> Vec<f64> {
    let n = grid.n();
    let start = hit.x_start as f64;
    let width = hit.width as f64;
    let mut potential = vec![0.0; grid.vertex_count()];
    for v in 0..=n {
        for u in 0..=n {
            potential[grid.vertex(u, v)] = ((u as f64 - start) / width).clamp(0.0, 1.0);
        }
    }
    potential
}

pub fn build_test_function(
    grid: &EdgeGrid,
    hit: &BadLayerHit,
    params: &ModelParams,
    derived: &DerivedConstants,
) -> Result<LayerCertificate, LatticeError> {
    let count = count_open_in_layer_column(grid, hit)?;
    let n = grid.n() as u64;
    let threshold = derived.threshold_badness(n);
    let column_cap = 2.0 * n as f64 * params.p.powf(threshold);
    // Each of the `width` identical columns contributes count · (1/width)².
    let test_energy = count.open as f64 / hit.width as f64;
    Ok(LayerCertificate {
        hit: *hit,
        count,
        test_energy,
        threshold,
        column_cap,
        bound_value: derived.test_energy_bound(n),
        certificate_valid: hit.badness as f64 >= threshold && count.open as f64 <= column_cap,
    })
}
