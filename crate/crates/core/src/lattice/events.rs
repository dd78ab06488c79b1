use serde::Serialize;

use super::{EdgeGrid, LatticeError};
use crate::generators::Axis;
use crate::params::{DerivedConstants, ModelParams};

/// An x-layer of high badness lying completely inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadLayerHit {
    pub axis: Axis,
    pub badness: u32,
    /// Index of the layer in its sequence.
    pub layer_index: i64,
    /// First edge position of the layer.
    pub x_start: usize,
    pub width: u64,
    pub fully_inside: bool,
}

/// Leftmost x-layer with `badness >= threshold` whose edge positions
/// `[start, start + width)` all lie in `[0, n)`.
pub fn detect_bad_layer(grid: &EdgeGrid, threshold: f64) -> Result<Option<BadLayerHit>, LatticeError> {
    let layers = grid.layers().ok_or(LatticeError::MissingLayerMeta)?;
    let hit = layers
        .x
        .layers_inside(grid.n() as i64)
        .find(|(_, l)| l.badness as f64 >= threshold)
        .map(|(index, l)| BadLayerHit {
            axis: Axis::X,
            badness: l.badness,
            layer_index: index,
            x_start: l.start as usize,
            width: l.width,
            fully_inside: true,
        });
    Ok(hit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColumnCount {
    /// Open horizontal edges in one column of the layer, over rows `0..=n`.
    pub open: usize,
    /// Distinct original rows among those open edges.
    pub distinct_rows_open: usize,
}

/// Counts open horizontal edges in the first column of the hit layer and
/// checks that every other column of the layer agrees with it.
pub fn count_open_in_layer_column(grid: &EdgeGrid, hit: &BadLayerHit) -> Result<ColumnCount, LatticeError> {
    let n = grid.n();
    if !hit.fully_inside || hit.x_start as u64 + hit.width > n as u64 {
        return Err(LatticeError::ClippedLayer { x_start: hit.x_start });
    }
    let u0 = hit.x_start;
    let span = hit.width as usize;
    let mut open = 0;
    for v in 0..=n {
        let state = grid.is_open_h(u0, v);
        if let Some(u) = (u0 + 1..u0 + span).find(|&u| grid.is_open_h(u, v) != state) {
            return Err(LatticeError::CopyInconsistent { u, v });
        }
        open += state as usize;
    }
    let distinct_rows_open = match grid.layers() {
        Some(layers) => {
            let rows = layers.y.index_map(n);
            let mut seen: Vec<i64> = (0..=n)
                .filter(|&v| grid.is_open_h(u0, v))
                .map(|v| rows[v])
                .collect();
            seen.dedup();
            seen.len()
        }
        None => open,
    };
    Ok(ColumnCount {
        open,
        distinct_rows_open,
    })
}

/// Outcome of the bad-layer event `E` and the sparse-layer event `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventOutcome {
    pub e: bool,
    pub f: bool,
    /// Badness threshold used for `E`.
    pub threshold: f64,
    /// `F` holds when the column count is at most `2 n p^threshold`.
    pub f_bound: f64,
    pub hit: Option<BadLayerHit>,
    pub count: Option<ColumnCount>,
}

/// Evaluates `E` and `F` at the threshold `ℓ_n` for the grid's window size.
pub fn event_e_and_f(
    grid: &EdgeGrid,
    params: &ModelParams,
    derived: &DerivedConstants,
) -> Result<EventOutcome, LatticeError> {
    event_e_and_f_at(grid, params, derived.threshold_badness(grid.n() as u64))
}

pub fn event_e_and_f_at(grid: &EdgeGrid, params: &ModelParams, threshold: f64) -> Result<EventOutcome, LatticeError> {
    let n = grid.n() as f64;
    let f_bound = 2.0 * n * params.p.powf(threshold);
    let hit = detect_bad_layer(grid, threshold)?;
    let count = hit
        .as_ref()
        .map(|h| count_open_in_layer_column(grid, h))
        .transpose()?;
    let e = hit.is_some();
    let f = count.is_some_and(|c| c.open as f64 <= f_bound);
    Ok(EventOutcome {
        e,
        f,
        threshold,
        f_bound,
        hit,
        count,
    })
}
