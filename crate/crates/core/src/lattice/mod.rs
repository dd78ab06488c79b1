//! The finite window container and the combinatorics run on it:
//! connectivity, bad-layer detection and the bad-layer events.

mod cluster;
pub mod edgelist;
mod events;
mod grid;

pub use cluster::{cluster, ClusterReport};
pub use events::{
    count_open_in_layer_column, detect_bad_layer, event_e_and_f, event_e_and_f_at, BadLayerHit,
    ColumnCount, EventOutcome,
};
pub use grid::{EdgeGrid, LayerPair};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("grid carries no layer metadata (baseline model)")]
    MissingLayerMeta,
    #[error("layer at x = {x_start} is not fully inside the window")]
    ClippedLayer { x_start: usize },
    #[error("copies of one column disagree at u = {u}, v = {v}")]
    CopyInconsistent { u: usize, v: usize },
}
