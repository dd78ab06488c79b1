//! Elongated randomly stretched lattices: generation, connectivity, bad-layer
//! events, Dirichlet conductivity, random walks and a seeded experiment harness.

pub mod conductivity;
pub mod generators;
pub mod harness;
pub mod lattice;
pub mod params;
pub mod seeding;
pub mod walker;

pub use conductivity::{
    build_test_function, dense_oracle, energy, normalized_energy_curve, solve_dirichlet, DirichletSolution,
    LayerCertificate, SolverConfig, SolverError,
};
pub use generators::{
    generate_window, Axis, ColumnLaw, GenerationError, Layer, LayerSequence, ModelKind, RealizationSpec,
};
pub use harness::{load_config, parse_config, run, run_with_threads, ExperimentConfig, ExperimentKind, RunManifest};
pub use lattice::{cluster, detect_bad_layer, event_e_and_f, ClusterReport, EdgeGrid, EventOutcome};
pub use params::{DerivedConstants, ModelParams, ParamsError, PmfConvention, Validation};
pub use walker::{fit_exponent, simulate_walks, ExponentFit, MsdCurve, WalkConfig, WalkError};
