//! Locality-sensitive hashing with sketched and tensorized projections.
//!
//! The crate provides three projection backends behind one family interface:
//! dense Gaussian matrices (the classical Euclidean and sign-random-projection
//! schemes), count-sketch projections that replace the m*d matrix with two
//! pairwise-independent hash functions, and higher-order count sketches that
//! split the coordinate space into N modes so table space falls to
//! O(N * d^(1/N)). On top of the families sit closed-form collision laws with
//! a quadrature cross-check, an (m, L) multi-table index with exact candidate
//! re-ranking, and an evaluation harness for collision, normality, space,
//! timing, and recall experiments.
//!
//! Seeding is fully deterministic: every random object is derived from a
//! [`MasterSeed`] and a string label, so any component can be reconstructed
//! independently of construction order, with or without the `parallel`
//! feature.

pub mod dataio;
pub mod error;
pub mod eval;
pub mod exec;
pub mod families;
pub mod hashcore;
pub mod index;
pub mod sketch;
pub mod theory;

pub use dataio::{
    load_csv, load_fvecs, read_results_csv, synth_gaussian, synth_gaussian_batches, write_fvecs,
    write_results, write_results_file, Dataset, GaussianBatches, OutputFormat, ResultsRow,
};
pub use error::{Error, Result};
pub use eval::{
    brute_topk, brute_topk_reference, estimate_collision, pair_at_angle, pair_at_distance,
    param_count, recall, run_recall_cells, run_recall_experiment, sketch_diagnostics, time_hash,
    CollisionEstimate, ParamCount, RecallCell, RecallPoint, RecallSweepConfig, SketchDiagnostics,
};
pub use families::{FamilyInstance, FamilyParams, HashCode, Projection, SchemeKind};
pub use hashcore::{GaussianMatrix, MasterSeed, OffsetVector, SignFamily, TwoWiseFamily};
pub use index::{IndexConfig, LshIndex, Metric, QueryResult};
pub use sketch::{factor_code_length, flat_index, tensorize, unflatten, CsPlan, HcsPlan};
pub use theory::{
    angle_between, p_collision_e2lsh, p_collision_e2lsh_quadrature, p_collision_srp, sensitivity,
    Geometry, SensitivityTuple,
};
