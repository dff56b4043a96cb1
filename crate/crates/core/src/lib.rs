//! Quantum latent semantic analysis (QLSA) for ranked retrieval.
//!
//! Documents are mapped to unit-norm "wave functions" whose squared
//! amplitudes are term probabilities, a latent topic subspace is found by a
//! truncated SVD of the wave-function matrix, and queries are ranked by
//! cosine similarity inside that subspace. The same machinery runs the LSA
//! baseline (SVD of raw term counts) and plain cosine matching, and the
//! [`eval`] module scores runs with MAP and 11-point interpolated
//! recall-precision.
//!
//! Module map:
//!
//! - [`corpus`]: SMART collection parsing, preprocessing, term-document matrix
//! - [`quantum`]: wave functions, projectors, density operators, trace rule
//! - [`lowrank`]: truncated SVD and reconstruction residual
//! - [`topics`]: QLSA / LSA latent spaces and the probabilistic read-outs
//! - [`retrieval`]: query folding and ranking
//! - [`eval`]: average precision, MAP, interpolated recall-precision

pub mod corpus;
pub mod eval;
pub mod lowrank;
pub mod quantum;
pub mod retrieval;
pub mod sparse;
pub mod topics;

pub use corpus::{
    build_matrix, parse_qrels, parse_smart_file, preprocess, Pipeline, Qrels, QrelsColumns, RawDocument, TermDocMatrix,
    Vocabulary,
};
pub use eval::{evaluate_run, improvement_pct, RunEvaluation};
pub use lowrank::{reconstruction_residual, truncated_svd, SvdFactors, SvdOptions};
pub use quantum::{DensityOperator, Projector, WaveFunction, WaveFunctionMatrix};
pub use retrieval::{QueryVector, RankedList, RankedRun};
pub use topics::{DocumentLatentView, LatentSpace, Method};
