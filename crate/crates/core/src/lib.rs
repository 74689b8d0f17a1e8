//! Quantum kernels for sentence classification.
//!
//! Sentences are parsed with a pregroup grammar, compiled to IQP circuits,
//! simulated with post-selection, and compared through transition-amplitude
//! or SWAP-test fidelities that feed a precomputed-kernel SVM.

pub mod circuit;
pub mod dataset;
pub mod embeddings;
pub mod kernels;
pub mod pregroup;
pub mod seeds;
pub mod simulator;
pub mod svm;
