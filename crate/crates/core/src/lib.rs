//! Executable checks for kernel definiteness, Hilbert-space embeddings and
//! coarse and uniform embedding moduli on finite samples of quasi-normed
//! spaces `(R^d, ‖·‖_q)`.
//!
//! The pieces, bottom up:
//!
//! - [`spaces`]: quasi-norms, the metric `‖x − y‖^p` and finite point sets.
//! - [`kernels`]: labelled kernel matrices, PD/ND tests with certificates,
//!   and the exponential and power transforms between them.
//! - [`embeddings`]: realizing PD and ND kernels as Euclidean vectors.
//! - [`maps`] and [`moduli`]: maps evaluated on finite domains and their
//!   empirical compression and expansion moduli.
//! - [`constructions`]: the coarse-to-uniform pipeline and the gluing of
//!   rescaled sphere maps into one coarse embedding.
//!
//! Every verdict that fails a definiteness test carries a vector which
//! [`kernels::witness_validate`] re-checks without an eigensolver.

pub mod embeddings;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod maps;
pub mod moduli;
pub mod report;
pub mod spaces;
pub mod constructions;
pub mod acceptance;
pub mod cli;
