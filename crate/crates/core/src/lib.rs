//! spmvforge machine-designs a compressed storage format together with a
//! matching SpMV kernel plan for an input sparse matrix.
//!
//! The pipeline mirrors how SpMV programs are written by hand, split into
//! composable *operators*:
//!
//! 1. [`matio`] ingests Matrix Market files into a canonical COO form and
//!    provides the brute-force oracle every design is checked against.
//! 2. [`opgraph`] defines the operator vocabulary (converting / mapping /
//!    implementing stages) and the operator graph that encodes one design.
//! 3. [`designer`] executes a graph against a matrix, accumulating the
//!    converted matrix state in a metadata set.
//! 4. [`formatgen`] projects the metadata down to the exact array set the
//!    kernel reads: the machine-designed format.
//! 5. [`kernelgen`] assembles the executable kernel plan (loops, reduction
//!    fragments, adapters) and compresses format arrays into closed-form
//!    index models where they fit exactly.
//! 6. [`executor`] runs plans on a simulated block/warp/thread hierarchy
//!    with a deterministic cost model, so every candidate is verifiable
//!    and benchmarkable without a GPU.
//! 7. [`search`] explores the design space: random legal graph growth,
//!    coarse parameter grids, a tree-ensemble surrogate for fine grids,
//!    and simulated-annealing termination with sparsity-aware pruning.
//!
//! All numeric kernels are generic over the scalar type via [`scalar::Scalar`];
//! `f64` is the default used for verification, `f32` is available behind the
//! same interfaces.

pub mod designer;
pub mod executor;
pub mod formatgen;
pub mod kernelgen;
pub mod matio;
pub mod opgraph;
pub mod reference;
pub mod scalar;
pub mod search;
pub mod verify;

pub use scalar::Scalar;

/// Canonical 64-bit matrix type used by the oracle and the default pipeline.
pub type CooMatrixF64 = matio::CooMatrix<f64>;
/// Single-precision matrix for the reduced-precision mode.
pub type CooMatrixF32 = matio::CooMatrix<f32>;
pub type FormatBundleF64 = formatgen::FormatBundle<f64>;
pub type FormatBundleF32 = formatgen::FormatBundle<f32>;
pub type MetadataSetF64 = designer::MetadataSet<f64>;
pub type MetadataSetF32 = designer::MetadataSet<f32>;
