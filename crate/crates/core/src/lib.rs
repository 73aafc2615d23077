//! Graph-signal denoising toolkit.
//!
//! Builds weighted graphs over 1D signals and grayscale images using
//! bilateral-filter or guided-filter weights, exposes the graph Laplacian
//! as a matrix-free operator, and denoises signals with
//!
//! * iterated vertex-domain filters ([`filters`]),
//! * Krylov-subspace polynomial filters: flexible preconditioned CG and
//!   single-vector LOBPCG ([`krylov`]),
//! * an exact dense spectral path (eigendecomposition, GFT, ideal low-pass)
//!   for validation at desk scale ([`spectral`]).
//!
//! All operations are pure functions of their inputs; every value is
//! immutable after construction and safe to share across threads.

pub mod error;
pub mod filters;
pub mod graph;
pub mod krylov;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};
pub use signal::{Shape, Signal};
