//! One-bit compressive sensing as a double-sparsity constrained problem.
//!
//! Given sign measurements `c = sgn(Φx)`, possibly corrupted by noise and sign
//! flips, the signal is recovered by minimizing
//!
//! ```text
//! f(x, y) = ‖Ax + y − ε1‖² + η‖x‖²,   A = Diag(c)Φ,
//! subject to ‖x‖₀ ≤ s and ‖y₊‖₀ ≤ k,
//! ```
//!
//! where `y` absorbs up to `k` sign flips. The crate provides the model
//! ([`model`]), exact projections onto the feasible set ([`projections`]),
//! optimality certificates ([`optimality`]), the gradient projection subspace
//! pursuit solver ([`gpsp`]), a BIHT baseline ([`biht`]), seeded instance
//! generators ([`datagen`]) and recovery metrics ([`metrics`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod biht;
pub mod datagen;
pub mod eigen;
mod error;
pub mod gpsp;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optimality;
pub mod projections;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use model::{EigenBounds, Gradient, Iterate, ModelParams, ProblemData};
