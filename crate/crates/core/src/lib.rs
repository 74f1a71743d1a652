//! Time-aware hyperbolic graph attention for session-based recommendation.
//!
//! The crate covers the whole pipeline:
//!
//! - [`manifold`]: Poincaré-ball arithmetic (Möbius addition, scalar and
//!   matrix multiplication, exponential/logarithmic maps, distance).
//! - [`grad`]: a reverse-mode tape and a finite-difference gradient checker.
//! - [`graph`]: session graphs whose edges carry normalized time intervals.
//! - [`model`]: hyperbolic projection, time-aware self-attention, the
//!   soft-attention readout, and the two future-projection heads.
//! - [`train`]: the evolutionary loss, projected gradient descent, checkpoints.
//! - [`data`]: click-log parsing, preprocessing, and synthetic data.
//! - [`eval`]: MRR@K, P@K, and the time-aware test protocol.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod grad;
pub mod graph;
pub mod manifold;
pub mod model;
pub mod train;

pub use error::{Error, Result};
