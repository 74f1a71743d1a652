//! Reverse-mode differentiation and finite-difference verification.

mod check;
pub mod hyper;
mod tape;

pub use check::{check_gradients, check_gradients_noise_aware, GradReport, NamedTensor, ParamError};
pub use tape::{Adjoints, Tape, Var, ARCOSH_CLAMP};
