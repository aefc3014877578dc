//! Sharp-interface Rayleigh-Benard convection with a melting boundary, its
//! adjoint, and wall-temperature optimization.

// Range checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod error;
pub mod exec;
pub mod forward;
pub mod grid;
pub mod io;
pub mod levelset;
pub mod linalg;
pub mod optimize;

pub use error::{Error, Result};
pub use grid::Grid;
