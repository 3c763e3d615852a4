//! Reconstruction of hidden interfaces and boundaries in one-dimensional heat
//! conductors from a single pair of boundary temperature and flux traces.

pub mod cmath;
pub mod error;
pub mod expr;
pub mod extract;
pub mod forward;
pub mod indicator;
pub mod medium;
mod nonfinite;
pub mod ode;
pub mod oracle;
pub mod pipeline;
pub mod probe;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64;
