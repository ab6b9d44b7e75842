//! Numerical verification toolkit for conformal (pseudo-)Riemannian geometry.
//!
//! Metrics are entered as analytic coordinate expressions; curvature and its
//! covariant derivatives are computed exactly (up to rounding) through jet
//! arithmetic and cross-checked by an independent finite-difference oracle.

pub mod error;
pub mod conformal;
pub mod exprlang;
pub mod fourdim;
pub mod hypersurface;
pub mod nullgeo;
pub mod random;
pub mod scalar;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Mode, C64};
