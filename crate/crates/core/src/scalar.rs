//! Scalar field shared by every computation.
//!
//! Real charts are evaluated on the real axis of `C64`; every primitive keeps
//! the imaginary part exactly zero on real inputs, so real-mode results are
//! bit-identical to a pure `f64` evaluation of the same formulas.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Scalar field over which a chart is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Complex,
}

impl Mode {
    pub fn is_real(self) -> bool {
        matches!(self, Mode::Real)
    }
}

/// Largest modulus in a slice; 0 for an empty slice.
pub fn max_abs(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Euclidean (Hermitian) norm of a component array.
pub fn frobenius(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a − b‖ / (‖a‖ + ‖b‖ + 1e−12)`, the relative residual used throughout.
pub fn relative_residual(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    diff / (frobenius(a) + frobenius(b) + 1e-12)
}
