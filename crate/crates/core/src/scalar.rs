//! Scalar abstraction: the numeric kernels are generic over `Real`
//! (f32 or f64), with f64 aliases exported at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every kernel in this crate.
///
/// Tolerance constants throughout the crate are calibrated for f64; at f32
/// the converted values are often below machine epsilon and the strict
/// validations only pass for inputs that are exact by construction.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an f64 literal (exact for f64 itself).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> scalar conversion")
    }

    /// Conversion to f64 for reporting and serialization.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar -> f64 conversion")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize -> scalar conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Tolerances shared across modules. Values are the f64 calibration;
/// generic code converts via [`Real::of`].
pub mod tol {
    /// Relative symmetry defect allowed in a symmetric matrix.
    pub const SYMMETRY_REL: f64 = 1e-12;
    /// Max |VᵀV - I| entry for an eigenvector set.
    pub const ORTHONORMALITY: f64 = 1e-10;
    /// Relative operator-norm reconstruction error ‖VΛVᵀ - A‖ / ‖A‖.
    pub const RECONSTRUCTION_REL: f64 = 1e-8;
    /// Idempotency defect P² = P.
    pub const PROJECTOR_IDEMPOTENT: f64 = 1e-10;
    /// trace(P) = rank defect.
    pub const PROJECTOR_TRACE: f64 = 1e-8;
    /// Relative commutation defect ‖FP - PF‖ / ‖F‖ for a spectral projector.
    pub const SPECTRAL_COMMUTE_REL: f64 = 1e-8;
    /// Eigen-gap below which a top-d projector is flagged ill-conditioned.
    pub const DEGENERATE_GAP: f64 = 1e-10;
    /// Most negative eigenvalue admitted by a PSD check.
    pub const PSD_FLOOR: f64 = -1e-12;
    /// Absolute slack used when turning measured certificate quantities
    /// into condition flags (floating-point measurements of exact-zero
    /// constructions land within this of zero).
    pub const CERT_SLACK: f64 = 1e-10;
    /// Slack for one-sided quadratic-form inequalities (Rayleigh floors,
    /// Rayleigh splits, drift bounds).
    pub const INEQ_SLACK: f64 = 1e-10;
    /// Relative convergence tolerance of the power-iteration operator norm.
    pub const OP_NORM_REL: f64 = 1e-10;
    /// Iteration cap of the power-iteration operator norm.
    pub const OP_NORM_MAX_ITERS: usize = 10_000;
}
