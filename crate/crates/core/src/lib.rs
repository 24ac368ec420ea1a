// Validations use `!(x > 0)` on purpose: the negation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for curvature-induced drift of gradient-flow
//! trajectories into Fisher-defined sensitivity subspaces.
//!
//! The crate builds synthetic landscapes whose instability parameters
//! (subspace dimension d, curvature floor lambda, coupling gamma,
//! orthogonality budget epsilon) hold exactly by construction, integrates
//! the induced gradient flows, and verifies the predicted scaling laws:
//! quadratic drift of the Fisher-weighted projection, the quartic onset of
//! utility loss, the flat-geometry null model, rotating-subspace
//! robustness via Davis-Kahan bounds, and the sketched-Fisher / Overlap
//! Score pipeline on toy and synthetic gradients.
//!
//! Numeric kernels are generic over the scalar type ([`scalar::Real`],
//! implemented for f32 and f64); the aliases below fix f64, which is what
//! the stated tolerances are calibrated for.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod landscape;
pub mod mat;
pub mod nullmodel;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod sketch;

pub use error::{Error, Result};
pub use scalar::Real;

/// f64 aliases for the common types.
pub type SymMat = geometry::SymMatrix<f64>;
pub type Spectrum = geometry::SymSpectrum<f64>;
pub type Proj = geometry::Projector<f64>;
pub type Half = geometry::FisherHalf<f64>;
pub type Params = landscape::AicParams<f64>;
pub type Instance = landscape::AicInstance<f64>;
pub type Certificate = landscape::AicCertificate<f64>;
pub type Traj = flow::Trajectory<f64>;
pub type Fit = flow::ScalingFit<f64>;
pub type Sampler = nullmodel::SphereSampler<f64>;
pub type Skill = policy::SkillDistribution<f64>;
pub type Policy = policy::TabularPolicy<f64>;
pub type Gradients = sketch::GradientSampleSet<f64>;
pub type SketchedFim = sketch::ProjectedFim<f64>;
