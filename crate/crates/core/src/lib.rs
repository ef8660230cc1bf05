//! Resource-bounded plain Kolmogorov complexity on a small fixed reference
//! machine, finitary-independence analysis, sequence constructions with a
//! compressor-based complexity estimator, and a three-source extractor built
//! from a balanced coloring of the cube.
//!
//! Real-valued quantities (feasibility bounds, dimension estimates, tuple
//! constants, classification bounds) are generic over [`Real`]; the aliases
//! below fix them to `f64`.

pub mod bits;
pub mod calibration;
pub mod error;
pub mod extractor;
pub mod indep;
pub mod oracle;
pub mod refmachine;
pub mod seqlab;

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

pub use bits::BitString;
pub use error::{KlbError, Result};

/// Floating-point scalar used by the real-valued parts of the library.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Exponents `σ1`, `σ2` of the coloring parameters.
pub type Sigma = num_rational::Ratio<u32>;

pub type FeasibilityBound = extractor::FeasibilityBound<f64>;
pub type TupleIndependenceReport = indep::TupleIndependenceReport<f64>;
pub type LogClassification = indep::LogClassification<f64>;
pub type CertificationReport = extractor::CertificationReport<f64>;
