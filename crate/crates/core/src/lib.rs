//! Numerical toolkit for discrete memoryless degraded broadcast channels.
//!
//! * [`prob`] and [`info`]: distributions, kernels, and information measures.
//! * [`capacity`]: the supporting-hyperplane description `C^(μ)` of the
//!   capacity region and membership tests.
//! * [`exponent`]: the tilted cumulant `Ω^(μ,λ)` and the strong-converse
//!   exponent lower bound `F(R1, R2)`.
//! * [`converse`]: exact small-blocklength evaluation of codes and checkers
//!   for every finite-`n` inequality behind the exponent bound, plus Monte
//!   Carlo simulation of superposition codes.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the converse machinery and
//! the command-line tool use.

pub mod capacity;
pub mod converse;
pub mod exponent;
pub mod info;
mod objective;
pub mod optimize;
pub mod prob;
pub mod scalar;

pub use capacity::{CapacityError, RatePair as GenericRatePair};
pub use exponent::ExponentError;
pub use optimize::OptConfig;
pub use prob::ProbError;
pub use scalar::Real;

pub type ProbVector = prob::ProbVector<f64>;
pub type StochasticMatrix = prob::StochasticMatrix<f64>;
pub type DegradedPair = prob::DegradedPair<f64>;
pub type AuxiliaryJoint = prob::AuxiliaryJoint<f64>;
pub type RatePair = capacity::RatePair<f64>;
pub type HyperplaneProfile = capacity::HyperplaneProfile<f64>;
pub type TiltParams = exponent::TiltParams<f64>;
pub type ExponentReport = exponent::ExponentReport<f64>;
pub type OmegaTable = exponent::OmegaTable<f64>;

pub type ProbVectorF32 = prob::ProbVector<f32>;
pub type StochasticMatrixF32 = prob::StochasticMatrix<f32>;
pub type DegradedPairF32 = prob::DegradedPair<f32>;
