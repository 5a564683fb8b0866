//! Finite-blocklength side of the strong converse.
//!
//! Everything here works on explicit small codes: exact correct-decoding
//! probabilities by enumeration, checkers for each finite-`n` inequality
//! between `P_c` and the tilted cumulant, the telescoping decomposition of
//! the `n`-letter cumulant, and Monte Carlo simulation of superposition
//! codes at moderate blocklength. Scalars are `f64` throughout.

use thiserror::Error;

use crate::capacity::CapacityError;
use crate::exponent::ExponentError;
use crate::prob::ProbError;

mod code;
mod law;
mod lemmas;
mod montecarlo;
mod suites;
mod telescope;
mod testdist;

pub use code::{
    exact_probabilities, map_decoders, monte_carlo_code, random_code, BlockCode, CodeProbabilities,
    DecoderStyle, EncoderStyle, ProductKernels, SeqSpace,
};
pub use law::BlockLaw;
pub use lemmas::{
    appendix_c_check, chernoff, lemma1_check, lemma2_check, omega_p_q, per_code_converse,
    proposition1_bound, AppendixCCheck, ChernoffCheck, Lemma1Check, Lemma2Check, PerCodeCheck,
    Prop1Check, BOUND_RTOL, EVENT_TOL,
};
pub use montecarlo::{monte_carlo_pc, wilson_interval, McEstimate};
pub use suites::{
    estimated_cost, run_suite, Suite, SuiteConfig, SuiteReport, TrialResult, LEMMA6_TOL, MASS_TOL,
    RECURSION_TOL,
};
pub use telescope::{
    holder_step_check, optimal_test_telescope, proposition2_check, telescope, HolderCheck,
    Prop2Check, TelescopeTrace, OPTIMIZER_TOL, TELESCOPE_STATE_LIMIT,
};
pub use testdist::{NLetterTestDist, StepDist};

/// Largest enumeration accepted, counted as `|K||L| |X|^n |Y|^n |Z|^n`.
pub const ENUMERATION_BUDGET: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConverseError {
    #[error("enumeration needs about {estimated:.3e} terms, over the budget of {limit:.0e}")]
    Budget { estimated: f64, limit: f64 },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("zero normalizer at step {step}")]
    ZeroNormalizer { step: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// Estimated enumeration cost of a code over the given alphabets.
pub fn enumeration_cost(
    n: usize,
    k_size: usize,
    l_size: usize,
    x: usize,
    y: usize,
    z: usize,
) -> f64 {
    (k_size * l_size) as f64 * ((x * y * z) as f64).powi(n as i32)
}

pub(crate) fn check_budget(cost: f64) -> Result<(), ConverseError> {
    if cost > ENUMERATION_BUDGET || !cost.is_finite() {
        Err(ConverseError::Budget {
            estimated: cost,
            limit: ENUMERATION_BUDGET,
        })
    } else {
        Ok(())
    }
}
