//! Randomized batteries of checker instances.
//!
//! Trial `i` draws everything from ChaCha stream `i + 1` of the seed, so a
//! failing trial can be replayed alone and results do not depend on the
//! number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::code::{random_code, BlockCode, DecoderStyle, EncoderStyle, SeqSpace};
use super::law::BlockLaw;
use super::lemmas::{
    appendix_c_check, lemma1_check, lemma2_check, per_code_converse, proposition1_bound,
};
use super::montecarlo::stream_rng;
use super::telescope::{holder_step_check, proposition2_check, telescope, TELESCOPE_STATE_LIMIT};
use super::testdist::{dirichlet, NLetterTestDist};
use super::{check_budget, enumeration_cost, ConverseError};
use crate::capacity::{log_spaced_grid, point_seed};
use crate::exponent::{omega_max, OmegaTable, TiltParams};
use crate::optimize::OptConfig;
use crate::prob::{DegradedPair, StochasticMatrix};

/// Largest message sets drawn by the suites.
const MAX_MESSAGES: usize = 4;
/// Tolerances for the two-computation identities.
pub const LEMMA6_TOL: f64 = 1e-10;
pub const RECURSION_TOL: f64 = 1e-12;
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Lemma1,
    Lemma2,
    Prop1,
    Lemma6,
    Holder,
    Prop2,
    PerCode,
    AppendixC,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Prop1,
        Suite::Lemma6,
        Suite::Holder,
        Suite::Prop2,
        Suite::PerCode,
        Suite::AppendixC,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Prop1 => "prop1",
            Suite::Lemma6 => "lemma6",
            Suite::Holder => "holder",
            Suite::Prop2 => "prop2",
            Suite::PerCode => "percode",
            Suite::AppendixC => "appendixC",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = ConverseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConverseError::Invalid(format!("unknown suite '{s}'")))
    }
}

impl Serialize for Suite {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// `|X| = |Y| = |Z|`.
    pub alphabet: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n: 2,
            trials: 100,
            seed: 1,
            alphabet: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; for identity checks, tolerance minus the gap.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub estimated_cost: f64,
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: f64,
    pub results: Vec<TrialResult>,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.failed == 0
    }
}

/// Largest enumeration a suite can request at this configuration.
pub fn estimated_cost(suite: Suite, cfg: &SuiteConfig) -> f64 {
    let a = cfg.alphabet;
    let k = match suite {
        Suite::Lemma6 | Suite::Holder => 1,
        _ => MAX_MESSAGES,
    };
    enumeration_cost(cfg.n, k, MAX_MESSAGES, a, a, a)
}

fn check_config(suite: Suite, cfg: &SuiteConfig) -> Result<f64, ConverseError> {
    if cfg.n == 0 || cfg.trials == 0 || cfg.alphabet < 2 {
        return Err(ConverseError::Invalid(
            "n and trials must be positive and the alphabet at least 2".into(),
        ));
    }
    let cost = estimated_cost(suite, cfg);
    check_budget(cost)?;
    if matches!(suite, Suite::Lemma6 | Suite::Holder | Suite::Prop2) {
        let states = MAX_MESSAGES as f64 * (cfg.alphabet.pow(3) as f64).powi(cfg.n as i32);
        if states > TELESCOPE_STATE_LIMIT {
            return Err(ConverseError::Budget {
                estimated: states,
                limit: TELESCOPE_STATE_LIMIT,
            });
        }
    }
    Ok(cost)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> StochasticMatrix<f64> {
    let data = (0..rows).flat_map(|_| dirichlet(rng, cols)).collect();
    StochasticMatrix::new(rows, cols, data).expect("dirichlet rows are stochastic")
}

/// Mostly generic channels, with identity and useless first legs mixed in.
fn random_channel(rng: &mut ChaCha8Rng, a: usize) -> DegradedPair<f64> {
    let w1 = match rng.gen_range(0..10) {
        0 => StochasticMatrix::identity(a),
        1 => StochasticMatrix::uniform_rows(a, a),
        _ => random_matrix(rng, a, a),
    };
    let w2 = random_matrix(rng, a, a);
    DegradedPair::new(w1, w2).expect("square alphabets compose")
}

fn random_block_code(
    rng: &mut ChaCha8Rng,
    channel: &DegradedPair<f64>,
    n: usize,
    map_only: bool,
) -> Result<BlockCode, ConverseError> {
    let k = rng.gen_range(1..=MAX_MESSAGES);
    let l = rng.gen_range(1..=MAX_MESSAGES);
    let enc = if rng.gen_bool(0.5) {
        EncoderStyle::Deterministic
    } else {
        EncoderStyle::Stochastic
    };
    let dec = if map_only || rng.gen_bool(0.7) {
        DecoderStyle::Map
    } else {
        DecoderStyle::Random
    };
    random_code(channel, n, k, l, enc, dec, rng)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// A mix of random, code-induced and nearly degenerate `q^n`.
fn random_qn(
    rng: &mut ChaCha8Rng,
    channel: &DegradedPair<f64>,
    law: &BlockLaw,
) -> Result<NLetterTestDist, ConverseError> {
    match rng.gen_range(0..5) {
        0 => NLetterTestDist::code_induced(law, channel),
        1 => NLetterTestDist::floored_point_mass(
            channel,
            law.n(),
            law.l_size(),
            log_uniform(rng, 1e-4, 0.5),
        ),
        _ => NLetterTestDist::random(channel, law.n(), law.l_size(), rng),
    }
}

/// `q(y^n, z^n | l)` and `q~(z^n)` for Lemma 1: random, or the law's own.
fn lemma1_inputs(
    rng: &mut ChaCha8Rng,
    code: &BlockCode,
    channel: &DegradedPair<f64>,
) -> Result<(Vec<f64>, Vec<f64>), ConverseError> {
    let yn = SeqSpace::new(channel.y_size(), code.n()).size();
    let zn = SeqSpace::new(channel.z_size(), code.n()).size();
    if rng.gen_bool(0.25) {
        let law = BlockLaw::from_code(code, channel.x_size())?;
        let kern = super::code::ProductKernels::new(channel, code.n());
        let mut q = vec![0.0; code.l_size() * yn * zn];
        let mut qz = vec![0.0; zn];
        law.for_each_point(&kern, |l, _, y, z, m| {
            q[l * yn * zn + y * zn + z] += m / law.p_l(l);
            qz[z] += m;
        });
        Ok((q, qz))
    } else {
        let q = (0..code.l_size())
            .flat_map(|_| dirichlet(rng, yn * zn))
            .collect();
        Ok((q, dirichlet(rng, zn)))
    }
}

fn result(trial: usize, holds: bool, lhs: f64, rhs: f64) -> TrialResult {
    TrialResult {
        trial,
        holds,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

fn identity_result(trial: usize, holds: bool, a: f64, b: f64, tol: f64) -> TrialResult {
    TrialResult {
        trial,
        holds,
        lhs: a,
        rhs: b,
        margin: tol - (a - b).abs(),
    }
}

fn tilt(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (log_uniform(rng, 0.2, 5.0), rng.gen_range(0.05..0.9))
}

fn run_trial(
    suite: Suite,
    cfg: &SuiteConfig,
    trial: usize,
    pool: &[(DegradedPair<f64>, OmegaTable<f64>)],
) -> Result<TrialResult, ConverseError> {
    let mut rng = stream_rng(cfg.seed, trial as u64 + 1);
    let n = cfg.n;
    let opt = OptConfig::default().with_seed(point_seed(cfg.seed, trial));
    match suite {
        Suite::Lemma1 | Suite::AppendixC => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let code = random_block_code(&mut rng, &ch, n, false)?;
            let eta = log_uniform(&mut rng, 1e-3, 2.0);
            let (q, qz) = lemma1_inputs(&mut rng, &code, &ch)?;
            if suite == Suite::Lemma1 {
                let c = lemma1_check(&code, &ch, eta, &q, &qz)?;
                Ok(result(trial, c.holds, c.lhs, c.rhs))
            } else {
                let c = appendix_c_check(&code, &ch, eta, &q, &qz)?;
                let worst = c.delta1.max(c.delta2);
                Ok(result(trial, c.holds, worst, c.remainder_bound))
            }
        }
        Suite::Lemma2 => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let code = random_block_code(&mut rng, &ch, n, false)?;
            let eta = log_uniform(&mut rng, 1e-3, 2.0);
            let law = BlockLaw::from_code(&code, ch.x_size())?;
            let qn = random_qn(&mut rng, &ch, &law)?;
            let c = lemma2_check(&code, &ch, eta, &qn)?;
            Ok(result(trial, c.holds && c.holds_factor3, c.lhs, c.rhs))
        }
        Suite::Prop1 => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let code = random_block_code(&mut rng, &ch, n, false)?;
            let law = BlockLaw::from_code(&code, ch.x_size())?;
            let qn = random_qn(&mut rng, &ch, &law)?;
            let (mu, theta) = (
                log_uniform(&mut rng, 0.1, 10.0),
                log_uniform(&mut rng, 0.01, 5.0),
            );
            let c = proposition1_bound(&code, &ch, mu, theta, &qn)?;
            Ok(result(trial, c.holds && c.chain_holds, c.pc, c.bound))
        }
        Suite::Lemma6 => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let l = rng.gen_range(1..=MAX_MESSAGES);
            let law = BlockLaw::random(n, l, ch.x_size(), &mut rng)?;
            let qn = random_qn(&mut rng, &ch, &law)?;
            let (mu, theta) = (
                log_uniform(&mut rng, 0.1, 10.0),
                log_uniform(&mut rng, 0.01, 5.0),
            );
            let tr = telescope(&law, &ch, &qn, mu, theta)?;
            let marginal_ok = tr
                .phi_values
                .iter()
                .zip(&tr.phi_marginal)
                .all(|(a, b)| (a - b).abs() <= RECURSION_TOL * a.abs().max(1.0));
            let holds = tr.lemma6_gap() <= LEMMA6_TOL
                && tr.normalizer_gap() <= RECURSION_TOL
                && tr.max_recursion_deviation() <= RECURSION_TOL
                && tr.max_mass_deviation() <= MASS_TOL
                && marginal_ok;
            Ok(identity_result(
                trial,
                holds,
                tr.log_phi_sum,
                tr.omega_direct,
                LEMMA6_TOL,
            ))
        }
        Suite::Holder => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let l = rng.gen_range(1..=MAX_MESSAGES);
            let law = BlockLaw::random(n, l, ch.x_size(), &mut rng)?;
            let (mu, theta) = tilt(&mut rng);
            let params = TiltParams::from_theta(mu, theta)?;
            let om = omega_max(&ch, params, &opt)?.value;
            let checks = holder_step_check(&law, &ch, params, om)?;
            let holds = checks.iter().all(|h| h.holds_local && h.holds_global);
            let worst = checks
                .iter()
                .map(|h| h.phi.ln() - h.omega_qt / (1.0 + params.lambda))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(result(trial, holds, worst, 0.0))
        }
        Suite::Prop2 => {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let code = random_block_code(&mut rng, &ch, n, false)?;
            let (mu, theta) = tilt(&mut rng);
            let params = TiltParams::from_theta(mu, theta)?;
            let om = omega_max(&ch, params, &opt)?.value;
            let c = proposition2_check(&code, &ch, params, om)?;
            Ok(result(
                trial,
                c.holds && c.chain_holds,
                c.normalized_log_phi,
                c.bound,
            ))
        }
        Suite::PerCode => {
            let (ch, table) = &pool[rng.gen_range(0..pool.len())];
            let code = random_block_code(&mut rng, ch, n, true)?;
            let report = table.f_star_converged(code.rates());
            let c = per_code_converse(&code, ch, &report)?;
            Ok(result(trial, c.holds, c.floor, c.decay))
        }
    }
}

/// Channel pool with precomputed `Ω` tables for the per-code suite.
fn percode_pool(
    cfg: &SuiteConfig,
) -> Result<Vec<(DegradedPair<f64>, OmegaTable<f64>)>, ConverseError> {
    let mut rng = stream_rng(cfg.seed, 0);
    let mu_grid = log_spaced_grid(0.1, 10.0, 9);
    let lambda_grid = log_spaced_grid(0.05, 5.0, 9);
    (0..4)
        .map(|i| {
            let ch = random_channel(&mut rng, cfg.alphabet);
            let opt = OptConfig::default().with_seed(point_seed(cfg.seed, 1 << 20 | i));
            let table = OmegaTable::compute(&ch, &mu_grid, &lambda_grid, &opt)?;
            Ok((ch, table))
        })
        .collect()
}

/// Runs `cfg.trials` random instances of a checker. Refuses before doing
/// any work when the largest instance would exceed the enumeration budget.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport, ConverseError> {
    let estimated_cost = check_config(suite, cfg)?;
    let pool = if suite == Suite::PerCode {
        percode_pool(cfg)?
    } else {
        Vec::new()
    };
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(suite, cfg, i, &pool))
        .collect::<Result<Vec<_>, _>>()?;
    let failed = results.iter().filter(|r| !r.holds).count();
    let worst_margin = results
        .iter()
        .map(|r| r.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(SuiteReport {
        suite,
        config: *cfg,
        estimated_cost,
        passed: results.len() - failed,
        failed,
        worst_margin,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("lemma9".parse::<Suite>().is_err());
    }

    #[test]
    fn budget_refusal_before_work() {
        let cfg = SuiteConfig {
            n: 9,
            trials: 1,
            seed: 1,
            alphabet: 3,
        };
        assert!(matches!(
            run_suite(Suite::Lemma1, &cfg),
            Err(ConverseError::Budget { .. })
        ));
    }

    #[test]
    fn small_suites_hold() {
        for s in [
            Suite::Lemma1,
            Suite::Lemma2,
            Suite::Prop1,
            Suite::Lemma6,
            Suite::AppendixC,
        ] {
            let cfg = SuiteConfig {
                n: 2,
                trials: 12,
                seed: 3,
                alphabet: 2,
            };
            let r = run_suite(s, &cfg).unwrap();
            assert!(
                r.all_hold(),
                "{s}: {:?}",
                r.results.iter().find(|t| !t.holds)
            );
        }
    }

    #[test]
    fn reproducible() {
        let cfg = SuiteConfig {
            n: 2,
            trials: 6,
            seed: 9,
            alphabet: 2,
        };
        let a = run_suite(Suite::Prop1, &cfg).unwrap();
        let b = run_suite(Suite::Prop1, &cfg).unwrap();
        assert_eq!(a.results, b.results);
    }
}
