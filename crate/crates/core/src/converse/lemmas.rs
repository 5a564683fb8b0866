//! Exact-enumeration checkers for the finite-`n` converse inequalities.
//!
//! Every check compares an exactly computed `P_c` (or a piece of it) with
//! the right-hand side of a proved inequality, so `holds == false` always
//! indicates a bug. Events of the form `statistic >= threshold` include
//! the boundary up to [`EVENT_TOL`] on the log scale, since exact ties are
//! common for symmetric channels and rounding must not decide them.

use serde::Serialize;

use super::code::{exact_probabilities, BlockCode, ProductKernels, SeqSpace};
use super::law::{BlockLaw, ZConditional};
use super::testdist::NLetterTestDist;
use super::{check_budget, ConverseError};
use crate::capacity::RatePair;
use crate::exponent::ExponentReport;
use crate::prob::{validate_probs, validate_rows, DegradedPair};
use crate::scalar::CompensatedSum;

/// Slack on log-likelihood thresholds.
pub const EVENT_TOL: f64 = 1e-9;
/// Relative slack when comparing a probability with its upper bound.
pub const BOUND_RTOL: f64 = 1e-12;

pub(crate) fn le_bound(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_RTOL * rhs.abs().max(1e-300) + 1e-300
}

/// Streaming `ln Σ e^{v}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v.is_nan() || v == f64::INFINITY {
            self.max = v;
            self.scaled = 1.0;
            return;
        }
        if v > self.max {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.scaled += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY || !self.max.is_finite() {
            self.max
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Per-letter log-ratio tables for one `(p^(n), q^n)` pair.
pub(crate) struct LetterLogs<'a> {
    q: &'a NLetterTestDist,
    zc: ZConditional,
    n: usize,
    xs: SeqSpace,
    ys: SeqSpace,
    zs: SeqSpace,
    ln_w1: Vec<f64>,
}

impl<'a> LetterLogs<'a> {
    pub fn new(
        law: &BlockLaw,
        channel: &DegradedPair<f64>,
        q: &'a NLetterTestDist,
    ) -> Result<Self, ConverseError> {
        let n = law.n();
        if q.n() != n || q.l_size() != law.l_size() {
            return Err(ConverseError::Invalid(format!(
                "q^n has n = {}, |L| = {}; the law has n = {}, |L| = {}",
                q.n(),
                q.l_size(),
                n,
                law.l_size()
            )));
        }
        let w1 = channel.w1();
        Ok(Self {
            q,
            zc: ZConditional::new(law, channel),
            n,
            xs: SeqSpace::new(channel.x_size(), n),
            ys: SeqSpace::new(channel.y_size(), n),
            zs: SeqSpace::new(channel.z_size(), n),
            ln_w1: w1.as_slice().iter().map(|p| p.ln()).collect(),
        })
    }

    /// `(Σ_t ln W1(y_t|x_t)/q_{Y_t|U_t}(y_t|u_t), Σ_t ln p_{Z_t|V_t}(z_t|v_t)/q_{Z_t}(z_t))`.
    pub fn sums(&self, l: usize, x: usize, y: usize, z: usize) -> (f64, f64) {
        let (mut a, mut b) = (0.0, 0.0);
        let zsz = self.zs.alphabet;
        for t in 1..=self.n {
            let (xt, yt, zt) = (
                self.xs.symbol(x, t),
                self.ys.symbol(y, t),
                self.zs.symbol(z, t),
            );
            let (yh, zh) = (self.ys.prefix(y, t - 1), self.zs.prefix(z, t - 1));
            let step = self.q.step(t);
            let u = self.q.u_index(t, l, yh, zh);
            let v = l * zsz.pow(t as u32 - 1) + zh;
            a += self.ln_w1[xt * self.ys.alphabet + yt] - step.q_y_given_u(u, yt).ln();
            b += self.zc.get(t, v, zt).ln() - step.q_z(zt).ln();
        }
        (a, b)
    }
}

fn check_eta(eta: f64) -> Result<(), ConverseError> {
    if eta > 0.0 && !eta.is_nan() {
        Ok(())
    } else {
        Err(ConverseError::Invalid(format!(
            "η must be positive, got {eta}"
        )))
    }
}

/// Probability of the Lemma 2 event under `p^(n)`:
/// `R1 <= (1/n) Σ ln W1/q_{Y|U} + η` and `R2 <= (1/n) Σ ln p_{Z|V}/q_Z + η`.
pub(crate) fn per_letter_event(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    qn: &NLetterTestDist,
    rates: RatePair<f64>,
    eta: f64,
) -> Result<f64, ConverseError> {
    let logs = LetterLogs::new(law, channel, qn)?;
    let kern = ProductKernels::new(channel, law.n());
    let n = law.n() as f64;
    let (t1, t2) = (
        n * (rates.r1 - eta) - EVENT_TOL,
        n * (rates.r2 - eta) - EVENT_TOL,
    );
    let mut acc = CompensatedSum::new();
    law.for_each_point(&kern, |l, x, y, z, m| {
        let (a, b) = logs.sums(l, x, y, z);
        if a >= t1 && b >= t2 {
            acc.add(m);
        }
    });
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub n: usize,
    pub eta: f64,
    /// Exact `P_c`.
    pub lhs: f64,
    pub event_prob: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn validate_lemma1_inputs(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    q_yz_given_l: &[f64],
    q_z_tilde: &[f64],
) -> Result<(usize, usize), ConverseError> {
    let yn = SeqSpace::new(channel.y_size(), code.n()).size();
    let zn = SeqSpace::new(channel.z_size(), code.n()).size();
    let r = validate_rows(q_yz_given_l, code.l_size(), yn * zn);
    if !r.is_ok() {
        return Err(ConverseError::Invalid(format!("q_(Y^n Z^n | L): {r}")));
    }
    if q_z_tilde.len() != zn {
        return Err(ConverseError::Invalid(format!(
            "q~_(Z^n) needs {zn} entries"
        )));
    }
    let r = validate_probs(q_z_tilde);
    if !r.is_ok() {
        return Err(ConverseError::Invalid(format!("q~_(Z^n): {r}")));
    }
    Ok((yn, zn))
}

/// Lemma 1 at the code's own rates. `q_yz_given_l` is `|L| x (|Y|^n |Z|^n)`
/// with `y^n` major; `q_z_tilde` is a law on `Z^n`.
pub fn lemma1_check(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    eta: f64,
    q_yz_given_l: &[f64],
    q_z_tilde: &[f64],
) -> Result<Lemma1Check, ConverseError> {
    check_eta(eta)?;
    code.check_channel(channel)?;
    check_budget(code.enumeration_cost())?;
    let (_, zn) = validate_lemma1_inputs(code, channel, q_yz_given_l, q_z_tilde)?;
    let pc = exact_probabilities(code, channel)?.pc;
    let law = BlockLaw::from_code(code, channel.x_size())?;
    let pz = law.z_prefix(channel).pop().unwrap_or_default();
    let kern = ProductKernels::new(channel, code.n());
    let n = code.n() as f64;
    let t1 = (code.k_size() as f64).ln() - n * eta - EVENT_TOL;
    let t2 = (code.l_size() as f64).ln() - n * eta - EVENT_TOL;
    let yzn = kern.ys.size() * zn;
    let mut acc = CompensatedSum::new();
    law.for_each_point(&kern, |l, x, y, z, m| {
        let a = (kern.w1(x, y) * kern.w2(y, z)).ln() - q_yz_given_l[l * yzn + y * zn + z].ln();
        let b = pz[l * zn + z].ln() - q_z_tilde[z].ln();
        if a >= t1 && b >= t2 {
            acc.add(m);
        }
    });
    let event_prob = acc.value();
    let rhs = event_prob + 2.0 * (-n * eta).exp();
    Ok(Lemma1Check {
        n: code.n(),
        eta,
        lhs: pc,
        event_prob,
        rhs,
        holds: le_bound(pc, rhs),
    })
}

/// The decomposition `P_c <= Δ0 + Δ1 + Δ2` behind Lemma 1, with each
/// remainder checked on its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixCCheck {
    pub n: usize,
    pub eta: f64,
    pub pc: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `e^{-nη}`.
    pub remainder_bound: f64,
    pub delta1_holds: bool,
    pub delta2_holds: bool,
    pub sum_holds: bool,
    pub holds: bool,
}

/// `A1(l)`: `W1^n W2^n >= |K| e^{-nη} q(y^n, z^n | l)`;
/// `A2(l)`: `p(z^n | l) >= |L| e^{-nη} q~(z^n)`.
pub fn appendix_c_check(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    eta: f64,
    q_yz_given_l: &[f64],
    q_z_tilde: &[f64],
) -> Result<AppendixCCheck, ConverseError> {
    check_eta(eta)?;
    code.check_channel(channel)?;
    check_budget(code.enumeration_cost())?;
    let (yn, zn) = validate_lemma1_inputs(code, channel, q_yz_given_l, q_z_tilde)?;
    let pc = exact_probabilities(code, channel)?.pc;
    let law = BlockLaw::from_code(code, channel.x_size())?;
    let pz = law.z_prefix(channel).pop().unwrap_or_default();
    let kern = ProductKernels::new(channel, code.n());
    let xn = kern.xs.size();
    let n = code.n() as f64;
    let t1 = (code.k_size() as f64).ln() - n * eta - EVENT_TOL;
    let t2 = (code.l_size() as f64).ln() - n * eta - EVENT_TOL;
    let norm = 1.0 / (code.k_size() * code.l_size()) as f64;
    let (mut d0, mut d1, mut d2) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for k in 0..code.k_size() {
        for l in 0..code.l_size() {
            let row = code.encoder_row(k, l);
            let a2: Vec<bool> = (0..zn)
                .map(|z| pz[l * zn + z].ln() - q_z_tilde[z].ln() >= t2)
                .collect();
            for x in 0..xn {
                if row[x] == 0.0 {
                    continue;
                }
                for y in 0..yn {
                    let w1 = kern.w1(x, y);
                    if w1 == 0.0 {
                        continue;
                    }
                    let hit1 = code.dec1()[y] == k;
                    for z in 0..zn {
                        let w = w1 * kern.w2(y, z);
                        if w == 0.0 {
                            continue;
                        }
                        let m = norm * row[x] * w;
                        let a1 = w.ln() - q_yz_given_l[l * yn * zn + y * zn + z].ln() >= t1;
                        if a1 && a2[z] {
                            d0.add(m);
                        }
                        if hit1 && code.dec2()[z] == l {
                            if !a1 {
                                d1.add(m);
                            }
                            if !a2[z] {
                                d2.add(m);
                            }
                        }
                    }
                }
            }
        }
    }
    let (delta0, delta1, delta2) = (d0.value(), d1.value(), d2.value());
    let remainder_bound = (-n * eta).exp();
    let delta1_holds = le_bound(delta1, remainder_bound);
    let delta2_holds = le_bound(delta2, remainder_bound);
    let sum_holds = le_bound(pc, delta0 + delta1 + delta2);
    Ok(AppendixCCheck {
        n: code.n(),
        eta,
        pc,
        delta0,
        delta1,
        delta2,
        remainder_bound,
        delta1_holds,
        delta2_holds,
        sum_holds,
        holds: delta1_holds && delta2_holds && sum_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Check {
    pub n: usize,
    pub eta: f64,
    pub lhs: f64,
    pub event_prob: f64,
    /// Event probability plus `2 e^{-nη}`.
    pub rhs: f64,
    /// Event probability plus `3 e^{-nη}`.
    pub rhs_factor3: f64,
    pub holds: bool,
    pub holds_factor3: bool,
}

/// Lemma 2 at the code's own rates with an arbitrary `q^n`. `holds` uses
/// the constant 2, which implies the form with 3.
pub fn lemma2_check(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    eta: f64,
    qn: &NLetterTestDist,
) -> Result<Lemma2Check, ConverseError> {
    check_eta(eta)?;
    code.check_channel(channel)?;
    check_budget(code.enumeration_cost())?;
    let pc = exact_probabilities(code, channel)?.pc;
    let law = BlockLaw::from_code(code, channel.x_size())?;
    let event_prob = per_letter_event(&law, channel, qn, code.rates(), eta)?;
    let slack = (-(code.n() as f64) * eta).exp();
    let (rhs, rhs_factor3) = (event_prob + 2.0 * slack, event_prob + 3.0 * slack);
    Ok(Lemma2Check {
        n: code.n(),
        eta,
        lhs: pc,
        event_prob,
        rhs,
        rhs_factor3,
        holds: le_bound(pc, rhs),
        holds_factor3: le_bound(pc, rhs_factor3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffCheck {
    pub a: f64,
    pub theta: f64,
    /// `Pr{Z >= a}`.
    pub tail: f64,
    /// `exp(-(θ a - ln E[e^{θ Z}]))`.
    pub bound: f64,
    pub holds: bool,
}

/// Chernoff bound for a finite-support law given as `(probability, value)`.
pub fn chernoff(law: &[(f64, f64)], a: f64, theta: f64) -> Result<ChernoffCheck, ConverseError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(ConverseError::Invalid(format!(
            "θ must be positive, got {theta}"
        )));
    }
    let probs: Vec<f64> = law.iter().map(|&(p, _)| p).collect();
    let r = validate_probs(&probs);
    if !r.is_ok() || law.iter().any(|&(_, v)| !v.is_finite()) {
        return Err(ConverseError::Invalid(format!("law: {r}")));
    }
    let mut lse = LogSumExp::new();
    let mut tail = CompensatedSum::new();
    for &(p, v) in law {
        if p > 0.0 {
            lse.add(p.ln() + theta * v);
            if v >= a {
                tail.add(p);
            }
        }
    }
    let tail = tail.value();
    let bound = (lse.value() - theta * a).exp();
    Ok(ChernoffCheck {
        a,
        theta,
        tail,
        bound,
        holds: le_bound(tail, bound),
    })
}

/// `Ω_{p‖q}^(μ,θ) = ln E_p[Π_t (W1/q_{Y_t|U_t})^{θμ} (p_{Z_t|V_t}/q_{Z_t})^θ]`
/// by direct enumeration of `(l, x^n, y^n, z^n)`.
pub fn omega_p_q(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    qn: &NLetterTestDist,
    mu: f64,
    theta: f64,
) -> Result<f64, ConverseError> {
    if !(mu > 0.0 && theta >= 0.0 && mu.is_finite() && theta.is_finite()) {
        return Err(ConverseError::Invalid(format!("μ = {mu}, θ = {theta}")));
    }
    let cost = law.l_size() as f64
        * ((channel.x_size() * channel.y_size() * channel.z_size()) as f64).powi(law.n() as i32);
    check_budget(cost)?;
    let logs = LetterLogs::new(law, channel, qn)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let kern = ProductKernels::new(channel, law.n());
    let mut lse = LogSumExp::new();
    law.for_each_point(&kern, |l, x, y, z, m| {
        let (a, b) = logs.sums(l, x, y, z);
        lse.add(m.ln() + theta * (mu * a + b));
    });
    Ok(lse.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop1Check {
    pub n: usize,
    pub mu: f64,
    pub theta: f64,
    pub rates: RatePair<f64>,
    pub pc: f64,
    pub omega: f64,
    /// `[θ(μR1 + R2) - Ω/n] / (1 + θ + θμ)`.
    pub eta_star: f64,
    /// `3 e^{-n η*}`.
    pub bound: f64,
    /// Per-letter event probability at `η*`.
    pub event_prob: f64,
    /// Chernoff bound on that event; equals `e^{-n η*}` by the choice of `η*`.
    pub chernoff_value: f64,
    pub holds: bool,
    /// Each step of the chain: event <= Chernoff value, `P_c <= event + 2e^{-nη*}`.
    pub chain_holds: bool,
}

/// Proposition 1 at the code's own rates for any `μ > 0`, `θ > 0`.
pub fn proposition1_bound(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    mu: f64,
    theta: f64,
    qn: &NLetterTestDist,
) -> Result<Prop1Check, ConverseError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(ConverseError::Invalid(format!(
            "θ must be positive, got {theta}"
        )));
    }
    code.check_channel(channel)?;
    check_budget(code.enumeration_cost())?;
    let pc = exact_probabilities(code, channel)?.pc;
    let law = BlockLaw::from_code(code, channel.x_size())?;
    let omega = omega_p_q(&law, channel, qn, mu, theta)?;
    let rates = code.rates();
    let nf = code.n() as f64;
    let eta_star = (theta * (mu * rates.r1 + rates.r2) - omega / nf) / (1.0 + theta + theta * mu);
    let bound = 3.0 * (-nf * eta_star).exp();
    let chernoff_value =
        (nf * (-theta * (mu * rates.r1 + rates.r2) + theta * (mu + 1.0) * eta_star) + omega).exp();
    let event_prob = if eta_star.is_finite() {
        per_letter_event(&law, channel, qn, rates, eta_star)?
    } else {
        1.0
    };
    let chain_holds = le_bound(event_prob, chernoff_value)
        && le_bound(pc, event_prob + 2.0 * (-nf * eta_star).exp());
    Ok(Prop1Check {
        n: code.n(),
        mu,
        theta,
        rates,
        pc,
        omega,
        eta_star,
        bound,
        event_prob,
        chernoff_value,
        holds: le_bound(pc, bound),
        chain_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerCodeCheck {
    pub n: usize,
    pub pc: f64,
    /// `-(1/n) ln P_c`.
    pub decay: f64,
    pub f_value: f64,
    /// `F - (ln 3)/n`.
    pub floor: f64,
    pub holds: bool,
}

/// `-(1/n) ln P_c >= F(R1, R2) - (ln 3)/n` for a code whose rates are at
/// least those of the report.
pub fn per_code_converse(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    report: &ExponentReport<f64>,
) -> Result<PerCodeCheck, ConverseError> {
    let own = code.rates();
    if report.rates.r1 > own.r1 + 1e-12 || report.rates.r2 > own.r2 + 1e-12 {
        return Err(ConverseError::Invalid(format!(
            "code rates ({:.6}, {:.6}) are below the report's ({:.6}, {:.6})",
            own.r1, own.r2, report.rates.r1, report.rates.r2
        )));
    }
    let pc = exact_probabilities(code, channel)?.pc;
    let nf = code.n() as f64;
    let decay = -pc.ln() / nf;
    let floor = report.f_value - 3f64.ln() / nf;
    Ok(PerCodeCheck {
        n: code.n(),
        pc,
        decay,
        f_value: report.f_value,
        floor,
        holds: decay >= floor - BOUND_RTOL * floor.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::converse::code::{random_code, DecoderStyle, EncoderStyle};
    use crate::prob::StochasticMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cascade() -> DegradedPair<f64> {
        DegradedPair::new(
            StochasticMatrix::bsc(0.2).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn chernoff_fair_coin() {
        let c = chernoff(&[(0.5, -1.0), (0.5, 1.0)], 1.0, 1.0).unwrap();
        assert!((c.bound - 1f64.cosh() / 1f64.exp()).abs() < 1e-15);
        assert!((c.bound - 0.5676).abs() < 1e-4);
        assert_eq!(c.tail, 0.5);
        assert!(c.holds);
    }

    #[test]
    fn chernoff_constant_and_below_support() {
        let c = chernoff(&[(1.0, 2.5)], 2.5, 3.0).unwrap();
        assert!((c.bound - 1.0).abs() < 1e-15 && c.holds);
        let c = chernoff(&[(0.3, 1.0), (0.7, 2.0)], 0.0, 0.5).unwrap();
        assert!((c.tail - 1.0).abs() < 1e-15 && c.bound >= 1.0);
    }

    #[test]
    fn lemma1_on_identity_channels() {
        let ch = DegradedPair::new(StochasticMatrix::identity(2), StochasticMatrix::identity(2))
            .unwrap();
        let code = BlockCode::deterministic(&ch, 1, 2, 1, &[0, 1]).unwrap();
        let q = vec![0.25; 4];
        let c = lemma1_check(&code, &ch, 0.3, &q, &[0.5, 0.5]).unwrap();
        assert!(c.holds);
        // vacuous thresholds put all mass in the event
        let c = lemma1_check(&code, &ch, 50.0, &q, &[0.5, 0.5]).unwrap();
        assert!((c.event_prob - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lemma2_with_code_marginals() {
        let ch = cascade();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let code = random_code(
            &ch,
            2,
            2,
            2,
            EncoderStyle::Deterministic,
            DecoderStyle::Map,
            &mut rng,
        )
        .unwrap();
        let law = BlockLaw::from_code(&code, 2).unwrap();
        let q = NLetterTestDist::code_induced(&law, &ch).unwrap();
        for eta in [0.01, 0.1, 0.5, 2.0] {
            let c = lemma2_check(&code, &ch, eta, &q).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn omega_vanishes_without_tilt() {
        let ch = cascade();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let law = BlockLaw::random(2, 2, 2, &mut rng).unwrap();
        let q = NLetterTestDist::random(&ch, 2, 2, &mut rng).unwrap();
        assert_eq!(omega_p_q(&law, &ch, &q, 1.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn proposition1_chain() {
        let ch = cascade();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let code = random_code(
                &ch,
                2,
                3,
                2,
                EncoderStyle::Stochastic,
                DecoderStyle::Map,
                &mut rng,
            )
            .unwrap();
            let q = NLetterTestDist::random(&ch, 2, 2, &mut rng).unwrap();
            let c = proposition1_bound(&code, &ch, 1.5, 0.4, &q).unwrap();
            assert!(c.holds && c.chain_holds, "{c:?}");
            assert!(
                (c.chernoff_value - (-2.0 * c.eta_star).exp()).abs() < 1e-12 * c.chernoff_value
            );
        }
    }

    #[test]
    fn streaming_log_sum_exp() {
        let mut l = LogSumExp::new();
        for v in [-1000.0, 3.0, 2.0, f64::NEG_INFINITY] {
            l.add(v);
        }
        assert!((l.value() - (3.0 + (1.0 + (-1f64).exp()).ln())).abs() < 1e-14);
    }
}
