//! Monte Carlo estimates of `P_c` for superposition random codes.
//!
//! Samples are split into fixed-size chunks; chunk `c` draws from ChaCha
//! stream `c + 1` of the seed and the codebook from stream 0, so the
//! success count does not depend on how chunks are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ConverseError;
use crate::capacity::RatePair;
use crate::prob::AuxiliaryJoint;
use crate::scalar::log_sum_exp;

const CHUNK: u64 = 4096;
const Z95: f64 = 1.959_963_984_540_054;
/// Upper limit on `|K||L| n` for simulated codebooks.
const CODEBOOK_LIMIT: f64 = 5e7;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u: f64 = rng.gen();
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    // rounding left a sliver of mass at the end
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub(crate) fn count_successes<F>(samples: u64, seed: u64, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c + 1);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).filter(|_| trial(&mut rng)).count() as u64
        })
        .sum()
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, samples: u64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == samples { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub n: usize,
    pub k_size: usize,
    pub l_size: usize,
    pub samples: u64,
    pub successes: u64,
    pub pc_hat: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    pub(crate) fn from_counts(
        n: usize,
        k_size: usize,
        l_size: usize,
        samples: u64,
        successes: u64,
    ) -> Self {
        let pc_hat = successes as f64 / samples as f64;
        let (ci_low, ci_high) = wilson_interval(successes, samples);
        Self {
            n,
            k_size,
            l_size,
            samples,
            successes,
            pc_hat,
            std_error: (pc_hat * (1.0 - pc_hat) / samples as f64).sqrt(),
            ci_low,
            ci_high,
        }
    }

    /// `-(1/n) ln p̂_c`.
    pub fn decay(&self) -> f64 {
        -self.pc_hat.ln() / self.n as f64
    }

    /// Decay range implied by the confidence interval, `(from ci_high, from ci_low)`.
    pub fn decay_range(&self) -> (f64, f64) {
        (
            -self.ci_high.ln() / self.n as f64,
            -self.ci_low.ln() / self.n as f64,
        )
    }
}

/// Smallest message-set size with `(1/n) ln size >= rate`.
pub(crate) fn message_count(n: usize, rate: f64) -> f64 {
    let v = (n as f64 * rate).exp();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v {
        r.max(1.0)
    } else {
        v.ceil().max(1.0)
    }
}

/// Estimates `P_c` of a superposition random code with cloud centres
/// `u^n(l) ~ p_U` and satellites `x^n(k, l) ~ p_{X|U}(. | u_t(l))`, decoded
/// by per-receiver maximum likelihood (each receiver marginalizes over the
/// other message). Message sets are the smallest meeting the rates.
pub fn monte_carlo_pc(
    aux: &AuxiliaryJoint<f64>,
    rates: RatePair<f64>,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, ConverseError> {
    if samples == 0 || n == 0 {
        return Err(ConverseError::Invalid(
            "samples and blocklength must be positive".into(),
        ));
    }
    let (kf, lf) = (message_count(n, rates.r1), message_count(n, rates.r2));
    let cost = kf * lf * n as f64;
    if cost > CODEBOOK_LIMIT {
        return Err(ConverseError::Budget {
            estimated: cost,
            limit: CODEBOOK_LIMIT,
        });
    }
    let (k_size, l_size) = (kf as usize, lf as usize);
    let ch = aux.channel();
    let wc = ch.composite();
    let ln_w1: Vec<Vec<f64>> = (0..ch.x_size())
        .map(|x| ch.w1().row(x).iter().map(|p| p.ln()).collect())
        .collect();
    let ln_wc: Vec<Vec<f64>> = (0..ch.x_size())
        .map(|x| wc.row(x).iter().map(|p| p.ln()).collect())
        .collect();

    let mut rng = stream_rng(seed, 0);
    let mut book = vec![0usize; k_size * l_size * n];
    for l in 0..l_size {
        let clouds: Vec<usize> = (0..n)
            .map(|_| sample_categorical(&mut rng, aux.p_u().as_slice()))
            .collect();
        for k in 0..k_size {
            for (t, &u) in clouds.iter().enumerate() {
                book[(k * l_size + l) * n + t] =
                    sample_categorical(&mut rng, aux.p_x_given_u().row(u));
            }
        }
    }

    let successes = count_successes(samples, seed, |rng| {
        let k = rng.gen_range(0..k_size);
        let l = rng.gen_range(0..l_size);
        let word = &book[(k * l_size + l) * n..(k * l_size + l + 1) * n];
        let mut y = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for &x in word {
            let yt = sample_categorical(rng, ch.w1().row(x));
            y.push(yt);
            z.push(sample_categorical(rng, ch.w2().row(yt)));
        }
        let ll = |table: &[Vec<f64>], obs: &[usize], m: usize| -> f64 {
            let w = &book[m * n..(m + 1) * n];
            w.iter().zip(obs).map(|(&x, &o)| table[x][o]).sum()
        };
        let ll1: Vec<f64> = (0..k_size * l_size).map(|m| ll(&ln_w1, &y, m)).collect();
        let ll2: Vec<f64> = (0..k_size * l_size).map(|m| ll(&ln_wc, &z, m)).collect();
        let score1 = |kk: usize| log_sum_exp(&ll1[kk * l_size..(kk + 1) * l_size]);
        let score2 = |ll_: usize| {
            let v: Vec<f64> = (0..k_size).map(|kk| ll2[kk * l_size + ll_]).collect();
            log_sum_exp(&v)
        };
        let best = |count: usize, f: &dyn Fn(usize) -> f64| {
            let mut b = 0;
            let mut bv = f(0);
            for i in 1..count {
                let v = f(i);
                if v > bv {
                    b = i;
                    bv = v;
                }
            }
            b
        };
        best(k_size, &score1) == k && best(l_size, &score2) == l
    });
    Ok(McEstimate::from_counts(
        n, k_size, l_size, samples, successes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{DegradedPair, ProbVector, StochasticMatrix};

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn message_counts_round_sensibly() {
        assert_eq!(message_count(2, (2f64).ln() / 2.0), 2.0);
        assert_eq!(message_count(8, 0.0), 1.0);
        assert_eq!(message_count(10, 0.1), 3.0);
    }

    #[test]
    fn zero_rate_code_is_always_correct() {
        let ch = DegradedPair::new(
            StochasticMatrix::bsc(0.3).unwrap(),
            StochasticMatrix::bsc(0.3).unwrap(),
        )
        .unwrap();
        let aux = AuxiliaryJoint::new(
            ProbVector::uniform(2),
            StochasticMatrix::bsc(0.2).unwrap(),
            ch,
        )
        .unwrap();
        let est = monte_carlo_pc(&aux, RatePair::new(0.0, 0.0).unwrap(), 8, 5000, 1).unwrap();
        assert_eq!(est.successes, 5000);
    }

    #[test]
    fn same_seed_same_count() {
        let ch = DegradedPair::new(
            StochasticMatrix::bsc(0.1).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap();
        let aux = AuxiliaryJoint::new(
            ProbVector::uniform(2),
            StochasticMatrix::bsc(0.2).unwrap(),
            ch,
        )
        .unwrap();
        let r = RatePair::new(0.2, 0.1).unwrap();
        let a = monte_carlo_pc(&aux, r, 8, 9000, 42).unwrap();
        let b = monte_carlo_pc(&aux, r, 8, 9000, 42).unwrap();
        assert_eq!(a, b);
    }
}
