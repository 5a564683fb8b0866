//! Block codes over a degraded broadcast channel and their exact
//! correct-decoding probability.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::montecarlo::{count_successes, sample_categorical, McEstimate};
use super::{check_budget, enumeration_cost, ConverseError};
use crate::capacity::RatePair;
use crate::prob::{DegradedPair, StochasticMatrix};
use crate::scalar::CompensatedSum;

/// Length-`n` sequences over an alphabet of size `alphabet`, indexed in
/// mixed radix with the first letter most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeqSpace {
    pub alphabet: usize,
    pub n: usize,
}

impl SeqSpace {
    pub fn new(alphabet: usize, n: usize) -> Self {
        Self { alphabet, n }
    }

    pub fn size(&self) -> usize {
        self.prefix_size(self.n)
    }

    /// Number of length-`t` prefixes.
    pub fn prefix_size(&self, t: usize) -> usize {
        self.alphabet.pow(t as u32)
    }

    /// Letter at position `t` (1-based).
    #[inline]
    pub fn symbol(&self, idx: usize, t: usize) -> usize {
        (idx / self.prefix_size(self.n - t)) % self.alphabet
    }

    /// Index of the length-`t` prefix among length-`t` sequences.
    #[inline]
    pub fn prefix(&self, idx: usize, t: usize) -> usize {
        idx / self.prefix_size(self.n - t)
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        (1..=self.n).map(|t| self.symbol(idx, t)).collect()
    }

    pub fn index_of(&self, symbols: &[usize]) -> usize {
        symbols.iter().fold(0, |acc, &s| acc * self.alphabet + s)
    }
}

/// `W1^n`, `W2^n` and the composite `(W1 W2)^n` as dense matrices over
/// sequence indices.
#[derive(Debug, Clone)]
pub struct ProductKernels {
    pub xs: SeqSpace,
    pub ys: SeqSpace,
    pub zs: SeqSpace,
    pub w1n: Vec<f64>,
    pub w2n: Vec<f64>,
    pub wcn: Vec<f64>,
}

fn product_kernel(w: &StochasticMatrix<f64>, n: usize) -> Vec<f64> {
    let (a, b) = (w.input_size(), w.output_size());
    let mut cur = vec![1.0];
    let (mut rows, mut cols) = (1usize, 1usize);
    for _ in 0..n {
        let (nr, nc) = (rows * a, cols * b);
        let mut next = vec![0.0; nr * nc];
        for i in 0..nr {
            for j in 0..nc {
                next[i * nc + j] = cur[(i / a) * cols + j / b] * w.get(i % a, j % b);
            }
        }
        cur = next;
        rows = nr;
        cols = nc;
    }
    cur
}

impl ProductKernels {
    pub fn new(channel: &DegradedPair<f64>, n: usize) -> Self {
        Self {
            xs: SeqSpace::new(channel.x_size(), n),
            ys: SeqSpace::new(channel.y_size(), n),
            zs: SeqSpace::new(channel.z_size(), n),
            w1n: product_kernel(channel.w1(), n),
            w2n: product_kernel(channel.w2(), n),
            wcn: product_kernel(&channel.composite(), n),
        }
    }

    #[inline]
    pub fn w1(&self, x: usize, y: usize) -> f64 {
        self.w1n[x * self.ys.size() + y]
    }

    #[inline]
    pub fn w2(&self, y: usize, z: usize) -> f64 {
        self.w2n[y * self.zs.size() + z]
    }

    #[inline]
    pub fn wc(&self, x: usize, z: usize) -> f64 {
        self.wcn[x * self.zs.size() + z]
    }
}

/// A stochastic encoder `φ(x^n | k, l)` with deterministic decoders
/// `ψ1: Y^n → K` and `ψ2: Z^n → L`. Messages are uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCode {
    n: usize,
    k_size: usize,
    l_size: usize,
    x_size: usize,
    y_size: usize,
    z_size: usize,
    /// Row `k * l_size + l` is the distribution of `x^n` for message `(k, l)`.
    encoder: StochasticMatrix<f64>,
    dec1: Vec<usize>,
    dec2: Vec<usize>,
}

impl BlockCode {
    pub fn new(
        channel: &DegradedPair<f64>,
        n: usize,
        k_size: usize,
        l_size: usize,
        encoder: StochasticMatrix<f64>,
        dec1: Vec<usize>,
        dec2: Vec<usize>,
    ) -> Result<Self, ConverseError> {
        if n == 0 || k_size == 0 || l_size == 0 {
            return Err(ConverseError::InvalidCode(
                "blocklength and message sets must be non-empty".into(),
            ));
        }
        let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
        let too_big = |a: usize| a.checked_pow(n as u32).is_none();
        if too_big(xs) || too_big(ys) || too_big(zs) {
            return Err(ConverseError::InvalidCode(
                "sequence space does not fit in memory".into(),
            ));
        }
        let (xn, yn, zn) = (xs.pow(n as u32), ys.pow(n as u32), zs.pow(n as u32));
        if encoder.input_size() != k_size * l_size || encoder.output_size() != xn {
            return Err(ConverseError::InvalidCode(format!(
                "encoder is {}x{}, expected {}x{}",
                encoder.input_size(),
                encoder.output_size(),
                k_size * l_size,
                xn
            )));
        }
        if dec1.len() != yn || dec1.iter().any(|&k| k >= k_size) {
            return Err(ConverseError::InvalidCode(
                "first decoder must map every y^n into K".into(),
            ));
        }
        if dec2.len() != zn || dec2.iter().any(|&l| l >= l_size) {
            return Err(ConverseError::InvalidCode(
                "second decoder must map every z^n into L".into(),
            ));
        }
        Ok(Self {
            n,
            k_size,
            l_size,
            x_size: xs,
            y_size: ys,
            z_size: zs,
            encoder,
            dec1,
            dec2,
        })
    }

    /// Deterministic encoder sending `codewords[k * l_size + l]`, with MAP decoders.
    pub fn deterministic(
        channel: &DegradedPair<f64>,
        n: usize,
        k_size: usize,
        l_size: usize,
        codewords: &[usize],
    ) -> Result<Self, ConverseError> {
        let xn = SeqSpace::new(channel.x_size(), n).size();
        if codewords.len() != k_size * l_size || codewords.iter().any(|&c| c >= xn) {
            return Err(ConverseError::InvalidCode(
                "one codeword index per message pair".into(),
            ));
        }
        let mut data = vec![0.0; k_size * l_size * xn];
        for (m, &c) in codewords.iter().enumerate() {
            data[m * xn + c] = 1.0;
        }
        let encoder = StochasticMatrix::new(k_size * l_size, xn, data)?;
        let (dec1, dec2) = map_decoders(channel, n, k_size, l_size, &encoder);
        Self::new(channel, n, k_size, l_size, encoder, dec1, dec2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_size(&self) -> usize {
        self.k_size
    }

    pub fn l_size(&self) -> usize {
        self.l_size
    }

    pub fn encoder(&self) -> &StochasticMatrix<f64> {
        &self.encoder
    }

    pub fn encoder_row(&self, k: usize, l: usize) -> &[f64] {
        self.encoder.row(k * self.l_size + l)
    }

    pub fn dec1(&self) -> &[usize] {
        &self.dec1
    }

    pub fn dec2(&self) -> &[usize] {
        &self.dec2
    }

    /// `((1/n) ln |K|, (1/n) ln |L|)`.
    pub fn rates(&self) -> RatePair<f64> {
        RatePair {
            r1: (self.k_size as f64).ln() / self.n as f64,
            r2: (self.l_size as f64).ln() / self.n as f64,
        }
    }

    pub fn enumeration_cost(&self) -> f64 {
        enumeration_cost(
            self.n,
            self.k_size,
            self.l_size,
            self.x_size,
            self.y_size,
            self.z_size,
        )
    }

    pub(crate) fn check_channel(&self, channel: &DegradedPair<f64>) -> Result<(), ConverseError> {
        if (channel.x_size(), channel.y_size(), channel.z_size())
            != (self.x_size, self.y_size, self.z_size)
        {
            return Err(ConverseError::InvalidCode(
                "code alphabets do not match the channel".into(),
            ));
        }
        Ok(())
    }
}

/// Per-receiver MAP decoders for a given encoder; ties go to the smallest message.
pub fn map_decoders(
    channel: &DegradedPair<f64>,
    n: usize,
    k_size: usize,
    l_size: usize,
    encoder: &StochasticMatrix<f64>,
) -> (Vec<usize>, Vec<usize>) {
    let kern = ProductKernels::new(channel, n);
    let (xn, yn, zn) = (kern.xs.size(), kern.ys.size(), kern.zs.size());
    let mut score1 = vec![0.0; yn * k_size];
    let mut score2 = vec![0.0; zn * l_size];
    for k in 0..k_size {
        for l in 0..l_size {
            let row = encoder.row(k * l_size + l);
            for x in 0..xn {
                let p = row[x];
                if p == 0.0 {
                    continue;
                }
                for y in 0..yn {
                    score1[y * k_size + k] += p * kern.w1(x, y);
                }
                for z in 0..zn {
                    score2[z * l_size + l] += p * kern.wc(x, z);
                }
            }
        }
    }
    let argmax = |s: &[f64]| {
        let mut best = 0;
        for (i, &v) in s.iter().enumerate() {
            if v > s[best] {
                best = i;
            }
        }
        best
    };
    let dec1 = (0..yn)
        .map(|y| argmax(&score1[y * k_size..(y + 1) * k_size]))
        .collect();
    let dec2 = (0..zn)
        .map(|z| argmax(&score2[z * l_size..(z + 1) * l_size]))
        .collect();
    (dec1, dec2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EncoderStyle {
    /// One codeword per message pair.
    Deterministic,
    /// Random rows with a random support size.
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecoderStyle {
    Map,
    /// Uniformly random decoding tables.
    Random,
}

/// Draws a random code of the requested shape.
pub fn random_code(
    channel: &DegradedPair<f64>,
    n: usize,
    k_size: usize,
    l_size: usize,
    encoder: EncoderStyle,
    decoder: DecoderStyle,
    rng: &mut ChaCha8Rng,
) -> Result<BlockCode, ConverseError> {
    let xn = SeqSpace::new(channel.x_size(), n).size();
    let rows = k_size * l_size;
    let mut data = vec![0.0; rows * xn];
    for m in 0..rows {
        let row = &mut data[m * xn..(m + 1) * xn];
        match encoder {
            EncoderStyle::Deterministic => row[rng.gen_range(0..xn)] = 1.0,
            EncoderStyle::Stochastic => {
                let support = rng.gen_range(1..=xn);
                for _ in 0..support {
                    row[rng.gen_range(0..xn)] += -(1.0 - rng.gen::<f64>()).ln();
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    let enc = StochasticMatrix::new(rows, xn, data)?;
    let (dec1, dec2) = match decoder {
        DecoderStyle::Map => map_decoders(channel, n, k_size, l_size, &enc),
        DecoderStyle::Random => (
            (0..SeqSpace::new(channel.y_size(), n).size())
                .map(|_| rng.gen_range(0..k_size))
                .collect(),
            (0..SeqSpace::new(channel.z_size(), n).size())
                .map(|_| rng.gen_range(0..l_size))
                .collect(),
        ),
    };
    BlockCode::new(channel, n, k_size, l_size, enc, dec1, dec2)
}

/// Exact decoding probabilities of a code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeProbabilities {
    /// Both receivers decode correctly.
    pub pc: f64,
    pub pe: f64,
    pub pe1: f64,
    pub pe2: f64,
}

/// `P_c`, `P_e`, `P_{e,1}`, `P_{e,2}` by full summation over messages and
/// sequences. Each probability is summed directly, not as a complement.
pub fn exact_probabilities(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
) -> Result<CodeProbabilities, ConverseError> {
    code.check_channel(channel)?;
    check_budget(code.enumeration_cost())?;
    let kern = ProductKernels::new(channel, code.n);
    let (xn, yn, zn) = (kern.xs.size(), kern.ys.size(), kern.zs.size());
    // mass of D2(l) seen from each y^n
    let mut g2 = vec![0.0; yn * code.l_size];
    for y in 0..yn {
        for z in 0..zn {
            g2[y * code.l_size + code.dec2[z]] += kern.w2(y, z);
        }
    }
    let norm = 1.0 / (code.k_size * code.l_size) as f64;
    let (mut pc, mut pe, mut pe1, mut pe2) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for k in 0..code.k_size {
        for l in 0..code.l_size {
            let row = code.encoder_row(k, l);
            for x in 0..xn {
                let px = row[x] * norm;
                if px == 0.0 {
                    continue;
                }
                for y in 0..yn {
                    let w = px * kern.w1(x, y);
                    if w == 0.0 {
                        continue;
                    }
                    let hit2 = g2[y * code.l_size + l];
                    if code.dec1[y] == k {
                        pc.add(w * hit2);
                        pe.add(w * (1.0 - hit2));
                    } else {
                        pe1.add(w);
                        pe.add(w);
                    }
                }
                for z in 0..zn {
                    if code.dec2[z] != l {
                        pe2.add(px * kern.wc(x, z));
                    }
                }
            }
        }
    }
    Ok(CodeProbabilities {
        pc: pc.value(),
        pe: pe.value(),
        pe1: pe1.value(),
        pe2: pe2.value(),
    })
}

/// Simulates a code letter by letter and counts joint successes.
pub fn monte_carlo_code(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, ConverseError> {
    code.check_channel(channel)?;
    let ys = SeqSpace::new(channel.y_size(), code.n);
    let zs = SeqSpace::new(channel.z_size(), code.n);
    let xs = SeqSpace::new(channel.x_size(), code.n);
    let successes = count_successes(samples, seed, |rng| {
        let k = rng.gen_range(0..code.k_size);
        let l = rng.gen_range(0..code.l_size);
        let x = sample_categorical(rng, code.encoder_row(k, l));
        let (mut y, mut z) = (0, 0);
        for t in 1..=code.n {
            let yt = sample_categorical(rng, channel.w1().row(xs.symbol(x, t)));
            let zt = sample_categorical(rng, channel.w2().row(yt));
            y = y * ys.alphabet + yt;
            z = z * zs.alphabet + zt;
        }
        code.dec1[y] == k && code.dec2[z] == l
    });
    Ok(McEstimate::from_counts(
        code.n,
        code.k_size,
        code.l_size,
        samples,
        successes,
    ))
}
