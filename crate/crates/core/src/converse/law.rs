//! The `n`-letter input law `p(l) p(x^n | l)` and quantities derived from it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::code::{BlockCode, ProductKernels, SeqSpace};
use super::ConverseError;
use crate::prob::{validate_probs, validate_rows, DegradedPair};

/// `p_{L_n}(l) p_{X^n|L_n}(x^n | l)`; with the channel this fixes a member of
/// the `n`-letter class `P^(n)(W1, W2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLaw {
    n: usize,
    xs: SeqSpace,
    p_l: Vec<f64>,
    /// `p(x^t | l)` for `t = 0..=n`, each `|L| x |X|^t`.
    prefix: Vec<Vec<f64>>,
}

impl BlockLaw {
    /// `px_given_l` is row-major `|L| x |X|^n`.
    pub fn new(
        n: usize,
        x_size: usize,
        p_l: Vec<f64>,
        px_given_l: Vec<f64>,
    ) -> Result<Self, ConverseError> {
        let xs = SeqSpace::new(x_size, n);
        let report = validate_probs(&p_l);
        if !report.is_ok() {
            return Err(ConverseError::Invalid(format!("p_L: {report}")));
        }
        let report = validate_rows(&px_given_l, p_l.len(), xs.size());
        if !report.is_ok() {
            return Err(ConverseError::Invalid(format!("p_X|L: {report}")));
        }
        let ls = p_l.len();
        let mut prefix = vec![Vec::new(); n + 1];
        prefix[n] = px_given_l;
        for t in (0..n).rev() {
            let width = xs.prefix_size(t);
            let mut m = vec![0.0; ls * width];
            for l in 0..ls {
                for i in 0..width * x_size {
                    m[l * width + i / x_size] += prefix[t + 1][l * width * x_size + i];
                }
            }
            prefix[t] = m;
        }
        Ok(Self { n, xs, p_l, prefix })
    }

    /// Uniform `L` and `p(x^n | l) = (1/|K|) Σ_k φ(x^n | k, l)`.
    pub fn from_code(code: &BlockCode, x_size: usize) -> Result<Self, ConverseError> {
        let xn = SeqSpace::new(x_size, code.n()).size();
        let (ks, ls) = (code.k_size(), code.l_size());
        let mut px = vec![0.0; ls * xn];
        for l in 0..ls {
            for k in 0..ks {
                for (x, &p) in code.encoder_row(k, l).iter().enumerate() {
                    px[l * xn + x] += p / ks as f64;
                }
            }
        }
        Self::new(code.n(), x_size, vec![1.0 / ls as f64; ls], px)
    }

    /// Random `p(l)` and `p(x^n | l)`, with some rows made sparse.
    pub fn random(
        n: usize,
        l_size: usize,
        x_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, ConverseError> {
        let xn = SeqSpace::new(x_size, n).size();
        let mut dirichlet = |len: usize, sparse: bool| -> Vec<f64> {
            let mut v: Vec<f64> = (0..len)
                .map(|_| {
                    let e = -(1.0 - rng.gen::<f64>()).ln();
                    if sparse && rng.gen_bool(0.5) {
                        0.0
                    } else {
                        e
                    }
                })
                .collect();
            if v.iter().all(|&e| e == 0.0) {
                v[0] = 1.0;
            }
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|e| *e /= s);
            v
        };
        let p_l = dirichlet(l_size, false);
        let mut px = Vec::with_capacity(l_size * xn);
        for l in 0..l_size {
            px.extend(dirichlet(xn, l % 2 == 1));
        }
        Self::new(n, x_size, p_l, px)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_size(&self) -> usize {
        self.p_l.len()
    }

    pub fn x_space(&self) -> SeqSpace {
        self.xs
    }

    pub fn p_l(&self, l: usize) -> f64 {
        self.p_l[l]
    }

    /// `p(x^t | l)` for a length-`t` prefix index.
    pub fn p_prefix(&self, l: usize, t: usize, prefix: usize) -> f64 {
        self.prefix[t][l * self.xs.prefix_size(t) + prefix]
    }

    /// `p(x_t | l, x^{t-1})`; zero when the history itself has zero probability.
    pub fn p_next(&self, l: usize, t: usize, history: usize, x_t: usize) -> f64 {
        let h = self.p_prefix(l, t - 1, history);
        if h <= 0.0 {
            0.0
        } else {
            self.p_prefix(l, t, history * self.xs.alphabet + x_t) / h
        }
    }

    /// `p(z^t | l)` for `t = 0..=n`, each `|L| x |Z|^t`.
    pub fn z_prefix(&self, channel: &DegradedPair<f64>) -> Vec<Vec<f64>> {
        let ls = self.l_size();
        (0..=self.n)
            .map(|t| {
                let kern = ProductKernels::new(channel, t);
                let (xt, zt) = (kern.xs.size(), kern.zs.size());
                let mut m = vec![0.0; ls * zt];
                for l in 0..ls {
                    for x in 0..xt {
                        let p = self.p_prefix(l, t, x);
                        if p == 0.0 {
                            continue;
                        }
                        for z in 0..zt {
                            m[l * zt + z] += p * kern.wc(x, z);
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Calls `f(l, x^n, y^n, z^n, mass)` for every point of positive mass.
    pub fn for_each_point(
        &self,
        kern: &ProductKernels,
        mut f: impl FnMut(usize, usize, usize, usize, f64),
    ) {
        let (xn, yn, zn) = (kern.xs.size(), kern.ys.size(), kern.zs.size());
        for l in 0..self.l_size() {
            for x in 0..xn {
                let px = self.p_l[l] * self.prefix[self.n][l * xn + x];
                if px == 0.0 {
                    continue;
                }
                for y in 0..yn {
                    let pxy = px * kern.w1(x, y);
                    if pxy == 0.0 {
                        continue;
                    }
                    for z in 0..zn {
                        let m = pxy * kern.w2(y, z);
                        if m > 0.0 {
                            f(l, x, y, z, m);
                        }
                    }
                }
            }
        }
    }
}

/// `p_{Z_t | V_t}(z_t | l, z^{t-1})` lookups built from [`BlockLaw::z_prefix`].
#[derive(Debug, Clone)]
pub(crate) struct ZConditional {
    z_size: usize,
    prefix: Vec<Vec<f64>>,
}

impl ZConditional {
    pub fn new(law: &BlockLaw, channel: &DegradedPair<f64>) -> Self {
        Self {
            z_size: channel.z_size(),
            prefix: law.z_prefix(channel),
        }
    }

    /// `v` indexes `(l, z^{t-1})` as `l * |Z|^{t-1} + history`.
    pub fn get(&self, t: usize, v: usize, z_t: usize) -> f64 {
        let den = self.prefix[t - 1][v];
        if den <= 0.0 {
            0.0
        } else {
            self.prefix[t][v * self.z_size + z_t] / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::StochasticMatrix;
    use rand::SeedableRng;

    #[test]
    fn prefixes_marginalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let law = BlockLaw::random(3, 2, 2, &mut rng).unwrap();
        for l in 0..2 {
            assert!((law.p_prefix(l, 0, 0) - 1.0).abs() < 1e-14);
            for h in 0..4 {
                let s: f64 = (0..2).map(|x| law.p_prefix(l, 3, h * 2 + x)).sum();
                assert!((s - law.p_prefix(l, 2, h)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn z_conditional_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let law = BlockLaw::random(2, 3, 2, &mut rng).unwrap();
        let ch = DegradedPair::new(
            StochasticMatrix::bsc(0.2).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap();
        let zc = ZConditional::new(&law, &ch);
        for v in 0..6 {
            let s: f64 = (0..2).map(|z| zc.get(2, v, z)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
