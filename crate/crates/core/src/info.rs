//! Entropy and (conditional) mutual information in nats.

use thiserror::Error;

use crate::prob::{validate_probs, AuxiliaryJoint, ProbError, ProbVector};
use crate::scalar::{xlogx, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("divergence is infinite: q({index}) = 0 where p({index}) > 0")]
    Unbounded { index: usize },
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
}

/// Shannon entropy `H(p) = -Σ p ln p` with `0 ln 0 = 0`.
pub fn entropy<T: Real>(v: &ProbVector<T>) -> T {
    entropy_of(v.as_slice())
}

pub fn entropy_of<T: Real>(p: &[T]) -> T {
    -p.iter().map(|&x| xlogx(x)).sum::<T>()
}

/// `D(p || q)`; infinite divergence is an error, never clipped.
pub fn kl_divergence<T: Real>(p: &[T], q: &[T]) -> Result<T, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::Length(p.len(), q.len()));
    }
    let mut d = T::zero();
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > T::zero() {
            if b <= T::zero() {
                return Err(InfoError::Unbounded { index: i });
            }
            d = d + a * (a / b).ln();
        }
    }
    Ok(d)
}

/// Joint law on `A x B`, row-major with `b` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint2<T> {
    a: usize,
    b: usize,
    probs: Vec<T>,
}

impl<T: Real> Joint2<T> {
    pub fn new(a: usize, b: usize, probs: Vec<T>) -> Result<Self, ProbError> {
        if probs.len() != a * b {
            return Err(ProbError::DimensionMismatch {
                what: "joint table entries",
                expected: a * b,
                got: probs.len(),
            });
        }
        let r = validate_probs(&probs);
        if !r.is_ok() {
            return Err(ProbError::Invalid(r.to_string()));
        }
        Ok(Self { a, b, probs })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.probs[i * self.b + j]
    }

    pub fn marginal_a(&self) -> Vec<T> {
        self.probs
            .chunks(self.b)
            .map(|r| r.iter().copied().sum())
            .collect()
    }

    pub fn marginal_b(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.b];
        for row in self.probs.chunks(self.b) {
            for (acc, &p) in m.iter_mut().zip(row) {
                *acc = *acc + p;
            }
        }
        m
    }
}

/// Joint law on `A x B x C`, `c` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint3<T> {
    a: usize,
    b: usize,
    c: usize,
    probs: Vec<T>,
}

impl<T: Real> Joint3<T> {
    pub fn new(a: usize, b: usize, c: usize, probs: Vec<T>) -> Result<Self, ProbError> {
        if probs.len() != a * b * c {
            return Err(ProbError::DimensionMismatch {
                what: "joint table entries",
                expected: a * b * c,
                got: probs.len(),
            });
        }
        let r = validate_probs(&probs);
        if !r.is_ok() {
            return Err(ProbError::Invalid(r.to_string()));
        }
        Ok(Self { a, b, c, probs })
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.probs[(i * self.b + j) * self.c + k]
    }

    pub fn marginal_c(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.c];
        for (idx, &p) in self.probs.iter().enumerate() {
            m[idx % self.c] = m[idx % self.c] + p;
        }
        m
    }

    /// The conditional table of `A x B` given `C = k`, or `None` on zero mass.
    pub fn slice_given_c(&self, k: usize) -> Option<Joint2<T>> {
        let mass = self.marginal_c()[k];
        if mass <= T::zero() {
            return None;
        }
        let mut probs = Vec::with_capacity(self.a * self.b);
        for i in 0..self.a {
            for j in 0..self.b {
                probs.push(self.get(i, j, k) / mass);
            }
        }
        Some(Joint2 {
            a: self.a,
            b: self.b,
            probs,
        })
    }
}

/// `I(A; B) = Σ p(a,b) ln[p(a,b) / (p(a) p(b))]`.
pub fn mutual_information<T: Real>(joint: &Joint2<T>) -> T {
    let pa = joint.marginal_a();
    let pb = joint.marginal_b();
    let mut acc = T::zero();
    for i in 0..joint.a {
        for j in 0..joint.b {
            let p = joint.get(i, j);
            if p > T::zero() {
                acc = acc + p * (p / (pa[i] * pb[j])).ln();
            }
        }
    }
    acc
}

/// `I(A; B | C) = Σ p(a,b,c) ln[p(a,b,c) p(c) / (p(a,c) p(b,c))]`.
pub fn conditional_mutual_information<T: Real>(joint: &Joint3<T>) -> T {
    let (na, nb, nc) = (joint.a, joint.b, joint.c);
    let mut pac = vec![T::zero(); na * nc];
    let mut pbc = vec![T::zero(); nb * nc];
    let mut pc = vec![T::zero(); nc];
    for i in 0..na {
        for j in 0..nb {
            for k in 0..nc {
                let p = joint.get(i, j, k);
                pac[i * nc + k] = pac[i * nc + k] + p;
                pbc[j * nc + k] = pbc[j * nc + k] + p;
                pc[k] = pc[k] + p;
            }
        }
    }
    let mut acc = T::zero();
    for i in 0..na {
        for j in 0..nb {
            for k in 0..nc {
                let p = joint.get(i, j, k);
                if p > T::zero() {
                    acc = acc + p * ((p * pc[k]) / (pac[i * nc + k] * pbc[j * nc + k])).ln();
                }
            }
        }
    }
    acc
}

/// Information quantities of an auxiliary joint that the capacity region uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxInfo<T> {
    /// `I(X; Y | U)`
    pub i_xy_given_u: T,
    /// `I(U; Z)`
    pub i_uz: T,
    /// `I(U; Y)`
    pub i_uy: T,
    /// `I(X; Y)`
    pub i_xy: T,
    /// `I(X; Z)`
    pub i_xz: T,
}

impl<T: Real> AuxiliaryJoint<T> {
    /// Joint table of `(X, Y, U)`.
    pub fn table_xyu(&self) -> Joint3<T> {
        let ch = self.channel();
        let (us, xs, ys) = (self.u_size(), ch.x_size(), ch.y_size());
        let ux = self.joint_ux();
        let mut probs = vec![T::zero(); xs * ys * us];
        for u in 0..us {
            for x in 0..xs {
                for y in 0..ys {
                    probs[(x * ys + y) * us + u] = ux[u * xs + x] * ch.w1().get(x, y);
                }
            }
        }
        Joint3 {
            a: xs,
            b: ys,
            c: us,
            probs,
        }
    }

    fn table_u_out(&self, out: &[Vec<T>], out_size: usize) -> Joint2<T> {
        // out[x] is the law of the output given x
        let xs = self.channel().x_size();
        let ux = self.joint_ux();
        let mut probs = vec![T::zero(); self.u_size() * out_size];
        for u in 0..self.u_size() {
            for x in 0..xs {
                for (o, &w) in out[x].iter().enumerate() {
                    probs[u * out_size + o] = probs[u * out_size + o] + ux[u * xs + x] * w;
                }
            }
        }
        Joint2 {
            a: self.u_size(),
            b: out_size,
            probs,
        }
    }

    pub fn table_uz(&self) -> Joint2<T> {
        let wc = self.channel().composite();
        self.table_u_out(&wc.to_rows(), wc.output_size())
    }

    pub fn table_uy(&self) -> Joint2<T> {
        let w1 = self.channel().w1();
        self.table_u_out(&w1.to_rows(), w1.output_size())
    }

    fn table_x_out(&self, rows: &[Vec<T>], out_size: usize) -> Joint2<T> {
        let m = self.marginals();
        let xs = self.channel().x_size();
        let mut probs = Vec::with_capacity(xs * out_size);
        for x in 0..xs {
            probs.extend(rows[x].iter().map(|&w| m.q_x[x] * w));
        }
        Joint2 {
            a: xs,
            b: out_size,
            probs,
        }
    }

    pub fn info(&self) -> AuxInfo<T> {
        let w1 = self.channel().w1();
        let wc = self.channel().composite();
        AuxInfo {
            i_xy_given_u: conditional_mutual_information(&self.table_xyu()),
            i_uz: mutual_information(&self.table_uz()),
            i_uy: mutual_information(&self.table_uy()),
            i_xy: mutual_information(&self.table_x_out(&w1.to_rows(), w1.output_size())),
            i_xz: mutual_information(&self.table_x_out(&wc.to_rows(), wc.output_size())),
        }
    }

    /// `μ I(X; Y | U) + I(U; Z)`.
    pub fn weighted_rate_sum(&self, mu: T) -> T {
        let info = self.info();
        mu * info.i_xy_given_u + info.i_uz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    type StochasticMatrix = crate::prob::StochasticMatrix<f64>;
    type DegradedPair = crate::prob::DegradedPair<f64>;
    type ProbVector = crate::prob::ProbVector<f64>;
    type AuxiliaryJoint = crate::prob::AuxiliaryJoint<f64>;
    type Joint2 = super::Joint2<f64>;

    #[test]
    fn entropy_examples() {
        let h = entropy(&ProbVector::new(vec![0.5, 0.5]).unwrap());
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&ProbVector::new(vec![1.0, 0.0]).unwrap()), 0.0);
        // -0.1 ln 0.1 - 0.9 ln 0.9
        let h = entropy(&ProbVector::new(vec![0.1, 0.9]).unwrap());
        assert!((h - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_examples() {
        let indep = Joint2::new(2, 2, vec![0.06, 0.14, 0.24, 0.56]).unwrap();
        assert!(mutual_information(&indep).abs() < 1e-15);
        let copy = Joint2::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&copy) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn conditioning_on_x_itself_collapses() {
        let ch = DegradedPair::new(
            StochasticMatrix::bsc(0.2).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap();
        let j =
            AuxiliaryJoint::new(ProbVector::uniform(2), StochasticMatrix::identity(2), ch).unwrap();
        assert!(j.info().i_xy_given_u.abs() < 1e-15);
    }

    #[test]
    fn kl_infinite_is_an_error() {
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
            Err(InfoError::Unbounded { index: 1 })
        );
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 2f64.ln());
    }
}
