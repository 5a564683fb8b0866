//! Finite probability vectors, stochastic kernels, and the degraded channel
//! model `W(y, z | x) = W1(y | x) W2(z | y)`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{lit, Real, SIMPLEX_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// What went wrong with a single entry or row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ViolationKind {
    Empty,
    NonFinite,
    Negative,
    SumMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Matrix row, when the violation comes from a kernel.
    pub row: Option<usize>,
    /// Offending entry; `None` for sum violations.
    pub index: Option<usize>,
    /// Entry value for sign/finiteness failures, `sum - 1` for sum failures.
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.row {
            write!(f, "row {r}: ")?;
        }
        match self.kind {
            ViolationKind::Empty => write!(f, "empty distribution"),
            ViolationKind::NonFinite => {
                write!(f, "entry {} is not finite", self.index.unwrap_or(0))
            }
            ViolationKind::Negative => write!(
                f,
                "entry {} is negative ({:e})",
                self.index.unwrap_or(0),
                self.magnitude
            ),
            ViolationKind::SumMismatch => {
                write!(f, "entries sum to 1{:+e}", self.magnitude)
            }
        }
    }
}

/// Violations found by [`validate_probs`] / [`validate_rows`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

fn check_entries<T: Real>(probs: &[T], row: Option<usize>, out: &mut Vec<Violation>) {
    if probs.is_empty() {
        out.push(Violation {
            kind: ViolationKind::Empty,
            row,
            index: None,
            magnitude: 0.0,
        });
        return;
    }
    let mut finite = true;
    for (i, &p) in probs.iter().enumerate() {
        let m = p.to_f64().unwrap_or(f64::NAN);
        if !p.is_finite() {
            finite = false;
            out.push(Violation {
                kind: ViolationKind::NonFinite,
                row,
                index: Some(i),
                magnitude: m,
            });
        } else if p < T::zero() {
            out.push(Violation {
                kind: ViolationKind::Negative,
                row,
                index: Some(i),
                magnitude: m,
            });
        }
    }
    if finite {
        let sum: T = probs.iter().copied().sum();
        let excess = sum - T::one();
        if excess.abs() > lit(SIMPLEX_TOL) {
            out.push(Violation {
                kind: ViolationKind::SumMismatch,
                row,
                index: None,
                magnitude: excess.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
}

/// Checks simplex membership at tolerance `1e-9`. Never panics.
pub fn validate_probs<T: Real>(probs: &[T]) -> ValidationReport {
    let mut violations = Vec::new();
    check_entries(probs, None, &mut violations);
    ValidationReport { violations }
}

/// Checks every row of a row-major `rows x cols` table.
pub fn validate_rows<T: Real>(data: &[T], rows: usize, cols: usize) -> ValidationReport {
    let mut violations = Vec::new();
    if rows == 0 || cols == 0 || data.len() != rows * cols {
        violations.push(Violation {
            kind: ViolationKind::Empty,
            row: None,
            index: None,
            magnitude: data.len() as f64,
        });
        return ValidationReport { violations };
    }
    for (r, chunk) in data.chunks(cols).enumerate() {
        check_entries(chunk, Some(r), &mut violations);
    }
    ValidationReport { violations }
}

/// A point on a finite probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector<T> {
    probs: Vec<T>,
}

impl<T: Real> ProbVector<T> {
    pub fn new(probs: Vec<T>) -> Result<Self, ProbError> {
        let report = validate_probs(&probs);
        if report.is_ok() {
            Ok(Self { probs })
        } else {
            Err(ProbError::Invalid(report.to_string()))
        }
    }

    /// Normalizes non-negative weights. Fails if all weights vanish.
    pub fn from_weights(weights: Vec<T>) -> Result<Self, ProbError> {
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(ProbError::Invalid(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(ProbError::Invalid("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs a non-empty alphabet");
        let p = T::one() / lit(n as f64);
        Self { probs: vec![p; n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut probs = vec![T::zero(); n];
        probs[at] = T::one();
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    pub fn get(&self, i: usize) -> T {
        self.probs[i]
    }

    pub fn validate(&self) -> ValidationReport {
        validate_probs(&self.probs)
    }
}

/// Row-stochastic kernel stored row-major; row `i` is the law of the output
/// given input symbol `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticMatrix<T> {
    input_size: usize,
    output_size: usize,
    data: Vec<T>,
}

impl<T: Real> StochasticMatrix<T> {
    pub fn new(input_size: usize, output_size: usize, data: Vec<T>) -> Result<Self, ProbError> {
        if data.len() != input_size * output_size {
            return Err(ProbError::DimensionMismatch {
                what: "matrix entries",
                expected: input_size * output_size,
                got: data.len(),
            });
        }
        let report = validate_rows(&data, input_size, output_size);
        if !report.is_ok() {
            return Err(ProbError::Invalid(report.to_string()));
        }
        Ok(Self {
            input_size,
            output_size,
            data,
        })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, ProbError> {
        let input_size = rows.len();
        let output_size = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != output_size)
        {
            return Err(ProbError::Invalid(format!(
                "row {i} has {} entries, expected {output_size}",
                r.len()
            )));
        }
        Self::new(input_size, output_size, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self {
            input_size: n,
            output_size: n,
            data,
        }
    }

    /// Every row equal to the uniform law on `outputs` symbols.
    pub fn uniform_rows(inputs: usize, outputs: usize) -> Self {
        let p = T::one() / lit(outputs as f64);
        Self {
            input_size: inputs,
            output_size: outputs,
            data: vec![p; inputs * outputs],
        }
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: T) -> Result<Self, ProbError> {
        let q = T::one() - crossover;
        Self::new(2, 2, vec![q, crossover, crossover, q])
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    #[inline]
    pub fn get(&self, input: usize, output: usize) -> T {
        self.data[input * self.output_size + output]
    }

    pub fn row(&self, input: usize) -> &[T] {
        let c = self.output_size;
        &self.data[input * c..(input + 1) * c]
    }

    pub fn row_vector(&self, input: usize) -> ProbVector<T> {
        ProbVector {
            probs: self.row(input).to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.output_size)
            .map(<[T]>::to_vec)
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_rows(&self.data, self.input_size, self.output_size)
    }

    /// Output law when the input is distributed as `input`.
    pub fn push_forward(&self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.output_size];
        for (i, &p) in input.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o = *o + p * w;
            }
        }
        out
    }

    pub fn convert<S: Real>(&self) -> StochasticMatrix<S> {
        StochasticMatrix {
            input_size: self.input_size,
            output_size: self.output_size,
            data: self.data.iter().map(|x| lit(x.to_f64().unwrap())).collect(),
        }
    }
}

/// Cascade of two kernels: `(w1 ∘ w2)(c | a) = Σ_b w1(b | a) w2(c | b)`.
pub fn compose<T: Real>(
    w1: &StochasticMatrix<T>,
    w2: &StochasticMatrix<T>,
) -> Result<StochasticMatrix<T>, ProbError> {
    if w1.output_size != w2.input_size {
        return Err(ProbError::DimensionMismatch {
            what: "inner alphabet of composition",
            expected: w1.output_size,
            got: w2.input_size,
        });
    }
    let mut data = Vec::with_capacity(w1.input_size * w2.output_size);
    for a in 0..w1.input_size {
        data.extend(w2.push_forward(w1.row(a)));
    }
    Ok(StochasticMatrix {
        input_size: w1.input_size,
        output_size: w2.output_size,
        data,
    })
}

/// The pair `(W1, W2)` of a degraded broadcast channel `X -> Y -> Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradedPair<T> {
    w1: StochasticMatrix<T>,
    w2: StochasticMatrix<T>,
}

impl<T: Real> DegradedPair<T> {
    pub fn new(w1: StochasticMatrix<T>, w2: StochasticMatrix<T>) -> Result<Self, ProbError> {
        if w1.output_size != w2.input_size {
            return Err(ProbError::DimensionMismatch {
                what: "W1 outputs vs W2 inputs",
                expected: w1.output_size,
                got: w2.input_size,
            });
        }
        Ok(Self { w1, w2 })
    }

    pub fn w1(&self) -> &StochasticMatrix<T> {
        &self.w1
    }

    pub fn w2(&self) -> &StochasticMatrix<T> {
        &self.w2
    }

    pub fn x_size(&self) -> usize {
        self.w1.input_size
    }

    pub fn y_size(&self) -> usize {
        self.w1.output_size
    }

    pub fn z_size(&self) -> usize {
        self.w2.output_size
    }

    /// The `X -> Z` kernel seen by the weaker receiver.
    pub fn composite(&self) -> StochasticMatrix<T> {
        compose(&self.w1, &self.w2).expect("dimensions checked at construction")
    }

    pub fn convert<S: Real>(&self) -> DegradedPair<S> {
        DegradedPair {
            w1: self.w1.convert(),
            w2: self.w2.convert(),
        }
    }
}

/// A test distribution `q_U q_{X|U} W1 W2` on `U x X x Y x Z`; the Markov
/// chain `U - X - Y - Z` holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxiliaryJoint<T> {
    p_u: ProbVector<T>,
    p_x_given_u: StochasticMatrix<T>,
    channel: DegradedPair<T>,
}

impl<T: Real> AuxiliaryJoint<T> {
    pub fn new(
        p_u: ProbVector<T>,
        p_x_given_u: StochasticMatrix<T>,
        channel: DegradedPair<T>,
    ) -> Result<Self, ProbError> {
        if p_x_given_u.input_size() != p_u.len() {
            return Err(ProbError::DimensionMismatch {
                what: "rows of p(x|u) vs |U|",
                expected: p_u.len(),
                got: p_x_given_u.input_size(),
            });
        }
        if p_x_given_u.output_size() != channel.x_size() {
            return Err(ProbError::DimensionMismatch {
                what: "columns of p(x|u) vs |X|",
                expected: channel.x_size(),
                got: p_x_given_u.output_size(),
            });
        }
        Ok(Self {
            p_u,
            p_x_given_u,
            channel,
        })
    }

    /// Builds the factorization from a joint law on `U x X` (row-major,
    /// `u_size` rows). Rows with zero mass get a uniform placeholder
    /// conditional, which carries no probability.
    pub fn from_joint_ux(
        joint: &[T],
        u_size: usize,
        channel: DegradedPair<T>,
    ) -> Result<Self, ProbError> {
        let xs = channel.x_size();
        if joint.len() != u_size * xs {
            return Err(ProbError::DimensionMismatch {
                what: "joint U x X entries",
                expected: u_size * xs,
                got: joint.len(),
            });
        }
        let report = validate_probs(joint);
        if !report.is_ok() {
            return Err(ProbError::Invalid(report.to_string()));
        }
        let mut p_u = Vec::with_capacity(u_size);
        let mut cond = Vec::with_capacity(joint.len());
        let placeholder = T::one() / lit(xs as f64);
        for row in joint.chunks(xs) {
            let m: T = row.iter().copied().sum();
            p_u.push(m);
            if m > T::zero() {
                cond.extend(row.iter().map(|&v| v / m));
            } else {
                cond.extend(std::iter::repeat(placeholder).take(xs));
            }
        }
        let total: T = p_u.iter().copied().sum();
        for p in &mut p_u {
            *p = *p / total;
        }
        Self::new(
            ProbVector::new(p_u)?,
            StochasticMatrix::new(u_size, xs, cond)?,
            channel,
        )
    }

    pub fn p_u(&self) -> &ProbVector<T> {
        &self.p_u
    }

    pub fn p_x_given_u(&self) -> &StochasticMatrix<T> {
        &self.p_x_given_u
    }

    pub fn channel(&self) -> &DegradedPair<T> {
        &self.channel
    }

    pub fn u_size(&self) -> usize {
        self.p_u.len()
    }

    /// `q(u, x)` flattened row-major.
    pub fn joint_ux(&self) -> Vec<T> {
        let xs = self.channel.x_size();
        let mut out = Vec::with_capacity(self.u_size() * xs);
        for u in 0..self.u_size() {
            let pu = self.p_u.get(u);
            out.extend(self.p_x_given_u.row(u).iter().map(|&p| pu * p));
        }
        out
    }

    /// Full joint `q(u, x, y, z)` flattened with `z` fastest.
    pub fn full_joint(&self) -> Vec<T> {
        let (xs, ys, zs) = (
            self.channel.x_size(),
            self.channel.y_size(),
            self.channel.z_size(),
        );
        let ux = self.joint_ux();
        let mut out = Vec::with_capacity(ux.len() * ys * zs);
        for (i, &m) in ux.iter().enumerate() {
            let x = i % xs;
            for y in 0..ys {
                let a = m * self.channel.w1.get(x, y);
                for z in 0..zs {
                    out.push(a * self.channel.w2.get(y, z));
                }
            }
        }
        out
    }

    /// Flattened `(p_U, p_{X|U})`, used for deterministic tie-breaking.
    pub fn flattened(&self) -> Vec<T> {
        let mut v = self.p_u.as_slice().to_vec();
        v.extend_from_slice(self.p_x_given_u.as_slice());
        v
    }

    pub fn marginals(&self) -> Marginals<T> {
        marginals_and_conditionals(self)
    }
}

/// A conditional law whose rows may be undefined (zero-mass conditioning symbol).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditional<T> {
    pub rows: Vec<Option<ProbVector<T>>>,
}

impl<T: Real> Conditional<T> {
    pub fn row(&self, i: usize) -> Option<&ProbVector<T>> {
        self.rows.get(i).and_then(Option::as_ref)
    }

    pub fn is_defined(&self, i: usize) -> bool {
        self.row(i).is_some()
    }
}

/// Marginals and conditionals induced by an [`AuxiliaryJoint`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals<T> {
    pub q_u: Vec<T>,
    pub q_x: Vec<T>,
    pub q_y: Vec<T>,
    pub q_z: Vec<T>,
    pub q_y_given_u: Conditional<T>,
    pub q_z_given_u: Conditional<T>,
    pub q_y_given_x: StochasticMatrix<T>,
    pub q_z_given_y: StochasticMatrix<T>,
}

pub fn marginals_and_conditionals<T: Real>(j: &AuxiliaryJoint<T>) -> Marginals<T> {
    let w1 = j.channel.w1();
    let w2 = j.channel.w2();
    let q_u = j.p_u.as_slice().to_vec();
    let q_x = j.p_x_given_u.push_forward(&q_u);
    let q_y = w1.push_forward(&q_x);
    let q_z = w2.push_forward(&q_y);
    let mut y_rows = Vec::with_capacity(q_u.len());
    let mut z_rows = Vec::with_capacity(q_u.len());
    for (u, &pu) in q_u.iter().enumerate() {
        if pu > T::zero() {
            let y = w1.push_forward(j.p_x_given_u.row(u));
            let z = w2.push_forward(&y);
            y_rows.push(Some(ProbVector { probs: y }));
            z_rows.push(Some(ProbVector { probs: z }));
        } else {
            y_rows.push(None);
            z_rows.push(None);
        }
    }
    Marginals {
        q_u,
        q_x,
        q_y,
        q_z,
        q_y_given_u: Conditional { rows: y_rows },
        q_z_given_u: Conditional { rows: z_rows },
        q_y_given_x: w1.clone(),
        q_z_given_y: w2.clone(),
    }
}
