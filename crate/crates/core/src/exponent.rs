//! Tilted cumulant `Ω^(μ,λ)` and the exponent lower bound `F(R1, R2)`.
//!
//! For a test distribution `q` the weight is
//! `ω_q^(μ)(x,y,z|u) = μ ln[q(y|x)/q(y|u)] + ln[q(z|u)/q(z)]` and
//! `Ω_q^(μ,λ) = ln E_q[exp(λ ω)]`. The channel-wide value maximizes over
//! `q` with `|U| <= |X|`, and
//! `F^(μ,λ) = [λ(μ R1 + R2) - Ω^(μ,λ)] / (1 + 2λ + λμ)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::capacity::{
    c_mu, check_grid, hyperplane_profile, point_seed, CapacityError, HyperplaneProfile, RatePair,
};
use crate::objective::{KernelTables, OmegaObjective};
use crate::optimize::{multi_start, OptConfig};
use crate::prob::{AuxiliaryJoint, DegradedPair, ProbError};
use crate::scalar::{lit, log_sum_exp, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("tilt parameters out of range: {0}")]
    BadParams(String),
    #[error("zero denominator in ω at (u={u}, x={x}, y={y}, z={z}) with positive mass")]
    ZeroDenominator {
        u: usize,
        x: usize,
        y: usize,
        z: usize,
    },
    #[error("index out of range")]
    Index,
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// The pair `(μ, λ)`; `θ = λ / (1 + λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltParams<T> {
    pub mu: T,
    pub lambda: T,
}

impl<T: Real> TiltParams<T> {
    /// `λ = 0` is accepted as the untilted limit.
    pub fn new(mu: T, lambda: T) -> Result<Self, ExponentError> {
        if !(mu > T::zero() && mu.is_finite()) {
            return Err(ExponentError::BadParams(format!("μ = {mu}")));
        }
        if !(lambda >= T::zero() && lambda.is_finite()) {
            return Err(ExponentError::BadParams(format!("λ = {lambda}")));
        }
        Ok(Self { mu, lambda })
    }

    pub fn from_theta(mu: T, theta: T) -> Result<Self, ExponentError> {
        if !(theta >= T::zero() && theta < T::one()) {
            return Err(ExponentError::BadParams(format!("θ = {theta}")));
        }
        Self::new(mu, theta / (T::one() - theta))
    }

    pub fn theta(&self) -> T {
        self.lambda / (T::one() + self.lambda)
    }
}

/// Support points of `q` with their masses and weights `ω`.
#[derive(Debug, Clone)]
pub struct OmegaSpectrum<T> {
    /// `(q(u,x,y,z), ω(x,y,z|u))` over the support of `q`.
    pub points: Vec<(T, T)>,
}

/// Evaluates `ω` on the support of `q` through its marginals.
pub fn omega_spectrum<T: Real>(
    q: &AuxiliaryJoint<T>,
    mu: T,
) -> Result<OmegaSpectrum<T>, ExponentError> {
    let m = q.marginals();
    let ch = q.channel();
    let (xs, ys, zs) = (ch.x_size(), ch.y_size(), ch.z_size());
    let joint = q.full_joint();
    let mut points = Vec::new();
    for u in 0..q.u_size() {
        let (Some(qyu), Some(qzu)) = (m.q_y_given_u.row(u), m.q_z_given_u.row(u)) else {
            continue;
        };
        for x in 0..xs {
            for y in 0..ys {
                for z in 0..zs {
                    let mass = joint[((u * xs + x) * ys + y) * zs + z];
                    if mass <= T::zero() {
                        continue;
                    }
                    let (a, b, c) = (qyu.get(y), qzu.get(z), m.q_z[z]);
                    if a <= T::zero() || b <= T::zero() || c <= T::zero() {
                        return Err(ExponentError::ZeroDenominator { u, x, y, z });
                    }
                    let w = mu * (m.q_y_given_x.get(x, y) / a).ln() + (b / c).ln();
                    points.push((mass, w));
                }
            }
        }
    }
    Ok(OmegaSpectrum { points })
}

impl<T: Real> OmegaSpectrum<T> {
    /// `ξ(λ) = ln Σ q e^{λω}`; exactly zero at `λ = 0`.
    pub fn cumulant(&self, lambda: T) -> T {
        if lambda == T::zero() {
            return T::zero();
        }
        let logs: Vec<T> = self
            .points
            .iter()
            .map(|&(m, w)| m.ln() + lambda * w)
            .collect();
        log_sum_exp(&logs)
    }

    fn tilted_weights(&self, lambda: T) -> Vec<T> {
        let xi = self.cumulant(lambda);
        self.points
            .iter()
            .map(|&(m, w)| (m.ln() + lambda * w - xi).exp())
            .collect()
    }

    /// `ξ'(λ) = e^{-ξ} Σ q ω e^{λω}`.
    pub fn xi_prime(&self, lambda: T) -> T {
        self.tilted_weights(lambda)
            .iter()
            .zip(&self.points)
            .map(|(&t, &(_, w))| t * w)
            .sum()
    }

    /// `ξ''(λ) = e^{-2ξ} Σ_{a,b} q(a) q(b) (ω_a - ω_b)² / 2 · e^{λ(ω_a + ω_b)}`,
    /// evaluated pairwise as written.
    pub fn xi_second(&self, lambda: T) -> T {
        let tau = self.tilted_weights(lambda);
        let half: T = lit(0.5);
        let mut acc = T::zero();
        for (i, &(_, wa)) in self.points.iter().enumerate() {
            for (j, &(_, wb)) in self.points.iter().enumerate() {
                let d = wa - wb;
                acc = acc + tau[i] * tau[j] * d * d * half;
            }
        }
        acc
    }

    /// `E_q[ω] = ξ'(0)`.
    pub fn mean(&self) -> T {
        self.points.iter().map(|&(m, w)| m * w).sum()
    }
}

/// `ω_q^(μ)(x, y, z | u)`.
pub fn omega_weight<T: Real>(
    q: &AuxiliaryJoint<T>,
    mu: T,
    u: usize,
    x: usize,
    y: usize,
    z: usize,
) -> Result<T, ExponentError> {
    let ch = q.channel();
    if u >= q.u_size() || x >= ch.x_size() || y >= ch.y_size() || z >= ch.z_size() {
        return Err(ExponentError::Index);
    }
    let m = q.marginals();
    let err = ExponentError::ZeroDenominator { u, x, y, z };
    let qyu = m.q_y_given_u.row(u).ok_or(err.clone())?.get(y);
    let qzu = m.q_z_given_u.row(u).ok_or(err.clone())?.get(z);
    let qz = m.q_z[z];
    let w1 = m.q_y_given_x.get(x, y);
    if qyu <= T::zero() || qzu <= T::zero() || qz <= T::zero() || w1 <= T::zero() {
        return Err(err);
    }
    Ok(mu * (w1 / qyu).ln() + (qzu / qz).ln())
}

/// `Ω_q^(μ,λ)`, computed in log-sum-exp form.
pub fn omega_q<T: Real>(q: &AuxiliaryJoint<T>, params: TiltParams<T>) -> Result<T, ExponentError> {
    Ok(omega_spectrum(q, params.mu)?.cumulant(params.lambda))
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaPoint<T> {
    pub params: TiltParams<T>,
    /// `Ω_q` recomputed exactly at `argmax`.
    pub value: T,
    pub argmax: AuxiliaryJoint<T>,
    pub converged: bool,
}

/// `Ω^(μ,λ)(W1, W2)`. The `C^(μ)` maximizer is always among the starts, so
/// the result is at least `λ C^(μ)` up to rounding.
pub fn omega_max<T: Real>(
    channel: &DegradedPair<T>,
    params: TiltParams<T>,
    cfg: &OptConfig,
) -> Result<OmegaPoint<T>, ExponentError> {
    let cap = c_mu(channel, params.mu, cfg)?;
    omega_max_with_starts(channel, params, cfg, &[cap.argmax.joint_ux()])
}

pub fn omega_max_with_starts<T: Real>(
    channel: &DegradedPair<T>,
    params: TiltParams<T>,
    cfg: &OptConfig,
    warm_starts: &[Vec<T>],
) -> Result<OmegaPoint<T>, ExponentError> {
    let u_size = cfg.u_size.unwrap_or(channel.x_size()).max(1);
    let obj = OmegaObjective {
        tables: KernelTables::new(channel),
        mu: params.mu,
        lambda: params.lambda,
        u_size,
    };
    let best = multi_start(&obj, warm_starts, cfg);
    let argmax = AuxiliaryJoint::from_joint_ux(&best.point, u_size, channel.clone())?;
    let mut value = omega_q(&argmax, params)?;
    // warm starts are feasible points too; never report below them
    for w in warm_starts.iter().filter(|w| w.len() == best.point.len()) {
        let q = AuxiliaryJoint::from_joint_ux(w, u_size, channel.clone())?;
        let v = omega_q(&q, params)?;
        if v > value {
            return Ok(OmegaPoint {
                params,
                value: v,
                argmax: q,
                converged: best.converged,
            });
        }
    }
    if !value.is_finite() {
        value = T::nan();
    }
    Ok(OmegaPoint {
        params,
        value,
        argmax,
        converged: best.converged,
    })
}

/// `F^(μ,λ) = [λ(μ R1 + R2) - Ω] / (1 + 2λ + λμ)`.
pub fn f_mu_lambda<T: Real>(omega_value: T, params: TiltParams<T>, rates: RatePair<T>) -> T {
    let TiltParams { mu, lambda } = params;
    (lambda * (mu * rates.r1 + rates.r2) - omega_value)
        / (T::one() + lambda * lit(2.0) + lambda * mu)
}

/// `Ω^(μ,λ)` on a `μ x λ` grid. Independent of the rates, so one table
/// serves every `F` evaluation on the same channel.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaTable<T> {
    pub mu_grid: Vec<T>,
    pub lambda_grid: Vec<T>,
    /// Row-major `[μ index][λ index]`.
    pub values: Vec<T>,
    pub converged: Vec<bool>,
    /// Maximizing `q(u, x)` per cell, flattened.
    pub argmaxes: Vec<Vec<T>>,
    pub profile: HyperplaneProfile<T>,
}

impl<T: Real> OmegaTable<T> {
    pub fn compute(
        channel: &DegradedPair<T>,
        mu_grid: &[T],
        lambda_grid: &[T],
        cfg: &OptConfig,
    ) -> Result<Self, ExponentError> {
        check_grid(lambda_grid)?;
        let profile = hyperplane_profile(channel, mu_grid, cfg)?;
        let nl = lambda_grid.len();
        let rows: Vec<Vec<OmegaPoint<T>>> = mu_grid
            .par_iter()
            .enumerate()
            .map(|(i, &mu)| {
                let mut row = Vec::with_capacity(nl);
                let seed_start = profile.argmaxes[i].joint_ux();
                let mut prev: Option<Vec<T>> = None;
                for (j, &lambda) in lambda_grid.iter().enumerate() {
                    let params = TiltParams::new(mu, lambda)?;
                    let c = cfg.clone().with_seed(point_seed(cfg.seed, i * nl + j));
                    let mut starts = vec![seed_start.clone()];
                    starts.extend(prev.take());
                    let p = omega_max_with_starts(channel, params, &c, &starts)?;
                    prev = Some(p.argmax.joint_ux());
                    row.push(p);
                }
                Ok(row)
            })
            .collect::<Result<_, ExponentError>>()?;
        let cells: Vec<OmegaPoint<T>> = rows.into_iter().flatten().collect();
        Ok(Self {
            mu_grid: mu_grid.to_vec(),
            lambda_grid: lambda_grid.to_vec(),
            values: cells.iter().map(|p| p.value).collect(),
            converged: cells.iter().map(|p| p.converged).collect(),
            argmaxes: cells.iter().map(|p| p.argmax.joint_ux()).collect(),
            profile,
        })
    }

    pub fn omega(&self, mu_index: usize, lambda_index: usize) -> T {
        self.values[mu_index * self.lambda_grid.len() + lambda_index]
    }

    pub fn params(&self, mu_index: usize, lambda_index: usize) -> TiltParams<T> {
        TiltParams {
            mu: self.mu_grid[mu_index],
            lambda: self.lambda_grid[lambda_index],
        }
    }

    /// `(μ, λ, F^(μ,λ))` for every cell, row-major.
    pub fn f_grid(&self, rates: RatePair<T>) -> Vec<(T, T, T)> {
        let mut out = Vec::with_capacity(self.values.len());
        for i in 0..self.mu_grid.len() {
            for j in 0..self.lambda_grid.len() {
                let p = self.params(i, j);
                out.push((p.mu, p.lambda, f_mu_lambda(self.omega(i, j), p, rates)));
            }
        }
        out
    }

    /// Grid supremum of `F^(μ,λ)`; the first maximal cell in row-major order wins.
    pub fn f_star(&self, rates: RatePair<T>) -> ExponentReport<T> {
        self.best_cell(rates, false)
    }

    /// As [`f_star`](Self::f_star) over converged cells only. An unconverged
    /// `Ω` may sit below the true maximum and overstate `F`; skipping it can
    /// only lower the result.
    pub fn f_star_converged(&self, rates: RatePair<T>) -> ExponentReport<T> {
        self.best_cell(rates, true)
    }

    fn best_cell(&self, rates: RatePair<T>, converged_only: bool) -> ExponentReport<T> {
        let (nm, nl) = (self.mu_grid.len(), self.lambda_grid.len());
        let mut best = (T::neg_infinity(), 0, 0);
        for i in 0..nm {
            for j in 0..nl {
                if converged_only && !self.converged[i * nl + j] {
                    continue;
                }
                let f = f_mu_lambda(self.omega(i, j), self.params(i, j), rates);
                if f > best.0 {
                    best = (f, i, j);
                }
            }
        }
        let (f_value, i, j) = best;
        ExponentReport {
            rates,
            f_value,
            best_mu: self.mu_grid[i],
            best_lambda: self.lambda_grid[j],
            omega_at_best: self.omega(i, j),
            boundary_flag: i == 0 || j == 0 || i + 1 == nm || j + 1 == nl,
            all_converged: converged_only || self.converged.iter().all(|&c| c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentReport<T> {
    pub rates: RatePair<T>,
    pub f_value: T,
    pub best_mu: T,
    pub best_lambda: T,
    pub omega_at_best: T,
    /// The grid maximum sits on an edge of the `(μ, λ)` grid; the true
    /// supremum may be a limit outside it.
    pub boundary_flag: bool,
    pub all_converged: bool,
}

/// `F(R1, R2)` as a `(μ, λ)` grid supremum.
pub fn f_star<T: Real>(
    channel: &DegradedPair<T>,
    rates: RatePair<T>,
    mu_grid: &[T],
    lambda_grid: &[T],
    cfg: &OptConfig,
) -> Result<ExponentReport<T>, ExponentError> {
    Ok(OmegaTable::compute(channel, mu_grid, lambda_grid, cfg)?.f_star(rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    type StochasticMatrix = crate::prob::StochasticMatrix<f64>;
    type DegradedPair = crate::prob::DegradedPair<f64>;
    type ProbVector = crate::prob::ProbVector<f64>;
    type AuxiliaryJoint = crate::prob::AuxiliaryJoint<f64>;
    type RatePair = crate::capacity::RatePair<f64>;

    fn bsc_cascade() -> DegradedPair {
        DegradedPair::new(
            StochasticMatrix::bsc(0.1).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn tilt_bijection() {
        let p = TiltParams::new(1.0f64, 3.0).unwrap();
        assert!((p.theta() - 0.75).abs() < 1e-15);
        let q = TiltParams::from_theta(1.0f64, 0.75).unwrap();
        assert!((q.lambda - 3.0).abs() < 1e-12);
        assert!(TiltParams::new(0.0, 1.0).is_err());
        assert!(TiltParams::from_theta(1.0, 1.0).is_err());
    }

    #[test]
    fn f_arithmetic() {
        let f = f_mu_lambda(
            0.0,
            TiltParams::new(1.0, 1.0).unwrap(),
            RatePair::new(0.5, 0.3).unwrap(),
        );
        assert!((f - 0.2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_u_collapses_second_term() {
        let ch = bsc_cascade();
        let q = AuxiliaryJoint::new(
            ProbVector::new(vec![1.0]).unwrap(),
            StochasticMatrix::new(1, 2, vec![0.3, 0.7]).unwrap(),
            ch.clone(),
        )
        .unwrap();
        let qy = ch.w1().push_forward(&[0.3, 0.7]);
        for (x, y, z) in [(0, 0, 1), (1, 0, 0), (1, 1, 1)] {
            let w = omega_weight(&q, 2.0, 0, x, y, z).unwrap();
            assert!((w - 2.0 * (ch.w1().get(x, y) / qy[y]).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn useless_channel_has_flat_weight() {
        let ch = DegradedPair::new(
            StochasticMatrix::uniform_rows(2, 2),
            StochasticMatrix::bsc(0.3).unwrap(),
        )
        .unwrap();
        let q = AuxiliaryJoint::new(
            ProbVector::new(vec![0.4, 0.6]).unwrap(),
            StochasticMatrix::new(2, 2, vec![0.2, 0.8, 0.9, 0.1]).unwrap(),
            ch.clone(),
        )
        .unwrap();
        for lambda in [0.1, 1.0, 50.0] {
            assert!(
                omega_q(&q, TiltParams::new(1.5, lambda).unwrap())
                    .unwrap()
                    .abs()
                    < 1e-14
            );
        }
        let m = omega_max(
            &ch,
            TiltParams::new(2.0f64, 3.0).unwrap(),
            &OptConfig::default(),
        )
        .unwrap();
        assert!(m.value.abs() < 1e-12);
    }

    #[test]
    fn zero_tilt_is_exactly_zero() {
        let ch = bsc_cascade();
        let q = AuxiliaryJoint::new(
            ProbVector::uniform(2),
            StochasticMatrix::bsc(0.25).unwrap(),
            ch,
        )
        .unwrap();
        assert_eq!(
            omega_q(&q, TiltParams::new(1.0, 0.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_denominator_is_reported() {
        let ch = DegradedPair::new(StochasticMatrix::identity(2), StochasticMatrix::identity(2))
            .unwrap();
        let q =
            AuxiliaryJoint::new(ProbVector::uniform(2), StochasticMatrix::identity(2), ch).unwrap();
        // y = 1 never occurs under u = 0
        assert!(matches!(
            omega_weight(&q, 1.0, 0, 0, 1, 1),
            Err(ExponentError::ZeroDenominator { .. })
        ));
        assert!(omega_weight(&q, 1.0, 0, 0, 0, 0).is_ok());
    }

    #[test]
    fn origin_never_has_positive_exponent() {
        let grid = vec![0.1, 1.0, 10.0];
        let r = f_star(
            &bsc_cascade(),
            RatePair::new(0.0, 0.0).unwrap(),
            &grid,
            &grid,
            &OptConfig::default(),
        )
        .unwrap();
        assert!(r.f_value <= 0.0);
    }
}
