//! Supporting-hyperplane description of the degraded broadcast capacity region.
//!
//! `C^(μ) = max_{q ∈ P_sh} μ I_q(X;Y|U) + I_q(U;Z)` with `|U| <= |X|`; the
//! region is `⋂_μ {μ R1 + R2 <= C^(μ)}`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::objective::{CapacityObjective, KernelTables};
use crate::optimize::{multi_start, OptConfig};
use crate::prob::{AuxiliaryJoint, DegradedPair, ProbError};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("μ must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("μ grid is empty")]
    EmptyGrid,
    #[error("μ grid must be sorted and positive")]
    BadGrid,
    #[error("rates must be non-negative")]
    NegativeRate,
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// A rate pair in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair<T> {
    pub r1: T,
    pub r2: T,
}

impl<T: Real> RatePair<T> {
    pub fn new(r1: T, r2: T) -> Result<Self, CapacityError> {
        if !(r1 >= T::zero() && r2 >= T::zero()) {
            return Err(CapacityError::NegativeRate);
        }
        Ok(Self { r1, r2 })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityPoint<T> {
    pub mu: T,
    /// `μ I(X;Y|U) + I(U;Z)` recomputed exactly at `argmax`.
    pub value: T,
    pub argmax: AuxiliaryJoint<T>,
    pub converged: bool,
}

fn u_size_for<T: Real>(channel: &DegradedPair<T>, cfg: &OptConfig) -> usize {
    cfg.u_size.unwrap_or(channel.x_size()).max(1)
}

/// `C^(μ)` and a maximizing test distribution. The value is achieved by the
/// returned distribution, so it is a certified lower bound on the maximum.
pub fn c_mu<T: Real>(
    channel: &DegradedPair<T>,
    mu: T,
    cfg: &OptConfig,
) -> Result<CapacityPoint<T>, CapacityError> {
    c_mu_with_starts(channel, mu, cfg, &[])
}

pub fn c_mu_with_starts<T: Real>(
    channel: &DegradedPair<T>,
    mu: T,
    cfg: &OptConfig,
    warm_starts: &[Vec<T>],
) -> Result<CapacityPoint<T>, CapacityError> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(CapacityError::NonPositiveMu(
            mu.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let u_size = u_size_for(channel, cfg);
    let obj = CapacityObjective {
        tables: KernelTables::new(channel),
        mu,
        u_size,
    };
    let best = multi_start(&obj, warm_starts, cfg);
    let argmax = AuxiliaryJoint::from_joint_ux(&best.point, u_size, channel.clone())?;
    let value = argmax.weighted_rate_sum(mu);
    Ok(CapacityPoint {
        mu,
        value,
        argmax,
        converged: best.converged,
    })
}

/// `points` log-spaced values in `[min, max]`.
pub fn log_spaced_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

/// The default μ (and λ) grid: 61 log-spaced points in `[1e-3, 1e3]`.
pub fn default_grid() -> Vec<f64> {
    log_spaced_grid(1e-3, 1e3, 61)
}

pub(crate) fn check_grid<T: Real>(grid: &[T]) -> Result<(), CapacityError> {
    if grid.is_empty() {
        return Err(CapacityError::EmptyGrid);
    }
    if grid.iter().any(|&m| !(m > T::zero()) || !m.is_finite())
        || grid.windows(2).any(|w| w[0] > w[1])
    {
        return Err(CapacityError::BadGrid);
    }
    Ok(())
}

/// Per-grid-point seed, independent of evaluation order.
pub(crate) fn point_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperplaneProfile<T> {
    pub mu_grid: Vec<T>,
    pub c_values: Vec<T>,
    pub argmaxes: Vec<AuxiliaryJoint<T>>,
    pub converged: Vec<bool>,
}

pub fn hyperplane_profile<T: Real>(
    channel: &DegradedPair<T>,
    mu_grid: &[T],
    cfg: &OptConfig,
) -> Result<HyperplaneProfile<T>, CapacityError> {
    check_grid(mu_grid)?;
    let points: Vec<CapacityPoint<T>> = mu_grid
        .par_iter()
        .enumerate()
        .map(|(i, &mu)| {
            let c = cfg.clone().with_seed(point_seed(cfg.seed, i));
            c_mu(channel, mu, &c)
        })
        .collect::<Result<_, _>>()?;
    Ok(HyperplaneProfile {
        mu_grid: mu_grid.to_vec(),
        c_values: points.iter().map(|p| p.value).collect(),
        converged: points.iter().map(|p| p.converged).collect(),
        argmaxes: points.into_iter().map(|p| p.argmax).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionVerdict<T> {
    pub inside: bool,
    /// Grid μ maximizing `μ r1 + r2 - C^(μ)`.
    pub worst_mu: T,
    /// `max_μ (μ r1 + r2 - C^(μ))`; the outside margin when positive.
    pub margin: T,
}

/// Outside iff some supporting hyperplane is violated by more than `slack`.
pub fn in_region<T: Real>(
    profile: &HyperplaneProfile<T>,
    rates: RatePair<T>,
    slack: T,
) -> RegionVerdict<T> {
    let mut worst = (T::neg_infinity(), T::zero());
    for (&mu, &c) in profile.mu_grid.iter().zip(&profile.c_values) {
        let m = mu * rates.r1 + rates.r2 - c;
        if m > worst.0 {
            worst = (m, mu);
        }
    }
    RegionVerdict {
        inside: worst.0 <= slack,
        worst_mu: worst.1,
        margin: worst.0,
    }
}

/// Corner `(I(X;Y|U), I(U;Z))` of the rectangle achieved by `p`.
pub fn rectangle_region<T: Real>(p: &AuxiliaryJoint<T>) -> RatePair<T> {
    let info = p.info();
    RatePair {
        r1: info.i_xy_given_u.max(T::zero()),
        r2: info.i_uz.max(T::zero()),
    }
}

impl<T: Real> HyperplaneProfile<T> {
    /// Largest `R2` allowed at `r1` by the grid hyperplanes (clipped at 0).
    pub fn r2_boundary(&self, r1: T) -> T {
        self.mu_grid
            .iter()
            .zip(&self.c_values)
            .map(|(&mu, &c)| c - mu * r1)
            .fold(T::infinity(), T::min)
            .max(T::zero())
    }

    /// Largest `R1` with a non-negative `R2` allowance.
    pub fn r1_extent(&self) -> T {
        self.mu_grid
            .iter()
            .zip(&self.c_values)
            .map(|(&mu, &c)| c / mu)
            .fold(T::infinity(), T::min)
            .max(T::zero())
    }

    /// Index of the first μ where the profile fails to be non-decreasing or
    /// convex by more than `tol` (second differences on a non-uniform grid).
    pub fn shape_violation(&self, tol: T) -> Option<usize> {
        let (m, c) = (&self.mu_grid, &self.c_values);
        for i in 1..m.len() {
            if c[i] < c[i - 1] - tol {
                return Some(i);
            }
        }
        for i in 1..m.len().saturating_sub(1) {
            let s0 = (c[i] - c[i - 1]) / (m[i] - m[i - 1]);
            let s1 = (c[i + 1] - c[i]) / (m[i + 1] - m[i]);
            let scale = m[i + 1] - m[i - 1];
            if (s1 - s0) * scale < -tol * lit(2.0) {
                return Some(i);
            }
        }
        None
    }
}
