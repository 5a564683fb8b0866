//! Multi-start projected-gradient ascent over a probability simplex.
//!
//! Both `C^(μ)` and `Ω^(μ,λ)` are maxima over test distributions
//! `q_U q_{X|U} W1 W2`. Every such distribution is determined by the joint
//! law `r(u, x) = q_U(u) q_{X|U}(x|u)`, a single point on the simplex of
//! dimension `|U||X|`, so one ascent routine serves both problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::{lit, Real};

/// Optimizer settings shared by the capacity and exponent modules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptConfig {
    /// Random restarts in addition to grid and warm starts.
    pub restarts: usize,
    /// Resolution of the coarse composition grid used to seed ascents.
    pub grid_resolution: usize,
    pub max_iters: usize,
    /// Relative objective change treated as convergence.
    pub tolerance: f64,
    pub seed: u64,
    /// `|U|`; defaults to `|X|`.
    pub u_size: Option<usize>,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            grid_resolution: 8,
            max_iters: 4000,
            tolerance: 1e-13,
            seed: 0x5eed,
            u_size: None,
        }
    }
}

impl OptConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_u_size(mut self, u_size: usize) -> Self {
        self.u_size = Some(u_size);
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// A smooth function on the simplex, evaluated together with its ambient
/// gradient. Gradients only need to be correct up to adding a constant to
/// every coordinate.
pub trait SimplexObjective<T: Real> {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn value_and_gradient(&self, x: &[T], grad: &mut [T]) -> T;
    /// Problem-specific starting points tried alongside the generic ones.
    fn structured_starts(&self) -> Vec<Vec<T>> {
        Vec::new()
    }
}

/// Euclidean projection onto `{x : x_i >= 0, Σ x_i = 1}` (sort-based).
pub fn project_onto_simplex<T: Real>(v: &mut [T]) {
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut shift = T::zero();
    for (i, &s) in sorted.iter().enumerate() {
        cumulative = cumulative + s;
        let t = (cumulative - T::one()) / lit((i + 1) as f64);
        if s - t > T::zero() {
            shift = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - shift).max(T::zero());
    }
    let total: T = v.iter().copied().sum();
    for x in v.iter_mut() {
        *x = *x / total;
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult<T> {
    pub point: Vec<T>,
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
}

fn spread<T: Real>(g: &[T]) -> T {
    let hi = g.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = g.iter().copied().fold(T::infinity(), T::min);
    hi - lo
}

fn stationarity<T: Real>(x: &[T], g: &[T], scale: T) -> T {
    let centre = g.iter().copied().sum::<T>() / lit(g.len() as f64);
    let mut y: Vec<T> = x
        .iter()
        .zip(g)
        .map(|(&a, &b)| a + (b - centre) * scale)
        .collect();
    project_onto_simplex(&mut y);
    x.iter()
        .zip(&y)
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max)
}

/// Spectral projected-gradient ascent (Barzilai-Borwein steps with a
/// non-monotone Armijo search), started at `start`. Returns the best iterate.
pub fn ascend<T: Real, O: SimplexObjective<T>>(
    obj: &O,
    start: Vec<T>,
    cfg: &OptConfig,
) -> AscentResult<T> {
    const MEMORY: usize = 8;
    // iterations over which the best value must keep improving
    const STALL_WINDOW: usize = 100;
    let d = obj.dim();
    let mut x = start;
    project_onto_simplex(&mut x);
    let mut g = vec![T::zero(); d];
    let mut f = obj.value_and_gradient(&x, &mut g);
    let tol: T = lit(cfg.tolerance);
    let armijo: T = lit(1e-4);
    let mut recent = std::collections::VecDeque::with_capacity(MEMORY);
    recent.push_back(f);
    let mut best = (f, x.clone());
    let mut checkpoint = f;
    let mut small_moves = 0usize;
    let mut converged = false;
    let mut it = 0;
    let mut alpha: Option<T> = None;
    let mut dir = vec![T::zero(); d];
    let mut y = vec![T::zero(); d];
    let mut gy = vec![T::zero(); d];
    while it < cfg.max_iters {
        it += 1;
        let s = spread(&g);
        if !s.is_finite() || !f.is_finite() {
            break;
        }
        // moving along a constant gradient changes nothing on the simplex
        let scale_g = g.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
        if s <= T::epsilon() * lit(16.0) * (T::one() + scale_g) {
            converged = true;
            break;
        }
        if stationarity(&x, &g, T::one() / s) < lit(1e-11) {
            converged = true;
            break;
        }
        // keep alpha * spread moderate so the projection stays accurate
        let (lo, hi) = (lit::<T>(1e-10) / s, lit::<T>(1e4) / s);
        let a = alpha.unwrap_or(T::one() / s).max(lo).min(hi);
        let centre = g.iter().copied().sum::<T>() / lit(d as f64);
        for i in 0..d {
            y[i] = x[i] + (g[i] - centre) * a;
        }
        project_onto_simplex(&mut y);
        for i in 0..d {
            dir[i] = y[i] - x[i];
        }
        let slope: T = (0..d).map(|i| g[i] * dir[i]).sum();
        if !(slope > T::zero()) {
            converged = true;
            break;
        }
        let reference = recent.iter().copied().fold(T::infinity(), T::min);
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..50 {
            for i in 0..d {
                y[i] = (x[i] + dir[i] * t).max(T::zero());
            }
            let fy = obj.value_and_gradient(&y, &mut gy);
            if fy.is_finite() && fy >= reference + armijo * t * slope {
                accepted = true;
                let mut ss = T::zero();
                let mut sy = T::zero();
                for i in 0..d {
                    let si = y[i] - x[i];
                    ss = ss + si * si;
                    sy = sy + si * (gy[i] - g[i]);
                }
                alpha = Some(if sy < T::zero() { ss / -sy } else { hi });
                let gain = fy - best.0;
                std::mem::swap(&mut x, &mut y);
                std::mem::swap(&mut g, &mut gy);
                f = fy;
                if f > best.0 {
                    best = (f, x.clone());
                }
                if gain <= tol * (T::one() + f.abs()) {
                    small_moves += 1;
                } else {
                    small_moves = 0;
                }
                break;
            }
            t = t * lit(0.5);
        }
        if !accepted {
            converged = true;
            break;
        }
        if recent.len() == MEMORY {
            recent.pop_front();
        }
        recent.push_back(f);
        if small_moves >= 4 {
            converged = true;
            break;
        }
        if it % STALL_WINDOW == 0 {
            if best.0 - checkpoint <= lit::<T>(1e-9) * best.0.abs() + lit::<T>(1e-14) {
                converged = true;
                break;
            }
            checkpoint = best.0;
        }
    }
    AscentResult {
        point: best.1,
        value: best.0,
        converged,
        iterations: it,
    }
}

/// Compositions of `res` into `d` parts, scaled onto the simplex.
fn composition_grid<T: Real>(d: usize, res: usize, out: &mut Vec<Vec<T>>) {
    fn rec<T: Real>(
        d: usize,
        left: usize,
        res: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<T>>,
    ) {
        if cur.len() + 1 == d {
            cur.push(left);
            out.push(
                cur.iter()
                    .map(|&c| lit::<T>(c as f64 / res as f64))
                    .collect(),
            );
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(d, left - c, res, cur, out);
            cur.pop();
        }
    }
    rec(d, res, res, &mut Vec::with_capacity(d), out);
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

const GRID_CAP: f64 = 20_000.0;
const GRID_SEEDS: usize = 10;

fn random_start<T: Real>(rng: &mut ChaCha8Rng, d: usize, sparse: bool) -> Vec<T> {
    let mut w: Vec<f64> = (0..d)
        .map(|_| {
            let e = -(1.0 - rng.gen::<f64>()).ln();
            if sparse {
                e.powi(3)
            } else {
                e
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w.into_iter().map(lit).collect()
}

/// Lexicographic comparison of flattened points.
fn lex_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Runs ascents from grid seeds, the supplied warm starts, and
/// `cfg.restarts` random points; returns the best. Near-ties are broken by
/// the lexicographically smallest point, so the result does not depend on
/// the order in which starts finish.
pub fn multi_start<T: Real, O: SimplexObjective<T>>(
    obj: &O,
    warm_starts: &[Vec<T>],
    cfg: &OptConfig,
) -> AscentResult<T> {
    let d = obj.dim();
    let mut starts: Vec<Vec<T>> = Vec::new();

    let mut res = cfg.grid_resolution;
    while res > 1 && binomial(res + d - 1, d - 1) > GRID_CAP {
        res -= 1;
    }
    if res >= 1 && binomial(res + d - 1, d - 1) <= GRID_CAP {
        let mut grid = Vec::new();
        composition_grid::<T>(d, res, &mut grid);
        let mut scored: Vec<(T, usize)> = grid
            .iter()
            .enumerate()
            .map(|(i, p)| (obj.value(p), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        starts.extend(
            scored
                .iter()
                .take(GRID_SEEDS)
                .map(|&(_, i)| grid[i].clone()),
        );
    }
    starts.extend(warm_starts.iter().filter(|w| w.len() == d).cloned());
    starts.extend(obj.structured_starts());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..cfg.restarts {
        starts.push(random_start(&mut rng, d, k % 2 == 1));
    }

    let mut best: Option<AscentResult<T>> = None;
    for s in starts {
        let r = ascend(obj, s, cfg);
        if !r.value.is_finite() {
            continue;
        }
        best = Some(match best {
            None => r,
            Some(b) => {
                let tie = lit::<T>(1e-12) * (T::one() + b.value.abs());
                if r.value > b.value + tie
                    || ((r.value - b.value).abs() <= tie && lex_less(&r.point, &b.point))
                {
                    r
                } else {
                    b
                }
            }
        });
    }
    best.unwrap_or_else(|| {
        let p = vec![T::one() / lit(d as f64); d];
        AscentResult {
            value: obj.value(&p),
            point: p,
            converged: false,
            iterations: 0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Quadratic {
        target: Vec<f64>,
    }

    impl SimplexObjective<f64> for Quadratic {
        fn dim(&self) -> usize {
            self.target.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter()
                .zip(&self.target)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        }
        fn value_and_gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
            for i in 0..x.len() {
                g[i] = -2.0 * (x[i] - self.target[i]);
            }
            self.value(x)
        }
    }

    #[test]
    fn ascent_finds_projection_of_target() {
        // the maximizer is the projection of the target onto the simplex
        let obj = Quadratic {
            target: vec![0.9, 0.5, -0.2],
        };
        let r = multi_start(&obj, &[], &OptConfig::default());
        assert!(r.converged);
        assert!((r.point[0] - 0.7).abs() < 1e-8, "{:?}", r.point);
        assert!((r.point[1] - 0.3).abs() < 1e-8);
        assert!(r.point[2].abs() < 1e-12);
    }

    #[test]
    fn composition_grid_counts() {
        let mut g = Vec::new();
        composition_grid::<f64>(4, 8, &mut g);
        assert_eq!(g.len(), 165);
        assert_eq!(binomial(11, 3), 165.0);
        assert!(g
            .iter()
            .all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex_and_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let mut p = v.clone();
            project_onto_simplex(&mut p);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut q = p.clone();
            project_onto_simplex(&mut q);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn projection_is_nearest_point(v in prop::collection::vec(-2.0f64..2.0, 2..6), seed in 0u64..1000) {
            // compare against random simplex points
            let mut p = v.clone();
            project_onto_simplex(&mut p);
            let d0: f64 = p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let w: Vec<f64> = random_start(&mut rng, v.len(), false);
                let d1: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                prop_assert!(d0 <= d1 + 1e-12);
            }
        }
    }
}
