//! Fused evaluators of `μ I(X;Y|U) + I(U;Z)` and `Ω_q^(μ,λ)` as functions of
//! the joint law `r(u, x)`, with gradients, for the simplex optimizer.
//!
//! Logs of induced conditionals are floored at `INTERIOR_FLOOR` here only;
//! reported values are always recomputed through `info`/`exponent`.

use crate::optimize::SimplexObjective;
use crate::prob::DegradedPair;
use crate::scalar::{lit, xlogx, Real, INTERIOR_FLOOR};

#[derive(Debug, Clone)]
pub(crate) struct KernelTables<T> {
    pub xs: usize,
    pub ys: usize,
    pub zs: usize,
    pub w1: Vec<T>,
    pub wc: Vec<T>,
    /// `W1(y|x) W2(z|y)` indexed `(x, y, z)`.
    pub k: Vec<T>,
    pub h_w1: Vec<T>,
}

impl<T: Real> KernelTables<T> {
    pub fn new(ch: &DegradedPair<T>) -> Self {
        let (xs, ys, zs) = (ch.x_size(), ch.y_size(), ch.z_size());
        let wc = ch.composite();
        let mut k = Vec::with_capacity(xs * ys * zs);
        for x in 0..xs {
            for y in 0..ys {
                for z in 0..zs {
                    k.push(ch.w1().get(x, y) * ch.w2().get(y, z));
                }
            }
        }
        let h_w1 = (0..xs)
            .map(|x| -ch.w1().row(x).iter().map(|&p| xlogx(p)).sum::<T>())
            .collect();
        Self {
            xs,
            ys,
            zs,
            w1: ch.w1().as_slice().to_vec(),
            wc: wc.as_slice().to_vec(),
            k,
            h_w1,
        }
    }

    #[inline]
    fn w1(&self, x: usize, y: usize) -> T {
        self.w1[x * self.ys + y]
    }

    #[inline]
    fn wc(&self, x: usize, z: usize) -> T {
        self.wc[x * self.zs + z]
    }

    /// Per-`u` mass and conditionals `q(y|u)`, `q(z|u)` plus `q(z)`.
    fn induced(&self, r: &[T], u_size: usize) -> Induced<T> {
        let (xs, ys, zs) = (self.xs, self.ys, self.zs);
        let mut ru = vec![T::zero(); u_size];
        let mut qyu = vec![T::zero(); u_size * ys];
        let mut qzu = vec![T::zero(); u_size * zs];
        let mut qz = vec![T::zero(); zs];
        for u in 0..u_size {
            for x in 0..xs {
                let m = r[u * xs + x];
                if m <= T::zero() {
                    continue;
                }
                ru[u] = ru[u] + m;
                for y in 0..ys {
                    qyu[u * ys + y] = qyu[u * ys + y] + m * self.w1(x, y);
                }
                for z in 0..zs {
                    let v = m * self.wc(x, z);
                    qzu[u * zs + z] = qzu[u * zs + z] + v;
                    qz[z] = qz[z] + v;
                }
            }
            if ru[u] > T::zero() {
                for y in 0..ys {
                    qyu[u * ys + y] = qyu[u * ys + y] / ru[u];
                }
                for z in 0..zs {
                    qzu[u * zs + z] = qzu[u * zs + z] / ru[u];
                }
            }
        }
        let total: T = ru.iter().copied().sum();
        if total > T::zero() {
            for v in &mut qz {
                *v = *v / total;
            }
        }
        Induced { ru, qyu, qzu, qz }
    }
}

struct Induced<T> {
    ru: Vec<T>,
    qyu: Vec<T>,
    qzu: Vec<T>,
    qz: Vec<T>,
}

#[inline]
fn floored_ln<T: Real>(p: T) -> T {
    p.max(lit(INTERIOR_FLOOR)).ln()
}

/// Joints with `X` close to a single letter, either independent of `U` or
/// with `U` copying `X` up to a little noise. Tilted objectives at large λ
/// peak near such points, which random interior starts rarely reach.
fn near_vertex_starts<T: Real>(u_size: usize, xs: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for eps in [0.1, 0.02, 0.005] {
        for x in 0..xs {
            let mut px = vec![eps / xs as f64; xs];
            px[x] += 1.0 - eps;
            let flat: Vec<T> = (0..u_size)
                .flat_map(|_| px.iter().map(|&p| lit(p / u_size as f64)))
                .collect();
            out.push(flat);
            let noise = 1e-3 / (u_size * xs) as f64;
            let copied: Vec<T> = (0..u_size)
                .flat_map(|u| {
                    let px = &px;
                    (0..xs).map(move |x| {
                        let own = if u == x % u_size { px[x] } else { 0.0 };
                        lit((own + noise) / (1.0 + 1e-3))
                    })
                })
                .collect();
            out.push(copied);
        }
    }
    out
}

/// `μ I(X;Y|U) + I(U;Z)` over `r ∈ Δ(U x X)`.
pub(crate) struct CapacityObjective<T> {
    pub tables: KernelTables<T>,
    pub mu: T,
    pub u_size: usize,
}

impl<T: Real> SimplexObjective<T> for CapacityObjective<T> {
    fn dim(&self) -> usize {
        self.u_size * self.tables.xs
    }

    fn value(&self, r: &[T]) -> T {
        let t = &self.tables;
        let ind = t.induced(r, self.u_size);
        let mut h_y_u = T::zero();
        let mut h_z_u = T::zero();
        for u in 0..self.u_size {
            if ind.ru[u] > T::zero() {
                let hy: T = -ind.qyu[u * t.ys..(u + 1) * t.ys]
                    .iter()
                    .map(|&p| xlogx(p))
                    .sum::<T>();
                let hz: T = -ind.qzu[u * t.zs..(u + 1) * t.zs]
                    .iter()
                    .map(|&p| xlogx(p))
                    .sum::<T>();
                h_y_u = h_y_u + ind.ru[u] * hy;
                h_z_u = h_z_u + ind.ru[u] * hz;
            }
        }
        let mut h_y_x = T::zero();
        for u in 0..self.u_size {
            for x in 0..t.xs {
                h_y_x = h_y_x + r[u * t.xs + x] * t.h_w1[x];
            }
        }
        let h_z: T = -ind.qz.iter().map(|&p| xlogx(p)).sum::<T>();
        self.mu * (h_y_u - h_y_x) + h_z - h_z_u
    }

    fn value_and_gradient(&self, r: &[T], grad: &mut [T]) -> T {
        let t = &self.tables;
        let ind = t.induced(r, self.u_size);
        let ln_qz: Vec<T> = ind.qz.iter().map(|&p| floored_ln(p)).collect();
        for u in 0..self.u_size {
            for x in 0..t.xs {
                let mut g = T::zero();
                let empty = ind.ru[u] <= T::zero();
                for y in 0..t.ys {
                    let w = t.w1(x, y);
                    if w > T::zero() && !empty {
                        g = g + self.mu * w * (w.ln() - floored_ln(ind.qyu[u * t.ys + y]));
                    }
                }
                for z in 0..t.zs {
                    let w = t.wc(x, z);
                    if w > T::zero() {
                        let lq = if empty {
                            w.ln()
                        } else {
                            floored_ln(ind.qzu[u * t.zs + z])
                        };
                        g = g + w * (lq - ln_qz[z]);
                    }
                }
                grad[u * t.xs + x] = g;
            }
        }
        self.value(r)
    }
}

/// `Ω_q^(μ,λ) = ln E_q[exp(λ ω_q^(μ))]` over `r ∈ Δ(U x X)`.
pub(crate) struct OmegaObjective<T> {
    pub tables: KernelTables<T>,
    pub mu: T,
    pub lambda: T,
    pub u_size: usize,
}

const EXP_CAP: f64 = 700.0;

impl<T: Real> OmegaObjective<T> {
    /// `λ ω(u, x, y, z)` with floored conditionals; `qyu`/`qzu` are the rows for `u`.
    #[inline]
    fn tilt(&self, x: usize, y: usize, z: usize, ln_qyu: &[T], ln_qzu: &[T], ln_qz: &[T]) -> T {
        let t = &self.tables;
        let w = t.w1(x, y);
        self.lambda * (self.mu * (w.ln() - ln_qyu[y]) + ln_qzu[z] - ln_qz[z])
    }

    fn evaluate(&self, r: &[T], grad: Option<&mut [T]>) -> T {
        let t = &self.tables;
        let (xs, ys, zs) = (t.xs, t.ys, t.zs);
        let ind = t.induced(r, self.u_size);
        let ln_qz: Vec<T> = ind.qz.iter().map(|&p| floored_ln(p)).collect();
        let ln_qyu: Vec<T> = ind.qyu.iter().map(|&p| floored_ln(p)).collect();
        let ln_qzu: Vec<T> = ind.qzu.iter().map(|&p| floored_ln(p)).collect();

        // log-weights of supported points
        let mut logw = vec![T::neg_infinity(); self.u_size * xs * ys * zs];
        let mut max = T::neg_infinity();
        for u in 0..self.u_size {
            let (lyu, lzu) = (&ln_qyu[u * ys..(u + 1) * ys], &ln_qzu[u * zs..(u + 1) * zs]);
            for x in 0..xs {
                let m = r[u * xs + x];
                if m <= T::zero() {
                    continue;
                }
                let lm = m.ln();
                for y in 0..ys {
                    for z in 0..zs {
                        let kv = t.k[(x * ys + y) * zs + z];
                        if kv > T::zero() {
                            let v = lm + kv.ln() + self.tilt(x, y, z, lyu, lzu, &ln_qz);
                            logw[((u * xs + x) * ys + y) * zs + z] = v;
                            max = max.max(v);
                        }
                    }
                }
            }
        }
        let s: T = logw
            .iter()
            .filter(|v| v.is_finite())
            .map(|&v| (v - max).exp())
            .sum();
        let omega = max + s.ln();
        let Some(grad) = grad else {
            return omega;
        };

        let mut tau_uy = vec![T::zero(); self.u_size * ys];
        let mut tau_uz = vec![T::zero(); self.u_size * zs];
        let mut tau_u = vec![T::zero(); self.u_size];
        let mut tau_z = vec![T::zero(); zs];
        for u in 0..self.u_size {
            for x in 0..xs {
                for y in 0..ys {
                    for z in 0..zs {
                        let lw = logw[((u * xs + x) * ys + y) * zs + z];
                        if lw.is_finite() {
                            let tau = (lw - omega).exp();
                            tau_uy[u * ys + y] = tau_uy[u * ys + y] + tau;
                            tau_uz[u * zs + z] = tau_uz[u * zs + z] + tau;
                            tau_u[u] = tau_u[u] + tau;
                            tau_z[z] = tau_z[z] + tau;
                        }
                    }
                }
            }
        }
        let cap: T = lit(EXP_CAP);
        for u in 0..self.u_size {
            let empty = ind.ru[u] <= T::zero();
            for x in 0..xs {
                // rows of the conditionals seen by a unit of mass placed at (u, x)
                let (lyu, lzu): (Vec<T>, Vec<T>) = if empty {
                    (
                        (0..ys).map(|y| floored_ln(t.w1(x, y))).collect(),
                        (0..zs).map(|z| floored_ln(t.wc(x, z))).collect(),
                    )
                } else {
                    (
                        ln_qyu[u * ys..(u + 1) * ys].to_vec(),
                        ln_qzu[u * zs..(u + 1) * zs].to_vec(),
                    )
                };
                let mut g = T::zero();
                for y in 0..ys {
                    for z in 0..zs {
                        let kv = t.k[(x * ys + y) * zs + z];
                        if kv > T::zero() {
                            let e = (self.tilt(x, y, z, &lyu, &lzu, &ln_qz) - omega).min(cap);
                            g = g + kv * e.exp();
                        }
                    }
                }
                let mut h = T::zero();
                if !empty {
                    for y in 0..ys {
                        let tv = tau_uy[u * ys + y];
                        if tv > T::zero() {
                            h = h - self.mu * t.w1(x, y) * tv / (ind.ru[u] * ind.qyu[u * ys + y]);
                        }
                    }
                    h = h + (self.mu - T::one()) * tau_u[u] / ind.ru[u];
                    for z in 0..zs {
                        let tv = tau_uz[u * zs + z];
                        if tv > T::zero() {
                            h = h + t.wc(x, z) * tv / (ind.ru[u] * ind.qzu[u * zs + z]);
                        }
                    }
                }
                for z in 0..zs {
                    if tau_z[z] > T::zero() {
                        h = h - t.wc(x, z) * tau_z[z] / ind.qz[z];
                    }
                }
                grad[u * xs + x] = g + self.lambda * h;
            }
        }
        omega
    }
}

impl<T: Real> SimplexObjective<T> for OmegaObjective<T> {
    fn dim(&self) -> usize {
        self.u_size * self.tables.xs
    }

    fn structured_starts(&self) -> Vec<Vec<T>> {
        near_vertex_starts(self.u_size, self.tables.xs)
    }

    fn value(&self, r: &[T]) -> T {
        self.evaluate(r, None)
    }

    fn value_and_gradient(&self, r: &[T], grad: &mut [T]) -> T {
        self.evaluate(r, Some(grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::StochasticMatrix;

    fn channel() -> DegradedPair<f64> {
        DegradedPair::new(
            StochasticMatrix::new(2, 3, vec![0.7, 0.2, 0.1, 0.15, 0.25, 0.6]).unwrap(),
            StochasticMatrix::new(3, 2, vec![0.9, 0.1, 0.4, 0.6, 0.2, 0.8]).unwrap(),
        )
        .unwrap()
    }

    /// Tangent directional derivative by central differences.
    fn check_gradient<O: SimplexObjective<f64>>(obj: &O, r: &[f64]) {
        let d = r.len();
        let mut g = vec![0.0; d];
        obj.value_and_gradient(r, &mut g);
        let h = 1e-6;
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let mut a = r.to_vec();
                let mut b = r.to_vec();
                a[i] += h;
                a[j] -= h;
                b[i] -= h;
                b[j] += h;
                let fd = (obj.value(&a) - obj.value(&b)) / (2.0 * h);
                let an = g[i] - g[j];
                assert!(
                    (fd - an).abs() < 1e-6 * (1.0 + an.abs()),
                    "dir ({i},{j}): fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn capacity_gradient_matches_finite_differences() {
        let obj = CapacityObjective {
            tables: KernelTables::new(&channel()),
            mu: 1.7,
            u_size: 3,
        };
        check_gradient(&obj, &[0.1, 0.2, 0.05, 0.25, 0.3, 0.1]);
    }

    #[test]
    fn omega_gradient_matches_finite_differences() {
        for &(mu, lambda) in &[(1.0, 1.0), (0.3, 2.5), (4.0, 0.2)] {
            let obj = OmegaObjective {
                tables: KernelTables::new(&channel()),
                mu,
                lambda,
                u_size: 3,
            };
            check_gradient(&obj, &[0.1, 0.2, 0.05, 0.25, 0.3, 0.1]);
        }
    }

    #[test]
    fn omega_vanishes_at_zero_tilt() {
        let obj = OmegaObjective {
            tables: KernelTables::new(&channel()),
            mu: 1.0,
            lambda: 0.0,
            u_size: 2,
        };
        assert!(obj.value(&[0.1, 0.4, 0.3, 0.2]).abs() < 1e-15);
    }
}
