//! Sequences of per-letter test distributions `q^n = (q_1, ..., q_n)`.
//!
//! Step `t` lives on `U_t x X x Y x Z` with `U_t = (L, Y^{t-1}, Z^{t-1})`,
//! indexed as `u = (l * |Y|^{t-1} + y^{t-1}) * |Z|^{t-1} + z^{t-1}`. Only the
//! law of `(U_t, X_t)` is stored; `Y_t` and `Z_t` follow through the channel.
//! Nothing ties `q_t` to `q_{t+1}`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::code::ProductKernels;
use super::law::BlockLaw;
use super::ConverseError;
use crate::prob::{validate_probs, DegradedPair};

/// Exponential(1) weights normalized onto the simplex.
pub(crate) fn dirichlet(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-300)
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|e| *e /= s);
    v
}

/// One `q_t = q_{U_t X_t} W1 W2` with the conditionals the checks need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDist {
    pub u_size: usize,
    x_size: usize,
    y_size: usize,
    z_size: usize,
    joint_ux: Vec<f64>,
    /// `q_{Y|U}`; rows of zero-mass `u` are uniform and carry no probability.
    q_y_given_u: Vec<f64>,
    q_z_given_u: Vec<f64>,
    q_z: Vec<f64>,
}

impl StepDist {
    pub fn new(
        joint_ux: Vec<f64>,
        u_size: usize,
        channel: &DegradedPair<f64>,
    ) -> Result<Self, ConverseError> {
        let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
        if joint_ux.len() != u_size * xs {
            return Err(ConverseError::Invalid(format!(
                "q_(U,X) has {} entries, expected {}",
                joint_ux.len(),
                u_size * xs
            )));
        }
        let report = validate_probs(&joint_ux);
        if !report.is_ok() {
            return Err(ConverseError::Invalid(format!("q_(U,X): {report}")));
        }
        let wc = channel.composite();
        let mut q_y_given_u = vec![0.0; u_size * ys];
        let mut q_z_given_u = vec![0.0; u_size * zs];
        let mut q_z = vec![0.0; zs];
        for u in 0..u_size {
            let row = &joint_ux[u * xs..(u + 1) * xs];
            let qu: f64 = row.iter().sum();
            if qu <= 0.0 {
                q_y_given_u[u * ys..(u + 1) * ys].fill(1.0 / ys as f64);
                q_z_given_u[u * zs..(u + 1) * zs].fill(1.0 / zs as f64);
                continue;
            }
            for (x, &p) in row.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for y in 0..ys {
                    q_y_given_u[u * ys + y] += p / qu * channel.w1().get(x, y);
                }
                for z in 0..zs {
                    q_z_given_u[u * zs + z] += p / qu * wc.get(x, z);
                    q_z[z] += p * wc.get(x, z);
                }
            }
        }
        Ok(Self {
            u_size,
            x_size: xs,
            y_size: ys,
            z_size: zs,
            joint_ux,
            q_y_given_u,
            q_z_given_u,
            q_z,
        })
    }

    pub fn joint_ux(&self) -> &[f64] {
        &self.joint_ux
    }

    pub fn q_ux(&self, u: usize, x: usize) -> f64 {
        self.joint_ux[u * self.x_size + x]
    }

    pub fn q_y_given_u(&self, u: usize, y: usize) -> f64 {
        self.q_y_given_u[u * self.y_size + y]
    }

    pub fn q_z_given_u(&self, u: usize, z: usize) -> f64 {
        self.q_z_given_u[u * self.z_size + z]
    }

    pub fn q_z(&self, z: usize) -> f64 {
        self.q_z[z]
    }
}

/// `q^n`, one [`StepDist`] per letter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NLetterTestDist {
    n: usize,
    l_size: usize,
    y_size: usize,
    z_size: usize,
    steps: Vec<StepDist>,
}

impl NLetterTestDist {
    /// `|U_t| = |L| |Y|^{t-1} |Z|^{t-1}`.
    pub fn u_size(l_size: usize, y_size: usize, z_size: usize, t: usize) -> usize {
        l_size * (y_size * z_size).pow(t as u32 - 1)
    }

    /// `steps[t - 1]` is `q_t`.
    pub fn from_steps(
        channel: &DegradedPair<f64>,
        l_size: usize,
        steps: Vec<StepDist>,
    ) -> Result<Self, ConverseError> {
        let (ys, zs) = (channel.y_size(), channel.z_size());
        for (i, s) in steps.iter().enumerate() {
            let want = Self::u_size(l_size, ys, zs, i + 1);
            if s.u_size != want || s.x_size != channel.x_size() || s.y_size != ys || s.z_size != zs
            {
                return Err(ConverseError::Invalid(format!(
                    "step {} has the wrong shape",
                    i + 1
                )));
            }
        }
        if steps.is_empty() {
            return Err(ConverseError::Invalid("q^n needs at least one step".into()));
        }
        Ok(Self {
            n: steps.len(),
            l_size,
            y_size: ys,
            z_size: zs,
            steps,
        })
    }

    /// Builds each step from a joint on `U_t x X`.
    pub fn from_joints(
        channel: &DegradedPair<f64>,
        l_size: usize,
        joints: Vec<Vec<f64>>,
    ) -> Result<Self, ConverseError> {
        let (ys, zs) = (channel.y_size(), channel.z_size());
        let steps = joints
            .into_iter()
            .enumerate()
            .map(|(i, j)| StepDist::new(j, Self::u_size(l_size, ys, zs, i + 1), channel))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_steps(channel, l_size, steps)
    }

    /// Independent random steps with full support.
    pub fn random(
        channel: &DegradedPair<f64>,
        n: usize,
        l_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, ConverseError> {
        let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
        let joints = (1..=n)
            .map(|t| dirichlet(rng, Self::u_size(l_size, ys, zs, t) * xs))
            .collect();
        Self::from_joints(channel, l_size, joints)
    }

    /// Every step puts `1 - floor` on `(u, x) = (0, 0)` and spreads `floor`
    /// uniformly.
    pub fn floored_point_mass(
        channel: &DegradedPair<f64>,
        n: usize,
        l_size: usize,
        floor: f64,
    ) -> Result<Self, ConverseError> {
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(ConverseError::Invalid(format!("floor = {floor}")));
        }
        let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
        let joints = (1..=n)
            .map(|t| {
                let len = Self::u_size(l_size, ys, zs, t) * xs;
                let mut j = vec![floor / len as f64; len];
                j[0] += 1.0 - floor;
                j
            })
            .collect();
        Self::from_joints(channel, l_size, joints)
    }

    /// `q_t = p_{U_t X_t} W1 W2` with `p_{U_t X_t}` the marginal of the law.
    pub fn code_induced(
        law: &BlockLaw,
        channel: &DegradedPair<f64>,
    ) -> Result<Self, ConverseError> {
        let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
        let ls = law.l_size();
        let mut joints = Vec::with_capacity(law.n());
        for t in 1..=law.n() {
            let kern = ProductKernels::new(channel, t - 1);
            let (xp, yp, zp) = (kern.xs.size(), kern.ys.size(), kern.zs.size());
            let mut j = vec![0.0; Self::u_size(ls, ys, zs, t) * xs];
            for l in 0..ls {
                for xh in 0..xp {
                    for x in 0..xs {
                        let p = law.p_l(l) * law.p_prefix(l, t, xh * xs + x);
                        if p == 0.0 {
                            continue;
                        }
                        for yh in 0..yp {
                            let py = p * kern.w1(xh, yh);
                            if py == 0.0 {
                                continue;
                            }
                            for zh in 0..zp {
                                let u = (l * yp + yh) * zp + zh;
                                j[u * xs + x] += py * kern.w2(yh, zh);
                            }
                        }
                    }
                }
            }
            joints.push(j);
        }
        Self::from_joints(channel, ls, joints)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_size(&self) -> usize {
        self.l_size
    }

    /// `q_t`, 1-based.
    pub fn step(&self, t: usize) -> &StepDist {
        &self.steps[t - 1]
    }

    pub fn steps(&self) -> &[StepDist] {
        &self.steps
    }

    /// Index of `u_t = (l, y^{t-1}, z^{t-1})`.
    #[inline]
    pub fn u_index(&self, t: usize, l: usize, y_hist: usize, z_hist: usize) -> usize {
        let (yp, zp) = (self.y_size.pow(t as u32 - 1), self.z_size.pow(t as u32 - 1));
        (l * yp + y_hist) * zp + z_hist
    }

    /// `κ_t(u_t) = (l, z^{t-1})`, indexed as `l * |Z|^{t-1} + z^{t-1}`.
    #[inline]
    pub fn kappa(&self, t: usize, u: usize) -> usize {
        let (yp, zp) = (self.y_size.pow(t as u32 - 1), self.z_size.pow(t as u32 - 1));
        let l = u / (yp * zp);
        l * zp + u % zp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::StochasticMatrix;
    use rand::SeedableRng;

    fn cascade() -> DegradedPair<f64> {
        DegradedPair::new(
            StochasticMatrix::bsc(0.2).unwrap(),
            StochasticMatrix::bsc(0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn shapes_grow_with_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = NLetterTestDist::random(&cascade(), 3, 2, &mut rng).unwrap();
        assert_eq!(q.step(1).u_size, 2);
        assert_eq!(q.step(3).u_size, 32);
        let u = q.u_index(3, 1, 2, 3);
        assert_eq!(q.kappa(3, u), 4 + 3);
    }

    #[test]
    fn code_induced_first_step_is_input_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ch = cascade();
        let law = BlockLaw::random(2, 2, 2, &mut rng).unwrap();
        let q = NLetterTestDist::code_induced(&law, &ch).unwrap();
        for l in 0..2 {
            for x in 0..2 {
                assert!((q.step(1).q_ux(l, x) - law.p_l(l) * law.p_prefix(l, 1, x)).abs() < 1e-15);
            }
        }
        let s: f64 = q.step(2).joint_ux().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conditionals_are_normalized() {
        let q = NLetterTestDist::floored_point_mass(&cascade(), 2, 3, 1e-3).unwrap();
        let st = q.step(2);
        for u in 0..st.u_size {
            let s: f64 = (0..2).map(|y| st.q_y_given_u(u, y)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let s: f64 = (0..2).map(|z| st.q_z(z)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
