//! Letter-by-letter decomposition of `Ω_{p‖q}` through the tilted laws
//! `p^(t) ∝ p(l) p(x^t|l) Π_{i<=t} W1 W2 f_i` and their normalizers `C_t`.
//!
//! The recursion works on normalized `p^(t)`; `C_t` is summed separately
//! from the unnormalized definition so the two can be compared.

use serde::Serialize;

use super::code::BlockCode;
use super::law::{BlockLaw, ZConditional};
use super::lemmas::{le_bound, omega_p_q};
use super::testdist::{NLetterTestDist, StepDist};
use super::{exact_probabilities, ConverseError};
use crate::capacity::RatePair;
use crate::exponent::{f_mu_lambda, omega_q, TiltParams};
use crate::prob::{AuxiliaryJoint, DegradedPair};
use crate::scalar::CompensatedSum;

/// Largest number of tilted-law states `|L| (|X||Y||Z|)^n` kept in memory.
pub const TELESCOPE_STATE_LIMIT: f64 = 16_777_216.0;

#[derive(Debug, Clone, Serialize)]
pub struct TelescopeTrace {
    pub n: usize,
    pub mu: f64,
    pub theta: f64,
    /// `C_0 = 1, C_1, ..., C_n`, each summed from its definition.
    pub c_values: Vec<f64>,
    /// `Φ_t` from the recursion on normalized tilted laws.
    pub phi_values: Vec<f64>,
    /// `Φ_t` recomputed from the `(U_t, X_t)` marginal of `p^(t-1)`.
    pub phi_marginal: Vec<f64>,
    pub log_phi_sum: f64,
    /// `Ω_{p‖q}` by direct enumeration.
    pub omega_direct: f64,
    /// Total mass of each `p^(t)`, `t = 1..n`.
    pub tilted_sums: Vec<f64>,
    /// Largest pointwise gap between recursive and definitional `p^(t)`.
    pub recursion_deviation: Vec<f64>,
    /// `p^(t-1)` on `U_t x X`, `t = 1..n`.
    pub tilted_ux: Vec<Vec<f64>>,
}

impl TelescopeTrace {
    /// `|Σ ln Φ_t - Ω_{p‖q}|`.
    pub fn lemma6_gap(&self) -> f64 {
        (self.log_phi_sum - self.omega_direct).abs()
    }

    /// `max_t |Σ_{i<=t} ln Φ_i - ln C_t|`.
    pub fn normalizer_gap(&self) -> f64 {
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for (t, phi) in self.phi_values.iter().enumerate() {
            acc += phi.ln();
            worst = worst.max((acc - self.c_values[t + 1].ln()).abs());
        }
        worst
    }

    pub fn max_recursion_deviation(&self) -> f64 {
        self.recursion_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mass_deviation(&self) -> f64 {
        self.tilted_sums
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_params(mu: f64, theta: f64) -> Result<(), ConverseError> {
    if mu > 0.0 && mu.is_finite() && theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(ConverseError::Invalid(format!("μ = {mu}, θ = {theta}")))
    }
}

fn run<F>(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    mu: f64,
    theta: f64,
    mut choose: F,
) -> Result<(TelescopeTrace, NLetterTestDist), ConverseError>
where
    F: FnMut(usize, &[f64]) -> Result<StepDist, ConverseError>,
{
    check_params(mu, theta)?;
    let (xs, ys, zs) = (channel.x_size(), channel.y_size(), channel.z_size());
    let (n, ls) = (law.n(), law.l_size());
    let states = ls as f64 * ((xs * ys * zs) as f64).powi(n as i32);
    if states > TELESCOPE_STATE_LIMIT {
        return Err(ConverseError::Budget {
            estimated: states,
            limit: TELESCOPE_STATE_LIMIT,
        });
    }
    let zc = ZConditional::new(law, channel);
    let (w1, w2) = (channel.w1(), channel.w2());

    // depth t-1 state: ((l * X^{t-1} + x^{t-1}) * Y^{t-1} + y^{t-1}) * Z^{t-1} + z^{t-1}
    let mut prev: Vec<f64> = (0..ls).map(|l| law.p_l(l)).collect();
    let mut prev_logf = vec![0.0; ls];
    let mut c_values = vec![1.0];
    let (mut phi_values, mut phi_marginal, mut tilted_sums, mut recursion_deviation, mut tilted_ux) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut steps = Vec::with_capacity(n);

    for t in 1..=n {
        let (xp, yp, zp) = (
            xs.pow(t as u32 - 1),
            ys.pow(t as u32 - 1),
            zs.pow(t as u32 - 1),
        );
        let u_size = ls * yp * zp;
        let parent =
            |l: usize, xh: usize, yh: usize, zh: usize| ((l * xp + xh) * yp + yh) * zp + zh;

        let mut tux = vec![0.0; u_size * xs];
        for l in 0..ls {
            for xh in 0..xp {
                for yh in 0..yp {
                    for zh in 0..zp {
                        let p = prev[parent(l, xh, yh, zh)];
                        if p == 0.0 {
                            continue;
                        }
                        let u = (l * yp + yh) * zp + zh;
                        for x in 0..xs {
                            tux[u * xs + x] += p * law.p_next(l, t, xh, x);
                        }
                    }
                }
            }
        }
        let step = choose(t, &tux)?;
        if step.u_size != u_size {
            return Err(ConverseError::Invalid(format!(
                "q_{t} has |U| = {}, expected {u_size}",
                step.u_size
            )));
        }

        // ln f_t(x, y, z | u) for a given v = κ_t(u)
        let log_f =
            |u: usize, v: usize, x: usize, y: usize, z: usize| -> Result<f64, ConverseError> {
                if theta == 0.0 {
                    return Ok(0.0);
                }
                let (qy, qz, pz) = (step.q_y_given_u(u, y), step.q_z(z), zc.get(t, v, z));
                if qy <= 0.0 || qz <= 0.0 {
                    return Err(ConverseError::Invalid(format!(
                        "q_{t} vanishes at (u={u}, y={y}, z={z}) where the law has mass"
                    )));
                }
                Ok(theta * mu * (w1.get(x, y) / qy).ln() + theta * (pz / qz).ln())
            };

        let mut phi_m = CompensatedSum::new();
        for u in 0..u_size {
            let v = (u / (yp * zp)) * zp + u % zp;
            for x in 0..xs {
                let m = tux[u * xs + x];
                if m == 0.0 {
                    continue;
                }
                for y in 0..ys {
                    for z in 0..zs {
                        let w = w1.get(x, y) * w2.get(y, z);
                        if w > 0.0 {
                            phi_m.add(m * w * log_f(u, v, x, y, z)?.exp());
                        }
                    }
                }
            }
        }

        let (xc, yc, zc_) = (xp * xs, yp * ys, zp * zs);
        let child =
            |l: usize, xh: usize, yh: usize, zh: usize| ((l * xc + xh) * yc + yh) * zc_ + zh;
        let size = ls * xc * yc * zc_;
        let mut next = vec![0.0; size];
        let mut next_logf = vec![0.0; size];
        let mut definitional = vec![0.0; size];
        let (mut phi, mut c_t) = (CompensatedSum::new(), CompensatedSum::new());
        for l in 0..ls {
            for xh in 0..xp {
                for yh in 0..yp {
                    for zh in 0..zp {
                        let s = parent(l, xh, yh, zh);
                        if prev[s] == 0.0 {
                            continue;
                        }
                        let u = (l * yp + yh) * zp + zh;
                        let v = l * zp + zh;
                        for x in 0..xs {
                            let px = law.p_next(l, t, xh, x);
                            if px == 0.0 {
                                continue;
                            }
                            let prefix_mass = law.p_l(l) * law.p_prefix(l, t, xh * xs + x);
                            for y in 0..ys {
                                for z in 0..zs {
                                    let w = w1.get(x, y) * w2.get(y, z);
                                    if w == 0.0 {
                                        continue;
                                    }
                                    let lf = log_f(u, v, x, y, z)?;
                                    let c = child(l, xh * xs + x, yh * ys + y, zh * zs + z);
                                    next[c] = prev[s] * px * w * lf.exp();
                                    phi.add(next[c]);
                                    next_logf[c] = prev_logf[s] + w.ln() + lf;
                                    definitional[c] = (prefix_mass.ln() + next_logf[c]).exp();
                                    c_t.add(definitional[c]);
                                }
                            }
                        }
                    }
                }
            }
        }
        let (phi, c_t) = (phi.value(), c_t.value());
        if !(phi > 0.0 && phi.is_finite()) || !(c_t > 0.0 && c_t.is_finite()) {
            return Err(ConverseError::ZeroNormalizer { step: t });
        }
        let mut mass = CompensatedSum::new();
        let mut dev: f64 = 0.0;
        for c in 0..size {
            next[c] /= phi;
            mass.add(next[c]);
            dev = dev.max((next[c] - definitional[c] / c_t).abs());
        }
        phi_values.push(phi);
        phi_marginal.push(phi_m.value());
        c_values.push(c_t);
        tilted_sums.push(mass.value());
        recursion_deviation.push(dev);
        tilted_ux.push(tux);
        steps.push(step);
        prev = next;
        prev_logf = next_logf;
    }

    let qn = NLetterTestDist::from_steps(channel, ls, steps)?;
    let omega_direct = omega_p_q(law, channel, &qn, mu, theta)?;
    let log_phi_sum = phi_values.iter().map(|p| p.ln()).sum();
    Ok((
        TelescopeTrace {
            n,
            mu,
            theta,
            c_values,
            phi_values,
            phi_marginal,
            log_phi_sum,
            omega_direct,
            tilted_sums,
            recursion_deviation,
            tilted_ux,
        },
        qn,
    ))
}

/// Telescoping trace for a given `q^n`.
pub fn telescope(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    qn: &NLetterTestDist,
    mu: f64,
    theta: f64,
) -> Result<TelescopeTrace, ConverseError> {
    if qn.n() != law.n() || qn.l_size() != law.l_size() {
        return Err(ConverseError::Invalid(
            "q^n does not match the law's n and |L|".into(),
        ));
    }
    run(law, channel, mu, theta, |t, _| Ok(qn.step(t).clone())).map(|(trace, _)| trace)
}

/// Telescoping trace with `q_t = p^(t-1)_{U_t X_t} W1 W2`, each step built
/// from the tilted law the previous steps produced.
pub fn optimal_test_telescope(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    mu: f64,
    theta: f64,
) -> Result<(TelescopeTrace, NLetterTestDist), ConverseError> {
    let (ys, zs) = (channel.y_size(), channel.z_size());
    run(law, channel, mu, theta, |t, tux| {
        let s: f64 = tux.iter().sum();
        let joint: Vec<f64> = tux.iter().map(|v| v / s).collect();
        StepDist::new(
            joint,
            NLetterTestDist::u_size(law.l_size(), ys, zs, t),
            channel,
        )
    })
}

/// One letter of the Hölder step for the constructed `q_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderCheck {
    pub t: usize,
    pub phi: f64,
    /// `Ω_{q_t}^(μ,λ)`.
    pub omega_qt: f64,
    /// `exp(Ω_{q_t}^(μ,λ) / (1 + λ))`.
    pub local_bound: f64,
    /// `exp(Ω^(μ,λ)(W1, W2) / (1 + λ))`.
    pub global_bound: f64,
    /// `E_{q_t}[p_{Z|V} / q_{Z|U}]`; the second Hölder factor, at most 1.
    pub second_factor: f64,
    pub holds_local: bool,
    pub holds_global: bool,
}

/// Absolute slack on log-scale comparisons against an optimizer value.
pub const OPTIMIZER_TOL: f64 = 1e-6;

/// `Φ_t <= exp(Ω_{q_t}^(μ,λ)/(1+λ)) <= exp(Ω^(μ,λ)/(1+λ))` for every letter,
/// with `θ = λ/(1+λ)` and `omega_max` the channel value at `params`.
pub fn holder_step_check(
    law: &BlockLaw,
    channel: &DegradedPair<f64>,
    params: TiltParams<f64>,
    omega_max: f64,
) -> Result<Vec<HolderCheck>, ConverseError> {
    let theta = params.theta();
    let (trace, qn) = optimal_test_telescope(law, channel, params.mu, theta)?;
    let zc = ZConditional::new(law, channel);
    let (ys, zs) = (channel.y_size(), channel.z_size());
    let shrink = 1.0 / (1.0 + params.lambda);
    let mut out = Vec::with_capacity(law.n());
    for t in 1..=law.n() {
        let step = qn.step(t);
        let aux = AuxiliaryJoint::from_joint_ux(step.joint_ux(), step.u_size, channel.clone())?;
        let omega_qt = omega_q(&aux, params)?;
        let zp = zs.pow(t as u32 - 1);
        let yzp = ys.pow(t as u32 - 1) * zp;
        let mut second = CompensatedSum::new();
        for u in 0..step.u_size {
            let qu: f64 = (0..channel.x_size()).map(|x| step.q_ux(u, x)).sum();
            if qu == 0.0 {
                continue;
            }
            let v = (u / yzp) * zp + u % zp;
            for z in 0..zs {
                if step.q_z_given_u(u, z) > 0.0 {
                    second.add(qu * zc.get(t, v, z));
                }
            }
        }
        let phi = trace.phi_values[t - 1];
        let local_bound = (shrink * omega_qt).exp();
        let global_bound = (shrink * omega_max).exp();
        out.push(HolderCheck {
            t,
            phi,
            omega_qt,
            local_bound,
            global_bound,
            second_factor: second.value(),
            holds_local: le_bound(phi, local_bound),
            holds_global: phi.ln() <= shrink * omega_max + OPTIMIZER_TOL,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Check {
    pub n: usize,
    pub params: TiltParams<f64>,
    pub theta: f64,
    /// `(1/n) Σ ln Φ_t` for the constructed `q*`.
    pub normalized_log_phi: f64,
    /// `(1/n) Ω_{p‖q*}` by direct enumeration.
    pub normalized_omega: f64,
    pub omega_max: f64,
    /// `Ω^(μ,λ) / (1 + λ)`.
    pub bound: f64,
    pub holds: bool,
    pub rates: RatePair<f64>,
    pub pc: f64,
    /// `η*` for `q*`.
    pub eta_star: f64,
    /// `F^(μ,λ)` at the code rates with `omega_max`.
    pub f_value: f64,
    /// `P_c <= 3 e^{-n η*}` and `η* >= F^(μ,λ)` up to optimizer slack.
    pub chain_holds: bool,
}

/// Proposition 2 for the law induced by a code, together with the
/// resulting per-code bound `P_c <= 3 exp(-n F^(μ,λ))`.
pub fn proposition2_check(
    code: &BlockCode,
    channel: &DegradedPair<f64>,
    params: TiltParams<f64>,
    omega_max: f64,
) -> Result<Prop2Check, ConverseError> {
    code.check_channel(channel)?;
    super::check_budget(code.enumeration_cost())?;
    let law = BlockLaw::from_code(code, channel.x_size())?;
    let theta = params.theta();
    let (trace, _) = optimal_test_telescope(&law, channel, params.mu, theta)?;
    let nf = code.n() as f64;
    let normalized_log_phi = trace.log_phi_sum / nf;
    let bound = omega_max / (1.0 + params.lambda);
    let pc = exact_probabilities(code, channel)?.pc;
    let rates = code.rates();
    let mu = params.mu;
    let eta_star =
        (theta * (mu * rates.r1 + rates.r2) - trace.omega_direct / nf) / (1.0 + theta + theta * mu);
    let f_value = f_mu_lambda(omega_max, params, rates);
    // η* >= F follows from the bound on Ω/n; the slack scales with it
    let eta_slack = OPTIMIZER_TOL / (1.0 + theta + theta * mu);
    let chain_holds = le_bound(pc, 3.0 * (-nf * eta_star).exp()) && eta_star >= f_value - eta_slack;
    Ok(Prop2Check {
        n: code.n(),
        params,
        theta,
        normalized_log_phi,
        normalized_omega: trace.omega_direct / nf,
        omega_max,
        bound,
        holds: normalized_log_phi <= bound + OPTIMIZER_TOL,
        rates,
        pc,
        eta_star,
        f_value,
        chain_holds,
    })
}
