//! Capacity and cumulant values against independent implementations.

use dbx_core::capacity::c_mu;
use dbx_core::exponent::{omega_q, TiltParams};
use dbx_core::{AuxiliaryJoint, DegradedPair, OptConfig, ProbVector, StochasticMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let v: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.02..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.iter().map(|e| e / s).collect()
        })
        .collect()
}

fn random_channel(rng: &mut ChaCha8Rng, x: usize, y: usize, z: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (random_rows(rng, x, y), random_rows(rng, y, z))
}

fn pair(w1: &[Vec<f64>], w2: &[Vec<f64>]) -> DegradedPair {
    DegradedPair::new(
        StochasticMatrix::from_rows(w1.to_vec()).unwrap(),
        StochasticMatrix::from_rows(w2.to_vec()).unwrap(),
    )
    .unwrap()
}

/// `μ I(X;Y|U) + I(U;Z)` summed straight from the definition.
fn weighted_sum(pu: &[f64], pxu: &[Vec<f64>], w1: &[Vec<f64>], w2: &[Vec<f64>], mu: f64) -> f64 {
    let (xs, ys, zs) = (w1.len(), w2.len(), w2[0].len());
    let mut pz = vec![0.0; zs];
    let mut total = 0.0;
    let mut i_uz = 0.0;
    let mut pzu = vec![vec![0.0; zs]; pu.len()];
    for u in 0..pu.len() {
        let mut pyu = vec![0.0; ys];
        for x in 0..xs {
            for y in 0..ys {
                pyu[y] += pxu[u][x] * w1[x][y];
            }
        }
        for y in 0..ys {
            for z in 0..zs {
                pzu[u][z] += pyu[y] * w2[y][z];
            }
        }
        for z in 0..zs {
            pz[z] += pu[u] * pzu[u][z];
        }
        let mut cmi = 0.0;
        for x in 0..xs {
            for y in 0..ys {
                let p = pxu[u][x] * w1[x][y];
                if p > 0.0 {
                    cmi += p * (w1[x][y] / pyu[y]).ln();
                }
            }
        }
        total += pu[u] * cmi;
    }
    for u in 0..pu.len() {
        for z in 0..zs {
            let p = pu[u] * pzu[u][z];
            if p > 0.0 {
                i_uz += p * (pzu[u][z] / pz[z]).ln();
            }
        }
    }
    mu * total + i_uz
}

#[test]
fn c_mu_matches_dyadic_grid() {
    const STEPS: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..3 {
        let (w1, w2) = random_channel(&mut rng, 2, 2, 2);
        let ch = pair(&w1, &w2);
        for mu in [0.5, 1.0, 2.0] {
            let mut grid_max = f64::NEG_INFINITY;
            for a in 0..=STEPS {
                let pu = [a as f64 / STEPS as f64, 1.0 - a as f64 / STEPS as f64];
                for b in 0..=STEPS {
                    for c in 0..=STEPS {
                        let (b, c) = (b as f64 / STEPS as f64, c as f64 / STEPS as f64);
                        let pxu = [vec![b, 1.0 - b], vec![c, 1.0 - c]];
                        grid_max = grid_max.max(weighted_sum(&pu, &pxu, &w1, &w2, mu));
                    }
                }
            }
            let got = c_mu(&ch, mu, &OptConfig::default()).unwrap();
            assert!(got.value >= grid_max - 1e-12, "μ={mu}: {} < grid {grid_max}", got.value);
            assert!(got.value - grid_max <= 1e-3, "μ={mu}: {} vs grid {grid_max}", got.value);
        }
    }
}

fn blahut_arimoto(w: &[Vec<f64>]) -> f64 {
    let (xs, ys) = (w.len(), w[0].len());
    let mut p = vec![1.0 / xs as f64; xs];
    let mut cap = 0.0;
    for _ in 0..20000 {
        let q: Vec<f64> = (0..ys).map(|y| (0..xs).map(|x| p[x] * w[x][y]).sum()).collect();
        let d: Vec<f64> = (0..xs)
            .map(|x| {
                (0..ys)
                    .filter(|&y| w[x][y] > 0.0)
                    .map(|y| w[x][y] * (w[x][y] / q[y]).ln())
                    .sum::<f64>()
            })
            .collect();
        let z: f64 = (0..xs).map(|x| p[x] * d[x].exp()).sum();
        let lower = z.ln();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        cap = lower;
        if upper - lower < 1e-12 {
            break;
        }
        p = (0..xs).map(|x| p[x] * d[x].exp() / z).collect();
    }
    cap
}

fn compose(w1: &[Vec<f64>], w2: &[Vec<f64>]) -> Vec<Vec<f64>> {
    w1.iter()
        .map(|r| {
            (0..w2[0].len())
                .map(|z| r.iter().zip(w2).map(|(a, row)| a * row[z]).sum())
                .collect()
        })
        .collect()
}

#[test]
fn c_mu_limits_match_blahut_arimoto() {
    // μ C(W1) <= C^(μ) <= μ C(W1) + C(W1 W2), and C(W1 W2) <= C^(μ) for all μ
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (x, y, z) in [(2, 2, 2), (3, 2, 2), (2, 3, 3), (3, 3, 2)] {
        let (w1, w2) = random_channel(&mut rng, x, y, z);
        let ch = pair(&w1, &w2);
        let c1 = blahut_arimoto(&w1);
        let c2 = blahut_arimoto(&compose(&w1, &w2));
        let cfg = OptConfig::default();
        let small = c_mu(&ch, 1e-3, &cfg).unwrap().value;
        assert!(small >= c2 - 1e-9 && small <= c2 + 1e-3 * c1 + 1e-9, "{small} vs {c2}");
        let big = c_mu(&ch, 1e3, &cfg).unwrap().value;
        assert!(big >= 1e3 * c1 - 1e-6 && big <= 1e3 * c1 + c2 + 1e-6, "{big} vs {c1}");
    }
}

/// `ln` of a double-double: f64 log of the head plus a first-order tail
/// correction. twofloat's own `ln` is off by ~2e-14 near 2.
fn ln_dd(x: TwoFloat) -> TwoFloat {
    TwoFloat::from(x.hi().ln()) + x.lo() / x.hi()
}

#[test]
fn information_matches_double_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let (xs, ys, zs, us) = (rng.gen_range(2..5), rng.gen_range(2..5), rng.gen_range(2..5), rng.gen_range(1..5));
        let (w1, w2) = random_channel(&mut rng, xs, ys, zs);
        let pu = random_rows(&mut rng, 1, us).remove(0);
        let pxu = random_rows(&mut rng, us, xs);
        let aux = AuxiliaryJoint::new(
            ProbVector::new(pu.clone()).unwrap(),
            StochasticMatrix::from_rows(pxu.clone()).unwrap(),
            pair(&w1, &w2),
        )
        .unwrap();
        let info = aux.info();

        let t = TwoFloat::from;
        let zero = TwoFloat::from(0.0);
        // p(u, x, y, z) in double-double
        let mut joint = vec![zero; us * xs * ys * zs];
        let idx = |u: usize, x: usize, y: usize, z: usize| ((u * xs + x) * ys + y) * zs + z;
        for u in 0..us {
            for x in 0..xs {
                for y in 0..ys {
                    for z in 0..zs {
                        joint[idx(u, x, y, z)] = t(pu[u]) * t(pxu[u][x]) * t(w1[x][y]) * t(w2[y][z]);
                    }
                }
            }
        }
        let marg = |keep: &dyn Fn(usize, usize, usize, usize) -> usize, size: usize| {
            let mut m = vec![zero; size];
            for u in 0..us {
                for x in 0..xs {
                    for y in 0..ys {
                        for z in 0..zs {
                            m[keep(u, x, y, z)] += joint[idx(u, x, y, z)];
                        }
                    }
                }
            }
            m
        };
        let p_uxy = marg(&|u, x, y, _| (u * xs + x) * ys + y, us * xs * ys);
        let p_ux = marg(&|u, x, _, _| u * xs + x, us * xs);
        let p_uy = marg(&|u, _, y, _| u * ys + y, us * ys);
        let p_u = marg(&|u, _, _, _| u, us);
        let p_uz = marg(&|u, _, _, z| u * zs + z, us * zs);
        let p_z = marg(&|_, _, _, z| z, zs);

        let mut cmi = zero;
        for u in 0..us {
            for x in 0..xs {
                for y in 0..ys {
                    let p = p_uxy[(u * xs + x) * ys + y];
                    cmi += p * ln_dd((p * p_u[u]) / (p_ux[u * xs + x] * p_uy[u * ys + y]));
                }
            }
        }
        let mut iuz = zero;
        for u in 0..us {
            for z in 0..zs {
                let p = p_uz[u * zs + z];
                iuz += p * ln_dd(p / (p_u[u] * p_z[z]));
            }
        }
        assert!((info.i_xy_given_u - cmi.hi()).abs() < 1e-13, "{} vs {}", info.i_xy_given_u, cmi.hi());
        assert!((info.i_uz - iuz.hi()).abs() < 1e-13, "{} vs {}", info.i_uz, iuz.hi());
    }
}

#[test]
fn omega_q_matches_brute_force_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (xs, ys, zs, us) = (rng.gen_range(2..4), rng.gen_range(2..4), rng.gen_range(2..4), rng.gen_range(1..4));
        let (w1, w2) = random_channel(&mut rng, xs, ys, zs);
        let pu = random_rows(&mut rng, 1, us).remove(0);
        let pxu = random_rows(&mut rng, us, xs);
        let aux = AuxiliaryJoint::new(
            ProbVector::new(pu.clone()).unwrap(),
            StochasticMatrix::from_rows(pxu.clone()).unwrap(),
            pair(&w1, &w2),
        )
        .unwrap();
        let mu = rng.gen_range(0.1..5.0);
        let lambda = rng.gen_range(0.01..3.0);

        let mut qyu = vec![vec![0.0; ys]; us];
        let mut qzu = vec![vec![0.0; zs]; us];
        let mut qz = vec![0.0; zs];
        for u in 0..us {
            for x in 0..xs {
                for y in 0..ys {
                    qyu[u][y] += pxu[u][x] * w1[x][y];
                    for z in 0..zs {
                        qzu[u][z] += pxu[u][x] * w1[x][y] * w2[y][z];
                    }
                }
            }
            for z in 0..zs {
                qz[z] += pu[u] * qzu[u][z];
            }
        }
        let mut sum = 0.0;
        for u in 0..us {
            for x in 0..xs {
                for y in 0..ys {
                    for z in 0..zs {
                        let m = pu[u] * pxu[u][x] * w1[x][y] * w2[y][z];
                        let w = mu * (w1[x][y] / qyu[u][y]).ln() + (qzu[u][z] / qz[z]).ln();
                        sum += m * (lambda * w).exp();
                    }
                }
            }
        }
        let got = omega_q(&aux, TiltParams::new(mu, lambda).unwrap()).unwrap();
        assert!((got - sum.ln()).abs() <= 1e-12 * (1.0 + got.abs()), "{got} vs {}", sum.ln());
    }
}

#[test]
fn f32_and_f64_capacity_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (w1, w2) = random_channel(&mut rng, 3, 3, 2);
    let ch = pair(&w1, &w2);
    let ch32: dbx_core::DegradedPairF32 = ch.convert();
    let cfg = OptConfig::default();
    let a = c_mu(&ch, 1.5, &cfg).unwrap().value;
    let b = c_mu(&ch32, 1.5f32, &cfg).unwrap().value;
    assert!((a - b as f64).abs() < 1e-4, "{a} vs {b}");
}
