use dbx_core::capacity::c_mu;
use dbx_core::converse::{
    exact_probabilities, monte_carlo_code, per_code_converse, random_code, run_suite, BlockCode,
    DecoderStyle, EncoderStyle, Suite, SuiteConfig,
};
use dbx_core::exponent::{omega_max, TiltParams};
use dbx_core::{DegradedPair, OmegaTable, OptConfig, RatePair, StochasticMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cascade(p1: f64, p2: f64) -> DegradedPair {
    DegradedPair::new(
        StochasticMatrix::bsc(p1).unwrap(),
        StochasticMatrix::bsc(p2).unwrap(),
    )
    .unwrap()
}

#[test]
fn exact_pc_agrees_with_simulation() {
    // length-2 repetition code for K, a single L message
    let ch = cascade(0.2, 0.1);
    let code = BlockCode::deterministic(&ch, 2, 2, 1, &[0b00, 0b11]).unwrap();
    let exact = exact_probabilities(&code, &ch).unwrap().pc;
    let samples = 1_000_000u64;
    let est = monte_carlo_code(&code, &ch, samples, 17).unwrap();
    let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
    assert!((est.pc_hat - exact).abs() <= 3.0 * sigma, "{} vs {exact} (σ={sigma})", est.pc_hat);
}

#[test]
fn exact_pc_of_uncoded_bits() {
    // one bit per receiver is impossible over one use; K = 2 alone gives 1 - p1
    let ch = cascade(0.15, 0.2);
    let code = BlockCode::deterministic(&ch, 1, 2, 1, &[0, 1]).unwrap();
    let pc = exact_probabilities(&code, &ch).unwrap().pc;
    assert!((pc - 0.85).abs() < 1e-15);
}

#[test]
fn extra_auxiliary_letters_do_not_help() {
    let ch = DegradedPair::new(
        StochasticMatrix::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3]]).unwrap(),
        StochasticMatrix::from_rows(vec![vec![0.8, 0.2], vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap(),
    )
    .unwrap();
    let base = OptConfig::default();
    let wide = OptConfig::default().with_u_size(ch.x_size() + 2);
    for mu in [0.5, 1.0, 2.0] {
        let a = c_mu(&ch, mu, &base).unwrap().value;
        let b = c_mu(&ch, mu, &wide).unwrap().value;
        assert!(b - a <= 1e-3, "C^({mu}): {a} -> {b}");
        let p = TiltParams::new(mu, 0.5).unwrap();
        let a = omega_max(&ch, p, &base).unwrap().value;
        let b = omega_max(&ch, p, &wide).unwrap().value;
        assert!(b - a <= 1e-3, "Ω({mu}, 0.5): {a} -> {b}");
    }
}

#[test]
fn random_codes_respect_the_exponent() {
    let ch = cascade(0.1, 0.1);
    let grid = dbx_core::capacity::log_spaced_grid(0.1, 10.0, 9);
    let lambdas = dbx_core::capacity::log_spaced_grid(0.05, 5.0, 9);
    let table = OmegaTable::compute(&ch, &grid, &lambdas, &OptConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // K = L = 2 at n = 2 gives rates (ln 2 / 2, ln 2 / 2), outside the region
    let rates = RatePair::new(2f64.ln() / 2.0, 2f64.ln() / 2.0).unwrap();
    let report = table.f_star_converged(rates);
    assert!(report.f_value > 0.0);
    for _ in 0..200 {
        let code = random_code(&ch, 2, 2, 2, EncoderStyle::Stochastic, DecoderStyle::Map, &mut rng)
            .unwrap();
        let check = per_code_converse(&code, &ch, &report).unwrap();
        assert!(check.holds, "decay {} below floor {}", check.decay, check.floor);
    }
}

#[test]
fn suites_hold_on_ternary_alphabets() {
    for suite in Suite::ALL {
        let cfg = SuiteConfig {
            n: 1,
            trials: 20,
            seed: 9,
            alphabet: 3,
        };
        let r = run_suite(suite, &cfg).unwrap();
        assert!(r.all_hold(), "{suite}: worst margin {}", r.worst_margin);
    }
}
