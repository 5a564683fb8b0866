use std::path::Path;

use dbx_core::capacity::{hyperplane_profile, in_region, log_spaced_grid, rectangle_region};
use dbx_core::converse::{monte_carlo_pc, run_suite, Suite, SuiteConfig};
use dbx_core::{AuxiliaryJoint, DegradedPair, OmegaTable, OptConfig, RatePair};
use serde_json::{json, Value};

use crate::channel::ChannelSpec;
use crate::error::CliError;
use crate::report::{csv, num, write_csv, RunReport};
use crate::{LambdaGrid, MuGrid, Rates};

pub struct Output {
    pub report: RunReport,
    /// Set when the run completed but something it checked did not hold.
    pub failure: Option<String>,
}

fn report(command: &'static str, config: Value, seed: Option<u64>, results: Value, flags: Value) -> Output {
    Output {
        report: RunReport {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            seed,
            results,
            flags,
            wall_time_s: 0.0,
        },
        failure: None,
    }
}

fn grid(name: &str, min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(min > 0.0 && min.is_finite() && max >= min && max.is_finite()) || points == 0 {
        return Err(CliError::Usage(format!(
            "{name} grid needs 0 < min <= max and at least one point"
        )));
    }
    Ok(log_spaced_grid(min, max, points))
}

impl MuGrid {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        match self.mu {
            Some(m) if m > 0.0 && m.is_finite() => Ok(vec![m]),
            Some(m) => Err(CliError::Usage(format!("--mu must be positive, got {m}"))),
            None => grid("mu", self.mu_min, self.mu_max, self.mu_points),
        }
    }
}

impl LambdaGrid {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        grid("lambda", self.lambda_min, self.lambda_max, self.lambda_points)
    }
}

fn load(path: &Path) -> Result<(ChannelSpec, DegradedPair), CliError> {
    let spec = ChannelSpec::load(path)?;
    let ch = spec.to_channel()?;
    Ok((spec, ch))
}

fn rate_pair(r: Rates) -> Result<RatePair, CliError> {
    RatePair::new(r.r1, r.r2).map_err(|e| CliError::Usage(e.to_string()))
}

fn opt(seed: u64) -> OptConfig {
    OptConfig::default().with_seed(seed)
}

pub fn capacity(path: &Path, mu: &MuGrid, seed: u64, csv_path: Option<&Path>) -> Result<Output, CliError> {
    let (spec, ch) = load(path)?;
    let mus = mu.values()?;
    let profile = hyperplane_profile(&ch, &mus, &opt(seed))?;
    let points: Vec<Value> = profile
        .mu_grid
        .iter()
        .zip(&profile.c_values)
        .zip(profile.argmaxes.iter().zip(&profile.converged))
        .map(|((&m, &c), (q, &conv))| {
            let corner = rectangle_region(q);
            json!({
                "mu": m,
                "c_mu": c,
                "converged": conv,
                "u_size": q.u_size(),
                "argmax_q_ux": q.joint_ux(),
                "corner": {"r1": corner.r1, "r2": corner.r2},
            })
        })
        .collect();
    if let Some(p) = csv_path {
        let rows: Vec<Vec<String>> = mus
            .iter()
            .zip(&profile.c_values)
            .map(|(&m, &c)| vec![num(m), num(c)])
            .collect();
        write_csv(p, &csv(&["mu", "c_mu"], &rows))?;
    }
    let all_converged = profile.converged.iter().all(|&c| c);
    Ok(report(
        "capacity",
        json!({"channel": spec, "mu_grid": mus}),
        Some(seed),
        json!({"points": points, "r1_extent": profile.r1_extent()}),
        json!({"all_converged": all_converged, "shape_violation": profile.shape_violation(1e-9)}),
    ))
}

pub fn exponent(
    path: &Path,
    rates: Rates,
    mu: &MuGrid,
    lambda: &LambdaGrid,
    seed: u64,
    grid_csv: Option<&Path>,
) -> Result<Output, CliError> {
    let (spec, ch) = load(path)?;
    let rates = rate_pair(rates)?;
    let (mus, lambdas) = (mu.values()?, lambda.values()?);
    let table = OmegaTable::compute(&ch, &mus, &lambdas, &opt(seed))?;
    let best = table.f_star(rates);
    let verdict = in_region(&table.profile, rates, 1e-9);
    if let Some(p) = grid_csv {
        let rows: Vec<Vec<String>> = table
            .f_grid(rates)
            .iter()
            .zip(table.values.iter().zip(&table.converged))
            .map(|(&(m, l, f), (&o, &c))| vec![num(m), num(l), num(o), num(f), c.to_string()])
            .collect();
        write_csv(p, &csv(&["mu", "lambda", "omega", "f", "converged"], &rows))?;
    }
    let cell = table
        .mu_grid
        .iter()
        .position(|&m| m == best.best_mu)
        .unwrap_or(0)
        * lambdas.len()
        + lambdas.iter().position(|&l| l == best.best_lambda).unwrap_or(0);
    Ok(report(
        "exponent",
        json!({"channel": spec, "rates": rates, "mu_grid": mus, "lambda_grid": lambdas}),
        Some(seed),
        json!({
            "f_value": best.f_value,
            "best_mu": best.best_mu,
            "best_lambda": best.best_lambda,
            "omega_at_best": best.omega_at_best,
            "argmax_q_ux": table.argmaxes[cell],
            "region": if verdict.inside { "inside" } else { "outside" },
            "region_margin": verdict.margin,
        }),
        json!({"boundary_flag": best.boundary_flag, "all_converged": best.all_converged}),
    ))
}

pub fn region(path: &Path, rates: Rates, slack: f64, mu: &MuGrid, seed: u64) -> Result<Output, CliError> {
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(CliError::Usage(format!("--slack must be non-negative, got {slack}")));
    }
    let (spec, ch) = load(path)?;
    let rates = rate_pair(rates)?;
    let mus = mu.values()?;
    let profile = hyperplane_profile(&ch, &mus, &opt(seed))?;
    let v = in_region(&profile, rates, slack);
    Ok(report(
        "region",
        json!({"channel": spec, "rates": rates, "slack": slack, "mu_grid": mus}),
        Some(seed),
        json!({
            "inside": v.inside,
            "margin": v.margin,
            "worst_mu": v.worst_mu,
            "r2_boundary_at_r1": profile.r2_boundary(rates.r1),
        }),
        json!({"all_converged": profile.converged.iter().all(|&c| c)}),
    ))
}

pub fn verify(suite: Suite, n: usize, trials: usize, seed: u64, alphabet: usize) -> Result<Output, CliError> {
    if n == 0 || trials == 0 || alphabet < 2 {
        return Err(CliError::Usage(
            "need n >= 1, trials >= 1 and alphabet >= 2".into(),
        ));
    }
    let cfg = SuiteConfig {
        n,
        trials,
        seed,
        alphabet,
    };
    let r = run_suite(suite, &cfg)?;
    eprintln!(
        "{suite}: {}/{} hold, worst margin {:e}",
        r.passed, trials, r.worst_margin
    );
    let failure = (!r.all_hold()).then(|| format!("{suite}: {} of {trials} trials failed", r.failed));
    let mut out = report(
        "verify",
        json!({"suite": suite, "n": n, "trials": trials, "alphabet": alphabet}),
        Some(seed),
        json!({
            "estimated_cost": r.estimated_cost,
            "passed": r.passed,
            "failed": r.failed,
            "worst_margin": r.worst_margin,
            "trials": r.results,
        }),
        json!({"all_hold": r.all_hold()}),
    );
    out.failure = failure;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    path: &Path,
    rates: Rates,
    ns: &[usize],
    samples: u64,
    seed: u64,
    mu: &MuGrid,
    lambda: &LambdaGrid,
    csv_path: Option<&Path>,
) -> Result<Output, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if ns.iter().any(|&n| n == 0) {
        return Err(CliError::Usage("blocklengths must be positive".into()));
    }
    let (spec, ch) = load(path)?;
    let rates = rate_pair(rates)?;
    let (mus, lambdas) = (mu.values()?, lambda.values()?);
    let table = OmegaTable::compute(&ch, &mus, &lambdas, &opt(seed))?;
    let best = table.f_star(rates);
    // code ensemble: the hyperplane maximizer whose rate rectangle comes
    // closest to containing the target rates
    let slack = |q: &AuxiliaryJoint| {
        let c = rectangle_region(q);
        (c.r1 - rates.r1).min(c.r2 - rates.r2)
    };
    let aux = table
        .profile
        .argmaxes
        .iter()
        .fold(None::<(&AuxiliaryJoint, f64)>, |acc, q| {
            let s = slack(q);
            match acc {
                Some((_, b)) if b >= s => acc,
                _ => Some((q, s)),
            }
        })
        .map(|(q, _)| q)
        .expect("grid is non-empty");

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &n in ns {
        let est = monte_carlo_pc(aux, rates, n, samples, seed)?;
        let floor = best.f_value - 3f64.ln() / n as f64;
        let (decay_lo, decay_hi) = est.decay_range();
        rows.push(vec![
            n.to_string(),
            num(est.pc_hat),
            num(est.ci_low),
            num(est.ci_high),
            num(est.decay()),
            num(best.f_value),
            num(floor),
        ]);
        points.push(json!({
            "estimate": est,
            "decay": est.decay(),
            "decay_ci": [decay_lo, decay_hi],
            "floor": floor,
            "consistent": decay_hi >= floor,
        }));
    }
    if let Some(p) = csv_path {
        write_csv(
            p,
            &csv(&["n", "pc_hat", "ci_low", "ci_high", "decay", "f_value", "floor"], &rows),
        )?;
    }
    Ok(report(
        "simulate",
        json!({
            "channel": spec, "rates": rates, "n": ns, "samples": samples,
            "mu_grid": mus, "lambda_grid": lambdas,
        }),
        Some(seed),
        json!({
            "f_value": best.f_value,
            "best_mu": best.best_mu,
            "best_lambda": best.best_lambda,
            "code_q_ux": aux.joint_ux(),
            "points": points,
        }),
        json!({"boundary_flag": best.boundary_flag, "all_converged": best.all_converged}),
    ))
}
