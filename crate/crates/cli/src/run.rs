//! Dispatch of a validated config to the owning module and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use irrmc::diagnostics::{fit_gaussian_envelope, lower_bound_positive, terminal_histogram};
use irrmc::irregular_error::{fit_rate, inequality_check, qerror_curve};
use irrmc::maximal::{
    mollified_gradient, percentile_lambdas, pointwise_check, weak_type_check, GridField, GridMeasure,
    MaximalOperator, PointwiseMode,
};
use irrmc::mlmc::{complexity_sweep, run_mlmc, MlmcOptions};
use irrmc::payoff::{predicted_strong_exponent, rate_prediction, Payoff};
use irrmc::quadrature::normal_expectation;
use irrmc::sde::SdeModel;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_family, resolve_rule, ExperimentConfig, ExperimentKind, GridSpec};
use crate::error::{ctx, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    /// File names relative to the output directory, summary.json last.
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
    /// Euler-Maruyama steps executed, where the experiment simulates paths.
    pub steps: u64,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

fn check(name: &str, status: Status, detail: impl Into<String>, value: Option<f64>) -> Check {
    Check {
        name: name.to_string(),
        status,
        detail: detail.into(),
        value,
    }
}

fn pass_fail(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("artifact serialises");
        self.write_text(name, &(text + "\n"))
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: name.to_string(),
            source: e.into_error(),
        })?;
        self.write_text(name, &String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Runs the experiment and writes its artifacts plus `summary.json` into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let mut art = Artifacts::new(out)?;
    let kind = config.experiment.name();
    let (checks, steps) = match config.experiment {
        ExperimentKind::Rate => rate(config, &mut art),
        ExperimentKind::Inequality => inequality(config, &mut art),
        ExperimentKind::Maximal => maximal(config, &mut art),
        ExperimentKind::Mlmc => mlmc(config, &mut art),
        ExperimentKind::Complexity => complexity(config, &mut art),
        ExperimentKind::Density => density(config, &mut art),
    }
    .map_err(|e| match e {
        CliError::Core(source) => CliError::Experiment {
            context: format!("{kind} experiment"),
            source,
        },
        other => other,
    })?;
    art.names.push("summary.json".into());
    let summary = RunSummary {
        config: config.clone(),
        checks,
        artifacts: art.names.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        steps,
    };
    art.names.pop();
    art.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn rate(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let model = config.resolve_model()?;
    let payoff = config.resolve_payoff()?;
    let p = &config.params;
    let q = p.q.unwrap_or(2.0);
    let n_list = p.n_list.clone().unwrap_or_else(|| vec![8, 16, 32, 64, 128]);
    let samples = p.samples.unwrap_or(10_000);
    let n_ref = p.n_ref.unwrap_or(1024);
    let seed = config.seed();
    let curve = ctx(
        qerror_curve(&model, &payoff, q, &n_list, samples, n_ref, seed),
        "error curve",
    )?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|pt| {
            vec![
                curve.model.clone(),
                curve.payoff.clone(),
                num(q),
                pt.n.to_string(),
                num(pt.value),
                num(pt.stderr),
                samples.to_string(),
                seed.to_string(),
            ]
        })
        .collect();
    art.write_csv(
        "error_curve.csv",
        &["model", "payoff", "q", "n", "value", "stderr", "N", "seed"],
        &rows,
    )?;
    let delta = p.delta.unwrap_or(0.5);
    let predicted = predicted_strong_exponent(&payoff.class().rate_class(), q, delta)?;
    let tol = p.slope_tolerance.unwrap_or(0.1);
    let mut checks = Vec::new();
    match fit_rate(&curve) {
        Ok(fit) => {
            art.write_json("rate_fit.json", &fit)?;
            checks.push(check(
                "strong_rate",
                pass_fail(fit.slope <= -predicted + tol),
                format!(
                    "fitted slope {:.4} +- {:.4}, predicted bound n^-{predicted:.4} (tolerance {tol})",
                    fit.slope, fit.slope_stderr
                ),
                Some(fit.slope),
            ));
        }
        Err(irrmc::Error::DegenerateCurve(msg)) => checks.push(check(
            "strong_rate",
            Status::Informational,
            format!("degenerate curve: {msg}"),
            None,
        )),
        Err(e) => return Err(e.into()),
    }
    let steps = samples as u64 * (n_ref + n_list.iter().sum::<usize>()) as u64;
    Ok((checks, steps))
}

fn inequality(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let payoff = config.resolve_payoff()?;
    let p = &config.params;
    let dim = payoff.dim().unwrap_or(1);
    let family = resolve_family(p.family.as_deref().unwrap_or("gaussian_shift"), dim)?;
    let rule = resolve_rule(p.rule.as_deref().unwrap_or("bv"), p)?;
    let q = p.q.unwrap_or(1.0);
    let grid = p.scale_grid.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    let samples = p.samples.unwrap_or(100_000);
    let rep = ctx(
        inequality_check(family, &payoff, q, rule, &grid, samples, config.seed()),
        "inequality check",
    )?;
    let rows: Vec<Vec<String>> = (0..rep.scale_grid.len())
        .map(|i| {
            vec![
                num(rep.scale_grid[i]),
                num(rep.lhs[i]),
                num(rep.lhs_stderr[i]),
                num(rep.rhs_base[i]),
                num(rep.ratios[i]),
            ]
        })
        .collect();
    art.write_csv("inequality.csv", &["t", "lhs", "lhs_stderr", "rhs_base", "ratio"], &rows)?;
    art.write_json("inequality.json", &rep)?;
    let spread = rep.max_ratio / rep.min_ratio;
    Ok((
        vec![check(
            "ratio_spread",
            Status::Informational,
            format!(
                "lhs / E[|dX|^{}]^{:.4} ranges over [{:.4}, {:.4}]",
                rep.moment_order, rep.exponent, rep.min_ratio, rep.max_ratio
            ),
            Some(spread),
        )],
        0,
    ))
}

fn default_grid(payoff: &Payoff) -> GridSpec {
    match payoff.dim() {
        Some(2) => GridSpec {
            dim: 2,
            lo: -1.0,
            hi: 1.0,
            spacing: 1.0 / 32.0,
        },
        _ => GridSpec {
            dim: 1,
            lo: -2.0,
            hi: 2.0,
            spacing: 1.0 / 64.0,
        },
    }
}

fn maximal(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let payoff = config.resolve_payoff()?;
    let p = &config.params;
    let g = p.grid.unwrap_or_else(|| default_grid(&payoff));
    if payoff.dim().is_some_and(|d| d != g.dim) {
        return Err(CliError::Config(format!(
            "payoff {} does not live in dimension {}",
            payoff.name(),
            g.dim
        )));
    }
    let f = GridField::from_fn(g.dim, g.lo, g.hi, g.spacing, |x| payoff.eval(x))?;
    let sigma = p.sigma.unwrap_or(2.0 * g.spacing);
    let grad = mollified_gradient(&f, sigma)?;
    let nu = GridMeasure::from_density(grad.clone())?;
    art.write_text("control_density.csv", &grad.to_csv())?;
    let field = MaximalOperator::new(&nu).on_grid(&grad, f64::INFINITY)?;
    art.write_text("maximal_field.csv", &field.to_csv())?;
    let probs = [0.10, 0.25, 0.50, 0.75, 0.90, 0.99];
    let lambdas = percentile_lambdas(&nu, &probs, 4000)?;
    let rep = weak_type_check(&nu, &lambdas)?;
    let rows: Vec<Vec<String>> = (0..rep.lambda_grid.len())
        .map(|i| {
            vec![
                num(rep.lambda_grid[i]),
                num(rep.superlevel_measures[i]),
                num(rep.bound_values[i]),
                (rep.superlevel_measures[i] > rep.bound_values[i]).to_string(),
            ]
        })
        .collect();
    art.write_csv("weak_type.csv", &["lambda", "superlevel_measure", "bound", "violated"], &rows)?;
    let mut checks = vec![check(
        "weak_type",
        pass_fail(rep.violations == 0),
        format!(
            "{} violations over {} lambdas{}",
            rep.violations,
            rep.lambda_grid.len(),
            if rep.truncated { " (padding truncated)" } else { "" }
        ),
        Some(rep.violations as f64),
    )];
    let pairs = p.pairs.unwrap_or(2000);
    match pointwise_check(&f, &nu, pairs, PointwiseMode::Bv, None, config.seed()) {
        Ok(pw) => {
            art.write_json("pointwise.json", &pw)?;
            checks.push(check(
                "pointwise_k0",
                Status::Informational,
                format!(
                    "fitted K0 {:.4} over {} pairs ({} skipped, {} zero-denominator)",
                    pw.fitted_k0, pw.pairs_used, pw.pairs_skipped, pw.violations
                ),
                Some(pw.fitted_k0),
            ));
        }
        Err(irrmc::Error::InsufficientData(msg)) => {
            checks.push(check("pointwise_k0", Status::Informational, msg, None))
        }
        Err(e) => return Err(e.into()),
    }
    Ok((checks, 0))
}

fn mlmc_options(config: &ExperimentConfig) -> MlmcOptions {
    MlmcOptions {
        pilot_samples: config.params.pilot_samples.unwrap_or(1000),
        ..MlmcOptions::default()
    }
}

/// Gauss-Hermite truth for a one-dimensional constant-coefficient model.
fn quadrature_truth(model: &SdeModel, payoff: &Payoff) -> Option<f64> {
    if model.name() != "constant" || model.dim() != 1 {
        return None;
    }
    let t = model.horizon();
    let sd = model.meta().a_upper.sqrt() * t.sqrt();
    let mut drift = [0.0];
    model.coefficients().drift(0.0, model.x0(), &mut drift);
    Some(normal_expectation(
        |x| payoff.eval(&[x]),
        model.x0()[0] + drift[0] * t,
        sd,
        160,
    ))
}

fn level_rows(levels: &[irrmc::mlmc::LevelStats]) -> Vec<Vec<String>> {
    levels
        .iter()
        .map(|l| {
            vec![
                l.level.to_string(),
                num(l.h),
                l.samples.to_string(),
                num(l.mean),
                num(l.variance),
                l.cost.to_string(),
            ]
        })
        .collect()
}

fn mlmc(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let model = config.resolve_model()?;
    let payoff = config.resolve_payoff()?;
    let p = &config.params;
    let eps = p.epsilons.as_ref().map(|e| e[0]).unwrap_or(0.01);
    let m = p.refinement.unwrap_or(2);
    let res = match run_mlmc(&model, &payoff, eps, m, &mlmc_options(config), config.seed()) {
        Ok(r) => r,
        Err(irrmc::Error::NonConvergence(msg)) => {
            return Ok((vec![check("convergence", Status::Fail, msg, None)], 0));
        }
        Err(e) => return Err(e.into()),
    };
    art.write_csv(
        "mlmc_levels.csv",
        &["level", "h", "samples", "mean", "variance", "cost"],
        &level_rows(&res.levels),
    )?;
    art.write_json("mlmc.json", &res)?;
    let mut checks = Vec::new();
    match quadrature_truth(&model, &payoff) {
        Some(truth) => {
            let err = (res.estimate - truth).abs();
            checks.push(check(
                "quadrature_truth",
                pass_fail(err <= 3.0 * eps),
                format!("estimate {:.6} vs Gauss-Hermite {truth:.6}, |error| {err:.2e} (3 eps = {:.2e})", res.estimate, 3.0 * eps),
                Some(err),
            ));
        }
        None => checks.push(check(
            "estimate",
            Status::Informational,
            format!("estimate {:.6}, finest level {}", res.estimate, res.levels.len() - 1),
            Some(res.estimate),
        )),
    }
    checks.push(check(
        "rate_condition",
        Status::Informational,
        match (res.alpha_hat, res.beta_hat) {
            (Some(a), Some(b)) => format!(
                "alpha_hat {a:.3}, beta_hat {b:.3}{}",
                if res.rate_condition_violated { ", alpha < beta/2" } else { "" }
            ),
            _ => "too few levels to fit alpha, beta".to_string(),
        },
        None,
    ));
    Ok((checks, res.executed_steps))
}

fn complexity(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let model = config.resolve_model()?;
    let payoff = config.resolve_payoff()?;
    let p = &config.params;
    let eps = p.epsilons.clone().unwrap_or_else(|| vec![0.02, 0.01, 0.005]);
    let m = p.refinement.unwrap_or(2);
    let rep = ctx(
        complexity_sweep(&model, &payoff, &eps, m, &mlmc_options(config), config.seed()),
        "complexity sweep",
    )?;
    let rows: Vec<Vec<String>> = rep
        .points
        .iter()
        .map(|pt| {
            vec![
                num(pt.epsilon),
                pt.total_cost.to_string(),
                pt.finest_level.map(|l| l.to_string()).unwrap_or_default(),
                pt.estimate.map(num).unwrap_or_default(),
                pt.converged.to_string(),
            ]
        })
        .collect();
    art.write_csv(
        "complexity.csv",
        &["epsilon", "total_cost", "finest_level", "estimate", "converged"],
        &rows,
    )?;
    art.write_json("complexity.json", &rep)?;
    let delta = p.delta.unwrap_or(0.5);
    let predicted = rate_prediction(&payoff.class().rate_class(), 2.0, delta)
        .map(|r| r.mlmc_cost_exponent_weak1)
        .ok();
    let detail = match (rep.cost_exponent, predicted) {
        (Some(e), Some(pr)) => format!("fitted cost exponent {e:.3}, predicted {pr:.3}"),
        (Some(e), None) => format!("fitted cost exponent {e:.3}"),
        (None, _) => "too few converged points to fit".into(),
    };
    let steps = rep.runs.iter().map(|r| r.executed_steps).sum();
    Ok((
        vec![check(
            "cost_exponent",
            Status::Informational,
            if rep.partial { detail + " (partial sweep)" } else { detail },
            rep.cost_exponent,
        )],
        steps,
    ))
}

#[derive(Serialize)]
struct EnvelopeRow {
    n: usize,
    #[serde(flatten)]
    envelope: irrmc::diagnostics::GaussianEnvelope,
    lower_bound_positive: bool,
}

fn density(config: &ExperimentConfig, art: &mut Artifacts) -> Result<(Vec<Check>, u64)> {
    let model = config.resolve_model()?;
    let p = &config.params;
    let n_list = p.n_list.clone().unwrap_or_else(|| vec![16, 64, 256]);
    let samples = p.samples.unwrap_or(100_000);
    let bins = p.bins.unwrap_or(100);
    let mut envelopes = Vec::new();
    for &n in &n_list {
        let hist = ctx(terminal_histogram(&model, n, samples, bins, config.seed()), format!("histogram n={n}"))?;
        let rows: Vec<Vec<String>> = (0..hist.bins())
            .map(|k| vec![num(hist.center(k)), num(hist.density[k]), hist.counts[k].to_string()])
            .collect();
        art.write_csv(&format!("histogram_n{n}.csv"), &["bin_center", "density", "count"], &rows)?;
        let envelope = ctx(fit_gaussian_envelope(&hist, model.x0()[0], model.horizon()), format!("envelope n={n}"))?;
        envelopes.push(EnvelopeRow {
            n,
            envelope,
            lower_bound_positive: lower_bound_positive(&hist),
        });
    }
    let rows: Vec<Vec<String>> = envelopes
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                num(e.envelope.big_c),
                num(e.envelope.small_c),
                num(e.envelope.residual),
                e.envelope.bins_used.to_string(),
                e.lower_bound_positive.to_string(),
            ]
        })
        .collect();
    art.write_csv(
        "envelope.csv",
        &["n", "C_plus", "c_plus", "residual", "bins_used", "lower_bound_positive"],
        &rows,
    )?;
    art.write_json("envelope.json", &envelopes)?;
    let hi = envelopes.iter().map(|e| e.envelope.big_c).fold(0.0, f64::max);
    let lo = envelopes.iter().map(|e| e.envelope.big_c).fold(f64::INFINITY, f64::min);
    let mut checks = vec![if envelopes.len() >= 2 {
        check(
            "envelope_uniformity",
            pass_fail(hi / lo < 2.0),
            format!("C+ ranges over [{lo:.4}, {hi:.4}] across n"),
            Some(hi / lo),
        )
    } else {
        check("envelope_uniformity", Status::Informational, format!("single n, C+ {hi:.4}"), Some(hi))
    }];
    let positive = envelopes.iter().all(|e| e.lower_bound_positive);
    checks.push(check(
        "lower_bound",
        pass_fail(positive),
        "every bin within two standard deviations of the mean is occupied",
        None,
    ));
    let steps = samples as u64 * n_list.iter().sum::<usize>() as u64;
    Ok((checks, steps))
}
