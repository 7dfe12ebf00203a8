//! Acceptance criteria 1-10. `Scale::Full` uses the stated sample sizes and
//! tolerances; `Scale::Reduced` shrinks sample sizes only.

use std::time::Instant;

use irrmc::diagnostics::{fit_gaussian_envelope, terminal_histogram};
use irrmc::irregular_error::{fit_rate, inequality_check, qerror_curve, qerror_curves, ExponentRule, PairFamily};
use irrmc::maximal::{
    gsp_field, mollified_gradient, percentile_lambdas, pointwise_check, pointwise_ratio, weak_type_check,
    GridField, GridMeasure, MaximalOperator, PairRatio, PointwiseMode,
};
use irrmc::mlmc::{complexity_sweep, level_sample, run_mlmc, single_level_mc, MlmcOptions};
use irrmc::payoff::{orlicz_bound_minimize, Payoff, YoungFunction};
use irrmc::quadrature::normal_expectation;
use irrmc::randomkit::{derive_seed, generate_increments, SeedSpec};
use irrmc::sde::{euler_maruyama, SdeModel};
use irrmc::stats::log_log_fit;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Reduced,
}

impl Scale {
    fn pick<T>(self, full: T, reduced: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Reduced => reduced,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubResult {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub parts: Vec<SubResult>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| format!("[{} {}: {}]", if p.passed { "ok" } else { "FAIL" }, p.label, p.detail))
            .collect();
        format!(
            "{} {:>2} {} ({:.1}s, budget {:.0}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.budget_seconds,
            parts.join(" ")
        )
    }
}

fn part(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> SubResult {
    SubResult {
        label: label.into(),
        passed,
        detail: detail.into(),
    }
}

fn error_part(label: &str, e: impl std::fmt::Display) -> SubResult {
    part(label, false, format!("error: {e}"))
}

const SEED: u64 = 0x1a2b_3c4d;

type Criterion = fn(Scale) -> Vec<SubResult>;

pub const CRITERIA: &[(usize, &str, f64, Criterion)] = &[
    (1, "exact coupling and exactness", 10.0, exactness),
    (2, "strong rates on the sin/cos model", 600.0, strong_rates),
    (3, "indicator power trick", 60.0, power_trick),
    (4, "weak-type (1,1) bound", 120.0, weak_type),
    (5, "pointwise estimates", 300.0, pointwise),
    (6, "irregular-payoff inequality", 60.0, irregular_inequality),
    (7, "Orlicz toolkit", 60.0, orlicz),
    (8, "MLMC correctness", 120.0, mlmc_correctness),
    (9, "MLMC complexity", 1200.0, mlmc_complexity),
    (10, "density diagnostics", 120.0, density),
];

pub fn run_one(id: usize, scale: Scale) -> Option<Outcome> {
    let &(id, title, budget, f) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let mut parts = f(scale);
    let seconds = start.elapsed().as_secs_f64();
    if scale == Scale::Full {
        parts.push(part("runtime", seconds <= budget, format!("{seconds:.1}s")));
    }
    Some(Outcome {
        id,
        title,
        passed: parts.iter().all(|p| p.passed),
        parts,
        seconds,
        budget_seconds: budget,
    })
}

pub fn run_all(scale: Scale, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|c| {
            let o = run_one(c.0, scale).expect("listed criterion");
            report(&o);
            o
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn exactness(_scale: Scale) -> Vec<SubResult> {
    let mut out = Vec::new();
    let (mu, sigma, horizon) = (0.3, 0.7, 1.5);
    let builtin = [
        SdeModel::constant(vec![mu], sigma, vec![0.5], horizon).unwrap(),
        SdeModel::constant(vec![mu, -0.2], sigma, vec![0.5, -1.0], horizon).unwrap(),
    ];
    let stepped = SdeModel::from_fns(
        "constant-stepped",
        vec![0.5],
        horizon,
        move |_t, _x: &[f64], b: &mut [f64]| b[0] = mu,
        move |_t, _x: &[f64], s: &mut [f64]| s[0] = sigma,
        *builtin[0].meta(),
    )
    .unwrap();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for n in 1..=1024usize {
        for model in builtin.iter().chain([&stepped]) {
            let d = model.dim();
            let grid = generate_increments(&SeedSpec::path(SEED, n as u64), d, horizon, n).unwrap();
            let x = euler_maruyama(model, n, &grid).unwrap();
            for k in 0..d {
                let b: f64 = (0..n).map(|i| grid.increment(i)[k]).sum();
                let drift = if k == 0 { mu } else { -0.2 };
                let closed = model.x0()[k] + drift * horizon + sigma * b;
                let err = (x.value[k] - closed).abs() / closed.abs().max(1.0);
                worst = worst.max(err);
                if !rel_close(x.value[k], closed, 1e-12) {
                    bad += 1;
                }
            }
        }
    }
    out.push(part(
        "closed form n=1..1024",
        bad == 0,
        format!("{bad} mismatches, worst relative error {worst:.2e}"),
    ));
    let mut nonzero = Vec::new();
    let ball = Payoff::ball_indicator(vec![0.5, -0.5], 1.0).unwrap();
    let jobs: [(&SdeModel, Payoff); 3] = [
        (&builtin[0], Payoff::clamp_ramp()),
        (&builtin[0], Payoff::interval_indicator(0.0, 1.0).unwrap()),
        (&builtin[1], ball),
    ];
    for (model, payoff) in &jobs {
        for level in 1..=8 {
            match level_sample(model, payoff, level, 2, 2000, SEED) {
                Ok(s) if s.variance == 0.0 => {}
                Ok(s) => nonzero.push(format!("{} l={level}: {:e}", payoff.name(), s.variance)),
                Err(e) => nonzero.push(format!("{} l={level}: {e}", payoff.name())),
            }
        }
    }
    out.push(part(
        "level variances l=1..8",
        nonzero.is_empty(),
        if nonzero.is_empty() {
            "all exactly 0".to_string()
        } else {
            nonzero.join("; ")
        },
    ));
    out
}

/// Label, acceptance test on the fitted slope, and its description.
type SlopeTarget = (&'static str, fn(f64) -> bool, &'static str);

fn strong_rates(scale: Scale) -> Vec<SubResult> {
    let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
    let samples = scale.pick(100_000, 10_000);
    let n_list: Vec<usize> = (3..=9).map(|k| 1 << k).collect();
    let lip = Payoff::clamp_ramp();
    let ind = Payoff::interval_indicator(0.0, 1.0).unwrap();
    let tent = Payoff::tent_power(0.5, 2.0).unwrap();
    let curves = match qerror_curves(
        &model,
        &[(&lip, 2.0), (&ind, 2.0), (&tent, 2.0)],
        &n_list,
        samples,
        4096,
        SEED,
    ) {
        Ok(c) => c,
        Err(e) => return vec![error_part("curves", e)],
    };
    let checks: [SlopeTarget; 3] = [
        ("(a) Lipschitz q=2", |s| s <= -0.8, "<= -0.8"),
        ("(b) indicator q=2", |s| (-0.65..=-0.35).contains(&s), "in [-0.65, -0.35]"),
        ("(c) tent s=1/2 p=2 q=2", |s| s <= -0.15, "<= -0.15"),
    ];
    curves
        .iter()
        .zip(checks)
        .map(|(curve, (label, ok, target))| match fit_rate(curve) {
            Ok(fit) => {
                let (lo, hi) = fit.slope_interval(1.96);
                part(
                    label,
                    ok(fit.slope),
                    format!("slope {:.3} (95% CI [{lo:.3}, {hi:.3}]), target {target}", fit.slope),
                )
            }
            Err(e) => error_part(label, e),
        })
        .collect()
}

fn power_trick(scale: Scale) -> Vec<SubResult> {
    let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
    let ind = Payoff::interval_indicator(0.0, 1.0).unwrap();
    let samples = scale.pick(20_000, 2_000);
    let n_list = [8, 16, 32, 64];
    let curves: Vec<_> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&q| qerror_curve(&model, &ind, q, &n_list, samples, 256, SEED))
        .collect();
    let curves = match curves.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(c) => c,
        Err(e) => return vec![error_part("curves", e)],
    };
    let bits = |c: &irrmc::irregular_error::ErrorCurve| -> Vec<u64> {
        c.points.iter().map(|p| p.value.to_bits()).collect()
    };
    let same = bits(&curves[0]) == bits(&curves[1]) && bits(&curves[0]) == bits(&curves[2]);
    vec![part(
        "q in {1,2,3}",
        same,
        format!(
            "values at n=8: {:e} / {:e} / {:e}",
            curves[0].points[0].value, curves[1].points[0].value, curves[2].points[0].value
        ),
    )]
}

const WEAK_PROBS: [f64; 10] = [0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.99];

fn random_density(dim: usize, k: u64) -> GridMeasure {
    let mut rng = SeedSpec::auxiliary(SEED, 1000 + k).rng();
    let (lo, hi, h): (f64, f64, f64) = if dim == 1 { (-2.0, 2.0, 1.0 / 64.0) } else { (-1.0, 1.0, 1.0 / 16.0) };
    let keep = rng.random_range(0.05..0.6);
    let cells = ((hi - lo) / h).round() as usize;
    let values: Vec<f64> = (0..cells.pow(dim as u32))
        .map(|_| {
            if rng.random::<f64>() < keep {
                rng.random_range(0.0..3.0)
            } else {
                0.0
            }
        })
        .collect();
    let field = GridField::new(dim, lo, hi, h, values).unwrap();
    GridMeasure::from_density(field).unwrap()
}

fn random_atoms(k: u64) -> GridMeasure {
    let mut rng = SeedSpec::auxiliary(SEED, k).rng();
    let count = rng.random_range(1..=20);
    let atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random_range(-5.0..5.0), rng.random_range(0.01..1.0)))
        .collect();
    GridMeasure::atoms_1d(&atoms).unwrap()
}

type MeasureMaker = fn(u64) -> GridMeasure;

fn weak_type(_scale: Scale) -> Vec<SubResult> {
    let mut out = Vec::new();
    let families: [(&str, MeasureMaker); 3] = [
        ("1D atomic x100", random_atoms),
        ("1D density x50", |k| random_density(1, k)),
        ("2D density x50", |k| random_density(2, k)),
    ];
    for (label, make) in families {
        let count = if label.starts_with("1D atomic") { 100 } else { 50 };
        let mut violations = 0;
        let mut truncated = 0;
        let mut worst = 0.0f64;
        let mut failure = None;
        for k in 0..count {
            let nu = make(k);
            let r = percentile_lambdas(&nu, &WEAK_PROBS, 4000).and_then(|l| weak_type_check(&nu, &l));
            match r {
                Ok(rep) => {
                    violations += rep.violations;
                    truncated += rep.truncated as usize;
                    for (m, b) in rep.superlevel_measures.iter().zip(&rep.bound_values) {
                        worst = worst.max(m / b);
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        out.push(match failure {
            Some(e) => error_part(label, e),
            None => part(
                label,
                violations == 0,
                format!("{violations} violations, max Leb/bound {worst:.3}, {truncated} truncated"),
            ),
        });
    }
    out
}

fn heaviside_pairs(count: usize) -> SubResult {
    let op = MaximalOperator::new(&GridMeasure::atoms_1d(&[(0.0, 1.0)]).unwrap());
    let mut rng = SeedSpec::auxiliary(SEED, 7).rng();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for _ in 0..count {
        let x = -rng.random_range(1e-6..3.0);
        let y = rng.random_range(1e-6..3.0);
        match pointwise_ratio(0.0, 1.0, &[x], &[y], &op, 1.0) {
            Ok(PairRatio::Value { symmetric, .. }) => {
                worst = worst.max(symmetric);
                if symmetric > 0.5 * (1.0 + 1e-12) {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    part(
        "Heaviside K0=1/2",
        bad == 0,
        format!("{bad} of {count} pairs exceed 1/2, max ratio {worst:.6}"),
    )
}

fn stable(label: &str, a: f64, b: f64, what: &str) -> SubResult {
    let ratio = a.max(b) / a.min(b);
    part(
        label,
        a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && ratio < 2.0,
        format!("{what} {a:.4} vs {b:.4}, ratio {ratio:.3}"),
    )
}

fn pointwise(scale: Scale) -> Vec<SubResult> {
    let mut out = vec![heaviside_pairs(10_000)];
    let pairs = scale.pick(4000, 500);

    let disc = Payoff::ball_indicator(vec![0.0, 0.0], 0.5).unwrap();
    let ball_k0 = |h: f64| -> irrmc::Result<f64> {
        let f = GridField::from_fn(2, -1.0, 1.0, h, |x| disc.eval(x))?;
        let control = GridMeasure::from_density(mollified_gradient(&f, 2.0 * h)?)?;
        Ok(pointwise_check(&f, &control, pairs, PointwiseMode::Bv, Some(0.25), SEED)?.fitted_k0)
    };
    out.push(match (ball_k0(1.0 / 64.0), ball_k0(1.0 / 128.0)) {
        (Ok(a), Ok(b)) => stable("2D ball h=1/64 vs 1/128", a, b, "K0"),
        (Err(e), _) | (_, Err(e)) => error_part("2D ball", e),
    });

    let tent = Payoff::tent_power(0.5, 2.0).unwrap();
    let mode = PointwiseMode::Fractional { s: 0.5, p: 2.0 };
    let tent_k0 = |h: f64| -> irrmc::Result<f64> {
        let f = GridField::from_fn(1, -2.0, 2.0, h, |x| tent.eval(x))?;
        let g = gsp_field(&f, 0.5, 2.0)?;
        let control = GridMeasure::from_density(g.field)?;
        Ok(pointwise_check(&f, &control, pairs, mode, None, SEED)?.fitted_k0)
    };
    out.push(match (tent_k0(1.0 / 256.0), tent_k0(1.0 / 512.0)) {
        (Ok(a), Ok(b)) => stable("tent s=1/2 p=2 h=1/256 vs 1/512", a, b, "K0(s,p)"),
        (Err(e), _) | (_, Err(e)) => error_part("tent fractional", e),
    });
    out
}

fn irregular_inequality(scale: Scale) -> Vec<SubResult> {
    let ind = Payoff::interval_indicator(0.0, 1.0).unwrap();
    let grid = [0.2, 0.1, 0.05, 0.025];
    let samples = scale.pick(1_000_000, 100_000);
    let rep = match inequality_check(
        PairFamily::GaussianShift { dim: 1 },
        &ind,
        1.0,
        ExponentRule::Bv { p: 1.0, r: None },
        &grid,
        samples,
        SEED,
    ) {
        Ok(r) => r,
        Err(e) => return vec![error_part("inequality", e)],
    };
    let n = Normal::new(0.0, 1.0).unwrap();
    let t = 0.1;
    let exact = (n.cdf(0.0) - n.cdf(-t)) + (n.cdf(1.0) - n.cdf(1.0 - t));
    let (lhs, se) = (rep.lhs[1], rep.lhs_stderr[1]);
    let spread = rep.max_ratio / rep.min_ratio;
    let ratios: Vec<String> = rep.ratios.iter().map(|r| format!("{r:.4}")).collect();
    vec![
        part(
            "LHS at t=0.1",
            (lhs - exact).abs() <= 3.0 * se,
            format!("MC {lhs:.5} +- {se:.1e} vs closed form {exact:.5}"),
        ),
        part(
            "ratio bounded",
            spread < 2.0,
            format!("ratios [{}], max/min {spread:.3} (< 2 required)", ratios.join(", ")),
        ),
    ]
}

fn orlicz(_scale: Scale) -> Vec<SubResult> {
    let mut out = Vec::new();
    let phi = YoungFunction::power_log(2.0, 1.0).unwrap();
    let c = phi.psi_doubling_constant();
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut failure = None;
    for k in 0..=120 {
        let x = 10f64.powf(-3.0 + k as f64 * 0.05);
        match (phi.complement(x), phi.complement(2.0 * x)) {
            (Ok(a), Ok(b)) => {
                worst = worst.max(b / a);
                if b > c * a * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                break;
            }
        }
    }
    out.push(match failure {
        Some(e) => error_part("Psi doubling", e),
        None => part(
            "Psi(2x) <= 2^{p/(p-1)} Psi(x), Phi = x^2 log(e+x)",
            violations == 0,
            format!("{violations} violations on 121 points in [1e-3, 1e3], max Psi(2x)/Psi(x) {worst:.4} vs {c}"),
        ),
    });
    for (p, q) in [(2.0, 1.0), (3.0, 2.0)] {
        let young = YoungFunction::power(p).unwrap();
        // min over lambda of 1/lambda + (p lambda)^{q/p} E, solved by hand
        let a = q / p;
        let k = p.powf(a);
        let closed = |e: f64| {
            let lam = (1.0 / (a * k * e)).powf(1.0 / (a + 1.0));
            (1.0 + 1.0 / a) / lam
        };
        let mut worst = 0.0f64;
        let mut failure = None;
        for j in 0..=12 {
            let e = 10f64.powf(-5.0 + 0.25 * j as f64);
            match orlicz_bound_minimize(q, None, e, &young) {
                Ok(b) => {
                    let scaled = b.bound / e.powf(p / (p + q));
                    let reference = closed(e) / e.powf(p / (p + q));
                    worst = worst.max((scaled / reference - 1.0).abs());
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let label = format!("bound ~ E^(p/(p+q)), p={p} q={q}");
        out.push(match failure {
            Some(e) => error_part(&label, e),
            None => part(
                label,
                worst <= 0.01,
                format!("max relative deviation {worst:.2e} over E in [1e-5, 1e-2]"),
            ),
        });
    }
    out
}

fn mlmc_correctness(scale: Scale) -> Vec<SubResult> {
    let (x0, mu, sigma) = (0.5, 0.1, 0.5);
    let model = SdeModel::constant(vec![mu], sigma, vec![x0], 1.0).unwrap();
    let payoff = Payoff::clamp_ramp();
    let truth = normal_expectation(|x| payoff.eval(&[x]), x0 + mu, sigma, 160);
    let eps = 0.005;
    let reps = scale.pick(20, 5);
    let mut errors = Vec::new();
    for r in 0..reps {
        match run_mlmc(&model, &payoff, eps, 2, &MlmcOptions::default(), derive_seed(SEED, r)) {
            Ok(res) => errors.push(res.estimate - truth),
            Err(e) => return vec![error_part("replicate", e)],
        }
    }
    let max_err = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    vec![
        part(
            format!("all {reps} within 3 eps"),
            max_err <= 3.0 * eps,
            format!("max |err| {max_err:.2e}, truth {truth:.6}"),
        ),
        part("replicate RMS <= 1.5 eps", rms <= 1.5 * eps, format!("RMS {rms:.2e}")),
    ]
}

/// Geometric-mean cost per epsilon over replicate sweeps, and the MLMC /
/// single-level cost ratios at the smallest epsilon.
fn replicated_sweep(model: &SdeModel, payoff: &Payoff, eps: &[f64], reps: u64) -> irrmc::Result<(f64, Vec<f64>, f64)> {
    let opts = MlmcOptions::default();
    let mut log_cost = vec![0.0; eps.len()];
    let mut log_ratio = 0.0;
    for r in 0..reps {
        let seed = derive_seed(SEED, 100 + r);
        let report = complexity_sweep(model, payoff, eps, 2, &opts, seed)?;
        if report.partial {
            return Err(irrmc::Error::NonConvergence("sweep did not converge at every epsilon".into()));
        }
        for (acc, p) in log_cost.iter_mut().zip(&report.points) {
            *acc += (p.total_cost as f64).ln() / reps as f64;
        }
        let last = report.runs.last().expect("converged run");
        let level = last.levels.len() - 1;
        let single = single_level_mc(model, payoff, level, 2, last.epsilon, opts.pilot_samples, seed ^ 0x5eed)?;
        log_ratio += (last.total_cost as f64 / single.cost as f64).ln() / reps as f64;
    }
    let costs: Vec<f64> = log_cost.iter().map(|c| c.exp()).collect();
    let fit = log_log_fit(eps, &costs).ok_or_else(|| irrmc::Error::DegenerateCurve("cost fit".into()))?;
    Ok((-fit.slope, costs, log_ratio.exp()))
}

fn mlmc_complexity(scale: Scale) -> Vec<SubResult> {
    let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
    let eps = [0.02, 0.01, 0.005];
    let reps = scale.pick(64, 4);
    let mut out = Vec::new();
    let lip = Payoff::clamp_ramp();
    match replicated_sweep(&model, &lip, &eps, reps) {
        Ok((exp, costs, _)) => out.push(part(
            "(a) Lipschitz exponent in [1.8, 2.6]",
            (1.8..=2.6).contains(&exp),
            format!("{exp:.3}, geometric-mean costs {costs:.0?}"),
        )),
        Err(e) => out.push(error_part("(a) Lipschitz", e)),
    }
    let ind = Payoff::interval_indicator(0.0, 1.0).unwrap();
    match replicated_sweep(&model, &ind, &eps, reps) {
        Ok((exp, costs, ratio)) => {
            out.push(part(
                "(b) indicator exponent in [2.0, 3.2]",
                (2.0..=3.2).contains(&exp),
                format!("{exp:.3} vs (6-delta)/2 ~ 2.5, geometric-mean costs {costs:.0?}"),
            ));
            out.push(part(
                "(c) indicator MLMC cheaper than single level at eps=0.005",
                ratio < 1.0,
                format!("geometric-mean cost ratio MLMC/single-level {ratio:.3}"),
            ));
        }
        Err(e) => out.push(error_part("(b, c) indicator", e)),
    }
    out
}

fn density(scale: Scale) -> Vec<SubResult> {
    let mut out = Vec::new();
    let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
    let samples = scale.pick(200_000, 20_000);
    let mut fitted = Vec::new();
    for n in [16, 64, 256] {
        match terminal_histogram(&model, n, samples, 100, SEED).and_then(|h| fit_gaussian_envelope(&h, 0.0, 1.0)) {
            Ok(env) => fitted.push((n, env.big_c, env.small_c)),
            Err(e) => return vec![error_part("sin/cos envelope", e)],
        }
    }
    let hi = fitted.iter().map(|f| f.1).fold(0.0, f64::max);
    let lo = fitted.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let listing: Vec<String> = fitted
        .iter()
        .map(|(n, c, s)| format!("n={n}: C+ {c:.3} c+ {s:.3}"))
        .collect();
    out.push(part(
        "C+ uniform in n (max/min < 2)",
        hi / lo < 2.0,
        format!("{}, max/min {:.3}", listing.join(", "), hi / lo),
    ));
    let normal = SdeModel::constant(vec![0.0], 1.0, vec![0.0], 1.0).unwrap();
    match terminal_histogram(&normal, 1, scale.pick(1_000_000, 100_000), 100, SEED)
        .and_then(|h| fit_gaussian_envelope(&h, 0.0, 1.0))
    {
        Ok(env) => out.push(part(
            "exact normal C+ in [1.0, 1.2]",
            (1.0..=1.2).contains(&env.big_c),
            format!("C+ {:.4} at c+ {:.4}", env.big_c, env.small_c),
        )),
        Err(e) => out.push(error_part("exact normal", e)),
    }
    out
}
