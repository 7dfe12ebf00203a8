//! Multilevel Monte Carlo for E f(X(T)) with Euler-Maruyama levels h_l = T / M^l.
//!
//! Sample i of level l is driven by the path substream
//! `SeedSpec::path(derive_seed(seed, l), i)`, so extending a level with more
//! samples reuses the earlier ones unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::payoff::Payoff;
use crate::randomkit::{chunked, derive_seed, generate_increments, SeedSpec};
use crate::sde::{coupled_pair, euler_maruyama, SdeModel};
use crate::stats::{linear_fit, Welford};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub h: f64,
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    /// N_l (M^l + M^{l-1}) steps, N_0 for level 0.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcResult {
    pub estimate: f64,
    pub levels: Vec<LevelStats>,
    pub epsilon: f64,
    pub refinement: usize,
    pub total_cost: u64,
    /// Euler-Maruyama steps actually executed, counted from the integrator output.
    pub executed_steps: u64,
    pub bias_estimate: f64,
    pub variance_estimate: f64,
    /// Weak rate used in the bias test.
    pub alpha: f64,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    /// Set when the estimated rates break alpha >= beta / 2.
    pub rate_condition_violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlmcOptions {
    pub alpha_hint: Option<f64>,
    pub pilot_samples: u64,
    pub max_level: usize,
    pub max_rounds: usize,
    pub initial_level: usize,
}

impl Default for MlmcOptions {
    fn default() -> Self {
        Self {
            alpha_hint: None,
            pilot_samples: 1000,
            max_level: 12,
            max_rounds: 5,
            initial_level: 2,
        }
    }
}

/// Running accumulator for one level.
#[derive(Debug, Clone)]
struct LevelAcc {
    level: usize,
    stats: Welford,
    executed: u64,
}

fn steps_per_sample(level: usize, m: usize) -> u64 {
    let fine = (m as u64).pow(level as u32);
    if level == 0 {
        1
    } else {
        fine + fine / m as u64
    }
}

fn check_model_payoff(model: &SdeModel, payoff: &Payoff, m: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("refinement factor must be >= 2, got {m}")));
    }
    if let Some(d) = payoff.dim() {
        if d != model.dim() {
            return Err(invalid(format!(
                "payoff expects dimension {d}, model has {}",
                model.dim()
            )));
        }
    }
    Ok(())
}

/// Adds samples `start .. start + count` of level `acc.level`.
fn extend_level(
    model: &SdeModel,
    payoff: &Payoff,
    m: usize,
    seed: u64,
    acc: &mut LevelAcc,
    count: u64,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let level = acc.level;
    let level_seed = derive_seed(seed, level as u64);
    let fine_steps = m.pow(level as u32);
    let start = acc.stats.count();
    let parts = chunked(
        start,
        count,
        || (Welford::new(), 0u64, None::<Error>),
        |(w, steps, failure), i| {
            if failure.is_some() {
                return;
            }
            let run = || -> Result<(f64, u64)> {
                let grid = generate_increments(
                    &SeedSpec::path(level_seed, i),
                    model.dim(),
                    model.horizon(),
                    fine_steps,
                )?;
                if level == 0 {
                    let x = euler_maruyama(model, 1, &grid)?;
                    Ok((payoff.eval(&x.value), x.n_steps as u64))
                } else {
                    let (fine, coarse) = coupled_pair(model, &grid, m)?;
                    Ok((
                        payoff.eval(&fine.value) - payoff.eval(&coarse.value),
                        (fine.n_steps + coarse.n_steps) as u64,
                    ))
                }
            };
            match run() {
                Ok((y, s)) => {
                    w.push(y);
                    *steps += s;
                }
                Err(e) => *failure = Some(e),
            }
        },
    );
    for (w, steps, failure) in parts {
        if let Some(e) = failure {
            return Err(e);
        }
        acc.stats.merge(&w);
        acc.executed += steps;
    }
    Ok(())
}

fn level_stats(acc: &LevelAcc, model: &SdeModel, m: usize) -> LevelStats {
    let n = acc.stats.count();
    LevelStats {
        level: acc.level,
        h: model.horizon() / (m as f64).powi(acc.level as i32),
        samples: n,
        mean: acc.stats.mean(),
        variance: acc.stats.variance().max(0.0),
        cost: n * steps_per_sample(acc.level, m),
    }
}

/// N samples of P_l - P_{l-1} (of P_0 at level 0).
pub fn level_sample(
    model: &SdeModel,
    payoff: &Payoff,
    level: usize,
    m: usize,
    samples: u64,
    seed: u64,
) -> Result<LevelStats> {
    check_model_payoff(model, payoff, m)?;
    if samples < 2 {
        return Err(invalid("a level needs at least 2 samples"));
    }
    let mut acc = LevelAcc {
        level,
        stats: Welford::new(),
        executed: 0,
    };
    extend_level(model, payoff, m, seed, &mut acc, samples)?;
    Ok(level_stats(&acc, model, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub beta: f64,
    pub beta_stderr: f64,
}

impl AlphaBeta {
    pub fn alpha_interval(&self, z: f64) -> (f64, f64) {
        (self.alpha - z * self.alpha_stderr, self.alpha + z * self.alpha_stderr)
    }

    pub fn beta_interval(&self, z: f64) -> (f64, f64) {
        (self.beta - z * self.beta_stderr, self.beta + z * self.beta_stderr)
    }
}

/// Fits |mean_l| ~ h_l^alpha and variance_l ~ h_l^beta over the correction
/// levels l >= 1; levels with zero mean (or variance) drop out of that fit.
pub fn estimate_alpha_beta(levels: &[LevelStats]) -> Result<AlphaBeta> {
    let corr: Vec<&LevelStats> = levels.iter().filter(|l| l.level >= 1).collect();
    let pick = |f: &dyn Fn(&LevelStats) -> f64| {
        let (mut xs, mut ys) = (vec![], vec![]);
        for l in &corr {
            let v = f(l);
            if v > 0.0 && v.is_finite() {
                xs.push(l.h.ln());
                ys.push(v.ln());
            }
        }
        (xs, ys)
    };
    let (ax, ay) = pick(&|l| l.mean.abs());
    let (bx, by) = pick(&|l| l.variance);
    if ax.len() < 2 || bx.len() < 2 {
        return Err(Error::DegenerateCurve(format!(
            "need two correction levels with nonzero mean and variance, have {} and {}",
            ax.len(),
            bx.len()
        )));
    }
    let fa = linear_fit(&ax, &ay).ok_or_else(|| Error::DegenerateCurve("alpha fit is singular".into()))?;
    let fb = linear_fit(&bx, &by).ok_or_else(|| Error::DegenerateCurve("beta fit is singular".into()))?;
    Ok(AlphaBeta {
        alpha: fa.slope,
        alpha_stderr: fa.slope_stderr,
        beta: fb.slope,
        beta_stderr: fb.slope_stderr,
    })
}

/// N_l = ceil(2 eps^-2 sqrt(V_l / C_l) sum_j sqrt(V_j C_j)), which is
/// the h-form sqrt(V_l h_l) sum_j sqrt(V_j / h_j) with cost per sample C_l.
pub fn optimal_allocation(variances: &[f64], costs: &[f64], epsilon: f64) -> Vec<u64> {
    let sum: f64 = variances
        .iter()
        .zip(costs)
        .map(|(v, c)| (v.max(0.0) * c).sqrt())
        .sum();
    variances
        .iter()
        .zip(costs)
        .map(|(v, c)| (2.0 / (epsilon * epsilon) * (v.max(0.0) / c).sqrt() * sum).ceil() as u64)
        .collect()
}

fn assemble(
    accs: &[LevelAcc],
    model: &SdeModel,
    m: usize,
    epsilon: f64,
    bias: f64,
    alpha: f64,
    rates: Option<AlphaBeta>,
) -> MlmcResult {
    let levels: Vec<LevelStats> = accs.iter().map(|a| level_stats(a, model, m)).collect();
    let estimate = levels.iter().map(|l| l.mean).sum();
    let variance_estimate = levels
        .iter()
        .map(|l| l.variance / l.samples as f64)
        .sum();
    MlmcResult {
        estimate,
        total_cost: levels.iter().map(|l| l.cost).sum(),
        executed_steps: accs.iter().map(|a| a.executed).sum(),
        levels,
        epsilon,
        refinement: m,
        bias_estimate: bias,
        variance_estimate,
        alpha,
        alpha_hat: rates.map(|r| r.alpha),
        beta_hat: rates.map(|r| r.beta),
        rate_condition_violated: rates.is_some_and(|r| r.alpha < r.beta / 2.0),
    }
}

/// Adaptive MLMC targeting RMS error `epsilon`: variance budget eps^2/2 and
/// bias test max(|m_L|, |m_{L-1}| / M^alpha) / (M^alpha - 1) <= eps / sqrt(2).
pub fn run_mlmc(
    model: &SdeModel,
    payoff: &Payoff,
    epsilon: f64,
    m: usize,
    opts: &MlmcOptions,
    seed: u64,
) -> Result<MlmcResult> {
    check_model_payoff(model, payoff, m)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if opts.pilot_samples < 2 {
        return Err(invalid("pilot_samples must be at least 2"));
    }
    if opts.initial_level > opts.max_level {
        return Err(invalid("initial_level exceeds max_level"));
    }
    if let Some(a) = opts.alpha_hint {
        if !(a > 0.0) {
            return Err(invalid("alpha_hint must be positive"));
        }
    }
    let mut accs: Vec<LevelAcc> = Vec::new();
    let add_level = |accs: &mut Vec<LevelAcc>| -> Result<()> {
        let mut acc = LevelAcc {
            level: accs.len(),
            stats: Welford::new(),
            executed: 0,
        };
        extend_level(model, payoff, m, seed, &mut acc, opts.pilot_samples)?;
        accs.push(acc);
        Ok(())
    };
    for _ in 0..=opts.initial_level {
        add_level(&mut accs)?;
    }
    loop {
        for _ in 0..opts.max_rounds {
            let vars: Vec<f64> = accs.iter().map(|a| a.stats.variance()).collect();
            let costs: Vec<f64> = accs
                .iter()
                .map(|a| steps_per_sample(a.level, m) as f64)
                .collect();
            let target = optimal_allocation(&vars, &costs, epsilon);
            let mut grew = false;
            for (acc, &n) in accs.iter_mut().zip(&target) {
                let have = acc.stats.count();
                if n > have {
                    extend_level(model, payoff, m, seed, acc, n - have)?;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let stats: Vec<LevelStats> = accs.iter().map(|a| level_stats(a, model, m)).collect();
        let rates = estimate_alpha_beta(&stats).ok();
        let alpha = opts
            .alpha_hint
            .or_else(|| rates.map(|r| r.alpha.max(0.5)).filter(|a| a.is_finite()))
            .unwrap_or(1.0);
        let ma = (m as f64).powf(alpha);
        let l = accs.len() - 1;
        let bias = (stats[l].mean.abs()).max(stats[l - 1].mean.abs() / ma) / (ma - 1.0);
        if bias <= epsilon / 2f64.sqrt() {
            return Ok(assemble(&accs, model, m, epsilon, bias, alpha, rates));
        }
        if l >= opts.max_level {
            let partial = assemble(&accs, model, m, epsilon, bias, alpha, rates);
            return Err(Error::NonConvergence(format!(
                "bias estimate {bias:.3e} still above {:.3e} at the level cap L = {l} \
                 (estimate {:.6}, cost {}, alpha {alpha:.3})",
                epsilon / 2f64.sqrt(),
                partial.estimate,
                partial.total_cost
            )));
        }
        add_level(&mut accs)?;
    }
}

/// MLMC at fixed finest level with given per-level sample counts.
pub fn run_mlmc_fixed(
    model: &SdeModel,
    payoff: &Payoff,
    m: usize,
    samples: &[u64],
    seed: u64,
) -> Result<MlmcResult> {
    check_model_payoff(model, payoff, m)?;
    if samples.is_empty() || samples.iter().any(|&n| n < 2) {
        return Err(invalid("every level needs at least 2 samples"));
    }
    let mut accs = Vec::with_capacity(samples.len());
    for (level, &n) in samples.iter().enumerate() {
        let mut acc = LevelAcc {
            level,
            stats: Welford::new(),
            executed: 0,
        };
        extend_level(model, payoff, m, seed, &mut acc, n)?;
        accs.push(acc);
    }
    let stats: Vec<LevelStats> = accs.iter().map(|a| level_stats(a, model, m)).collect();
    let rates = estimate_alpha_beta(&stats).ok();
    Ok(assemble(&accs, model, m, f64::NAN, f64::NAN, f64::NAN, rates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLevelResult {
    pub estimate: f64,
    pub level: usize,
    pub samples: u64,
    pub variance: f64,
    pub stderr: f64,
    /// samples * M^level steps.
    pub cost: u64,
}

/// Plain Monte Carlo at level L with N = ceil(2 Var / eps^2) (variance budget
/// eps^2 / 2), the variance taken from a pilot of `pilot` samples that are
/// kept. Uses the same path substreams as the fine half of MLMC level L.
pub fn single_level_mc(
    model: &SdeModel,
    payoff: &Payoff,
    level: usize,
    m: usize,
    epsilon: f64,
    pilot: u64,
    seed: u64,
) -> Result<SingleLevelResult> {
    check_model_payoff(model, payoff, m)?;
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    if pilot < 2 {
        return Err(invalid("pilot must be at least 2"));
    }
    let level_seed = derive_seed(seed, level as u64);
    let n_steps = m.pow(level as u32);
    let run = |start: u64, count: u64| -> Result<Welford> {
        let parts = chunked(
            start,
            count,
            || (Welford::new(), None::<Error>),
            |(w, failure), i| {
                if failure.is_some() {
                    return;
                }
                let r = generate_increments(
                    &SeedSpec::path(level_seed, i),
                    model.dim(),
                    model.horizon(),
                    n_steps,
                )
                .and_then(|g| euler_maruyama(model, n_steps, &g));
                match r {
                    Ok(x) => w.push(payoff.eval(&x.value)),
                    Err(e) => *failure = Some(e),
                }
            },
        );
        let mut total = Welford::new();
        for (w, f) in parts {
            if let Some(e) = f {
                return Err(e);
            }
            total.merge(&w);
        }
        Ok(total)
    };
    let mut w = run(0, pilot)?;
    let need = (2.0 * w.variance() / (epsilon * epsilon)).ceil() as u64;
    if need > pilot {
        w.merge(&run(pilot, need - pilot)?);
    }
    Ok(SingleLevelResult {
        estimate: w.mean(),
        level,
        samples: w.count(),
        variance: w.variance(),
        stderr: w.stderr(),
        cost: w.count() * n_steps as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub total_cost: u64,
    pub finest_level: Option<usize>,
    pub estimate: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub points: Vec<SweepPoint>,
    /// gamma in cost ~ eps^-gamma, from the converged points.
    pub cost_exponent: Option<f64>,
    pub cost_exponent_stderr: Option<f64>,
    /// 2 + 1/alpha, the single-level exponent for comparison.
    pub standard_mc_exponent: f64,
    /// Set when some epsilon did not converge.
    pub partial: bool,
    pub runs: Vec<MlmcResult>,
}

pub fn complexity_sweep(
    model: &SdeModel,
    payoff: &Payoff,
    epsilons: &[f64],
    m: usize,
    opts: &MlmcOptions,
    seed: u64,
) -> Result<ComplexityReport> {
    if epsilons.len() < 3 {
        return Err(invalid("need at least 3 epsilon values"));
    }
    let lo = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = epsilons.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi >= 4.0 * lo) {
        return Err(invalid("epsilon values must span at least a factor of 4"));
    }
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for (k, &eps) in epsilons.iter().enumerate() {
        match run_mlmc(model, payoff, eps, m, opts, derive_seed(seed, k as u64)) {
            Ok(r) => {
                points.push(SweepPoint {
                    epsilon: eps,
                    total_cost: r.total_cost,
                    finest_level: Some(r.levels.len() - 1),
                    estimate: Some(r.estimate),
                    converged: true,
                });
                runs.push(r);
            }
            Err(Error::NonConvergence(_)) => points.push(SweepPoint {
                epsilon: eps,
                total_cost: 0,
                finest_level: None,
                estimate: None,
                converged: false,
            }),
            Err(e) => return Err(e),
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.converged)
        .map(|p| (p.epsilon.ln(), (p.total_cost as f64).ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys);
    let alpha = opts
        .alpha_hint
        .or_else(|| runs.last().map(|r: &MlmcResult| r.alpha))
        .unwrap_or(1.0);
    Ok(ComplexityReport {
        partial: points.iter().any(|p| !p.converged),
        cost_exponent: fit.map(|f| -f.slope),
        cost_exponent_stderr: fit.map(|f| f.slope_stderr),
        standard_mc_exponent: 2.0 + 1.0 / alpha,
        points,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::normal_expectation;
    use crate::sde::ModelMeta;

    fn constant() -> SdeModel {
        SdeModel::constant(vec![0.1], 0.2, vec![0.0], 1.0).unwrap()
    }

    #[test]
    fn constant_model_corrections_vanish() {
        let p = Payoff::clamp_ramp();
        for l in 1..5 {
            let s = level_sample(&constant(), &p, l, 2, 200, 3).unwrap();
            assert_eq!(s.variance, 0.0);
            assert_eq!(s.mean, 0.0);
        }
    }

    #[test]
    fn level_zero_is_single_level() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let p = Payoff::clamp_ramp();
        let l0 = level_sample(&model, &p, 0, 2, 5000, 11).unwrap();
        let sl = single_level_mc(&model, &p, 0, 2, 1.0, 5000, 11).unwrap();
        assert_eq!(sl.samples, 5000);
        assert!((l0.mean - sl.estimate).abs() <= 1e-12);
    }

    #[test]
    fn level_sample_validation() {
        let p = Payoff::clamp_ramp();
        assert!(level_sample(&constant(), &p, 1, 2, 1, 0).is_err());
        assert!(level_sample(&constant(), &p, 1, 1, 10, 0).is_err());
        let ball = Payoff::ball_indicator(vec![0.0, 0.0], 1.0).unwrap();
        assert!(level_sample(&constant(), &ball, 1, 2, 10, 0).is_err());
    }

    #[test]
    fn synthetic_rates_are_exact() {
        let levels: Vec<LevelStats> = (0..6)
            .map(|l| {
                let h = 0.5f64.powi(l);
                LevelStats {
                    level: l as usize,
                    h,
                    samples: 10,
                    mean: h,
                    variance: h,
                    cost: 1,
                }
            })
            .collect();
        let ab = estimate_alpha_beta(&levels).unwrap();
        assert!((ab.alpha - 1.0).abs() < 1e-12);
        assert!((ab.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sincos_variance_decay_rates() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let rates = |p: &Payoff| {
            let levels: Vec<_> = (1..=6)
                .map(|l| level_sample(&model, p, l, 2, 10_000, 7).unwrap())
                .collect();
            estimate_alpha_beta(&levels).unwrap()
        };
        // strong order 1/2 gives beta >= 1 for Lipschitz payoffs and
        // beta >= 1/2 for indicators; this model sits above both
        let lip = rates(&Payoff::clamp_ramp());
        assert!(lip.beta >= 0.7, "{lip:?}");
        let ind = rates(&Payoff::interval_indicator(0.0, 1.0).unwrap());
        assert!(ind.beta >= 0.3 && ind.beta < lip.beta, "{ind:?}");
    }

    #[test]
    fn constant_model_rates_degenerate() {
        let p = Payoff::clamp_ramp();
        let levels: Vec<LevelStats> = (0..4)
            .map(|l| level_sample(&constant(), &p, l, 2, 100, 1).unwrap())
            .collect();
        assert!(estimate_alpha_beta(&levels).is_err());
    }

    #[test]
    fn adaptive_constant_model_matches_quadrature() {
        let p = Payoff::clamp_ramp();
        let truth = normal_expectation(|x| x.clamp(0.0, 1.0), 0.1, 0.2, 64);
        let r = run_mlmc(&constant(), &p, 0.005, 2, &MlmcOptions::default(), 21).unwrap();
        assert!((r.estimate - truth).abs() < 3.0 * 0.005);
        assert_eq!(r.total_cost, r.executed_steps);
        assert!(r.variance_estimate <= 0.005f64.powi(2) / 2.0 * 1.1);
        assert_eq!(r.levels.len(), 3);
    }

    #[test]
    fn cost_accounting_is_exact() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let p = Payoff::interval_indicator(0.0, 1.0).unwrap();
        for m in [2, 4] {
            let r = run_mlmc(&model, &p, 0.05, m, &MlmcOptions::default(), 5).unwrap();
            assert_eq!(r.total_cost, r.executed_steps);
            let formula: u64 = r
                .levels
                .iter()
                .map(|l| l.samples * steps_per_sample(l.level, m))
                .sum();
            assert_eq!(r.total_cost, formula);
            for w in r.levels.windows(2) {
                assert!((w[1].h - w[0].h / m as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn halving_epsilon_costs_more() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let p = Payoff::clamp_ramp();
        let a = run_mlmc(&model, &p, 0.02, 2, &MlmcOptions::default(), 8).unwrap();
        let b = run_mlmc(&model, &p, 0.01, 2, &MlmcOptions::default(), 8).unwrap();
        assert!(b.total_cost > a.total_cost);
    }

    #[test]
    fn telescoping_with_zero_diffusion() {
        let model = SdeModel::from_fns(
            "ode",
            vec![0.3],
            1.0,
            |_t, x: &[f64], b: &mut [f64]| b[0] = x[0].sin() + 0.5,
            |_t, _x: &[f64], s: &mut [f64]| s[0] = 0.0,
            ModelMeta {
                sup_drift: 1.5,
                lip_space: 1.0,
                holder_time: 0.0,
                a_lower: 0.0,
                a_upper: 0.0,
            },
        )
        .unwrap();
        let p = Payoff::clamp_ramp();
        let r = run_mlmc_fixed(&model, &p, 2, &[4, 4, 4, 4, 4], 1).unwrap();
        let grid = generate_increments(&SeedSpec::path(0, 0), 1, 1.0, 16).unwrap();
        let direct = p.eval(&euler_maruyama(&model, 16, &grid).unwrap().value);
        assert!((r.estimate - direct).abs() < 1e-12);
    }

    #[test]
    fn level_cap_reports_nonconvergence() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let p = Payoff::interval_indicator(0.0, 1.0).unwrap();
        let opts = MlmcOptions {
            max_level: 2,
            alpha_hint: Some(1.0),
            ..MlmcOptions::default()
        };
        let err = run_mlmc(&model, &p, 0.001, 2, &opts, 1).unwrap_err();
        assert!(matches!(err, Error::NonConvergence(_)));
    }

    #[test]
    fn sweep_validation() {
        let p = Payoff::clamp_ramp();
        let o = MlmcOptions::default();
        assert!(complexity_sweep(&constant(), &p, &[0.1, 0.05], 2, &o, 1).is_err());
        assert!(complexity_sweep(&constant(), &p, &[0.1, 0.07, 0.05], 2, &o, 1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn allocation_nonincreasing(
            v0 in 0.01f64..1.0,
            ratios in proptest::collection::vec(0.05f64..1.0, 1..8),
            m in 2usize..5,
            eps in 0.001f64..0.1,
        ) {
            // V_l h_l nonincreasing
            let mut vars = vec![v0];
            let mut costs = vec![1.0];
            for (l, r) in ratios.iter().enumerate() {
                let c = steps_per_sample(l + 1, m) as f64;
                let prev_vh = vars[l] / costs[l];
                vars.push(prev_vh * r * c);
                costs.push(c);
            }
            let n = optimal_allocation(&vars, &costs, eps);
            for w in n.windows(2) {
                proptest::prop_assert!(w[1] <= w[0]);
            }
        }
    }
}
