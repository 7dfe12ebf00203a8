//! Strong q-moment error curves for irregular payoffs, log-log rate fits,
//! and bounded-ratio checks of the moment inequalities
//! E|f(X) - f(X')|^q <= C E[|X - X'|^m]^e.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::payoff::Payoff;
use crate::randomkit::{chunked, generate_increments, SeedSpec};
use crate::sde::{euler_maruyama, reference_terminal, SdeModel};
use crate::stats::{linear_fit, Welford};

/// Smallest sample count accepted by [`qerror_curve`].
pub const MIN_SAMPLES: usize = 1000;
/// A curve point is trusted only above this many standard errors.
pub const NOISE_FLOOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub points: Vec<CurvePoint>,
    pub q: f64,
    pub payoff: String,
    pub model: String,
    pub samples: usize,
    pub n_ref: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    /// Step counts used in the regression.
    pub used: Vec<usize>,
    /// Step counts dropped as zero or below the noise floor.
    pub excluded: Vec<usize>,
}

impl RateFit {
    /// Normal-approximation confidence interval for the slope.
    pub fn slope_interval(&self, z: f64) -> (f64, f64) {
        let w = z * self.slope_stderr;
        (self.slope - w, self.slope + w)
    }
}

fn abs_pow(x: f64, q: f64) -> f64 {
    let a = x.abs();
    if q == 1.0 {
        a
    } else if q == 2.0 {
        a * a
    } else {
        a.powf(q)
    }
}

fn check_curve_inputs(
    model: &SdeModel,
    jobs: &[(&Payoff, f64)],
    n_list: &[usize],
    samples: usize,
    n_ref: usize,
) -> Result<()> {
    if jobs.is_empty() {
        return Err(invalid("no payoffs given"));
    }
    for (payoff, q) in jobs {
        if !(*q >= 1.0) || !q.is_finite() {
            return Err(invalid(format!("q must be >= 1, got {q}")));
        }
        if let Some(d) = payoff.dim() {
            if d != model.dim() {
                return Err(invalid(format!(
                    "payoff {} expects dimension {d}, model has {}",
                    payoff.name(),
                    model.dim()
                )));
            }
        }
    }
    if n_list.is_empty() {
        return Err(invalid("n_list is empty"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_list must be strictly increasing"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || !n_ref.is_multiple_of(n)) {
        return Err(invalid(format!("step count {n} does not divide n_ref = {n_ref}")));
    }
    if samples < MIN_SAMPLES {
        return Err(invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// E|f(X^{(n_ref)}(T)) - f(X^{(n)}(T))|^q for each n, one Brownian path per
/// sample shared by the reference and all coarse runs.
pub fn qerror_curve(
    model: &SdeModel,
    payoff: &Payoff,
    q: f64,
    n_list: &[usize],
    samples: usize,
    n_ref: usize,
    seed: u64,
) -> Result<ErrorCurve> {
    let mut curves = qerror_curves(model, &[(payoff, q)], n_list, samples, n_ref, seed)?;
    Ok(curves.remove(0))
}

/// Several (payoff, q) curves from one set of simulated paths.
pub fn qerror_curves(
    model: &SdeModel,
    jobs: &[(&Payoff, f64)],
    n_list: &[usize],
    samples: usize,
    n_ref: usize,
    seed: u64,
) -> Result<Vec<ErrorCurve>> {
    check_curve_inputs(model, jobs, n_list, samples, n_ref)?;
    let cells = jobs.len() * n_list.len();
    let partials = chunked(
        0,
        samples as u64,
        || (vec![Welford::new(); cells], None::<Error>),
        |(acc, failure), i| {
            if failure.is_some() {
                return;
            }
            let mut run = || -> Result<()> {
                let grid = generate_increments(
                    &SeedSpec::path(seed, i),
                    model.dim(),
                    model.horizon(),
                    n_ref,
                )?;
                let reference = reference_terminal(model, &grid)?;
                let f_ref: Vec<f64> = jobs.iter().map(|(p, _)| p.eval(&reference.value)).collect();
                for (k, &n) in n_list.iter().enumerate() {
                    let coarse = if n == n_ref {
                        reference.clone()
                    } else {
                        euler_maruyama(model, n, &grid)?
                    };
                    for (j, (p, q)) in jobs.iter().enumerate() {
                        let e = abs_pow(f_ref[j] - p.eval(&coarse.value), *q);
                        acc[j * n_list.len() + k].push(e);
                    }
                }
                Ok(())
            };
            if let Err(e) = run() {
                *failure = Some(e);
            }
        },
    );
    let mut total = vec![Welford::new(); cells];
    for (acc, failure) in &partials {
        if let Some(e) = failure {
            return Err(e.clone());
        }
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
    }
    Ok(jobs
        .iter()
        .enumerate()
        .map(|(j, (p, q))| ErrorCurve {
            points: n_list
                .iter()
                .enumerate()
                .map(|(k, &n)| {
                    let w = &total[j * n_list.len() + k];
                    CurvePoint {
                        n,
                        value: w.mean(),
                        stderr: w.stderr(),
                    }
                })
                .collect(),
            q: *q,
            payoff: p.name().to_string(),
            model: model.name().to_string(),
            samples,
            n_ref,
            seed,
        })
        .collect())
}

/// OLS of log value on log n over the trusted points.
pub fn fit_rate(curve: &ErrorCurve) -> Result<RateFit> {
    if curve.points.len() < 3 {
        return Err(Error::DegenerateCurve(format!(
            "need at least 3 points, got {}",
            curve.points.len()
        )));
    }
    let (mut xs, mut ys, mut used, mut excluded) = (vec![], vec![], vec![], vec![]);
    for pt in &curve.points {
        if pt.value > 0.0 && pt.value > NOISE_FLOOR * pt.stderr {
            xs.push((pt.n as f64).ln());
            ys.push(pt.value.ln());
            used.push(pt.n);
        } else {
            excluded.push(pt.n);
        }
    }
    if used.len() < 3 {
        return Err(Error::DegenerateCurve(format!(
            "only {} of {} points are above the noise floor",
            used.len(),
            curve.points.len()
        )));
    }
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::DegenerateCurve("regression is singular".into()))?;
    Ok(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_stderr: fit.slope_stderr,
        used,
        excluded,
    })
}

/// Coupled pairs (X, X_t) with X ~ N(0, I_d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PairFamily {
    /// X_t = X + t e_1
    GaussianShift { dim: usize },
    /// X_t = (1 + t) X
    GaussianScale { dim: usize },
}

impl PairFamily {
    pub fn dim(&self) -> usize {
        match self {
            PairFamily::GaussianShift { dim } | PairFamily::GaussianScale { dim } => *dim,
        }
    }

    /// Parses a family name as used in configs.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "gaussian_shift" => Ok(PairFamily::GaussianShift { dim }),
            "gaussian_scale" => Ok(PairFamily::GaussianScale { dim }),
            other => Err(invalid(format!(
                "unknown pair family {other:?}; expected gaussian_shift or gaussian_scale"
            ))),
        }
    }

    fn perturb(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self {
            PairFamily::GaussianShift { .. } => {
                out.copy_from_slice(x);
                out[0] += t;
            }
            PairFamily::GaussianScale { .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = (1.0 + t) * v;
                }
            }
        }
    }
}

/// Which moment of |X - X_t| appears on the right and with what power.
/// `r = None` is the bounded case r = infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExponentRule {
    /// E[|dX|^p]^{(1 - q/r)/(p + 1)}
    Bv { p: f64, r: Option<f64> },
    /// E[|dX|^q]^{p(1 - q/r)/(q + p(1 - q/r))}
    Sobolev { p: f64, r: Option<f64> },
    /// E[|dX|^{qs}]^{p(1 - q/r)/(q + p(1 - q/r))}
    Fractional { s: f64, p: f64, r: Option<f64> },
}

impl ExponentRule {
    fn r_factor(r: Option<f64>, q: f64) -> Result<f64> {
        match r {
            None => Ok(1.0),
            Some(r) if r > q => Ok(1.0 - q / r),
            Some(r) => Err(invalid(format!("need q < r, got q = {q}, r = {r}"))),
        }
    }

    /// (moment order m, outer exponent e) for a given q.
    pub fn moment_and_exponent(&self, q: f64) -> Result<(f64, f64)> {
        match *self {
            ExponentRule::Bv { p, r } => {
                if !(p > 0.0) {
                    return Err(invalid("BV rule needs p > 0"));
                }
                Ok((p, Self::r_factor(r, q)? / (p + 1.0)))
            }
            ExponentRule::Sobolev { p, r } => {
                if !(p >= 1.0) {
                    return Err(invalid("Sobolev rule needs p >= 1"));
                }
                let a = p * Self::r_factor(r, q)?;
                Ok((q, a / (q + a)))
            }
            ExponentRule::Fractional { s, p, r } => {
                if !(s > 0.0 && s < 1.0) || !(p >= 1.0) {
                    return Err(invalid("fractional rule needs s in (0, 1) and p >= 1"));
                }
                let a = p * Self::r_factor(r, q)?;
                Ok((q * s, a / (q + a)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub scale_grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub lhs_stderr: Vec<f64>,
    pub rhs_base: Vec<f64>,
    /// lhs / rhs_base, NaN where rhs_base = 0.
    pub ratios: Vec<f64>,
    pub moment_order: f64,
    pub exponent: f64,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

/// Monte Carlo estimate of both sides for each perturbation size, using the
/// same draws of X for every t.
#[allow(clippy::too_many_arguments)]
pub fn inequality_check(
    family: PairFamily,
    payoff: &Payoff,
    q: f64,
    rule: ExponentRule,
    scale_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    let (m, exponent) = rule.moment_and_exponent(q)?;
    let d = family.dim();
    if d == 0 {
        return Err(invalid("pair family dimension must be positive"));
    }
    if let Some(pd) = payoff.dim() {
        if pd != d {
            return Err(invalid(format!(
                "payoff expects dimension {pd}, pair family has {d}"
            )));
        }
    }
    if scale_grid.is_empty() || scale_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("scale grid must be non-empty with t >= 0"));
    }
    if samples < 2 {
        return Err(invalid("need at least 2 samples"));
    }
    let k = scale_grid.len();
    let partials = chunked(
        0,
        samples as u64,
        || (vec![Welford::new(); 2 * k], vec![0.0; d], vec![0.0; d]),
        |(acc, x, xt), i| {
            let mut rng = SeedSpec::path(seed, i).rng();
            for v in x.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let fx = payoff.eval(x);
            for (j, &t) in scale_grid.iter().enumerate() {
                family.perturb(x, t, xt);
                acc[j].push(abs_pow(fx - payoff.eval(xt), q));
                let dist = x
                    .iter()
                    .zip(xt.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                acc[k + j].push(abs_pow(dist, m));
            }
        },
    );
    let mut total = vec![Welford::new(); 2 * k];
    for (acc, _, _) in &partials {
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
    }
    let lhs: Vec<f64> = total[..k].iter().map(Welford::mean).collect();
    let lhs_stderr = total[..k].iter().map(Welford::stderr).collect();
    let rhs_base: Vec<f64> = total[k..].iter().map(|w| w.mean().powf(exponent)).collect();
    let ratios: Vec<f64> = lhs
        .iter()
        .zip(&rhs_base)
        .map(|(l, r)| if *r > 0.0 { l / r } else { f64::NAN })
        .collect();
    let finite = ratios.iter().filter(|r| r.is_finite());
    let max_ratio = finite.clone().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = finite.cloned().fold(f64::INFINITY, f64::min);
    Ok(InequalityReport {
        scale_grid: scale_grid.to_vec(),
        lhs,
        lhs_stderr,
        rhs_base,
        ratios,
        moment_order: m,
        exponent,
        max_ratio,
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn curve(values: &[(usize, f64)]) -> ErrorCurve {
        ErrorCurve {
            points: values
                .iter()
                .map(|&(n, v)| CurvePoint {
                    n,
                    value: v,
                    stderr: 0.0,
                })
                .collect(),
            q: 2.0,
            payoff: "synthetic".into(),
            model: "none".into(),
            samples: 0,
            n_ref: 0,
            seed: 0,
        }
    }

    #[test]
    fn fit_exact_power_law() {
        let pts: Vec<(usize, f64)> = [8, 16, 32, 64].iter().map(|&n| (n, (n as f64).powf(-0.5))).collect();
        let fit = fit_rate(&curve(&pts)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant_and_degenerate() {
        let fit = fit_rate(&curve(&[(8, 0.3), (16, 0.3), (32, 0.3)])).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        let zero = curve(&[(8, 0.0), (16, 0.0), (32, 0.0)]);
        assert!(matches!(fit_rate(&zero), Err(Error::DegenerateCurve(_))));
        assert!(matches!(
            fit_rate(&curve(&[(8, 1.0), (16, 0.5)])),
            Err(Error::DegenerateCurve(_))
        ));
    }

    #[test]
    fn noise_floor_excludes_points() {
        let mut c = curve(&[(8, 1.0), (16, 0.5), (32, 0.25), (64, 0.1)]);
        c.points[3].stderr = 0.02;
        let fit = fit_rate(&c).unwrap();
        assert_eq!(fit.used, vec![8, 16, 32]);
        assert_eq!(fit.excluded, vec![64]);
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_model_errors_vanish() {
        let model = SdeModel::constant(vec![0.3], 0.7, vec![0.1], 1.0).unwrap();
        let payoff = Payoff::interval_indicator(0.0, 1.0).unwrap();
        let c = qerror_curve(&model, &payoff, 2.0, &[4, 8, 16], 1000, 64, 3).unwrap();
        // Sums of increments in a different order can move the terminal value
        // by an ulp, which only matters exactly at the interval's endpoints.
        assert!(c.points.iter().all(|p| p.value == 0.0));
        assert!(fit_rate(&c).is_err());
    }

    #[test]
    fn curve_input_validation() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let payoff = Payoff::clamp_ramp();
        assert!(qerror_curve(&model, &payoff, 2.0, &[3, 8], 1000, 64, 1).is_err());
        assert!(qerror_curve(&model, &payoff, 2.0, &[8, 4], 1000, 64, 1).is_err());
        assert!(qerror_curve(&model, &payoff, 2.0, &[8], 999, 64, 1).is_err());
        assert!(qerror_curve(&model, &payoff, 0.5, &[8], 1000, 64, 1).is_err());
        let ball = Payoff::ball_indicator(vec![0.0, 0.0], 1.0).unwrap();
        assert!(qerror_curve(&model, &ball, 2.0, &[8], 1000, 64, 1).is_err());
    }

    #[test]
    fn indicator_curves_ignore_q() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let payoff = Payoff::interval_indicator(0.0, 1.0).unwrap();
        let a = qerror_curve(&model, &payoff, 1.0, &[4, 16], 1000, 64, 9).unwrap();
        let b = qerror_curve(&model, &payoff, 3.0, &[4, 16], 1000, 64, 9).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
    }

    #[test]
    fn shift_lhs_matches_normal_cdf() {
        let payoff = Payoff::interval_indicator(0.0, 1.0).unwrap();
        let rule = ExponentRule::Bv { p: 1.0, r: None };
        let rep = inequality_check(
            PairFamily::GaussianShift { dim: 1 },
            &payoff,
            1.0,
            rule,
            &[0.0, 0.1],
            200_000,
            4,
        )
        .unwrap();
        let nd = Normal::new(0.0, 1.0).unwrap();
        let t: f64 = 0.1;
        let exact = (nd.cdf(0.0) - nd.cdf(-t)) + (nd.cdf(1.0) - nd.cdf(1.0 - t));
        assert!((rep.lhs[1] - exact).abs() < 4.0 * rep.lhs_stderr[1]);
        assert_eq!(rep.lhs[0], 0.0);
        assert!(rep.ratios[0].is_nan());
        assert!((rep.rhs_base[1] - t.sqrt()).abs() < 1e-12);
        assert_eq!(rep.exponent, 0.5);
    }

    #[test]
    fn exponent_rules() {
        let (m, e) = ExponentRule::Bv { p: 2.0, r: Some(4.0) }.moment_and_exponent(2.0).unwrap();
        assert_eq!((m, e), (2.0, 0.5 / 3.0));
        let (m, e) = ExponentRule::Sobolev { p: 2.0, r: None }.moment_and_exponent(1.0).unwrap();
        assert_eq!(m, 1.0);
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        let (m, e) = ExponentRule::Fractional { s: 0.5, p: 2.0, r: None }
            .moment_and_exponent(2.0)
            .unwrap();
        assert_eq!((m, e), (1.0, 0.5));
        assert!(ExponentRule::Bv { p: 1.0, r: Some(1.0) }.moment_and_exponent(2.0).is_err());
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!(PairFamily::from_name("gaussian_shift", 1).is_ok());
        assert!(PairFamily::from_name("uniform_shift", 1).is_err());
    }
}
