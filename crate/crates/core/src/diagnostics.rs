//! Terminal-density histograms of the Euler-Maruyama law and Gaussian
//! envelope fits p(y) <= C g_{cT}(x0, y).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::randomkit::{chunked, generate_increments, SeedSpec};
use crate::sde::{euler_maruyama, SdeModel};
use crate::stats::Welford;

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_BINS: usize = 20;
/// Bins with fewer counts are left out of envelope fits.
pub const MIN_BIN_COUNT: u64 = 5;

/// Uniform histogram of the first coordinate of X^{(n)}(T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub dim: usize,
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    pub samples: u64,
    pub density: Vec<f64>,
    pub sample_mean: f64,
    pub sample_sd: f64,
}

impl Histogram {
    /// Bins `values` uniformly over their range.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins < MIN_BINS {
            return Err(invalid(format!("need at least {MIN_BINS} bins, got {bins}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("histogram values must be finite"));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(invalid(format!("empty sample range [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let parts = chunked(
            0,
            values.len() as u64,
            || (vec![0u64; bins], Welford::new()),
            |(counts, w), i| {
                let v = values[i as usize];
                let k = (((v - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
                w.push(v);
            },
        );
        let mut counts = vec![0u64; bins];
        let mut moments = Welford::new();
        for (c, w) in &parts {
            for (t, x) in counts.iter_mut().zip(c) {
                *t += x;
            }
            moments.merge(w);
        }
        let n = values.len() as u64;
        let density = counts
            .iter()
            .map(|&c| c as f64 / (n as f64 * width))
            .collect();
        Ok(Self {
            dim: 1,
            lo,
            width,
            counts,
            samples: n,
            density,
            sample_mean: moments.mean(),
            sample_sd: moments.variance().sqrt(),
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width
    }

    /// Binomial standard error of the density in bin `k`.
    pub fn density_stderr(&self, k: usize) -> f64 {
        let n = self.samples as f64;
        let p = self.counts[k] as f64 / n;
        (p * (1.0 - p) / n).sqrt() / self.width
    }

    /// Index of the bin containing `x`, if any.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.lo) / self.width;
        (t >= 0.0 && t < self.bins() as f64).then_some(t as usize)
    }
}

/// Histogram of X^{(n)}(T)_1 over `samples` independent paths.
pub fn terminal_histogram(
    model: &SdeModel,
    n: usize,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<Histogram> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if bins < MIN_BINS {
        return Err(invalid(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    if n == 0 {
        return Err(invalid("step count must be positive"));
    }
    let parts = chunked(
        0,
        samples as u64,
        || (Vec::new(), None::<Error>),
        |(out, failure), i| {
            if failure.is_some() {
                return;
            }
            let r = generate_increments(&SeedSpec::path(seed, i), model.dim(), model.horizon(), n)
                .and_then(|g| euler_maruyama(model, n, &g));
            match r {
                Ok(x) => out.push(x.value[0]),
                Err(e) => *failure = Some(e),
            }
        },
    );
    let mut values = Vec::with_capacity(samples);
    for (v, failure) in parts {
        if let Some(e) = failure {
            return Err(e);
        }
        values.extend(v);
    }
    Histogram::from_values(&values, bins)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnvelope {
    pub big_c: f64,
    pub small_c: f64,
    /// RMS of ln(C g / p) over the fitted bins.
    pub residual: f64,
    pub bins_used: usize,
}

/// g_s(x, y), the N(x, s) density at y.
pub fn gaussian_kernel(s: f64, x: f64, y: f64) -> f64 {
    (-(y - x) * (y - x) / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s).sqrt()
}

/// 401 log-spaced values of c in [0.1, 10].
pub fn default_c_grid() -> Vec<f64> {
    (0..=400).map(|k| 10f64.powf(-1.0 + k as f64 / 200.0)).collect()
}

pub fn fit_gaussian_envelope(hist: &Histogram, x0: f64, horizon: f64) -> Result<GaussianEnvelope> {
    fit_gaussian_envelope_with(hist, x0, horizon, &default_c_grid())
}

/// For each c the smallest admissible C is max_k p_k / g_{cT}(x0, y_k) over
/// bins with at least five counts; returns the c minimising it.
pub fn fit_gaussian_envelope_with(
    hist: &Histogram,
    x0: f64,
    horizon: f64,
    c_grid: &[f64],
) -> Result<GaussianEnvelope> {
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let used: Vec<usize> = (0..hist.bins())
        .filter(|&k| hist.counts[k] >= MIN_BIN_COUNT)
        .collect();
    if used.is_empty() {
        return Err(Error::FitFailure("no bin has at least 5 counts".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &c in c_grid {
        if !(c > 0.0) || !c.is_finite() {
            continue;
        }
        let s = c * horizon;
        let big_c = used
            .iter()
            .map(|&k| hist.density[k] / gaussian_kernel(s, x0, hist.center(k)))
            .fold(0.0, f64::max);
        if big_c.is_finite() && best.is_none_or(|(b, _)| big_c < b) {
            best = Some((big_c, c));
        }
    }
    let Some((big_c, small_c)) = best else {
        return Err(Error::FitFailure(format!(
            "no finite envelope over {} grid values of c (bins used: {})",
            c_grid.len(),
            used.len()
        )));
    };
    let s = small_c * horizon;
    let residual = (used
        .iter()
        .map(|&k| {
            let r = (big_c * gaussian_kernel(s, x0, hist.center(k)) / hist.density[k]).ln();
            r * r
        })
        .sum::<f64>()
        / used.len() as f64)
        .sqrt();
    Ok(GaussianEnvelope {
        big_c,
        small_c,
        residual,
        bins_used: used.len(),
    })
}

/// Qualitative lower bound: every bin whose centre lies within two sample
/// standard deviations of the sample mean is occupied.
pub fn lower_bound_positive(hist: &Histogram) -> bool {
    (0..hist.bins()).all(|k| {
        (hist.center(k) - hist.sample_mean).abs() > 2.0 * hist.sample_sd || hist.counts[k] > 0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_diffusion_density_at_zero() {
        let model = SdeModel::constant(vec![0.0], 1.0, vec![0.0], 1.0).unwrap();
        let h = terminal_histogram(&model, 4, 200_000, 80, 1).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 200_000);
        let k = h.bin_of(0.0).unwrap();
        // bin average of the normal density around the bin centre
        let (a, b) = (h.lo + k as f64 * h.width, h.lo + (k + 1) as f64 * h.width);
        let mut exact = 0.0;
        for j in 0..1000 {
            let y = a + (j as f64 + 0.5) * (b - a) / 1000.0;
            exact += gaussian_kernel(1.0, 0.0, y) / 1000.0;
        }
        assert!((h.density[k] - exact).abs() < 3.0 * h.density_stderr(k));
        let mass: f64 = h.density.iter().sum::<f64>() * h.width;
        assert!((mass - 1.0).abs() < 1e-9);
        assert!(lower_bound_positive(&h));
    }

    #[test]
    fn drift_shifts_the_mean() {
        let model = SdeModel::constant(vec![0.4], 0.5, vec![1.0], 2.0).unwrap();
        let h = terminal_histogram(&model, 8, 20_000, 40, 2).unwrap();
        let se = h.sample_sd / (20_000f64).sqrt();
        assert!((h.sample_mean - 1.8).abs() < 3.0 * se);
    }

    #[test]
    fn input_validation() {
        let model = SdeModel::constant(vec![0.0], 1.0, vec![0.0], 1.0).unwrap();
        assert!(terminal_histogram(&model, 4, 9_999, 40, 1).is_err());
        assert!(terminal_histogram(&model, 4, 10_000, 19, 1).is_err());
        let frozen = SdeModel::constant(vec![0.0], 0.0, vec![0.0], 1.0).unwrap();
        assert!(terminal_histogram(&frozen, 4, 10_000, 40, 1).is_err());
    }

    #[test]
    fn envelope_dominates_fitted_bins() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let h = terminal_histogram(&model, 16, 50_000, 60, 3).unwrap();
        let env = fit_gaussian_envelope(&h, 0.0, 1.0).unwrap();
        for k in 0..h.bins() {
            if h.counts[k] >= MIN_BIN_COUNT {
                let g = gaussian_kernel(env.small_c, 0.0, h.center(k));
                assert!(h.density[k] <= env.big_c * g * (1.0 + 1e-12));
            }
        }
        assert!(env.big_c > 0.0 && env.small_c > 0.0);
    }

    #[test]
    fn exact_normal_envelope_is_tight() {
        let model = SdeModel::constant(vec![0.0], 1.0, vec![0.0], 1.0).unwrap();
        let h = terminal_histogram(&model, 1, 1_000_000, 100, 5).unwrap();
        let env = fit_gaussian_envelope(&h, 0.0, 1.0).unwrap();
        assert!((1.0..=1.2).contains(&env.big_c), "{env:?}");
    }

    #[test]
    fn empty_grid_is_fit_failure() {
        let h = Histogram::from_values(&(0..100).map(f64::from).collect::<Vec<_>>(), 20).unwrap();
        assert!(matches!(
            fit_gaussian_envelope_with(&h, 0.0, 1.0, &[]),
            Err(Error::FitFailure(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn larger_grid_never_worse(seed in 0u64..1000, cut in 1usize..400) {
            let values: Vec<f64> = {
                use rand::Rng;
                use rand_distr::StandardNormal;
                let mut rng = SeedSpec::auxiliary(seed, 0).rng();
                (0..5000).map(|_| rng.sample::<f64, _>(StandardNormal) * 1.3).collect()
            };
            let h = Histogram::from_values(&values, 30).unwrap();
            let full = default_c_grid();
            let a = fit_gaussian_envelope_with(&h, 0.0, 1.0, &full[..cut]).unwrap();
            let b = fit_gaussian_envelope_with(&h, 0.0, 1.0, &full).unwrap();
            prop_assert!(b.big_c <= a.big_c);
            prop_assert_eq!(h.counts.iter().sum::<u64>(), 5000);
        }
    }
}
