//! Weak-type (1,1) check: Leb{M nu > lambda} against 5^d |nu| / lambda.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::randomkit::par_map;
use crate::stats::quantile;

use super::grid::GridMeasure;
use super::operator::MaximalOperator;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalReport {
    pub lambda_grid: Vec<f64>,
    pub superlevel_measures: Vec<f64>,
    pub bound_values: Vec<f64>,
    pub violations: usize,
    /// Set when a 2D superlevel set may reach past the padded lattice, in
    /// which case the measured Lebesgue measure is a lower bound.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct WeakTypeOptions {
    /// Midpoint samples per lambda in 1D.
    pub resolution: usize,
    /// Cap on 2D padding, in multiples of the box width.
    pub max_padding_factor: usize,
}

impl Default for WeakTypeOptions {
    fn default() -> Self {
        Self {
            resolution: 20_000,
            max_padding_factor: 4,
        }
    }
}

pub fn weak_type_check(nu: &GridMeasure, lambdas: &[f64]) -> Result<MaximalReport> {
    weak_type_check_with(nu, lambdas, &WeakTypeOptions::default())
}

pub fn weak_type_check_with(
    nu: &GridMeasure,
    lambdas: &[f64],
    opts: &WeakTypeOptions,
) -> Result<MaximalReport> {
    if lambdas.is_empty() {
        return Err(invalid("lambda grid is empty"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(invalid("lambda values must be positive and finite"));
    }
    if opts.resolution == 0 {
        return Err(invalid("resolution must be positive"));
    }
    let a1 = 5f64.powi(nu.dim() as i32);
    let mass = nu.total_mass();
    let bound_values: Vec<f64> = lambdas.iter().map(|l| a1 * mass / l).collect();
    let (superlevel_measures, truncated) = if mass == 0.0 {
        (vec![0.0; lambdas.len()], false)
    } else if nu.dim() == 1 {
        (superlevel_1d(nu, lambdas, opts.resolution), false)
    } else {
        superlevel_2d(nu, lambdas, opts.max_padding_factor)
    };
    let violations = superlevel_measures
        .iter()
        .zip(&bound_values)
        .filter(|(m, b)| m > b)
        .count();
    Ok(MaximalReport {
        lambda_grid: lambdas.to_vec(),
        superlevel_measures,
        bound_values,
        violations,
        truncated,
    })
}

/// Closed interval hull of the support of a 1D measure.
fn support_hull_1d(nu: &GridMeasure) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in nu.atoms() {
        lo = lo.min(a.location[0]);
        hi = hi.max(a.location[0]);
    }
    if let Some(d) = nu.density() {
        for (k, v) in d.values().iter().enumerate() {
            if *v != 0.0 {
                lo = lo.min(d.lo() + k as f64 * d.spacing());
                hi = hi.max(d.lo() + (k + 1) as f64 * d.spacing());
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn superlevel_1d(nu: &GridMeasure, lambdas: &[f64], resolution: usize) -> Vec<f64> {
    let op = MaximalOperator::new(nu);
    let Some((lo, hi)) = support_hull_1d(nu) else {
        return vec![0.0; lambdas.len()];
    };
    let mass = nu.total_mass();
    lambdas
        .iter()
        .map(|&lambda| {
            // M nu(x) <= |nu| / (2 dist(x, supp)), so the superlevel set lies
            // inside this window.
            let reach = mass / (2.0 * lambda);
            let (a, b) = (lo - reach, hi + reach);
            let dx = (b - a) / resolution as f64;
            let hits: Vec<bool> = par_map(resolution, || (), |_, k| {
                let x = a + (k as f64 + 0.5) * dx;
                op.eval(&[x], f64::INFINITY).unwrap_or(0.0) > lambda
            });
            hits.iter().filter(|h| **h).count() as f64 * dx
        })
        .collect()
}

fn superlevel_2d(nu: &GridMeasure, lambdas: &[f64], max_padding_factor: usize) -> (Vec<f64>, bool) {
    let Some(d) = nu.density() else {
        return (vec![0.0; lambdas.len()], false);
    };
    let n = d.cells() as i64;
    let h = d.spacing();
    let mass = nu.total_mass();
    let lambda_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    // Beyond lattice distance r from every support cell, a digital ball that
    // reaches the support holds more than N(r^2) cells, so M <= |nu| / (N h^2).
    let needed = mass / (lambda_min * h * h);
    let mut r: i64 = 0;
    loop {
        let count = lattice_count(r * r);
        if count as f64 >= needed {
            break;
        }
        r += 1;
        if r > max_padding_factor as i64 * n {
            break;
        }
    }
    let cap = max_padding_factor as i64 * n;
    let truncated = r > cap;
    let pad = r.min(cap);
    let mut points = Vec::with_capacity(((n + 2 * pad) * (n + 2 * pad)) as usize);
    for j in -pad..n + pad {
        for i in -pad..n + pad {
            points.push((i, j));
        }
    }
    let op = MaximalOperator::new(nu);
    let m = op.eval_lattice_2d(&points, f64::INFINITY);
    let measures = lambdas
        .iter()
        .map(|&l| m.iter().filter(|v| **v > l).count() as f64 * h * h)
        .collect();
    (measures, truncated)
}

fn lattice_count(k: i64) -> u64 {
    let r = (k as f64).sqrt().floor() as i64;
    (-r..=r)
        .map(|i| 2 * ((k - i * i) as f64).sqrt().floor() as u64 + 1)
        .sum()
}

/// Lambda values at the given quantiles of M nu, sampled on the support hull
/// widened by half its width, or by 1/2 for a single atom (1D), or on the box
/// cells (2D).
pub fn percentile_lambdas(nu: &GridMeasure, probs: &[f64], samples: usize) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let op = MaximalOperator::new(nu);
    let values: Vec<f64> = if nu.dim() == 1 {
        let Some((lo, hi)) = support_hull_1d(nu) else {
            return Err(invalid("measure is zero"));
        };
        let pad = if hi > lo { 0.5 * (hi - lo) } else { 0.5 };
        let (lo, hi) = (lo - pad, hi + pad);
        let dx = (hi - lo) / samples as f64;
        par_map(samples, || (), |_, k| {
            op.eval(&[lo + (k as f64 + 0.5) * dx], f64::INFINITY)
                .unwrap_or(0.0)
        })
    } else {
        let d = nu.density().ok_or_else(|| invalid("measure is zero"))?;
        op.on_grid(d, f64::INFINITY)?.values().to_vec()
    };
    let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(invalid("no finite maximal values"));
    }
    Ok(probs.iter().map(|&p| quantile(&finite, p)).collect())
}
