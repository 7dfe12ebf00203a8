//! Pointwise estimates |f(x) - f(y)| <= K0 |x - y|^gamma (M_{2|x-y|} mu (x) + M_{2|x-y|} mu (y))
//! with mu = |Df| (gamma = 1) or mu = G_{s,p} f (gamma = s). K0 is fitted as
//! the largest observed ratio.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::randomkit::SeedSpec;

use super::grid::{GridField, GridMeasure};
use super::operator::MaximalOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PointwiseMode {
    Bv,
    Fractional { s: f64, p: f64 },
}

impl PointwiseMode {
    pub fn gamma(&self) -> f64 {
        match self {
            PointwiseMode::Bv => 1.0,
            PointwiseMode::Fractional { s, .. } => *s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairRatio {
    /// Numerator and denominator both vanish.
    Skipped,
    /// Nonzero numerator over a zero denominator.
    Violation,
    Value {
        symmetric: f64,
        /// Ratio using only the smaller of the two maximal values.
        nonsymmetric: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub fitted_k0: f64,
    pub max_nonsymmetric_ratio: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
    pub violations: usize,
}

/// Ratio for one pair given f(x), f(y) and the controlling measure.
pub fn pointwise_ratio(
    fx: f64,
    fy: f64,
    x: &[f64],
    y: &[f64],
    op: &MaximalOperator,
    gamma: f64,
) -> Result<PairRatio> {
    let dist = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let num = (fx - fy).abs();
    if num == 0.0 {
        return Ok(PairRatio::Skipped);
    }
    if dist == 0.0 {
        return Ok(PairRatio::Violation);
    }
    let r = 2.0 * dist;
    let mx = op.eval(x, r)?;
    let my = op.eval(y, r)?;
    let scale = dist.powf(gamma);
    let den = scale * (mx + my);
    if den == 0.0 {
        return Ok(PairRatio::Violation);
    }
    let low = scale * mx.min(my);
    Ok(PairRatio::Value {
        symmetric: num / den,
        nonsymmetric: if low > 0.0 { num / low } else { f64::INFINITY },
    })
}

/// Samples `pair_count` random pairs of distinct cell centres, with
/// separation at most `max_separation` when given.
pub fn pointwise_check(
    f: &GridField,
    control: &GridMeasure,
    pair_count: usize,
    mode: PointwiseMode,
    max_separation: Option<f64>,
    seed: u64,
) -> Result<PointwiseReport> {
    if control.dim() != f.dim() {
        return Err(invalid("field and controlling measure differ in dimension"));
    }
    if let Some(d) = control.density() {
        if d.lo() != f.lo() || d.hi() != f.hi() {
            return Err(invalid("field and controlling density live on different boxes"));
        }
    }
    if let PointwiseMode::Fractional { s, p } = mode {
        if !(s > 0.0 && s < 1.0) || !(p >= 1.0) {
            return Err(invalid("fractional mode needs s in (0, 1) and p >= 1"));
        }
    }
    if pair_count == 0 {
        return Err(invalid("pair_count must be positive"));
    }
    if let Some(m) = max_separation {
        if !(m > 0.0) {
            return Err(invalid("max_separation must be positive"));
        }
    }
    let op = MaximalOperator::new(control);
    let gamma = mode.gamma();
    let mut rng = SeedSpec::auxiliary(seed, 0).rng();
    let n = f.len();
    let cells = f.cells() as i64;
    let reach = max_separation.map(|m| (m / f.spacing()).floor() as i64);
    let mut report = PointwiseReport {
        fitted_k0: 0.0,
        max_nonsymmetric_ratio: 0.0,
        pairs_used: 0,
        pairs_skipped: 0,
        violations: 0,
    };
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < pair_count {
        attempts += 1;
        if attempts > 100 * pair_count + 1000 {
            break;
        }
        let a = rng.random_range(0..n);
        let b = match reach {
            None => rng.random_range(0..n),
            Some(r) => {
                let (i, j) = if f.dim() == 1 {
                    (a as i64, 0)
                } else {
                    ((a % f.cells()) as i64, (a / f.cells()) as i64)
                };
                let bi = i + rng.random_range(-r..=r);
                let bj = if f.dim() == 1 { 0 } else { j + rng.random_range(-r..=r) };
                if !(0..cells).contains(&bi) || !(0..cells).contains(&bj) {
                    continue;
                }
                (bj * cells + bi) as usize
            }
        };
        if a == b {
            continue;
        }
        let (ca, cb) = (f.center(a), f.center(b));
        let (x, y) = (&ca[..f.dim()], &cb[..f.dim()]);
        if let Some(m) = max_separation {
            let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
            if d2.sqrt() > m {
                continue;
            }
        }
        drawn += 1;
        match pointwise_ratio(f.values()[a], f.values()[b], x, y, &op, gamma)? {
            PairRatio::Skipped => report.pairs_skipped += 1,
            PairRatio::Violation => report.violations += 1,
            PairRatio::Value {
                symmetric,
                nonsymmetric,
            } => {
                report.pairs_used += 1;
                report.fitted_k0 = report.fitted_k0.max(symmetric);
                report.max_nonsymmetric_ratio = report.max_nonsymmetric_ratio.max(nonsymmetric);
            }
        }
    }
    if report.pairs_used == 0 && report.violations == 0 {
        return Err(Error::InsufficientData(
            "every sampled pair was degenerate".into(),
        ));
    }
    Ok(report)
}

/// |grad (f * phi_sigma)| on the grid, phi_sigma the Gaussian of width
/// `sigma` truncated at four widths, f extended by zero outside the box.
pub fn mollified_gradient(f: &GridField, sigma: f64) -> Result<GridField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("mollifier width must be positive"));
    }
    let h = f.spacing();
    let n = f.cells();
    let half = (4.0 * sigma / h).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let t = k as f64 * h / sigma;
            (-0.5 * t * t).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= norm);
    let conv_line = |src: &[f64], dst: &mut [f64]| {
        for (i, out) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let j = i as i64 + t as i64 - half;
                if (0..n as i64).contains(&j) {
                    acc += w * src[j as usize];
                }
            }
            *out = acc;
        }
    };
    let grad_1d = |v: &[f64], i: usize| {
        let at = |k: i64| {
            if (0..n as i64).contains(&k) {
                v[k as usize]
            } else {
                0.0
            }
        };
        (at(i as i64 + 1) - at(i as i64 - 1)) / (2.0 * h)
    };
    let values = match f.dim() {
        1 => {
            let mut smooth = vec![0.0; n];
            conv_line(f.values(), &mut smooth);
            (0..n).map(|i| grad_1d(&smooth, i).abs()).collect()
        }
        _ => {
            let mut rows = vec![0.0; n * n];
            for j in 0..n {
                conv_line(&f.values()[j * n..(j + 1) * n], &mut rows[j * n..(j + 1) * n]);
            }
            let mut smooth = vec![0.0; n * n];
            let mut col = vec![0.0; n];
            let mut out = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    col[j] = rows[j * n + i];
                }
                conv_line(&col, &mut out);
                for j in 0..n {
                    smooth[j * n + i] = out[j];
                }
            }
            let mut g = vec![0.0; n * n];
            let mut column = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    column[j] = smooth[j * n + i];
                }
                for j in 0..n {
                    let gx = grad_1d(&smooth[j * n..(j + 1) * n], i);
                    let gy = grad_1d(&column, j);
                    g[j * n + i] = gx.hypot(gy);
                }
            }
            g
        }
    };
    GridField::new(f.dim(), f.lo(), f.hi(), h, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_pairs_bounded_by_half() {
        let nu = GridMeasure::atoms_1d(&[(0.0, 1.0)]).unwrap();
        let op = MaximalOperator::new(&nu);
        for &(x, y) in &[(-1.0, 1.0), (-0.01, 3.0), (-2.5, 0.125)] {
            let r = pointwise_ratio(0.0, 1.0, &[x], &[y], &op, 1.0).unwrap();
            let PairRatio::Value { symmetric, .. } = r else {
                panic!("unexpected {r:?}");
            };
            let (a, b) = (-x, y);
            let expected = 2.0 * a * b / ((a + b) * (a + b));
            assert!((symmetric - expected).abs() < 1e-12);
            assert!(symmetric <= 0.5);
        }
        let same = pointwise_ratio(1.0, 1.0, &[0.5], &[1.0], &op, 1.0).unwrap();
        assert_eq!(same, PairRatio::Skipped);
    }

    #[test]
    fn zero_control_is_violation() {
        let op = MaximalOperator::new(&GridMeasure::zero(1).unwrap());
        let r = pointwise_ratio(0.0, 1.0, &[0.0], &[1.0], &op, 1.0).unwrap();
        assert_eq!(r, PairRatio::Violation);
    }

    #[test]
    fn perimeter_of_mollified_disc() {
        let h = 1.0 / 64.0;
        let f = GridField::from_fn(2, -1.5, 1.5, h, |x| {
            if x[0] * x[0] + x[1] * x[1] < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let g = mollified_gradient(&f, 2.0 * h).unwrap();
        let perim = g.total_mass();
        assert!((perim - std::f64::consts::TAU).abs() < 0.03 * std::f64::consts::TAU, "{perim}");
    }

    #[test]
    fn mollified_box_has_two_unit_jumps() {
        let f = GridField::from_fn(1, -2.0, 2.0, 1.0 / 128.0, |x| {
            if x[0].abs() <= 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let g = mollified_gradient(&f, 2.0 / 128.0).unwrap();
        assert!((g.total_mass() - 2.0).abs() < 1e-9, "{}", g.total_mass());
    }

    #[test]
    fn all_degenerate_pairs_error() {
        let f = GridField::zeros(1, 0.0, 1.0, 0.25).unwrap();
        let nu = GridMeasure::zero(1).unwrap();
        let err = pointwise_check(&f, &nu, 10, PointwiseMode::Bv, None, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }
}
