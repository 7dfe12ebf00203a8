//! Node-wise quadrature of the fractional operator
//! G_{s,p} f(x) = (int |f(x) - f(y)|^p / |x - y|^{d + sp} dy)^{1/p}.
//!
//! The own cell is excluded (every other node is at least h away). Outside
//! the box f vanishes, so that part of the integral is |f(x)|^p times the
//! exact tail of the kernel.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::randomkit::par_map;

use super::grid::GridField;

/// Minimum cells per axis kept by the refinement ladder.
const LADDER_MIN_CELLS: usize = 16;
/// Growth of max G^p across the ladder that raises the divergence flag.
const DIVERGENCE_GROWTH: f64 = 10.0;
const TAIL_ANGLES: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    pub spacing: f64,
    /// Largest value of G^p on this grid.
    pub max_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GspResult {
    pub field: GridField,
    pub ladder: Vec<LadderRung>,
    /// Set when max G^p grows more than tenfold from the coarsest rung to the
    /// finest, the signature of a seminorm that does not converge.
    pub divergence_flag: bool,
}

fn check(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("s must lie in (0, 1), got {s}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

/// G^p at every cell centre.
pub fn gsp_power(f: &GridField, s: f64, p: f64) -> Result<GridField> {
    check(s, p)?;
    let n = f.cells();
    let h = f.spacing();
    let sp = s * p;
    let d = f.dim() as i32;
    let vals = f.values();
    let (lo, hi) = (f.lo(), f.hi());
    let out = match d {
        1 => {
            let w: Vec<f64> = (0..n)
                .map(|m| {
                    if m == 0 {
                        0.0
                    } else {
                        (m as f64 * h).powf(-(1.0 + sp)) * h
                    }
                })
                .collect();
            par_map(n, || (), |_, i| {
                let fi = vals[i];
                let mut acc = 0.0;
                for (j, &fj) in vals.iter().enumerate() {
                    if j != i {
                        acc += abs_pow(fi - fj, p) * w[i.abs_diff(j)];
                    }
                }
                if fi != 0.0 {
                    let x = f.axis_center(i);
                    let tail = ((x - lo).powf(-sp) + (hi - x).powf(-sp)) / sp;
                    acc += abs_pow(fi, p) * tail;
                }
                acc
            })
        }
        _ => {
            let area = h * h;
            let mut w = vec![0.0; n * n];
            for dj in 0..n {
                for di in 0..n {
                    if di + dj > 0 {
                        let r = h * ((di * di + dj * dj) as f64).sqrt();
                        w[dj * n + di] = r.powf(-(2.0 + sp)) * area;
                    }
                }
            }
            par_map(n * n, || (), |_, k| {
                let (i, j) = (k % n, k / n);
                let fi = vals[k];
                let mut acc = 0.0;
                for jj in 0..n {
                    let row = &vals[jj * n..(jj + 1) * n];
                    let wrow = &w[j.abs_diff(jj) * n..];
                    for (ii, &fj) in row.iter().enumerate() {
                        let diff = fi - fj;
                        if diff != 0.0 {
                            acc += abs_pow(diff, p) * wrow[i.abs_diff(ii)];
                        }
                    }
                }
                if fi != 0.0 {
                    let c = f.center(k);
                    acc += abs_pow(fi, p) * tail_2d(c, lo, hi, sp);
                }
                acc
            })
        }
    };
    GridField::new(f.dim(), lo, hi, h, out)
}

/// int over |y| outside [lo, hi]^2 of |x - y|^{-(2 + sp)} dy, in polar form
/// int_0^{2 pi} rho(theta)^{-sp} / sp d theta with rho the exit distance.
fn tail_2d(x: [f64; 2], lo: f64, hi: f64, sp: f64) -> f64 {
    let dtheta = std::f64::consts::TAU / TAIL_ANGLES as f64;
    let exit = |pos: f64, c: f64| {
        if c > 0.0 {
            (hi - pos) / c
        } else if c < 0.0 {
            (lo - pos) / c
        } else {
            f64::INFINITY
        }
    };
    (0..TAIL_ANGLES)
        .map(|k| {
            let th = (k as f64 + 0.5) * dtheta;
            let rho = exit(x[0], th.cos()).min(exit(x[1], th.sin()));
            rho.powf(-sp) / sp
        })
        .sum::<f64>()
        * dtheta
}

/// G_{s,p} f on the grid, with a refinement-ladder divergence check.
pub fn gsp_field(f: &GridField, s: f64, p: f64) -> Result<GspResult> {
    check(s, p)?;
    let power = gsp_power(f, s, p)?;
    let max_of = |g: &GridField| g.values().iter().cloned().fold(0.0, f64::max);
    let mut ladder = vec![LadderRung {
        spacing: f.spacing(),
        max_power: max_of(&power),
    }];
    let mut current = f.clone();
    while current.cells() / 2 >= LADDER_MIN_CELLS {
        let Some(coarse) = current.coarsen2() else {
            break;
        };
        let gp = gsp_power(&coarse, s, p)?;
        ladder.push(LadderRung {
            spacing: coarse.spacing(),
            max_power: max_of(&gp),
        });
        current = coarse;
    }
    let finest = ladder[0].max_power;
    let coarsest = ladder[ladder.len() - 1].max_power;
    let divergence_flag = ladder.len() > 1
        && finest > 0.0
        && (coarsest == 0.0 || finest / coarsest > DIVERGENCE_GROWTH);
    let inv = 1.0 / p;
    Ok(GspResult {
        field: power.map(|v| v.max(0.0).powf(inv)),
        ladder,
        divergence_flag,
    })
}
