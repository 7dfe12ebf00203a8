//! Evaluation of M_R nu at single points.
//!
//! In 1D the supremum is exact: |nu|(B(x;s))/(2s) is a ratio of a piecewise
//! linear function of s (with jumps at atoms) over 2s, so it is monotone
//! between breakpoints and the sup sits at an atom distance, a cell-edge
//! distance, R itself, or the s -> 0 limit.
//!
//! In 2D balls are digital: the cells whose centres lie within s of the query
//! lattice point, normalised by their count. Off-lattice queries are snapped
//! to the centre of the cell containing them.

use crate::error::{invalid, Result};

use super::grid::{GridField, GridMeasure};

#[derive(Debug, Clone)]
pub struct MaximalOperator {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    One(Line),
    Two(Plane),
}

#[derive(Debug, Clone)]
struct Line {
    atom_locs: Vec<f64>,
    // atom_prefix[k] = mass of the first k atoms
    atom_prefix: Vec<f64>,
    density: Option<LineDensity>,
}

#[derive(Debug, Clone)]
struct LineDensity {
    lo: f64,
    h: f64,
    abs: Vec<f64>,
    // cdf[k] = |density| mass of the first k cells
    cdf: Vec<f64>,
}

impl LineDensity {
    fn cdf_at(&self, y: f64) -> f64 {
        let n = self.abs.len();
        let t = (y - self.lo) / self.h;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= n as f64 {
            return self.cdf[n];
        }
        let k = t.floor() as usize;
        self.cdf[k] + (t - k as f64) * self.h * self.abs[k]
    }

    fn local_value(&self, x: f64) -> f64 {
        let n = self.abs.len() as i64;
        let t = (x - self.lo) / self.h;
        let right = t.floor() as i64;
        let left = t.ceil() as i64 - 1;
        let get = |k: i64| {
            if (0..n).contains(&k) {
                self.abs[k as usize]
            } else {
                0.0
            }
        };
        0.5 * (get(left) + get(right))
    }
}

impl Line {
    fn mass_closed(&self, a: f64, b: f64) -> f64 {
        // x +- |l - x| can round to just inside l; keep atoms at the
        // boundary of a closed ball inside it.
        let tol = 4.0 * f64::EPSILON * (a.abs() + b.abs());
        let i = self.atom_locs.partition_point(|&l| l < a - tol);
        let j = self.atom_locs.partition_point(|&l| l <= b + tol);
        let atoms = if j > i {
            self.atom_prefix[j] - self.atom_prefix[i]
        } else {
            0.0
        };
        let dens = self
            .density
            .as_ref()
            .map_or(0.0, |d| (d.cdf_at(b) - d.cdf_at(a)).max(0.0));
        atoms + dens
    }

    fn eval(&self, x: f64, r: f64) -> f64 {
        // An atom sitting exactly at x makes every small ball infinitely dense.
        let at = self.atom_locs.partition_point(|&l| l < x);
        if at < self.atom_locs.len() && self.atom_locs[at] == x {
            return f64::INFINITY;
        }
        let mut best = self.density.as_ref().map_or(0.0, |d| d.local_value(x));
        let mut consider = |s: f64| {
            if s > 0.0 && s <= r {
                let v = self.mass_closed(x - s, x + s) / (2.0 * s);
                if v > best {
                    best = v;
                }
            }
        };
        for &l in &self.atom_locs {
            consider((l - x).abs());
        }
        if let Some(d) = &self.density {
            let n = d.abs.len() as i64;
            let (k_lo, k_hi) = if r.is_finite() {
                (
                    (((x - r - d.lo) / d.h).floor() as i64).max(0),
                    (((x + r - d.lo) / d.h).ceil() as i64).min(n),
                )
            } else {
                (0, n)
            };
            for k in k_lo..=k_hi {
                consider((d.lo + k as f64 * d.h - x).abs());
            }
        }
        if r.is_finite() {
            consider(r);
        }
        best
    }
}

#[derive(Debug, Clone)]
struct Plane {
    lo: f64,
    h: f64,
    cells: i64,
    // nonzero cells as (i, j, |value| h^2)
    support: Vec<(i64, i64, f64)>,
    // lattice_count[k] = #{(i, j) in Z^2 : i^2 + j^2 <= k}
    lattice_count: Vec<u64>,
}

fn lattice_counts(k_max: u64) -> Vec<u64> {
    let mut hist = vec![0u64; k_max as usize + 1];
    let r = (k_max as f64).sqrt().floor() as i64 + 1;
    for i in -r..=r {
        for j in -r..=r {
            let k = (i * i + j * j) as u64;
            if k <= k_max {
                hist[k as usize] += 1;
            }
        }
    }
    let mut acc = 0;
    for v in &mut hist {
        acc += *v;
        *v = acc;
    }
    hist
}

impl Plane {
    fn count(&mut self, k: u64) -> u64 {
        if k as usize >= self.lattice_count.len() {
            let grown = (k + 1).max(2 * self.lattice_count.len() as u64);
            self.lattice_count = lattice_counts(grown);
        }
        self.lattice_count[k as usize]
    }

    fn eval_lattice(&self, i0: i64, j0: i64, r: f64, scratch: &mut Vec<(u64, f64)>) -> f64 {
        scratch.clear();
        let k_cap = if r.is_finite() {
            let rc = r / self.h;
            (rc * rc * (1.0 + 1e-12)).floor() as u64
        } else {
            u64::MAX
        };
        for &(i, j, m) in &self.support {
            let (di, dj) = (i - i0, j - j0);
            let k = (di * di + dj * dj) as u64;
            if k <= k_cap {
                scratch.push((k, m));
            }
        }
        if scratch.is_empty() {
            return 0.0;
        }
        scratch.sort_unstable_by_key(|e| e.0);
        let cell_area = self.h * self.h;
        let mut best = 0.0f64;
        let mut mass = 0.0;
        let mut idx = 0;
        while idx < scratch.len() {
            let k = scratch[idx].0;
            while idx < scratch.len() && scratch[idx].0 == k {
                mass += scratch[idx].1;
                idx += 1;
            }
            let n = self.lattice_count[k as usize] as f64;
            best = best.max(mass / (n * cell_area));
        }
        best
    }

    fn ensure_counts(&mut self, i0: i64, j0: i64) {
        let mut k_far = 0u64;
        for &(i, j, _) in &self.support {
            let (di, dj) = (i - i0, j - j0);
            k_far = k_far.max((di * di + dj * dj) as u64);
        }
        self.count(k_far);
    }
}

impl MaximalOperator {
    pub fn new(nu: &GridMeasure) -> Self {
        let inner = match nu.dim() {
            1 => {
                let mut atoms: Vec<(f64, f64)> = nu
                    .atoms()
                    .iter()
                    .map(|a| (a.location[0], a.mass))
                    .collect();
                atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut atom_prefix = Vec::with_capacity(atoms.len() + 1);
                atom_prefix.push(0.0);
                let mut acc = 0.0;
                for a in &atoms {
                    acc += a.1;
                    atom_prefix.push(acc);
                }
                let density = nu.density().map(|d| {
                    let abs: Vec<f64> = d.values().iter().map(|v| v.abs()).collect();
                    let mut cdf = Vec::with_capacity(abs.len() + 1);
                    let mut acc = 0.0;
                    cdf.push(0.0);
                    for v in &abs {
                        acc += v * d.spacing();
                        cdf.push(acc);
                    }
                    LineDensity {
                        lo: d.lo(),
                        h: d.spacing(),
                        abs,
                        cdf,
                    }
                });
                Inner::One(Line {
                    atom_locs: atoms.iter().map(|a| a.0).collect(),
                    atom_prefix,
                    density,
                })
            }
            _ => {
                let (lo, h, cells, support) = match nu.density() {
                    Some(d) => {
                        let n = d.cells();
                        let area = d.cell_volume();
                        let support = d
                            .values()
                            .iter()
                            .enumerate()
                            .filter(|(_, v)| **v != 0.0)
                            .map(|(k, v)| ((k % n) as i64, (k / n) as i64, v.abs() * area))
                            .collect();
                        (d.lo(), d.spacing(), n as i64, support)
                    }
                    None => (0.0, 1.0, 0, Vec::new()),
                };
                let mut plane = Plane {
                    lo,
                    h,
                    cells,
                    support,
                    lattice_count: Vec::new(),
                };
                // enough for any query inside the box
                let diam = 2 * cells * cells + 1;
                plane.count(diam as u64);
                Inner::Two(plane)
            }
        };
        Self { inner }
    }

    pub fn dim(&self) -> usize {
        match self.inner {
            Inner::One(_) => 1,
            Inner::Two(_) => 2,
        }
    }

    /// M_R nu(x); pass `f64::INFINITY` for the unrestricted operator.
    pub fn eval(&self, x: &[f64], r: f64) -> Result<f64> {
        check_query(self.dim(), x, r)?;
        match &self.inner {
            Inner::One(line) => Ok(line.eval(x[0], r)),
            Inner::Two(plane) => {
                let i0 = ((x[0] - plane.lo) / plane.h).floor() as i64;
                let j0 = ((x[1] - plane.lo) / plane.h).floor() as i64;
                let mut scratch = Vec::new();
                if !self.counts_cover(i0, j0) {
                    let mut grown = plane.clone();
                    grown.ensure_counts(i0, j0);
                    return Ok(grown.eval_lattice(i0, j0, r, &mut scratch));
                }
                Ok(plane.eval_lattice(i0, j0, r, &mut scratch))
            }
        }
    }

    fn counts_cover(&self, i0: i64, j0: i64) -> bool {
        match &self.inner {
            Inner::One(_) => true,
            Inner::Two(p) => {
                let n = p.cells;
                (0..n).contains(&i0) && (0..n).contains(&j0)
            }
        }
    }

    /// Evaluates M_R nu at integer lattice offsets of a 2D grid, including
    /// points outside the box. Used by the weak-type check.
    pub(crate) fn eval_lattice_2d(&self, points: &[(i64, i64)], r: f64) -> Vec<f64> {
        let Inner::Two(plane) = &self.inner else {
            return Vec::new();
        };
        let mut plane = plane.clone();
        for &(i, j) in points {
            if !(0..plane.cells).contains(&i) || !(0..plane.cells).contains(&j) {
                plane.ensure_counts(i, j);
            }
        }
        let plane = &plane;
        crate::randomkit::par_map(points.len(), Vec::new, |scratch, k| {
            let (i, j) = points[k];
            plane.eval_lattice(i, j, r, scratch)
        })
    }

    /// M_R nu at every cell centre of `grid`.
    pub fn on_grid(&self, grid: &GridField, r: f64) -> Result<GridField> {
        if grid.dim() != self.dim() {
            return Err(invalid("grid dimension does not match measure"));
        }
        let values = crate::randomkit::par_map(grid.len(), Vec::new, |scratch, k| {
            let c = grid.center(k);
            match &self.inner {
                Inner::One(line) => line.eval(c[0], r),
                Inner::Two(plane) => {
                    let i0 = ((c[0] - plane.lo) / plane.h).floor() as i64;
                    let j0 = ((c[1] - plane.lo) / plane.h).floor() as i64;
                    if self.counts_cover(i0, j0) {
                        plane.eval_lattice(i0, j0, r, scratch)
                    } else {
                        let mut grown = plane.clone();
                        grown.ensure_counts(i0, j0);
                        grown.eval_lattice(i0, j0, r, scratch)
                    }
                }
            }
        });
        GridField::new(grid.dim(), grid.lo(), grid.hi(), grid.spacing(), values)
    }
}

fn check_query(dim: usize, x: &[f64], r: f64) -> Result<()> {
    if x.len() != dim {
        return Err(invalid(format!(
            "query point has dimension {}, measure has {dim}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("query point must be finite"));
    }
    if !(r > 0.0) {
        return Err(invalid(format!("radius bound must be positive, got {r}")));
    }
    Ok(())
}

/// M_R nu(x). `r = None` means no radius restriction.
pub fn maximal_at(nu: &GridMeasure, x: &[f64], r: Option<f64>) -> Result<f64> {
    MaximalOperator::new(nu).eval(x, r.unwrap_or(f64::INFINITY))
}
