//! Cell-centred uniform grids on `[lo, hi]^d` (d = 1 or 2).
//!
//! Cell `i` covers `[lo + i h, lo + (i + 1) h)` and its value is read as
//! constant on the cell, so densities integrate exactly to `sum |v| h^d`.
//! 2D values are row-major with the first coordinate varying fastest.

use std::fmt::Write as _;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dim: usize,
    lo: f64,
    hi: f64,
    spacing: f64,
    cells: usize,
    values: Vec<f64>,
}

fn cell_count(lo: f64, hi: f64, spacing: f64) -> Result<usize> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("degenerate box [{lo}, {hi}]")));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(invalid(format!("spacing must be positive, got {spacing}")));
    }
    let n = ((hi - lo) / spacing).round();
    if n < 1.0 || (n * spacing - (hi - lo)).abs() > 1e-9 * (hi - lo) {
        return Err(invalid(format!(
            "spacing {spacing} does not tile [{lo}, {hi}] into whole cells"
        )));
    }
    Ok(n as usize)
}

impl GridField {
    pub fn new(dim: usize, lo: f64, hi: f64, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        let cells = cell_count(lo, hi, spacing)?;
        let expected = cells.pow(dim as u32);
        if values.len() != expected {
            return Err(invalid(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        Ok(Self {
            dim,
            lo,
            hi,
            spacing,
            cells,
            values,
        })
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(
        dim: usize,
        lo: f64,
        hi: f64,
        spacing: f64,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let cells = cell_count(lo, hi, spacing)?;
        let mut values = Vec::with_capacity(cells.pow(dim as u32));
        match dim {
            1 => {
                for i in 0..cells {
                    values.push(f(&[lo + (i as f64 + 0.5) * spacing]));
                }
            }
            2 => {
                for j in 0..cells {
                    for i in 0..cells {
                        let x = lo + (i as f64 + 0.5) * spacing;
                        let y = lo + (j as f64 + 0.5) * spacing;
                        values.push(f(&[x, y]));
                    }
                }
            }
            _ => return Err(invalid(format!("grid dimension must be 1 or 2, got {dim}"))),
        }
        Self::new(dim, lo, hi, spacing, values)
    }

    pub fn zeros(dim: usize, lo: f64, hi: f64, spacing: f64) -> Result<Self> {
        Self::from_fn(dim, lo, hi, spacing, |_| 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Centre of cell `i` along one axis.
    pub fn axis_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing
    }

    /// Centre of the cell with flat index `idx`.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.axis_center(idx), 0.0]
        } else {
            [
                self.axis_center(idx % self.cells),
                self.axis_center(idx / self.cells),
            ]
        }
    }

    /// Index of the cell along one axis containing `x`; may be negative or
    /// beyond the grid for points outside the box.
    pub fn axis_index(&self, x: f64) -> i64 {
        ((x - self.lo) / self.spacing).floor() as i64
    }

    /// Flat index of the cell containing `x`, if inside the box.
    pub fn cell_index(&self, x: &[f64]) -> Option<usize> {
        let n = self.cells as i64;
        let i = self.axis_index(x[0]);
        if !(0..n).contains(&i) {
            return None;
        }
        if self.dim == 1 {
            return Some(i as usize);
        }
        let j = self.axis_index(x[1]);
        if !(0..n).contains(&j) {
            return None;
        }
        Some((j * n + i) as usize)
    }

    /// Piecewise-constant value at `x`; zero outside the box.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.cell_index(x).map_or(0.0, |k| self.values[k])
    }

    /// sum |v| h^d.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_volume()
    }

    /// Averages 2 (or 2 x 2) blocks of cells; `None` for an odd cell count.
    pub fn coarsen2(&self) -> Option<GridField> {
        if !self.cells.is_multiple_of(2) || self.cells < 2 {
            return None;
        }
        let nc = self.cells / 2;
        let n = self.cells;
        let values = match self.dim {
            1 => (0..nc)
                .map(|i| 0.5 * (self.values[2 * i] + self.values[2 * i + 1]))
                .collect(),
            _ => {
                let mut out = Vec::with_capacity(nc * nc);
                for j in 0..nc {
                    for i in 0..nc {
                        let a = self.values[(2 * j) * n + 2 * i];
                        let b = self.values[(2 * j) * n + 2 * i + 1];
                        let c = self.values[(2 * j + 1) * n + 2 * i];
                        let d = self.values[(2 * j + 1) * n + 2 * i + 1];
                        out.push(0.25 * (a + b + c + d));
                    }
                }
                out
            }
        };
        Some(GridField {
            dim: self.dim,
            lo: self.lo,
            hi: self.hi,
            spacing: 2.0 * self.spacing,
            cells: nc,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// CSV form: a `dim,lo,hi,spacing` header row, its values, then one node value per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 20 + 64);
        s.push_str("dim,lo,hi,spacing\n");
        let _ = writeln!(s, "{},{},{},{}", self.dim, self.lo, self.hi, self.spacing);
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| invalid("empty grid CSV"))?;
        if header.trim() != "dim,lo,hi,spacing" {
            return Err(invalid(format!("unexpected grid header {header:?}")));
        }
        let meta = lines.next().ok_or_else(|| invalid("missing grid metadata row"))?;
        let parts: Vec<&str> = meta.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(invalid(format!("metadata row needs 4 fields, got {meta:?}")));
        }
        let dim: usize = parts[0]
            .parse()
            .map_err(|e| invalid(format!("bad dim {:?}: {e}", parts[0])))?;
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| invalid(format!("bad number {s:?}: {e}")))
        };
        let (lo, hi, spacing) = (num(parts[1])?, num(parts[2])?, num(parts[3])?);
        let values = lines.map(|l| num(l.trim())).collect::<Result<Vec<f64>>>()?;
        Self::new(dim, lo, hi, spacing, values)
    }
}

/// A point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Locally finite nonnegative measure: atoms plus a grid density.
/// Atoms are supported in one dimension only.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    density: Option<GridField>,
    total_mass: f64,
}

impl GridMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>, density: Option<GridField>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("measure dimension must be 1 or 2, got {dim}")));
        }
        if dim == 2 && !atoms.is_empty() {
            return Err(invalid("atoms are only supported for one-dimensional measures"));
        }
        for a in &atoms {
            if a.location.len() != dim || a.location.iter().any(|v| !v.is_finite()) {
                return Err(invalid("atom location has the wrong dimension or is not finite"));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(invalid(format!("atom mass must be positive, got {}", a.mass)));
            }
        }
        if let Some(d) = &density {
            if d.dim() != dim {
                return Err(invalid("density dimension does not match measure dimension"));
            }
        }
        let total_mass = atoms.iter().map(|a| a.mass).sum::<f64>()
            + density.as_ref().map_or(0.0, GridField::total_mass);
        Ok(Self {
            dim,
            atoms,
            density,
            total_mass,
        })
    }

    /// Atoms on the real line from `(location, mass)` pairs.
    pub fn atoms_1d(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            1,
            atoms
                .iter()
                .map(|&(x, m)| Atom {
                    location: vec![x],
                    mass: m,
                })
                .collect(),
            None,
        )
    }

    pub fn from_density(density: GridField) -> Result<Self> {
        Self::new(density.dim(), Vec::new(), Some(density))
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&GridField> {
        self.density.as_ref()
    }

    /// |nu|(R^d).
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        Self::new(
            self.dim,
            self.atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    mass: a.mass * c,
                })
                .collect(),
            self.density.as_ref().map(|d| d.map(|v| v * c)),
        )
    }

    /// nu_1 + nu_2; densities must live on the same grid.
    pub fn sum(&self, other: &GridMeasure) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid("cannot add measures of different dimension"));
        }
        let density = match (&self.density, &other.density) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                if a.lo() != b.lo() || a.hi() != b.hi() || a.spacing() != b.spacing() {
                    return Err(invalid("densities live on different grids"));
                }
                Some(GridField {
                    values: a
                        .values()
                        .iter()
                        .zip(b.values())
                        .map(|(x, y)| x.abs() + y.abs())
                        .collect(),
                    ..a.clone()
                })
            }
        };
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Self::new(self.dim, atoms, density)
    }
}
