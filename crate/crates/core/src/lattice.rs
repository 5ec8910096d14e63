//! Truncated space-time lattice and real fields sampled on it.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::problem::{Config, ProblemSpec};

/// Lattice on `[0, T] x [-L, L]`. Cells are `[-L + j dx, -L + (j+1) dx]`;
/// fields are sampled at cell centers. `nx` is even so `x = 0` is a cell boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub half_width: f64,
    pub nx: usize,
    pub t_final: f64,
    pub nt: usize,
}

/// Fraction of the L2 mass of `u0` and `f` that must sit in the central half-window.
pub const TRUNCATION_MASS: f64 = 0.999;

impl LatticeGrid {
    pub fn new(half_width: f64, nx: usize, t_final: f64, nt: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(LabError::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if nx < 4 || !nx.is_multiple_of(2) {
            return Err(LabError::InvalidGrid(format!("nx must be even and >= 4, got {nx}")));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(LabError::InvalidGrid(format!("T must be positive, got {t_final}")));
        }
        if nt == 0 {
            return Err(LabError::InvalidGrid("nt must be >= 1".into()));
        }
        Ok(LatticeGrid { half_width, nx, t_final, nt })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        LatticeGrid::new(
            config.get_f64("domain.half_width")?,
            config.get_usize("grid.nx")?,
            config.get_f64("time.T")?,
            config.get_usize("grid.nt")?,
        )
    }

    /// Grid for a spec; fails if the truncation window is too small for `u0` or `f`.
    pub fn for_spec(spec: &ProblemSpec, half_width: f64, nx: usize, t_final: f64, nt: usize) -> Result<Self> {
        let g = LatticeGrid::new(half_width, nx, t_final, nt)?;
        g.check_truncation(spec)?;
        Ok(g)
    }

    pub fn check_truncation(&self, spec: &ProblemSpec) -> Result<()> {
        let a = 0.5 * self.half_width;
        for (name, p) in [("u0", &spec.u0), ("f", &spec.f)] {
            let frac = p.l2_mass_fraction(a);
            if frac < TRUNCATION_MASS {
                return Err(LabError::InvalidGrid(format!(
                    "{name} keeps only {:.5} of its L2 mass inside [-{a}, {a}]; widen the domain",
                    frac
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    /// Center of cell `j`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.dx()
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    /// Index of the first cell right of the origin.
    #[inline]
    pub fn origin_cell(&self) -> usize {
        self.nx / 2
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Time index for a lattice time, if `t` is within round-off of one.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let k = t / self.dt();
        let n = k.round();
        if (k - n).abs() > 1e-6 || n < 0.0 || n as usize > self.nt {
            return Err(LabError::InvalidArgument(format!("time {t} is not a lattice time (dt = {})", self.dt())));
        }
        Ok(n as usize)
    }

    /// Cell containing `x`, if inside the window.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let k = ((x + self.half_width) / self.dx()).floor();
        if k < 0.0 || k as usize >= self.nx {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Cell whose center is nearest `x` (clamped to the window).
    pub fn nearest_cell(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.dx() - 0.5).round();
        k.clamp(0.0, (self.nx - 1) as f64) as usize
    }

    /// Cells whose centers lie in the central half-window `[-L/2, L/2]`.
    pub fn central_cells(&self) -> std::ops::Range<usize> {
        let a = 0.5 * self.half_width;
        let lo = (0..self.nx).find(|&j| self.x(j) >= -a).unwrap_or(0);
        let hi = (0..self.nx).rev().find(|&j| self.x(j) <= a).unwrap_or(self.nx - 1);
        lo..hi + 1
    }

    /// Same window with `fx` times more cells and `ft` times more steps.
    pub fn refined(&self, fx: usize, ft: usize) -> LatticeGrid {
        LatticeGrid { nx: self.nx * fx, nt: self.nt * ft, ..*self }
    }

    pub fn summary(&self) -> String {
        format!(
            "L={} nx={} dx={:.6e} T={} nt={} dt={:.6e}",
            self.half_width,
            self.nx,
            self.dx(),
            self.t_final,
            self.nt,
            self.dt()
        )
    }
}

/// A real field on a set of time slices of a lattice. Values are row-major:
/// one row of `nx` entries per listed time index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: LatticeGrid,
    time_indices: Vec<usize>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn with_capacity(grid: LatticeGrid, slices: usize) -> Self {
        ScalarField {
            grid,
            time_indices: Vec::with_capacity(slices),
            values: Vec::with_capacity(slices * grid.nx),
        }
    }

    pub fn from_slice(grid: LatticeGrid, n: usize, values: Vec<f64>) -> Result<Self> {
        let mut f = ScalarField::with_capacity(grid, 1);
        f.push_slice(n, &values)?;
        Ok(f)
    }

    pub fn from_rows(grid: LatticeGrid, time_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if values.len() != time_indices.len() * grid.nx {
            return Err(LabError::Mismatch(format!(
                "{} values for {} slices of {} cells",
                values.len(),
                time_indices.len(),
                grid.nx
            )));
        }
        if let Some(&n) = time_indices.iter().find(|&&n| n > grid.nt) {
            return Err(LabError::IndexOutOfRange(format!("time index {n} > nt = {}", grid.nt)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("field contains non-finite entries".into()));
        }
        Ok(ScalarField { grid, time_indices, values })
    }

    pub fn push_slice(&mut self, n: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.grid.nx {
            return Err(LabError::Mismatch(format!("row of {} cells, grid has {}", row.len(), self.grid.nx)));
        }
        if n > self.grid.nt {
            return Err(LabError::IndexOutOfRange(format!("time index {n} > nt = {}", self.grid.nt)));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!("slice {n} contains non-finite entries")));
        }
        self.time_indices.push(n);
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn time_indices(&self) -> &[usize] {
        &self.time_indices
    }

    pub fn num_slices(&self) -> usize {
        self.time_indices.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row at position `k` of the slice list.
    pub fn row(&self, k: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[k * nx..(k + 1) * nx]
    }

    /// Slice at lattice time index `n`, if recorded.
    pub fn slice(&self, n: usize) -> Option<&[f64]> {
        self.position(n).map(|k| self.row(k))
    }

    pub fn position(&self, n: usize) -> Option<usize> {
        // full trajectories store slice n at position n
        if self.time_indices.get(n) == Some(&n) {
            return Some(n);
        }
        self.time_indices.iter().position(|&m| m == n)
    }

    pub fn last(&self) -> Option<&[f64]> {
        if self.time_indices.is_empty() {
            None
        } else {
            Some(self.row(self.time_indices.len() - 1))
        }
    }

    /// Keep only the listed time indices (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Result<ScalarField> {
        let mut out = ScalarField::with_capacity(self.grid, indices.len());
        for &n in indices {
            let row = self
                .slice(n)
                .ok_or_else(|| LabError::IndexOutOfRange(format!("slice {n} not recorded")))?;
            out.time_indices.push(n);
            out.values.extend_from_slice(row);
        }
        Ok(out)
    }

    /// Apply `op` row by row, producing a field on the same slices.
    pub fn map_rows<F>(&self, mut op: F) -> Result<ScalarField>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
    {
        let mut out = ScalarField::with_capacity(self.grid, self.num_slices());
        for (k, &n) in self.time_indices.iter().enumerate() {
            let row = op(n, self.row(k))?;
            out.push_slice(n, &row)?;
        }
        Ok(out)
    }
}
