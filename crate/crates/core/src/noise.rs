//! Brownian-sheet increments on the lattice.
//!
//! Cell `(n, j)` covers `[t_n, t_{n+1}] x [x_j - dx/2, x_j + dx/2]` and carries an
//! independent `N(0, dt dx)` increment. The generator is counter-based: the
//! value of any cell is a pure function of `(seed, n, j)` (ChaCha8 with the time
//! index as stream id and the cell index as word position), so the solver, the
//! Feynman-Kac grid and Monte Carlo workers all see one realization of `W`.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::lattice::LatticeGrid;

pub const NOISE_MAGIC: &[u8] = b"BSHEET1";

/// Two 64-bit draws per cell: four 32-bit ChaCha words.
const WORDS_PER_CELL: u128 = 4;

#[inline]
fn box_muller(a: u64, b: u64) -> f64 {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal for counter `(seed, stream, index)`.
pub fn counter_normal(seed: u64, stream: u64, index: u64) -> f64 {
    let mut rng = row_rng(seed, stream);
    rng.set_word_pos(index as u128 * WORDS_PER_CELL);
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

fn fill_normals(seed: u64, stream: u64, out: &mut [f64], scale: f64) {
    let mut rng = row_rng(seed, stream);
    for v in out.iter_mut() {
        let a = rng.next_u64();
        let b = rng.next_u64();
        *v = scale * box_muller(a, b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    grid: LatticeGrid,
    seed: u64,
    increments: Vec<f64>,
}

impl NoiseField {
    /// Samples all `nt x nx` increments for `seed`.
    pub fn sample(grid: LatticeGrid, seed: u64) -> Self {
        let nx = grid.nx;
        let scale = (grid.dt() * grid.dx()).sqrt();
        let mut increments = vec![0.0; nx * grid.nt];
        for (n, row) in increments.chunks_mut(nx).enumerate() {
            fill_normals(seed, n as u64, row, scale);
        }
        NoiseField { grid, seed, increments }
    }

    /// All-zero increments (sigma-free runs that still need a noise argument).
    pub fn zeros(grid: LatticeGrid) -> Self {
        NoiseField { grid, seed: 0, increments: vec![0.0; grid.nx * grid.nt] }
    }

    pub fn from_increments(grid: LatticeGrid, seed: u64, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.nx * grid.nt {
            return Err(LabError::Mismatch(format!(
                "{} increments for a {}x{} lattice",
                increments.len(),
                grid.nt,
                grid.nx
            )));
        }
        Ok(NoiseField { grid, seed, increments })
    }

    /// Regenerates the single increment `dW[n][j]` without sampling the rest.
    pub fn cell_value(grid: &LatticeGrid, seed: u64, n: usize, j: usize) -> f64 {
        (grid.dt() * grid.dx()).sqrt() * counter_normal(seed, n as u64, j as u64)
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    #[inline]
    pub fn increment(&self, n: usize, j: usize) -> f64 {
        self.increments[n * self.grid.nx + j]
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.increments[n * nx..(n + 1) * nx]
    }

    /// Copy with every increment at time index `>= n` set to zero.
    pub fn truncated_after(&self, n: usize) -> NoiseField {
        let mut out = self.clone();
        let start = (n * self.grid.nx).min(out.increments.len());
        out.increments[start..].iter_mut().for_each(|v| *v = 0.0);
        out
    }

    /// Sheet value `W(t_n, b_k)` at the cell boundary `b_k = -L + k dx`,
    /// `k = 0..=nx`. Positive positions sum the cells in `[0, b_k]`; negative
    /// positions use `1_{[b,0]} = -1_{[0,b]}` and sum `-dW` over `[b_k, 0]`.
    pub fn cumulative_sheet(&self, n: usize, k: usize) -> Result<f64> {
        let g = &self.grid;
        if n > g.nt || k > g.nx {
            return Err(LabError::IndexOutOfRange(format!(
                "sheet index (n={n}, k={k}) outside 0..={} x 0..={}",
                g.nt, g.nx
            )));
        }
        let o = g.origin_cell();
        let (cells, sign) = if k >= o { (o..k, 1.0) } else { (k..o, -1.0) };
        let mut s = 0.0;
        for m in 0..n {
            let row = self.row(m);
            s += cells.clone().map(|j| row[j]).sum::<f64>();
        }
        Ok(sign * s)
    }

    /// Left-point Walsh sum `sum_{n < n_end} sum_j h(n, j) dW[n][j]`. The integrand
    /// must be predictable: `h(n, .)` may only use information from steps `< n`.
    pub fn walsh_integrate<F: FnMut(usize, usize) -> f64>(&self, mut integrand: F, n_end: usize) -> Result<f64> {
        if n_end > self.grid.nt {
            return Err(LabError::IndexOutOfRange(format!("n_end {n_end} > nt {}", self.grid.nt)));
        }
        let mut s = 0.0;
        for n in 0..n_end {
            let row = self.row(n);
            for (j, &dw) in row.iter().enumerate() {
                s += integrand(n, j) * dw;
            }
        }
        Ok(s)
    }

    /// Sums blocks of `fx` cells and `ft` steps: the same realization on a coarser lattice.
    pub fn coarsen(&self, fx: usize, ft: usize) -> Result<NoiseField> {
        let g = &self.grid;
        if fx == 0 || ft == 0 || !g.nx.is_multiple_of(fx) || !g.nt.is_multiple_of(ft) || !(g.nx / fx).is_multiple_of(2) {
            return Err(LabError::InvalidArgument(format!(
                "cannot coarsen {}x{} by ({fx}, {ft})",
                g.nt, g.nx
            )));
        }
        let coarse = LatticeGrid::new(g.half_width, g.nx / fx, g.t_final, g.nt / ft)?;
        let mut inc = vec![0.0; coarse.nx * coarse.nt];
        for n in 0..g.nt {
            let cn = n / ft;
            let row = self.row(n);
            for (j, &v) in row.iter().enumerate() {
                inc[cn * coarse.nx + j / fx] += v;
            }
        }
        Ok(NoiseField { grid: coarse, seed: self.seed, increments: inc })
    }

    /// Splits every step into `ft` sub-steps by sampling the Brownian bridge
    /// conditioned on the coarse increment; `coarsen(1, ft)` recovers `self`.
    pub fn refine_time(&self, ft: usize, bridge_seed: u64) -> Result<NoiseField> {
        if ft == 0 {
            return Err(LabError::InvalidArgument("refinement factor must be >= 1".into()));
        }
        let g = &self.grid;
        let fine = LatticeGrid::new(g.half_width, g.nx, g.t_final, g.nt * ft)?;
        let nx = g.nx;
        let scale = (fine.dt() * fine.dx()).sqrt();
        let mut inc = vec![0.0; nx * fine.nt];
        let mut xi = vec![0.0; nx * ft];
        for n in 0..g.nt {
            fill_normals(bridge_seed, n as u64, &mut xi, scale);
            let row = self.row(n);
            for j in 0..nx {
                let sub = &xi[j * ft..(j + 1) * ft];
                let excess = (sub.iter().sum::<f64>() - row[j]) / ft as f64;
                for (i, &v) in sub.iter().enumerate() {
                    inc[(n * ft + i) * nx + j] = v - excess;
                }
            }
        }
        Ok(NoiseField { grid: fine, seed: self.seed, increments: inc })
    }

    /// Binary dump: magic `BSHEET1`, `nx` and `nt` (u64 LE), `dx` and `dt`
    /// (f64 LE), then the increments row-major as f64 LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(NOISE_MAGIC)?;
        w.write_all(&(g.nx as u64).to_le_bytes())?;
        w.write_all(&(g.nt as u64).to_le_bytes())?;
        w.write_all(&g.dx().to_le_bytes())?;
        w.write_all(&g.dt().to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<NoiseField> {
        let header = crate::io::read_header(&mut r, NOISE_MAGIC)?;
        let grid = LatticeGrid::new(
            0.5 * header.nx as f64 * header.dx,
            header.nx,
            header.nrows as f64 * header.dt,
            header.nrows,
        )?;
        let increments = crate::io::read_f64s(&mut r, header.nx * header.nrows)?;
        NoiseField::from_increments(grid, 0, increments)
    }
}

/// Samples the noise for one seed.
pub fn sample_increments(grid: &LatticeGrid, seed: u64) -> NoiseField {
    NoiseField::sample(*grid, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> LatticeGrid {
        LatticeGrid::new(2.0, 16, 1.0, 8).unwrap()
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let g = small_grid();
        let a = NoiseField::sample(g, 42);
        let b = NoiseField::sample(g, 42);
        let c = NoiseField::sample(g, 43);
        assert_eq!(a, b);
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn cell_regeneration_matches_full_array() {
        let g = small_grid();
        let w = NoiseField::sample(g, 9);
        for &(n, j) in &[(0, 0), (3, 7), (7, 15), (5, 8)] {
            assert_eq!(NoiseField::cell_value(&g, 9, n, j), w.increment(n, j));
        }
    }

    #[test]
    fn sheet_is_zero_at_origin_and_at_time_zero() {
        let g = small_grid();
        let w = NoiseField::sample(g, 1);
        for n in 0..=g.nt {
            assert_eq!(w.cumulative_sheet(n, g.origin_cell()).unwrap(), 0.0);
        }
        assert_eq!(w.cumulative_sheet(0, 3).unwrap(), 0.0);
        assert!(w.cumulative_sheet(g.nt + 1, 0).is_err());
        assert!(w.cumulative_sheet(0, g.nx + 1).is_err());
    }

    #[test]
    fn negative_positions_use_reversed_indicator() {
        let g = small_grid();
        let w = NoiseField::sample(g, 5);
        let o = g.origin_cell();
        let direct: f64 = -(0..2).map(|m| w.increment(m, o - 1) + w.increment(m, o - 2)).sum::<f64>();
        assert!((w.cumulative_sheet(2, o - 2).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn walsh_of_zero_is_zero() {
        let g = small_grid();
        let w = NoiseField::sample(g, 3);
        assert_eq!(w.walsh_integrate(|_, _| 0.0, g.nt).unwrap(), 0.0);
        assert!(w.walsh_integrate(|_, _| 1.0, g.nt + 1).is_err());
    }

    #[test]
    fn coarsen_of_refine_is_identity() {
        let g = small_grid();
        let w = NoiseField::sample(g, 11);
        let fine = w.refine_time(4, 99).unwrap();
        assert_eq!(fine.grid().nt, 32);
        let back = fine.coarsen(1, 4).unwrap();
        for (a, b) in back.increments().iter().zip(w.increments()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let g = small_grid();
        let w = NoiseField::sample(g, 2);
        let mut buf = Vec::new();
        w.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..7], NOISE_MAGIC);
        assert_eq!(buf.len(), 7 + 32 + 8 * g.nx * g.nt);
        let r = NoiseField::read_binary(&buf[..]).unwrap();
        assert_eq!(r.increments(), w.increments());
        assert_eq!(r.grid().nx, g.nx);
        assert!((r.grid().dt() - g.dt()).abs() < 1e-15);
        assert!(NoiseField::read_binary(&b"BSHEETX"[..]).is_err());
    }
}
