//! The Feynman-Kac process
//!
//! ```text
//! psi(t, x) = E_beta[ psi0(beta_0) exp(-1/2 M_t) ],   M_t = int_0^t int sigma_s(y) 1_{[0, beta_s]}(y) W(ds, dy)
//! ```
//!
//! computed by Monte Carlo over backward Brownian motions, and by the lattice
//! recursion of its integral equation over `S = {(y, z): |z| >= |y|, yz >= 0}`.
//! Also the derivative field, mollification and the Hopf-Cole transform.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::io::{write_field_slab, PSI_MAGIC, TRAJ_MAGIC};
use crate::kernel::{gaussian, HeatPropagator, Padding};
use crate::lattice::{LatticeGrid, ScalarField};
use crate::noise::NoiseField;
use crate::problem::ProblemSpec;
use crate::quad;

/// `exp(-1/2 int_0^x u0)`.
pub fn psi0(spec: &ProblemSpec, x: f64) -> f64 {
    (-0.5 * spec.u0.integral_from_zero(x)).exp()
}

/// `(G_t * psi0)(x)` and its spatial derivative, by quadrature. This is `psi`
/// when `sigma = 0`; `d/dx (G_t * psi0) = G_t * (-u0 psi0 / 2)`.
pub fn psi_noiseless(spec: &ProblemSpec, t: f64, x: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(LabError::NonPositiveTime(t));
    }
    if spec.u0.is_zero() {
        return Ok((1.0, 0.0));
    }
    let v = quad::gauss_kronrod_real_line(|y| gaussian(t, x - y) * psi0(spec, y), x, 1e-15, 1e-12).value;
    let d = quad::gauss_kronrod_real_line(
        |y| -0.5 * gaussian(t, x - y) * spec.u0.eval(y) * psi0(spec, y),
        x,
        1e-15,
        1e-12,
    )
    .value;
    Ok((v, d))
}

/// Viscous Burgers solution `-2 d/dx log(G_t * psi0)` for `sigma = 0`.
pub fn cole_hopf_reference(spec: &ProblemSpec, t: f64, x: f64) -> Result<f64> {
    let (v, d) = psi_noiseless(spec, t, x)?;
    Ok(-2.0 * d / v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl PsiEstimate {
    /// `psi` is an average of positive quantities.
    pub fn is_positive(&self) -> bool {
        self.mean > 0.0
    }
}

/// Backward Brownian motion pinned at `beta_{t_n} = x`, with increments of
/// variance `2 dt`. Entry `m` is `beta_{t_m}`, `m = 0..=n`.
pub fn backward_path(grid: &LatticeGrid, n: usize, x: f64, path_seed: u64, path_index: u64) -> Vec<f64> {
    let mut rng = path_rng(path_seed, path_index);
    let step = (2.0 * grid.dt()).sqrt();
    let mut path = vec![0.0; n + 1];
    path[n] = x;
    for m in (0..n).rev() {
        let z: f64 = rng.sample(StandardNormal);
        path[m] = path[m + 1] + step * z;
    }
    path
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Cell boundary closing the lattice interval between 0 and `b`: whole cells
/// strictly inside, the straddling cell included when its midpoint is.
#[inline]
fn boundary_index(grid: &LatticeGrid, b: f64) -> usize {
    let o = grid.origin_cell() as f64;
    let k = o + (b / grid.dx()).round();
    k.clamp(0.0, grid.nx as f64) as usize
}

/// `M` along one path: `sum_m sum_j sigma_m(y_j) 1_{[0, beta_{t_m}]}(y_j) dW[m][j]`,
/// with `1_{[b, 0]} = -1_{[0, b]}` for `b < 0`.
pub fn walsh_along_path(noise: &NoiseField, sigma_field: &ScalarField, path: &[f64]) -> Result<f64> {
    let g = noise.grid();
    let n = path.len().saturating_sub(1);
    if n > g.nt {
        return Err(LabError::IndexOutOfRange(format!("path of {n} steps on a lattice of {}", g.nt)));
    }
    let o = g.origin_cell();
    let mut m_total = 0.0;
    for (m, &b) in path[..n].iter().enumerate() {
        let sig = sigma_row_at(sigma_field, m)?;
        let dw = noise.row(m);
        let k = boundary_index(g, b);
        if k >= o {
            m_total += (o..k).map(|j| sig[j] * dw[j]).sum::<f64>();
        } else {
            m_total -= (k..o).map(|j| sig[j] * dw[j]).sum::<f64>();
        }
    }
    Ok(m_total)
}

fn sigma_row_at(sigma_field: &ScalarField, n: usize) -> Result<&[f64]> {
    sigma_field
        .slice(n)
        .ok_or_else(|| LabError::IndexOutOfRange(format!("sigma field has no slice {n}")))
}

/// Signed cumulative sums `C_m[k]` of `sigma_m dW_m` from the origin to each cell
/// boundary `k`, for steps `m < n`.
fn cumulative_tables(noise: &NoiseField, sigma_field: &ScalarField, n: usize) -> Result<Vec<Vec<f64>>> {
    let g = noise.grid();
    let o = g.origin_cell();
    (0..n)
        .map(|m| {
            let sig = sigma_row_at(sigma_field, m)?;
            let dw = noise.row(m);
            let mut c = vec![0.0; g.nx + 1];
            for k in o + 1..=g.nx {
                c[k] = c[k - 1] + sig[k - 1] * dw[k - 1];
            }
            for k in (0..o).rev() {
                c[k] = c[k + 1] - sig[k] * dw[k];
            }
            Ok(c)
        })
        .collect()
}

fn check_same_lattice(grid: &LatticeGrid, noise: &NoiseField, sigma_field: &ScalarField) -> Result<()> {
    if noise.grid() != grid || sigma_field.grid() != grid {
        return Err(LabError::Mismatch("noise, sigma field and lattice must share one grid".into()));
    }
    Ok(())
}

/// Samples `psi0(beta_0) exp(-M/2)` for paths `0..n_paths`.
#[allow(clippy::too_many_arguments)]
pub fn psi_mc_samples(
    spec: &ProblemSpec,
    grid: &LatticeGrid,
    noise: &NoiseField,
    sigma_field: &ScalarField,
    t: f64,
    x: f64,
    n_paths: usize,
    path_seed: u64,
) -> Result<Vec<f64>> {
    check_same_lattice(grid, noise, sigma_field)?;
    let n = grid.time_index(t)?;
    let tables = cumulative_tables(noise, sigma_field, n)?;
    let step = (2.0 * grid.dt()).sqrt();
    let samples = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(path_seed, i);
            let mut b = x;
            let mut m_total = 0.0;
            for m in (0..n).rev() {
                let z: f64 = rng.sample(StandardNormal);
                b += step * z;
                m_total += tables[m][boundary_index(grid, b)];
            }
            psi0(spec, b) * (-0.5 * m_total).exp()
        })
        .collect();
    Ok(samples)
}

/// Monte Carlo estimate of `psi(t, x)` for a fixed noise realization.
#[allow(clippy::too_many_arguments)]
pub fn estimate_psi_mc(
    spec: &ProblemSpec,
    grid: &LatticeGrid,
    noise: &NoiseField,
    sigma_field: &ScalarField,
    t: f64,
    x: f64,
    n_paths: usize,
    path_seed: u64,
) -> Result<PsiEstimate> {
    if n_paths < 2 {
        return Err(LabError::TooFewSamples { needed: 2, got: n_paths });
    }
    let s = psi_mc_samples(spec, grid, noise, sigma_field, t, x, n_paths, path_seed)?;
    let nf = n_paths as f64;
    let mean = s.iter().sum::<f64>() / nf;
    let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(PsiEstimate { mean, std_error: (var / nf).sqrt(), n_paths })
}

/// `psi` on every slice, optionally with `d psi / dx`, and the mollification
/// width already applied (`0` for none).
#[derive(Debug, Clone)]
pub struct PsiField {
    pub grid: LatticeGrid,
    pub psi: ScalarField,
    pub dpsi: Option<ScalarField>,
    pub epsilon: f64,
}

impl PsiField {
    pub fn write_slab<W: Write>(&self, w: W) -> Result<()> {
        write_field_slab(&self.psi, PSI_MAGIC, w)
    }
}

/// `sigma_n dW_n` and `sigma_n^2 dx` reduced to the per-cell weights
/// `A_k = sum_{y_j in [0, z_k]} sign(y_j) h_j` and `B_k = sum_{y_j in [0, z_k]} sigma_j^2 dx`,
/// counting the own cell with weight 1/2 (the cell center splits it).
fn region_weights(grid: &LatticeGrid, sig: &[f64], dw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nx = grid.nx;
    let o = grid.origin_cell();
    let dx = grid.dx();
    let mut a = vec![0.0; nx];
    let mut b = vec![0.0; nx];
    let (mut ca, mut cb) = (0.0, 0.0);
    for k in o..nx {
        let h = sig[k] * dw[k];
        let q = sig[k] * sig[k] * dx;
        a[k] = ca + 0.5 * h;
        b[k] = cb + 0.5 * q;
        ca += h;
        cb += q;
    }
    let (mut ca, mut cb) = (0.0, 0.0);
    for k in (0..o).rev() {
        let h = sig[k] * dw[k];
        let q = sig[k] * sig[k] * dx;
        a[k] = -(ca + 0.5 * h);
        b[k] = cb + 0.5 * q;
        ca += h;
        cb += q;
    }
    (a, b)
}

fn check_positive(step: usize, row: &[f64]) -> Result<()> {
    match row.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((cell, &value)) => Err(LabError::NonPositivePsi { step, cell, value }),
        None => Ok(()),
    }
}

fn psi0_row(spec: &ProblemSpec, grid: &LatticeGrid) -> Vec<f64> {
    grid.xs().iter().map(|&x| psi0(spec, x)).collect()
}

fn dpsi0_row(spec: &ProblemSpec, grid: &LatticeGrid) -> Vec<f64> {
    grid.xs().iter().map(|&x| -0.5 * spec.u0.eval(x) * psi0(spec, x)).collect()
}

/// Lattice recursion
///
/// ```text
/// psi^{n+1}(x) = G_dt * psi^n - 1/2 sum_j sign(y_j) sigma_n(y_j) I_n(x, y_j) dW[n][j]
///                + 1/8 dt sum_j sigma_n(y_j)^2 I_n(x, y_j) dx
/// ```
///
/// with `I_n(x, y) = int_{|z| >= |y|, yz >= 0} G_dt(x - z) psi^n(z) dz`. Summing over
/// `j` first turns the two noise terms into `G_dt * (psi^n (-A/2 + dt B/8))`, so a
/// step is one heat-kernel application; `d psi / dx` comes from the same transform.
pub fn solve_psi_grid(
    spec: &ProblemSpec,
    grid: &LatticeGrid,
    noise: &NoiseField,
    sigma_field: &ScalarField,
) -> Result<PsiField> {
    check_same_lattice(grid, noise, sigma_field)?;
    let dt = grid.dt();
    let prop = HeatPropagator::new(grid, dt)?;
    let mut psi = ScalarField::with_capacity(*grid, grid.nt + 1);
    let mut dpsi = ScalarField::with_capacity(*grid, grid.nt + 1);
    let mut cur = psi0_row(spec, grid);
    check_positive(0, &cur)?;
    psi.push_slice(0, &cur)?;
    dpsi.push_slice(0, &dpsi0_row(spec, grid))?;
    for n in 0..grid.nt {
        let w = step_weights(grid, &cur, sigma_row_at(sigma_field, n)?, noise.row(n));
        let (next, dnext) = prop.apply_both(&w, Padding::Edge)?;
        check_positive(n + 1, &next)?;
        psi.push_slice(n + 1, &next)?;
        dpsi.push_slice(n + 1, &dnext)?;
        cur = next;
    }
    Ok(PsiField { grid: *grid, psi, dpsi: Some(dpsi), epsilon: 0.0 })
}

fn step_weights(grid: &LatticeGrid, psi: &[f64], sig: &[f64], dw: &[f64]) -> Vec<f64> {
    let eighth_dt = 0.125 * grid.dt();
    let (a, b) = region_weights(grid, sig, dw);
    psi.iter()
        .zip(a.iter().zip(&b))
        .map(|(p, (a, b))| p * (1.0 - 0.5 * a + eighth_dt * b))
        .collect()
}

/// The same recursion evaluated pair by pair: `I_n(x_i, y_j)` from suffix and
/// prefix sums of `G_dt(x_i - z_k) psi^n(z_k)`, O(nx^2) per step. Reference
/// implementation for small lattices.
pub fn solve_psi_grid_pairwise(
    spec: &ProblemSpec,
    grid: &LatticeGrid,
    noise: &NoiseField,
    sigma_field: &ScalarField,
) -> Result<PsiField> {
    check_same_lattice(grid, noise, sigma_field)?;
    let nx = grid.nx;
    let o = grid.origin_cell();
    let dt = grid.dt();
    let dx = grid.dx();
    let prop = HeatPropagator::new(grid, dt)?;
    let kmat = prop.matrix(Padding::Edge, false)?;
    // the edge extension is linear in the two edge cells, so the matrix
    // reproduces the propagator for vectors that vanish on one side
    let mut psi = ScalarField::with_capacity(*grid, grid.nt + 1);
    let mut cur = psi0_row(spec, grid);
    psi.push_slice(0, &cur)?;
    let mut inner = vec![0.0; nx];
    for n in 0..grid.nt {
        let sig = sigma_row_at(sigma_field, n)?;
        let dw = noise.row(n);
        let mut next = vec![0.0; nx];
        for i in 0..nx {
            let row = &kmat[i * nx..(i + 1) * nx];
            // I(x_i, y_j): suffix sums on the positive side, prefix sums on the negative
            let mut acc = 0.0;
            for k in (o..nx).rev() {
                let m = row[k] * cur[k];
                inner[k] = acc + 0.5 * m;
                acc += m;
            }
            let mut acc = 0.0;
            for k in 0..o {
                let m = row[k] * cur[k];
                inner[k] = acc + 0.5 * m;
                acc += m;
            }
            let mut v: f64 = row.iter().zip(&cur).map(|(g, p)| g * p).sum();
            for j in 0..nx {
                let sign = if j >= o { 1.0 } else { -1.0 };
                v += inner[j] * (-0.5 * sign * sig[j] * dw[j] + 0.125 * dt * sig[j] * sig[j] * dx);
            }
            next[i] = v;
        }
        check_positive(n + 1, &next)?;
        psi.push_slice(n + 1, &next)?;
        cur = next;
    }
    Ok(PsiField { grid: *grid, psi, dpsi: None, epsilon: 0.0 })
}

/// `d psi / dx` by the derivative recursion, driven by an already solved `psi`:
/// `d psi^{n+1} = (d/dx G_dt) * (psi^n (1 - A/2 + dt B/8))`.
pub fn psi_derivative_grid(
    spec: &ProblemSpec,
    grid: &LatticeGrid,
    noise: &NoiseField,
    sigma_field: &ScalarField,
    psi: &PsiField,
) -> Result<ScalarField> {
    check_same_lattice(grid, noise, sigma_field)?;
    if psi.grid != *grid || psi.psi.num_slices() != grid.nt + 1 {
        return Err(LabError::Mismatch("psi field must hold every slice of the same lattice".into()));
    }
    let prop = HeatPropagator::new(grid, grid.dt())?;
    let mut out = ScalarField::with_capacity(*grid, grid.nt + 1);
    out.push_slice(0, &dpsi0_row(spec, grid))?;
    for n in 0..grid.nt {
        let cur = psi.psi.row(n);
        check_positive(n, cur)?;
        let w = step_weights(grid, cur, sigma_row_at(sigma_field, n)?, noise.row(n));
        out.push_slice(n + 1, &prop.apply_dx(&w, Padding::Edge)?)?;
    }
    Ok(out)
}

/// `psi_eps = G_eps * psi` slice by slice (and the same for `d psi / dx`).
pub fn mollify(field: &PsiField, epsilon: f64) -> Result<PsiField> {
    let prop = HeatPropagator::new(&field.grid, epsilon)?;
    let psi = field.psi.map_rows(|_, row| prop.apply(row, Padding::Edge))?;
    let dpsi = match &field.dpsi {
        Some(d) => Some(d.map_rows(|_, row| prop.apply(row, Padding::Edge))?),
        None => None,
    };
    Ok(PsiField { grid: field.grid, psi, dpsi, epsilon: field.epsilon + epsilon })
}

/// Mollification width for finite-difference log-derivatives: the kernel
/// standard deviation `sqrt(2 eps)` equals two cells.
pub fn default_epsilon(grid: &LatticeGrid) -> f64 {
    2.0 * grid.dx() * grid.dx()
}

/// `v = -2 (d psi / dx) / psi`. Uses `dpsi` when present, otherwise centered
/// differences of `log psi` after mollifying with [`default_epsilon`].
pub fn hopf_cole(field: &PsiField) -> Result<ScalarField> {
    match &field.dpsi {
        Some(d) => {
            let mut out = ScalarField::with_capacity(field.grid, field.psi.num_slices());
            for (k, &n) in field.psi.time_indices().iter().enumerate() {
                let p = field.psi.row(k);
                check_positive(n, p)?;
                let dk = d.position(n).ok_or_else(|| LabError::Mismatch(format!("dpsi lacks slice {n}")))?;
                let row: Vec<f64> = p.iter().zip(d.row(dk)).map(|(p, d)| -2.0 * d / p).collect();
                out.push_slice(n, &row)?;
            }
            Ok(out)
        }
        None => hopf_cole_fd(field, default_epsilon(&field.grid)),
    }
}

/// Finite-difference transform after mollifying by `epsilon` (`0` for none).
pub fn hopf_cole_fd(field: &PsiField, epsilon: f64) -> Result<ScalarField> {
    let smoothed;
    let src = if epsilon > 0.0 {
        smoothed = mollify(&PsiField { dpsi: None, ..field.clone() }, epsilon)?;
        &smoothed.psi
    } else {
        &field.psi
    };
    let dx = field.grid.dx();
    let mut out = ScalarField::with_capacity(field.grid, src.num_slices());
    for (k, &n) in src.time_indices().iter().enumerate() {
        let p = src.row(k);
        check_positive(n, p)?;
        let lp: Vec<f64> = p.iter().map(|v| v.ln()).collect();
        let row: Vec<f64> = centered_difference(&lp, dx).iter().map(|d| -2.0 * d).collect();
        out.push_slice(n, &row)?;
    }
    Ok(out)
}

/// Centered differences, one-sided at the two edge cells.
pub fn centered_difference(row: &[f64], dx: f64) -> Vec<f64> {
    let n = row.len();
    (0..n)
        .map(|j| {
            if j == 0 {
                (row[1] - row[0]) / dx
            } else if j == n - 1 {
                (row[n - 1] - row[n - 2]) / dx
            } else {
                (row[j + 1] - row[j - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

/// Hopf-Cole output in the trajectory slab format, for diffing against the solver.
pub fn write_hopf_cole_slab<W: Write>(v: &ScalarField, w: W) -> Result<()> {
    write_field_slab(v, TRAJ_MAGIC, w)
}

/// `E[M_t^2]` for a frozen `sigma` row and a path started at `x`:
/// `sum_m dt int sigma(y)^2 P(y between 0 and beta_{t_m}) dy`, with
/// `beta_{t_m} ~ N(x, 2 (t_n - t_m))`.
pub fn bracket_expectation(grid: &LatticeGrid, sigma: impl Fn(f64) -> f64, n: usize, x: f64) -> f64 {
    let dt = grid.dt();
    let t = grid.t(n);
    (0..n)
        .map(|m| {
            let s = t - grid.t(m);
            let sd = (2.0 * s).sqrt();
            let beyond = |y: f64| 0.5 * libm::erfc((y - x) / (sd * std::f64::consts::SQRT_2));
            let pos = quad::gauss_kronrod_upper(|y| sigma(y).powi(2) * beyond(y), 0.0, 1e-15, 1e-11).value;
            let neg = quad::gauss_kronrod_upper(|y| sigma(-y).powi(2) * beyond(2.0 * x + y), 0.0, 1e-15, 1e-11).value;
            dt * (pos + neg)
        })
        .sum()
}
