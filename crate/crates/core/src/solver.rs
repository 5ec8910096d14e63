//! Exponential-Euler time stepping of the mild stochastic Burgers equation
//!
//! ```text
//! u(t) = G_t * u0 + 1/2 int_0^t d/dy G_{t-s} * u(s)^2 ds + int_0^t G_{t-s} * sigma_s W(ds, dy)
//! ```
//!
//! One step: `u^{n+1} = G_dt * (u^n + sigma^n dW^n / dx) - 1/2 dt (d/dx G_dt) * (u^n)^2`,
//! with `sigma^n_j = sigma(t_n, y_j, u^n_j)` evaluated at the left endpoint.

use std::io::Write;

use crate::error::{LabError, Result};
use crate::io::{write_field_ndjson, write_field_slab, TRAJ_MAGIC};
use crate::kernel::{HeatPropagator, Padding};
use crate::lattice::{LatticeGrid, ScalarField};
use crate::noise::NoiseField;
use crate::problem::ProblemSpec;

/// `sup |u|` above which a run is aborted.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: LatticeGrid,
    /// Slices `0..=nt`.
    pub u: ScalarField,
    /// `sigma(t_n, y_j, u(t_n, y_j))` for slices `0..=nt`.
    pub sigma_field: ScalarField,
    pub seed: u64,
}

impl Trajectory {
    pub fn sigma_slice(&self, n: usize) -> Result<&[f64]> {
        sigma_slice(self, n)
    }

    pub fn final_slice(&self) -> &[f64] {
        self.u.row(self.u.num_slices() - 1)
    }

    pub fn write_ndjson<W: Write>(&self, w: W) -> Result<()> {
        write_field_ndjson(&self.u, "u", w)
    }

    pub fn write_slab<W: Write>(&self, w: W) -> Result<()> {
        write_field_slab(&self.u, TRAJ_MAGIC, w)
    }
}

/// Advice when `dt > dx`; the linear part stays stable, the explicit flux may not.
pub fn cfl_advice(grid: &LatticeGrid) -> Option<String> {
    (grid.dt() > grid.dx()).then(|| {
        format!(
            "dt = {:.3e} exceeds dx = {:.3e}; the explicit nonlinear step may lose accuracy",
            grid.dt(),
            grid.dx()
        )
    })
}

/// `sigma(t_n, y_j, u_j)` for one slice.
pub fn sigma_row(spec: &ProblemSpec, grid: &LatticeGrid, n: usize, u: &[f64]) -> Vec<f64> {
    let t = grid.t(n);
    u.iter()
        .enumerate()
        .map(|(j, &r)| spec.sigma(t, grid.x(j), r))
        .collect()
}

pub fn solve_burgers(spec: &ProblemSpec, grid: &LatticeGrid, noise: &NoiseField) -> Result<Trajectory> {
    if noise.grid() != grid {
        return Err(LabError::Mismatch(format!(
            "noise lattice {} differs from solver lattice {}",
            noise.grid().summary(),
            grid.summary()
        )));
    }
    let nx = grid.nx;
    let dt = grid.dt();
    let inv_dx = 1.0 / grid.dx();
    let prop = HeatPropagator::new(grid, dt)?;

    let mut u = ScalarField::with_capacity(*grid, grid.nt + 1);
    let mut sig = ScalarField::with_capacity(*grid, grid.nt + 1);
    let mut cur: Vec<f64> = grid.xs().iter().map(|&x| spec.u0.eval(x)).collect();
    u.push_slice(0, &cur)?;

    let mut a = vec![0.0; nx];
    let mut b = vec![0.0; nx];
    for n in 0..grid.nt {
        let s = sigma_row(spec, grid, n, &cur);
        let dw = noise.row(n);
        for j in 0..nx {
            a[j] = cur[j] + s[j] * dw[j] * inv_dx;
            b[j] = -0.5 * dt * cur[j] * cur[j];
        }
        sig.push_slice(n, &s)?;
        let next = prop.apply_sum(&a, &b, Padding::Zero)?;
        let sup = next.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if sup > BLOWUP_THRESHOLD {
            return Err(LabError::BlowUp { step: n + 1, last_stable: n, sup });
        }
        u.push_slice(n + 1, &next)?;
        cur = next;
    }
    sig.push_slice(grid.nt, &sigma_row(spec, grid, grid.nt, &cur))?;
    Ok(Trajectory { grid: *grid, u, sigma_field: sig, seed: noise.seed() })
}

pub fn sigma_slice(traj: &Trajectory, n: usize) -> Result<&[f64]> {
    traj.sigma_field
        .slice(n)
        .ok_or_else(|| LabError::IndexOutOfRange(format!("slice {n} outside 0..={}", traj.grid.nt)))
}

/// `sigma` field of an additive spec, independent of any trajectory.
pub fn additive_sigma_field(spec: &ProblemSpec, grid: &LatticeGrid) -> Result<ScalarField> {
    if !spec.is_additive() {
        return Err(LabError::InvalidArgument(
            "multiplicative sigma depends on u; take sigma_field from a trajectory".into(),
        ));
    }
    let mut out = ScalarField::with_capacity(*grid, grid.nt + 1);
    for n in 0..=grid.nt {
        let t = grid.t(n);
        let row: Vec<f64> = grid.xs().iter().map(|&x| spec.sigma(t, x, 0.0)).collect();
        out.push_slice(n, &row)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Family, Profile, SigmaKind};

    fn spec(u0: Family, f: Family, kind: SigmaKind) -> ProblemSpec {
        ProblemSpec::new(Profile::unit(u0), Profile::unit(f), kind, 4.0, 1.0).unwrap()
    }

    #[test]
    fn zero_data_zero_noise_stays_zero() {
        let s = spec(Family::Zero, Family::Zero, SigmaKind::Additive);
        let g = LatticeGrid::new(8.0, 64, 0.1, 20).unwrap();
        let tr = solve_burgers(&s, &g, &NoiseField::sample(g, 3)).unwrap();
        assert!(tr.u.values().iter().all(|&v| v == 0.0));
        assert_eq!(tr.u.num_slices(), 21);
    }

    #[test]
    fn deterministic_mass_is_conserved() {
        let s = spec(Family::Gaussian, Family::Zero, SigmaKind::Additive);
        let g = LatticeGrid::new(8.0, 256, 0.5, 200).unwrap();
        let tr = solve_burgers(&s, &g, &NoiseField::zeros(g)).unwrap();
        let m0: f64 = tr.u.row(0).iter().sum::<f64>() * g.dx();
        let m1: f64 = tr.final_slice().iter().sum::<f64>() * g.dx();
        assert!((m1 - m0).abs() <= 1e-4 * s.u0_l1, "{m0} -> {m1}");
    }

    #[test]
    fn slice_depends_only_on_past_increments() {
        let s = spec(Family::Gaussian, Family::Gaussian, SigmaKind::Multiplicative);
        let g = LatticeGrid::new(8.0, 64, 0.2, 40).unwrap();
        let noise = NoiseField::sample(g, 11);
        let full = solve_burgers(&s, &g, &noise).unwrap();
        for n in [0, 7, 39] {
            let cut = solve_burgers(&s, &g, &noise.truncated_after(n + 1)).unwrap();
            for m in 0..=n + 1 {
                assert_eq!(full.u.row(m), cut.u.row(m), "slice {m} changed when increments > {n} were zeroed");
            }
        }
    }

    #[test]
    fn sigma_respects_envelope() {
        let s = spec(Family::Gaussian, Family::Sech, SigmaKind::Multiplicative);
        let g = LatticeGrid::new(12.0, 128, 0.2, 40).unwrap();
        let tr = solve_burgers(&s, &g, &NoiseField::sample(g, 5)).unwrap();
        for n in 0..=g.nt {
            for (j, v) in tr.sigma_slice(n).unwrap().iter().enumerate() {
                assert!(v.abs() <= s.f.eval(g.x(j)));
            }
        }
        assert!(tr.sigma_slice(g.nt + 1).is_err());
    }

    #[test]
    fn additive_sigma_is_f() {
        let s = spec(Family::Gaussian, Family::Gaussian, SigmaKind::Additive);
        let g = LatticeGrid::new(8.0, 64, 0.1, 10).unwrap();
        let tr = solve_burgers(&s, &g, &NoiseField::sample(g, 1)).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|&x| s.f.eval(x)).collect();
        for n in [0, 5, 10] {
            assert_eq!(tr.sigma_slice(n).unwrap(), &f[..]);
        }
        let m = spec(Family::Zero, Family::Gaussian, SigmaKind::Multiplicative);
        let tr = solve_burgers(&m, &g, &NoiseField::sample(g, 1)).unwrap();
        assert!(tr.sigma_slice(3).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        let s = ProblemSpec::new(
            Profile::new(Family::Gaussian, 1e7),
            Profile::zero(),
            SigmaKind::Additive,
            4.0,
            0.0,
        )
        .unwrap();
        let g = LatticeGrid::new(8.0, 64, 0.1, 10).unwrap();
        match solve_burgers(&s, &g, &NoiseField::zeros(g)) {
            Err(LabError::BlowUp { step, last_stable, .. }) => assert_eq!(step, last_stable + 1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_noise_is_rejected() {
        let s = spec(Family::Gaussian, Family::Gaussian, SigmaKind::Additive);
        let g = LatticeGrid::new(8.0, 64, 0.1, 10).unwrap();
        let h = LatticeGrid::new(8.0, 64, 0.1, 20).unwrap();
        assert!(matches!(solve_burgers(&s, &g, &NoiseField::zeros(h)), Err(LabError::Mismatch(_))));
    }
}
