//! Independent realizations: one noise seed each, the solver run first so a
//! multiplicative `sigma` can be read off `u`, then the `psi` recursion on the
//! same noise. Only the requested slices are kept.

use rayon::prelude::*;

use crate::error::Result;
use crate::feynman_kac::solve_psi_grid;
use crate::lattice::{LatticeGrid, ScalarField};
use crate::noise::NoiseField;
use crate::problem::ProblemSpec;
use crate::solver::solve_burgers;

#[derive(Debug, Clone)]
pub struct Realization {
    pub seed: u64,
    pub u: ScalarField,
    pub psi: ScalarField,
    pub dpsi: ScalarField,
}

pub fn realize_with_noise(spec: &ProblemSpec, noise: &NoiseField, keep: &[usize]) -> Result<Realization> {
    let grid = noise.grid();
    let traj = solve_burgers(spec, grid, noise)?;
    let field = solve_psi_grid(spec, grid, noise, &traj.sigma_field)?;
    let dpsi = field.dpsi.as_ref().expect("grid solve records the derivative");
    Ok(Realization {
        seed: noise.seed(),
        u: traj.u.restrict(keep)?,
        psi: field.psi.restrict(keep)?,
        dpsi: dpsi.restrict(keep)?,
    })
}

pub fn realize(spec: &ProblemSpec, grid: &LatticeGrid, seed: u64, keep: &[usize]) -> Result<Realization> {
    realize_with_noise(spec, &NoiseField::sample(*grid, seed), keep)
}

/// Realizations in seed order; runs on the current rayon pool.
pub fn realize_ensemble(spec: &ProblemSpec, grid: &LatticeGrid, seeds: &[u64], keep: &[usize]) -> Result<Vec<Realization>> {
    seeds.par_iter().map(|&s| realize(spec, grid, s, keep)).collect()
}

/// The `u`, `psi` and `dpsi` members of an ensemble as separate lists.
pub fn split(ensemble: &[Realization]) -> (Vec<ScalarField>, Vec<ScalarField>, Vec<ScalarField>) {
    let u = ensemble.iter().map(|r| r.u.clone()).collect();
    let psi = ensemble.iter().map(|r| r.psi.clone()).collect();
    let dpsi = ensemble.iter().map(|r| r.dpsi.clone()).collect();
    (u, psi, dpsi)
}

/// Values of one field at slice `n`, cell `j`, across the ensemble.
pub fn point_samples(fields: &[ScalarField], n: usize, j: usize) -> Vec<f64> {
    fields.iter().filter_map(|f| f.slice(n).map(|row| row[j])).collect()
}
