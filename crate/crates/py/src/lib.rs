//! Python bindings. Fields come back as nested lists: `field[n][j]` is slice
//! `n`, cell `j`.

use burgers_lab::feynman_kac as fk;
use burgers_lab::stats as st;
use burgers_lab::{kernel, solver, Family, LabError, NoiseField, Profile, SigmaKind};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: LabError) -> PyErr {
    match e {
        LabError::BlowUp { .. } | LabError::NonPositivePsi { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

fn rows(f: &burgers_lab::ScalarField) -> Rows {
    (0..f.num_slices()).map(|k| f.row(k).to_vec()).collect()
}

#[pyclass(name = "ProblemSpec", module = "burgers_lab_py", frozen)]
struct PyProblemSpec {
    inner: burgers_lab::ProblemSpec,
}

#[pymethods]
impl PyProblemSpec {
    #[new]
    #[pyo3(signature = (u0="gaussian", f="gaussian", sigma_kind="additive", q=4.0, lipschitz_l=1.0, u0_scale=1.0, f_scale=1.0))]
    fn new(u0: &str, f: &str, sigma_kind: &str, q: f64, lipschitz_l: f64, u0_scale: f64, f_scale: f64) -> PyResult<Self> {
        let fam = |s: &str| s.parse::<Family>().map_err(PyValueError::new_err);
        let kind: SigmaKind = sigma_kind.parse().map_err(PyValueError::new_err)?;
        let inner = burgers_lab::ProblemSpec::new(
            Profile::new(fam(u0)?, u0_scale),
            Profile::new(fam(f)?, f_scale),
            kind,
            q,
            lipschitz_l,
        )
        .map_err(to_py)?;
        Ok(PyProblemSpec { inner })
    }

    /// Spec and grid from a `key = value` config file.
    #[staticmethod]
    fn from_config(path: &str) -> PyResult<(Self, PyLatticeGrid)> {
        let c = burgers_lab::Config::from_file(path).map_err(to_py)?;
        let inner = burgers_lab::build_spec(&c).map_err(to_py)?;
        let grid = burgers_lab::LatticeGrid::from_config(&c).map_err(to_py)?;
        Ok((PyProblemSpec { inner }, PyLatticeGrid { inner: grid }))
    }

    fn sigma(&self, t: f64, x: f64, r: f64) -> f64 {
        self.inner.sigma(t, x, r)
    }

    fn psi0(&self, x: f64) -> f64 {
        fk::psi0(&self.inner, x)
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn f_l2(&self) -> f64 {
        self.inner.f_l2
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemSpec(u0={}, f={}, sigma_kind={:?}, q={}, lipschitz_l={})",
            self.inner.u0.family.name(),
            self.inner.f.family.name(),
            self.inner.sigma_kind,
            self.inner.q,
            self.inner.lipschitz_l
        )
    }
}

#[pyclass(name = "LatticeGrid", module = "burgers_lab_py", frozen)]
struct PyLatticeGrid {
    inner: burgers_lab::LatticeGrid,
}

#[pymethods]
impl PyLatticeGrid {
    #[new]
    fn new(half_width: f64, nx: usize, t_final: f64, nt: usize) -> PyResult<Self> {
        Ok(PyLatticeGrid { inner: burgers_lab::LatticeGrid::new(half_width, nx, t_final, nt).map_err(to_py)? })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn xs(&self) -> Vec<f64> {
        self.inner.xs()
    }

    fn __repr__(&self) -> String {
        format!("LatticeGrid({})", self.inner.summary())
    }
}

/// `(G_t(x), d/dx G_t(x), d2/dx2 G_t(x))`.
#[pyfunction]
fn heat_kernel(t: f64, x: f64) -> PyResult<(f64, f64, f64)> {
    let k = burgers_lab::heat_kernel(t, x).map_err(to_py)?;
    Ok((k.value, k.dx, k.dxx))
}

/// Brownian-sheet increments `dW[n][j]`.
#[pyfunction]
fn sample_noise(grid: &PyLatticeGrid, seed: u64) -> Rows {
    let w = NoiseField::sample(grid.inner, seed);
    (0..grid.inner.nt).map(|n| w.row(n).to_vec()).collect()
}

/// Solver trajectory `u[n][j]`, `n = 0..=nt`.
#[pyfunction]
fn solve_burgers(py: Python<'_>, spec: &PyProblemSpec, grid: &PyLatticeGrid, seed: u64) -> PyResult<Rows> {
    let (s, g) = (&spec.inner, grid.inner);
    let traj = py.detach(|| solver::solve_burgers(s, &g, &NoiseField::sample(g, seed))).map_err(to_py)?;
    Ok(rows(&traj.u))
}

/// `(psi, d psi / dx)` on the lattice, driven by the same noise as [`solve_burgers`].
#[pyfunction]
fn solve_psi_grid(
    py: Python<'_>,
    spec: &PyProblemSpec,
    grid: &PyLatticeGrid,
    seed: u64,
) -> PyResult<(Rows, Rows)> {
    let (s, g) = (&spec.inner, grid.inner);
    let field = py
        .detach(|| {
            let w = NoiseField::sample(g, seed);
            let traj = solver::solve_burgers(s, &g, &w)?;
            fk::solve_psi_grid(s, &g, &w, &traj.sigma_field)
        })
        .map_err(to_py)?;
    let d = field.dpsi.as_ref().map(rows).unwrap_or_default();
    Ok((rows(&field.psi), d))
}

/// `-2 psi_x / psi` from the grid `psi`.
#[pyfunction]
fn hopf_cole(py: Python<'_>, spec: &PyProblemSpec, grid: &PyLatticeGrid, seed: u64) -> PyResult<Rows> {
    let (s, g) = (&spec.inner, grid.inner);
    let v = py
        .detach(|| {
            let w = NoiseField::sample(g, seed);
            let traj = solver::solve_burgers(s, &g, &w)?;
            fk::hopf_cole(&fk::solve_psi_grid(s, &g, &w, &traj.sigma_field)?)
        })
        .map_err(to_py)?;
    Ok(rows(&v))
}

/// Monte Carlo `psi(t, x)` over backward paths: `(mean, standard error)`.
#[pyfunction]
#[pyo3(signature = (spec, grid, seed, t, x, n_paths=10_000, path_seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_psi_mc(
    py: Python<'_>,
    spec: &PyProblemSpec,
    grid: &PyLatticeGrid,
    seed: u64,
    t: f64,
    x: f64,
    n_paths: usize,
    path_seed: u64,
) -> PyResult<(f64, f64)> {
    let (s, g) = (&spec.inner, grid.inner);
    let est = py
        .detach(|| {
            let w = NoiseField::sample(g, seed);
            let traj = solver::solve_burgers(s, &g, &w)?;
            fk::estimate_psi_mc(s, &g, &w, &traj.sigma_field, t, x, n_paths, path_seed)
        })
        .map_err(to_py)?;
    Ok((est.mean, est.std_error))
}

/// Fitted slope of the lemma integral against `log tau`.
#[pyfunction]
fn lemma1_exponent_fit(theta1: f64, theta2: f64, beta: f64, t1: f64, taus: Vec<f64>) -> PyResult<(f64, f64)> {
    let p = kernel::Lemma1Params::new(theta1, theta2, beta).map_err(to_py)?;
    let fit = kernel::lemma1_exponent_fit(&p, t1, &taus).map_err(to_py)?;
    Ok((fit.slope, p.exponent()))
}

/// `(||X||_p, ci_lo, ci_hi)` with a percentile bootstrap interval.
#[pyfunction]
#[pyo3(signature = (samples, p, seed=0))]
fn empirical_pnorm(samples: Vec<f64>, p: f64, seed: u64) -> PyResult<(f64, f64, f64)> {
    let e = st::empirical_pnorm(&samples, p, seed).map_err(to_py)?;
    Ok((e.value, e.ci_lo, e.ci_hi))
}

/// Runs the command line with `args` (without the program name); returns the exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("burgers-lab".to_string()).chain(args).collect();
    py.detach(|| burgers_lab::cli::main_with_args(argv))
}

#[pymodule]
fn burgers_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblemSpec>()?;
    m.add_class::<PyLatticeGrid>()?;
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(sample_noise, m)?)?;
    m.add_function(wrap_pyfunction!(solve_burgers, m)?)?;
    m.add_function(wrap_pyfunction!(solve_psi_grid, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_cole, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_psi_mc, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_exponent_fit, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_pnorm, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
