#![allow(dead_code)]

use burgers_lab::feynman_kac::{backward_path, bracket_expectation, walsh_along_path};
use burgers_lab::{LatticeGrid, NoiseField, ScalarField};

/// Estimate with its standard error, compared against a target at `k` SE.
#[derive(Debug, Clone, Copy)]
pub struct Moment {
    pub value: f64,
    pub se: f64,
    pub target: f64,
}

impl Moment {
    pub fn within(&self, k: f64) -> bool {
        (self.value - self.target).abs() <= k * self.se
    }

    pub fn z(&self) -> f64 {
        (self.value - self.target) / self.se
    }
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Second moment about zero (the mean is known to vanish) and its SE.
pub fn second_moment_se(xs: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    mean_se(&sq)
}

pub fn product_mean_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    mean_se(&p)
}

pub fn seeds(n: usize) -> Vec<u64> {
    (0..n as u64).map(|s| 0x5eed_0000 + s).collect()
}

/// Small lattice on [-1, 1] x [0, T]: cheap enough for 10^4-seed ensembles.
pub fn sheet_grid() -> LatticeGrid {
    LatticeGrid::new(1.0, 16, 1.0, 8).unwrap()
}

/// `E[W(t, a) W(t, b)]` with `a > 0 > b` at cell boundaries; target 0.
pub fn opposite_sign_covariance(seeds: &[u64]) -> Moment {
    let g = sheet_grid();
    let (ka, kb) = (12, 4);
    let (wa, wb): (Vec<f64>, Vec<f64>) = seeds
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            (w.cumulative_sheet(g.nt, ka).unwrap(), w.cumulative_sheet(g.nt, kb).unwrap())
        })
        .unzip();
    let (value, se) = product_mean_se(&wa, &wb);
    Moment { value, se, target: 0.0 }
}

/// `E[W(s, x) W(t, x)]` for `s < t`, `x > 0`; target `s x`.
pub fn same_point_covariance(seeds: &[u64]) -> Moment {
    let g = sheet_grid();
    let (ns, k) = (3, 14);
    let x = k as f64 * g.dx() - g.half_width;
    let (ws, wt): (Vec<f64>, Vec<f64>) = seeds
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            (w.cumulative_sheet(ns, k).unwrap(), w.cumulative_sheet(g.nt, k).unwrap())
        })
        .unzip();
    let (value, se) = product_mean_se(&ws, &wt);
    Moment { value, se, target: g.t(ns) * x }
}

/// Variance of the Walsh integral of `1` over `[0, T] x [0, 1]`; target `T`.
pub fn unit_isometry(seeds: &[u64]) -> Moment {
    let g = sheet_grid();
    let o = g.origin_cell();
    let xs: Vec<f64> = seeds
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            w.walsh_integrate(|_, j| if j >= o { 1.0 } else { 0.0 }, g.nt).unwrap()
        })
        .collect();
    let (value, se) = second_moment_se(&xs);
    Moment { value, se, target: g.t_final }
}

fn wavy(g: &LatticeGrid, n: usize, j: usize) -> f64 {
    let (t, x) = (g.t(n), g.x(j));
    (3.0 * x).sin() * (1.0 + t) + 0.5 * (-x * x).exp()
}

/// Discrete isometry for a non-constant deterministic integrand; target
/// `sum h^2 dt dx`.
pub fn wavy_isometry(seeds: &[u64]) -> Moment {
    let g = sheet_grid();
    let xs: Vec<f64> = seeds
        .iter()
        .map(|&s| NoiseField::sample(g, s).walsh_integrate(|n, j| wavy(&g, n, j), g.nt).unwrap())
        .collect();
    let mut target = 0.0;
    for n in 0..g.nt {
        for j in 0..g.nx {
            target += wavy(&g, n, j).powi(2) * g.dt() * g.dx();
        }
    }
    let (value, se) = second_moment_se(&xs);
    Moment { value, se, target }
}

/// Martingale property: the increment `M_T - M_s` is orthogonal to `M_s`.
pub fn martingale_increment(seeds: &[u64]) -> Moment {
    let g = sheet_grid();
    let ns = g.nt / 2;
    let (early, late): (Vec<f64>, Vec<f64>) = seeds
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            let ms = w.walsh_integrate(|n, j| wavy(&g, n, j), ns).unwrap();
            let mt = w.walsh_integrate(|n, j| wavy(&g, n, j), g.nt).unwrap();
            (ms, mt - ms)
        })
        .unzip();
    let (value, se) = product_mean_se(&early, &late);
    Moment { value, se, target: 0.0 }
}

/// Lattice for the bracket check: fine in space so the indicator rounding is
/// well below the 10^4-sample error.
pub fn bracket_grid() -> LatticeGrid {
    LatticeGrid::new(4.0, 512, 0.25, 20).unwrap()
}

pub fn bracket_sigma(x: f64) -> f64 {
    (-x * x).exp()
}

/// `E[M_t^2]` along independent backward paths against the bracket
/// `int ds int dy sigma^2 1_{[0, beta_s]}` averaged over the path law.
pub fn bracket_variance(seeds: &[u64]) -> Moment {
    let g = bracket_grid();
    let x0 = 0.3;
    let row: Vec<f64> = g.xs().into_iter().map(bracket_sigma).collect();
    let rows: Vec<f64> = (0..=g.nt).flat_map(|_| row.clone()).collect();
    let sigma = ScalarField::from_rows(g, (0..=g.nt).collect(), rows).unwrap();
    let xs: Vec<f64> = seeds
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            let path = backward_path(&g, g.nt, x0, s ^ 0xbead, 0);
            walsh_along_path(&w, &sigma, &path).unwrap()
        })
        .collect();
    let (value, se) = second_moment_se(&xs);
    Moment { value, se, target: bracket_expectation(&g, bracket_sigma, g.nt, x0) }
}
