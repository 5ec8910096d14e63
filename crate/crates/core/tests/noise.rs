mod common;

use burgers_lab::noise::sample_increments;
use burgers_lab::{LatticeGrid, NoiseField};
use common::*;

#[test]
fn increment_mean_within_four_standard_errors() {
    let g = LatticeGrid::new(1.0, 1000, 1.0, 1000).unwrap();
    let w = sample_increments(&g, 11);
    let n = w.increments().len() as f64;
    let mean = w.increments().iter().sum::<f64>() / n;
    let se = (g.dt() * g.dx() / n).sqrt();
    assert!(mean.abs() <= 4.0 * se, "mean {mean:e}, se {se:e}");
}

#[test]
fn increment_variance_is_cell_area() {
    let g = LatticeGrid::new(1.0, 1000, 1.0, 1000).unwrap();
    let w = sample_increments(&g, 12);
    let n = w.increments().len() as f64;
    let var = w.increments().iter().map(|v| v * v).sum::<f64>() / n;
    let area = g.dt() * g.dx();
    assert!((var / area - 1.0).abs() < 0.01, "variance ratio {}", var / area);
}

#[test]
fn sheet_vanishes_on_the_axis() {
    let g = sheet_grid();
    let w = NoiseField::sample(g, 3);
    for n in 0..=g.nt {
        assert_eq!(w.cumulative_sheet(n, g.origin_cell()).unwrap(), 0.0);
    }
    assert!(w.cumulative_sheet(g.nt + 1, 0).is_err());
    assert!(w.cumulative_sheet(0, g.nx + 1).is_err());
}

#[test]
fn opposite_half_lines_are_uncorrelated() {
    let m = opposite_sign_covariance(&seeds(10_000));
    assert!(m.within(4.0), "{m:?}");
}

#[test]
fn same_point_covariance_is_min_time_times_x() {
    let m = same_point_covariance(&seeds(10_000));
    assert!(m.within(4.0), "{m:?}");
}

#[test]
fn walsh_isometry_for_unit_integrand() {
    let m = unit_isometry(&seeds(10_000));
    assert!(m.within(4.0), "{m:?}");
}

#[test]
fn walsh_isometry_for_wavy_integrand() {
    let m = wavy_isometry(&seeds(10_000));
    assert!(m.within(4.0), "{m:?}");
}

#[test]
fn disjoint_rectangles_are_uncorrelated() {
    let g = sheet_grid();
    let (a, b): (Vec<f64>, Vec<f64>) = seeds(10_000)
        .iter()
        .map(|&s| {
            let w = NoiseField::sample(g, s);
            let r1 = w.walsh_integrate(|n, j| if n < 4 && j < 8 { 1.0 } else { 0.0 }, g.nt).unwrap();
            let r2 = w.walsh_integrate(|n, j| if n >= 4 && j < 8 { 1.0 } else { 0.0 }, g.nt).unwrap();
            (r1, r2)
        })
        .unzip();
    let (c, se) = product_mean_se(&a, &b);
    assert!(c.abs() <= 4.0 * se, "cov {c:e}, se {se:e}");
}
