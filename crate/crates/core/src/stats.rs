//! Ensemble statistics: L^p(Omega) norms with bootstrap intervals, the explicit
//! moment bounds for `psi` and `1/psi`, structure-function Hölder fits, and the
//! Cauchy-Schwarz chain bounding the moments of `u`.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::io::fmt_num;
use crate::lattice::ScalarField;
use crate::problem::ProblemSpec;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const MIN_PNORM_SAMPLES: usize = 100;
/// One-sided slack on fitted Hölder exponents.
pub const HOLDER_TOLERANCE: f64 = 0.07;
/// Upper slack where the claimed exponent is expected to be sharp.
pub const HOLDER_SHARP_TOLERANCE: f64 = 0.1;
/// Relative slack for bounds met with equality in exact arithmetic.
const ROUNDOFF: f64 = 1e-12;

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LabError::InvalidArgument(format!(
            "regression needs >= 2 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(LabError::InvalidArgument("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `||a - b||_2 / ||b||_2` over the cells in `cells`.
pub fn relative_l2(a: &[f64], b: &[f64], cells: std::ops::Range<usize>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in cells {
        num += (a[j] - b[j]).powi(2);
        den += b[j] * b[j];
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// `(mean |x|^p)^{1/p}`, scaled by `max |x|` so constants come out exact and
/// large values do not overflow.
pub fn pnorm(samples: &[f64], p: f64) -> f64 {
    let m = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 || samples.is_empty() {
        return 0.0;
    }
    let mean = samples.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>() / samples.len() as f64;
    m * mean.powf(1.0 / p)
}

/// `mean |x|^p`.
pub fn abs_moment(samples: &[f64], p: f64) -> f64 {
    samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
}

/// 95% percentile interval of `stat` over [`BOOTSTRAP_RESAMPLES`] resamples.
pub fn bootstrap_ci<F>(samples: &[f64], stat: F, seed: u64) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = samples.len();
    let mut stats: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            stat(&resample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    percentile_interval(&stats)
}

fn percentile_interval(sorted: &[f64]) -> (f64, f64) {
    let b = sorted.len();
    let lo = ((0.025 * b as f64).floor() as usize).min(b - 1);
    let hi = (((0.975 * b as f64).ceil() as usize).max(1) - 1).min(b - 1);
    (sorted[lo], sorted[hi])
}

fn check_samples(samples: &[f64], p: f64) -> Result<()> {
    if samples.len() < MIN_PNORM_SAMPLES {
        return Err(LabError::TooFewSamples { needed: MIN_PNORM_SAMPLES, got: samples.len() });
    }
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!("moment order must be >= 1, got {p}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(LabError::InvalidArgument("non-finite sample".into()));
    }
    Ok(())
}

/// `||X||_p = (E|X|^p)^{1/p}` with a bootstrap interval.
pub fn empirical_pnorm(samples: &[f64], p: f64, seed: u64) -> Result<Estimate> {
    check_samples(samples, p)?;
    let (ci_lo, ci_hi) = bootstrap_ci(samples, |s| pnorm(s, p), seed);
    Ok(Estimate { value: pnorm(samples, p), ci_lo, ci_hi, n: samples.len() })
}

/// `E|X|^p` with a bootstrap interval.
pub fn empirical_moment(samples: &[f64], p: f64, seed: u64) -> Result<Estimate> {
    check_samples(samples, p)?;
    let (ci_lo, ci_hi) = bootstrap_ci(samples, |s| abs_moment(s, p), seed);
    Ok(Estimate { value: abs_moment(samples, p), ci_lo, ci_hi, n: samples.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub check_id: String,
    pub p: f64,
    pub t: f64,
    pub x: Option<f64>,
    pub empirical_norm: f64,
    pub bootstrap_ci: (f64, f64),
    pub bound: f64,
    pub satisfied: bool,
}

impl MomentReport {
    fn new(check_id: &str, p: f64, t: f64, est: Estimate, bound: f64) -> Self {
        MomentReport {
            check_id: check_id.to_string(),
            p,
            t,
            x: None,
            empirical_norm: est.value,
            bootstrap_ci: (est.ci_lo, est.ci_hi),
            bound,
            satisfied: est.ci_hi <= bound * (1.0 + ROUNDOFF),
        }
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn row(&self) -> ReportRow {
        ReportRow {
            check_id: self.check_id.clone(),
            p: self.p,
            t: self.t,
            value: self.empirical_norm,
            ci_lo: self.bootstrap_ci.0,
            ci_hi: self.bootstrap_ci.1,
            bound: self.bound,
            verdict: if self.satisfied { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// `exp(t p / 4 ||f||_2^2 + 1/2 ||u0||_1)`, the bound on `||psi(t, x)||_p`.
pub fn psi_moment_bound(spec: &ProblemSpec, p: f64, t: f64) -> f64 {
    (t * p / 4.0 * spec.f_l2_sq() + 0.5 * spec.u0_l1).exp()
}

/// `exp(t p / 8 ||f||_2^2 + 1/2 ||u0||_1)`, stated as a bound on `||1/psi||_p^p`.
pub fn psi_inverse_moment_bound(spec: &ProblemSpec, p: f64, t: f64) -> f64 {
    (t * p / 8.0 * spec.f_l2_sq() + 0.5 * spec.u0_l1).exp()
}

/// Compares the bootstrap upper edge of `||psi(t, x)||_p` with [`psi_moment_bound`].
pub fn check_psi_moment_bound(spec: &ProblemSpec, samples: &[f64], p: f64, t: f64, seed: u64) -> Result<MomentReport> {
    let est = empirical_pnorm(samples, p, seed)?;
    Ok(MomentReport::new("psi-moment", p, t, est, psi_moment_bound(spec, p, t)))
}

fn inverses(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|&v| !(v > 0.0)) {
        return Err(LabError::InvalidArgument("inverse moments need strictly positive psi samples".into()));
    }
    Ok(samples.iter().map(|v| 1.0 / v).collect())
}

/// Compares the bootstrap upper edge of `E[psi^{-p}]` with [`psi_inverse_moment_bound`].
pub fn check_psi_inverse_moment_bound(
    spec: &ProblemSpec,
    samples: &[f64],
    p: f64,
    t: f64,
    seed: u64,
) -> Result<MomentReport> {
    let est = empirical_moment(&inverses(samples)?, p, seed)?;
    Ok(MomentReport::new("psi-inverse-moment", p, t, est, psi_inverse_moment_bound(spec, p, t)))
}

/// Same exponent read as a bound on the norm `||1/psi||_p` rather than its p-th power;
/// this is what the Jensen plus exponential-martingale argument gives.
pub fn check_psi_inverse_norm_bound(
    spec: &ProblemSpec,
    samples: &[f64],
    p: f64,
    t: f64,
    seed: u64,
) -> Result<MomentReport> {
    let est = empirical_pnorm(&inverses(samples)?, p, seed)?;
    Ok(MomentReport::new("psi-inverse-norm", p, t, est, psi_inverse_moment_bound(spec, p, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Space,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Psi,
    Dpsi,
    U,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::Space => "space",
            Variable::Time => "time",
        })
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Psi => "psi",
            FieldKind::Dpsi => "dpsi",
            FieldKind::U => "u",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub variable: Variable,
    pub field: FieldKind,
    pub p: f64,
    /// Lags in cells (space) or steps (time).
    pub lags: Vec<usize>,
    pub structure_values: Vec<f64>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub claimed_exponent: f64,
}

impl HolderFit {
    /// Slope no more than [`HOLDER_TOLERANCE`] below the claim; the claims are
    /// lower bounds on smoothness.
    pub fn consistent(&self) -> bool {
        self.slope >= self.claimed_exponent - HOLDER_TOLERANCE
    }

    /// Slope within the two-sided band used where the claim is expected sharp.
    pub fn sharp(&self) -> bool {
        self.consistent() && self.slope <= self.claimed_exponent + HOLDER_SHARP_TOLERANCE
    }

    pub fn row(&self, check_id: &str, t: f64) -> ReportRow {
        ReportRow {
            check_id: check_id.to_string(),
            p: self.p,
            t,
            value: self.slope,
            ci_lo: self.slope_ci.0,
            ci_hi: self.slope_ci.1,
            bound: self.claimed_exponent,
            verdict: if self.consistent() { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Smallest lag, in cells or steps, accepted by [`holder_fit`].
pub const MIN_LAG: usize = 2;

/// Log-spaced integer lags from `lo` to `hi` (duplicates removed).
pub fn lag_ladder(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let mut v: Vec<usize> = crate::kernel::log_spaced(lo as f64, hi as f64, count)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    v.dedup();
    v
}

/// Structure-function regression: `slope = d log E|X(a + lag) - X(a)|^p / d log lag / p`,
/// increments pooled over the central half-window (and, in space, over every
/// recorded slice with `n > 0`; in time, over every recorded pair of slices with
/// base `n > 0`). The interval resamples realizations.
pub fn holder_fit(
    ensemble: &[ScalarField],
    field: FieldKind,
    variable: Variable,
    p: f64,
    lags: &[usize],
    claimed_exponent: f64,
    seed: u64,
) -> Result<HolderFit> {
    if ensemble.is_empty() {
        return Err(LabError::TooFewSamples { needed: 1, got: 0 });
    }
    if let Some(&lag) = lags.iter().find(|&&l| l < MIN_LAG) {
        return Err(LabError::LagBelowResolution { lag, min: MIN_LAG });
    }
    let (lo, hi) = (lags.iter().min().copied().unwrap_or(0), lags.iter().max().copied().unwrap_or(0));
    if lags.len() < 5 || (hi as f64 / lo as f64).log10() < 1.5 - 1e-9 {
        return Err(LabError::InvalidArgument(format!(
            "need >= 5 lags over >= 1.5 decades, got {} lags over [{lo}, {hi}]",
            lags.len()
        )));
    }
    let grid = *ensemble[0].grid();
    if ensemble.iter().any(|f| *f.grid() != grid || f.time_indices() != ensemble[0].time_indices()) {
        return Err(LabError::Mismatch("ensemble members must share lattice and slices".into()));
    }
    // per realization, per lag: sum of |increment|^p and the shared count
    let central = grid.central_cells();
    let times = ensemble[0].time_indices();
    let mut counts = vec![0usize; lags.len()];
    let sums: Vec<Vec<f64>> = ensemble
        .iter()
        .map(|f| {
            lags.iter()
                .map(|&lag| {
                    let mut s = 0.0;
                    match variable {
                        Variable::Space => {
                            for (k, &n) in times.iter().enumerate() {
                                if n == 0 {
                                    continue;
                                }
                                let row = f.row(k);
                                for j in central.start..central.end.saturating_sub(lag) {
                                    s += (row[j + lag] - row[j]).abs().powf(p);
                                }
                            }
                        }
                        Variable::Time => {
                            for (k, &n) in times.iter().enumerate() {
                                if n == 0 {
                                    continue;
                                }
                                if let Some(k2) = f.position(n + lag) {
                                    let (a, b) = (f.row(k), f.row(k2));
                                    for j in central.clone() {
                                        s += (b[j] - a[j]).abs().powf(p);
                                    }
                                }
                            }
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    for (i, &lag) in lags.iter().enumerate() {
        counts[i] = match variable {
            Variable::Space => {
                times.iter().filter(|&&n| n > 0).count() * central.end.saturating_sub(lag).saturating_sub(central.start)
            }
            Variable::Time => {
                times.iter().filter(|&&n| n > 0 && ensemble[0].position(n + lag).is_some()).count() * central.len()
            }
        };
        if counts[i] == 0 {
            return Err(LabError::InvalidArgument(format!("lag {lag} has no increments inside the probe window")));
        }
    }
    let unit = match variable {
        Variable::Space => grid.dx(),
        Variable::Time => grid.dt(),
    };
    let xs: Vec<f64> = lags.iter().map(|&l| (l as f64 * unit).ln()).collect();
    let fit = |members: &mut dyn Iterator<Item = usize>| -> Result<(f64, Vec<f64>)> {
        let mut tot = vec![0.0; lags.len()];
        let mut m = 0usize;
        for r in members {
            m += 1;
            for (t, s) in tot.iter_mut().zip(&sums[r]) {
                *t += s;
            }
        }
        let sf: Vec<f64> = tot.iter().zip(&counts).map(|(t, &c)| t / (m * c) as f64).collect();
        if sf.iter().any(|v| !(*v > 0.0)) {
            // a field with identically zero increments is arbitrarily smooth
            return Ok((f64::INFINITY, sf));
        }
        let ys: Vec<f64> = sf.iter().map(|v| v.ln()).collect();
        Ok((linear_fit(&xs, &ys)?.0 / p, sf))
    };
    let r = ensemble.len();
    let (slope, structure_values) = fit(&mut (0..r))?;
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let idx: Vec<usize> = (0..r).map(|_| rng.random_range(0..r)).collect();
            fit(&mut idx.into_iter()).map(|v| v.0)
        })
        .collect::<Result<_>>()?;
    boot.sort_by(f64::total_cmp);
    Ok(HolderFit {
        variable,
        field,
        p,
        lags: lags.to_vec(),
        structure_values,
        slope,
        slope_ci: percentile_interval(&boot),
        claimed_exponent,
    })
}

/// Raw (no bootstrap) `||X(t_n, x_j)||_p` across the ensemble at one lattice point.
fn point_norm(ensemble: &[ScalarField], k: usize, j: usize, p: f64) -> f64 {
    let v: Vec<f64> = ensemble.iter().map(|f| f.row(k)[j]).collect();
    pnorm(&v, p)
}

/// `(t_n, sup_x ||X(t_n, x)||_p)` over the central half-window, for every recorded slice.
pub fn sup_norm_scan(ensemble: &[ScalarField], p: f64) -> Result<Vec<(f64, f64)>> {
    let first = ensemble.first().ok_or(LabError::TooFewSamples { needed: 1, got: 0 })?;
    let g = *first.grid();
    Ok(first
        .time_indices()
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let sup = g.central_cells().map(|j| point_norm(ensemble, k, j, p)).fold(0.0, f64::max);
            (g.t(n), sup)
        })
        .collect())
}

/// `log value` against `t` has no convex kink beyond `tol`: every second
/// divided difference is `<= tol`. Values must be finite and positive.
pub fn log_growth_concave_or_linear(scan: &[(f64, f64)], tol: f64) -> bool {
    if scan.iter().any(|(_, v)| !v.is_finite() || !(*v > 0.0)) {
        return false;
    }
    scan.windows(3).all(|w| {
        let (t0, a) = (w[0].0, w[0].1.ln());
        let (t1, b) = (w[1].0, w[1].1.ln());
        let (t2, c) = (w[2].0, w[2].1.ln());
        let d2 = ((c - b) / (t2 - t1) - (b - a) / (t1 - t0)) / (0.5 * (t2 - t0));
        d2 <= tol
    })
}

/// `(t_n, ||X(t_{n+lag}, x_j) - X(t_n, x_j)||_p)` for every recorded base slice
/// whose partner is also recorded.
pub fn time_increment_scan(ensemble: &[ScalarField], j: usize, lag: usize, p: f64) -> Result<Vec<(f64, f64)>> {
    let first = ensemble.first().ok_or(LabError::TooFewSamples { needed: 1, got: 0 })?;
    let g = *first.grid();
    if j >= g.nx {
        return Err(LabError::IndexOutOfRange(format!("cell {j} >= nx {}", g.nx)));
    }
    let mut out = Vec::new();
    for (k, &n) in first.time_indices().iter().enumerate() {
        if let Some(k2) = first.position(n + lag) {
            let d: Vec<f64> = ensemble.iter().map(|f| f.row(k2)[j] - f.row(k)[j]).collect();
            out.push((g.t(n), pnorm(&d, p)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub t: f64,
    pub x: f64,
    pub u_norm: f64,
    pub inv_psi_norm: f64,
    pub dpsi_norm: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub p: f64,
    pub rows: Vec<ChainRow>,
}

impl ChainReport {
    pub fn fraction_holding(&self) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        self.rows.iter().filter(|r| r.holds).count() as f64 / self.rows.len() as f64
    }

    pub fn all_finite(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.u_norm.is_finite() && r.inv_psi_norm.is_finite() && r.dpsi_norm.is_finite())
    }
}

/// Finiteness of `||u(t, x)||_p` through `||u||_p <= 2 ||1/psi||_{2p} ||d psi/dx||_{2p}`,
/// checked at every recorded slice and every `stride`-th central cell.
pub fn check_u_moment_finiteness(
    u: &[ScalarField],
    psi: &[ScalarField],
    dpsi: &[ScalarField],
    p: f64,
    stride: usize,
) -> Result<ChainReport> {
    if u.is_empty() || u.len() != psi.len() || u.len() != dpsi.len() {
        return Err(LabError::Mismatch("u, psi and dpsi ensembles must be non-empty and of equal size".into()));
    }
    let g = *u[0].grid();
    let times = u[0].time_indices().to_vec();
    for f in psi.iter().chain(dpsi) {
        if *f.grid() != g || f.time_indices() != &times[..] {
            return Err(LabError::Mismatch("ensembles must share lattice and slices".into()));
        }
    }
    let mut rows = Vec::new();
    for (k, &n) in times.iter().enumerate() {
        for j in g.central_cells().step_by(stride.max(1)) {
            let u_norm = point_norm(u, k, j, p);
            let inv: Vec<f64> = psi.iter().map(|f| 1.0 / f.row(k)[j]).collect();
            let inv_psi_norm = pnorm(&inv, 2.0 * p);
            let dpsi_norm = point_norm(dpsi, k, j, 2.0 * p);
            let rhs = 2.0 * inv_psi_norm * dpsi_norm;
            rows.push(ChainRow {
                t: g.t(n),
                x: g.x(j),
                u_norm,
                inv_psi_norm,
                dpsi_norm,
                holds: u_norm <= rhs * (1.0 + ROUNDOFF),
            });
        }
    }
    Ok(ChainReport { p, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported for attention; not a failure.
    Flag,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Flag => "flag",
        })
    }
}

/// One report line: `check_id, p, t, value, ci_lo, ci_hi, bound, verdict`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub check_id: String,
    pub p: f64,
    pub t: f64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

pub const REPORT_HEADER: &str = "check_id,p,t,value,ci_lo,ci_hi,bound,verdict";

pub fn write_report_csv<W: Write>(rows: &[ReportRow], mut w: W) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.check_id,
            fmt_num(r.p),
            fmt_num(r.t),
            fmt_num(r.value),
            fmt_num(r.ci_lo),
            fmt_num(r.ci_hi),
            fmt_num(r.bound),
            r.verdict
        )?;
    }
    Ok(())
}

pub fn write_report_ndjson<W: Write>(rows: &[ReportRow], mut w: W) -> Result<()> {
    for r in rows {
        // numbers go through fmt_num so both formats carry 17 significant digits
        let line = format!(
            "{{\"check_id\":{},\"p\":{},\"t\":{},\"value\":{},\"ci_lo\":{},\"ci_hi\":{},\"bound\":{},\"verdict\":\"{}\"}}",
            serde_json::to_string(&r.check_id)?,
            json_num(r.p),
            json_num(r.t),
            json_num(r.value),
            json_num(r.ci_lo),
            json_num(r.ci_hi),
            json_num(r.bound),
            r.verdict
        );
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        fmt_num(v)
    } else {
        "null".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGrid;
    use crate::problem::{Family, Profile, SigmaKind};
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn regression_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i) = linear_fit(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pnorm_of_constants_is_exact() {
        for c in [3.0, -0.37, 1e200] {
            let e = empirical_pnorm(&vec![c; 150], 4.0, 1).unwrap();
            assert_eq!(e.value, c.abs());
            assert_eq!((e.ci_lo, e.ci_hi), (c.abs(), c.abs()));
        }
        assert!(matches!(empirical_pnorm(&[1.0; 99], 2.0, 1), Err(LabError::TooFewSamples { .. })));
        assert!(empirical_pnorm(&[], 2.0, 1).is_err());
    }

    #[test]
    fn gaussian_moments_inside_the_interval() {
        let s = normals(10_000, 42);
        let e2 = empirical_pnorm(&s, 2.0, 7).unwrap();
        assert!(e2.ci_lo <= 1.0 && 1.0 <= e2.ci_hi, "{e2:?}");
        let e4 = empirical_pnorm(&s, 4.0, 7).unwrap();
        let exact = 3f64.powf(0.25);
        assert!(e4.ci_lo <= exact && exact <= e4.ci_hi, "{e4:?}");
    }

    #[test]
    fn pnorm_is_monotone_in_p() {
        for seed in 0..5 {
            let s: Vec<f64> = normals(500, seed).iter().map(|v| v.exp() - 0.3).collect();
            let mut last = 0.0;
            for p in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
                let v = pnorm(&s, p);
                assert!(v >= last, "p={p}: {v} < {last}");
                last = v;
            }
        }
    }

    #[test]
    fn bootstrap_is_seeded() {
        let s = normals(300, 3);
        assert_eq!(empirical_pnorm(&s, 2.0, 9).unwrap(), empirical_pnorm(&s, 2.0, 9).unwrap());
    }

    #[test]
    fn moment_bound_values() {
        let zero = ProblemSpec::new(Profile::zero(), Profile::zero(), SigmaKind::Additive, 4.0, 0.0).unwrap();
        let r = check_psi_moment_bound(&zero, &[1.0; 200], 2.0, 0.25, 1).unwrap();
        assert_eq!(r.bound, 1.0);
        assert!(r.satisfied);
        let s = ProblemSpec::new(Profile::zero(), Profile::unit(Family::Gaussian), SigmaKind::Additive, 4.0, 0.0).unwrap();
        let b = psi_moment_bound(&s, 2.0, 0.25);
        let exact = (0.125 * (std::f64::consts::PI / 2.0).sqrt()).exp();
        assert!((b - exact).abs() < 1e-12);
        assert!((b - 1.1696).abs() < 1e-4);
        let inv = psi_inverse_moment_bound(&s, 2.0, 0.25);
        assert!((inv - (0.0625 * (std::f64::consts::PI / 2.0).sqrt()).exp()).abs() < 1e-12);
        assert!(check_psi_inverse_moment_bound(&s, &[0.0; 200], 2.0, 0.25, 1).is_err());
    }

    fn field_from(g: LatticeGrid, times: &[usize], f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut vals = Vec::new();
        for &n in times {
            for j in 0..g.nx {
                vals.push(f(g.t(n), g.x(j)));
            }
        }
        ScalarField::from_rows(g, times.to_vec(), vals).unwrap()
    }

    #[test]
    fn smooth_field_is_near_lipschitz() {
        let g = LatticeGrid::new(8.0, 512, 1.0, 100).unwrap();
        let f = field_from(g, &[50, 100], |t, x| (-(x * x) / (1.0 + t)).exp() + 0.3 * x.sin());
        let lags = lag_ladder(2, 64, 6);
        let fit = holder_fit(&[f], FieldKind::U, Variable::Space, 2.0, &lags, 0.5, 1).unwrap();
        assert!(fit.slope >= 0.93, "{}", fit.slope);
        assert!(fit.consistent());
    }

    #[test]
    fn brownian_paths_have_exponent_one_half() {
        // random walks in x: E|B(x+h) - B(x)|^2 = h
        let g = LatticeGrid::new(8.0, 512, 1.0, 1).unwrap();
        let ens: Vec<ScalarField> = (0..50)
            .map(|s| {
                let z = normals(g.nx, 100 + s);
                let mut acc = 0.0;
                let row: Vec<f64> = z.iter().map(|v| {
                    acc += v * g.dx().sqrt();
                    acc
                }).collect();
                ScalarField::from_slice(g, 1, row).unwrap()
            })
            .collect();
        let fit = holder_fit(&ens, FieldKind::Psi, Variable::Space, 2.0, &lag_ladder(2, 64, 6), 0.5, 3).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.03, "{fit:?}");
        assert!(fit.slope_ci.0 <= fit.slope && fit.slope <= fit.slope_ci.1);
        assert!(fit.sharp());
    }

    #[test]
    fn holder_fit_rejects_bad_lags() {
        let g = LatticeGrid::new(8.0, 512, 1.0, 1).unwrap();
        let f = field_from(g, &[1], |_, x| x.sin());
        assert!(matches!(
            holder_fit(&[f.clone()], FieldKind::U, Variable::Space, 2.0, &[1, 2, 4, 8, 16, 64], 0.5, 1),
            Err(LabError::LagBelowResolution { lag: 1, .. })
        ));
        assert!(holder_fit(&[f], FieldKind::U, Variable::Space, 2.0, &[2, 4, 8], 0.5, 1).is_err());
    }

    #[test]
    fn time_fit_uses_slice_pairs() {
        let g = LatticeGrid::new(8.0, 64, 1.0, 400).unwrap();
        let times: Vec<usize> = (100..=200).collect();
        let f = field_from(g, &times, |t, x| t * t + x);
        let fit = holder_fit(&[f], FieldKind::Psi, Variable::Time, 2.0, &lag_ladder(2, 64, 6), 0.5, 1).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn scans_and_chain() {
        let g = LatticeGrid::new(8.0, 64, 1.0, 10).unwrap();
        let z = field_from(g, &[0, 5, 10], |_, _| 0.0);
        let scan = sup_norm_scan(&[z.clone()], 2.0).unwrap();
        assert!(scan.iter().all(|(_, v)| *v == 0.0));
        let one = field_from(g, &[0, 5, 10], |_, _| 1.0);
        let chain = check_u_moment_finiteness(&[z.clone()], &[one], &[z], 2.0, 1).unwrap();
        assert_eq!(chain.fraction_holding(), 1.0);
        assert!(chain.all_finite());

        // deterministic identity u = -2 psi' / psi
        let psi = field_from(g, &[5, 10], |t, x| 1.0 + 0.5 * (-(x * x) / (1.0 + t)).exp());
        let dpsi = field_from(g, &[5, 10], |t, x| -x / (1.0 + t) * (-(x * x) / (1.0 + t)).exp());
        let u = field_from(g, &[5, 10], |t, x| {
            2.0 * x / (1.0 + t) * (-(x * x) / (1.0 + t)).exp() / (1.0 + 0.5 * (-(x * x) / (1.0 + t)).exp())
        });
        let chain = check_u_moment_finiteness(&[u], &[psi], &[dpsi], 2.0, 1).unwrap();
        assert_eq!(chain.fraction_holding(), 1.0);
    }

    #[test]
    fn growth_shape() {
        let lin: Vec<(f64, f64)> = (1..10).map(|k| (0.05 * k as f64, (0.3 * k as f64).exp())).collect();
        assert!(log_growth_concave_or_linear(&lin, 1e-9));
        let conv: Vec<(f64, f64)> = (1..10).map(|k| (0.05 * k as f64, ((k * k) as f64).exp())).collect();
        assert!(!log_growth_concave_or_linear(&conv, 1.0));
    }

    #[test]
    fn report_formats() {
        let rows = vec![ReportRow {
            check_id: "psi-moment".into(),
            p: 2.0,
            t: 0.25,
            value: 1.01,
            ci_lo: 1.0,
            ci_hi: 1.02,
            bound: 1.1696,
            verdict: Verdict::Pass,
        }];
        let mut csv = Vec::new();
        write_report_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(REPORT_HEADER));
        assert!(text.lines().nth(1).unwrap().ends_with(",pass"));
        let mut nd = Vec::new();
        write_report_ndjson(&rows, &mut nd).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&nd).unwrap();
        assert_eq!(v["verdict"], "pass");
        assert_eq!(v["bound"].as_f64().unwrap(), 1.1696);
    }
}
