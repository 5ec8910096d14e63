//! Heat kernel `G_t(x) = (4 pi t)^{-1/2} exp(-x^2 / 4t)`, its action on lattice
//! slices, and the increment-scaling integral of the kernel lemma.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::io::fmt_num;
use crate::lattice::LatticeGrid;
use crate::quad;
use crate::stats::linear_fit;

/// `G_t(x)` with its first and second spatial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
}

#[inline]
pub(crate) fn gaussian(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

pub fn heat_kernel(t: f64, x: f64) -> Result<KernelValue> {
    if !(t > 0.0) {
        return Err(LabError::NonPositiveTime(t));
    }
    let g = gaussian(t, x);
    Ok(KernelValue {
        value: g,
        dx: -x / (2.0 * t) * g,
        dxx: (x * x / (4.0 * t * t) - 0.5 / t) * g,
    })
}

/// How a slice is extended beyond the window before convolving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero outside the window.
    Zero,
    /// Each side continues with its edge value; used for fields that tend to
    /// non-zero constants at infinity (`psi`).
    Edge,
}

/// Heat semigroup `G_t *` and `(d/dx G_t) *` on a lattice slice, applied as a
/// Fourier multiplier on a padded periodic buffer.
pub struct HeatPropagator {
    t: f64,
    nx: usize,
    n_fft: usize,
    pad: usize,
    /// `exp(-k^2 t) / n_fft`
    mult: Vec<f64>,
    /// `i k exp(-k^2 t) / n_fft` stored as the imaginary coefficient; zero at Nyquist
    dmult: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HeatPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatPropagator")
            .field("t", &self.t)
            .field("nx", &self.nx)
            .field("n_fft", &self.n_fft)
            .field("pad", &self.pad)
            .finish()
    }
}

impl HeatPropagator {
    pub fn new(grid: &LatticeGrid, t: f64) -> Result<Self> {
        Self::with_spacing(grid.nx, grid.dx(), t)
    }

    pub fn with_spacing(nx: usize, dx: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(LabError::NonPositiveTime(t));
        }
        // kernel support: 7 standard deviations of N(0, 2t) plus a guard
        let pad = (7.0 * (2.0 * t).sqrt() / dx).ceil() as usize + 4;
        let n_fft = (nx + 3 * pad).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_fft);
        let inv = planner.plan_fft_inverse(n_fft);
        let dk = 2.0 * PI / (n_fft as f64 * dx);
        let norm = 1.0 / n_fft as f64;
        let mut mult = vec![0.0; n_fft];
        let mut dmult = vec![0.0; n_fft];
        for m in 0..n_fft {
            let k = if m <= n_fft / 2 { m as f64 } else { m as f64 - n_fft as f64 } * dk;
            mult[m] = (-k * k * t).exp() * norm;
            dmult[m] = if m == n_fft / 2 { 0.0 } else { k * mult[m] };
        }
        Ok(HeatPropagator { t, nx, n_fft, pad, mult, dmult, fwd, inv })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    fn load(&self, input: &[f64], padding: Padding, buf: &mut [Complex64], imag: bool) {
        let nx = self.nx;
        let n = self.n_fft;
        let put = |b: &mut Complex64, v: f64| {
            if imag {
                b.im = v;
            } else {
                b.re = v;
            }
        };
        for (b, &v) in buf.iter_mut().zip(input) {
            put(b, v);
        }
        match padding {
            Padding::Zero => {
                for b in &mut buf[nx..] {
                    put(b, 0.0);
                }
            }
            Padding::Edge => {
                let left = input[0];
                let right = input[nx - 1];
                let p = self.pad;
                let ramp = (n - nx - 2 * p + 1) as f64;
                for i in nx..n {
                    let dr = i - nx + 1;
                    let dl = n - i;
                    let v = if dr <= p {
                        right
                    } else if dl <= p {
                        left
                    } else {
                        let s = (dr - p) as f64 / ramp;
                        right + (left - right) * 0.5 * (1.0 - (PI * s).cos())
                    };
                    put(&mut buf[i], v);
                }
            }
        }
    }

    fn check(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.nx {
            return Err(LabError::Mismatch(format!("slice of {} cells, propagator built for {}", input.len(), self.nx)));
        }
        Ok(())
    }

    /// `G_t * h`.
    pub fn apply(&self, input: &[f64], padding: Padding) -> Result<Vec<f64>> {
        Ok(self.apply_both(input, padding)?.0)
    }

    /// `(d/dx G_t) * h`.
    pub fn apply_dx(&self, input: &[f64], padding: Padding) -> Result<Vec<f64>> {
        Ok(self.apply_both(input, padding)?.1)
    }

    /// `(G_t * h, (d/dx G_t) * h)` from one forward and one inverse transform.
    pub fn apply_both(&self, input: &[f64], padding: Padding) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(input)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_fft];
        self.load(input, padding, &mut buf, false);
        self.fwd.process(&mut buf);
        // spectrum of P h + i (Px h): both real, so one inverse transform splits them
        for (m, z) in buf.iter_mut().enumerate() {
            let h = *z;
            let p = h * self.mult[m];
            let px = h * Complex64::new(0.0, self.dmult[m]);
            *z = p + Complex64::new(0.0, 1.0) * px;
        }
        self.inv.process(&mut buf);
        let a = buf[..self.nx].iter().map(|z| z.re).collect();
        let b = buf[..self.nx].iter().map(|z| z.im).collect();
        Ok((a, b))
    }

    /// `G_t * a + (d/dx G_t) * b`, both zero-padded or both edge-padded.
    pub fn apply_sum(&self, a: &[f64], b: &[f64], padding: Padding) -> Result<Vec<f64>> {
        self.check(a)?;
        self.check(b)?;
        let n = self.n_fft;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        self.load(a, padding, &mut buf, false);
        self.load(b, padding, &mut buf, true);
        self.fwd.process(&mut buf);
        let spec = buf.clone();
        for m in 0..n {
            let z = spec[m];
            let zc = spec[(n - m) % n].conj();
            let fa = (z + zc) * 0.5;
            let fb = (z - zc) * Complex64::new(0.0, -0.5);
            buf[m] = fa * self.mult[m] + fb * Complex64::new(0.0, self.dmult[m]);
        }
        self.inv.process(&mut buf);
        Ok(buf[..self.nx].iter().map(|z| z.re).collect())
    }

    /// Matrix of the linear map `h -> G_t * h` (row `i` = output cell), for
    /// pairwise sums and tests. O(nx^2) memory.
    pub fn matrix(&self, padding: Padding, derivative: bool) -> Result<Vec<f64>> {
        let nx = self.nx;
        let mut m = vec![0.0; nx * nx];
        let mut e = vec![0.0; nx];
        for k in 0..nx {
            e[k] = 1.0;
            let (p, px) = self.apply_both(&e, padding)?;
            let col = if derivative { px } else { p };
            for i in 0..nx {
                m[i * nx + k] = col[i];
            }
            e[k] = 0.0;
        }
        Ok(m)
    }
}

/// `G_t * h` on the lattice with zero padding outside the window.
pub fn convolve(grid: &LatticeGrid, t: f64, slice: &[f64]) -> Result<Vec<f64>> {
    HeatPropagator::new(grid, t)?.apply(slice, Padding::Zero)
}

/// `(d/dx G_t) * h` with zero padding.
pub fn convolve_dx(grid: &LatticeGrid, t: f64, slice: &[f64]) -> Result<Vec<f64>> {
    HeatPropagator::new(grid, t)?.apply_dx(slice, Padding::Zero)
}

/// Exponents of the kernel lemma, validated against
/// `beta (theta1 - theta2 - 1) < 2 < beta (3 theta1 - theta2 - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Params {
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
}

impl Lemma1Params {
    pub fn new(theta1: f64, theta2: f64, beta: f64) -> Result<Self> {
        let bad = || LabError::Lemma1Condition { theta1, theta2, beta };
        if !(theta1 > 0.0) || !(theta2 >= 0.0) || !(beta > 0.0) {
            return Err(bad());
        }
        let lo = beta * (theta1 - theta2 - 1.0);
        let hi = beta * (3.0 * theta1 - theta2 - 1.0);
        if !(lo < 2.0 && 2.0 < hi) {
            return Err(bad());
        }
        Ok(Lemma1Params { theta1, theta2, beta })
    }

    /// Rate `1 - beta (theta1 - theta2 - 1) / 2` of the bound in `t2 - t1`.
    pub fn exponent(&self) -> f64 {
        1.0 - self.beta * (self.theta1 - self.theta2 - 1.0) / 2.0
    }
}

/// `int_R |D_r(y)|^theta1 |y|^theta2 dy` with
/// `D_r(y) = (4 pi)^{-1/2} [exp(-y^2/(4(1+r))) / sqrt(1+r) - exp(-y^2/4)]`:
/// the inner kernel-difference integral after `x = sqrt(s) y`, `r = tau / s`.
fn scaled_difference_integral(p: &Lemma1Params, r: f64) -> f64 {
    let norm = (4.0 * PI).sqrt().recip();
    let lr = r.ln_1p();
    let frac = r / (1.0 + r);
    let diff = |y: f64| -> f64 {
        let y2 = y * y;
        // factor out the larger of the two Gaussians so neither overflows
        let e = 0.25 * y2 * frac - 0.5 * lr;
        let d = if e > 0.0 {
            -norm * (-0.25 * y2 / (1.0 + r) - 0.5 * lr).exp() * (-e).exp_m1()
        } else {
            norm * (-0.25 * y2).exp() * e.exp_m1()
        };
        d.abs().powf(p.theta1) * y.abs().powf(p.theta2)
    };
    // sign change of D_r
    let ystar = (2.0 * lr / frac).sqrt();
    let tol = 1e-11;
    let inner = quad::tanh_sinh(diff, 0.0, ystar, tol).value;
    // the tail lives on the scale of the wider kernel
    let width = (1.0 + r).sqrt();
    let outer = quad::tanh_sinh(
        |s: f64| {
            let om = 1.0 - s;
            width * diff(ystar + width * s / om) / (om * om)
        },
        0.0,
        1.0,
        tol,
    )
    .value;
    2.0 * (inner + outer)
}

/// `int_0^{t1} ( int_R |G_{t2-s}(x) - G_{t1-s}(x)|^theta1 |x|^theta2 dx )^beta ds`.
///
/// With `s -> t1 - s` and the scaling `x = sqrt(s) y` the inner integral is
/// `s^{(1 + theta2 - theta1)/2} H(tau / s)`; the outer integral runs in `log s`
/// split at `s = tau`, where the integrand changes scale.
pub fn lemma1_integral(params: &Lemma1Params, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 > 0.0) || !(t2 > t1) {
        return Err(LabError::InvalidArgument(format!("need 0 < t1 < t2, got t1={t1}, t2={t2}")));
    }
    let tau = t2 - t1;
    let c = (1.0 + params.theta2 - params.theta1) / 2.0;
    let beta = params.beta;
    let integrand = |w: f64| -> f64 {
        let s = w.exp();
        s * (s.powf(c) * scaled_difference_integral(params, tau / s)).powf(beta)
    };
    let s_min = tau * 1e-12;
    let split = tau.min(t1);
    let mut total = quad::gauss_kronrod(integrand, s_min.ln(), split.ln(), 0.0, 1e-9).value;
    if split < t1 {
        total += quad::gauss_kronrod(integrand, split.ln(), t1.ln(), 0.0, 1e-9).value;
    }
    // s < s_min: H is at its r -> infinity limit, integrand ~ s^{exponent - 1}
    let e = params.exponent();
    total += scaled_difference_integral(params, tau / s_min).powf(beta) * s_min.powf(e) / e;
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Fit {
    pub params: Lemma1Params,
    pub t1: f64,
    pub taus: Vec<f64>,
    pub integrals: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

impl Lemma1Fit {
    /// Slope within `tol` of the lemma's exponent.
    pub fn matches_exponent(&self, tol: f64) -> bool {
        (self.slope - self.params.exponent()).abs() <= tol
    }

    /// CSV with header `theta1,theta2,beta,t1,tau,integral,fitted_slope`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "theta1,theta2,beta,t1,tau,integral,fitted_slope")?;
        }
        for (tau, v) in self.taus.iter().zip(&self.integrals) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_num(self.params.theta1),
                fmt_num(self.params.theta2),
                fmt_num(self.params.beta),
                fmt_num(self.t1),
                fmt_num(*tau),
                fmt_num(*v),
                fmt_num(self.slope)
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log integral` against `log tau`.
pub fn lemma1_exponent_fit(params: &Lemma1Params, t1: f64, taus: &[f64]) -> Result<Lemma1Fit> {
    if taus.len() < 3 {
        return Err(LabError::TooFewGaps { needed: 3, got: taus.len() });
    }
    let integrals = taus
        .iter()
        .map(|&tau| lemma1_integral(params, t1, t1 + tau))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    Ok(Lemma1Fit { params: *params, t1, taus: taus.to_vec(), integrals, slope, intercept })
}

/// Gaps `tau_k` log-spaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}
