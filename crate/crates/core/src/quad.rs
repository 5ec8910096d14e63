//! Numerical quadrature: adaptive Gauss-Kronrod (7/15) with global bisection,
//! tanh-sinh on finite intervals, and half-line / whole-line wrappers.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod on `[a, b]`. Stops when the summed error
/// estimate drops below `max(abs_tol, rel_tol * |value|)` or after
/// `max_segments` bisections.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    const MAX_SEGMENTS: usize = 4000;
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    while err > abs_tol.max(rel_tol * total.abs()) && heap.len() < MAX_SEGMENTS {
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    QuadResult { value, error, evaluations: evals }
}

/// Integral over `[a, inf)` via the map `x = a + s / (1 - s)`.
pub fn gauss_kronrod_upper<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    gauss_kronrod(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - s;
            let x = a + s / om;
            let v = f(x) / (om * om);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Integral over the whole real line, split at `center`.
pub fn gauss_kronrod_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    let right = gauss_kronrod_upper(&mut f, center, 0.5 * abs_tol, rel_tol);
    let left = gauss_kronrod_upper(|x| f(2.0 * center - x), center, 0.5 * abs_tol, rel_tol);
    QuadResult {
        value: right.value + left.value,
        error: right.error + left.error,
        evaluations: right.evaluations + left.evaluations,
    }
}

/// Tanh-sinh (double exponential) quadrature on `[a, b]`. Tolerates
/// integrable endpoint singularities; `f` is never evaluated at the endpoints.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    const MAX_LEVEL: usize = 12;
    const T_MAX: f64 = 4.0;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pi_2 = std::f64::consts::FRAC_PI_2;

    // node at parameter t: abscissa offset and weight
    let eval = |t: f64, f: &mut F| -> f64 {
        let sh = pi_2 * t.sinh();
        let ch = sh.cosh();
        // distance from each endpoint, in units of `half`, computed without cancellation
        let compl = 1.0 / (sh.exp() * ch); // 1 - tanh(sh)
        let w = pi_2 * t.cosh() / (ch * ch);
        let xr = b - half * compl;
        let xl = a + half * compl;
        let mut s = 0.0;
        if xr < b && xr > a {
            let v = f(xr);
            if v.is_finite() {
                s += v;
            }
        }
        if t > 0.0 && xl > a && xl < b {
            let v = f(xl);
            if v.is_finite() {
                s += v;
            }
        }
        w * s
    };

    let mut h = 0.5;
    let mut evals = 1;
    let mut sum = {
        let v = f(mid);
        pi_2 * if v.is_finite() { v } else { 0.0 }
    };
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += eval(k as f64 * h, &mut f);
        evals += 2;
        k += 1;
    }
    let mut estimate = sum * h * half;
    let mut error = f64::INFINITY;
    for _ in 1..MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += eval(k as f64 * h, &mut f);
            evals += 2;
            k += 2;
        }
        let next = sum * h * half;
        error = (next - estimate).abs();
        estimate = next;
        if error <= tol * estimate.abs().max(1e-300) || error == 0.0 {
            break;
        }
    }
    QuadResult { value: estimate, error, evaluations: evals }
}

/// Composite trapezoid on a uniform grid; brute-force reference integrator.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}
