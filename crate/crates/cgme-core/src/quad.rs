//! One-dimensional quadrature: Gauss-Legendre panels and globally adaptive
//! Gauss-Kronrod (7/15) with finite breakpoints and infinite tails.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, numeric, Result};

/// Scalar types the adaptive integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    const ZERO: Self = 0.0;
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Stopping rule: |error| ≤ max(abs, rel·|value|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[breaks[0], breaks[last]]`; interior
/// breakpoints seed the subdivision (use them at kinks and discontinuities).
pub fn adaptive<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate<T>> {
    if breaks.len() < 2 {
        return Err(invalid!("adaptive quadrature needs at least two breakpoints"));
    }
    if breaks.iter().any(|x| !x.is_finite()) {
        return Err(invalid!("breakpoints must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::ZERO;
    let mut err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = kronrod15(&mut f, w[0], w[1]);
        evals += 15;
        total = total + v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    loop {
        if err <= tol.abs.max(tol.rel * total.magnitude()) {
            return Ok(Estimate { value: total, error: err, evaluations: evals });
        }
        if heap.len() >= tol.max_intervals {
            return Err(numeric!(
                "quadrature stalled after {} panels: error {:.3e}, requested {:.3e}",
                heap.len(),
                err,
                tol.abs.max(tol.rel * total.magnitude())
            ));
        }
        let Some(worst) = heap.pop() else {
            return Ok(Estimate { value: total, error: err, evaluations: evals });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(numeric!("quadrature hit floating-point resolution near {:.6e}, error {:.3e}", mid, err));
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        evals += 30;
        total = total - worst.value + v1 + v2;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// ∫_a^∞ f via x = a + s/(1−s).
pub fn semi_infinite<T: QuadValue>(mut f: impl FnMut(f64) -> T, a: f64, tol: Tolerance) -> Result<Estimate<T>> {
    adaptive(
        |s| {
            let u = 1.0 - s;
            f(a + s / u) * (1.0 / (u * u))
        },
        &[0.0, 0.5, 1.0],
        tol,
    )
}

/// ∫_{−∞}^{∞} f with the given finite breakpoints (at least one) splitting
/// the line; the two tails are mapped onto unit intervals.
pub fn real_line<T: QuadValue>(mut f: impl FnMut(f64) -> T, breaks: &[f64], tol: Tolerance) -> Result<Estimate<T>> {
    if breaks.is_empty() {
        return Err(invalid!("real_line needs at least one finite breakpoint"));
    }
    let lo = breaks[0];
    let hi = breaks[breaks.len() - 1];
    let share = Tolerance { abs: tol.abs / 3.0, ..tol };
    let left = semi_infinite(|x| f(2.0 * lo - x), lo, share)?;
    let right = semi_infinite(&mut f, hi, share)?;
    let mid = if breaks.len() > 1 {
        adaptive(&mut f, breaks, share)?
    } else {
        Estimate { value: T::ZERO, error: 0.0, evaluations: 0 }
    };
    Ok(Estimate {
        value: left.value + mid.value + right.value,
        error: left.error + mid.error + right.error,
        evaluations: left.evaluations + mid.evaluations + right.evaluations,
    })
}

/// Gauss-Legendre rule on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid!("Gauss-Legendre order must be positive"));
        }
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton iteration from the Tricomi initial guess.
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<T: QuadValue>(&self, mut f: impl FnMut(f64) -> T, a: f64, b: f64) -> T {
        self.panel(a, b).fold(T::ZERO, |acc, (x, w)| acc + f(x) * w)
    }

    /// Composite rule over the given breakpoints.
    pub fn composite(&self, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.order() * breaks.len().saturating_sub(1));
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(self.panel(w[0], w[1]));
            }
        }
        out
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// sin(x)/x with the removable point filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        libm::sin(x) / x
    }
}

/// Splits [a, b] into panels no longer than `max_len`, honoring interior cuts.
pub fn panel_breaks(a: f64, b: f64, cuts: &[f64], max_len: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    pts.push(a);
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len());
    out.push(a);
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        let pieces = if max_len > 0.0 { libm::ceil(len / max_len).max(1.0) as usize } else { 1 };
        for k in 1..=pieces {
            out.push(w[0] + len * k as f64 / pieces as f64);
        }
    }
    out
}
