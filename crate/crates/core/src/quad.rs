//! One-dimensional quadrature.
//!
//! [`integrate`] is a globally adaptive Gauss–Kronrod (7/15) scheme: the
//! interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |value|)`. Callers pass the known
//! discontinuities of the integrand as initial breakpoints.
//!
//! [`GaussLegendre`] provides fixed composite rules for integrands that are
//! evaluated many times over the same nodes.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-9, abs_tol: 1e-13, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
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
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).magnitude();
    (value, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[points[0], points[last]]`, using every entry of
/// `points` as an initial subdivision point. `points` must be sorted.
pub fn integrate<T, F>(mut f: F, points: &[f64], opts: &QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Ok(QuadResult { value: T::zero(), error: 0.0, intervals: 0 });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("quadrature bounds must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    let mut settled_err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b < a {
            return Err(Error::invalid("quadrature breakpoints must be sorted"));
        }
        if b == a {
            continue;
        }
        let (value, err) = gk15(&mut f, a, b);
        total = total + value;
        total_err += err;
        heap.push(Segment { a, b, value, err });
    }
    let mut intervals = heap.len();
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        let width = seg.b - seg.a;
        if width <= 8.0 * f64::EPSILON * seg.a.abs().max(seg.b.abs()).max(1e-300) {
            // Cannot subdivide further; keep the estimate and move on.
            settled_err += seg.err;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if intervals >= opts.max_intervals {
            return Err(Error::Quadrature { value: total.magnitude(), residual: total_err, intervals });
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        total = total - seg.value + v1 + v2;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        intervals += 1;
    }
    // Re-sum to shed the drift of the running total.
    let mut value = T::zero();
    let mut err = settled_err;
    for seg in heap.iter() {
        value = value + seg.value;
        err += seg.err;
    }
    let value = if heap.is_empty() { total } else { value };
    let target = opts.abs_tol.max(opts.rel_tol * value.magnitude());
    if err > target && settled_err > target {
        return Err(Error::Quadrature { value: value.magnitude(), residual: err, intervals });
    }
    Ok(QuadResult { value, error: err, intervals })
}

/// Convenience wrapper for real integrands on `[a, b]` with interior breakpoints.
pub fn integrate_real<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    interior: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult<f64>> {
    let points = breakpoints(a, b, interior);
    integrate(f, &points, opts)
}

/// Sorted, deduplicated breakpoints of `[a, b]` including the interior points that fall inside.
pub fn breakpoints(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut points = Vec::with_capacity(interior.len() + 2);
    points.push(a);
    points.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + x.abs()));
    points
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule on `[a, b]` split at `interior` points and into panels no wider than `max_panel`.
    pub fn composite(&self, a: f64, b: f64, interior: &[f64], max_panel: f64) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for w in breakpoints(a, b, interior).windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            for p in 0..panels {
                let pa = lo + p as f64 * h;
                let c = pa + 0.5 * h;
                for (x, wt) in self.nodes.iter().zip(&self.weights) {
                    xs.push(c + 0.5 * h * x);
                    ws.push(0.5 * h * wt);
                }
            }
        }
        (xs, ws)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}
