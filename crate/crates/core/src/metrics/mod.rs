//! Distances between finite measures and random variables on `R^n`.

pub mod flow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest support accepted by the bounded-Lipschitz solver.
pub const BL_LIMIT: usize = 200;
/// Largest support accepted by the Prokhorov solver.
pub const PROKHOROV_LIMIT: usize = 50;
/// Largest support accepted by the enumeration cross-check.
pub const ENUMERATION_LIMIT: usize = 20;

/// Weighted atoms `Σ w_i δ_{x_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let m = EmpiricalMeasure { points, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn dirac(x: Vec<f64>) -> Self {
        EmpiricalMeasure { points: vec![x], weights: vec![1.0] }
    }

    /// Uniform weights `1/N` on one-dimensional samples.
    pub fn from_samples(xs: &[f64]) -> Self {
        let w = 1.0 / xs.len().max(1) as f64;
        EmpiricalMeasure { points: xs.iter().map(|&x| vec![x]).collect(), weights: vec![w; xs.len()] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.weights.len() {
            return Err(Error::invalid("points and weights differ in length"));
        }
        if self.points.is_empty() {
            return Err(Error::invalid("measure has no atoms"));
        }
        let d = self.points[0].len();
        if d == 0 || self.points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("points must share a positive dimension"));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points must be finite"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be nonnegative and finite"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i e^{i⟨z, x_i⟩}`
    pub fn char_fn(&self, z: &[f64]) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| {
                let t: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
                Complex64::new(w * t.cos(), w * t.sin())
            })
            .sum()
    }

    /// `Σ w_i ‖x_i‖`, a Lipschitz constant of the characteristic function.
    pub fn first_abs_moment(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * euclid(x, &vec![0.0; x.len()])).sum()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    mu.validate()?;
    nu.validate()?;
    if mu.dimension() != nu.dimension() {
        return Err(Error::invalid("measures live in different dimensions"));
    }
    Ok(())
}

fn same_mass(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > 1e-9 * a.max(b) {
        return Err(Error::Unsupported(format!("measures of unequal mass {a} and {b}")));
    }
    Ok(())
}

/// Values of a characteristic function on a node set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharFnGrid {
    pub z: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaOptions {
    /// Number of boxes `[-k, k]^n`, `k = 1..=k_max`.
    pub k_max: usize,
    /// Grid nodes per axis in each box.
    pub nodes_per_axis: usize,
    /// Add a Lipschitz correction for the unsampled part of each box.
    pub modulus_correction: bool,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions { k_max: 40, nodes_per_axis: 64, modulus_correction: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// `Σ_{k ≤ K} 2^{-k} max_{box k} |φ - ψ|` over the grid.
    pub value: f64,
    /// `2 · 2^{-K}`, bounding the omitted boxes.
    pub tail: f64,
    /// Lipschitz allowance for points between nodes (zero unless requested).
    pub correction: f64,
    pub per_box: Vec<f64>,
}

impl GammaReport {
    pub fn upper(&self) -> f64 {
        self.value + self.tail + self.correction
    }
}

impl CharFnGrid {
    /// Union of the regular grids on `[-k, k]^n`, `k = 1..=k_max`.
    pub fn box_nodes(n: usize, k_max: usize, per_axis: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let per_axis = per_axis.max(2);
        for k in 1..=k_max {
            let h = 2.0 * k as f64 / (per_axis - 1) as f64;
            let total = per_axis.pow(n as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut z = Vec::with_capacity(n);
                for _ in 0..n {
                    z.push(-(k as f64) + (rem % per_axis) as f64 * h);
                    rem /= per_axis;
                }
                out.push(z);
            }
        }
        out
    }

    pub fn tabulate<F: Fn(&[f64]) -> Complex64>(nodes: Vec<Vec<f64>>, phi: F) -> Self {
        let values = nodes.iter().map(|z| phi(z)).collect();
        CharFnGrid { z: nodes, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z.len() != self.values.len() || self.z.is_empty() {
            return Err(Error::invalid("grid nodes and values differ in length"));
        }
        let n = self.z[0].len();
        if n == 0 || self.z.iter().any(|z| z.len() != n) {
            return Err(Error::invalid("grid nodes must share a positive dimension"));
        }
        if self.z.iter().flatten().any(|v| !v.is_finite())
            || self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("grid entries must be finite"));
        }
        Ok(())
    }
}

/// Box index of a node: the least `k ≥ 1` with `‖z‖_∞ ≤ k`.
fn box_of(z: &[f64]) -> usize {
    let m = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (m.ceil() as usize).max(1)
}

/// `γ` from two tabulations on the same nodes.
pub fn gamma_from_grids(a: &CharFnGrid, b: &CharFnGrid, k_max: usize) -> Result<GammaReport> {
    a.validate()?;
    b.validate()?;
    if a.z != b.z {
        return Err(Error::GridMismatch("characteristic function grids use different nodes".into()));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be positive"));
    }
    let mut per_box = vec![0.0f64; k_max];
    for (z, (u, v)) in a.z.iter().zip(a.values.iter().zip(&b.values)) {
        let k = box_of(z);
        if k <= k_max {
            per_box[k - 1] = per_box[k - 1].max((u - v).norm());
        }
    }
    for k in 1..k_max {
        per_box[k] = per_box[k].max(per_box[k - 1]);
    }
    let value = per_box.iter().enumerate().map(|(i, s)| s * 0.5f64.powi(i as i32 + 1)).sum();
    Ok(GammaReport { value, tail: 2.0 * 0.5f64.powi(k_max as i32), correction: 0.0, per_box })
}

/// `γ_n(μ, ν) = Σ_k 2^{-k} sup_{‖z‖_∞ ≤ k} |φ_μ(z) - φ_ν(z)|`, sampled on grids.
pub fn gamma_metric(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, opts: &GammaOptions) -> Result<GammaReport> {
    check_pair(mu, nu)?;
    let n = mu.dimension();
    let nodes = CharFnGrid::box_nodes(n, opts.k_max, opts.nodes_per_axis);
    let a = CharFnGrid::tabulate(nodes.clone(), |z| mu.char_fn(z));
    let b = CharFnGrid::tabulate(nodes, |z| nu.char_fn(z));
    let mut report = gamma_from_grids(&a, &b, opts.k_max)?;
    if opts.modulus_correction {
        let lip = mu.first_abs_moment() + nu.first_abs_moment();
        let per_axis = opts.nodes_per_axis.max(2) as f64;
        report.correction = (1..=opts.k_max)
            .map(|k| {
                let h = 2.0 * k as f64 / (per_axis - 1.0);
                0.5f64.powi(k as i32) * (lip * 0.5 * h * (n as f64).sqrt()).min(2.0 - report.per_box[k - 1])
            })
            .sum();
    }
    Ok(report)
}

/// `β(μ, ν) = sup{|∫h d(μ - ν)| : ‖h‖_∞ + Lip(h) ≤ 1}` for measures of equal mass.
///
/// For a fixed Lipschitz budget `ℓ` the inner supremum is the transport cost for
/// `min(ℓ d, 2(1 - ℓ))`; that cost is concave in `ℓ` and is maximised by golden section.
pub fn bounded_lipschitz(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_pair(mu, nu)?;
    same_mass(mu, nu)?;
    for m in [mu, nu] {
        if m.len() > BL_LIMIT {
            return Err(Error::SupportTooLarge { got: m.len(), limit: BL_LIMIT });
        }
    }
    let d: Vec<Vec<f64>> = mu.points.iter().map(|x| nu.points.iter().map(|y| euclid(x, y)).collect()).collect();
    let ot = |l: f64| flow::transport_cost(&mu.weights, &nu.weights, &|i, j| (l * d[i][j]).min(2.0 * (1.0 - l)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = ot(x1);
    let mut f2 = ot(x2);
    while b - a > 1e-11 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = ot(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = ot(x1);
        }
    }
    Ok(f1.max(f2).max(0.0))
}

/// Sorted distinct cross distances, starting at 0.
fn distance_levels(d: &[Vec<f64>]) -> Vec<f64> {
    let mut ds: Vec<f64> = d.iter().flatten().copied().collect();
    ds.push(0.0);
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    ds
}

/// Smallest `ε` with `H(ε) ≤ ε`, where `H` is constant on `(ds[k], ds[k+1]]`.
fn scan_levels(ds: &[f64], mut h: impl FnMut(f64) -> f64) -> f64 {
    let next = |k: usize| ds.get(k + 1).copied().unwrap_or(f64::INFINITY);
    // H is nonincreasing and ds increasing, so feasibility of an interval is monotone in k
    let (mut lo, mut hi) = (0usize, ds.len() - 1);
    let mut h_hi = h(ds[hi]);
    if h(ds[0]) <= next(0) {
        hi = 0;
        h_hi = h(ds[0]);
    }
    while hi > lo + 1 {
        let mid = (lo + hi) / 2;
        let hm = h(ds[mid]);
        if hm <= next(mid) {
            hi = mid;
            h_hi = hm;
        } else {
            lo = mid;
        }
    }
    ds[hi].max(h_hi)
}

fn cross_distances(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Vec<Vec<f64>> {
    mu.points.iter().map(|x| nu.points.iter().map(|y| euclid(x, y)).collect()).collect()
}

/// Prokhorov distance between finite measures:
/// `inf{ε > 0 : μ(A) ≤ ν(A^ε) + ε and ν(A) ≤ μ(A^ε) + ε for all closed A}`.
pub fn prokhorov(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_pair(mu, nu)?;
    for m in [mu, nu] {
        if m.len() > PROKHOROV_LIMIT {
            return Err(Error::SupportTooLarge { got: m.len(), limit: PROKHOROV_LIMIT });
        }
    }
    let d = cross_distances(mu, nu);
    let top = mu.total_mass().max(nu.total_mass());
    // max_A [μ(A) - ν(A^ε)] = μ(R^n) - maxflow, and the matching is symmetric
    let h = |level: f64| (top - flow::bipartite_max_flow(&mu.weights, &nu.weights, &|i, j| d[i][j] <= level)).max(0.0);
    Ok(scan_levels(&distance_levels(&d), h))
}

/// The same distance by enumerating subsets; exponential, for cross-checks on small supports.
pub fn prokhorov_enumerate(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_pair(mu, nu)?;
    for m in [mu, nu] {
        if m.len() > ENUMERATION_LIMIT {
            return Err(Error::SupportTooLarge { got: m.len(), limit: ENUMERATION_LIMIT });
        }
    }
    let d = cross_distances(mu, nu);
    let dt: Vec<Vec<f64>> = (0..nu.len()).map(|j| (0..mu.len()).map(|i| d[i][j]).collect()).collect();
    let excess = |w: &[f64], v: &[f64], dist: &[Vec<f64>], level: f64| -> f64 {
        let m = w.len();
        let nb: Vec<u32> = dist
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &x)| x <= level).fold(0u32, |acc, (j, _)| acc | (1 << j)))
            .collect();
        let mass_v = subset_sums(v);
        let mut best = 0.0f64;
        let mut cover = vec![0u32; 1 << m];
        let mut mass = vec![0.0f64; 1 << m];
        for s in 1usize..(1 << m) {
            let low = s.trailing_zeros() as usize;
            let rest = s & (s - 1);
            cover[s] = cover[rest] | nb[low];
            mass[s] = mass[rest] + w[low];
            best = best.max(mass[s] - mass_v[cover[s] as usize]);
        }
        best
    };
    let h = |level: f64| excess(&mu.weights, &nu.weights, &d, level).max(excess(&nu.weights, &mu.weights, &dt, level));
    Ok(scan_levels(&distance_levels(&d), h))
}

fn subset_sums(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; 1 << v.len()];
    for s in 1usize..out.len() {
        let low = s.trailing_zeros() as usize;
        out[s] = out[s & (s - 1)] + v[low];
    }
    out
}

/// Ky-Fan distance `inf{ε : P(|X - Y| > ε) ≤ ε}` under the empirical law of paired samples.
pub fn ky_fan(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired samples differ in length"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
    ky_fan_from_distances(&d)
}

pub fn ky_fan_from_distances(d: &[f64]) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let n = d.len() as f64;
    let mut s = d.to_vec();
    s.sort_by(f64::total_cmp);
    // on [v, next) the exceedance count is the number of samples above v
    let mut best = 1.0f64;
    let mut level = 0.0f64;
    let mut idx = s.partition_point(|&v| v <= 0.0);
    loop {
        let above = (s.len() - idx) as f64 / n;
        let next = s.get(idx).copied().unwrap_or(f64::INFINITY);
        let cand = level.max(above);
        if cand < next {
            best = best.min(cand);
            break;
        }
        if idx == s.len() {
            break;
        }
        level = next;
        idx = s.partition_point(|&v| v <= level);
    }
    Ok(best)
}

/// `W_1` on the line, `∫ |F_μ - F_ν|`.
pub fn wasserstein_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_pair(mu, nu)?;
    if mu.dimension() != 1 {
        return Err(Error::Unsupported("Wasserstein distance is implemented on the line only".into()));
    }
    same_mass(mu, nu)?;
    let mut ev: Vec<(f64, f64)> = mu
        .points
        .iter()
        .zip(&mu.weights)
        .map(|(p, &w)| (p[0], w))
        .chain(nu.points.iter().zip(&nu.weights).map(|(p, &w)| (p[0], -w)))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut acc = 0.0;
    for w in ev.windows(2) {
        diff += w[0].1;
        acc += diff.abs() * (w[1].0 - w[0].0);
    }
    Ok(acc)
}

/// Metric selector used by the command line and the reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Gamma,
    BoundedLipschitz,
    Prokhorov,
    KyFan,
    Wasserstein,
}
