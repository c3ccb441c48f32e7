//! Scans for ε-almost periods of trigonometric polynomials and of the
//! finite-dimensional laws of stochastic integrals `X_t = ∫ f(t, s) dL(s)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Section};
use crate::levy::{LevyTriplet, QuadSpec};
use crate::metrics::CharFnGrid;
use crate::quad::QuadOptions;
use crate::trig::TrigPolynomial;

pub use crate::kernel::kernel_shift_distance;

/// Points of the `t`-grid used for suprema over time.
pub const T_GRID_POINTS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementProfile {
    pub tau_grid: Vec<f64>,
    pub d: Vec<f64>,
    pub epsilon: f64,
    /// Shifts with `D(τ) < ε`, sorted.
    pub found: Vec<f64>,
    /// Largest gap between consecutive found shifts; `None` with fewer than two.
    pub max_gap: Option<f64>,
    /// Bound on how much the grid supremum can underestimate the true supremum.
    pub resolution_error: f64,
}

impl DisplacementProfile {
    fn build(tau_grid: Vec<f64>, d: Vec<f64>, epsilon: f64, resolution_error: f64) -> Self {
        let found: Vec<f64> = tau_grid.iter().zip(&d).filter(|(_, &v)| v < epsilon).map(|(t, _)| *t).collect();
        let max_gap = found.windows(2).map(|w| w[1] - w[0]).reduce(f64::max);
        DisplacementProfile { tau_grid, d, epsilon, found, max_gap, resolution_error }
    }

    /// Same scan read at another level.
    pub fn at_level(&self, epsilon: f64) -> Self {
        Self::build(self.tau_grid.clone(), self.d.clone(), epsilon, self.resolution_error)
    }

    /// Maximal runs of consecutive found grid points, as index ranges.
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &v) in self.d.iter().enumerate() {
            match (v < self.epsilon, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(s..self.d.len());
        }
        out
    }
}

/// `0, step, 2 step, …` up to `w`.
pub fn tau_grid(w: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(w >= 0.0) {
        return Err(Error::invalid("window must be nonnegative and the step positive"));
    }
    let n = (w / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Default shift step: a fiftieth of the shortest period.
pub fn default_tau_step(mu: &TrigPolynomial) -> f64 {
    mu.shortest_period().map_or(0.02, |p| p / 50.0)
}

/// `D(τ) = sup_t |μ(t + τ) - μ(t)|` over a 4096-point grid spanning three of the longest time scales.
pub fn scan_function(mu: &TrigPolynomial, eps: f64, w: f64, tau_step: Option<f64>) -> Result<DisplacementProfile> {
    mu.validate()?;
    let step = tau_step.unwrap_or_else(|| default_tau_step(mu));
    let taus = tau_grid(w, step)?;
    let span = 3.0 * mu.longest_scale().unwrap_or(1.0);
    let h = span / (T_GRID_POINTS - 1) as f64;
    let ts: Vec<f64> = (0..T_GRID_POINTS).map(|i| i as f64 * h).collect();
    let base: Vec<f64> = ts.iter().map(|&t| mu.eval(t)).collect();
    let d: Vec<f64> = taus
        .par_iter()
        .map(|&tau| ts.iter().zip(&base).map(|(&t, b)| (mu.eval(t + tau) - b).abs()).fold(0.0, f64::max))
        .collect();
    // |μ'| ≤ Σ|c_k| ω_k; a point is within h/2 of the grid for both arguments
    let lip: f64 = mu.terms.iter().map(|k| k.amplitude.abs() * k.frequency).sum();
    Ok(DisplacementProfile::build(taus, d, eps, lip * h))
}

/// A stochastic-integral process `X_t = ∫ f(t, s) dL(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub kernel: KernelSpec,
    pub triplet: LevyTriplet,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.triplet.validate()
    }
}

fn moments_opts() -> QuadOptions {
    QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-15)
}

/// `(∫ f_j, ∫ f_j f_k)` for the sections at `offsets + y`.
fn gaussian_moments(kernel: &KernelSpec, offsets: &[f64], y: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let opts = moments_opts();
    let sections = offsets.iter().map(|&t| kernel.section(t + y)).collect::<Result<Vec<_>>>()?;
    let n = sections.len();
    let mean = sections.iter().map(|s| s.integral(&opts)).collect::<Result<Vec<_>>>()?;
    let sq = |s: &Section| s.lp_norm(2.0, &opts).map(|v| v * v);
    let mut cov = vec![vec![0.0; n]; n];
    for j in 0..n {
        cov[j][j] = sq(&sections[j])?;
        for k in 0..j {
            let plus = sq(&Section::combination(&[1.0, 1.0], &[sections[j].clone(), sections[k].clone()])?)?;
            let minus = sq(&sections[j].minus(&sections[k]))?;
            cov[j][k] = 0.25 * (plus - minus);
            cov[k][j] = cov[j][k];
        }
    }
    Ok((mean, cov))
}

/// Rows `φ_y(z)` of the joint characteristic function of `(X_{t_1+y}, …, X_{t_n+y})`.
fn char_rows(
    process: &ProcessSpec,
    ys: &[f64],
    offsets: &[f64],
    nodes: &[Vec<f64>],
    spec: &QuadSpec,
) -> Result<Vec<Vec<Complex64>>> {
    let t = &process.triplet;
    if t.is_gaussian() {
        ys.par_iter()
            .map(|&y| {
                let (m, s) = gaussian_moments(&process.kernel, offsets, y)?;
                Ok(nodes
                    .iter()
                    .map(|z| {
                        let zm: f64 = z.iter().zip(&m).map(|(a, b)| a * b).sum();
                        let zsz: f64 =
                            (0..z.len()).map(|j| (0..z.len()).map(|k| z[j] * s[j][k] * z[k]).sum::<f64>()).sum();
                        Complex64::new(-0.5 * t.a * zsz, t.gamma * zm).exp()
                    })
                    .collect())
            })
            .collect()
    } else {
        ys.par_iter()
            .map(|&y| {
                let sections = offsets.iter().map(|&o| process.kernel.section(o + y)).collect::<Result<Vec<_>>>()?;
                nodes.iter().map(|z| Ok(t.eval_integral_exponent(&sections, z, spec)?.value.exp())).collect()
            })
            .collect()
    }
}

/// Nodes of the box `[-k, k]^n`, `per_axis` per axis.
pub fn box_nodes(n: usize, k: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(2);
    let h = 2.0 * k / (per_axis - 1) as f64;
    (0..per_axis.pow(n as u32))
        .map(|idx| {
            let mut rem = idx;
            (0..n)
                .map(|_| {
                    let v = -k + (rem % per_axis) as f64 * h;
                    rem /= per_axis;
                    v
                })
                .collect()
        })
        .collect()
}

fn max_row_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

/// `max_{x ∈ x_grid, z ∈ [-k,k]^n} |φ_x(z) - φ_{x+τ}(z)|`, deterministic.
pub fn marginal_displacement(
    process: &ProcessSpec,
    tau: f64,
    x_grid: &[f64],
    offsets: &[f64],
    k: f64,
    per_axis: usize,
    spec: &QuadSpec,
) -> Result<f64> {
    process.validate()?;
    if offsets.is_empty() || x_grid.is_empty() {
        return Err(Error::invalid("need at least one offset and one grid point"));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let nodes = box_nodes(offsets.len(), k, per_axis);
    let ys: Vec<f64> = x_grid.iter().copied().chain(x_grid.iter().map(|x| x + tau)).collect();
    let rows = char_rows(process, &ys, offsets, &nodes, spec)?;
    let n = x_grid.len();
    Ok((0..n).map(|i| max_row_diff(&rows[i], &rows[n + i])).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyOptions {
    pub eps_list: Vec<f64>,
    /// Shifts are scanned on `[0, window]`.
    pub window: f64,
    #[serde(default)]
    pub tau_step: Option<f64>,
    /// Time offsets `t_1, …, t_n` of the finite-dimensional law.
    #[serde(default = "default_offsets")]
    pub offsets: Vec<f64>,
    /// Length of the `x`-grid; defaults to three of the kernel's longest time scales.
    #[serde(default)]
    pub x_span: Option<f64>,
    /// Half-width of the `z`-box.
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_per_axis")]
    pub per_axis: usize,
    /// Boxes used for the metric translation of cluster representatives.
    #[serde(default = "default_gamma_boxes")]
    pub gamma_boxes: usize,
}

fn default_offsets() -> Vec<f64> {
    vec![0.0]
}
fn default_k() -> f64 {
    3.0
}
fn default_per_axis() -> usize {
    64
}
fn default_gamma_boxes() -> usize {
    8
}

impl CertifyOptions {
    pub fn new(eps_list: Vec<f64>, window: f64) -> Self {
        CertifyOptions {
            eps_list,
            window,
            tau_step: None,
            offsets: default_offsets(),
            x_span: None,
            k: default_k(),
            per_axis: default_per_axis(),
            gamma_boxes: default_gamma_boxes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRep {
    /// Shift with the smallest displacement in its cluster.
    pub tau: f64,
    pub d: f64,
    /// `Σ_{k ≤ K} 2^{-k} max_{x, [-k,k]^n} |φ_x - φ_{x+τ}| + 2·2^{-K}`.
    pub gamma_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub epsilon: f64,
    pub found: Vec<f64>,
    pub max_gap: Option<f64>,
    pub clusters: Vec<ClusterRep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub profile: DisplacementProfile,
    pub levels: Vec<LevelReport>,
    pub tau_step: f64,
    pub x_points: usize,
    pub x_span: f64,
    pub z_nodes: usize,
    /// Always a numerical certificate at the stated resolution, never a proof.
    pub resolution: String,
}

fn default_kernel_step(kernel: &KernelSpec) -> f64 {
    let mu = match kernel {
        KernelSpec::Ou { mu } => Some(mu),
        KernelSpec::Separable { u, .. } | KernelSpec::Translate { u, .. } | KernelSpec::Dilate { u, .. } => Some(u),
        _ => None,
    };
    mu.map_or(0.02, default_tau_step)
}

/// Scans shifts of the finite-dimensional laws and reports ε-almost periods per level.
pub fn certify_ap(process: &ProcessSpec, opts: &CertifyOptions, spec: &QuadSpec) -> Result<CertifyReport> {
    process.validate()?;
    if opts.eps_list.is_empty() || opts.offsets.is_empty() {
        return Err(Error::invalid("need at least one ε and one offset"));
    }
    let step = opts.tau_step.unwrap_or_else(|| default_kernel_step(&process.kernel));
    let taus = tau_grid(opts.window, step)?;
    let span = opts.x_span.unwrap_or_else(|| 3.0 * process.kernel.time_scale().unwrap_or(step));
    let nx = ((span / step).ceil() as usize).max(1);
    // x and x + τ share one grid of step `step`
    let ys: Vec<f64> = (0..nx + taus.len()).map(|i| i as f64 * step).collect();
    let nodes = box_nodes(opts.offsets.len(), opts.k, opts.per_axis);
    let rows = char_rows(process, &ys, &opts.offsets, &nodes, spec)?;
    let d: Vec<f64> = (0..taus.len())
        .into_par_iter()
        .map(|j| (0..nx).map(|i| max_row_diff(&rows[i], &rows[i + j])).fold(0.0, f64::max))
        .collect();
    let first = opts.eps_list[0];
    let profile = DisplacementProfile::build(taus, d, first, f64::NAN);

    let mut levels = Vec::new();
    for &eps in &opts.eps_list {
        let p = profile.at_level(eps);
        let mut clusters = Vec::new();
        for range in p.clusters() {
            let best = range.clone().min_by(|&a, &b| p.d[a].total_cmp(&p.d[b])).unwrap();
            let tau = p.tau_grid[best];
            let gamma_bound =
                gamma_translation(process, tau, step, nx, &opts.offsets, opts.gamma_boxes, opts.per_axis, spec)?;
            clusters.push(ClusterRep { tau, d: p.d[best], gamma_bound });
        }
        levels.push(LevelReport { epsilon: eps, found: p.found.clone(), max_gap: p.max_gap, clusters });
    }
    Ok(CertifyReport {
        profile,
        levels,
        tau_step: step,
        x_points: nx,
        x_span: nx as f64 * step,
        z_nodes: nodes.len(),
        resolution: format!(
            "certified at resolution: tau step {step}, x-grid {nx} points over {:.6}, z-box [-{}, {}]^{} with {} nodes per axis",
            nx as f64 * step,
            opts.k,
            opts.k,
            opts.offsets.len(),
            opts.per_axis
        ),
    })
}

/// Metric translation of one shift: boxes `k = 1..=K` on the same `x`-grid.
#[allow(clippy::too_many_arguments)]
fn gamma_translation(
    process: &ProcessSpec,
    tau: f64,
    step: f64,
    nx: usize,
    offsets: &[f64],
    k_max: usize,
    per_axis: usize,
    spec: &QuadSpec,
) -> Result<f64> {
    let n = offsets.len();
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 * step).collect();
    // coarser z-grid in higher dimension keeps the table small
    let per = if n == 1 { per_axis } else { per_axis.min(16) };
    let nodes = CharFnGrid::box_nodes(n, k_max, per);
    let ys: Vec<f64> = xs.iter().copied().chain(xs.iter().map(|x| x + tau)).collect();
    let rows = char_rows(process, &ys, offsets, &nodes, spec)?;
    let mut per_box = vec![0.0f64; k_max];
    for i in 0..nx {
        for (z, (u, v)) in nodes.iter().zip(rows[i].iter().zip(&rows[nx + i])) {
            let k = (z.iter().fold(0.0f64, |a, b| a.max(b.abs())).ceil() as usize).clamp(1, k_max);
            per_box[k - 1] = per_box[k - 1].max((u - v).norm());
        }
    }
    for k in 1..k_max {
        per_box[k] = per_box[k].max(per_box[k - 1]);
    }
    Ok(per_box.iter().enumerate().map(|(i, s)| s * 0.5f64.powi(i as i32 + 1)).sum::<f64>()
        + 2.0 * 0.5f64.powi(k_max as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Profile;
    use std::f64::consts::PI;

    #[test]
    fn exact_period_is_found() {
        let mu = TrigPolynomial::constant(0.0).with_term(1.0, 2.0 * PI, 0.0);
        let p = scan_function(&mu, 0.01, 5.0, None).unwrap();
        let ints: Vec<f64> = p.found.iter().map(|t| t.round()).collect();
        assert_eq!(ints, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(p.found.iter().all(|t| (t - t.round()).abs() < 1e-9));
        assert!((p.max_gap.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(p.d[0], 0.0);
    }

    #[test]
    fn constant_has_every_shift() {
        let p = scan_function(&TrigPolynomial::constant(-2.0), 1e-3, 3.0, Some(0.1)).unwrap();
        assert_eq!(p.found.len(), p.tau_grid.len());
        assert!(p.d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quasi_periodic_scan_matches_dense_scan() {
        let mu = TrigPolynomial::constant(0.0).with_term(1.0, 1.0, 0.0).with_term(1.0, 2f64.sqrt(), 0.0);
        let step = default_tau_step(&mu);
        let p = scan_function(&mu, 0.1, 200.0, Some(step)).unwrap();
        assert!(p.found.len() > 1);
        let dense = scan_function(&mu, 0.1, 200.0, Some(step / 10.0)).unwrap();
        // every coarse hit reappears on the refined grid
        for t in &p.found {
            assert!(dense.found.iter().any(|u| (u - t).abs() < 1e-9 * (1.0 + t)));
        }
    }

    #[test]
    fn found_sets_compose() {
        let mu = TrigPolynomial::constant(0.0).with_term(1.0, 1.0, 0.0).with_term(0.5, 2f64.sqrt(), 0.3);
        let eps = 0.4;
        let p = scan_function(&mu, eps, 120.0, Some(0.05)).unwrap();
        let half = p.at_level(eps / 2.0);
        for &a in &half.found {
            for &b in &half.found {
                let idx = ((a + b) / 0.05).round() as usize;
                if idx < p.d.len() {
                    assert!(p.d[idx] < eps + 2.0 * p.resolution_error, "{a} + {b}");
                }
            }
        }
    }

    #[test]
    fn separable_shift_distance_factorises() {
        let u = TrigPolynomial::constant(1.0).with_term(0.5, 1.0, 0.0);
        let g = Profile::Exponential { start: 0.0, rate: 1.0, height: 1.0 };
        let k = KernelSpec::Separable { u: u.clone(), g: g.clone() };
        let grid = crate::kernel::uniform_grid(0.0, 2.0 * PI, 64);
        let tau = 0.7;
        let direct = kernel_shift_distance(&k, tau, 0.0, 2.0, &grid, &QuadOptions::default()).unwrap();
        let sup_u = grid.iter().map(|&t| (u.eval(t) - u.eval(t + tau)).abs()).fold(0.0, f64::max);
        assert!((direct - sup_u * 0.5f64.sqrt()).abs() < 1e-8);
        assert_eq!(kernel_shift_distance(&k, 0.0, 0.0, 1.0, &grid, &QuadOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn stationary_ou_has_no_displacement() {
        let p = ProcessSpec {
            kernel: KernelSpec::Ou { mu: TrigPolynomial::constant(-1.0) },
            triplet: LevyTriplet::gaussian(1.0, 0.2),
        };
        let xs = crate::kernel::uniform_grid(0.0, 1.0, 5);
        for tau in [0.0, 0.37, 2.5] {
            let d = marginal_displacement(&p, tau, &xs, &[0.0, 0.3], 3.0, 16, &QuadSpec::default()).unwrap();
            assert!(d < 1e-6, "{tau}: {d}");
        }
    }

    #[test]
    fn non_gaussian_path_agrees_with_moments() {
        // a Gaussian triplet through the general path must match the moment path
        let mu = TrigPolynomial::constant(-1.0).with_term(0.5, 2.0 * PI, 0.0);
        let kernel = KernelSpec::Ou { mu };
        let g = ProcessSpec { kernel: kernel.clone(), triplet: LevyTriplet::gaussian(1.0, 0.0) };
        let nodes = box_nodes(1, 2.0, 5);
        let spec = QuadSpec::default();
        let fast = char_rows(&g, &[0.25], &[0.0], &nodes, &spec).unwrap();
        let sections = [kernel.section(0.25).unwrap()];
        for (z, v) in nodes.iter().zip(&fast[0]) {
            let slow = g.triplet.eval_integral_exponent(&sections, z, &spec).unwrap().value.exp();
            assert!((slow - v).norm() < 1e-8);
        }
    }

    #[test]
    fn stationary_ou_certifies_everywhere() {
        let p = ProcessSpec {
            kernel: KernelSpec::Ou { mu: TrigPolynomial::constant(-1.0) },
            triplet: LevyTriplet::gaussian(1.0, 0.0),
        };
        let mut opts = CertifyOptions::new(vec![1e-4, 1e-2], 2.0);
        opts.tau_step = Some(0.25);
        opts.per_axis = 16;
        let r = certify_ap(&p, &opts, &QuadSpec::default()).unwrap();
        for level in &r.levels {
            assert_eq!(level.found.len(), r.profile.tau_grid.len());
        }
    }
}
