//! Lévy increments on uniform grids, Riemann–Stieltjes sums for stochastic
//! integrals, and the one-step recursion for almost periodic OU processes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Section;
use crate::levy::LevyTriplet;
use crate::trig::TrigPolynomial;

/// Per-path generator: the master seed picks the key, the path index picks the stream.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` for every path index in parallel; the output order is the index order.
pub fn par_paths<T, F>(n_paths: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Increments of `L` over the cells `[t0 + iΔ, t0 + (i+1)Δ)`, split into drift,
/// Gaussian share and jumps at their exact times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementStream {
    pub t0: f64,
    pub dt: f64,
    /// Un-compensated drift rate `γ'`.
    pub drift_rate: f64,
    pub gauss: Vec<f64>,
    /// Sorted by time.
    pub jumps: Vec<Jump>,
    cell_start: Vec<usize>,
}

impl IncrementStream {
    pub fn new(t0: f64, dt: f64, drift_rate: f64, gauss: Vec<f64>, mut jumps: Vec<Jump>) -> Result<Self> {
        if !(dt > 0.0) || !t0.is_finite() {
            return Err(Error::invalid("increment grid needs a finite start and positive step"));
        }
        let n = gauss.len();
        let end = t0 + n as f64 * dt;
        if jumps.iter().any(|j| !(j.time >= t0 && j.time < end)) {
            return Err(Error::invalid("jump time outside the grid"));
        }
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut s = IncrementStream { t0, dt, drift_rate, gauss, jumps, cell_start: vec![0; n + 1] };
        s.rebucket();
        Ok(s)
    }

    fn rebucket(&mut self) {
        let n = self.gauss.len();
        let mut counts = vec![0usize; n];
        for j in &self.jumps {
            let i = (((j.time - self.t0) / self.dt).floor() as usize).min(n.saturating_sub(1));
            counts[i] += 1;
        }
        let mut acc = 0;
        for i in 0..n {
            self.cell_start[i] = acc;
            acc += counts[i];
        }
        self.cell_start[n] = acc;
    }

    pub fn len(&self) -> usize {
        self.gauss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gauss.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 0.5) * self.dt
    }

    pub fn jumps_in(&self, i: usize) -> &[Jump] {
        &self.jumps[self.cell_start[i]..self.cell_start[i + 1]]
    }

    /// Drift and Gaussian share of cell `i`.
    pub fn continuous_part(&self, i: usize) -> f64 {
        self.drift_rate * self.dt + self.gauss[i]
    }

    /// `ΔL_i`
    pub fn total(&self, i: usize) -> f64 {
        self.continuous_part(i) + self.jumps_in(i).iter().map(|j| j.size).sum::<f64>()
    }

    /// Merges `factor` consecutive cells. Gaussian shares add up, jumps are kept.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.len().is_multiple_of(factor) {
            return Err(Error::invalid("coarsening factor must divide the number of cells"));
        }
        let gauss = self.gauss.chunks(factor).map(|c| c.iter().sum()).collect();
        IncrementStream::new(self.t0, self.dt * factor as f64, self.drift_rate, gauss, self.jumps.clone())
    }

    /// `Σ_i w(mid_i)(γ'Δ + G_i) + Σ_jumps w(τ) J`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += w(self.midpoint(i)) * self.continuous_part(i);
        }
        for j in &self.jumps {
            acc += w(j.time) * j.size;
        }
        acc
    }
}

/// Piecewise sampler for a finite jump measure: atoms plus trapezoids of the density table.
#[derive(Clone, Debug)]
struct JumpSampler {
    cumulative: Vec<f64>,
    pieces: Vec<JumpPiece>,
}

#[derive(Clone, Copy, Debug)]
enum JumpPiece {
    Atom(f64),
    /// Linear density on `[lo, hi]` with end values `(f_lo, f_hi)`; `sign` flips to the negative axis.
    Trapezoid {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        sign: f64,
    },
}

impl JumpSampler {
    fn new(triplet: &LevyTriplet) -> Self {
        let mut pieces = Vec::new();
        let mut masses = Vec::new();
        for a in &triplet.nu.atoms {
            pieces.push(JumpPiece::Atom(a.x));
            masses.push(a.mass);
        }
        if let Some(d) = &triplet.nu.density {
            for (col, sign) in [(&d.positive, 1.0), (&d.negative, -1.0)] {
                for k in 0..d.grid.len() - 1 {
                    let (lo, hi) = (d.grid[k], d.grid[k + 1]);
                    let m = 0.5 * (col[k] + col[k + 1]) * (hi - lo);
                    if m > 0.0 {
                        pieces.push(JumpPiece::Trapezoid { lo, hi, f_lo: col[k], f_hi: col[k + 1], sign });
                        masses.push(m);
                    }
                }
            }
        }
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        JumpSampler { cumulative, pieces }
    }

    fn rate(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.rate();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.pieces.len() - 1);
        match self.pieces[k] {
            JumpPiece::Atom(x) => x,
            JumpPiece::Trapezoid { lo, hi, f_lo, f_hi, sign } => {
                let w = hi - lo;
                let area = 0.5 * (f_lo + f_hi) * w;
                let v: f64 = rng.random::<f64>() * area;
                let slope = (f_hi - f_lo) / w;
                // root of f_lo·y + slope·y²/2 = v, written without cancellation
                let y = 2.0 * v / (f_lo + (f_lo * f_lo + 2.0 * slope * v).max(0.0).sqrt());
                sign * (lo + y.clamp(0.0, w))
            }
        }
    }
}

/// Options shared by the samplers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// Add the second moment of truncated small jumps to the Gaussian variance.
    #[serde(default)]
    pub small_jump_surrogate: bool,
}

fn gaussian_variance(triplet: &LevyTriplet, opts: &SimOptions) -> f64 {
    let extra = match (&triplet.nu.truncation, opts.small_jump_surrogate) {
        (Some(t), true) => t.discarded_second_moment,
        _ => 0.0,
    };
    triplet.a + extra
}

/// Increments of `L` on `n` cells of width `dt` starting at `t0`.
pub fn sample_increments<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    t0: f64,
    dt: f64,
    n: usize,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<IncrementStream> {
    triplet.validate()?;
    let sampler = JumpSampler::new(triplet);
    let rate = sampler.rate();
    if !rate.is_finite() {
        return Err(Error::Unsupported("infinite-activity jump measure; truncate small jumps first".into()));
    }
    let sd = (gaussian_variance(triplet, opts) * dt).sqrt();
    let gauss: Vec<f64> = if sd > 0.0 {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    let mut jumps = Vec::new();
    let span = n as f64 * dt;
    let lambda = rate * span;
    if lambda > 0.0 {
        let count = Poisson::new(lambda).map_err(|e| Error::Numerical(e.to_string()))?.sample(rng) as usize;
        jumps.reserve(count);
        for _ in 0..count {
            let time = t0 + rng.random::<f64>() * span;
            let size = sampler.sample(rng);
            jumps.push(Jump { time, size });
        }
    }
    IncrementStream::new(t0, dt, triplet.raw_drift(), gauss, jumps)
}

/// Precomputed cell weights for one or more integrands over a shared grid.
/// Each sample is a coupled vector `(∫ f_1 dL, …, ∫ f_k dL)` driven by one increment stream.
///
/// Cells are weighted at their midpoints, except cells holding a breakpoint of the weights:
/// there the weight is the cell average, and the Gaussian part of `∫ (w - w̄) dW` over the cell,
/// which is independent of the cell increment, is drawn separately from its exact covariance.
pub struct StochasticIntegrator<'a> {
    triplet: LevyTriplet,
    t0: f64,
    dt: f64,
    n: usize,
    mid: Vec<Vec<f64>>,
    /// `(cell, L)` with `L Lᵀ = (1/Δ)∫_cell (w - w̄)(w - w̄)ᵀ`, row-major lower triangle.
    split: Vec<(usize, Vec<f64>)>,
    jump_weight: JumpWeight<'a>,
    opts: SimOptions,
}

type JumpWeight<'a> = Box<dyn Fn(f64, &mut [f64]) + Send + Sync + 'a>;

/// Lower Cholesky factor of a positive semidefinite `k × k` matrix; null pivots give zero columns.
fn psd_cholesky(a: &[f64], k: usize) -> Vec<f64> {
    let mut l = vec![0.0; k * k];
    let scale = (0..k).map(|i| a[i * k + i]).fold(0.0, f64::max);
    for j in 0..k {
        let d = a[j * k + j] - (0..j).map(|p| l[j * k + p] * l[j * k + p]).sum::<f64>();
        if d <= 1e-14 * scale {
            continue;
        }
        let piv = d.sqrt();
        l[j * k + j] = piv;
        for i in j + 1..k {
            let v = a[i * k + j] - (0..j).map(|p| l[i * k + p] * l[j * k + p]).sum::<f64>();
            l[i * k + j] = v / piv;
        }
    }
    l
}

impl<'a> StochasticIntegrator<'a> {
    /// Integrators for kernel sections; the window covers every section up to `tail_tol`.
    pub fn for_sections(
        sections: &'a [Section],
        triplet: &LevyTriplet,
        dt: f64,
        tail_tol: f64,
        opts: SimOptions,
    ) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::invalid("no integrands"));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in sections {
            if !s.has_decay() {
                return Err(Error::UnboundedTail("integrand without a tail bound".into()));
            }
            if s.is_zero() {
                continue;
            }
            let (a, b) = s.window(tail_tol)?;
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if !(lo < hi) {
            lo = 0.0;
            hi = dt;
        }
        let breaks: Vec<f64> = sections.iter().flat_map(|s| s.breakpoints()).collect();
        Self::build(triplet, lo, hi, dt, opts, sections.len(), &breaks, move |s, out: &mut [f64]| {
            for (o, f) in out.iter_mut().zip(sections) {
                *o = f.eval(s);
            }
        })
    }

    /// Integrator for arbitrary weights `w(s) ∈ R^k` on `[lo, hi]`, smooth inside each cell.
    pub fn with_weight<F>(
        triplet: &LevyTriplet,
        lo: f64,
        hi: f64,
        dt: f64,
        opts: SimOptions,
        k: usize,
        w: F,
    ) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'a,
    {
        Self::build(triplet, lo, hi, dt, opts, k, &[], w)
    }

    /// As [`with_weight`](Self::with_weight), with the discontinuities or kinks of `w` declared.
    #[allow(clippy::too_many_arguments)]
    pub fn build<F>(
        triplet: &LevyTriplet,
        lo: f64,
        hi: f64,
        dt: f64,
        opts: SimOptions,
        k: usize,
        breaks: &[f64],
        w: F,
    ) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'a,
    {
        triplet.validate()?;
        if !(dt > 0.0) || !(hi > lo) {
            return Err(Error::invalid("integration window must be nonempty with a positive step"));
        }
        let n = ((hi - lo) / dt).ceil() as usize;
        let mut mid = vec![vec![0.0; n]; k];
        let mut buf = vec![0.0; k];
        for i in 0..n {
            w(lo + (i as f64 + 0.5) * dt, &mut buf);
            for (col, v) in mid.iter_mut().zip(&buf) {
                col[i] = *v;
            }
        }
        let mut cells: Vec<usize> = breaks
            .iter()
            .filter(|b| b.is_finite() && **b > lo && **b < lo + n as f64 * dt)
            .filter_map(|&b| {
                let i = ((b - lo) / dt).floor() as usize;
                let inside = b > lo + i as f64 * dt && b < lo + (i + 1) as f64 * dt;
                (i < n && inside).then_some(i)
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        let rule = crate::quad::GaussLegendre::new(4);
        let mut split = Vec::with_capacity(cells.len());
        for i in cells {
            let a = lo + i as f64 * dt;
            let (xs, ws) = rule.composite(a, a + dt, breaks, dt);
            let mut mean = vec![0.0; k];
            let mut second = vec![0.0; k * k];
            for (x, wt) in xs.iter().zip(&ws) {
                w(*x, &mut buf);
                for p in 0..k {
                    mean[p] += wt * buf[p] / dt;
                    for q in 0..=p {
                        second[p * k + q] += wt * buf[p] * buf[q] / dt;
                    }
                }
            }
            for p in 0..k {
                mid[p][i] = mean[p];
                for q in 0..=p {
                    let c = second[p * k + q] - mean[p] * mean[q];
                    second[p * k + q] = c;
                    second[q * k + p] = c;
                }
            }
            split.push((i, psd_cholesky(&second, k)));
        }
        Ok(StochasticIntegrator { triplet: triplet.clone(), t0: lo, dt, n, mid, split, jump_weight: Box::new(w), opts })
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.n as f64 * self.dt)
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let stream = sample_increments(&self.triplet, self.t0, self.dt, self.n, &self.opts, rng)?;
        let mut out = self.apply(&stream);
        let sd = (gaussian_variance(&self.triplet, &self.opts) * self.dt).sqrt();
        if sd > 0.0 {
            let k = out.len();
            let mut xi = vec![0.0; k];
            for (_, l) in &self.split {
                for x in xi.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
                for p in 0..k {
                    out[p] += sd * (0..=p).map(|q| l[p * k + q] * xi[q]).sum::<f64>();
                }
            }
        }
        Ok(out)
    }

    /// Evaluates the sums on a given stream, which must match the integrator's grid.
    /// Only the cell averages enter; the within-cell fluctuation is added by [`sample`](Self::sample).
    pub fn apply(&self, stream: &IncrementStream) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .mid
            .iter()
            .map(|col| col.iter().enumerate().map(|(i, w)| w * stream.continuous_part(i)).sum())
            .collect();
        let mut buf = vec![0.0; out.len()];
        for j in &stream.jumps {
            (self.jump_weight)(j.time, &mut buf);
            for (o, w) in out.iter_mut().zip(&buf) {
                *o += w * j.size;
            }
        }
        out
    }
}

/// One draw of `∫ f dL` for a kernel section.
pub fn stochastic_integral<R: Rng + ?Sized>(
    section: &Section,
    triplet: &LevyTriplet,
    dt: f64,
    tail_tol: f64,
    rng: &mut R,
) -> Result<f64> {
    if section.is_zero() {
        return Ok(0.0);
    }
    let sections = std::slice::from_ref(section);
    let integ = StochasticIntegrator::for_sections(sections, triplet, dt, tail_tol, SimOptions::default())?;
    Ok(integ.sample(rng)?[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    /// Depth of the truncated past window used for the initial value.
    pub t_trunc: f64,
    /// Small-jump cutoff recorded by the jump measure, if any.
    pub jump_cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuOptions {
    pub t0: f64,
    pub dt: f64,
    /// Number of steps after `t0`.
    pub steps: usize,
    /// Past depth; the decay estimate is used when absent.
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Target bound on the exponent contribution of the discarded past.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default)]
    pub sim: SimOptions,
}

fn default_tail_tol() -> f64 {
    1e-6
}

/// An OU path together with the increments that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct OuPath {
    pub grid: PathGrid,
    /// Increments on the observed cells `[t0, t0 + steps·dt)`.
    pub increments: IncrementStream,
}

fn check_ou(mu: &TrigPolynomial, triplet: &LevyTriplet) -> Result<()> {
    mu.validate()?;
    if mu.mean() >= 0.0 {
        return Err(Error::Hypothesis(format!(
            "no almost periodic stationary solution constructed: mean of μ is {} ≥ 0",
            mu.mean()
        )));
    }
    if !triplet.nu.log_moment().is_finite() {
        return Err(Error::Hypothesis("jump measure fails the logarithmic moment condition".into()));
    }
    Ok(())
}

/// Past depth `D` such that the kernel mass older than `D` contributes less than `tol`
/// to the exponent, using `∫_s^t μ ≤ -(t-s)C/2 + C'`.
pub fn ou_truncation_depth(mu: &TrigPolynomial, triplet: &LevyTriplet, tol: f64) -> Result<f64> {
    let (rate, offset) = mu.decay_estimate().ok_or_else(|| Error::Hypothesis("mean of μ must be negative".into()))?;
    let bound = |d: f64| {
        let l1 = offset.exp() * (-rate * d).exp() / rate;
        let l2 = (2.0 * offset).exp() * (-2.0 * rate * d).exp() / (2.0 * rate);
        triplet.exponent_tail_bound(l1, l2)
    };
    let mut hi = 1.0 / rate;
    while bound(hi) > tol {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Numerical("truncation depth does not converge".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Runs `X_{i+1} = e^{Z_{i+1}-Z_i}(X_i + Σ e^{-(Z_τ-Z_i)} J + e^{-(Z_mid-Z_i)}(γ'Δ + G))` over a stream.
pub fn ou_from_increments(mu: &TrigPolynomial, stream: &IncrementStream, x_start: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(stream.len() + 1);
    let mut x = x_start;
    out.push(x);
    for i in 0..stream.len() {
        let a = stream.time(i);
        let b = stream.time(i + 1);
        let mut inner = (-mu.increment(a, stream.midpoint(i))).exp() * stream.continuous_part(i);
        for j in stream.jumps_in(i) {
            inner += (-mu.increment(a, j.time)).exp() * j.size;
        }
        x = mu.increment(a, b).exp() * (x + inner);
        out.push(x);
    }
    out
}

/// Stationary OU path on `t0, t0 + dt, …, t0 + steps·dt`.
pub fn ou_path<R: Rng + ?Sized>(
    mu: &TrigPolynomial,
    triplet: &LevyTriplet,
    opts: &OuOptions,
    seed: u64,
    rng: &mut R,
) -> Result<OuPath> {
    check_ou(mu, triplet)?;
    if !(opts.dt > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    let depth = match opts.burn_in {
        Some(d) if d > 0.0 => d,
        Some(_) => return Err(Error::invalid("burn-in must be positive")),
        None => ou_truncation_depth(mu, triplet, opts.tail_tol)?,
    };
    let burn = (depth / opts.dt).ceil() as usize;
    let start = opts.t0 - burn as f64 * opts.dt;
    let all = sample_increments(triplet, start, opts.dt, burn + opts.steps, &opts.sim, rng)?;
    let past = IncrementStream::new(
        start,
        opts.dt,
        all.drift_rate,
        all.gauss[..burn].to_vec(),
        all.jumps.iter().copied().filter(|j| j.time < start + burn as f64 * opts.dt).collect(),
    )?;
    let x0 = ou_from_increments(mu, &past, 0.0).last().copied().unwrap_or(0.0);
    let t0 = start + burn as f64 * opts.dt;
    let future = IncrementStream::new(
        t0,
        opts.dt,
        all.drift_rate,
        all.gauss[burn..].to_vec(),
        all.jumps.iter().copied().filter(|j| j.time >= t0).collect(),
    )?;
    let values = ou_from_increments(mu, &future, x0);
    let times = (0..=opts.steps).map(|i| future.time(i)).collect();
    Ok(OuPath {
        grid: PathGrid {
            times,
            values,
            seed,
            t_trunc: burn as f64 * opts.dt,
            jump_cutoff: triplet.nu.truncation.map(|t| t.epsilon),
        },
        increments: future,
    })
}

/// `n_paths` independent OU paths, path `i` driven by stream `i` of `seed`.
pub fn ou_ensemble(
    mu: &TrigPolynomial,
    triplet: &LevyTriplet,
    opts: &OuOptions,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PathGrid>> {
    par_paths(n_paths, seed, |rng, _| ou_path(mu, triplet, opts, seed, rng).map(|p| p.grid)).into_iter().collect()
}

/// Per-step `|X_{i+1} - X_i - ∫μX ds - ΔL_i|` with the integral by trapezoids.
/// The path splits into the part driven by the jumps of the step, whose trapezoids are
/// split at the jump times, and the rest, which uses one trapezoid over the step.
pub fn step_residuals(mu: &TrigPolynomial, stream: &IncrementStream, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != stream.len() + 1 {
        return Err(Error::GridMismatch("path and increments have different lengths".into()));
    }
    let mut out = Vec::with_capacity(stream.len());
    for i in 0..stream.len() {
        let a = stream.time(i);
        let b = stream.time(i + 1);
        let jumps = stream.jumps_in(i);
        // jump-driven part X_J(s-) = Σ_{τ<s} e^{Z_s - Z_τ} J
        let jump_part = |s: f64| -> f64 {
            jumps.iter().filter(|j| j.time < s).map(|j| mu.increment(j.time, s).exp() * j.size).sum()
        };
        let xj_end = jump_part(b);
        let mut integral = 0.5 * (b - a) * (mu.eval(a) * values[i] + mu.eval(b) * (values[i + 1] - xj_end));
        let mut knots = vec![a];
        knots.extend(jumps.iter().map(|j| j.time).filter(|&t| t > a));
        knots.push(b);
        let mut prev = jumps.iter().filter(|j| j.time == a).map(|j| j.size).sum::<f64>();
        for w in knots.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let end = jump_part(s1);
            integral += 0.5 * (s1 - s0) * (mu.eval(s0) * prev + mu.eval(s1) * end);
            prev = end + jumps.iter().filter(|j| j.time == s1).map(|j| j.size).sum::<f64>();
        }
        out.push((values[i + 1] - values[i] - integral - stream.total(i)).abs());
    }
    Ok(out)
}

/// Maximum of [`step_residuals`].
pub fn recursion_residual(mu: &TrigPolynomial, stream: &IncrementStream, values: &[f64]) -> Result<f64> {
    Ok(step_residuals(mu, stream, values)?.into_iter().fold(0.0, f64::max))
}

/// Cross-sectional summary of an ensemble at each grid time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

pub fn ensemble_summary(paths: &[PathGrid]) -> Result<Vec<EnsembleRow>> {
    let first = paths.first().ok_or_else(|| Error::invalid("empty ensemble"))?;
    if paths.iter().any(|p| p.times != first.times) {
        return Err(Error::GridMismatch("paths use different time grids".into()));
    }
    Ok(first
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut xs: Vec<f64> = paths.iter().map(|p| p.values[k]).collect();
            let (mean, var) = mean_var(&xs);
            xs.sort_by(f64::total_cmp);
            EnsembleRow { t, mean, var, q05: quantile(&xs, 0.05), q95: quantile(&xs, 0.95) }
        })
        .collect())
}
