//! m-dependent moving averages `X_t = u(t) ∫ h(t - s) dL(s)`, their asymptotic
//! variance and Monte Carlo checks of the central limit theorem for `∫ X_t dt`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kernel::Profile;
use crate::levy::LevyTriplet;
use crate::quad::{self, QuadOptions};
use crate::simulate::{mean_var, par_paths, sample_increments, SimOptions, StochasticIntegrator};
use crate::trig::TrigPolynomial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MAProcessSpec {
    /// Kernel supported in `[0, m]`.
    pub h: Profile,
    pub triplet: LevyTriplet,
    pub m: f64,
    /// Optional almost periodic modulation `u(t)`.
    #[serde(default)]
    pub u: Option<TrigPolynomial>,
}

impl MAProcessSpec {
    pub fn new(h: Profile, triplet: LevyTriplet, m: f64) -> Result<Self> {
        let s = MAProcessSpec { h, triplet, m, u: None };
        s.validate()?;
        Ok(s)
    }

    /// Moves the drift so that `E L([0,1]) = 0`.
    pub fn centred(mut triplet: LevyTriplet) -> LevyTriplet {
        triplet.gamma = -triplet.nu.large_first_moment();
        triplet
    }

    pub fn validate(&self) -> Result<()> {
        self.triplet.validate()?;
        self.h.validate()?;
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(Error::invalid("dependence width m must be positive"));
        }
        let inside = match &self.h {
            Profile::Zero => true,
            Profile::Indicator { lo, hi, .. } => *lo >= 0.0 && *hi <= self.m,
            _ => false,
        };
        if !inside {
            return Err(Error::Hypothesis(format!("kernel must vanish outside [0, {}]", self.m)));
        }
        if let Some(u) = &self.u {
            u.validate()?;
        }
        let mean = self.triplet.mean();
        if mean.abs() > 1e-10 * (1.0 + self.triplet.gamma.abs()) {
            return Err(Error::Hypothesis(format!("driver must have mean zero, got {mean}")));
        }
        Ok(())
    }

    fn u_at(&self, t: f64) -> f64 {
        self.u.as_ref().map_or(1.0, |u| u.eval(t))
    }

    /// Time mean of `u(t) u(t + s)`.
    fn u_mean_product(&self, s: f64) -> f64 {
        self.u.as_ref().map_or(1.0, |u| u.mean_product(s))
    }

    /// `X_t = u(t) ∫ h(t - s) dL(s)`.
    pub fn x_weight(&self, t: f64, s: f64) -> f64 {
        self.u_at(t) * self.h.eval(t - s)
    }
}

/// Modulates a moving average by `u`, keeping m-dependence and the zero mean.
pub fn ap_modulated_ma(spec: &MAProcessSpec, u: TrigPolynomial) -> Result<MAProcessSpec> {
    let mut out = spec.clone();
    out.u = Some(match &spec.u {
        None => u,
        Some(_) => return Err(Error::Unsupported("spec is already modulated".into())),
    });
    out.validate()?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovProfile {
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    /// `∫_{-m}^{m} g`
    pub v_inf2: f64,
}

/// `∫ h(v) h(v + |s|) dv`
fn overlap(h: &Profile, s: f64, m: f64) -> Result<f64> {
    let s = s.abs();
    if s >= m {
        return Ok(0.0);
    }
    let mut pts = h.breakpoints();
    pts.extend(h.breakpoints().iter().map(|b| b - s));
    let pts = quad::breakpoints(0.0, m - s, &pts);
    let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-15);
    Ok(quad::integrate(|v| h.eval(v) * h.eval(v + s), &pts, &opts)?.value)
}

/// `g(s) = σ_L² · mean(u(t)u(t+s)) · ∫ h(v) h(v+|s|) dv` on `s_grid` (default 2001 points on `[-m, m]`)
/// and `V∞² = ∫ g` by trapezoids.
pub fn asymptotic_cov(spec: &MAProcessSpec, s_grid: Option<&[f64]>) -> Result<CovProfile> {
    spec.validate()?;
    let default: Vec<f64>;
    let s = match s_grid {
        Some(s) => s,
        None => {
            default = crate::kernel::uniform_grid(-spec.m, spec.m, 2001);
            &default
        }
    };
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("s-grid must be increasing"));
    }
    let sigma2 = spec.triplet.variance();
    let g = s
        .iter()
        .map(|&x| Ok(sigma2 * spec.u_mean_product(x) * overlap(&spec.h, x, spec.m)?))
        .collect::<Result<Vec<f64>>>()?;
    let v_inf2 = s.windows(2).zip(g.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum();
    Ok(CovProfile { s: s.to_vec(), g, v_inf2 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub n_reps: usize,
    /// Kolmogorov–Smirnov distance to `N(0, V∞²)`; `NaN` in the degenerate case.
    pub ks_stat: f64,
    pub mean_s: f64,
    pub var_s: f64,
    pub v_inf2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub rows: Vec<CltRow>,
    pub profile: CovProfile,
}

/// `sup_x |F_n(x) - F(x)|`
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Grid step for the time integral.
pub fn time_step(m: f64) -> f64 {
    (m / 100.0).min(0.01)
}

/// Draws of `S_T = (2T)^{-1/2} ∫_{-T}^{T} X_t dt`, the integral by trapezoids on the time grid.
pub fn sample_s(spec: &MAProcessSpec, t: f64, n_reps: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(Error::invalid("T must be positive"));
    }
    let dt = time_step(spec.m);
    let steps = (2.0 * t / dt).round() as usize;
    let scale = 1.0 / (2.0 * t).sqrt();
    let t0 = -t;
    let m = spec.m;
    // S = ∫ c(s) dL(s) with c(s) = scale Σ_j w_j u(t_j) h(t_j - s)
    let weight = move |s: f64, out: &mut [f64]| {
        let lo = (((s - t0) / dt).ceil().max(0.0)) as usize;
        let hi = (((s + m - t0) / dt).floor() as usize).min(steps);
        let mut acc = 0.0;
        if lo <= hi {
            for j in lo..=hi {
                let tj = t0 + j as f64 * dt;
                let w = if j == 0 || j == steps { 0.5 * dt } else { dt };
                acc += w * spec.x_weight(tj, s);
            }
        }
        out[0] = scale * acc;
    };
    let integ = StochasticIntegrator::with_weight(&spec.triplet, t0 - m, t, dt, SimOptions::default(), 1, weight)?;
    par_paths(n_reps, seed, |rng, _| integ.sample(rng).map(|v| v[0])).into_iter().collect()
}

/// Per-`T` seed so that configurations do not share streams.
fn seed_for(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn clt_experiment(spec: &MAProcessSpec, t_list: &[f64], n_reps: usize, seed: u64) -> Result<CltResult> {
    if n_reps < 2 {
        return Err(Error::invalid("need at least two replications"));
    }
    let profile = asymptotic_cov(spec, None)?;
    if profile.v_inf2 < -1e-8 {
        return Err(Error::Numerical(format!("negative asymptotic variance {}", profile.v_inf2)));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        let s = sample_s(spec, t, n_reps, seed_for(seed, k))?;
        let (mean_s, var_s) = mean_var(&s);
        let ks_stat = if profile.v_inf2 > 1e-12 {
            let normal = Normal::new(0.0, profile.v_inf2.sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
            ks_statistic(&s, |x| normal.cdf(x))
        } else {
            f64::NAN
        };
        rows.push(CltRow { t, n_reps, ks_stat, mean_s, var_s, v_inf2: profile.v_inf2 });
    }
    Ok(CltResult { rows, profile })
}

/// Sample correlation of `∫_A X` and `∫_B X` with its standard error `1/√n`.
pub fn block_correlation(
    spec: &MAProcessSpec,
    a: (f64, f64),
    b: (f64, f64),
    n_reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    spec.validate()?;
    let dt = time_step(spec.m);
    let lo = a.0.min(b.0) - spec.m;
    let hi = a.1.max(b.1);
    let block = move |(p, q): (f64, f64), s: f64| -> f64 {
        // ∫_p^q u(t) h(t - s) dt by midpoint sums on the time grid
        let n = ((q - p) / dt).round().max(1.0) as usize;
        let h = (q - p) / n as f64;
        (0..n).map(|i| spec.x_weight(p + (i as f64 + 0.5) * h, s)).sum::<f64>() * h
    };
    let integ = StochasticIntegrator::with_weight(
        &spec.triplet,
        lo,
        hi,
        dt,
        SimOptions::default(),
        2,
        move |s, out: &mut [f64]| {
            out[0] = block(a, s);
            out[1] = block(b, s);
        },
    )?;
    let draws = par_paths(n_reps, seed, |rng, _| integ.sample(rng)).into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = draws.iter().map(|v| v[0]).collect();
    let ys: Vec<f64> = draws.iter().map(|v| v[1]).collect();
    let (mx, vx) = mean_var(&xs);
    let (my, vy) = mean_var(&ys);
    let n = n_reps as f64;
    let cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
    Ok((cov / (vx * vy).sqrt(), 1.0 / n.sqrt()))
}

/// One path of `X` on `t0, t0 + dt, …` (`n` points), `dt` the grid step of the spec.
pub fn simulate_ma_path<R: rand::Rng + ?Sized>(
    spec: &MAProcessSpec,
    t0: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dt = time_step(spec.m);
    let back = (spec.m / dt).ceil() as usize;
    let start = t0 - back as f64 * dt;
    let stream = sample_increments(&spec.triplet, start, dt, back + n, &SimOptions::default(), rng)?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let t = t0 + j as f64 * dt;
        // cells whose midpoints can lie in [t - m, t]
        let first = j;
        let last = (j + back).min(stream.len() - 1);
        let mut acc = 0.0;
        for i in first..=last {
            acc += spec.x_weight(t, stream.midpoint(i)) * stream.continuous_part(i);
            for jump in stream.jumps_in(i) {
                acc += spec.x_weight(t, jump.time) * jump.size;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Ensemble estimate of `(1/2T) ∫_{-T}^{T} E X_{t+s} X_t dt` with its standard error.
pub fn time_average_cov(spec: &MAProcessSpec, s: f64, t: f64, n_reps: usize, seed: u64) -> Result<(f64, f64)> {
    spec.validate()?;
    let dt = time_step(spec.m);
    let lag = (s.abs() / dt).round() as usize;
    let n = (2.0 * t / dt).round() as usize;
    let per_path = par_paths(n_reps, seed, |rng, _| {
        simulate_ma_path(spec, -t, n + lag, rng).map(|x| (0..n).map(|j| x[j] * x[j + lag]).sum::<f64>() / n as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (mean, var) = mean_var(&per_path);
    Ok((mean, (var / n_reps as f64).sqrt()))
}

/// Monte Carlo `sup_t E[X_t² 1{X_t² > k}]` over `t_grid` for each level `k`.
pub fn ui_spot_check(
    spec: &MAProcessSpec,
    t_grid: &[f64],
    levels: &[f64],
    n_reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let dt = time_step(spec.m);
    let mut sup = vec![0.0f64; levels.len()];
    for (idx, &t) in t_grid.iter().enumerate() {
        let xs = par_paths(n_reps, seed_for(seed, idx), |rng, _| simulate_ma_path(spec, t, 1, rng).map(|v| v[0]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for (k, &level) in levels.iter().enumerate() {
            let e = xs.iter().map(|x| x * x).filter(|&x2| x2 > level).sum::<f64>() / n_reps as f64;
            sup[k] = sup[k].max(e);
        }
    }
    let _ = dt;
    Ok(levels.iter().copied().zip(sup).collect())
}
