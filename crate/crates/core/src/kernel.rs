//! Deterministic integrands.
//!
//! A [`Profile`] is a fixed real function of one variable. A [`KernelSpec`]
//! is a time-indexed family `t ↦ f(t, ·)`; fixing `t` yields a [`Section`],
//! the object every quadrature, distribution-function and simulation routine
//! consumes. Sections know their breakpoints, their decay away from a
//! window, and a partition into monotone pieces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions, QuadResult, QuadValue};
use crate::trig::TrigPolynomial;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `height · 1_{[lo, hi]}`
    Indicator {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `height · exp(-rate (x - start)) · 1_{x ≥ start}`
    Exponential {
        #[serde(default)]
        start: f64,
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `height · exp(-(x - center)² / (2 width²))`
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Constant on the whole line. It has no decay; admissibility checks report it.
    Constant {
        value: f64,
    },
}

/// A maximal interval on which a section is continuous and monotone.
/// `fa`, `fb` are the one-sided limits at `a+` and `b-`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub fa: f64,
    pub fb: f64,
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Zero => true,
            Profile::Indicator { lo, hi, height } => lo.is_finite() && hi.is_finite() && lo <= hi && height.is_finite(),
            Profile::Exponential { start, rate, height } => {
                start.is_finite() && rate > 0.0 && rate.is_finite() && height.is_finite()
            }
            Profile::Gaussian { center, width, height } => {
                center.is_finite() && width > 0.0 && width.is_finite() && height.is_finite()
            }
            Profile::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid profile parameters: {self:?}")))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Indicator { lo, hi, height } => {
                if x >= lo && x <= hi {
                    height
                } else {
                    0.0
                }
            }
            Profile::Exponential { start, rate, height } => {
                if x >= start {
                    height * (-rate * (x - start)).exp()
                } else {
                    0.0
                }
            }
            Profile::Gaussian { center, width, height } => {
                let u = (x - center) / width;
                height * (-0.5 * u * u).exp()
            }
            Profile::Constant { value } => value,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Profile::Zero | Profile::Constant { .. } => Vec::new(),
            Profile::Indicator { lo, hi, .. } => vec![lo, hi],
            Profile::Exponential { start, .. } => vec![start],
            Profile::Gaussian { center, .. } => vec![center],
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Indicator { lo, hi, height } => {
                if hi > lo {
                    height.abs()
                } else {
                    0.0
                }
            }
            Profile::Exponential { height, .. } | Profile::Gaussian { height, .. } => height.abs(),
            Profile::Constant { value } => value.abs(),
        }
    }

    fn decays(&self) -> bool {
        !matches!(self, Profile::Constant { value } if *value != 0.0)
    }

    /// `∫ g`, when finite.
    pub fn integral(&self) -> Option<f64> {
        match *self {
            Profile::Zero => Some(0.0),
            Profile::Indicator { lo, hi, height } => Some(height * (hi - lo)),
            Profile::Exponential { rate, height, .. } => Some(height / rate),
            Profile::Gaussian { width, height, .. } => Some(height * width * (2.0 * PI).sqrt()),
            Profile::Constant { value } => (value == 0.0).then_some(0.0),
        }
    }

    /// `(∫ |g|, ∫ g²)` over the whole line.
    pub fn norms(&self) -> (f64, f64) {
        match *self {
            Profile::Zero => (0.0, 0.0),
            Profile::Indicator { lo, hi, height } => (height.abs() * (hi - lo), height * height * (hi - lo)),
            Profile::Exponential { rate, height, .. } => (height.abs() / rate, height * height / (2.0 * rate)),
            Profile::Gaussian { width, height, .. } => {
                (height.abs() * width * (2.0 * PI).sqrt(), height * height * width * PI.sqrt())
            }
            Profile::Constant { value } => {
                if value == 0.0 {
                    (0.0, 0.0)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                }
            }
        }
    }

    /// `(∫ |g|, ∫ g²)` outside `[a, b]`.
    fn tail_masses(&self, a: f64, b: f64) -> (f64, f64) {
        if !(a <= b) {
            return self.norms();
        }
        match *self {
            Profile::Zero => (0.0, 0.0),
            Profile::Indicator { lo, hi, height } => {
                let outside = (a.min(hi) - lo).max(0.0) + (hi - b.max(lo)).max(0.0);
                (height.abs() * outside, height * height * outside)
            }
            Profile::Exponential { start, rate, height } => {
                let h = height.abs();
                let left = if a > start { -(-rate * (a - start)).exp_m1() } else { 0.0 };
                let left2 = if a > start { -(-2.0 * rate * (a - start)).exp_m1() } else { 0.0 };
                let d = b.max(start) - start;
                let right = (-rate * d).exp();
                let right2 = (-2.0 * rate * d).exp();
                (h / rate * (left + right), h * h / (2.0 * rate) * (left2 + right2))
            }
            Profile::Gaussian { center, width, height } => {
                let h = height.abs();
                let left1 = 0.5 * erfc((center - a) / (width * 2f64.sqrt()));
                let right1 = 0.5 * erfc((b - center) / (width * 2f64.sqrt()));
                let left2 = 0.5 * erfc((center - a) / width);
                let right2 = 0.5 * erfc((b - center) / width);
                (
                    h * width * (2.0 * PI).sqrt() * (left1 + right1).min(1.0),
                    h * h * width * PI.sqrt() * (left2 + right2).min(1.0),
                )
            }
            Profile::Constant { value } => {
                if value == 0.0 {
                    (0.0, 0.0)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                }
            }
        }
    }

    /// An interval outside of which `|g| ≤ alpha`.
    fn level_window(&self, alpha: f64) -> Option<(f64, f64)> {
        match *self {
            Profile::Zero => Some((0.0, 0.0)),
            Profile::Indicator { lo, hi, .. } => Some((lo, hi)),
            Profile::Exponential { start, rate, height } => {
                let reach = (height.abs() / alpha).ln().max(0.0) / rate;
                Some((start, start + reach))
            }
            Profile::Gaussian { center, width, height } => {
                let reach = width * (2.0 * (height.abs() / alpha).ln().max(0.0)).sqrt();
                Some((center - reach, center + reach))
            }
            Profile::Constant { value } => {
                if value.abs() <= alpha {
                    Some((0.0, 0.0))
                } else {
                    None
                }
            }
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match *self {
            Profile::Zero => Vec::new(),
            Profile::Indicator { lo, hi, height } => {
                if hi > lo && height != 0.0 {
                    vec![Piece { a: lo, b: hi, fa: height, fb: height }]
                } else {
                    Vec::new()
                }
            }
            Profile::Exponential { start, height, .. } => {
                vec![Piece { a: start, b: f64::INFINITY, fa: height, fb: 0.0 }]
            }
            Profile::Gaussian { center, height, .. } => vec![
                Piece { a: f64::NEG_INFINITY, b: center, fa: 0.0, fb: height },
                Piece { a: center, b: f64::INFINITY, fa: height, fb: 0.0 },
            ],
            Profile::Constant { value } => {
                vec![Piece { a: f64::NEG_INFINITY, b: f64::INFINITY, fa: value, fb: value }]
            }
        }
    }
}

/// A kernel section `x ↦ f(t, x)` at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub enum Section {
    /// `amp · g(scale · x + shift)`
    Profile { profile: Profile, amp: f64, scale: f64, shift: f64 },
    /// `exp(∫_s^t μ) · 1_{s ≤ t}` as a function of `s`
    Ou { mu: TrigPolynomial, t: f64 },
    /// `Σ w_j f_j`
    Sum(Vec<(f64, Section)>),
}

impl From<Profile> for Section {
    fn from(profile: Profile) -> Self {
        Section::Profile { profile, amp: 1.0, scale: 1.0, shift: 0.0 }
    }
}

impl Section {
    pub fn ou(mu: &TrigPolynomial, t: f64) -> Result<Section> {
        if mu.mean() >= 0.0 {
            return Err(Error::Hypothesis(format!(
                "OU kernel needs a negative mean coefficient, got c0 = {}",
                mu.mean()
            )));
        }
        Ok(Section::Ou { mu: mu.clone(), t })
    }

    pub fn scaled(self, w: f64) -> Section {
        Section::Sum(vec![(w, self)])
    }

    /// `self - other`
    pub fn minus(&self, other: &Section) -> Section {
        Section::Sum(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    /// `Σ z_j f_j`
    pub fn combination(weights: &[f64], sections: &[Section]) -> Result<Section> {
        if weights.len() != sections.len() {
            return Err(Error::invalid(format!("{} weights for {} kernel components", weights.len(), sections.len())));
        }
        Ok(Section::Sum(weights.iter().copied().zip(sections.iter().cloned()).collect()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Section::Profile { profile, amp, scale, shift } => amp * profile.eval(scale * x + shift),
            Section::Ou { mu, t } => {
                if x <= *t {
                    mu.increment(x, *t).exp()
                } else {
                    0.0
                }
            }
            Section::Sum(parts) => parts.iter().map(|(w, s)| w * s.eval(x)).sum(),
        }
    }

    /// `x ↦ f(x + d)`
    pub fn translate(&self, d: f64) -> Section {
        match self {
            Section::Profile { profile, amp, scale, shift } => {
                Section::Profile { profile: profile.clone(), amp: *amp, scale: *scale, shift: shift + scale * d }
            }
            Section::Ou { mu, t } => Section::Ou { mu: mu.shifted(d), t: t - d },
            Section::Sum(parts) => Section::Sum(parts.iter().map(|(w, s)| (*w, s.translate(d))).collect()),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.retain(|x| x.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Section::Profile { profile, amp, scale, shift } => {
                if *amp != 0.0 && *scale != 0.0 {
                    out.extend(profile.breakpoints().into_iter().map(|y| (y - shift) / scale));
                }
            }
            Section::Ou { t, .. } => out.push(*t),
            Section::Sum(parts) => {
                for (w, s) in parts {
                    if *w != 0.0 {
                        s.collect_breakpoints(out);
                    }
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Section::Profile { profile, amp, .. } => *amp == 0.0 || profile.sup_abs() == 0.0,
            Section::Ou { .. } => false,
            Section::Sum(parts) => parts.iter().all(|(w, s)| *w == 0.0 || s.is_zero()),
        }
    }

    /// Whether an analytic decay statement is available.
    pub fn has_decay(&self) -> bool {
        match self {
            Section::Profile { profile, amp, scale, .. } => {
                *amp == 0.0 || if *scale == 0.0 { profile.eval(0.0) == 0.0 } else { profile.decays() }
            }
            Section::Ou { mu, .. } => mu.mean() < 0.0,
            Section::Sum(parts) => parts.iter().all(|(w, s)| *w == 0.0 || s.has_decay()),
        }
    }

    /// Upper bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Section::Profile { profile, amp, scale, .. } => {
                if *scale == 0.0 {
                    (amp * profile.eval(0.0)).abs()
                } else {
                    amp.abs() * profile.sup_abs()
                }
            }
            Section::Ou { mu, .. } => mu.oscillation_bound().exp(),
            Section::Sum(parts) => parts.iter().map(|(w, s)| w.abs() * s.sup_bound()).sum(),
        }
    }

    /// `(∫ |f|, ∫ f²)` outside `[a, b]`, as rigorous upper bounds.
    pub fn tail_masses(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        match self {
            Section::Profile { profile, amp, scale, shift } => {
                if *amp == 0.0 {
                    return Ok((0.0, 0.0));
                }
                if *scale == 0.0 {
                    let v = (amp * profile.eval(0.0)).abs();
                    return if v == 0.0 {
                        Ok((0.0, 0.0))
                    } else {
                        Err(Error::UnboundedTail("constant section".into()))
                    };
                }
                let (ya, yb) = {
                    let p = scale * a + shift;
                    let q = scale * b + shift;
                    (p.min(q), p.max(q))
                };
                let (l1, l2) = profile.tail_masses(ya, yb);
                if !l1.is_finite() {
                    return Err(Error::UnboundedTail(format!("{profile:?}")));
                }
                Ok((amp.abs() * l1 / scale.abs(), amp * amp * l2 / scale.abs()))
            }
            Section::Ou { mu, t } => {
                let (rate, offset) = mu
                    .decay_estimate()
                    .ok_or_else(|| Error::UnboundedTail("OU kernel with nonnegative mean".into()))?;
                let e = offset.exp();
                let (a, b) = if a <= b { (a, b) } else { (*t, *t) };
                // Part of (a, t] not covered by the window, bounded by its length.
                let near = (t - b.max(a)).max(0.0);
                let depth = (t - a).max(0.0);
                let l1 = near * e + e * (-rate * depth).exp() / rate;
                let l2 = near * e * e + e * e * (-2.0 * rate * depth).exp() / (2.0 * rate);
                Ok((l1, l2))
            }
            Section::Sum(parts) => {
                let mut l1 = 0.0;
                let mut root2 = 0.0;
                for (w, s) in parts {
                    if *w == 0.0 {
                        continue;
                    }
                    let (a1, a2) = s.tail_masses(a, b)?;
                    l1 += w.abs() * a1;
                    root2 += w.abs() * a2.sqrt();
                }
                Ok((l1, root2 * root2))
            }
        }
    }

    /// Hull of the breakpoints, or of a point of the support.
    fn core(&self) -> (f64, f64) {
        let bps = self.breakpoints();
        match (bps.first(), bps.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        }
    }

    /// A window outside of which both tail masses are at most `tol`.
    pub fn window(&self, tol: f64) -> Result<(f64, f64)> {
        if self.is_zero() {
            return Ok(self.core());
        }
        let (a0, b0) = self.core();
        let (l1, l2) = self.tail_masses(a0, b0)?;
        if l1 <= tol && l2 <= tol {
            return Ok((a0, b0));
        }
        let mut reach = 1.0f64.max(0.01 * (b0 - a0));
        for _ in 0..200 {
            let (l1, l2) = self.tail_masses(a0 - reach, b0 + reach)?;
            if l1 <= tol && l2 <= tol {
                return self.shrink_window(a0, b0, reach, tol);
            }
            reach *= 2.0;
        }
        Err(Error::UnboundedTail("tail masses do not vanish".into()))
    }

    /// Trims each side of `[a0 - reach, b0 + reach]` separately by bisection.
    fn shrink_window(&self, a0: f64, b0: f64, reach: f64, tol: f64) -> Result<(f64, f64)> {
        let ok = |a: f64, b: f64| -> Result<bool> {
            let (l1, l2) = self.tail_masses(a, b)?;
            Ok(l1 <= tol && l2 <= tol)
        };
        let mut lo_a = 0.0;
        let mut hi_a = reach;
        for _ in 0..40 {
            let mid = 0.5 * (lo_a + hi_a);
            if ok(a0 - mid, b0 + reach)? {
                hi_a = mid;
            } else {
                lo_a = mid;
            }
        }
        let mut lo_b = 0.0;
        let mut hi_b = reach;
        for _ in 0..40 {
            let mid = 0.5 * (lo_b + hi_b);
            if ok(a0 - hi_a, b0 + mid)? {
                hi_b = mid;
            } else {
                lo_b = mid;
            }
        }
        Ok((a0 - hi_a, b0 + hi_b))
    }

    /// An interval outside of which `|f| ≤ alpha`.
    pub fn level_window(&self, alpha: f64) -> Result<(f64, f64)> {
        match self {
            Section::Profile { profile, amp, scale, shift } => {
                if *amp == 0.0 {
                    return Ok(self.core());
                }
                if *scale == 0.0 {
                    return if (amp * profile.eval(0.0)).abs() <= alpha {
                        Ok(self.core())
                    } else {
                        Err(Error::UnboundedTail("constant section".into()))
                    };
                }
                let (ya, yb) = profile
                    .level_window(alpha / amp.abs())
                    .ok_or_else(|| Error::UnboundedTail(format!("{profile:?}")))?;
                let p = (ya - shift) / scale;
                let q = (yb - shift) / scale;
                Ok((p.min(q), p.max(q)))
            }
            Section::Ou { mu, t } => {
                let c = -mu.mean();
                if c <= 0.0 {
                    return Err(Error::UnboundedTail("OU kernel with nonnegative mean".into()));
                }
                let depth = ((mu.oscillation_bound() - alpha.ln()) / c).max(0.0);
                Ok((t - depth, *t))
            }
            Section::Sum(parts) => {
                let active: Vec<_> = parts.iter().filter(|(w, s)| *w != 0.0 && !s.is_zero()).collect();
                if active.is_empty() {
                    return Ok(self.core());
                }
                let n = active.len() as f64;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (w, s) in active {
                    let (a, b) = s.level_window(alpha / (n * w.abs()))?;
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                Ok((lo, hi))
            }
        }
    }

    /// Integrates `g(f(x))` over a window whose neglected tails are bounded by `tol`
    /// in both `L¹` and `L²`. Returns the quadrature result and the window.
    pub fn integrate_composed<T, G>(
        &self,
        g: G,
        tail_tol: f64,
        opts: &QuadOptions,
    ) -> Result<(QuadResult<T>, (f64, f64))>
    where
        T: QuadValue,
        G: Fn(f64) -> T,
    {
        let (a, b) = self.window(tail_tol)?;
        if b <= a {
            return Ok((QuadResult { value: T::zero(), error: 0.0, intervals: 0 }, (a, b)));
        }
        let points = quad::breakpoints(a, b, &self.breakpoints());
        let r = quad::integrate(|x| g(self.eval(x)), &points, opts)?;
        Ok((r, (a, b)))
    }

    /// `‖f‖_p` by direct quadrature of `|f|^p`.
    pub fn lp_norm(&self, p: f64, opts: &QuadOptions) -> Result<f64> {
        if p < 1.0 {
            return Err(Error::invalid("p must be at least 1"));
        }
        let (r, _) = self.integrate_composed(|v| v.abs().powf(p), 1e-13, opts)?;
        Ok(r.value.powf(1.0 / p))
    }

    /// `∫ f` by direct quadrature.
    pub fn integral(&self, opts: &QuadOptions) -> Result<f64> {
        Ok(self.integrate_composed(|v| v, 1e-13, opts)?.0.value)
    }

    /// Monotone pieces covering every point where `|f| > floor`.
    pub fn monotone_pieces(&self, floor: f64) -> Result<Vec<Piece>> {
        match self {
            Section::Profile { profile, amp, scale, shift } => {
                if *amp == 0.0 {
                    return Ok(Vec::new());
                }
                if *scale == 0.0 {
                    let v = amp * profile.eval(0.0);
                    return Ok(if v == 0.0 {
                        Vec::new()
                    } else {
                        vec![Piece { a: f64::NEG_INFINITY, b: f64::INFINITY, fa: v, fb: v }]
                    });
                }
                Ok(profile
                    .pieces()
                    .into_iter()
                    .map(|p| {
                        let xa = (p.a - shift) / scale;
                        let xb = (p.b - shift) / scale;
                        if *scale > 0.0 {
                            Piece { a: xa, b: xb, fa: amp * p.fa, fb: amp * p.fb }
                        } else {
                            Piece { a: xb, b: xa, fa: amp * p.fb, fb: amp * p.fa }
                        }
                    })
                    .collect())
            }
            Section::Ou { mu, t } => {
                let (lo, _) = self.level_window(floor * 1e-3)?;
                let step = mu.shortest_period().map_or(1.0, |p| p / 32.0).min((t - lo) / 64.0).max(1e-6);
                let mut cuts = vec![lo];
                cuts.extend(mu.roots(lo, *t, step).into_iter().filter(|r| *r > lo && *r < *t));
                cuts.push(*t);
                Ok(cuts
                    .windows(2)
                    .map(|w| Piece {
                        a: w[0],
                        b: w[1],
                        fa: self.eval(w[0]),
                        fb: if w[1] == *t { 1.0 } else { self.eval(w[1]) },
                    })
                    .collect())
            }
            Section::Sum(_) => self.sampled_pieces(floor),
        }
    }

    fn sampled_pieces(&self, floor: f64) -> Result<Vec<Piece>> {
        if self.is_zero() {
            return Ok(Vec::new());
        }
        let (lo, hi) = self.level_window(floor * 1e-3)?;
        if !(hi > lo) {
            return Ok(Vec::new());
        }
        let cuts = quad::breakpoints(lo, hi, &self.breakpoints());
        let total = hi - lo;
        let mut pieces = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let width = b - a;
            let nudge = 1e-12 * (1.0 + a.abs().max(b.abs()));
            if width <= 4.0 * nudge {
                continue;
            }
            let n = ((4096.0 * width / total).ceil() as usize).max(64);
            let xs: Vec<f64> = (0..=n)
                .map(|i| {
                    if i == 0 {
                        a + nudge
                    } else if i == n {
                        b - nudge
                    } else {
                        a + width * i as f64 / n as f64
                    }
                })
                .collect();
            let vs: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
            let scale = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let flat = 1e-14 * scale.max(floor);
            let mut start = (a, vs[0]);
            let mut dir = 0i8;
            for i in 1..=n {
                let d = vs[i] - vs[i - 1];
                let s = if d > flat {
                    1
                } else if d < -flat {
                    -1
                } else {
                    0
                };
                if s != 0 && dir != 0 && s != dir {
                    // Extremum in [x_{i-2}, x_i].
                    let left = xs[i.saturating_sub(2)];
                    let right = xs[i];
                    let x_ext = golden_extremum(|x| self.eval(x), left, right, dir > 0);
                    let v_ext = self.eval(x_ext);
                    pieces.push(Piece { a: start.0, b: x_ext, fa: start.1, fb: v_ext });
                    start = (x_ext, v_ext);
                    dir = s;
                } else if s != 0 {
                    dir = s;
                }
            }
            pieces.push(Piece { a: start.0, b, fa: start.1, fb: vs[n] });
        }
        Ok(pieces)
    }
}

fn golden_extremum<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    0.5 * (a + b)
}

impl TrigPolynomial {
    /// `t ↦ μ(t + d)`
    pub fn shifted(&self, d: f64) -> TrigPolynomial {
        TrigPolynomial {
            c0: self.c0,
            terms: self
                .terms
                .iter()
                .map(|k| crate::trig::TrigTerm {
                    amplitude: k.amplitude,
                    frequency: k.frequency,
                    phase: (k.phase + k.frequency * d).rem_euclid(2.0 * PI),
                })
                .collect(),
        }
    }
}

/// A time-indexed kernel family `f(t, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `g(x)`, independent of `t`
    Static { g: Profile },
    /// `u(t) g(x)`
    Separable { u: TrigPolynomial, g: Profile },
    /// `g(u(t) + x)`
    Translate { u: TrigPolynomial, g: Profile },
    /// `g(u(t) x)`
    Dilate { u: TrigPolynomial, g: Profile },
    /// `g(t - x)`
    MovingAverage { g: Profile },
    /// `exp(∫_x^t μ) 1_{x ≤ t}`
    Ou { mu: TrigPolynomial },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Static { g } | KernelSpec::MovingAverage { g } => g.validate(),
            KernelSpec::Separable { u, g } | KernelSpec::Translate { u, g } => {
                u.validate()?;
                g.validate()
            }
            KernelSpec::Dilate { u, g } => {
                u.validate()?;
                g.validate()?;
                let lower = u.c0.abs() - u.terms.iter().map(|k| k.amplitude.abs()).sum::<f64>();
                if lower <= 0.0 {
                    return Err(Error::Hypothesis(
                        "dilation coefficient must stay bounded away from zero (|c0| > Σ|c_k|)".into(),
                    ));
                }
                Ok(())
            }
            KernelSpec::Ou { mu } => {
                mu.validate()?;
                if mu.mean() >= 0.0 {
                    return Err(Error::Hypothesis(
                        "no almost periodic stationary solution constructed: mean of mu must be negative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn section(&self, t: f64) -> Result<Section> {
        Ok(match self {
            KernelSpec::Static { g } => Section::from(g.clone()),
            KernelSpec::Separable { u, g } => {
                Section::Profile { profile: g.clone(), amp: u.eval(t), scale: 1.0, shift: 0.0 }
            }
            KernelSpec::Translate { u, g } => {
                Section::Profile { profile: g.clone(), amp: 1.0, scale: 1.0, shift: u.eval(t) }
            }
            KernelSpec::Dilate { u, g } => {
                let c = u.eval(t);
                if c == 0.0 {
                    return Err(Error::Hypothesis(format!("dilation coefficient vanishes at t = {t}")));
                }
                Section::Profile { profile: g.clone(), amp: 1.0, scale: c, shift: 0.0 }
            }
            KernelSpec::MovingAverage { g } => Section::Profile { profile: g.clone(), amp: 1.0, scale: -1.0, shift: t },
            KernelSpec::Ou { mu } => Section::ou(mu, t)?,
        })
    }

    /// Natural time scale of the `t`-dependence: the longest period or beat period.
    pub fn time_scale(&self) -> Option<f64> {
        match self {
            KernelSpec::Static { .. } | KernelSpec::MovingAverage { .. } => None,
            KernelSpec::Separable { u, .. } | KernelSpec::Translate { u, .. } | KernelSpec::Dilate { u, .. } => {
                u.longest_scale()
            }
            KernelSpec::Ou { mu } => mu.longest_scale(),
        }
    }
}

/// `sup_{t ∈ grid} ‖f(t, ·) − f(t + τ, · + s)‖_p`
pub fn kernel_shift_distance(
    kernel: &KernelSpec,
    tau: f64,
    s: f64,
    p: f64,
    t_grid: &[f64],
    opts: &QuadOptions,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in t_grid {
        let f = kernel.section(t)?;
        let g = kernel.section(t + tau)?.translate(s);
        let d = f.minus(&g).lp_norm(p, opts)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `n` equally spaced points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
