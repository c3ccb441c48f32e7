//! Distribution functions `d_f(α) = λ({|f| > α})` and the layer-cake functionals built on them.
//!
//! Distribution functions of kernel sections are exact: every super-level set
//! is a union of intervals found by bisection on the section's monotone
//! pieces. A [`DistFn`] keeps a tabulation for export and, when it came from
//! a section, the exact level-set oracle used by the integral functionals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Piece, Section};
use crate::quad::{self, QuadOptions};

/// Which part of the section is measured: `|f|`, `f⁺` or `f⁻`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Abs,
    Positive,
    Negative,
}

/// Levels at which `d` is tabulated when no grid is supplied.
pub const DEFAULT_LEVELS: usize = 1024;
/// Relative depth of the default tabulation below the supremum.
pub const DEFAULT_DEPTH: f64 = 1e-8;
/// Levels below `FLOOR_RATIO · sup` are handled by the section's analytic envelope.
const FLOOR_RATIO: f64 = 1e-12;

/// Exact super-level-set measures of one section.
#[derive(Debug)]
pub struct LevelSets {
    section: Section,
    pieces: Vec<Piece>,
    floor: f64,
    sup_pos: f64,
    sup_neg: f64,
    breaks: Vec<f64>,
    /// `d(α) ≤ env_len + env_slope · ln(floor/α)` for `α < floor`.
    env_len: f64,
    env_slope: f64,
}

impl LevelSets {
    pub fn new(section: &Section) -> Result<Self> {
        let bound = section.sup_bound();
        if !bound.is_finite() {
            return Err(Error::UnboundedTail("section is not bounded".into()));
        }
        if bound == 0.0 {
            return Ok(LevelSets {
                section: section.clone(),
                pieces: Vec::new(),
                floor: 0.0,
                sup_pos: 0.0,
                sup_neg: 0.0,
                breaks: Vec::new(),
                env_len: 0.0,
                env_slope: 0.0,
            });
        }
        let floor = FLOOR_RATIO * bound;
        let pieces = section.monotone_pieces(floor)?;
        let mut sup_pos = 0.0f64;
        let mut sup_neg = 0.0f64;
        let mut breaks = Vec::new();
        for p in &pieces {
            for v in [p.fa, p.fb] {
                sup_pos = sup_pos.max(v);
                sup_neg = sup_neg.max(-v);
                if v != 0.0 {
                    breaks.push(v.abs());
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let has_infinite = pieces
            .iter()
            .any(|p| (p.a.is_infinite() || p.b.is_infinite()) && p.fa != 0.0 && p.fb != 0.0 && p.fa == p.fb);
        let (env_len, env_slope) = if has_infinite {
            (f64::INFINITY, 0.0)
        } else {
            let (a1, b1) = section.level_window(floor)?;
            let (a2, b2) = section.level_window(floor / std::f64::consts::E)?;
            let l1 = (b1 - a1).max(0.0);
            let l2 = (b2 - a2).max(0.0);
            (l1, (l2 - l1).max(0.0))
        };
        Ok(LevelSets { section: section.clone(), pieces, floor, sup_pos, sup_neg, breaks, env_len, env_slope })
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn sup(&self, part: Part) -> f64 {
        match part {
            Part::Abs => self.sup_pos.max(self.sup_neg),
            Part::Positive => self.sup_pos,
            Part::Negative => self.sup_neg,
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// False when some super-level set has infinite measure.
    pub fn is_integrable(&self) -> bool {
        self.env_len.is_finite()
    }

    /// Levels at which `d` jumps or has a kink.
    pub fn level_breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// `λ({part > α})`.
    pub fn measure(&self, alpha: f64, part: Part) -> f64 {
        if alpha < self.floor {
            return self.envelope(alpha);
        }
        match part {
            Part::Abs => self.measure_signed(alpha, 1.0) + self.measure_signed(alpha, -1.0),
            Part::Positive => self.measure_signed(alpha, 1.0),
            Part::Negative => self.measure_signed(alpha, -1.0),
        }
    }

    fn envelope(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return f64::INFINITY;
        }
        self.env_len + self.env_slope * (self.floor / alpha).ln()
    }

    /// `∫₀^{c} d(α) dα` for `c ≤ floor`, from the envelope.
    fn envelope_integral(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        c * (self.env_len + self.env_slope * (1.0 + (self.floor / c).ln()))
    }

    fn measure_signed(&self, alpha: f64, sign: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let ga = sign * p.fa;
            let gb = sign * p.fb;
            if ga.max(gb) <= alpha {
                continue;
            }
            if ga.min(gb) > alpha {
                total += p.b - p.a;
                continue;
            }
            let g = |x: f64| sign * self.section.eval(x);
            if gb > ga {
                // increasing: {g > α} = (x*, b)
                let lo = finite_left(p, &g, alpha);
                let x = bisect(&g, lo, p.b, alpha, true);
                total += p.b - x;
            } else {
                let hi = finite_right(p, &g, alpha);
                let x = bisect(&g, p.a, hi, alpha, false);
                total += x - p.a;
            }
        }
        total
    }
}

fn finite_left(p: &Piece, g: &impl Fn(f64) -> f64, alpha: f64) -> f64 {
    if p.a.is_finite() {
        return p.a;
    }
    let mut step = 1.0;
    let mut x = p.b - step;
    for _ in 0..1100 {
        if g(x) <= alpha {
            return x;
        }
        step *= 2.0;
        x = p.b - step;
    }
    x
}

fn finite_right(p: &Piece, g: &impl Fn(f64) -> f64, alpha: f64) -> f64 {
    if p.b.is_finite() {
        return p.b;
    }
    let mut step = 1.0;
    let mut x = p.a + step;
    for _ in 0..1100 {
        if g(x) <= alpha {
            return x;
        }
        step *= 2.0;
        x = p.a + step;
    }
    x
}

/// Crossing of level `alpha` by a monotone `g` on `[lo, hi]`.
fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, alpha: f64, increasing: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
        let above = g(mid) > alpha;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug)]
struct Source {
    sets: Arc<LevelSets>,
    part: Part,
}

/// A non-increasing distribution function on a level grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistFn {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// `d(α) = 0` beyond the last level.
    pub tail_flag: bool,
    /// Values come from cell counting rather than exact level sets.
    pub approximate: bool,
    #[serde(skip)]
    source: Option<Arc<Source>>,
}

/// Geometric level grid on `[lo, hi]`.
pub fn geometric_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo * (r * i as f64).exp() }).collect()
}

impl DistFn {
    /// Exact distribution function of `part` of a section.
    pub fn of_section(section: &Section, part: Part, levels: Option<&[f64]>) -> Result<Self> {
        let sets = Arc::new(LevelSets::new(section)?);
        Self::from_level_sets(sets, part, levels)
    }

    pub fn from_level_sets(sets: Arc<LevelSets>, part: Part, levels: Option<&[f64]>) -> Result<Self> {
        let sup = sets.sup(part);
        let alphas = match levels {
            Some(l) => {
                check_levels(l)?;
                l.to_vec()
            }
            None if sup > 0.0 => geometric_levels(DEFAULT_DEPTH * sup, sup, DEFAULT_LEVELS),
            None => vec![1.0],
        };
        let values = alphas.iter().map(|&a| sets.measure(a, part)).collect();
        let tail_flag = alphas.last().is_some_and(|&a| a >= sup);
        Ok(DistFn { alphas, values, tail_flag, approximate: false, source: Some(Arc::new(Source { sets, part })) })
    }

    /// A tabulated distribution function without an exact oracle.
    pub fn from_table(alphas: Vec<f64>, values: Vec<f64>, tail_flag: bool) -> Result<Self> {
        check_levels(&alphas)?;
        if alphas.len() != values.len() {
            return Err(Error::invalid("alpha and value columns differ in length"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("distribution values must be nonnegative"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("distribution values must be non-increasing"));
        }
        Ok(DistFn { alphas, values, tail_flag, approximate: false, source: None })
    }

    /// Cell-counting estimate of `d_{|f|}` from `n ≥ 2¹⁴` midpoint samples of `f` on `[a, b]`.
    /// Assumes `f` vanishes outside `[a, b]`; the result is flagged approximate.
    pub fn sampled<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, levels: &[f64]) -> Result<Self> {
        if n < 1 << 14 {
            return Err(Error::invalid(format!("sampled mode needs at least 16384 points, got {n}")));
        }
        if !(b > a) {
            return Err(Error::invalid("sample interval is empty"));
        }
        check_levels(levels)?;
        let h = (b - a) / n as f64;
        let mut samples: Vec<f64> = (0..n).map(|i| f(a + (i as f64 + 0.5) * h).abs()).collect();
        samples.sort_by(|x, y| y.total_cmp(x));
        let values = levels.iter().map(|&alpha| h * samples.partition_point(|&v| v > alpha) as f64).collect();
        Ok(DistFn {
            alphas: levels.to_vec(),
            values,
            tail_flag: levels.last().is_some_and(|&l| l >= samples[0]),
            approximate: true,
            source: None,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.source.is_some()
    }

    pub fn part(&self) -> Option<Part> {
        self.source.as_ref().map(|s| s.part)
    }

    pub fn section(&self) -> Option<&Section> {
        self.source.as_ref().map(|s| s.sets.section())
    }

    fn sup(&self) -> f64 {
        match &self.source {
            Some(s) => s.sets.sup(s.part),
            None => {
                if self.tail_flag {
                    // last level with positive measure bounds the support of levels
                    *self.alphas.last().unwrap_or(&0.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `d(α)`.
    pub fn eval(&self, alpha: f64) -> f64 {
        if let Some(s) = &self.source {
            return s.sets.measure(alpha, s.part);
        }
        let n = self.alphas.len();
        if n == 0 {
            return 0.0;
        }
        if alpha < self.alphas[0] {
            return self.values[0];
        }
        if alpha >= self.alphas[n - 1] {
            return if self.tail_flag { 0.0 } else { self.values[n - 1] };
        }
        let i = self.alphas.partition_point(|&a| a <= alpha) - 1;
        let t = (alpha - self.alphas[i]) / (self.alphas[i + 1] - self.alphas[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Level-set breakpoints in `u = ln α` inside `[lo, hi]`.
    fn log_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.source {
            Some(s) => s.sets.level_breaks().iter().filter(|&&b| b > lo && b < hi).map(|b| b.ln()).collect(),
            None => Vec::new(),
        }
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid("level grid is empty"));
    }
    if levels.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::invalid("levels must be positive and finite"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("levels must be strictly increasing"));
    }
    Ok(())
}

fn quad_opts() -> QuadOptions {
    QuadOptions::default().with_rel_tol(1e-11).with_abs_tol(1e-15)
}

/// `∫_lo^hi w(α) · d(α) dα` computed in `u = ln α`.
fn integrate_levels<W: Fn(f64) -> f64>(d: &DistFn, w: W, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut pts = vec![lo.ln()];
    pts.extend(d.log_breaks(lo, hi));
    pts.push(hi.ln());
    pts.sort_by(f64::total_cmp);
    let r = quad::integrate(
        |u| {
            let a = u.exp();
            a * w(a) * d.eval(a)
        },
        &pts,
        &quad_opts(),
    )?;
    Ok(r.value)
}

/// Trapezoid partial sums of `∫ w(α) d(α) dα` on the tabulated grid, with the
/// rectangle `[0, α₀] × d(α₀)` as the lower end.
fn trapezoid_levels<W: Fn(f64) -> f64>(d: &DistFn, w: W, upper: f64) -> (f64, Vec<f64>) {
    let mut partial = Vec::new();
    let a0 = d.alphas[0].min(upper);
    let mut acc = {
        let q = quad::integrate_real(&w, 0.0, a0, &[], &QuadOptions::default()).map(|r| r.value).unwrap_or(0.0);
        q * d.values[0]
    };
    partial.push(acc);
    for i in 1..d.alphas.len() {
        let (x0, x1) = (d.alphas[i - 1], d.alphas[i].min(upper));
        if x1 <= x0 {
            break;
        }
        let v1 = if d.alphas[i] <= upper { d.values[i] } else { d.eval(x1) };
        acc += 0.5 * (x1 - x0) * (w(x0) * d.values[i - 1] + w(x1) * v1);
        partial.push(acc);
    }
    if !d.tail_flag && upper > *d.alphas.last().unwrap() {
        let last = *d.values.last().unwrap();
        if last > 0.0 {
            partial.push(f64::INFINITY);
            return (f64::INFINITY, partial);
        }
    }
    (acc, partial)
}

/// `(p ∫₀^∞ α^{p-1} d(α) dα)^{1/p}`, the `L^p` norm of the underlying function.
pub fn layer_cake_norm(d: &DistFn, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p must be at least 1"));
    }
    let integral = match &d.source {
        Some(s) => {
            let sets = &s.sets;
            let sup = sets.sup(s.part);
            if sup == 0.0 {
                return Ok(0.0);
            }
            if !sets.is_integrable() {
                return Err(Error::Divergent { partial: vec![f64::INFINITY] });
            }
            let floor = sets.floor();
            let body = integrate_levels(d, |a| p * a.powf(p - 1.0), floor, sup)?;
            let low = p * floor.powf(p - 1.0) * sets.envelope_integral(floor);
            if !low.is_finite() || !body.is_finite() {
                return Err(Error::Divergent { partial: vec![body, low] });
            }
            body + low
        }
        None => {
            let (v, partial) = trapezoid_levels(d, |a| p * a.powf(p - 1.0), f64::INFINITY);
            if !v.is_finite() {
                return Err(Error::Divergent { partial });
            }
            v
        }
    };
    Ok(integral.max(0.0).powf(1.0 / p))
}

/// `∫₀^{1/|r|} d(α) dα` for `|r| > 1`.
pub fn tail_functional(d: &DistFn, r: f64) -> Result<f64> {
    if !(r.abs() > 1.0) {
        return Err(Error::invalid(format!("tail functional needs |r| > 1, got {r}")));
    }
    let c = 1.0 / r.abs();
    match &d.source {
        Some(s) => {
            let sets = &s.sets;
            let sup = sets.sup(s.part);
            if sup == 0.0 {
                return Ok(0.0);
            }
            if !sets.is_integrable() {
                return Err(Error::Divergent { partial: vec![f64::INFINITY] });
            }
            let floor = sets.floor();
            if c <= floor {
                return Ok(sets.envelope_integral(c));
            }
            let body = integrate_levels(d, |_| 1.0, floor, c.min(sup))?;
            let v = body + sets.envelope_integral(floor);
            if !v.is_finite() {
                return Err(Error::Divergent { partial: vec![body] });
            }
            Ok(v)
        }
        None => {
            let (v, partial) = trapezoid_levels(d, |_| 1.0, c);
            if !v.is_finite() {
                return Err(Error::Divergent { partial });
            }
            // the trapezoid only covers levels up to the last grid point
            let last = *d.alphas.last().unwrap();
            let extra = if c > last && !d.tail_flag { (c - last) * d.values.last().unwrap() } else { 0.0 };
            Ok(v + extra)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedL1 {
    /// `∫₀^∞ α^{p-1} |d_f(α) − d_g(α)| dα`
    pub distance: f64,
    /// `(‖f‖_p^{p-1} + ‖g‖_p^{p-1}) ‖f − g‖_p`, when both inputs carry their sections.
    pub bound: Option<f64>,
}

/// Weighted `L¹` distance between two distribution functions and, for
/// section-backed inputs, the equimeasurable-pair bound evaluated at the pair itself.
pub fn weighted_l1_distance(df: &DistFn, dg: &DistFn, p: f64) -> Result<WeightedL1> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p must be at least 1"));
    }
    let w = |a: f64| a.powf(p - 1.0);
    let distance = match (&df.source, &dg.source) {
        (Some(sf), Some(sg)) => {
            if !sf.sets.is_integrable() || !sg.sets.is_integrable() {
                return Err(Error::Divergent { partial: vec![f64::INFINITY] });
            }
            let sup = df.sup().max(dg.sup());
            if sup == 0.0 {
                0.0
            } else {
                let floors: Vec<f64> = [sf.sets.floor(), sg.sets.floor()].into_iter().filter(|f| *f > 0.0).collect();
                let lo = floors.iter().copied().fold(f64::INFINITY, f64::min).min(sup);
                let mut pts = vec![lo.ln()];
                pts.extend(df.log_breaks(lo, sup));
                pts.extend(dg.log_breaks(lo, sup));
                pts.push(sup.ln());
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let body = quad::integrate(
                    |u| {
                        let a = u.exp();
                        a * w(a) * (df.eval(a) - dg.eval(a)).abs()
                    },
                    &pts,
                    &quad_opts(),
                )?
                .value;
                let low_f = if sf.sets.floor() > 0.0 { sf.sets.envelope_integral(lo) } else { 0.0 };
                let low_g = if sg.sets.floor() > 0.0 { sg.sets.envelope_integral(lo) } else { 0.0 };
                body + w(lo) * (low_f - low_g).abs()
            }
        }
        _ => {
            let lo = df.alphas[0].max(dg.alphas[0]);
            let hi = df.alphas.last().unwrap().min(*dg.alphas.last().unwrap());
            if (df.source.is_none() && dg.source.is_none()) && lo > hi {
                return Err(Error::GridMismatch("level grids do not overlap".into()));
            }
            let mut grid: Vec<f64> = df.alphas.iter().chain(dg.alphas.iter()).copied().collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let diffs: Vec<f64> = grid.iter().map(|&a| w(a) * (df.eval(a) - dg.eval(a)).abs()).collect();
            let mut acc = grid[0] * diffs[0];
            for i in 1..grid.len() {
                acc += 0.5 * (grid[i] - grid[i - 1]) * (diffs[i] + diffs[i - 1]);
            }
            let tails_open = !df.tail_flag || !dg.tail_flag;
            if tails_open && diffs.last().is_some_and(|d| *d > 0.0) {
                return Err(Error::Divergent { partial: vec![acc] });
            }
            acc
        }
    };
    let bound = match (&df.source, &dg.source) {
        (Some(sf), Some(sg)) if sf.part == Part::Abs && sg.part == Part::Abs => {
            let f = sf.sets.section();
            let g = sg.sets.section();
            let nf = layer_cake_norm(df, p)?;
            let ng = layer_cake_norm(dg, p)?;
            let diff = f.minus(g).lp_norm(p, &QuadOptions::default())?;
            Some((nf.powf(p - 1.0) + ng.powf(p - 1.0)) * diff)
        }
        _ => None,
    };
    if let Some(b) = bound {
        if distance > b * (1.0 + 1e-8) + 1e-12 {
            return Err(Error::Numerical(format!("weighted distance {distance} exceeds its bound {b}")));
        }
    }
    Ok(WeightedL1 { distance, bound })
}
