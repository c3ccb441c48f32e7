//! Characteristic triplets, Lévy–Khintchine and Rajput–Rosinski exponents,
//! admissibility of integrands, and triplet transforms of discrete multivariate laws.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Section};
use crate::quad::{self, QuadOptions};
use crate::rearrange::{tail_functional, DistFn, LevelSets, Part};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

/// Piecewise-linear Lévy density on `±grid`, zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityTable {
    /// Positive, strictly increasing (typically log-spaced) abscissae.
    pub grid: Vec<f64>,
    /// Density values at `+grid[i]`.
    pub positive: Vec<f64>,
    /// Density values at `-grid[i]`.
    pub negative: Vec<f64>,
}

/// Record of small jumps removed before simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub epsilon: f64,
    /// `∫_{|x|<ε} x² ν(dx)` of the discarded part.
    pub discarded_second_moment: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpMeasure {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub density: Option<DensityTable>,
    #[serde(default)]
    pub truncation: Option<Truncation>,
}

impl DensityTable {
    fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || self.positive.len() != n || self.negative.len() != n {
            return Err(Error::invalid("density table needs at least two points and matching columns"));
        }
        if self.grid[0] <= 0.0 || self.grid.windows(2).any(|w| w[1] <= w[0]) || self.grid.iter().any(|g| !g.is_finite())
        {
            return Err(Error::invalid("density grid must be positive, finite and strictly increasing"));
        }
        if self.positive.iter().chain(&self.negative).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("density values must be nonnegative and finite"));
        }
        Ok(())
    }

    fn value(&self, x: f64) -> f64 {
        let (col, r) = if x >= 0.0 { (&self.positive, x) } else { (&self.negative, -x) };
        let g = &self.grid;
        if r < g[0] || r > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&v| v <= r).min(g.len() - 1).max(1) - 1;
        let t = (r - g[i]) / (g[i + 1] - g[i]);
        col[i] + t * (col[i + 1] - col[i])
    }

    fn integrate<T: quad::QuadValue>(&self, phi: &dyn Fn(f64) -> T, extra: &[f64], opts: &QuadOptions) -> Result<T> {
        let g = &self.grid;
        let lo = g[0];
        let hi = g[g.len() - 1];
        let mut pts: Vec<f64> = g.clone();
        pts.extend(extra.iter().map(|e| e.abs()).filter(|&e| e > lo && e < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let pos = quad::integrate(|r| phi(r) * self.value(r), &pts, opts)?;
        let neg = quad::integrate(|r| phi(-r) * self.value(-r), &pts, opts)?;
        Ok(pos.value + neg.value)
    }
}

impl JumpMeasure {
    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let m = JumpMeasure {
            atoms: atoms.iter().map(|&(x, mass)| Atom { x, mass }).collect(),
            density: None,
            truncation: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0) && self.density.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if a.x == 0.0 || !a.x.is_finite() {
                return Err(Error::invalid("jump measure atoms must be finite and nonzero"));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(Error::invalid("jump measure masses must be positive and finite"));
            }
        }
        if let Some(d) = &self.density {
            d.validate()?;
        }
        let v = self.integrate(&|x: f64| (x * x).min(1.0), &[1.0], &QuadOptions::default())?;
        if !v.is_finite() {
            return Err(Error::invalid("jump measure fails ∫ min(1, x²) ν(dx) < ∞"));
        }
        Ok(())
    }

    /// `∫ φ dν`: atoms summed exactly, density by adaptive quadrature.
    /// `extra` lists points where `φ` is not smooth.
    pub fn integrate<T: quad::QuadValue>(
        &self,
        phi: &dyn Fn(f64) -> T,
        extra: &[f64],
        opts: &QuadOptions,
    ) -> Result<T> {
        let mut acc = T::zero();
        for a in &self.atoms {
            acc = acc + phi(a.x) * a.mass;
        }
        if let Some(d) = &self.density {
            acc = acc + d.integrate(phi, extra, opts)?;
        }
        Ok(acc)
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(&|_| 1.0, &[], &QuadOptions::default()).unwrap_or(f64::INFINITY)
    }

    /// `∫_{|r| ≤ 1} r² ν(dr)`
    pub fn small_second_moment(&self) -> f64 {
        self.integrate(&|r: f64| if r.abs() <= 1.0 { r * r } else { 0.0 }, &[1.0], &QuadOptions::default())
            .unwrap_or(f64::INFINITY)
    }

    /// `∫_{lo < |r| ≤ hi} |r| ν(dr)`
    pub fn first_moment_between(&self, lo: f64, hi: f64) -> f64 {
        self.integrate(
            &|r: f64| if r.abs() > lo && r.abs() <= hi { r.abs() } else { 0.0 },
            &[lo, hi],
            &QuadOptions::default(),
        )
        .unwrap_or(f64::INFINITY)
    }

    /// `∫ x² ν(dx)`
    pub fn second_moment(&self) -> f64 {
        self.integrate(&|r: f64| r * r, &[], &QuadOptions::default()).unwrap_or(f64::INFINITY)
    }

    /// `∫_{|x| ≤ 1} x ν(dx)`, the compensator of the small jumps.
    pub fn small_first_moment(&self) -> f64 {
        self.integrate(&|r: f64| if r.abs() <= 1.0 { r } else { 0.0 }, &[1.0], &QuadOptions::default())
            .unwrap_or(f64::NAN)
    }

    /// `∫_{|x| > 1} x ν(dx)`
    pub fn large_first_moment(&self) -> f64 {
        self.integrate(&|r: f64| if r.abs() > 1.0 { r } else { 0.0 }, &[1.0], &QuadOptions::default())
            .unwrap_or(f64::NAN)
    }

    /// `∫_{|s|>1} ln|s| ν(ds)`
    pub fn log_moment(&self) -> f64 {
        self.integrate(&|r: f64| if r.abs() > 1.0 { r.abs().ln() } else { 0.0 }, &[1.0], &QuadOptions::default())
            .unwrap_or(f64::INFINITY)
    }

    /// Sorted magnitudes where density integrands change form.
    fn density_breaks(&self) -> Vec<f64> {
        self.density.as_ref().map(|d| d.grid.clone()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub nu: JumpMeasure,
}

/// Kernel-dependent constants bounding `|ψ(x)| ≤ k2 x² + k1 |x|`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct GrowthConstants {
    k2: f64,
    k1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralExponent {
    pub value: Complex64,
    /// Quadrature error estimate on the window.
    pub error: f64,
    pub window: (f64, f64),
    /// Upper bound on the neglected contribution outside the window.
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    pub opts: QuadOptions,
    /// Window selection: neglected `L¹` and `L²` tail masses of the integrand stay below this.
    pub tail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { opts: QuadOptions::default(), tail_tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RajputRosinski {
    pub u: f64,
    pub v: f64,
    pub gauss: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainStatus {
    Admissible,
    Inadmissible,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub status: DomainStatus,
    /// `∫ Ψ(f)` over the window, when computed.
    pub integral: Option<f64>,
    pub tail_bound: f64,
    pub window: Option<(f64, f64)>,
}

impl DomainCheck {
    pub fn admissible(&self) -> bool {
        self.status == DomainStatus::Admissible
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSpaceValue {
    pub value: f64,
    /// Time at which the inner supremum was attained for the heaviest jump.
    pub argmax_t: f64,
    pub grid_points: usize,
}

/// `e^{iθ} - 1 - iθ·c` without cancellation for small `θ`.
fn jump_term(theta: f64, compensate: bool) -> Complex64 {
    let half = (0.5 * theta).sin();
    let im = if compensate { theta.sin() - theta } else { theta.sin() };
    Complex64::new(-2.0 * half * half, im)
}

impl LevyTriplet {
    pub fn gaussian(a: f64, gamma: f64) -> Self {
        LevyTriplet { a, gamma, nu: JumpMeasure::default() }
    }

    pub fn new(a: f64, gamma: f64, nu: JumpMeasure) -> Result<Self> {
        let t = LevyTriplet { a, gamma, nu };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::invalid(format!("Gaussian variance must be nonnegative, got {}", self.a)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::invalid("drift must be finite"));
        }
        self.nu.validate()
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.gamma == 0.0 && self.nu.is_zero()
    }

    pub fn is_gaussian(&self) -> bool {
        self.nu.is_zero()
    }

    /// `E L([0,1])² - (E L([0,1]))²`, i.e. `a + ∫ x² ν`.
    pub fn variance(&self) -> f64 {
        self.a + self.nu.second_moment()
    }

    /// `E L([0,1]) = γ + ∫_{|x|>1} x ν(dx)`.
    pub fn mean(&self) -> f64 {
        self.gamma + self.nu.large_first_moment()
    }

    /// `ψ_L(z) = iγz - az²/2 + ∫(e^{ixz} - 1 - ixz 1_{|x|≤1}) ν(dx)`.
    pub fn eval_exponent(&self, z: f64) -> Result<Complex64> {
        self.eval_exponent_with(z, &QuadOptions::default())
    }

    pub fn eval_exponent_with(&self, z: f64, opts: &QuadOptions) -> Result<Complex64> {
        let mut acc = Complex64::new(-0.5 * self.a * z * z, self.gamma * z);
        if z == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let jumps = self.nu.integrate(&|x: f64| jump_term(x * z, x.abs() <= 1.0), &[1.0], opts)?;
        acc += jumps;
        Ok(acc)
    }

    fn growth(&self) -> GrowthConstants {
        GrowthConstants {
            k2: 0.5 * self.a + 0.5 * self.nu.small_second_moment(),
            k1: self.gamma.abs() + self.nu.first_moment_between(1.0, f64::INFINITY),
        }
    }

    /// Bound on `|∫_{outside} ψ_L(f)|` from the `L¹` mass and squared `L²` mass outside a window.
    pub fn exponent_tail_bound(&self, l1: f64, l2_sq: f64) -> f64 {
        let g = self.growth();
        g.k2 * l2_sq + g.k1 * l1
    }

    /// Drift of the un-compensated decomposition, `γ - ∫_{|x|≤1} x ν(dx)`.
    pub fn raw_drift(&self) -> f64 {
        self.gamma - self.nu.small_first_moment()
    }

    /// `∫ ψ_L(Σ_j z_j f_j(s)) ds` for the given sections.
    pub fn eval_integral_exponent(&self, sections: &[Section], z: &[f64], spec: &QuadSpec) -> Result<IntegralExponent> {
        let combo = Section::combination(z, sections)?;
        self.eval_section_exponent(&combo, spec)
    }

    /// `∫ ψ_L(f(s)) ds` for a single section.
    pub fn eval_section_exponent(&self, f: &Section, spec: &QuadSpec) -> Result<IntegralExponent> {
        if !f.has_decay() {
            return Err(Error::UnboundedTail("kernel section has no declared decay".into()));
        }
        let growth = self.growth();
        let fast = self.is_gaussian();
        let (a, gamma) = (self.a, self.gamma);
        let integrand = |v: f64| -> Complex64 {
            if fast {
                Complex64::new(-0.5 * a * v * v, gamma * v)
            } else {
                // Quadrature failures inside the integrand surface as NaN and fail the outer rule.
                self.eval_exponent_with(v, &spec.opts).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }
        };
        let (r, window) = f.integrate_composed(integrand, spec.tail_tol, &spec.opts)?;
        if !r.value.re.is_finite() || !r.value.im.is_finite() {
            return Err(Error::Quadrature { value: f64::NAN, residual: r.error, intervals: r.intervals });
        }
        let (l1, l2) = f.tail_masses(window.0, window.1)?;
        Ok(IntegralExponent { value: r.value, error: r.error, window, tail_bound: growth.k2 * l2 + growth.k1 * l1 })
    }

    /// Exponent of `(X_{t_1}, …, X_{t_m})` at `z` for `X_t = ∫ f(t, s) dL(s)`.
    pub fn eval_kernel_exponent(
        &self,
        kernel: &KernelSpec,
        t_offsets: &[f64],
        z: &[f64],
        spec: &QuadSpec,
    ) -> Result<IntegralExponent> {
        let sections = t_offsets.iter().map(|&t| kernel.section(t)).collect::<Result<Vec<_>>>()?;
        self.eval_integral_exponent(&sections, z, spec)
    }

    /// `Ψ(z) = |U(z)| + a z² + V(z)`.
    pub fn rajput_rosinski(&self, z: f64) -> Result<RajputRosinski> {
        if z == 0.0 {
            return Ok(RajputRosinski { u: 0.0, v: 0.0, gauss: 0.0, total: 0.0 });
        }
        let opts = QuadOptions::default();
        let breaks = [1.0, 1.0 / z.abs()];
        let u_jump = self.nu.integrate(
            &|s: f64| {
                let inner = if (s * z).abs() <= 1.0 { 1.0 } else { 0.0 };
                let outer = if s.abs() <= 1.0 { 1.0 } else { 0.0 };
                s * z * (inner - outer)
            },
            &breaks,
            &opts,
        )?;
        let v = self.nu.integrate(&|s: f64| (s * s * z * z).min(1.0), &breaks, &opts)?;
        let u = self.gamma * z + u_jump;
        let gauss = self.a * z * z;
        Ok(RajputRosinski { u, v, gauss, total: u.abs() + gauss + v })
    }

    /// `Ψ(x) ≤ c2 x² + c1 |x|`.
    fn rr_growth(&self) -> (f64, f64) {
        (
            self.a + 2.0 * self.nu.small_second_moment(),
            self.gamma.abs() + 2.0 * self.nu.first_moment_between(1.0, f64::INFINITY),
        )
    }

    /// `∫ Ψ(f(s)) ds` with the analytic tail bound of the section.
    pub fn in_domain(&self, f: &Section, spec: &QuadSpec) -> Result<DomainCheck> {
        if !f.has_decay() {
            return Ok(DomainCheck {
                status: DomainStatus::Indeterminate,
                integral: None,
                tail_bound: f64::INFINITY,
                window: None,
            });
        }
        let (c2, c1) = self.rr_growth();
        let (window, bound) = {
            let (mut a, mut b) = f.window(spec.tail_tol)?;
            // make sure every point where |f| > 1 lies inside
            if let Ok((la, lb)) = f.level_window(1.0) {
                a = a.min(la);
                b = b.max(lb);
            }
            let (l1, l2) = f.tail_masses(a, b)?;
            ((a, b), c2 * l2 + c1 * l1)
        };
        let mut pts = quad::breakpoints(window.0, window.1, &f.breakpoints());
        if window.1 <= window.0 {
            pts = vec![window.0, window.0];
        }
        let r = quad::integrate(
            |x| self.rajput_rosinski(f.eval(x)).map(|t| t.total).unwrap_or(f64::NAN),
            &pts,
            &spec.opts.with_abs_tol(spec.opts.abs_tol.max(1e-12)),
        );
        let value = match r {
            Ok(v) => v.value,
            Err(Error::Quadrature { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        let status =
            if value.is_finite() && bound.is_finite() { DomainStatus::Admissible } else { DomainStatus::Inadmissible };
        Ok(DomainCheck { status, integral: Some(value), tail_bound: bound, window: Some(window) })
    }

    /// Quadrature nodes `(|r|, |r|·ν-weight)` for integrals over `|r| > threshold ≥ 1`:
    /// atoms exactly, the density by 8-point Gauss–Legendre panels between its grid points.
    pub fn large_jump_nodes(&self, threshold: f64) -> Vec<(f64, f64)> {
        let mut nodes: Vec<(f64, f64)> =
            self.nu.atoms.iter().filter(|a| a.x.abs() > threshold).map(|a| (a.x.abs(), a.x.abs() * a.mass)).collect();
        if let Some(d) = &self.nu.density {
            let gl = quad::GaussLegendre::new(8);
            let lo = d.grid[0].max(threshold);
            let hi = *d.grid.last().unwrap();
            if hi > lo {
                let (xs, ws) = gl.composite(lo, hi, &self.nu.density_breaks(), f64::INFINITY);
                for (x, w) in xs.into_iter().zip(ws) {
                    let mass = d.value(x) + d.value(-x);
                    if mass > 0.0 {
                        nodes.push((x, w * x * mass));
                    }
                }
            }
        }
        nodes
    }

    /// `∫_{|r|>threshold} |r| ∫₀^{1/|r|} d(α) dα ν(dr)` for one distribution function.
    pub fn tail_term(&self, d: &DistFn, threshold: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (r, w) in self.large_jump_nodes(threshold) {
            acc += w * tail_functional(d, r)?;
        }
        Ok(acc)
    }

    /// `∫_{|r|>1} |r| sup_k ∫₀^{1/|r|} d_{f_k}(α) dα ν(dr)` over a family of sections.
    /// Also returns, for each jump node, the index of the maximising section.
    fn b_space_sup(&self, sections: &[Section]) -> Result<(f64, usize)> {
        let nodes = self.large_jump_nodes(1.0);
        if nodes.is_empty() || sections.is_empty() {
            return Ok((0.0, 0));
        }
        let mut sup = vec![0.0f64; nodes.len()];
        let mut arg = vec![0usize; nodes.len()];
        for (k, section) in sections.iter().enumerate() {
            let sets = Arc::new(LevelSets::new(section)?);
            let d = DistFn::from_level_sets(sets, Part::Abs, Some(&[1.0]))?;
            for (i, &(r, _)) in nodes.iter().enumerate() {
                let v = tail_functional(&d, r)?;
                if v > sup[i] {
                    sup[i] = v;
                    arg[i] = k;
                }
            }
        }
        let value = nodes.iter().zip(&sup).map(|((_, w), s)| w * s).sum();
        let heaviest = (0..nodes.len())
            .max_by(|&a, &b| (nodes[a].1 * sup[a]).total_cmp(&(nodes[b].1 * sup[b])))
            .map(|i| arg[i])
            .unwrap_or(0);
        Ok((value, heaviest))
    }

    /// The `B(L)` functional of a single section.
    pub fn b_value(&self, section: &Section) -> Result<f64> {
        Ok(self.b_space_sup(std::slice::from_ref(section))?.0)
    }

    /// `∫_{|r|>1} |r| sup_t ∫₀^{1/|r|} d_{f(t,·)}(α) dα ν(dr)` over `t_grid`.
    pub fn b_space_value(&self, kernel: &KernelSpec, t_grid: &[f64]) -> Result<BSpaceValue> {
        if t_grid.is_empty() {
            return Err(Error::invalid("empty t-grid"));
        }
        let sections = t_grid.iter().map(|&t| kernel.section(t)).collect::<Result<Vec<_>>>()?;
        let (value, k) = self.b_space_sup(&sections)?;
        Ok(BSpaceValue { value, argmax_t: t_grid[k], grid_points: t_grid.len() })
    }
}

/// Default `t`-grid for suprema over time: one longest period or beat period, 512 points.
pub fn default_t_grid(kernel: &KernelSpec) -> Vec<f64> {
    match kernel.time_scale() {
        Some(w) => (0..512).map(|i| w * i as f64 / 512.0).collect(),
        None => vec![0.0],
    }
}

/// Continuous representation function: 1 on `|x| ≤ 1`, 0 on `|x| ≥ r2`, linear in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationFn {
    pub r2: f64,
}

impl Default for RepresentationFn {
    fn default() -> Self {
        RepresentationFn { r2: 2.0 }
    }
}

impl RepresentationFn {
    pub fn eval(&self, norm: f64) -> f64 {
        if norm <= 1.0 {
            1.0
        } else if norm >= self.r2 {
            0.0
        } else {
            (self.r2 - norm) / (self.r2 - 1.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiAtom {
    pub x: Vec<f64>,
    pub mass: f64,
}

/// Triplet `(A, γ^c, ν)_c` of a `d`-dimensional law with a discrete Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTriplet {
    pub a: Vec<Vec<f64>>,
    pub gamma_c: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<MultiAtom>,
    #[serde(default)]
    pub c: RepresentationFn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletTransform {
    pub gamma_c: Vec<f64>,
    /// `A + Σ x xᵀ c(x)² m`
    pub gauss_plus: Vec<Vec<f64>>,
    /// Atoms `(x, (|x|³ ∧ 1) m)`
    pub cubed: Vec<MultiAtom>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl MultiTriplet {
    pub fn dimension(&self) -> usize {
        self.gamma_c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if self.a.len() != d || self.a.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("Gaussian matrix must be d×d"));
        }
        for i in 0..d {
            for j in 0..d {
                if (self.a[i][j] - self.a[j][i]).abs() > 1e-12 * (1.0 + self.a[i][j].abs()) {
                    return Err(Error::invalid("Gaussian matrix must be symmetric"));
                }
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| self.a[i][j]);
        let eig = SymmetricEigen::new(m);
        if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
            return Err(Error::invalid("Gaussian matrix must be positive semi-definite"));
        }
        for atom in &self.atoms {
            if atom.x.len() != d {
                return Err(Error::invalid("atom dimension mismatch"));
            }
            if norm(&atom.x) == 0.0 {
                return Err(Error::invalid("atoms must be nonzero"));
            }
            if !(atom.mass > 0.0) {
                return Err(Error::invalid("atom masses must be positive"));
            }
        }
        if !(self.c.r2 > 1.0) {
            return Err(Error::invalid("representation cutoff r2 must exceed 1"));
        }
        Ok(())
    }

    pub fn transform(&self) -> Result<TripletTransform> {
        self.validate()?;
        let d = self.dimension();
        let mut g = self.a.clone();
        let mut cubed = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let n = norm(&atom.x);
            let c = self.c.eval(n);
            let w = c * c * atom.mass;
            if w != 0.0 {
                for i in 0..d {
                    for j in 0..d {
                        g[i][j] += atom.x[i] * atom.x[j] * w;
                    }
                }
            }
            cubed.push(MultiAtom { x: atom.x.clone(), mass: n.powi(3).min(1.0) * atom.mass });
        }
        Ok(TripletTransform { gamma_c: self.gamma_c.clone(), gauss_plus: g, cubed })
    }
}

/// Entrywise differences between two triplet transforms: drift (max norm),
/// Gaussian part (max entry) and the Prokhorov distance of the cubed measures.
pub fn transform_displacement(a: &TripletTransform, b: &TripletTransform) -> Result<[f64; 3]> {
    if a.gamma_c.len() != b.gamma_c.len() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let dg = a.gamma_c.iter().zip(&b.gamma_c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let da = a
        .gauss_plus
        .iter()
        .flatten()
        .zip(b.gauss_plus.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let to_measure = |atoms: &[MultiAtom]| crate::metrics::EmpiricalMeasure {
        points: atoms.iter().map(|a| a.x.clone()).collect(),
        weights: atoms.iter().map(|a| a.mass).collect(),
    };
    let dp = crate::metrics::prokhorov(&to_measure(&a.cubed), &to_measure(&b.cubed))?;
    Ok([dg, da, dp])
}

/// Suprema over `t_grid` of the three transform displacements between `t` and `t + τ`.
pub fn triplet_path_displacement<F>(path: F, tau: f64, t_grid: &[f64]) -> Result<[f64; 3]>
where
    F: Fn(f64) -> Result<MultiTriplet>,
{
    let mut worst = [0.0f64; 3];
    for &t in t_grid {
        let d = transform_displacement(&path(t)?.transform()?, &path(t + tau)?.transform()?)?;
        for k in 0..3 {
            worst[k] = worst[k].max(d[k]);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Profile;
    use crate::trig::TrigPolynomial;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_exponent() {
        let t = LevyTriplet::gaussian(1.0, 0.0);
        let v = t.eval_exponent(2.0).unwrap();
        assert_eq!(v, Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn single_atom_exponent() {
        let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&[(1.0, 3.0)]).unwrap()).unwrap();
        let v = t.eval_exponent(PI).unwrap();
        assert_abs_diff_eq!(v.re, -6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, -3.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn mixed_exponent_against_term_by_term() {
        let t = LevyTriplet::new(0.5, 0.2, JumpMeasure::atoms(&[(-2.0, 0.3), (0.5, 1.0)]).unwrap()).unwrap();
        let z = 1.0;
        let i = Complex64::i();
        let oracle = i * 0.2 * z - 0.25 * z * z
            + 0.3 * ((i * -2.0 * z).exp() - 1.0)
            + 1.0 * ((i * 0.5 * z).exp() - 1.0 - i * 0.5 * z);
        let v = t.eval_exponent(z).unwrap();
        assert_abs_diff_eq!(v.re, oracle.re, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, oracle.im, epsilon = 1e-14);
    }

    #[test]
    fn density_exponent_matches_atom_limit() {
        // a narrow density around 0.5 with unit mass behaves like an atom there
        let d = DensityTable {
            grid: vec![0.499, 0.5, 0.501],
            positive: vec![0.0, 1000.0, 0.0],
            negative: vec![0.0, 0.0, 0.0],
        };
        let nu = JumpMeasure { atoms: vec![], density: Some(d), truncation: None };
        let t = LevyTriplet::new(0.0, 0.0, nu).unwrap();
        let atom = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&[(0.5, 1.0)]).unwrap()).unwrap();
        let a = t.eval_exponent(1.3).unwrap();
        let b = atom.eval_exponent(1.3).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn rajput_rosinski_examples() {
        let g = LevyTriplet::gaussian(1.0, 0.5);
        assert_abs_diff_eq!(g.rajput_rosinski(2.0).unwrap().total, 5.0, epsilon = 1e-14);
        assert_eq!(g.rajput_rosinski(0.0).unwrap().total, 0.0);
        let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap()).unwrap();
        let r = t.rajput_rosinski(0.25).unwrap();
        assert_abs_diff_eq!(r.u, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.total, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn integral_exponent_examples() {
        let spec = QuadSpec::default();
        let g = LevyTriplet::gaussian(1.0, 0.0);
        let ind = Section::from(Profile::Indicator { lo: 0.0, hi: 1.0, height: 1.0 });
        let v = g.eval_integral_exponent(&[ind], &[1.0], &spec).unwrap();
        assert_abs_diff_eq!(v.value.re, -0.5, epsilon = 1e-12);
        let ex = Section::from(Profile::Exponential { start: 0.0, rate: 1.0, height: 1.0 });
        let v = g.eval_integral_exponent(std::slice::from_ref(&ex), &[1.0], &spec).unwrap();
        assert_abs_diff_eq!(v.value.re, -0.25, epsilon = 1e-10);
        assert!(v.tail_bound < 1e-10);
        // compound Poisson at 1; the compensator cancels the drift
        let cp = LevyTriplet::new(0.0, 1.0, JumpMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap();
        let v = cp.eval_integral_exponent(&[ex], &[1.0], &spec).unwrap();
        let opts = QuadOptions::default().with_rel_tol(1e-12);
        let oracle =
            quad::integrate(|s: f64| Complex64::new(0.0, (-s).exp()).exp() - 1.0, &[0.0, 60.0], &opts).unwrap().value;
        assert!((v.value - oracle).norm() < 1e-9, "{} vs {}", v.value, oracle);
    }

    #[test]
    fn no_decay_is_refused() {
        let g = LevyTriplet::gaussian(1.0, 0.0);
        let c = Section::from(Profile::Constant { value: 1.0 });
        assert!(matches!(
            g.eval_integral_exponent(std::slice::from_ref(&c), &[1.0], &QuadSpec::default()),
            Err(Error::UnboundedTail(_))
        ));
        let check = g.in_domain(&c, &QuadSpec::default()).unwrap();
        assert_eq!(check.status, DomainStatus::Indeterminate);
    }

    #[test]
    fn in_domain_examples() {
        let g = LevyTriplet::gaussian(1.0, 0.0);
        let ind = Section::from(Profile::Indicator { lo: 0.0, hi: 1.0, height: 1.0 });
        let c = g.in_domain(&ind, &QuadSpec::default()).unwrap();
        assert!(c.admissible());
        assert_abs_diff_eq!(c.integral.unwrap(), 1.0, epsilon = 1e-12);
        let ou = Section::ou(&TrigPolynomial::constant(-1.0), 0.0).unwrap();
        let c = g.in_domain(&ou, &QuadSpec::default()).unwrap();
        assert!(c.admissible());
        assert_abs_diff_eq!(c.integral.unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn b_space_examples() {
        let small = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&[(0.5, 1.0)]).unwrap()).unwrap();
        let k = KernelSpec::Static { g: Profile::Indicator { lo: 0.0, hi: 1.0, height: 1.0 } };
        assert_eq!(small.b_space_value(&k, &[0.0]).unwrap().value, 0.0);
        let big = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap()).unwrap();
        assert_abs_diff_eq!(big.b_space_value(&k, &[0.0]).unwrap().value, 1.0, epsilon = 1e-12);
        let e = KernelSpec::Static { g: Profile::Exponential { start: 0.0, rate: 1.0, height: 1.0 } };
        assert_abs_diff_eq!(big.b_space_value(&e, &[0.0]).unwrap().value, 1.0 + 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn triplet_transform_examples() {
        let mt = MultiTriplet {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            gamma_c: vec![0.3, -0.1],
            atoms: vec![],
            c: RepresentationFn::default(),
        };
        let t = mt.transform().unwrap();
        assert_eq!(t.gauss_plus, mt.a);
        assert!(t.cubed.is_empty());
        let one = |x: f64, m: f64| MultiTriplet {
            a: vec![vec![0.0]],
            gamma_c: vec![0.0],
            atoms: vec![MultiAtom { x: vec![x], mass: m }],
            c: RepresentationFn::default(),
        };
        let t = one(0.5, 2.0).transform().unwrap();
        assert_abs_diff_eq!(t.gauss_plus[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.cubed[0].mass, 0.25, epsilon = 1e-15);
        let t = one(3.0, 1.0).transform().unwrap();
        assert_eq!(t.gauss_plus[0][0], 0.0);
        assert_eq!(t.cubed[0].mass, 1.0);
    }

    #[test]
    fn rejects_bad_triplets() {
        assert!(LevyTriplet::new(-1.0, 0.0, JumpMeasure::default()).is_err());
        assert!(JumpMeasure::atoms(&[(0.0, 1.0)]).is_err());
        let mt = MultiTriplet {
            a: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            gamma_c: vec![0.0, 0.0],
            atoms: vec![],
            c: RepresentationFn::default(),
        };
        assert!(mt.transform().is_err());
    }

    fn triplet_strategy() -> impl Strategy<Value = LevyTriplet> {
        (0.0..2.0f64, -1.0..1.0f64, proptest::collection::vec((-3.0..3.0f64, 0.01..2.0f64), 0..4)).prop_map(
            |(a, g, atoms)| {
                let atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|(x, _)| x.abs() > 1e-3).collect();
                LevyTriplet::new(a, g, JumpMeasure::atoms(&atoms).unwrap()).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn exponent_symmetries(t in triplet_strategy(), z in -20.0..20.0f64) {
            prop_assert_eq!(t.eval_exponent(0.0).unwrap(), Complex64::new(0.0, 0.0));
            let p = t.eval_exponent(z).unwrap();
            let m = t.eval_exponent(-z).unwrap();
            prop_assert!((p - m.conj()).norm() < 1e-12 * (1.0 + p.norm()));
            prop_assert!(p.re <= 1e-15);
        }

        #[test]
        fn rajput_rosinski_even_parts(t in triplet_strategy(), z in -10.0..10.0f64) {
            let p = t.rajput_rosinski(z).unwrap();
            let m = t.rajput_rosinski(-z).unwrap();
            prop_assert_eq!(p.v, m.v);
            prop_assert_eq!(p.gauss, m.gauss);
            prop_assert!(p.total >= 0.0);
        }

        #[test]
        fn gaussian_domain_matches_norms(a in 0.1..2.0f64, g in -1.0..1.0f64, rate in 0.2..3.0f64, h in -2.0..2.0f64) {
            let t = LevyTriplet::gaussian(a, g);
            let f = Section::from(Profile::Exponential { start: 0.0, rate, height: h });
            let c = t.in_domain(&f, &QuadSpec::default()).unwrap();
            let l1 = h.abs() / rate;
            let l2 = h * h / (2.0 * rate);
            prop_assert!(c.admissible());
            prop_assert!((c.integral.unwrap() - (g.abs() * l1 + a * l2)).abs() < 1e-8);
        }

        #[test]
        fn transform_gaussian_increment_is_psd(xs in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.01..2.0f64), 1..6)) {
            let atoms: Vec<MultiAtom> = xs.iter().filter(|(a, b, _)| a.abs() + b.abs() > 1e-6).map(|&(a, b, m)| MultiAtom { x: vec![a, b], mass: m }).collect();
            let mt = MultiTriplet { a: vec![vec![0.5, 0.1], vec![0.1, 0.5]], gamma_c: vec![0.0, 0.0], atoms, c: RepresentationFn::default() };
            let t = mt.transform().unwrap();
            let diff = DMatrix::from_fn(2, 2, |i, j| t.gauss_plus[i][j] - mt.a[i][j]);
            let eig = SymmetricEigen::new(diff);
            prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        }
    }
}
