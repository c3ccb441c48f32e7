//! Real trigonometric polynomials `μ(t) = c0 + Σ c_k cos(ω_k t + φ_k)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPolynomial {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

/// Relative tolerance under which two frequencies are treated as equal.
const FREQ_TOL: f64 = 1e-12;

impl TrigPolynomial {
    pub fn constant(c0: f64) -> Self {
        TrigPolynomial { c0, terms: Vec::new() }
    }

    pub fn new(c0: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        let p = TrigPolynomial { c0, terms };
        p.validate()?;
        Ok(p)
    }

    pub fn with_term(mut self, amplitude: f64, frequency: f64, phase: f64) -> Self {
        self.terms.push(TrigTerm { amplitude, frequency, phase });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c0.is_finite() {
            return Err(Error::invalid("trigonometric polynomial: c0 must be finite"));
        }
        for term in &self.terms {
            if !(term.frequency > 0.0 && term.frequency.is_finite()) {
                return Err(Error::invalid(format!(
                    "trigonometric polynomial: frequency {} must be positive",
                    term.frequency
                )));
            }
            if !term.amplitude.is_finite() || !term.phase.is_finite() {
                return Err(Error::invalid("trigonometric polynomial: non-finite coefficient"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.c0, |acc, k| acc + k.amplitude * (k.frequency * t + k.phase).cos())
    }

    /// `Z(t) = ∫₀ᵗ μ`, in closed form.
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.c0 * t, |acc, k| {
            acc + k.amplitude / k.frequency * ((k.frequency * t + k.phase).sin() - k.phase.sin())
        })
    }

    /// `Z(t) - Z(s)` without the cancellation of two large `c0` terms.
    pub fn increment(&self, s: f64, t: f64) -> f64 {
        self.terms.iter().fold(self.c0 * (t - s), |acc, k| {
            acc + k.amplitude / k.frequency * ((k.frequency * t + k.phase).sin() - (k.frequency * s + k.phase).sin())
        })
    }

    /// `|c0| + Σ|c_k|`, an upper bound for `sup |μ|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().fold(self.c0.abs(), |acc, k| acc + k.amplitude.abs())
    }

    /// Mean value `lim (1/2T) ∫_{-T}^T μ`.
    pub fn mean(&self) -> f64 {
        self.c0
    }

    /// Bound on `sup_t |Z(t) - c0 t - Z(s) + c0 s|`, i.e. `2 Σ |c_k| / ω_k`.
    pub fn oscillation_bound(&self) -> f64 {
        2.0 * self.terms.iter().map(|k| k.amplitude.abs() / k.frequency).sum::<f64>()
    }

    /// Mean value of `t ↦ μ(t) μ(t + s)`.
    pub fn mean_product(&self, s: f64) -> f64 {
        let mut acc = self.c0 * self.c0;
        for a in &self.terms {
            for b in &self.terms {
                if same_frequency(a.frequency, b.frequency) {
                    acc += 0.5 * a.amplitude * b.amplitude * (b.frequency * s + b.phase - a.phase).cos();
                }
            }
        }
        acc
    }

    /// Periods `2π/ω_k` of the oscillating terms.
    pub fn periods(&self) -> Vec<f64> {
        self.terms.iter().map(|k| 2.0 * PI / k.frequency).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|k| k.amplitude == 0.0)
    }

    /// Longest period or beat period between distinct frequencies.
    pub fn longest_scale(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.terms.iter().enumerate() {
            best = Some(best.map_or(2.0 * PI / a.frequency, |b: f64| b.max(2.0 * PI / a.frequency)));
            for b in &self.terms[i + 1..] {
                let diff = (a.frequency - b.frequency).abs();
                if !same_frequency(a.frequency, b.frequency) {
                    best = Some(best.map_or(2.0 * PI / diff, |x: f64| x.max(2.0 * PI / diff)));
                }
            }
        }
        best
    }

    pub fn shortest_period(&self) -> Option<f64> {
        self.periods().into_iter().reduce(f64::min)
    }

    /// Window length `T0` such that `|(1/T)∫_s^{s+T} μ - c0| ≤ C/2` for every `s` and `T ≥ T0`,
    /// where `C = -c0 > 0`.
    pub fn averaging_window(&self) -> Option<f64> {
        let c = -self.c0;
        if c <= 0.0 {
            return None;
        }
        Some(self.oscillation_bound() * 2.0 / c)
    }

    /// `(C/2, C')` with `∫_s^t μ ≤ -(t-s) C/2 + C'` for all `s ≤ t`, where `C' = 2 T0 sup|μ|`.
    pub fn decay_estimate(&self) -> Option<(f64, f64)> {
        let t0 = self.averaging_window()?;
        Some((-0.5 * self.c0, 2.0 * t0 * self.sup_bound()))
    }

    /// Sign changes of `μ` on `[a, b]`, located by scanning at `step` and bisecting.
    pub fn roots(&self, a: f64, b: f64, step: f64) -> Vec<f64> {
        let mut roots = Vec::new();
        if b <= a {
            return roots;
        }
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let mut x0 = a;
        let mut f0 = self.eval(x0);
        for i in 1..=n {
            let x1 = if i == n { b } else { a + i as f64 * h };
            let f1 = self.eval(x1);
            if f0 == 0.0 {
                if i > 1 {
                    roots.push(x0);
                }
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = self.eval(mid);
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }
}

fn same_frequency(a: f64, b: f64) -> bool {
    (a - b).abs() <= FREQ_TOL * a.abs().max(b.abs())
}
