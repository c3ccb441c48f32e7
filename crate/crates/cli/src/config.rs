//! Experiment configurations. One TOML file per run; unknown keys are rejected.

use apstat::aperiodicity::{CertifyOptions, ProcessSpec};
use apstat::bounds::{KyFanVariant, McSpec};
use apstat::clt::MAProcessSpec;
use apstat::kernel::{KernelSpec, Profile, Section};
use apstat::levy::{LevyTriplet, MultiTriplet, QuadSpec};
use apstat::metrics::{GammaOptions, MetricKind};
use apstat::simulate::OuOptions;
use apstat::trig::TrigPolynomial;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> f64 {
    1.0
}

/// A single integrand: a profile under `amp · g(scale · x + shift)`, or a kernel section at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionSpec {
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "one")]
    pub amp: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

impl SectionSpec {
    pub fn section(&self) -> Result<Section, CliError> {
        match (&self.profile, &self.kernel) {
            (Some(p), None) => {
                p.validate()?;
                Ok(Section::Profile { profile: p.clone(), amp: self.amp, scale: self.scale, shift: self.shift })
            }
            (None, Some(k)) => {
                if self.scale != 1.0 || self.shift != 0.0 {
                    return Err(CliError::Config("kernel sections take only `t` and `amp`".into()));
                }
                k.validate()?;
                Ok(k.section(self.t)?.scaled(self.amp))
            }
            _ => Err(CliError::Config("a section needs exactly one of `profile` or `kernel`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub triplet: LevyTriplet,
    /// Points at which `ψ_L(z)` is evaluated; with `section`, also `∫ ψ_L(z f)`.
    pub z: Vec<f64>,
    #[serde(default)]
    pub section: Option<SectionSpec>,
    #[serde(default)]
    pub quad: QuadSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub triplet: LevyTriplet,
    #[serde(default)]
    pub sections: Vec<SectionSpec>,
    /// Points at which the Rajput–Rosinski function is tabulated.
    #[serde(default)]
    pub z: Vec<f64>,
    /// Kernel family whose sections are checked against the `B(L)` condition on `t_grid`.
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub quad: QuadSpec,
}

/// Paths are relative to the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub kind: MetricKind,
    /// Measure CSVs `x1,…,xn,weight`.
    #[serde(default)]
    pub mu: Option<String>,
    #[serde(default)]
    pub nu: Option<String>,
    /// Characteristic-function grids `z1,…,zn,re,im`, an alternative for the gamma metric.
    #[serde(default)]
    pub mu_grid: Option<String>,
    #[serde(default)]
    pub nu_grid: Option<String>,
    /// Coupled draws `x,y` for the Ky-Fan metric.
    #[serde(default)]
    pub paired: Option<String>,
    #[serde(default)]
    pub gamma: GammaOptions,
}

/// Monte Carlo settings; the seed comes from the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_mc_tail")]
    pub tail_tol: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_paths() -> usize {
    McSpec::default().n_paths
}
fn default_dt() -> f64 {
    McSpec::default().dt
}
fn default_mc_tail() -> f64 {
    McSpec::default().tail_tol
}
fn default_delta() -> f64 {
    McSpec::default().delta
}

impl Default for McConfig {
    fn default() -> Self {
        let m = McSpec::default();
        McConfig { n_paths: m.n_paths, dt: m.dt, tail_tol: m.tail_tol, delta: m.delta }
    }
}

impl McConfig {
    pub fn spec(&self, seed: u64) -> McSpec {
        McSpec { n_paths: self.n_paths, dt: self.dt, seed, tail_tol: self.tail_tol, delta: self.delta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundCase {
    /// `|∫ψ(zᵀf) - ∫ψ(zᵀg)|` against its term-by-term bound.
    ExponentDiff {
        id: String,
        f: Vec<SectionSpec>,
        g: Vec<SectionSpec>,
        triplet: LevyTriplet,
        z: Vec<f64>,
        #[serde(rename = "R")]
        r: f64,
        #[serde(default)]
        quad: QuadSpec,
    },
    /// Coupled Ky-Fan estimate against `min(1, (14 I_R)^{1/3})`.
    KyFan {
        id: String,
        f: SectionSpec,
        g: SectionSpec,
        triplet: LevyTriplet,
        #[serde(rename = "R")]
        r: f64,
        #[serde(default = "default_variant")]
        variant: KyFanVariant,
        #[serde(default)]
        mc: McConfig,
    },
    /// `min(1, (σ² ‖f - g‖²₂)^{1/3})` for a centred driver of variance `σ²`.
    KyFanFiniteVariance {
        id: String,
        sigma2: f64,
        /// `‖f - g‖²₂`, or computed from `f` and `g`.
        #[serde(default)]
        l2_dist2: Option<f64>,
        #[serde(default)]
        f: Option<SectionSpec>,
        #[serde(default)]
        g: Option<SectionSpec>,
    },
}

fn default_variant() -> KyFanVariant {
    KyFanVariant::Truncated
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub cases: Vec<BoundCase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOuConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub mu: TrigPolynomial,
    pub triplet: LevyTriplet,
    pub ou: OuOptions,
    pub n_paths: usize,
    /// Number of individual path files; defaults to `min(n_paths, 10)`.
    #[serde(default)]
    pub write_paths: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub process: ProcessSpec,
    pub certify: CertifyOptions,
    #[serde(default)]
    pub quad: QuadSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub process: MAProcessSpec,
    pub t_list: Vec<f64>,
    pub n_reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default)]
    pub run: RunOptions,
    pub triplet: MultiTriplet,
    /// Second triplet; when present the displacement between the transforms is reported.
    #[serde(default)]
    pub other: Option<MultiTriplet>,
}

/// The `[run]` table shared by every configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
}

pub trait Experiment: Serialize + for<'de> Deserialize<'de> {
    fn run_options(&mut self) -> &mut RunOptions;
}

macro_rules! experiment {
    ($($t:ty),*) => {
        $(impl Experiment for $t {
            fn run_options(&mut self) -> &mut RunOptions {
                &mut self.run
            }
        })*
    };
}

experiment!(
    ExponentConfig,
    DomainConfig,
    MetricConfig,
    BoundConfig,
    SimulateOuConfig,
    CertifyConfig,
    CltConfig,
    TransformConfig
);
