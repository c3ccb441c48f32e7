//! Configuration-driven experiments writing CSV artifacts and a run manifest.

pub mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use apstat::aperiodicity::certify_ap;
use apstat::bounds::{exponent_diff_bound, kyfan_bound_finite_var, kyfan_bound_ir, BoundReport};
use apstat::clt::clt_experiment;
use apstat::io::{self, fmt};
use apstat::levy::{default_t_grid, transform_displacement, DomainStatus};
use apstat::metrics::{
    bounded_lipschitz, gamma_from_grids, gamma_metric, ky_fan, prokhorov, wasserstein_1d, EmpiricalMeasure, MetricKind,
};
use apstat::quad::QuadOptions;
use apstat::simulate::{ensemble_summary, ou_ensemble};
use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use config::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypotheses unmet: {0}")]
    Hypothesis(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<apstat::Error> for CliError {
    fn from(e: apstat::Error) -> Self {
        use apstat::Error as E;
        let msg = e.to_string();
        match e {
            E::Hypothesis(_) | E::UnboundedTail(_) => CliError::Hypothesis(msg),
            E::Quadrature { .. } | E::Numerical(_) | E::Divergent { .. } | E::NoMonotonicity => {
                CliError::Numerical(msg)
            }
            E::Io(_) => CliError::Io(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "apstat", version, about = "Experiments on almost periodic processes driven by Levy bases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for ensemble and scan work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the exponent of the driver and of a stochastic integral.
    Exponent,
    /// Rajput–Rosinski admissibility and the B(L) condition.
    DomainCheck,
    /// One of the five distances on CSV inputs.
    Metric,
    /// Exponent-difference and Ky-Fan bound reports.
    Bound,
    /// Stationary almost periodic OU paths.
    SimulateOu,
    /// Scan for almost periods of the finite-dimensional laws.
    CertifyAp,
    /// Central limit experiment for modulated moving averages.
    Clt,
    /// Transformed triplet of a multivariate law.
    TripletTransform,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Exponent,
        Command::DomainCheck,
        Command::Metric,
        Command::Bound,
        Command::SimulateOu,
        Command::CertifyAp,
        Command::Clt,
        Command::TripletTransform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Exponent => "exponent",
            Command::DomainCheck => "domain-check",
            Command::Metric => "metric",
            Command::Bound => "bound",
            Command::SimulateOu => "simulate-ou",
            Command::CertifyAp => "certify-ap",
            Command::Clt => "clt",
            Command::TripletTransform => "triplet-transform",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Files written by a run, relative to the output directory.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    files: &'a [String],
    config: &'a C,
}

struct Ctx {
    out: PathBuf,
    base: PathBuf,
    seed: u64,
    files: Vec<String>,
}

impl Ctx {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn input(&self, rel: &Option<String>, what: &str) -> Result<File, CliError> {
        let rel = rel.as_ref().ok_or_else(|| CliError::Config(format!("`{what}` is required for this metric")))?;
        let p = self.base.join(rel);
        File::open(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

fn parse<C: Experiment>(text: &str) -> Result<C, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn parse_echo<C: Experiment>(text: &str) -> Result<String, CliError> {
    let cfg: C = parse(text)?;
    toml::to_string(&cfg).map_err(|e| CliError::Numerical(format!("echo: {e}")))
}

/// Parses a configuration for `command` and returns its canonical TOML echo.
pub fn check_config(command: Command, text: &str) -> Result<String, CliError> {
    match command {
        Command::Exponent => parse_echo::<ExponentConfig>(text),
        Command::DomainCheck => parse_echo::<DomainConfig>(text),
        Command::Metric => parse_echo::<MetricConfig>(text),
        Command::Bound => parse_echo::<BoundConfig>(text),
        Command::SimulateOu => parse_echo::<SimulateOuConfig>(text),
        Command::CertifyAp => parse_echo::<CertifyConfig>(text),
        Command::Clt => parse_echo::<CltConfig>(text),
        Command::TripletTransform => parse_echo::<TransformConfig>(text),
    }
}

/// Runs one subcommand; the config is read from `config_path`.
pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let text =
        fs::read_to_string(config_path).map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let work = || match command {
        Command::Exponent => execute(command, parse::<ExponentConfig>(&text)?, &base, overrides, exponent),
        Command::DomainCheck => execute(command, parse::<DomainConfig>(&text)?, &base, overrides, domain_check),
        Command::Metric => execute(command, parse::<MetricConfig>(&text)?, &base, overrides, metric),
        Command::Bound => execute(command, parse::<BoundConfig>(&text)?, &base, overrides, bound),
        Command::SimulateOu => execute(command, parse::<SimulateOuConfig>(&text)?, &base, overrides, simulate_ou),
        Command::CertifyAp => execute(command, parse::<CertifyConfig>(&text)?, &base, overrides, certify),
        Command::Clt => execute(command, parse::<CltConfig>(&text)?, &base, overrides, clt),
        Command::TripletTransform => execute(command, parse::<TransformConfig>(&text)?, &base, overrides, transform),
    };
    match overrides.threads {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(work)
        }
        None => work(),
    }
}

fn execute<C: Experiment>(
    command: Command,
    mut cfg: C,
    base: &Path,
    overrides: &Overrides,
    body: fn(&C, &mut Ctx) -> Result<(), CliError>,
) -> Result<RunSummary, CliError> {
    let run = cfg.run_options();
    if let Some(seed) = overrides.seed {
        run.seed = seed;
    }
    if let Some(dir) = &overrides.out_dir {
        run.out_dir = Some(dir.to_string_lossy().into_owned());
    }
    let seed = run.seed;
    let out = match &run.out_dir {
        Some(d) => base.join(d),
        None => base.join("out"),
    };
    fs::create_dir_all(&out)?;
    let mut ctx = Ctx { out, base: base.to_path_buf(), seed, files: Vec::new() };
    body(&cfg, &mut ctx)?;
    // the output location is not part of the experiment; leaving it out keeps manifests comparable
    cfg.run_options().out_dir = None;
    let manifest =
        Manifest { command: command.name(), version: env!("CARGO_PKG_VERSION"), seed, files: &ctx.files, config: &cfg };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Numerical(format!("manifest: {e}")))?;
    fs::write(ctx.out.join("manifest.toml"), text)?;
    ctx.files.push("manifest.toml".into());
    Ok(RunSummary { out_dir: ctx.out, files: ctx.files })
}

fn exponent(cfg: &ExponentConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    cfg.triplet.validate()?;
    let mut rows = Vec::with_capacity(cfg.z.len());
    for &z in &cfg.z {
        let v = cfg.triplet.eval_exponent_with(z, &cfg.quad.opts)?;
        rows.push(vec![fmt(z), fmt(v.re), fmt(v.im)]);
    }
    io::write_table(ctx.create("exponent.csv")?, &["z", "re", "im"], rows)?;
    if let Some(spec) = &cfg.section {
        let f = spec.section()?;
        let mut rows = Vec::with_capacity(cfg.z.len());
        for &z in &cfg.z {
            let e = cfg.triplet.eval_section_exponent(&f.clone().scaled(z), &cfg.quad)?;
            rows.push(vec![fmt(z), fmt(e.value.re), fmt(e.value.im), fmt(e.error), fmt(e.tail_bound)]);
        }
        io::write_table(ctx.create("section_exponent.csv")?, &["z", "re", "im", "error", "tail_bound"], rows)?;
    }
    Ok(())
}

fn status_name(s: DomainStatus) -> &'static str {
    match s {
        DomainStatus::Admissible => "admissible",
        DomainStatus::Inadmissible => "inadmissible",
        DomainStatus::Indeterminate => "indeterminate",
    }
}

fn domain_check(cfg: &DomainConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    cfg.triplet.validate()?;
    let mut rows = Vec::new();
    for &z in &cfg.z {
        let r = cfg.triplet.rajput_rosinski(z)?;
        rows.push(vec![fmt(z), fmt(r.u), fmt(r.v), fmt(r.gauss), fmt(r.total)]);
    }
    io::write_table(ctx.create("rajput_rosinski.csv")?, &["z", "U", "V", "gauss", "total"], rows)?;
    let mut rows = Vec::new();
    for (i, spec) in cfg.sections.iter().enumerate() {
        let f = spec.section()?;
        let c = cfg.triplet.in_domain(&f, &cfg.quad)?;
        let b = match cfg.triplet.b_value(&f) {
            Ok(v) => v,
            Err(apstat::Error::Divergent { .. }) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let integral = c.integral.map_or_else(|| "".to_string(), fmt);
        rows.push(vec![i.to_string(), status_name(c.status).to_string(), integral, fmt(c.tail_bound), fmt(b)]);
    }
    io::write_table(ctx.create("domain.csv")?, &["section", "status", "integral", "tail_bound", "B"], rows)?;
    if let Some(k) = &cfg.kernel {
        k.validate()?;
        let grid = cfg.t_grid.clone().unwrap_or_else(|| default_t_grid(k));
        let b = cfg.triplet.b_space_value(k, &grid)?;
        io::write_table(
            ctx.create("b_space.csv")?,
            &["value", "argmax_t", "grid_points"],
            [vec![fmt(b.value), fmt(b.argmax_t), b.grid_points.to_string()]],
        )?;
    }
    Ok(())
}

fn metric(cfg: &MetricConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let pair = |ctx: &Ctx| -> Result<(EmpiricalMeasure, EmpiricalMeasure), CliError> {
        Ok((
            io::read_empirical_measure(ctx.input(&cfg.mu, "mu")?)?,
            io::read_empirical_measure(ctx.input(&cfg.nu, "nu")?)?,
        ))
    };
    let (value, tail) = match cfg.kind {
        MetricKind::Gamma => {
            let r = if cfg.mu_grid.is_some() || cfg.nu_grid.is_some() {
                let a = io::read_charfn_grid(ctx.input(&cfg.mu_grid, "mu_grid")?)?;
                let b = io::read_charfn_grid(ctx.input(&cfg.nu_grid, "nu_grid")?)?;
                gamma_from_grids(&a, &b, cfg.gamma.k_max)?
            } else {
                let (a, b) = pair(ctx)?;
                gamma_metric(&a, &b, &cfg.gamma)?
            };
            (r.value, r.tail + r.correction)
        }
        MetricKind::BoundedLipschitz => {
            let (a, b) = pair(ctx)?;
            (bounded_lipschitz(&a, &b)?, 0.0)
        }
        MetricKind::Prokhorov => {
            let (a, b) = pair(ctx)?;
            (prokhorov(&a, &b)?, 0.0)
        }
        MetricKind::Wasserstein => {
            let (a, b) = pair(ctx)?;
            (wasserstein_1d(&a, &b)?, 0.0)
        }
        MetricKind::KyFan => {
            let (x, y) = io::read_paired_sample(ctx.input(&cfg.paired, "paired")?)?;
            (ky_fan(&x, &y)?, 0.0)
        }
    };
    let name = toml::Value::try_from(cfg.kind).map_err(|e| CliError::Config(e.to_string()))?;
    let name = name.as_str().unwrap_or("metric").to_string();
    io::write_table(ctx.create("metric.csv")?, &["metric", "value", "tail"], [vec![name, fmt(value), fmt(tail)]])?;
    Ok(())
}

fn bound(cfg: &BoundConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let mut reports = Vec::with_capacity(cfg.cases.len());
    for (i, case) in cfg.cases.iter().enumerate() {
        let rep = match case {
            BoundCase::ExponentDiff { id, f, g, triplet, z, r, quad } => {
                let f = f.iter().map(SectionSpec::section).collect::<Result<Vec<_>, _>>()?;
                let g = g.iter().map(SectionSpec::section).collect::<Result<Vec<_>, _>>()?;
                exponent_diff_bound(id, &f, &g, triplet, z, *r, quad)?
            }
            BoundCase::KyFan { id, f, g, triplet, r, variant, mc } => {
                let seed = ctx.seed.wrapping_add(i as u64);
                kyfan_bound_ir(id, &f.section()?, &g.section()?, triplet, *r, *variant, &mc.spec(seed))?
            }
            BoundCase::KyFanFiniteVariance { id, sigma2, l2_dist2, f, g } => {
                if sigma2.is_nan() || *sigma2 < 0.0 {
                    return Err(CliError::Config("sigma2 must be nonnegative".into()));
                }
                let d2 = match (l2_dist2, f, g) {
                    (Some(d), None, None) => *d,
                    (None, Some(f), Some(g)) => {
                        let h = f.section()?.minus(&g.section()?);
                        if h.is_zero() {
                            0.0
                        } else {
                            h.lp_norm(2.0, &QuadOptions::default().with_rel_tol(1e-12))?.powi(2)
                        }
                    }
                    _ => return Err(CliError::Config(format!("case {id}: give either l2_dist2 or both f and g"))),
                };
                let rhs = kyfan_bound_finite_var(*sigma2, d2);
                BoundReport {
                    case_id: id.clone(),
                    lhs: f64::NAN,
                    lhs_error: f64::NAN,
                    rhs,
                    margin: f64::NAN,
                    r: f64::NAN,
                    terms: vec![("variance_l2".into(), sigma2 * d2)],
                    hypotheses_met: true,
                    note: None,
                }
            }
        };
        if !rep.hypotheses_met {
            return Err(CliError::Hypothesis(format!(
                "case {}: {}",
                rep.case_id,
                rep.note.unwrap_or_else(|| "inadmissible".into())
            )));
        }
        reports.push(rep);
    }
    io::write_bound_reports(ctx.create("bounds.csv")?, &reports)?;
    Ok(())
}

fn simulate_ou(cfg: &SimulateOuConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    if cfg.n_paths == 0 {
        return Err(CliError::Config("n_paths must be positive".into()));
    }
    let paths = ou_ensemble(&cfg.mu, &cfg.triplet, &cfg.ou, cfg.n_paths, ctx.seed)?;
    let keep = cfg.write_paths.unwrap_or(10).min(cfg.n_paths);
    for (i, p) in paths.iter().take(keep).enumerate() {
        io::write_path_grid(ctx.create(&format!("paths/path_{i:05}.csv"))?, p)?;
    }
    io::write_ensemble(ctx.create("ensemble.csv")?, &ensemble_summary(&paths)?)?;
    io::write_table(
        ctx.create("truncation.csv")?,
        &["t_trunc", "tail_tol", "jump_cutoff"],
        [vec![fmt(paths[0].t_trunc), fmt(cfg.ou.tail_tol), paths[0].jump_cutoff.map_or_else(String::new, fmt)]],
    )?;
    Ok(())
}

#[derive(Serialize)]
struct CertifySummary<'a> {
    resolution: &'a str,
    tau_step: f64,
    x_points: usize,
    x_span: f64,
    z_nodes: usize,
    levels: &'a [apstat::aperiodicity::LevelReport],
}

fn certify(cfg: &CertifyConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let r = certify_ap(&cfg.process, &cfg.certify, &cfg.quad)?;
    io::write_profile(ctx.create("profile.csv")?, &r.profile)?;
    let summary = CertifySummary {
        resolution: &r.resolution,
        tau_step: r.tau_step,
        x_points: r.x_points,
        x_span: r.x_span,
        z_nodes: r.z_nodes,
        levels: &r.levels,
    };
    let text = toml::to_string(&summary).map_err(|e| CliError::Numerical(format!("report: {e}")))?;
    fs::write(ctx.out.join("report.toml"), text)?;
    ctx.files.push("report.toml".into());
    Ok(())
}

fn clt(cfg: &CltConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let r = clt_experiment(&cfg.process, &cfg.t_list, cfg.n_reps, ctx.seed)?;
    io::write_clt_rows(ctx.create("clt.csv")?, &r.rows)?;
    io::write_table(
        ctx.create("g_profile.csv")?,
        &["s", "g"],
        r.profile.s.iter().zip(&r.profile.g).map(|(s, g)| vec![fmt(*s), fmt(*g)]),
    )?;
    Ok(())
}

fn transform(cfg: &TransformConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let t = cfg.triplet.transform()?;
    let mut rows = Vec::new();
    for (i, g) in t.gamma_c.iter().enumerate() {
        rows.push(vec!["gamma_c".into(), i.to_string(), String::new(), fmt(*g)]);
    }
    for (i, row) in t.gauss_plus.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            rows.push(vec!["gauss_plus".into(), i.to_string(), j.to_string(), fmt(*v)]);
        }
    }
    for (k, a) in t.cubed.iter().enumerate() {
        for (i, x) in a.x.iter().enumerate() {
            rows.push(vec![format!("atom_{k}_x"), i.to_string(), String::new(), fmt(*x)]);
        }
        rows.push(vec![format!("atom_{k}_mass"), String::new(), String::new(), fmt(a.mass)]);
    }
    io::write_table(ctx.create("transform.csv")?, &["quantity", "i", "j", "value"], rows)?;
    if let Some(other) = &cfg.other {
        let d = transform_displacement(&t, &other.transform()?)?;
        io::write_table(
            ctx.create("displacement.csv")?,
            &["gamma_c", "gauss_plus", "cubed"],
            [d.iter().map(|v| fmt(*v)).collect::<Vec<_>>()],
        )?;
    }
    Ok(())
}

/// Entry point shared by the binary: parses arguments, runs, reports, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let Some(config) = cli.config.clone() else {
        eprintln!("error: --config is required");
        return 2;
    };
    let overrides = Overrides { seed: cli.seed, out_dir: cli.out_dir.clone(), threads: cli.threads };
    match run(cli.command, &config, &overrides) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", summary.out_dir.join(f).display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
