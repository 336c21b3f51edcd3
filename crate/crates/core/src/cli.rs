//! The `shapesmooth` command line: argument parsing and dispatch.
//!
//! Exit codes: 0 on success, 1 on invalid input or arguments, 2 when the
//! mathematics fails (shape or smoothness not certified, input outside the
//! shape class). Failures print a JSON diagnostic on stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::io::{load_json, load_partition, load_ppf, save_json, to_json};
use crate::jackson::{run_rate_study, RateStudyConfig};
use crate::norms::{dt_modulus, modulus, Exponent, DEFAULT_RESOLUTION};
use crate::partition::Partition;
use crate::poly::Polynomial;
use crate::ppf::{PiecewisePoly, ShapeSpec, DEFAULT_TOL};
use crate::smoothing::{
    convex_c1_smooth, smooth as smooth_ppf, smooth_shape_q12, DeltaMode, GlueConfig, Pipeline, RemeshChoice, SmoothOptions, SmoothOutcome,
    DEFAULT_MAX_REFINEMENTS,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SHAPESMOOTH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shapesmooth", version, about = "Shape-preserving smoothing of piecewise polynomials")]
pub struct CliConfig {
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smooth a q-monotone piecewise polynomial into a spline of minimal defect.
    Smooth(SmoothArgs),
    /// Certify q-monotonicity and report the smoothness class.
    Check(CheckArgs),
    /// Estimate a modulus of smoothness of a piecewise polynomial.
    Modulus(ModulusArgs),
    /// Run an approximation-rate study.
    Rates(RatesArgs),
    /// Write the convex hat example and its smoothings.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Adaptive,
    Theoretical,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Auto => Pipeline::Auto,
            PipelineArg::MinimalDefect => Pipeline::MinimalDefect,
            PipelineArg::ShapeQ12 => Pipeline::ShapeQ12,
        }
    }
}

impl From<ModeArg> for DeltaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Adaptive => DeltaMode::Adaptive,
            ModeArg::Theoretical => DeltaMode::Theoretical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    /// `minimal-defect` when the input is already `C^{q-1}`, otherwise
    /// `shape-q12`.
    Auto,
    MinimalDefect,
    ShapeQ12,
}

#[derive(Debug, clap::Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub input: PathBuf,
    /// `uniform:n`, `chebyshev:n` or `file:path`; must match the input's
    /// breakpoints. Defaults to them.
    #[arg(long)]
    pub partition: Option<String>,
    /// `auto`, `auto:δ` or `file:path`.
    #[arg(long, default_value = "auto")]
    pub remesh: String,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub pipeline: PipelineArg,
    /// Exponents measured in the report, e.g. `1,2,inf`.
    #[arg(long, value_delimiter = ',', default_value = "inf")]
    pub p: Vec<Exponent>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_REFINEMENTS)]
    pub max_refinements: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub q: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, clap::Args)]
pub struct ModulusArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value = "inf")]
    pub p: Exponent,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// `lo,hi`; the input's domain by default.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub interval: Option<Vec<f64>>,
    /// Ditzian–Totik modulus on `[-1, 1]` instead of the ordinary one.
    #[arg(long)]
    pub ditzian_totik: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV table; the JSON report goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct DemoArgs {
    #[arg(long, default_value = "demo")]
    pub dir: PathBuf,
}

/// Certificate printed by `check`.
#[derive(Debug, Serialize)]
pub struct CheckOutput {
    pub q: usize,
    pub holds: bool,
    pub witness: Option<f64>,
    pub value: Option<f64>,
    pub indeterminate_pieces: usize,
    pub smoothness_class: i64,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    message: String,
    error: &'a Error,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        return report_error(&e);
    }
    match dispatch(&cfg) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> i32 {
    let diag = Diagnostic {
        message: e.to_string(),
        error: e,
    };
    match serde_json::to_string(&diag) {
        Ok(text) => eprintln!("{text}"),
        Err(_) => eprintln!("{e}"),
    }
    if e.is_math_failure() {
        2
    } else {
        1
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one parsed command; `Ok` carries the exit code.
pub fn dispatch(cfg: &CliConfig) -> Result<i32> {
    match &cfg.command {
        Command::Smooth(a) => smooth(a, cfg.verbose).map(|_| 0),
        Command::Check(a) => check(a),
        Command::Modulus(a) => modulus_cmd(a).map(|_| 0),
        Command::Rates(a) => rates(a, cfg.verbose).map(|_| 0),
        Command::Demo(a) => demo(a, cfg.verbose).map(|_| 0),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Io {
            message: format!("{}: no such file", path.display()),
        });
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::Io {
            message: format!("{}: directory does not exist", dir.display()),
        }),
        _ => Ok(()),
    }
}

/// `uniform:n`, `chebyshev:n` or `file:path` on `domain`.
pub fn parse_partition(spec: &str, domain: Interval) -> Result<Partition> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| Error::invalid(format!("bad partition {spec:?}")))?;
    let count = || arg.parse::<usize>().map_err(|_| Error::invalid(format!("bad interval count in {spec:?}")));
    match kind {
        "uniform" => Partition::uniform(count()?, domain),
        "chebyshev" => Partition::chebyshev(count()?, domain),
        "file" => load_partition(Path::new(arg)),
        _ => Err(Error::invalid(format!("unknown partition kind {kind:?}"))),
    }
}

fn same_breakpoints(a: &Partition, b: &Partition) -> bool {
    let tol = 1e-12 * a.domain().len();
    a.n() == b.n() && a.breakpoints().iter().zip(b.breakpoints()).all(|(x, y)| (x - y).abs() <= tol)
}

fn smooth(a: &SmoothArgs, verbose: bool) -> Result<()> {
    require_file(&a.input)?;
    require_parent(&a.out)?;
    if let Some(r) = &a.report {
        require_parent(r)?;
    }
    GlueConfig::new(a.q, a.r, a.mode.into())?;
    for p in &a.p {
        p.check()?;
    }
    let s = load_ppf(&a.input)?;
    if let Some(spec) = &a.partition {
        if !same_breakpoints(&parse_partition(spec, s.domain())?, s.partition()) {
            return Err(Error::InvalidPartition {
                reason: "--partition does not match the input's breakpoints".into(),
            });
        }
    }
    let remesh = match a.remesh.split_once(':') {
        None if a.remesh == "auto" => RemeshChoice::Auto(None),
        Some(("auto", d)) => RemeshChoice::Auto(Some(d.parse().map_err(|_| Error::invalid(format!("bad remesh δ {d:?}")))?)),
        Some(("file", path)) => RemeshChoice::Given(load_partition(Path::new(path))?),
        _ => return Err(Error::invalid(format!("bad --remesh {:?}", a.remesh))),
    };
    let opts = SmoothOptions {
        mode: a.mode.into(),
        p_list: a.p.clone(),
        resolution: a.resolution,
        tol: DEFAULT_TOL,
        max_refinements: a.max_refinements,
    };
    if verbose {
        eprintln!("smoothing {} pieces", s.n());
    }
    let SmoothOutcome { output: out, report, pipeline } = smooth_ppf(&s, a.q, a.r, a.pipeline.into(), &remesh, &opts)?;
    save_json(&a.out, &out)?;
    if let Some(path) = &a.report {
        save_json(path, &report)?;
    }
    if verbose {
        eprintln!("{pipeline:?}: wrote {} pieces, smoothness C^{}", out.n(), report.smoothness_achieved);
    }
    Ok(())
}

fn check(a: &CheckArgs) -> Result<i32> {
    require_file(&a.input)?;
    let s = load_ppf(&a.input)?;
    let v = s.shape_verdict(&ShapeSpec::with_tol(a.q, a.tol)?)?;
    let out = CheckOutput {
        q: a.q,
        holds: v.holds,
        witness: v.witness,
        value: v.value,
        indeterminate_pieces: v.indeterminate_pieces,
        smoothness_class: s.smoothness_class(a.tol),
    };
    print!("{}", to_json(&out)?);
    if v.holds {
        Ok(0)
    } else {
        Err(Error::NotInShapeClass {
            q: a.q,
            witness: v.witness.unwrap_or(f64::NAN),
            value: v.value.unwrap_or(f64::NAN),
        })
    }
}

fn modulus_cmd(a: &ModulusArgs) -> Result<()> {
    require_file(&a.input)?;
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    let s = load_ppf(&a.input)?;
    let est = if a.ditzian_totik {
        dt_modulus(&s, a.k, a.t, a.p, a.resolution)?
    } else {
        let j = match &a.interval {
            Some(v) if v[1] > v[0] => Interval::new(v[0], v[1]),
            Some(_) => return Err(Error::invalid("--interval needs lo < hi")),
            None => s.domain(),
        };
        modulus(&s, a.k, a.t, j, a.p, a.resolution)?
    };
    match &a.out {
        Some(path) => save_json(path, &est),
        None => {
            print!("{}", to_json(&est)?);
            Ok(())
        }
    }
}

fn rates(a: &RatesArgs, verbose: bool) -> Result<()> {
    require_file(&a.config)?;
    require_parent(&a.out)?;
    let cfg: RateStudyConfig = load_json(&a.config)?;
    cfg.validate()?;
    let report = run_rate_study(&cfg)?;
    report.write(&a.out)?;
    if verbose {
        eprintln!("fitted order {}", report.fitted_order);
    }
    Ok(())
}

/// The convex hat `{0 on [-1, 0], x on [0, 1]}`.
pub fn convex_hat() -> PiecewisePoly {
    PiecewisePoly::new(
        Partition::new(vec![-1.0, 0.0, 1.0]).expect("valid breakpoints"),
        vec![Polynomial::constant(0.0), Polynomial::identity()],
    )
    .expect("two pieces")
}

fn demo(a: &DemoArgs, verbose: bool) -> Result<()> {
    std::fs::create_dir_all(&a.dir)?;
    let hat = convex_hat();
    let c1 = convex_c1_smooth(&hat, hat.partition())?;
    let (q, r) = (2, 1);
    let zt = Partition::uniform(256, hat.domain())?;
    let opts = SmoothOptions {
        p_list: vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity],
        ..Default::default()
    };
    let (smooth, report) = smooth_shape_q12(&hat, q, r, hat.partition(), &zt, &opts)?;
    save_json(&a.dir.join("hat.json"), &hat)?;
    save_json(&a.dir.join("hat_c1.json"), &c1)?;
    save_json(&a.dir.join("hat_smooth.json"), &smooth)?;
    save_json(&a.dir.join("hat_report.json"), &report)?;
    if verbose {
        eprintln!("wrote the demo to {}", a.dir.display());
    }
    Ok(())
}
