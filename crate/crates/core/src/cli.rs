//! The `mcse` command-line interface.
//!
//! Exit codes: 0 success (or "terminate" for `stopcheck`), 2 unreadable or
//! malformed input, 3 invalid usage, 4 numerical failure, 10 "continue"
//! for `stopcheck`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::batch::{lag1_autocorrelation, BatchRule, LugsailConfig};
use crate::chain::{mean_vector, SampleMatrix};
use crate::diagnostics::{self, StoppingConfig, StoppingDecision};
use crate::error::Error;
use crate::estimate::{EstimatorSpec, LrvEstimate, LugsailChoice, Method, MethodInfo};
use crate::experiments::{
    self, ar1_estimator_grid, timing_estimator_grid, Ar1Start, ChainGenerator, LogisticConfig, MixtureConfig,
    StudyConfig,
};
use crate::quantiles::{self, TargetSpec, ZStarOptions};
use crate::spectral::LagWindow;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_CONTINUE: i32 = 10;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Usage(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, Error::InvalidSample(_)) {
            CliError::Input(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mcse", version, about = "Monte Carlo standard errors, ESS and stopping rules for MCMC output")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the asymptotic covariance Σ and per-component standard errors.
    Estimate(EstimateArgs),
    /// Multivariate effective sample size.
    Ess(EstimateArgs),
    /// Minimum effective sample size for a given precision.
    Miness(MinessArgs),
    /// Fixed-volume stopping rule: exit 0 to terminate, 10 to continue.
    Stopcheck(StopcheckArgs),
    /// Simultaneous confidence intervals for means and quantiles.
    Simci(SimciArgs),
    /// Synthetic-chain experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Csv,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Chain file, one iteration per row (comma or tab separated).
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Columns to use, by zero-based index or header name (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bm,
    Obm,
    Sv,
    Initseq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Bartlett,
    FlatTop,
    TukeyHanning,
    Qs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LugsailArg {
    None,
    Zero,
    Adaptive,
    Over,
    Custom,
    /// Choose from the lag-1 autocorrelation.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    CubeRoot,
    SquareRoot,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Bm)]
    pub method: MethodArg,
    /// Lag window (spectral variance only).
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    #[arg(long, value_enum, default_value_t = LugsailArg::None)]
    pub lugsail: LugsailArg,
    /// Lugsail scale (custom only).
    #[arg(long)]
    pub r: Option<f64>,
    /// Lugsail weight (custom only).
    #[arg(long)]
    pub c: Option<f64>,
    /// Batch size or truncation point; defaults to the batch-size rule.
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long, value_enum, default_value_t = RuleArg::CubeRoot)]
    pub rule: RuleArg,
    /// Use the adjusted initial-sequence estimator (initseq only).
    #[arg(long)]
    pub adjusted: bool,
}

impl EstimatorArgs {
    pub fn to_spec(&self) -> CliResult<EstimatorSpec> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.window.is_some() && self.method != MethodArg::Sv {
            return usage("--window only applies to --method sv");
        }
        if (self.r.is_some() || self.c.is_some()) && self.lugsail != LugsailArg::Custom {
            return usage("--r and --c only apply to --lugsail custom");
        }
        if self.adjusted && self.method != MethodArg::Initseq {
            return usage("--adjusted only applies to --method initseq");
        }
        if self.method == MethodArg::Initseq && (self.lugsail != LugsailArg::None || self.b.is_some()) {
            return usage("--lugsail and --b do not apply to --method initseq");
        }
        let method = match self.method {
            MethodArg::Bm => Method::BatchMeans,
            MethodArg::Obm => Method::OverlappingBatchMeans,
            MethodArg::Sv => Method::Spectral(match self.window.unwrap_or(WindowArg::Bartlett) {
                WindowArg::Bartlett => LagWindow::Bartlett,
                WindowArg::FlatTop => LagWindow::BartlettFlatTop,
                WindowArg::TukeyHanning => LagWindow::TukeyHanning,
                WindowArg::Qs => LagWindow::QuadraticSpectral,
            }),
            MethodArg::Initseq => Method::InitialSequence { adjusted: self.adjusted },
        };
        let mut spec = EstimatorSpec::new(method).with_rule(match self.rule {
            RuleArg::CubeRoot => BatchRule::CubeRoot,
            RuleArg::SquareRoot => BatchRule::SquareRoot,
        });
        spec.lugsail = match self.lugsail {
            LugsailArg::None => LugsailChoice::none(),
            LugsailArg::Zero => LugsailChoice::Fixed(LugsailConfig::zero()),
            LugsailArg::Adaptive => LugsailChoice::Fixed(LugsailConfig::adaptive()),
            LugsailArg::Over => LugsailChoice::Fixed(LugsailConfig::over()),
            LugsailArg::Auto => LugsailChoice::Auto,
            LugsailArg::Custom => match (self.r, self.c) {
                (Some(r), Some(c)) => LugsailChoice::Fixed(LugsailConfig::custom(r, c)?),
                _ => return usage("--lugsail custom needs both --r and --c"),
            },
        };
        if let Some(b) = self.b {
            spec = spec.with_batch_size(b);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct MinessArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct StopcheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Minimum simulation size; defaults to the minimum ESS.
    #[arg(long)]
    pub nstar: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct SimciArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Targets such as "mean:0,quant:0:0.1,quant:0:0.9". Defaults to the
    /// means of all columns. Without estimator flags Ω is estimated by
    /// zero-lugsail batch means.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Allowed error of the joint coverage at z*.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    /// Coverage of 95% intervals on AR(1) chains.
    Ar1Coverage,
    /// Mean estimated ESS/n on AR(1) chains.
    Ar1Ess,
    /// Random-walk Metropolis on a three-component normal mixture.
    Mixture,
    /// Random-walk Metropolis on a synthetic logistic regression posterior.
    Logistic,
    /// Median estimator timings on a logistic regression chain.
    Bench,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// AR(1) coefficient.
    #[arg(long, default_value_t = 0.92)]
    pub phi: f64,
    /// Chain length(s); comma separated for the AR(1) studies.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Replications (AR(1) studies) or timing repetitions (bench).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Draw the AR(1) start from the stationary distribution instead of 0.
    #[arg(long)]
    pub stationary_start: bool,
    /// Logistic regression: number of synthetic observations.
    #[arg(long, default_value_t = 1000)]
    pub n_obs: usize,
    /// Logistic regression: number of coefficients.
    #[arg(long, default_value_t = 19)]
    pub p_coef: usize,
    /// Mixture: proposal standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub proposal_sd: f64,
    /// Also write the generated chain (mixture, logistic) as CSV.
    #[arg(long)]
    pub chain_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

/// A delimited chain file.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFile {
    pub path: PathBuf,
    pub delimiter: u8,
    pub header: Option<Vec<String>>,
    pub samples: SampleMatrix,
}

impl ChainFile {
    /// Reads a rectangular numeric table. The first row is a header if any
    /// of its fields is not a number.
    pub fn read(path: &Path, format: InputFormat, columns: Option<&[String]>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        let delimiter = match format {
            InputFormat::Csv => b',',
            InputFormat::Tsv => b'\t',
            InputFormat::Auto if first.contains('\t') => b'\t',
            InputFormat::Auto => b',',
        };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if rec.iter().all(str::is_empty) {
                continue;
            }
            records.push(rec);
        }
        let header = match records.first() {
            Some(r) if r.iter().any(|f| f.parse::<f64>().is_err()) => {
                Some(r.iter().map(str::to_string).collect::<Vec<_>>())
            }
            _ => None,
        };
        let body = &records[header.is_some() as usize..];
        let mut rows = Vec::with_capacity(body.len());
        for (i, rec) in body.iter().enumerate() {
            let line = i + 1 + header.is_some() as usize;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| CliError::Input(format!("{}: row {line}: '{f}' is not a number", path.display())))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(CliError::Input(format!("{}: need at least 2 data rows, found {}", path.display(), rows.len())));
        }
        let width = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(CliError::Input(format!("{}: row {} has {} fields, expected {width}", path.display(), i + 1, rows[i].len())));
        }
        let samples = SampleMatrix::from_rows(&rows).map_err(|e| CliError::Input(e.to_string()))?;
        let (samples, header) = match columns {
            None => (samples, header),
            Some(cols) => {
                let idx = cols
                    .iter()
                    .map(|c| resolve_column(c, header.as_deref(), width))
                    .collect::<CliResult<Vec<usize>>>()?;
                let names = header.map(|h| idx.iter().map(|&i| h[i].clone()).collect());
                (samples.select_columns(&idx)?, names)
            }
        };
        Ok(Self { path: path.to_path_buf(), delimiter, header, samples })
    }
}

fn resolve_column(c: &str, header: Option<&[String]>, width: usize) -> CliResult<usize> {
    let found = match c.parse::<usize>() {
        Ok(i) => Some(i),
        Err(_) => header.and_then(|h| h.iter().position(|name| name == c)),
    };
    match found {
        Some(i) if i < width => Ok(i),
        _ => Err(CliError::Usage(format!("unknown column '{c}'"))),
    }
}

/// Machine-readable result of `estimate`, `ess` and `stopcheck`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub n: usize,
    pub p: usize,
    pub columns: Option<Vec<String>>,
    pub method: MethodInfo,
    /// Σ_n row by row.
    pub sigma: Vec<Vec<f64>>,
    pub psd: bool,
    pub mean: Vec<f64>,
    pub mcse: Option<Vec<f64>>,
    pub ess: Option<f64>,
    pub ess_ratio: Option<f64>,
    pub min_ess: Option<f64>,
    pub decision: Option<StoppingDecision>,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.sigma[i][j])
    }

    fn new(command: &str, file: &ChainFile, est: &LrvEstimate) -> Self {
        let s = &file.samples;
        let mut warnings = Vec::new();
        let mcse = match diagnostics::mcse(est, s.n()) {
            Ok(v) => Some(v.iter().copied().collect()),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        };
        if !est.psd {
            warnings.push("sigma is not positive semidefinite".into());
        }
        Self {
            command: command.into(),
            n: s.n(),
            p: s.p(),
            columns: file.header.clone(),
            method: est.method.clone(),
            sigma: (0..est.dim()).map(|i| est.sigma.row(i).iter().copied().collect()).collect(),
            psd: est.psd,
            mean: mean_vector(s).iter().copied().collect(),
            mcse,
            ess: None,
            ess_ratio: None,
            min_ess: None,
            decision: None,
            warnings,
            wall_time_secs: 0.0,
        }
    }

    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "quantity,i,j,value")?;
        for (i, row) in self.sigma.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(w, "sigma,{i},{j},{v:?}")?;
            }
        }
        for (i, v) in self.mean.iter().enumerate() {
            writeln!(w, "mean,{i},,{v:?}")?;
        }
        if let Some(m) = &self.mcse {
            for (i, v) in m.iter().enumerate() {
                writeln!(w, "mcse,{i},,{v:?}")?;
            }
        }
        let scalars = [("ess", self.ess), ("ess_ratio", self.ess_ratio), ("min_ess", self.min_ess)];
        for (name, v) in scalars {
            if let Some(v) = v {
                writeln!(w, "{name},,,{v:?}")?;
            }
        }
        if let Some(d) = &self.decision {
            writeln!(w, "terminate,,,{}", d.terminate)?;
            writeln!(w, "lhs,,,{:?}", d.lhs)?;
            writeln!(w, "rhs,,,{:?}", d.rhs)?;
        }
        Ok(())
    }
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(w, "{text}")?;
    Ok(())
}

/// Writes `rows` as a CSV table with a header row.
fn write_table<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(Vec::new());
    for r in rows {
        out.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = out.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    w.write_all(&bytes)?;
    Ok(())
}

fn load(input: &InputArgs) -> CliResult<ChainFile> {
    ChainFile::read(&input.file, input.format, input.columns.as_deref())
}

fn cmd_estimate(args: &EstimateArgs, w: &mut dyn Write) -> CliResult<i32> {
    let spec = args.estimator.to_spec()?;
    let file = load(&args.input)?;
    let t0 = Instant::now();
    let est = spec.estimate(&file.samples)?;
    let mut report = RunReport::new("estimate", &file, &est);
    report.wall_time_secs = t0.elapsed().as_secs_f64();
    emit_report(&report, args.out, w)?;
    Ok(EXIT_OK)
}

fn emit_report(report: &RunReport, out: OutputFormat, w: &mut dyn Write) -> CliResult<()> {
    match out {
        OutputFormat::Json => write_json(w, report),
        OutputFormat::Csv => Ok(report.write_csv(w)?),
    }
}

fn cmd_ess(args: &EstimateArgs, w: &mut dyn Write) -> CliResult<i32> {
    let spec = args.estimator.to_spec()?;
    let file = load(&args.input)?;
    let t0 = Instant::now();
    let est = spec.estimate(&file.samples)?;
    let ess = diagnostics::ess(&file.samples, &est)?;
    let mut report = RunReport::new("ess", &file, &est);
    report.ess = Some(ess);
    report.ess_ratio = Some(ess / file.samples.n() as f64);
    report.wall_time_secs = t0.elapsed().as_secs_f64();
    emit_report(&report, args.out, w)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MinessReport {
    alpha: f64,
    epsilon: f64,
    p: usize,
    min_ess: u64,
    exact: f64,
}

fn cmd_miness(args: &MinessArgs, w: &mut dyn Write) -> CliResult<i32> {
    let exact = diagnostics::min_ess_exact(args.alpha, args.eps, args.p)?;
    let report = MinessReport {
        alpha: args.alpha,
        epsilon: args.eps,
        p: args.p,
        min_ess: diagnostics::min_ess(args.alpha, args.eps, args.p)?,
        exact,
    };
    match args.out {
        OutputFormat::Json => write_json(w, &report)?,
        OutputFormat::Csv => write_table(w, &[report])?,
    }
    Ok(EXIT_OK)
}

fn cmd_stopcheck(args: &StopcheckArgs, w: &mut dyn Write) -> CliResult<i32> {
    let spec = args.estimator.to_spec()?;
    let file = load(&args.input)?;
    let p = file.samples.p();
    let config = match args.nstar {
        Some(n_star) => StoppingConfig::new(args.alpha, args.eps, n_star)?,
        None => StoppingConfig::with_default_n_star(args.alpha, args.eps, p)?,
    };
    let t0 = Instant::now();
    let est = spec.estimate(&file.samples)?;
    let decision = diagnostics::fixed_volume_check(&file.samples, &est, &config)?;
    let mut report = RunReport::new("stopcheck", &file, &est);
    report.ess = Some(decision.ess);
    report.ess_ratio = Some(decision.ess / file.samples.n() as f64);
    report.min_ess = Some(decision.min_ess);
    report.decision = Some(decision);
    report.wall_time_secs = t0.elapsed().as_secs_f64();
    emit_report(&report, args.out, w)?;
    Ok(if decision.terminate { EXIT_OK } else { EXIT_CONTINUE })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimciReport {
    pub n: usize,
    pub alpha: f64,
    pub method: MethodInfo,
    pub z_star: f64,
    pub achieved_coverage: f64,
    pub targets: Vec<SimciTarget>,
    /// Ω row by row.
    pub omega: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimciTarget {
    pub target: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

fn estimator_flags_given(e: &EstimatorArgs) -> bool {
    e.method != MethodArg::Bm
        || e.window.is_some()
        || e.lugsail != LugsailArg::None
        || e.b.is_some()
        || e.rule != RuleArg::CubeRoot
        || e.adjusted
}

fn cmd_simci(args: &SimciArgs, w: &mut dyn Write) -> CliResult<i32> {
    let targets = match &args.targets {
        Some(t) => quantiles::parse_targets(t).map_err(|e| CliError::Usage(e.to_string()))?,
        None => Vec::new(),
    };
    let spec = if estimator_flags_given(&args.estimator) {
        args.estimator.to_spec()?
    } else {
        quantiles::default_omega_estimator()
    };
    let file = load(&args.input)?;
    let targets = if targets.is_empty() { (0..file.samples.p()).map(TargetSpec::mean).collect() } else { targets };
    let joint = quantiles::estimate_omega(&file.samples, &targets, &spec)?;
    let region = quantiles::solve_z_star(&joint, args.alpha, &ZStarOptions { tol: args.tol, seed: args.seed })?;
    let report = SimciReport {
        n: joint.n,
        alpha: args.alpha,
        method: joint.method.clone(),
        z_star: region.z_star,
        achieved_coverage: region.achieved,
        targets: targets
            .iter()
            .zip(region.intervals.iter())
            .zip(joint.nu_hat.iter())
            .map(|((t, &(lower, upper)), &estimate)| SimciTarget { target: t.to_string(), estimate, lower, upper })
            .collect(),
        omega: (0..joint.omega.nrows()).map(|i| joint.omega.row(i).iter().copied().collect()).collect(),
    };
    match args.out {
        OutputFormat::Json => write_json(w, &report)?,
        OutputFormat::Csv => write_table(w, &report.targets)?,
    }
    Ok(EXIT_OK)
}

fn write_chain_csv(path: &Path, s: &SampleMatrix) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(File::create(path)?);
    for i in 0..s.n() {
        out.write_record(s.row(i).iter().map(|v| format!("{v:?}")))
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Key quantities of a single synthetic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub experiment: String,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub lag1_autocorrelation: f64,
    pub mean: Vec<f64>,
    pub mcse: Vec<f64>,
    pub ess: f64,
    pub min_ess: u64,
    pub target_mean: Option<f64>,
    pub simultaneous: Option<SimciReport>,
}

fn summarize_chain(name: &str, run: &experiments::McmcRun, seed: u64, eps: f64) -> CliResult<ChainSummary> {
    let s = &run.samples;
    let spec = EstimatorSpec::batch_means().with_rule(BatchRule::SquareRoot).with_auto_lugsail();
    let est = spec.estimate(s)?;
    Ok(ChainSummary {
        experiment: name.into(),
        n: s.n(),
        p: s.p(),
        seed,
        acceptance_rate: run.acceptance_rate,
        lag1_autocorrelation: lag1_autocorrelation(s)?,
        mean: mean_vector(s).iter().copied().collect(),
        mcse: diagnostics::mcse(&est, s.n())?.iter().copied().collect(),
        ess: diagnostics::ess(s, &est)?,
        min_ess: diagnostics::min_ess(0.05, eps, s.p())?,
        target_mean: None,
        simultaneous: None,
    })
}

fn cmd_experiment(args: &ExperimentArgs, w: &mut dyn Write) -> CliResult<i32> {
    let single_n = |default: usize| -> CliResult<usize> {
        match args.n.as_deref() {
            None => Ok(default),
            Some([n]) => Ok(*n),
            Some(_) => Err(CliError::Usage("this experiment takes a single --n".into())),
        }
    };
    match args.name {
        ExperimentName::Ar1Coverage | ExperimentName::Ar1Ess => {
            let start = if args.stationary_start { Ar1Start::Stationary } else { Ar1Start::default() };
            if !(args.phi.abs() < 1.0) {
                return Err(CliError::Usage(format!("--phi {} must satisfy |phi| < 1", args.phi)));
            }
            let ns = args.n.clone().unwrap_or_else(|| vec![10_000, 50_000, 200_000]);
            let cfg = StudyConfig::new(
                ChainGenerator::Ar1 { phi: args.phi, start },
                ar1_estimator_grid(),
                ns,
                args.reps.unwrap_or(500),
                args.seed,
            );
            if args.name == ExperimentName::Ar1Coverage {
                let rows = experiments::coverage_study(&cfg)?;
                emit_rows(w, args.out, &rows)?;
            } else {
                let rows = experiments::ess_study(&cfg)?;
                emit_rows(w, args.out, &rows)?;
            }
        }
        ExperimentName::Mixture => {
            let mut cfg = MixtureConfig::new(single_n(50_000)?, args.seed);
            cfg.proposal_sd = args.proposal_sd;
            let run = experiments::mixture_mh_run(&cfg)?;
            if let Some(path) = &args.chain_out {
                write_chain_csv(path, &run.samples)?;
            }
            let mut summary = summarize_chain("mixture", &run, args.seed, 0.10)?;
            summary.target_mean = Some(cfg.target_mean());
            let targets: Vec<TargetSpec> =
                vec![TargetSpec::mean(0), TargetSpec::quantile(0, 0.1)?, TargetSpec::quantile(0, 0.9)?];
            let joint = quantiles::estimate_omega(&run.samples, &targets, &quantiles::default_omega_estimator())?;
            let region = quantiles::solve_z_star(&joint, 0.05, &ZStarOptions { tol: 1e-3, seed: args.seed })?;
            summary.simultaneous = Some(SimciReport {
                n: joint.n,
                alpha: 0.05,
                method: joint.method.clone(),
                z_star: region.z_star,
                achieved_coverage: region.achieved,
                targets: targets
                    .iter()
                    .zip(&region.intervals)
                    .zip(joint.nu_hat.iter())
                    .map(|((t, &(lower, upper)), &estimate)| SimciTarget {
                        target: t.to_string(),
                        estimate,
                        lower,
                        upper,
                    })
                    .collect(),
                omega: (0..joint.omega.nrows()).map(|i| joint.omega.row(i).iter().copied().collect()).collect(),
            });
            emit_summary(w, args.out, &summary)?;
        }
        ExperimentName::Logistic => {
            let cfg = LogisticConfig::new(args.n_obs, args.p_coef, single_n(20_000)?, args.seed);
            let run = experiments::logistic_mh_run(&cfg)?;
            if let Some(path) = &args.chain_out {
                write_chain_csv(path, &run.samples)?;
            }
            emit_summary(w, args.out, &summarize_chain("logistic", &run, args.seed, 0.05)?)?;
        }
        ExperimentName::Bench => {
            let cfg = LogisticConfig::new(args.n_obs, args.p_coef, single_n(200_000)?, args.seed);
            let s = experiments::logistic_mh_generate(cfg.n_obs, cfg.p_coef, cfg.n, cfg.seed)?;
            let rows = experiments::timing_bench(&s, &timing_estimator_grid(), args.reps.unwrap_or(5))?;
            emit_rows(w, args.out, &rows)?;
        }
    }
    Ok(EXIT_OK)
}

fn emit_rows<T: Serialize>(w: &mut dyn Write, out: OutputFormat, rows: &[T]) -> CliResult<()> {
    match out {
        OutputFormat::Json => write_json(w, &rows),
        OutputFormat::Csv => write_table(w, rows),
    }
}

fn emit_summary(w: &mut dyn Write, out: OutputFormat, s: &ChainSummary) -> CliResult<()> {
    match out {
        OutputFormat::Json => write_json(w, s),
        OutputFormat::Csv => {
            writeln!(w, "quantity,i,value")?;
            writeln!(w, "n,,{}", s.n)?;
            writeln!(w, "acceptance_rate,,{:?}", s.acceptance_rate)?;
            writeln!(w, "lag1_autocorrelation,,{:?}", s.lag1_autocorrelation)?;
            for (i, (m, e)) in s.mean.iter().zip(&s.mcse).enumerate() {
                writeln!(w, "mean,{i},{m:?}")?;
                writeln!(w, "mcse,{i},{e:?}")?;
            }
            writeln!(w, "ess,,{:?}", s.ess)?;
            writeln!(w, "min_ess,,{}", s.min_ess)?;
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Ess(a) => cmd_ess(a, out),
        Command::Miness(a) => cmd_miness(a, out),
        Command::Stopcheck(a) => cmd_stopcheck(a, out),
        Command::Simci(a) => cmd_simci(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Σ from a JSON run report.
pub fn sigma_from_report_json(text: &str) -> serde_json::Result<DMatrix<f64>> {
    let report: RunReport = serde_json::from_str(text)?;
    Ok(report.sigma_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("mcse").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn est_args(extra: &[&str]) -> CliResult<EstimatorSpec> {
        #[derive(Parser)]
        struct T {
            #[command(flatten)]
            e: EstimatorArgs,
        }
        let t = T::try_parse_from(std::iter::once("t").chain(extra.iter().copied())).unwrap();
        t.e.to_spec()
    }

    #[test]
    fn flag_combinations() {
        assert!(est_args(&[]).is_ok());
        assert!(est_args(&["--method", "sv", "--window", "qs", "--lugsail", "over"]).is_ok());
        assert!(est_args(&["--window", "qs"]).is_err());
        assert!(est_args(&["--r", "2"]).is_err());
        assert!(est_args(&["--lugsail", "custom", "--r", "2"]).is_err());
        assert!(est_args(&["--lugsail", "custom", "--r", "2", "--c", "0.5"]).is_ok());
        assert!(matches!(est_args(&["--lugsail", "custom", "--r", "0.5", "--c", "0.5"]), Err(CliError::Usage(_))));
        assert!(est_args(&["--method", "initseq", "--lugsail", "over"]).is_err());
        assert!(est_args(&["--adjusted"]).is_err());
        assert!(est_args(&["--method", "initseq", "--adjusted"]).is_ok());
    }

    #[test]
    fn miness_and_usage_codes() {
        let (code, out, _) = run_str(&["miness", "--alpha", "0.05", "--eps", "0.05", "--p", "10"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"min_ess\": 8831"), "{out}");
        assert_eq!(run_str(&["miness", "--alpha", "2"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn error_mapping() {
        assert_eq!(CliError::from(Error::NoPdTruncation { max_m: 3 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(Error::InvalidSample("x".into())).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::from(Error::InsufficientBatches { n: 4, b: 4 }).exit_code(), EXIT_USAGE);
    }

    #[test]
    fn report_sigma_round_trip() {
        let sigma = DMatrix::from_row_slice(2, 2, &[0.1 + 0.2, 1.0 / 3.0, 1.0 / 3.0, 2f64.sqrt()]);
        let est = LrvEstimate::new(sigma.clone(), MethodInfo::new(crate::estimate::Family::BatchMeans, 10));
        let file = ChainFile {
            path: PathBuf::from("x"),
            delimiter: b',',
            header: None,
            samples: SampleMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 3.0]]).unwrap(),
        };
        let report = RunReport::new("estimate", &file, &est);
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(sigma_from_report_json(&text).unwrap(), sigma);
    }
}
