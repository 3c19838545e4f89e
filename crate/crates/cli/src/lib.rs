//! Argument handling and subcommand dispatch for the `oarqa` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use oarqa_core::classifier::{classify, default_thresholds, load_thresholds_file, ThresholdMap};
use oarqa_core::metrics::evaluate_metrics;
use oarqa_core::pipeline::{batch_evaluate, write_report, BatchOptions, Manifest, ReportFormat};
use oarqa_core::synth::{write_corpus, SynthRequest};
use oarqa_core::volume::{read_nrrd, LabelPolicy};
use oarqa_core::{ClassifierError, MetricsError, PipelineError, SynthError, VolumeError};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_CANDIDATES: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

pub const CONFIG_ENV: &str = "OARQA_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "oarqa", version, about = "Flag likely segmentation failures from Dice and Hausdorff distance")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare one prediction against its ground truth.
    Evaluate(EvaluateArgs),
    /// Evaluate every row of a manifest CSV.
    Batch(BatchArgs),
    /// Generate phantom mask pairs from a request file.
    Synth(SynthArgs),
    /// Print or check threshold configuration.
    Thresholds(ThresholdsArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub organ: String,
    /// Threshold overrides (JSON). Defaults to $OARQA_CONFIG when set.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report file; without it only the summary is printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record per-case wall time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("action").required(true).args(["print", "validate"])))]
pub struct ThresholdsArgs {
    /// Emit the default thresholds in config format.
    #[arg(long)]
    pub print: bool,
    /// Check a config file and report its fingerprint.
    #[arg(long, value_name = "FILE")]
    pub validate: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

/// A message for stderr plus the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<ClassifierError> for Failure {
    fn from(e: ClassifierError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<VolumeError> for Failure {
    fn from(e: VolumeError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::ZeroParallelism => Failure::usage(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Volume(_) => Failure::data(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
        }
    };
    init_logging(cli.verbose);
    match run(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Evaluate(a) => evaluate(a, out),
        Command::Batch(a) => batch(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Thresholds(a) => thresholds(a, out),
    }
}

fn wr(e: std::io::Error) -> Failure {
    Failure::data(format!("writing output: {e}"))
}

fn config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn load_config(explicit: Option<&Path>) -> Result<ThresholdMap, Failure> {
    match config_path(explicit) {
        Some(p) => {
            log::info!("thresholds from {}", p.display());
            Ok(load_thresholds_file(&p)?)
        }
        None => Ok(default_thresholds()),
    }
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let map = load_config(a.config.as_deref())?;
    let t = map.resolve(&a.organ)?;
    let pred = read_nrrd(&a.pred, LabelPolicy::default())?;
    let gt = read_nrrd(&a.gt, LabelPolicy::default())?;
    let m = evaluate_metrics(&pred, &gt)?;
    let v = classify(&m, t)?;
    writeln!(out, "organ {}", t.organ).map_err(wr)?;
    writeln!(out, "dice {:.6}, hd {:.6}", m.dice, m.hd_mm).map_err(wr)?;
    writeln!(
        out,
        "hd pred->gt {:.6}, hd gt->pred {:.6}",
        m.hd_pred_to_gt_mm, m.hd_gt_to_pred_mm
    )
    .map_err(wr)?;
    for c in &m.components {
        writeln!(
            out,
            "component {}: {} voxels, {:.6} mm from ground truth",
            c.component_id, c.voxel_count, c.min_distance_to_gt_mm
        )
        .map_err(wr)?;
    }
    writeln!(out, "verdict {}", v.category).map_err(wr)?;
    writeln!(out, "{}", v.rationale).map_err(wr)?;
    Ok(if v.is_failure_candidate { EXIT_CANDIDATES } else { EXIT_CLEAN })
}

fn batch(a: &BatchArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let map = load_config(a.config.as_deref())?;
    let manifest = Manifest::from_path(&a.manifest)?;
    let mut opts = BatchOptions {
        timings: a.timings,
        ..Default::default()
    };
    if let Some(j) = a.jobs {
        opts.parallelism = j;
    }
    let report = batch_evaluate(&manifest, &map, &opts)?;
    if let Some(path) = &a.out {
        write_report(&report, a.format, path)?;
    }

    writeln!(out, "cases {}, errors {}, candidates {}", report.records.len(), report.error_count(), report.candidates.len())
        .map_err(wr)?;
    for (organ, s) in &report.summary {
        let counts: Vec<String> = s.counts.iter().map(|(c, n)| format!("{c} {n}")).collect();
        writeln!(out, "{organ}: {} cases; {}", s.cases, counts.join(", ")).map_err(wr)?;
    }
    for c in &report.candidates {
        writeln!(out, "candidate {} ({}): {} dice {:.6}, hd {:.6}", c.case_id, c.organ, c.category, c.dice, c.hd_mm)
            .map_err(wr)?;
    }
    for r in &report.records {
        if let Some(e) = &r.error {
            eprintln!("case {}: {}", r.case_id, e.message);
        }
    }

    Ok(if report.error_count() > 0 {
        EXIT_DATA
    } else if report.candidates.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_CANDIDATES
    })
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| Failure::data(format!("{}: {e}", a.spec.display())))?;
    let request: SynthRequest = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.spec.display())))?;
    let map = load_config(None)?;
    let cases = request.resolve(&map)?;
    let expected = write_corpus(&a.out_dir, &cases, &map)?;
    writeln!(
        out,
        "wrote {} pairs and manifest.csv to {}",
        expected.len(),
        a.out_dir.display()
    )
    .map_err(wr)?;
    Ok(EXIT_CLEAN)
}

fn thresholds(a: &ThresholdsArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if a.print {
        writeln!(out, "{}", default_thresholds().to_config_json()).map_err(wr)?;
        return Ok(EXIT_CLEAN);
    }
    let path = a.validate.as_deref().expect("clap enforces one action");
    let map = load_thresholds_file(path)?;
    writeln!(out, "ok: {} organs, fingerprint {}", map.len(), map.fingerprint()).map_err(wr)?;
    Ok(EXIT_CLEAN)
}
