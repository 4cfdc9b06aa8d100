use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::RangedU64ValueParser;
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use tagcal::ingest::{apply_threshold, load_gold, load_scores, DEFAULT_THRESHOLD};
use tagcal::pipeline::{DEFAULT_BINS, DEFAULT_GROUPS};
use tagcal::{
    build_tfg, evaluate_split, fit_grouped, fit_shared, generate, load_dataset, load_tag_counts,
    render_report, run_experiment, Distortion, Error, EvaluationReport, ExperimentConfig,
    ExperimentSettings, Method, RecalibratorModel, ReportFormat, SynthConfig,
};

/// Calibration measurement and recalibration for taggers with sparse tagsets.
#[derive(Debug, Parser)]
#[command(name = "tagcal", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a recalibration model on a development split.
    Fit(FitArgs),
    /// Apply a fitted model to a scores file.
    Apply(ApplyArgs),
    /// Measure SMCE and per-group GMCE of raw or recalibrated scores.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset with a known reliability map.
    Synth(SynthArgs),
    /// Fit and evaluate every method at every group count.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(alias = "histogram")]
    Hist,
    Isotonic,
    #[value(alias = "scaling-binning")]
    Scaling,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Hist => Method::Histogram,
            MethodArg::Isotonic => Method::Isotonic,
            MethodArg::Scaling => Method::ScalingBinning,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    #[value(alias = "md")]
    Markdown,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

fn positive() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..)
}

fn threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&t) {
        Ok(t)
    } else {
        Err("must lie in [0, 1)".to_string())
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Training gold tag counts (`tag<TAB>count`).
    #[arg(long)]
    train_counts: PathBuf,
    /// Development scores (`instance_id<TAB>tag<TAB>score` or JSON lines).
    #[arg(long)]
    dev_scores: PathBuf,
    /// Development gold tags (`instance_id<TAB>gold_tag`).
    #[arg(long)]
    dev_gold: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Tag frequency groups; 1 fits a single shared model.
    #[arg(long, default_value_t = DEFAULT_GROUPS, value_parser = positive())]
    groups: usize,
    /// Adaptive bins per model (ignored by isotonic).
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = positive())]
    bins: usize,
    /// Scores below this are dropped.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = threshold)]
    threshold: f64,
    /// Model JSON output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ApplyArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Output TSV (`instance_id<TAB>tag<TAB>raw<TAB>calibrated`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Training gold tag counts, used to form the evaluation groups.
    #[arg(long)]
    train_counts: PathBuf,
    /// Recalibrate with this model before measuring; raw scores otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = positive())]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_GROUPS, value_parser = positive())]
    eval_groups: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = threshold)]
    threshold: f64,
    /// Report output path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of tag types.
    #[arg(long, default_value_t = 50, value_parser = positive())]
    tags: usize,
    /// Number of instances (gold records).
    #[arg(long, default_value_t = 10_000, value_parser = positive())]
    instances: usize,
    /// Zipf exponent of the gold tag distribution.
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    /// `identity`, `power:GAMMA` or `power:GAMMA@BAND,...` (bands zero-based, most frequent first).
    #[arg(long, default_value = "identity")]
    distortion: Distortion,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "TAGCAL_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    train_counts: PathBuf,
    #[arg(long)]
    dev_scores: PathBuf,
    #[arg(long)]
    dev_gold: PathBuf,
    #[arg(long)]
    test_scores: PathBuf,
    #[arg(long)]
    test_gold: PathBuf,
    /// Separate recalibration split; the dev split is used when absent.
    #[arg(long, requires = "recal_gold")]
    recal_scores: Option<PathBuf>,
    #[arg(long, requires = "recal_scores")]
    recal_gold: Option<PathBuf>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "scaling,isotonic,hist"
    )]
    methods: Vec<MethodArg>,
    /// Group counts to fit with.
    #[arg(long, value_delimiter = ',', default_value = "1,5", value_parser = positive())]
    groups: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_GROUPS, value_parser = positive())]
    eval_groups: usize,
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = positive())]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = threshold)]
    threshold: f64,
    /// Receives `report.{json,md,csv}` and `models/`.
    #[arg(long)]
    out_dir: PathBuf,
}

fn write(path: &Path, text: &str) -> tagcal::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read_model(path: &Path) -> tagcal::Result<RecalibratorModel> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    RecalibratorModel::from_json(&text)
        .map_err(|e| Error::Model(format!("{}: {e}", path.display())))
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn emit_warnings(report: &EvaluationReport) {
    for w in &report.warnings {
        warn(w);
    }
}

fn fit(args: FitArgs, matches: &ArgMatches) -> tagcal::Result<()> {
    let method = Method::from(args.method);
    if !method.uses_bins() && matches.value_source("bins") == Some(ValueSource::CommandLine) {
        warn("--bins has no effect with --method isotonic");
    }
    let counts = load_tag_counts(&args.train_counts)?;
    let dev = load_dataset(&args.dev_scores, &args.dev_gold, args.threshold)?;
    let model = if args.groups == 1 {
        fit_shared(&dev, method, args.bins)?
    } else {
        fit_grouped(&dev, &build_tfg(&counts, args.groups)?, method, args.bins)?
    };
    write(&args.out, &(model.to_json()? + "\n"))
}

fn apply(args: ApplyArgs) -> tagcal::Result<()> {
    let model = read_model(&args.model)?;
    let rows = load_scores(&args.scores)?;
    let gold = load_gold(&args.gold)?;
    let dataset = apply_threshold(&rows, &gold, model.threshold())?;
    let mut out = String::from("instance_id\ttag\traw\tcalibrated\n");
    for r in dataset.records() {
        let calibrated = model.apply(&r.tag, r.confidence);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.instance_id, r.tag, r.confidence, calibrated
        );
    }
    match &args.out {
        Some(path) => write(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn evaluate(args: EvaluateArgs) -> tagcal::Result<()> {
    let counts = load_tag_counts(&args.train_counts)?;
    let test = load_dataset(&args.scores, &args.gold, args.threshold)?;
    let model = args.model.as_deref().map(read_model).transpose()?;
    if let Some(m) = &model {
        if m.threshold() != args.threshold {
            warn(&format!(
                "model was fitted with threshold {} but scores are cut at {}",
                m.threshold(),
                args.threshold
            ));
        }
    }
    let settings = ExperimentSettings {
        threshold: args.threshold,
        bins: args.bins,
        eval_groups: args.eval_groups,
        ..Default::default()
    };
    let report = evaluate_split(&counts, &test, model.as_ref(), &settings)?;
    emit_warnings(&report);
    let text = render_report(&report, args.format.into())?;
    match &args.report {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(args: SynthArgs) -> tagcal::Result<()> {
    let config = SynthConfig::new(
        args.tags,
        args.instances,
        args.zipf,
        args.distortion,
        args.seed,
    );
    generate(&config)?.write_to(&args.out_dir)
}

fn run(args: RunArgs) -> tagcal::Result<()> {
    let config = ExperimentConfig {
        train_counts: args.train_counts,
        dev_scores: args.dev_scores,
        dev_gold: args.dev_gold,
        test_scores: args.test_scores,
        test_gold: args.test_gold,
        recal: args.recal_scores.zip(args.recal_gold),
        settings: ExperimentSettings {
            threshold: args.threshold,
            bins: args.bins,
            fit_groups: args.groups,
            eval_groups: args.eval_groups,
            methods: args.methods.into_iter().map(Method::from).collect(),
        },
    };
    let output = run_experiment(&config)?;
    let report = &output.report;
    emit_warnings(report);
    for f in &report.failures {
        let g = f.groups.map_or("-".to_string(), |g| g.to_string());
        warn(&format!("{} (G = {g}) failed: {}", f.method, f.error));
    }
    let dir = &args.out_dir;
    for (format, name) in [
        (ReportFormat::Json, "report.json"),
        (ReportFormat::Markdown, "report.md"),
        (ReportFormat::Csv, "report.csv"),
    ] {
        write(&dir.join(name), &render_report(report, format)?)?;
    }
    for fitted in &output.models {
        let name = format!("{}-G{}.json", fitted.method.name(), fitted.groups);
        write(
            &dir.join("models").join(name),
            &(fitted.model.to_json()? + "\n"),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Fit(args) => fit(
            args,
            matches.subcommand_matches("fit").expect("fit matches"),
        ),
        Command::Apply(args) => apply(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Synth(args) => synth(args),
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
