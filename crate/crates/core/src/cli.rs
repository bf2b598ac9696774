//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or model error.
//! Diagnostics go to stderr; data goes to files or stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adtree::AdTreeConfig;
use crate::c45::C45Config;
use crate::corpus::{generate, separable_preset, CohortSpec};
use crate::data::{impute_means, parse_csv, parse_csv_unlabelled, serialize_csv, Dataset, DiscretizeRule, Schema};
use crate::eval::{cross_validate, EvalReport};
use crate::model::{Algorithm, Learner, ModelDocument};
use crate::plot::emit_roc_svg;
use crate::select::{screen, LogisticConfig};

#[derive(Debug, Parser)]
#[command(name = "dxtree", version, about = "Decision-tree diagnosis toolkit: synthesize, impute, screen, train, evaluate, predict")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort (CSV + schema sidecar).
    Synth(SynthArgs),
    /// Replace missing numeric feature cells with column means.
    Impute(ImputeArgs),
    /// Screen features with Wald and chi-squared tests.
    Select(SelectArgs),
    /// Fit a model on the whole dataset and write a model document.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation report.
    Evaluate(EvaluateArgs),
    /// Score new rows with a saved model.
    Predict(PredictArgs),
    /// Render the ROC of a saved report as SVG and/or CSV.
    Roc(RocArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Clinical,
    Separable,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "schema-out")]
    pub schema_out: PathBuf,
    #[arg(long, value_enum, default_value = "clinical")]
    pub preset: Preset,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "n-pos")]
    pub n_pos: Option<usize>,
    /// Class separation in standard deviations (separable preset).
    #[arg(long, default_value_t = 8.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-attribute imputation summary (attribute,imputed,mean).
    #[arg(long)]
    pub means: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long = "force-include", value_delimiter = ',')]
    pub force_include: Vec<String>,
    /// Plain-text tables; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Schema with unselected features marked ignored.
    #[arg(long = "schema-out")]
    pub schema_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    #[arg(long, default_value = "adtree")]
    pub algo: Algorithm,
    /// Boosting rounds (adtree).
    #[arg(long = "iterations", short = 'T', default_value_t = 10)]
    pub iterations: usize,
    /// Prediction-value smoothing (adtree).
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Pruning confidence factor (c45).
    #[arg(long, default_value_t = 0.25)]
    pub cf: f64,
    /// Minimum instances per leaf (c45).
    #[arg(long = "min-leaf", default_value_t = 2)]
    pub min_leaf: usize,
    /// Skip pruning (c45).
    #[arg(long)]
    pub unpruned: bool,
    /// Binning rule `attr:cutpoint:labelLow:labelHigh`; repeatable.
    #[arg(long = "discretize")]
    pub discretize: Vec<String>,
}

impl LearnerArgs {
    fn learner(&self) -> Result<Learner, UsageError> {
        match self.algo {
            Algorithm::AdTree => {
                if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
                    return Err(UsageError(format!("--epsilon must be positive, got {}", self.epsilon)));
                }
                Ok(Learner::AdTree(AdTreeConfig { iterations: self.iterations, epsilon: self.epsilon }))
            }
            Algorithm::C45 => {
                let cfg = C45Config {
                    min_leaf: self.min_leaf,
                    confidence: self.cf,
                    use_average_gain_gate: true,
                    prune: !self.unpruned,
                };
                cfg.validate().map_err(|e| UsageError(e.to_string()))?;
                Ok(Learner::C45(cfg))
            }
        }
    }

    fn rules(&self) -> Result<Vec<DiscretizeRule>, UsageError> {
        self.discretize
            .iter()
            .map(|r| DiscretizeRule::parse(r).map_err(|e| UsageError(e.to_string())))
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
    /// ROC points as `threshold,fp_rate,tp_rate`.
    #[arg(long)]
    pub roc: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// `row,label,score` CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load(input: &DataArgs) -> anyhow::Result<Dataset> {
    let schema = Schema::parse_sidecar(&read(&input.schema)?)
        .with_context(|| format!("in schema {}", input.schema.display()))?;
    let text = read(&input.data)?;
    parse_csv(text.as_bytes(), &schema).with_context(|| format!("in {}", input.data.display()))
}

fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write(p, contents),
        None => {
            std::io::stdout().write_all(contents.as_bytes()).context("writing stdout")?;
            Ok(())
        }
    }
}

fn require_complete(ds: &Dataset, origin: &Path) -> anyhow::Result<()> {
    ds.require_complete()
        .with_context(|| format!("{} has missing cells; run `impute` first", origin.display()))
}

fn apply_rules(ds: &Dataset, rules: &[DiscretizeRule], origin: &Path) -> anyhow::Result<Dataset> {
    let mut out = ds.clone();
    for rule in rules {
        out = rule
            .apply(&out)
            .with_context(|| format!("discretizing '{}' in {}", rule.attribute, origin.display()))?;
    }
    Ok(out)
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let ds = match args.preset {
        Preset::Clinical => {
            let mut spec = CohortSpec::clinical(args.seed);
            spec.n = args.n.unwrap_or(spec.n);
            spec.n_pos = args.n_pos.unwrap_or(spec.n_pos);
            generate(&spec)?
        }
        Preset::Separable => separable_preset(args.n.unwrap_or(65), args.n_pos.unwrap_or(53), args.gap, args.seed)?,
    };
    write(&args.out, &serialize_csv(&ds))?;
    write(&args.schema_out, &ds.schema().to_sidecar())
}

fn impute(args: &ImputeArgs) -> anyhow::Result<()> {
    let ds = load(&args.input)?;
    let (out, report) = impute_means(&ds).with_context(|| format!("imputing {}", args.input.data.display()))?;
    write(&args.out, &serialize_csv(&out))?;
    if let Some(p) = &args.means {
        write(p, &report.to_csv())?;
    }
    eprint!("{}", report);
    Ok(())
}

fn select(args: &SelectArgs) -> anyhow::Result<()> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(UsageError(format!("--alpha must be in (0, 1], got {}", args.alpha)).into());
    }
    let ds = load(&args.input)?;
    require_complete(&ds, &args.input.data)?;
    let (logit, chi2s, set) = screen(&ds, args.alpha, &args.force_include, &LogisticConfig::default())?;
    if let Some(fit) = &logit {
        if !fit.converged {
            eprintln!("warning: logistic fit did not converge after {} iterations", fit.iterations);
        }
    }
    emit(args.report.as_deref(), &set.to_text())?;
    if let Some(p) = &args.json {
        let doc = serde_json::json!({
            "format": "dxtree-selection",
            "version": 1,
            "logistic": logit,
            "chi_squared": chi2s,
            "selection": set,
        });
        write(p, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    if let Some(p) = &args.schema_out {
        write(p, &set.restrict(ds.schema())?.to_sidecar())?;
    }
    Ok(())
}

fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let learner = args.learner.learner()?;
    let rules = args.learner.rules()?;
    let raw = load(&args.input)?;
    require_complete(&raw, &args.input.data)?;
    let ds = apply_rules(&raw, &rules, &args.input.data)?;
    let model = learner
        .fit(&ds)
        .with_context(|| format!("training {} on {}", learner.algorithm(), args.input.data.display()))?;
    print!("{}", model.render());
    let doc = ModelDocument::new(raw.schema().clone(), rules, model);
    write(&args.out, &doc.to_json()?)
}

fn evaluate(args: &EvaluateArgs) -> anyhow::Result<()> {
    let learner = args.learner.learner()?;
    let rules = args.learner.rules()?;
    if args.k < 2 {
        return Err(UsageError(format!("--k must be at least 2, got {}", args.k)).into());
    }
    let raw = load(&args.input)?;
    require_complete(&raw, &args.input.data)?;
    let ds = apply_rules(&raw, &rules, &args.input.data)?;
    let report = cross_validate(&learner, &ds, args.k, args.seed)
        .with_context(|| format!("cross-validating on {}", args.input.data.display()))?;
    if !report.is_consistent() {
        bail!("report accuracy disagrees with its confusion matrix");
    }
    write(&args.report, &report.to_json()?)?;
    if let Some(p) = &args.roc {
        write(p, &report.roc.to_csv())?;
    }
    if let Some(p) = &args.svg {
        emit_roc_svg(&report.roc, p).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn predict(args: &PredictArgs) -> anyhow::Result<()> {
    let doc = ModelDocument::from_json(&read(&args.model)?)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let text = read(&args.data)?;
    let raw = parse_csv_unlabelled(text.as_bytes(), &doc.input_schema)
        .with_context(|| format!("in {}", args.data.display()))?;
    let ds = doc.prepare(&raw).with_context(|| format!("preparing {}", args.data.display()))?;
    let schema = doc.model.schema();
    if ds.schema().fingerprint() != schema.fingerprint() {
        bail!("{} does not match the model schema", args.data.display());
    }
    let mut out = String::from("row,label,score\n");
    for (row, inst) in ds.instances().iter().enumerate() {
        let (label, score) = doc
            .model
            .predict(inst)
            .with_context(|| format!("{}: data row {}", args.data.display(), row + 1))?;
        let name = &schema.target().categories[label.category()];
        out.push_str(&format!("{},{},{}\n", row + 1, name, score));
    }
    emit(args.out.as_deref(), &out)
}

fn roc(args: &RocArgs) -> anyhow::Result<()> {
    if args.svg.is_none() && args.csv.is_none() {
        return Err(UsageError("roc needs --svg and/or --csv".into()).into());
    }
    let report = EvalReport::from_json(&read(&args.report)?)
        .with_context(|| format!("loading report {}", args.report.display()))?;
    if let Some(p) = &args.svg {
        emit_roc_svg(&report.roc, p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.csv {
        write(p, &report.roc.to_csv())?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Impute(a) => impute(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Roc(a) => roc(a),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {:#}", e);
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}
