//! The `gradperm` command-line driver.
//!
//! ```text
//! gradperm test data.csv --outcome y --feature x1 --feature x2 --test both --out results.json
//! gradperm simulate --kind nonlin5 --scale desk --out runs/nonlin5
//! gradperm rerun runs/nonlin5/manifest.json --out runs/nonlin5-again
//! ```
//!
//! Every written output gets a manifest (the parsed invocation, input paths,
//! seed, tool version, timestamps). `rerun` replays a manifest and reproduces
//! the outputs byte for byte, whatever the worker count.
//!
//! Exit codes: 0 success, 2 invalid input or configuration (including
//! unparseable flags), 3 training divergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{NetworkConfig, OutputActivation};
use crate::parallel;
use crate::permtest::{self, PValueRule, TestConfig, TestResult, Verdict};
use crate::simgen::{
    self, Correlation, CorrelationPreset, Hypothesis, NoiseScale, Scale, SimKind, SimSetting, StudyPlan,
    StudyReport, StudyTest,
};
use crate::spline::Smoothing;

/// Version of every JSON and CSV layout written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gradperm", version, about = "Permutation tests for feature effects in neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the association and/or nonlinearity test on a CSV file.
    Test(TestArgs),
    /// Run a simulation study (rejection rates over simulated datasets).
    Simulate(SimulateArgs),
    /// Replay the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TestChoice {
    Assoc,
    Nonlin,
    /// Association first, nonlinearity when associated.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputChoice {
    /// Sigmoid for 0/1 outcomes, identity otherwise.
    Auto,
    Identity,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct TestArgs {
    /// CSV file: comma separated, header row, no missing values.
    pub input: PathBuf,
    /// Outcome column; every other column is a feature.
    #[arg(long)]
    pub outcome: String,
    /// Feature column to test (repeatable).
    #[arg(long = "feature", required = true)]
    pub features: Vec<String>,
    #[arg(long, value_enum, default_value_t = TestChoice::Both)]
    pub test: TestChoice,
    /// Number of permutation replicates B.
    #[arg(long, default_value_t = 500)]
    pub permutations: usize,
    /// Hidden layer widths, e.g. `20` or `20,10`.
    #[arg(long, value_delimiter = ',', default_values_t = NetworkConfig::default().hidden_sizes)]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = NetworkConfig::default().epochs)]
    pub epochs: usize,
    /// Initial learning rate.
    #[arg(long, default_value_t = NetworkConfig::default().initial_learning_rate)]
    pub lr: f64,
    /// Fraction of the learning rate removed after each epoch.
    #[arg(long, default_value_t = NetworkConfig::default().lr_decay_per_epoch)]
    pub decay: f64,
    #[arg(long, default_value_t = NetworkConfig::default().l2_lambda)]
    pub l2: f64,
    #[arg(long, default_value_t = NetworkConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = OutputChoice::Auto)]
    pub output_activation: OutputChoice,
    /// Spline dimension for the nonlinearity statistic.
    #[arg(long, default_value_t = 10)]
    pub q: usize,
    /// Fixed spline penalty; chosen by GCV when absent.
    #[arg(long)]
    pub smoothing_lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Z-score every feature before training.
    #[arg(long)]
    pub standardize: bool,
    /// Significance level of the two-step protocol.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = PValueRule::Proportion)]
    pub p_value_rule: PValueRule,
    /// Output file (stdout when absent). A manifest is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (default: all logical cores).
    #[arg(long, env = "GRADPERM_WORKERS")]
    #[serde(skip)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SimKind,
    /// Sizes preset; the flags below override single values.
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    /// Test applied to each dataset (default: nonlin for nonlin5, assoc otherwise).
    #[arg(long, value_enum)]
    pub test: Option<StudyTest>,
    /// 1-based feature to test (repeatable; default: all five for the
    /// nonlinearity study, the setting's designated feature otherwise).
    #[arg(long = "feature")]
    pub features: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Hypothesis::Null)]
    pub hypothesis: Hypothesis,
    /// Coefficient mean under the alternative.
    #[arg(long)]
    pub m: Option<f64>,
    /// Correlation structure for the correlated setting (low/high are
    /// synthetic stand-ins).
    #[arg(long, value_enum, default_value_t = CorrelationPreset::Identity)]
    pub correlation: CorrelationPreset,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sims: Option<usize>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Noise scale of the generator (its default when absent).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Whether the generator noise parameter is a standard deviation or a variance.
    #[arg(long, value_enum, default_value_t = NoiseScale::StdDev)]
    pub noise_scale: NoiseScale,
    /// Replace the fixed coefficient of the nonlinearity/correlated settings.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created when missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long, env = "GRADPERM_WORKERS")]
    #[serde(skip)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier `test` or `simulate` run.
    pub manifest: PathBuf,
    /// Where to write the reproduced outputs (file for `test`, directory
    /// for `simulate`).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
    #[arg(long, env = "GRADPERM_WORKERS")]
    pub workers: Option<usize>,
}

/// The replayable part of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "lowercase")]
pub enum Invocation {
    Test(TestArgs),
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub invocation: Invocation,
    pub input_paths: Vec<PathBuf>,
    pub master_seed: u64,
    /// Fully resolved configuration the run used.
    pub config: serde_json::Value,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub wall_time_secs: f64,
}

/// One tested feature in the `test` JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureOutcome {
    pub feature: String,
    /// Set only for `--test both`.
    pub verdict: Option<Verdict>,
    pub association: Option<TestResult>,
    pub nonlinearity: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutput {
    pub schema_version: u32,
    pub outcome: String,
    pub n: usize,
    pub standardized: bool,
    pub results: Vec<FeatureOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutput {
    pub schema_version: u32,
    pub reports: Vec<StudyReport>,
}

/// One row of the `test` CSV output.
#[derive(Debug, Serialize)]
struct TestRow<'a> {
    schema_version: u32,
    feature: &'a str,
    test: &'a str,
    t_observed: f64,
    p_value: f64,
    permutations: usize,
    failed_replicates: usize,
    verdict: &'a str,
}

/// One row of the per-simulation CSV.
#[derive(Debug, Serialize)]
struct SimRow<'a> {
    schema_version: u32,
    kind: SimKind,
    hypothesis: Hypothesis,
    m: f64,
    n: usize,
    test: StudyTest,
    feature: usize,
    sim: usize,
    data_seed: u64,
    p_value: Option<f64>,
    rejected: Option<bool>,
    error: Option<&'a str>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_divergence() {
        EXIT_DIVERGENCE
    } else {
        EXIT_INVALID
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Test(a) => cmd_test(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Rerun(a) => cmd_rerun(&a),
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Manifest path for a single output file: `out.json` -> `out.manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn output_activation(choice: OutputChoice, data: &Dataset) -> OutputActivation {
    match choice {
        OutputChoice::Identity => OutputActivation::Identity,
        OutputChoice::Sigmoid => OutputActivation::Sigmoid,
        OutputChoice::Auto if data.has_binary_outcome() => OutputActivation::Sigmoid,
        OutputChoice::Auto => OutputActivation::Identity,
    }
}

/// Test configuration described by the flags (`data` decides the output
/// activation under `--output-activation auto`).
pub fn test_config(args: &TestArgs, data: &Dataset) -> TestConfig {
    let network = NetworkConfig {
        hidden_sizes: args.hidden.clone(),
        output_activation: output_activation(args.output_activation, data),
        epochs: args.epochs,
        initial_learning_rate: args.lr,
        lr_decay_per_epoch: args.decay,
        l2_lambda: args.l2,
        batch_size: args.batch_size,
        ..NetworkConfig::default()
    };
    let smoothing = args.smoothing_lambda.map_or(Smoothing::Gcv, Smoothing::Fixed);
    TestConfig {
        permutations: args.permutations,
        network,
        q: args.q,
        smoothing,
        master_seed: args.seed,
        workers: None,
        p_value_rule: args.p_value_rule,
        level: args.level,
        ..TestConfig::default()
    }
}

fn load_csv(path: &Path, outcome: &str) -> Result<Dataset> {
    let file = fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    Dataset::from_csv_reader(std::io::BufReader::new(file), outcome)
}

/// Runs the requested tests; the network fitted to the observed data is
/// shared by every tested feature.
pub fn run_tests(args: &TestArgs) -> Result<(TestOutput, TestConfig)> {
    let mut data = load_csv(&args.input, &args.outcome)?;
    if args.standardize {
        data = data.standardized();
    }
    let cfg = test_config(args, &data);
    cfg.validate()?;
    let indices = args
        .features
        .iter()
        .map(|name| {
            data.feature_index(name)
                .ok_or_else(|| Error::InvalidInput(format!("feature column '{name}' not found")))
        })
        .collect::<Result<Vec<_>>>()?;
    let results = parallel::with_workers(args.workers, || -> Result<Vec<FeatureOutcome>> {
        let observed = permtest::fit_observed(&data, &cfg)?;
        indices
            .iter()
            .zip(&args.features)
            .map(|(&j, name)| {
                let feature = name.clone();
                Ok(match args.test {
                    TestChoice::Assoc => FeatureOutcome {
                        feature,
                        verdict: None,
                        association: Some(permtest::association_test_with_observed(&data, j, &cfg, &observed)?),
                        nonlinearity: None,
                    },
                    TestChoice::Nonlin => FeatureOutcome {
                        feature,
                        verdict: None,
                        association: None,
                        nonlinearity: Some(permtest::nonlinearity_test_with_observed(
                            &data, j, &cfg, &observed,
                        )?),
                    },
                    TestChoice::Both => {
                        let c = permtest::combined_protocol_with_observed(&data, j, &cfg, &observed)?;
                        FeatureOutcome {
                            feature,
                            verdict: Some(c.verdict),
                            association: Some(c.association),
                            nonlinearity: c.nonlinearity,
                        }
                    }
                })
            })
            .collect()
    })??;
    let output = TestOutput {
        schema_version: SCHEMA_VERSION,
        outcome: args.outcome.clone(),
        n: data.n_rows(),
        standardized: args.standardize,
        results,
    };
    Ok((output, cfg))
}

fn verdict_name(v: Option<Verdict>) -> &'static str {
    match v {
        None => "",
        Some(Verdict::None) => "none",
        Some(Verdict::Linear) => "linear",
        Some(Verdict::Nonlinear) => "nonlinear",
    }
}

/// Renders the `test` CSV: one row per feature and test that ran.
pub fn test_csv(output: &TestOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &output.results {
        for (name, res) in [("assoc", &r.association), ("nonlin", &r.nonlinearity)] {
            if let Some(res) = res {
                w.serialize(TestRow {
                    schema_version: SCHEMA_VERSION,
                    feature: &r.feature,
                    test: name,
                    t_observed: res.t_observed,
                    p_value: res.p_value,
                    permutations: res.permutations,
                    failed_replicates: res.diagnostics.failed_replicates,
                    verdict: verdict_name(r.verdict),
                })
                .map_err(|e| Error::Csv(e.to_string()))?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_test(output: &TestOutput, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(output)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => test_csv(output),
    }
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let started = now_ms();
    let clock = Instant::now();
    let (output, cfg) = run_tests(args)?;
    for r in &output.results {
        for res in [&r.association, &r.nonlinearity].into_iter().flatten() {
            for w in &res.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    let text = render_test(&output, args.format)?;
    let Some(out) = &args.out else {
        print!("{text}");
        return Ok(());
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, text)?;
    let mut recorded = args.clone();
    recorded.input = fs::canonicalize(&args.input).unwrap_or_else(|_| args.input.clone());
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input_paths: vec![recorded.input.clone()],
        invocation: Invocation::Test(recorded),
        master_seed: args.seed,
        config: serde_json::to_value(&cfg)?,
        outputs: vec![out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()],
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        wall_time_secs: clock.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path_for(out), &manifest)
}

/// Setting and plan described by the `simulate` flags.
pub fn study_from_args(args: &SimulateArgs) -> Result<(SimSetting, StudyPlan)> {
    let kind = args.kind;
    let n = args.n.unwrap_or_else(|| args.scale.n(kind));
    let mut setting = SimSetting::new(kind, n, args.seed);
    match (args.hypothesis, args.m) {
        (Hypothesis::Alternative, Some(m)) => setting = setting.alternative(m),
        (Hypothesis::Alternative, None) => {
            return Err(Error::InvalidConfig("--hypothesis alternative needs --m".into()));
        }
        (Hypothesis::Null, Some(_)) => {
            return Err(Error::InvalidConfig("--m only applies under --hypothesis alternative".into()));
        }
        (Hypothesis::Null, None) => {}
    }
    if args.correlation != CorrelationPreset::Identity {
        if kind != SimKind::Correlated {
            return Err(Error::InvalidConfig("--correlation only applies to --kind correlated".into()));
        }
        setting = setting.with_correlation(Correlation::preset(args.correlation, kind.n_features()));
    }
    if let Some(noise) = args.noise {
        setting.noise = noise;
    }
    setting.noise_scale = args.noise_scale;
    setting.beta_override = args.beta;
    setting.validate()?;

    let test = args.test.unwrap_or(if kind == SimKind::Nonlin5 { StudyTest::Nonlin } else { StudyTest::Assoc });
    let features = if !args.features.is_empty() {
        args.features
            .iter()
            .map(|&f| {
                if f == 0 || f > kind.n_features() {
                    Err(Error::InvalidConfig(format!(
                        "feature {f} is out of range 1..={} for this setting",
                        kind.n_features()
                    )))
                } else {
                    Ok(f - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?
    } else if kind == SimKind::Nonlin5 && test == StudyTest::Nonlin {
        (0..5).collect()
    } else {
        vec![kind.default_feature()]
    };

    let mut network = args.scale.network(kind);
    if let Some(h) = &args.hidden {
        network.hidden_sizes = h.clone();
    }
    if let Some(e) = args.epochs {
        network.epochs = e;
    }
    if let Some(lr) = args.lr {
        network.initial_learning_rate = lr;
    }
    if let Some(l2) = args.l2 {
        network.l2_lambda = l2;
    }
    if let Some(bs) = args.batch_size {
        network.batch_size = bs;
    }
    let test_config = TestConfig {
        permutations: args.permutations.unwrap_or_else(|| args.scale.permutations()),
        network,
        ..TestConfig::default()
    };
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(Error::InvalidConfig("--alpha must lie in (0, 1]".into()));
    }
    let plan = StudyPlan {
        test,
        features,
        n_sims: args.sims.unwrap_or_else(|| args.scale.n_sims(kind)),
        alpha: args.alpha,
        test_config,
        workers: args.workers,
    };
    if plan.test != StudyTest::Lm {
        plan.test_config.validate()?;
    }
    Ok((setting, plan))
}

fn nonlin5_term(feature: usize) -> &'static str {
    ["Linear", "Quadratic", "Cubic", "Trigonometric", "Nonsmooth"][feature]
}

fn setting_label(setting: &SimSetting, preset: CorrelationPreset) -> String {
    let base = match setting.kind {
        SimKind::Nonlin5 => "Nonlin5".to_string(),
        SimKind::Linear => "Linear".to_string(),
        SimKind::Smooth => "Smooth".to_string(),
        SimKind::Nonsmooth => "Nonsmooth".to_string(),
        SimKind::Correlated => match preset {
            CorrelationPreset::Identity => "Independent".to_string(),
            CorrelationPreset::Low => "Low correlation (synthetic)".to_string(),
            CorrelationPreset::High => "High correlation (synthetic)".to_string(),
        },
    };
    match setting.hypothesis {
        Hypothesis::Null => base,
        Hypothesis::Alternative => format!("{base} (m = {:.2})", setting.beta_mean),
    }
}

/// Summary table in the published row layout: nonlinearity studies list
/// one row per variable (`X2 & Quadratic & 1.00`), association studies one
/// row per method (`NN-1 & 0.030`).
pub fn summary_table(reports: &[StudyReport], preset: CorrelationPreset, hidden_layers: usize) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else { return out };
    let setting = &first.setting;
    if first.test == StudyTest::Nonlin {
        out.push_str("Variable & Association & Pr(Reject $H_0$) \\\\\n");
        for r in reports {
            let term = if setting.kind == SimKind::Nonlin5 { nonlin5_term(r.feature) } else { "--" };
            let _ = writeln!(out, "$X_{}$ & {term} & {:.2} \\\\", r.feature + 1, r.rejection_rate);
        }
    } else {
        let _ = writeln!(out, " & {} \\\\", setting_label(setting, preset));
        let method = match first.test {
            StudyTest::Lm => "LM".to_string(),
            _ => format!("NN-{hidden_layers}"),
        };
        for r in reports {
            let label = if reports.len() > 1 || r.feature != setting.kind.default_feature() {
                format!("{method} ($X_{}$)", r.feature + 1)
            } else {
                method.clone()
            };
            let _ = writeln!(out, "{label} & {:.3} \\\\", r.rejection_rate);
        }
    }
    out
}

/// Renders the per-simulation CSV: one row per simulation and feature.
pub fn sims_csv(reports: &[StudyReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        let m = match r.setting.hypothesis {
            Hypothesis::Null => 0.0,
            Hypothesis::Alternative => r.setting.beta_mean,
        };
        for rec in &r.records {
            w.serialize(SimRow {
                schema_version: SCHEMA_VERSION,
                kind: r.setting.kind,
                hypothesis: r.setting.hypothesis,
                m,
                n: r.setting.n,
                test: r.test,
                feature: rec.feature + 1,
                sim: rec.sim,
                data_seed: rec.data_seed,
                p_value: rec.p_value,
                rejected: rec.p_value.map(|p| p <= r.alpha),
                error: rec.error.as_deref(),
            })
            .map_err(|e| Error::Csv(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const REPORT_FILE: &str = "report.json";
pub const SIMS_FILE: &str = "sims.csv";
pub const TABLE_FILE: &str = "table.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("{} exists and is not a directory", dir.display())));
        }
        if !force && fs::read_dir(dir)?.next().is_some() {
            return Err(Error::InvalidInput(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let (setting, plan) = study_from_args(args)?;
    prepare_out_dir(&args.out, args.force)?;
    let started = now_ms();
    let clock = Instant::now();
    let reports = simgen::run_study(&setting, &plan)?;
    let wall = clock.elapsed().as_secs_f64();
    for r in &reports {
        eprintln!(
            "feature X{}: rejection rate {:.3} over {} datasets ({} failed) in {:.1}s",
            r.feature + 1,
            r.rejection_rate,
            r.p_values.len(),
            r.failed_sims,
            r.wall_time_secs
        );
    }
    let output = StudyOutput { schema_version: SCHEMA_VERSION, reports };
    write_json(&args.out.join(REPORT_FILE), &output)?;
    fs::write(args.out.join(SIMS_FILE), sims_csv(&output.reports)?)?;
    let layers = plan.test_config.network.hidden_sizes.len();
    fs::write(args.out.join(TABLE_FILE), summary_table(&output.reports, args.correlation, layers))?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        invocation: Invocation::Simulate(args.clone()),
        input_paths: Vec::new(),
        master_seed: args.seed,
        config: serde_json::json!({ "setting": setting, "plan": plan }),
        outputs: [REPORT_FILE, SIMS_FILE, TABLE_FILE].map(String::from).to_vec(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        wall_time_secs: wall,
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("malformed manifest {}: {e}", path.display())))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "manifest schema version {} is not supported (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    Ok(manifest)
}

fn cmd_rerun(args: &RerunArgs) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    match manifest.invocation {
        Invocation::Test(mut t) => {
            if args.out.exists() && !args.force {
                return Err(Error::InvalidInput(format!(
                    "{} exists; pass --force to overwrite",
                    args.out.display()
                )));
            }
            t.out = Some(args.out.clone());
            t.workers = args.workers;
            cmd_test(&t)
        }
        Invocation::Simulate(mut s) => {
            s.out = args.out.clone();
            s.force = args.force;
            s.workers = args.workers;
            cmd_simulate(&s)
        }
    }
}
