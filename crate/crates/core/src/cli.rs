//! The `rulkit` command line: train, predict, evaluate, inspect, gen-data.
//!
//! Configuration precedence is flags over config file over built-in
//! defaults. Errors go to stderr with a nonzero exit code; data goes to
//! files or stdout only, and reruns with identical inputs produce
//! byte-identical outputs.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmapss::{
    apply_normalization, fit_normalization, parse_cmapss_file, parse_rul_file, select_sensors,
    CmapssError, Normalization, Trajectory, DEFAULT_SENSOR_IDS,
};
use crate::metrics::{compute_metrics, ErrorRecord, MetricsError, MetricsReport};
use crate::prognostics::{
    estimate_fleet, load_model, save_model, state_sequence, train_fleet, Aggregate,
    ForecastConfig, ModelDocument, Predictor, PrognosticsError, SkippedUnit, TrainOptions,
    TrainedSummary, MODEL_SCHEMA_VERSION,
};
use crate::qkrls::KernelParams;
use crate::synth::{write_dataset, SynthSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Data(#[from] CmapssError),
    #[error(transparent)]
    Prognostics(#[from] PrognosticsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
}

/// Resolved pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_u: f64,
    pub sensor_ids: Vec<usize>,
    pub j_select: usize,
    pub horizon_cap: usize,
    pub aggregate: Aggregate,
    pub window_lo: i64,
    pub window_hi: i64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 20,
            sigma: 1.5,
            alpha: 0.01,
            eps_u: 0.05,
            sensor_ids: DEFAULT_SENSOR_IDS.to_vec(),
            j_select: 5,
            horizon_cap: 500,
            aggregate: Aggregate::Median,
            window_lo: -13,
            window_hi: 10,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn train_options(&self) -> Result<TrainOptions, CliError> {
        Ok(TrainOptions {
            k: self.k,
            kernel: KernelParams::new(self.sigma)
                .map_err(|e| CliError::Config(e.to_string()))?,
            alpha: self.alpha,
            eps_u: self.eps_u,
        })
    }

    pub fn forecast_config(&self) -> ForecastConfig {
        ForecastConfig {
            j_select: self.j_select,
            horizon_cap: self.horizon_cap,
            aggregate: self.aggregate,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return fail(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return fail(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if !self.eps_u.is_finite() || self.eps_u < 0.0 {
            return fail(format!("eps_u must be nonnegative, got {}", self.eps_u));
        }
        if self.sensor_ids.is_empty() {
            return fail("sensor list must not be empty".into());
        }
        for &id in &self.sensor_ids {
            if id == 0 || id > 21 {
                return fail(format!("unknown sensor id {id} (valid ids are 1..=21)"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &id in &self.sensor_ids {
            if !seen.insert(id) {
                return fail(format!("duplicate sensor id {id}"));
            }
        }
        if self.j_select == 0 {
            return fail("j must be at least 1".into());
        }
        if self.horizon_cap == 0 {
            return fail("horizon must be at least 1".into());
        }
        if !(self.window_lo < 0 && self.window_hi > 0) {
            return fail(format!(
                "window [{}, {}] must satisfy window_lo < 0 < window_hi",
                self.window_lo, self.window_hi
            ));
        }
        Ok(())
    }
}

/// Optional keys of a config file; same fields as [`RunConfig`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    k: Option<usize>,
    sigma: Option<f64>,
    alpha: Option<f64>,
    eps_u: Option<f64>,
    sensor_ids: Option<Vec<usize>>,
    j_select: Option<usize>,
    horizon_cap: Option<usize>,
    aggregate: Option<Aggregate>,
    window_lo: Option<i64>,
    window_hi: Option<i64>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggregateArg {
    Median,
    Best,
}

impl From<AggregateArg> for Aggregate {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Median => Aggregate::Median,
            AggregateArg::Best => Aggregate::Best,
        }
    }
}

/// Hyperparameter flags shared by the pipeline subcommands.
#[derive(Debug, Default, Args)]
struct ConfigOverrides {
    /// Lag window length per sensor.
    #[arg(long)]
    k: Option<usize>,
    /// Gaussian kernel width (normalized input units).
    #[arg(long)]
    sigma: Option<f64>,
    /// Regularization factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Quantization size threshold.
    #[arg(long = "eps-u")]
    eps_u: Option<f64>,
    /// Comma-separated sensor ids (1..=21).
    #[arg(long, value_delimiter = ',')]
    sensors: Option<Vec<usize>>,
    /// Number of ranked predictors kept per test engine.
    #[arg(long)]
    j: Option<usize>,
    /// Maximum cycles to forecast past the current cycle.
    #[arg(long)]
    horizon: Option<usize>,
    /// How the selected predictors' failure times are combined.
    #[arg(long, value_enum)]
    aggregate: Option<AggregateArg>,
    /// Lower edge of the in-time window (negative).
    #[arg(long = "window-lo")]
    window_lo: Option<i64>,
    /// Upper edge of the in-time window (positive).
    #[arg(long = "window-hi")]
    window_hi: Option<i64>,
    /// Worker thread cap for fleet training and prediction.
    #[arg(long)]
    threads: Option<usize>,
    /// Config file (TOML key = value, same keys as the flags).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigOverrides {
    /// defaults < config file < flags.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            let file: ConfigFile = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if let Some(v) = file.k {
                cfg.k = v;
            }
            if let Some(v) = file.sigma {
                cfg.sigma = v;
            }
            if let Some(v) = file.alpha {
                cfg.alpha = v;
            }
            if let Some(v) = file.eps_u {
                cfg.eps_u = v;
            }
            if let Some(v) = file.sensor_ids {
                cfg.sensor_ids = v;
            }
            if let Some(v) = file.j_select {
                cfg.j_select = v;
            }
            if let Some(v) = file.horizon_cap {
                cfg.horizon_cap = v;
            }
            if let Some(v) = file.aggregate {
                cfg.aggregate = v;
            }
            if let Some(v) = file.window_lo {
                cfg.window_lo = v;
            }
            if let Some(v) = file.window_hi {
                cfg.window_hi = v;
            }
            if let Some(v) = file.threads {
                cfg.threads = Some(v);
            }
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.eps_u {
            cfg.eps_u = v;
        }
        if let Some(v) = &self.sensors {
            cfg.sensor_ids = v.clone();
        }
        if let Some(v) = self.j {
            cfg.j_select = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon_cap = v;
        }
        if let Some(v) = self.aggregate {
            cfg.aggregate = v.into();
        }
        if let Some(v) = self.window_lo {
            cfg.window_lo = v;
        }
        if let Some(v) = self.window_hi {
            cfg.window_hi = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rulkit",
    version,
    about = "Remaining-useful-life estimation for turbofan engines"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model per engine from a run-to-failure sensor file.
    Train {
        /// Whitespace-separated training file (26 columns per row).
        train_file: PathBuf,
        /// Output directory for model_<unit>.json files and fleet.json.
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Box<ConfigOverrides>,
    },
    /// Estimate remaining useful life for every engine in a test file.
    Predict {
        /// Directory produced by `train`.
        model_dir: PathBuf,
        /// Test sensor file with truncated trajectories.
        test_file: PathBuf,
        /// Output CSV path.
        out_csv: PathBuf,
        /// Ground-truth RUL file; fills the rul_true column when given.
        #[arg(long = "rul-file")]
        rul_file: Option<PathBuf>,
        #[command(flatten)]
        overrides: Box<ConfigOverrides>,
    },
    /// Score a results CSV against ground-truth RUL values.
    Evaluate {
        /// CSV produced by `predict`.
        results_csv: PathBuf,
        /// Ground-truth RUL file, one integer per test unit.
        rul_file: PathBuf,
        /// Metrics JSON output path (default: metrics.json next to the CSV).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Histogram CSV output path (default: histogram.csv next to the CSV).
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[command(flatten)]
        overrides: Box<ConfigOverrides>,
    },
    /// Print a readable summary of a saved model file.
    Inspect {
        model_file: PathBuf,
        /// Sensor file containing the model's own engine; replays it and
        /// prints the discrete-state sequence.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Write a synthetic dataset in the benchmark file layout.
    GenData {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2008)]
        seed: u64,
    },
}

/// Fleet-level training artifact: configuration echo, normalization and
/// per-model summaries.
#[derive(Debug, Serialize, Deserialize)]
pub struct FleetDocument {
    pub version: u32,
    pub k: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_u: f64,
    pub sensor_ids: Vec<usize>,
    pub normalization: Normalization,
    pub models: Vec<TrainedSummary>,
    pub skipped: Vec<SkippedUnit>,
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub engine_id: u32,
    pub t_c: u64,
    pub rul_estimated: u64,
    pub rul_true: Option<u32>,
    pub censored: bool,
    /// Selected predictor ids in rank order, semicolon separated.
    pub selected_ids: String,
}

/// Entry point used by `main`; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            train_file,
            out_dir,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            init_threads(&cfg);
            cmd_train(&train_file, &out_dir, &cfg)
        }
        Command::Predict {
            model_dir,
            test_file,
            out_csv,
            rul_file,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            init_threads(&cfg);
            cmd_predict(
                &model_dir,
                &test_file,
                &out_csv,
                rul_file.as_deref(),
                &overrides,
                &cfg,
            )
        }
        Command::Evaluate {
            results_csv,
            rul_file,
            json,
            histogram,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            cmd_evaluate(
                &results_csv,
                &rul_file,
                json.as_deref(),
                histogram.as_deref(),
                &cfg,
            )
        }
        Command::Inspect { model_file, replay } => cmd_inspect(&model_file, replay.as_deref()),
        Command::GenData { out_dir, seed } => {
            let spec = SynthSpec {
                seed,
                ..SynthSpec::default()
            };
            let paths = write_dataset(&out_dir, &spec)?;
            println!(
                "wrote {} + {} + {}",
                paths.train_file.display(),
                paths.test_file.display(),
                paths.rul_file.display()
            );
            Ok(())
        }
    }
}

#[cfg(feature = "parallel")]
fn init_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        // Only the first initialization takes effect within one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_cfg: &RunConfig) {}

fn cmd_train(train_file: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let records = parse_cmapss_file(train_file)?;
    let trajectories = select_sensors(&records, &cfg.sensor_ids)?;
    let norm = Arc::new(fit_normalization(&trajectories)?);
    let normalized: Vec<Trajectory> = trajectories
        .iter()
        .map(|t| apply_normalization(t, &norm))
        .collect();

    let (fleet, report) = train_fleet(&normalized, &cfg.train_options()?, Arc::clone(&norm))?;
    for skip in &report.skipped {
        eprintln!(
            "warning: unit {} skipped ({} cycles, lag order {})",
            skip.engine_id, skip.t_len, cfg.k
        );
    }

    fs::create_dir_all(out_dir)?;
    // Reruns must leave exactly the files of this run behind.
    for entry in fs::read_dir(out_dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name == "fleet.json" || (name.starts_with("model_") && name.ends_with(".json")) {
            fs::remove_file(entry.path())?;
        }
    }

    for predictor in &fleet {
        let doc = ModelDocument::from_predictor(predictor, cfg.k, &cfg.sensor_ids);
        save_model(
            out_dir.join(format!("model_{}.json", predictor.engine_id())),
            &doc,
        )?;
    }
    let fleet_doc = FleetDocument {
        version: MODEL_SCHEMA_VERSION,
        k: cfg.k,
        sigma: cfg.sigma,
        alpha: cfg.alpha,
        eps_u: cfg.eps_u,
        sensor_ids: cfg.sensor_ids.clone(),
        normalization: (*norm).clone(),
        models: report.trained.clone(),
        skipped: report.skipped.clone(),
    };
    write_json(&out_dir.join("fleet.json"), &fleet_doc)?;

    println!(
        "trained {} models ({} skipped) -> {}",
        fleet.len(),
        report.skipped.len(),
        out_dir.display()
    );
    Ok(())
}

fn load_fleet(model_dir: &Path) -> Result<(FleetDocument, Vec<Predictor>), CliError> {
    let fleet_path = model_dir.join("fleet.json");
    if !fleet_path.exists() {
        return Err(CliError::Invalid(format!(
            "no fleet.json under {} (run `rulkit train` first)",
            model_dir.display()
        )));
    }
    let fleet_doc: FleetDocument = serde_json::from_reader(File::open(&fleet_path)?)?;
    if fleet_doc.version != MODEL_SCHEMA_VERSION {
        return Err(PrognosticsError::UnsupportedVersion(fleet_doc.version).into());
    }
    let mut fleet = Vec::with_capacity(fleet_doc.models.len());
    for summary in &fleet_doc.models {
        let path = model_dir.join(format!("model_{}.json", summary.engine_id));
        let (predictor, k, _) = load_model(&path)?.into_predictor()?;
        if k != fleet_doc.k {
            return Err(CliError::Invalid(format!(
                "model {} was trained with k={k} but fleet.json says k={}",
                path.display(),
                fleet_doc.k
            )));
        }
        fleet.push(predictor);
    }
    fleet.sort_by_key(Predictor::engine_id);
    Ok((fleet_doc, fleet))
}

/// Training-time hyperparameters are baked into the stored models; explicit
/// flags contradicting them are an error rather than a silent reinterpretation.
fn check_predict_overrides(
    overrides: &ConfigOverrides,
    fleet_doc: &FleetDocument,
) -> Result<(), CliError> {
    let mismatch = |what: &str| {
        Err(CliError::Invalid(format!(
            "--{what} conflicts with the trained fleet (see fleet.json); retrain to change it"
        )))
    };
    if overrides.k.is_some_and(|v| v != fleet_doc.k) {
        return mismatch("k");
    }
    if overrides.sigma.is_some_and(|v| v != fleet_doc.sigma) {
        return mismatch("sigma");
    }
    if overrides.alpha.is_some_and(|v| v != fleet_doc.alpha) {
        return mismatch("alpha");
    }
    if overrides.eps_u.is_some_and(|v| v != fleet_doc.eps_u) {
        return mismatch("eps-u");
    }
    if overrides
        .sensors
        .as_ref()
        .is_some_and(|v| *v != fleet_doc.sensor_ids)
    {
        return mismatch("sensors");
    }
    Ok(())
}

fn cmd_predict(
    model_dir: &Path,
    test_file: &Path,
    out_csv: &Path,
    rul_file: Option<&Path>,
    overrides: &ConfigOverrides,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let (fleet_doc, fleet) = load_fleet(model_dir)?;
    check_predict_overrides(overrides, &fleet_doc)?;

    let records = parse_cmapss_file(test_file)?;
    let trajectories = select_sensors(&records, &fleet_doc.sensor_ids)?;
    let norm = fleet_doc.normalization.clone();
    let normalized: Vec<Trajectory> = trajectories
        .iter()
        .map(|t| apply_normalization(t, &norm))
        .collect();

    let truth = match rul_file {
        Some(path) => Some(parse_rul_file(path)?),
        None => None,
    };
    if let Some(truth) = &truth {
        let missing: Vec<u32> = normalized
            .iter()
            .map(Trajectory::unit_id)
            .filter(|&u| u as usize > truth.len())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Invalid(format!(
                "no ground-truth RUL for unit(s) {}",
                join_ids(&missing)
            )));
        }
    }

    let estimates = estimate_fleet(&fleet, &normalized, &cfg.forecast_config(), fleet_doc.k)?;

    if let Some(parent) = out_csv.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(out_csv)?));
    for est in &estimates {
        let row = ResultRow {
            engine_id: est.engine_id,
            t_c: est.t_c as u64,
            rul_estimated: est.rul as u64,
            rul_true: truth
                .as_ref()
                .map(|t| t[est.engine_id as usize - 1]),
            censored: est.censored,
            selected_ids: est
                .selected_ids
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        };
        writer.serialize(row)?;
    }
    writer.flush()?;

    let censored = estimates.iter().filter(|e| e.censored).count();
    println!(
        "estimated {} engines ({censored} censored) -> {}",
        estimates.len(),
        out_csv.display()
    );
    Ok(())
}

fn join_ids(ids: &[u32]) -> String {
    ids.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn read_results<P: AsRef<Path>>(path: P) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_reader(File::open(path)?);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

fn cmd_evaluate(
    results_csv: &Path,
    rul_file: &Path,
    json_out: Option<&Path>,
    histogram_out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let rows = read_results(results_csv)?;
    let truth = parse_rul_file(rul_file)?;

    let mut offending: Vec<u32> = rows
        .iter()
        .map(|r| r.engine_id)
        .filter(|&id| id == 0 || id as usize > truth.len())
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    for row in &rows {
        if !seen.insert(row.engine_id) {
            offending.push(row.engine_id);
        }
    }
    if !offending.is_empty() {
        offending.sort_unstable();
        offending.dedup();
        return Err(CliError::Invalid(format!(
            "results do not align with the truth file; offending engine id(s): {}",
            join_ids(&offending)
        )));
    }

    let records: Vec<ErrorRecord> = rows
        .iter()
        .map(|r| ErrorRecord {
            engine_id: r.engine_id,
            rul_true: truth[r.engine_id as usize - 1] as i64,
            rul_est: r.rul_estimated as i64,
        })
        .collect();
    let report = compute_metrics(&records, cfg.window_lo, cfg.window_hi)?;

    print!("{}", report.to_table());

    let default_dir = results_csv.parent().unwrap_or_else(|| Path::new("."));
    let json_path = json_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_dir.join("metrics.json"));
    let histogram_path = histogram_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_dir.join("histogram.csv"));
    write_json(&json_path, &report)?;
    write_histogram(&histogram_path, &report)?;
    println!("metrics -> {}", json_path.display());
    println!("histogram -> {}", histogram_path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

fn write_histogram(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    let mut writer = BufWriter::new(File::create(path)?);
    writeln!(writer, "bin,count")?;
    for (bin, count) in &report.histogram {
        writeln!(writer, "{bin},{count}")?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_inspect(model_file: &Path, replay: Option<&Path>) -> Result<(), CliError> {
    let doc = load_model(model_file)?;
    let (predictor, k, sensor_ids) = doc.into_predictor()?;
    let model = predictor.model();
    let book = model.codebook();

    println!("model file: {}", model_file.display());
    println!("schema version: {MODEL_SCHEMA_VERSION}");
    println!("engine id: {}", predictor.engine_id());
    println!(
        "sensors (s): {}  ids: {:?}  lag order (k): {k}",
        book.output_dim(),
        sensor_ids
    );
    println!(
        "sigma: {}  alpha: {}  eps_u: {}",
        model.kernel().sigma(),
        model.alpha(),
        book.eps_u()
    );
    println!("centers (n_L): {}", book.len());
    println!("samples processed: {}", book.samples());
    println!("center  count  |center|  |beta|");
    for i in 0..book.len() {
        let center_norm = book.centers()[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        let beta_norm = (0..book.output_dim())
            .map(|o| model.beta()[(i, o)].powi(2))
            .sum::<f64>()
            .sqrt();
        println!("{:<7} {:<6} {:<9.4} {:.4}", i + 1, book.counts()[i], center_norm, beta_norm);
    }

    if let Some(path) = replay {
        let records = parse_cmapss_file(path)?;
        let trajectories = select_sensors(&records, &sensor_ids)?;
        let own = trajectories
            .iter()
            .find(|t| t.unit_id() == predictor.engine_id())
            .ok_or_else(|| {
                CliError::Invalid(format!(
                    "unit {} not present in {}",
                    predictor.engine_id(),
                    path.display()
                ))
            })?;
        let norm = predictor.normalization().clone();
        let normalized = apply_normalization(own, &norm);
        let states = state_sequence(&predictor, &normalized, k)?;
        let rendered: Vec<String> = states.iter().map(ToString::to_string).collect();
        println!("state sequence ({} steps): {}", states.len(), rendered.join(" "));
    }
    Ok(())
}
