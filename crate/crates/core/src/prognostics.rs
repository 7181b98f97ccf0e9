//! Fleet training, predictor selection, recursive forecasting and RUL
//! estimation.
//!
//! One predictor is trained per run-to-failure trajectory by streaming its
//! lag-embedded pairs through a QKRLS model in cycle order. The codebook of
//! a trained predictor is read as the engine's discrete health states in
//! degradation order; the final center marks end-of-life. For a test engine
//! the fleet is ranked by prediction error over the observed prefix, the
//! best `J` predictors forecast the signals recursively past the current
//! cycle, and each forecast stops when its lag window first enters the
//! failure region. The per-predictor failure times are aggregated into one
//! RUL value.
//!
//! All operations here expect trajectories already normalized with the
//! fleet [`Normalization`]; distances to codebook centers are only
//! comparable in that space.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cmapss::{lag_embed, CmapssError, Normalization, Trajectory};
use crate::qkrls::{Codebook, KernelParams, QkrlsError, QkrlsModel};

/// Schema version of persisted model files.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PrognosticsError {
    #[error(transparent)]
    Qkrls(#[from] QkrlsError),
    #[error(transparent)]
    Data(#[from] CmapssError),
    #[error("empty fleet")]
    EmptyFleet,
    #[error("predictor selection count {j} out of range for a fleet of {fleet}")]
    InvalidSelection { j: usize, fleet: usize },
    #[error("test trajectory of unit {unit} has {t_len} cycles, need more than lag order {k}")]
    TestTooShort { unit: u32, t_len: usize, k: usize },
    #[error("unsupported model schema version {0} (expected {MODEL_SCHEMA_VERSION})")]
    UnsupportedVersion(u32),
    #[error("model file field mismatch: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyperparameters shared by every predictor of a fleet.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    /// Number of lagged cycles per sensor in the input window.
    pub k: usize,
    pub kernel: KernelParams,
    pub alpha: f64,
    pub eps_u: f64,
}

/// One engine's trained model plus the fleet normalization it was trained
/// under.
#[derive(Debug, Clone)]
pub struct Predictor {
    engine_id: u32,
    model: QkrlsModel,
    norm: Arc<Normalization>,
}

impl Predictor {
    pub fn engine_id(&self) -> u32 {
        self.engine_id
    }

    pub fn model(&self) -> &QkrlsModel {
        &self.model
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainedSummary {
    pub engine_id: u32,
    pub codebook_size: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUnit {
    pub engine_id: u32,
    pub t_len: usize,
}

/// Per-fleet training outcome summary.
#[derive(Debug, Clone, Default, Serialize)]
pub struct TrainReport {
    pub trained: Vec<TrainedSummary>,
    pub skipped: Vec<SkippedUnit>,
}

/// Train one predictor by streaming the trajectory's lagged pairs through
/// the model in cycle order.
pub fn train_predictor(
    trajectory: &Trajectory,
    opts: &TrainOptions,
    norm: Arc<Normalization>,
) -> Result<Predictor, PrognosticsError> {
    let pairs = lag_embed(trajectory, opts.k)?;
    let s = trajectory.sensor_count();
    let mut model = QkrlsModel::new(s * opts.k, s, opts.kernel, opts.alpha, opts.eps_u)?;
    for pair in &pairs {
        model.update(&pair.x, &pair.d)?;
    }
    Ok(Predictor {
        engine_id: trajectory.unit_id(),
        model,
        norm,
    })
}

enum TrainOutcome {
    Trained(Box<Predictor>, TrainedSummary),
    Skipped(SkippedUnit),
}

fn train_one(
    trajectory: &Trajectory,
    opts: &TrainOptions,
    norm: &Arc<Normalization>,
) -> Result<TrainOutcome, PrognosticsError> {
    if trajectory.len() <= opts.k {
        return Ok(TrainOutcome::Skipped(SkippedUnit {
            engine_id: trajectory.unit_id(),
            t_len: trajectory.len(),
        }));
    }
    let predictor = train_predictor(trajectory, opts, Arc::clone(norm))?;
    let summary = TrainedSummary {
        engine_id: predictor.engine_id(),
        codebook_size: predictor.model().n_centers(),
        pairs: trajectory.len() - opts.k,
    };
    Ok(TrainOutcome::Trained(Box::new(predictor), summary))
}

/// Train the whole fleet, one predictor per trajectory. Trajectories too
/// short for the lag order are skipped and recorded in the report rather
/// than failing the run. Runs across trajectories in parallel when the
/// `parallel` feature is enabled; output order follows input order either
/// way.
pub fn train_fleet(
    trajectories: &[Trajectory],
    opts: &TrainOptions,
    norm: Arc<Normalization>,
) -> Result<(Vec<Predictor>, TrainReport), PrognosticsError> {
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<TrainOutcome, PrognosticsError>> = trajectories
        .par_iter()
        .map(|t| train_one(t, opts, &norm))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<TrainOutcome, PrognosticsError>> = trajectories
        .iter()
        .map(|t| train_one(t, opts, &norm))
        .collect();

    let mut fleet = Vec::new();
    let mut report = TrainReport::default();
    for outcome in outcomes {
        match outcome? {
            TrainOutcome::Trained(p, summary) => {
                fleet.push(*p);
                report.trained.push(summary);
            }
            TrainOutcome::Skipped(skip) => report.skipped.push(skip),
        }
    }
    Ok((fleet, report))
}

/// Prefix prediction error of one predictor on a test trajectory: the
/// square root of the summed squared one-step-ahead errors over the
/// observed cycles `t = k+1 ..= t_c` (no division by the step count; every
/// predictor sees the same prefix, so the ranking is unaffected).
fn prefix_error(
    predictor: &Predictor,
    pairs: &[crate::cmapss::TrainingPair],
) -> Result<f64, PrognosticsError> {
    let mut sum = 0.0;
    for pair in pairs {
        let predicted = predictor.model().predict(&pair.x)?;
        sum += predicted
            .iter()
            .zip(pair.d.iter())
            .map(|(p, d)| (d - p) * (d - p))
            .sum::<f64>();
    }
    Ok(sum.sqrt())
}

/// Rank the fleet on a test trajectory's observed prefix, ascending by
/// error, ties broken by engine id.
pub fn rank_predictors(
    fleet: &[Predictor],
    test: &Trajectory,
    k: usize,
) -> Result<Vec<(u32, f64)>, PrognosticsError> {
    if fleet.is_empty() {
        return Err(PrognosticsError::EmptyFleet);
    }
    let pairs = lag_embed(test, k).map_err(|e| match e {
        CmapssError::TrajectoryTooShort { t_len, k } => PrognosticsError::TestTooShort {
            unit: test.unit_id(),
            t_len,
            k,
        },
        other => other.into(),
    })?;
    let mut ranked = Vec::with_capacity(fleet.len());
    for p in fleet {
        ranked.push((p.engine_id(), prefix_error(p, &pairs)?));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Result of forecasting one test engine with one predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub outcome: ForecastOutcome,
    /// Predicted signal extension, one row per sensor; length `t_f - t_c`
    /// on failure, `horizon_cap` when censored.
    pub extension: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastOutcome {
    /// Absolute failure cycle `t_f > t_c`.
    FailureAt(usize),
    /// No window entered the failure region within the horizon cap.
    Censored,
}

impl ForecastOutcome {
    pub fn failure_time(&self) -> Option<usize> {
        match self {
            ForecastOutcome::FailureAt(t) => Some(*t),
            ForecastOutcome::Censored => None,
        }
    }
}

/// Recursively forecast a test engine past its current cycle `t_c` until
/// the lag window first enters the predictor's failure region.
///
/// For each `t > t_c` the window takes observed values at cycles `<= t_c`
/// and previously predicted values afterwards, so the first `k` steps blend
/// both. The forecast stops at the first `t` whose window is assigned the
/// final state `n_L`, giving `t_f = t`; if no window reaches it within
/// `horizon_cap` steps the forecast is censored.
pub fn forecast_to_failure(
    predictor: &Predictor,
    test: &Trajectory,
    k: usize,
    horizon_cap: usize,
) -> Result<Forecast, PrognosticsError> {
    let t_c = test.len();
    if t_c <= k {
        return Err(PrognosticsError::TestTooShort {
            unit: test.unit_id(),
            t_len: t_c,
            k,
        });
    }
    let model = predictor.model();
    let n_final = model.n_centers();
    let s = test.sensor_count();

    let mut series: Vec<Vec<f64>> = test.rows().to_vec();
    let mut extension: Vec<Vec<f64>> = vec![Vec::new(); s];
    let mut window = Vec::with_capacity(s * k);
    for step in 1..=horizon_cap {
        let t = t_c + step;
        window.clear();
        for row in &series {
            window.extend_from_slice(&row[(t - k - 1)..(t - 1)]);
        }
        let predicted = model.predict(&window)?;
        for (r, value) in predicted.iter().enumerate() {
            series[r].push(*value);
            extension[r].push(*value);
        }
        if model.assign_state(&window)? == n_final {
            return Ok(Forecast {
                outcome: ForecastOutcome::FailureAt(t),
                extension,
            });
        }
    }
    Ok(Forecast {
        outcome: ForecastOutcome::Censored,
        extension,
    })
}

/// How the failure times of the selected predictors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// Median of the non-censored failure times, rounded half up.
    Median,
    /// Failure time of the highest-ranked non-censored predictor.
    Best,
}

#[derive(Debug, Clone, Copy)]
pub struct ForecastConfig {
    /// Number of predictors kept from the ranking.
    pub j_select: usize,
    /// Maximum cycles to forecast past `t_c`.
    pub horizon_cap: usize,
    pub aggregate: Aggregate,
}

/// One test engine's RUL estimate with per-predictor diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RulEstimate {
    pub engine_id: u32,
    pub t_c: usize,
    /// Failure time per selected predictor, in rank order; `None` marks a
    /// censored forecast.
    pub t_f_per_predictor: Vec<(u32, Option<usize>)>,
    pub rul: usize,
    /// Selected predictor ids in rank order.
    pub selected_ids: Vec<u32>,
    /// True when every selected forecast hit the horizon cap; `rul` then
    /// holds the cap itself.
    pub censored: bool,
}

/// Combine per-predictor failure times: censored forecasts are excluded
/// from aggregation; when all are censored the estimate is the horizon cap,
/// flagged as censored.
fn aggregate_failure_times(
    per_predictor: &[(u32, Option<usize>)],
    t_c: usize,
    aggregate: Aggregate,
    horizon_cap: usize,
) -> (usize, bool) {
    let failures: Vec<usize> = per_predictor.iter().filter_map(|(_, t)| *t).collect();
    if failures.is_empty() {
        return (horizon_cap, true);
    }
    let t_f = match aggregate {
        Aggregate::Best => failures[0],
        Aggregate::Median => {
            let mut sorted = failures.clone();
            sorted.sort_unstable();
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                // Round half up to a whole cycle.
                (sorted[n / 2 - 1] + sorted[n / 2]).div_ceil(2)
            }
        }
    };
    (t_f - t_c, false)
}

/// Estimate the RUL of one test engine: rank the fleet on the observed
/// prefix, forecast with the top `J` predictors, aggregate their failure
/// times.
pub fn estimate_rul(
    fleet: &[Predictor],
    test: &Trajectory,
    config: &ForecastConfig,
    k: usize,
) -> Result<RulEstimate, PrognosticsError> {
    if fleet.is_empty() {
        return Err(PrognosticsError::EmptyFleet);
    }
    if config.j_select == 0 || config.j_select > fleet.len() {
        return Err(PrognosticsError::InvalidSelection {
            j: config.j_select,
            fleet: fleet.len(),
        });
    }
    let ranked = rank_predictors(fleet, test, k)?;
    let selected_ids: Vec<u32> = ranked[..config.j_select].iter().map(|&(id, _)| id).collect();

    let mut per_predictor = Vec::with_capacity(selected_ids.len());
    for &id in &selected_ids {
        let predictor = fleet
            .iter()
            .find(|p| p.engine_id() == id)
            .expect("ranked id comes from the fleet");
        let forecast = forecast_to_failure(predictor, test, k, config.horizon_cap)?;
        per_predictor.push((id, forecast.outcome.failure_time()));
    }
    let (rul, censored) =
        aggregate_failure_times(&per_predictor, test.len(), config.aggregate, config.horizon_cap);
    Ok(RulEstimate {
        engine_id: test.unit_id(),
        t_c: test.len(),
        t_f_per_predictor: per_predictor,
        rul,
        selected_ids,
        censored,
    })
}

/// Estimate every test engine. Parallel across engines when the `parallel`
/// feature is enabled; output order follows input order either way.
pub fn estimate_fleet(
    fleet: &[Predictor],
    tests: &[Trajectory],
    config: &ForecastConfig,
    k: usize,
) -> Result<Vec<RulEstimate>, PrognosticsError> {
    #[cfg(feature = "parallel")]
    {
        tests
            .par_iter()
            .map(|t| estimate_rul(fleet, t, config, k))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        tests
            .iter()
            .map(|t| estimate_rul(fleet, t, config, k))
            .collect()
    }
}

/// Discrete-state path of a trajectory under a predictor: the assigned
/// state of every lag vector in cycle order. Replayed against its own
/// predictor, a training trajectory starts in state 1 and ends in the
/// failure state `n_L`.
pub fn state_sequence(
    predictor: &Predictor,
    trajectory: &Trajectory,
    k: usize,
) -> Result<Vec<usize>, PrognosticsError> {
    let pairs = lag_embed(trajectory, k)?;
    let mut states = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        states.push(predictor.model().assign_state(&pair.x)?);
    }
    Ok(states)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Normalization provenance stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationDocument {
    pub sensor_ids: Vec<usize>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Versioned on-disk model: everything needed to rebuild a [`Predictor`].
/// Matrices are row-major (`centers` is `n_L × s·k`, `dbar` and `beta` are
/// `n_L × s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub engine_id: u32,
    pub s: usize,
    pub k: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_u: f64,
    pub centers: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
    pub dbar: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub normalization: NormalizationDocument,
}

impl ModelDocument {
    pub fn from_predictor(predictor: &Predictor, k: usize, sensor_ids: &[usize]) -> Self {
        let model = predictor.model();
        let book = model.codebook();
        let n = book.len();
        let s = book.output_dim();
        let beta = (0..n)
            .map(|i| (0..s).map(|o| model.beta()[(i, o)]).collect())
            .collect();
        Self {
            version: MODEL_SCHEMA_VERSION,
            engine_id: predictor.engine_id(),
            s,
            k,
            sigma: model.kernel().sigma(),
            alpha: model.alpha(),
            eps_u: book.eps_u(),
            centers: book.centers().to_vec(),
            counts: book.counts().to_vec(),
            dbar: book.dbar().to_vec(),
            beta,
            normalization: NormalizationDocument {
                sensor_ids: sensor_ids.to_vec(),
                min: predictor.norm.min.clone(),
                max: predictor.norm.max.clone(),
            },
        }
    }

    /// Rebuild the in-memory predictor. The stored weights are used
    /// verbatim so a reloaded model predicts bit-identically.
    pub fn into_predictor(self) -> Result<(Predictor, usize, Vec<usize>), PrognosticsError> {
        if self.version != MODEL_SCHEMA_VERSION {
            return Err(PrognosticsError::UnsupportedVersion(self.version));
        }
        if self.s == 0 || self.k == 0 {
            return Err(PrognosticsError::MalformedModel(
                "s and k must be positive".into(),
            ));
        }
        let kernel = KernelParams::new(self.sigma)?;
        let codebook = Codebook::from_parts(
            self.s * self.k,
            self.s,
            self.eps_u,
            self.centers,
            self.counts,
            self.dbar,
        )?;
        let model = QkrlsModel::from_parts(kernel, self.alpha, codebook, self.beta)?;
        let norm = Arc::new(Normalization {
            min: self.normalization.min.clone(),
            max: self.normalization.max.clone(),
        });
        if norm.min.len() != self.s || norm.max.len() != self.s {
            return Err(PrognosticsError::MalformedModel(
                "normalization length does not match sensor count".into(),
            ));
        }
        Ok((
            Predictor {
                engine_id: self.engine_id,
                model,
                norm,
            },
            self.k,
            self.normalization.sensor_ids,
        ))
    }
}

pub fn save_model<P: AsRef<Path>>(path: P, doc: &ModelDocument) -> Result<(), PrognosticsError> {
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, doc)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<ModelDocument, PrognosticsError> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}
