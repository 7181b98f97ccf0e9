//! # rulkit
//!
//! Remaining-useful-life (RUL) estimation for turbofan engines.
//!
//! The toolkit trains one quantized kernel recursive least squares (QKRLS)
//! predictor per run-to-failure trajectory. Each predictor learns the
//! one-step-ahead dynamics of a small set of sensor signals; its quantization
//! codebook doubles as a sequence of discrete health states, the last of
//! which marks end-of-life. For a partially observed test engine the fleet is
//! ranked by prefix prediction error, the best predictors forecast the
//! signals recursively, and the failure time is the first forecast step whose
//! lag window falls into the final codebook region.
//!
//! ## Layout
//!
//! - [`qkrls`] — Gaussian-kernel learner: online quantization, incremental
//!   regularized least squares, state assignment.
//! - [`cmapss`] — C-MAPSS text-file parsing, sensor selection, min-max
//!   normalization, lag embedding.
//! - [`prognostics`] — fleet training, predictor ranking, recursive
//!   forecasting, RUL aggregation, model persistence.
//! - [`metrics`] — MSE / MAE / MAPE, asymmetric exponential score, accuracy
//!   window, R², error histogram.
//! - [`synth`] — deterministic synthetic dataset generator in the C-MAPSS
//!   file layout, for tests and demos.
//! - [`cli`] — the `rulkit` command-line pipeline (`train`, `predict`,
//!   `evaluate`, `inspect`, `gen-data`).
//!
//! ## Quick start
//!
//! ```
//! use rulkit::cmapss::{lag_embed, Trajectory};
//! use rulkit::qkrls::{KernelParams, QkrlsModel};
//!
//! // One sensor, eight cycles of a drifting signal.
//! let traj = Trajectory::new(1, vec![vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]]);
//! let pairs = lag_embed(&traj, 2).unwrap();
//!
//! let kernel = KernelParams::new(0.5).unwrap();
//! let mut model = QkrlsModel::new(2, 1, kernel, 0.01, 0.05).unwrap();
//! for pair in &pairs {
//!     model.update(&pair.x, &pair.d).unwrap();
//! }
//! let next = model.predict(&[0.6, 0.7]).unwrap();
//! assert!(next[0] > 0.5);
//! ```
//!
//! Fleet training and per-engine estimation run on rayon when the default
//! `parallel` feature is enabled; disable default features for a fully
//! sequential build.

pub mod cli;
pub mod cmapss;
pub mod metrics;
pub mod prognostics;
pub mod qkrls;
pub mod synth;
