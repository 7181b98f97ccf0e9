//! Evaluation metrics for RUL estimates.
//!
//! Errors use the convention `d = estimated - true`: negative errors are
//! early predictions (false negatives), positive ones late (false
//! positives). The score is the usual asymmetric exponential penalty with
//! divisors 13 (early) and 10 (late), so late predictions cost more; the
//! accuracy window defaults to `[-13, +10]` and is configurable because the
//! literature varies.

use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no records to evaluate")]
    Empty,
    #[error("engine {0}: true RUL is zero, MAPE is undefined")]
    ZeroTrueRul(u32),
    #[error("invalid window [{lo}, {hi}]: need window_lo < 0 < window_hi")]
    InvalidWindow { lo: i64, hi: i64 },
    #[error("true RUL values are all identical, R² is undefined")]
    ZeroVariance,
}

/// Per-engine RUL error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorRecord {
    pub engine_id: u32,
    pub rul_true: i64,
    pub rul_est: i64,
}

impl ErrorRecord {
    /// `estimated - true`: negative is early, positive is late.
    pub fn error(&self) -> i64 {
        self.rul_est - self.rul_true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    pub mape_percent: f64,
    pub score: f64,
    pub accuracy_rate: f64,
    pub r2: f64,
    pub in_time: usize,
    pub early: usize,
    pub late: usize,
    pub error_span: (i64, i64),
    /// Unit-width integer bins covering the error span: `(lower edge, count)`.
    pub histogram: Vec<(i64, u64)>,
}

/// Score contribution of one error: `exp(-d/13) - 1` when early,
/// `exp(d/10) - 1` when in time or late. Zero iff `d == 0`.
pub fn score_contribution(d: i64) -> f64 {
    if d < 0 {
        (-(d as f64) / 13.0).exp() - 1.0
    } else {
        (d as f64 / 10.0).exp() - 1.0
    }
}

/// Full evaluation over a set of per-engine errors.
pub fn compute_metrics(
    records: &[ErrorRecord],
    window_lo: i64,
    window_hi: i64,
) -> Result<MetricsReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(window_lo < 0 && window_hi > 0) {
        return Err(MetricsError::InvalidWindow {
            lo: window_lo,
            hi: window_hi,
        });
    }
    let n = records.len() as f64;

    let mut sum_sq = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_ape = 0.0;
    let mut score = 0.0;
    let mut in_time = 0usize;
    let mut early = 0usize;
    let mut late = 0usize;
    for r in records {
        let d = r.error();
        if r.rul_true == 0 {
            return Err(MetricsError::ZeroTrueRul(r.engine_id));
        }
        let df = d as f64;
        sum_sq += df * df;
        sum_abs += df.abs();
        sum_ape += df.abs() / r.rul_true as f64;
        score += score_contribution(d);
        if d < window_lo {
            early += 1;
        } else if d > window_hi {
            late += 1;
        } else {
            in_time += 1;
        }
    }

    let mean_true = records.iter().map(|r| r.rul_true as f64).sum::<f64>() / n;
    let ss_tot: f64 = records
        .iter()
        .map(|r| (r.rul_true as f64 - mean_true).powi(2))
        .sum();
    let r2 = if sum_sq == 0.0 {
        1.0
    } else if ss_tot == 0.0 {
        return Err(MetricsError::ZeroVariance);
    } else {
        1.0 - sum_sq / ss_tot
    };

    let histogram = error_histogram(records);
    let span = (
        histogram.first().map(|&(b, _)| b).unwrap_or(0),
        histogram.last().map(|&(b, _)| b).unwrap_or(0),
    );

    Ok(MetricsReport {
        mse: sum_sq / n,
        mae: sum_abs / n,
        mape_percent: 100.0 * sum_ape / n,
        score,
        accuracy_rate: in_time as f64 / n,
        r2,
        in_time,
        early,
        late,
        error_span: span,
        histogram,
    })
}

/// Integer-bin error counts covering `[min d, max d]`, including empty bins,
/// so the bin list itself reports the span.
pub fn error_histogram(records: &[ErrorRecord]) -> Vec<(i64, u64)> {
    let errors: Vec<i64> = records.iter().map(ErrorRecord::error).collect();
    let (Some(&lo), Some(&hi)) = (errors.iter().min(), errors.iter().max()) else {
        return Vec::new();
    };
    let mut bins = vec![0u64; (hi - lo) as usize + 1];
    for d in errors {
        bins[(d - lo) as usize] += 1;
    }
    bins.into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as i64, c))
        .collect()
}

impl MetricsReport {
    /// Aligned plain-text rendering of the headline numbers.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("MSE", format!("{:.4}", self.mse)),
            ("MAE", format!("{:.4}", self.mae)),
            ("MAPE", format!("{:.4}%", self.mape_percent)),
            ("Score", format!("{:.4}", self.score)),
            ("Accuracy rate", format!("{:.4}", self.accuracy_rate)),
            ("R2", format!("{:.4}", self.r2)),
            ("In time", self.in_time.to_string()),
            ("Early (FN)", self.early.to_string()),
            ("Late (FP)", self.late.to_string()),
            (
                "Error span",
                format!("[{}, {}]", self.error_span.0, self.error_span.1),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(out, "{k:<width$}  {v}").unwrap();
        }
        out
    }
}
