//! C-MAPSS turbofan dataset handling.
//!
//! The benchmark text files carry one record per line: unit id, cycle,
//! three operational settings and 21 sensor readings, whitespace separated.
//! This module parses those files, extracts a sensor subset as per-unit
//! trajectories, fits fleet-wide min-max normalization, and reorganizes a
//! trajectory into lagged input/target pairs for one-step-ahead learning.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sensor ids used by default: the five predictable sensors
/// (columns 7, 13, 16, 18 and 20 of the source rows).
pub const DEFAULT_SENSOR_IDS: [usize; 5] = [2, 8, 11, 13, 15];

/// Number of whitespace-separated fields in a well-formed record line.
pub const RECORD_FIELDS: usize = 26;

#[derive(Debug, Error)]
pub enum CmapssError {
    #[error("line {line}: expected {RECORD_FIELDS} fields, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: invalid numeric field `{token}`")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: unit {unit} has cycle {found} where {expected} was expected (cycles must be consecutive from 1)")]
    NonConsecutiveCycle {
        line: usize,
        unit: u32,
        expected: u32,
        found: u32,
    },
    #[error("unknown sensor id {0} (valid ids are 1..=21)")]
    UnknownSensor(usize),
    #[error("sensor row {index} is constant at {value}; exclude it from the sensor subset")]
    ConstantSensor { index: usize, value: f64 },
    #[error("no trajectories to normalize")]
    EmptyFleet,
    #[error("lag order must be at least 1")]
    InvalidLag,
    #[error("trajectory too short: {t_len} cycles cannot produce lag vectors of order {k}")]
    TrajectoryTooShort { t_len: usize, k: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One source row of a C-MAPSS file.
#[derive(Debug, Clone, PartialEq)]
pub struct CmapssRecord {
    pub unit_id: u32,
    pub cycle: u32,
    pub op_settings: [f64; 3],
    pub sensors: [f64; 21],
}

/// One engine's multivariate sensor series, rows in sensor-subset order,
/// columns in cycle order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    unit_id: u32,
    values: Vec<Vec<f64>>,
}

impl Trajectory {
    /// `values` holds one row per sensor; all rows must have equal length.
    pub fn new(unit_id: u32, values: Vec<Vec<f64>>) -> Self {
        if let Some(first) = values.first() {
            assert!(
                values.iter().all(|r| r.len() == first.len()),
                "trajectory rows must have equal length"
            );
        }
        Self { unit_id, values }
    }

    pub fn unit_id(&self) -> u32 {
        self.unit_id
    }

    /// Number of sensor rows `s`.
    pub fn sensor_count(&self) -> usize {
        self.values.len()
    }

    /// Length in cycles.
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Per-sensor min/max over the training fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn sensor_count(&self) -> usize {
        self.min.len()
    }
}

/// One lag-embedded sample: `x` stacks the previous `k` values of every
/// sensor (sensor-major), `d` is the sensor vector at cycle `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    /// 1-based cycle index of the target.
    pub t: usize,
}

/// Parse a C-MAPSS sensor file. Records are returned grouped and ordered by
/// `(unit_id, cycle)`; blank lines are ignored. Cycles within each unit must
/// be consecutive starting at 1.
pub fn parse_cmapss<R: BufRead>(reader: R) -> Result<Vec<CmapssRecord>, CmapssError> {
    let mut records: Vec<(CmapssRecord, usize)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != RECORD_FIELDS {
            return Err(CmapssError::ColumnCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let int = |tok: &str| -> Result<u32, CmapssError> {
            tok.parse().map_err(|_| CmapssError::InvalidNumber {
                line: line_no,
                token: tok.to_string(),
            })
        };
        let num = |tok: &str| -> Result<f64, CmapssError> {
            tok.parse().map_err(|_| CmapssError::InvalidNumber {
                line: line_no,
                token: tok.to_string(),
            })
        };
        let unit_id = int(fields[0])?;
        let cycle = int(fields[1])?;
        let mut op_settings = [0.0; 3];
        for (j, slot) in op_settings.iter_mut().enumerate() {
            *slot = num(fields[2 + j])?;
        }
        let mut sensors = [0.0; 21];
        for (j, slot) in sensors.iter_mut().enumerate() {
            *slot = num(fields[5 + j])?;
        }
        records.push((
            CmapssRecord {
                unit_id,
                cycle,
                op_settings,
                sensors,
            },
            line_no,
        ));
    }

    records.sort_by_key(|(r, _)| (r.unit_id, r.cycle));

    let mut prev_unit = None;
    let mut expected = 1u32;
    for (record, line) in &records {
        if prev_unit != Some(record.unit_id) {
            prev_unit = Some(record.unit_id);
            expected = 1;
        }
        if record.cycle != expected {
            return Err(CmapssError::NonConsecutiveCycle {
                line: *line,
                unit: record.unit_id,
                expected,
                found: record.cycle,
            });
        }
        expected += 1;
    }

    Ok(records.into_iter().map(|(r, _)| r).collect())
}

pub fn parse_cmapss_file<P: AsRef<Path>>(path: P) -> Result<Vec<CmapssRecord>, CmapssError> {
    parse_cmapss(BufReader::new(File::open(path)?))
}

/// Write records back in the source format (space separated, one per line).
/// Floats use the shortest representation that round-trips, so
/// parse → write → parse is the identity.
pub fn write_records<W: Write>(mut w: W, records: &[CmapssRecord]) -> io::Result<()> {
    let mut line = String::new();
    for r in records {
        line.clear();
        write!(line, "{} {}", r.unit_id, r.cycle).unwrap();
        for v in &r.op_settings {
            write!(line, " {v}").unwrap();
        }
        for v in &r.sensors {
            write!(line, " {v}").unwrap();
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parse a ground-truth RUL file: one nonnegative integer per line, entry
/// `i` belonging to test unit `i + 1`.
pub fn parse_rul<R: BufRead>(reader: R) -> Result<Vec<u32>, CmapssError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let value = tok.parse().map_err(|_| CmapssError::InvalidNumber {
            line: i + 1,
            token: tok.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn parse_rul_file<P: AsRef<Path>>(path: P) -> Result<Vec<u32>, CmapssError> {
    parse_rul(BufReader::new(File::open(path)?))
}

/// Extract the given sensors from parsed records, one trajectory per unit.
/// Rows follow the order of `sensor_ids`; sensor id `i` reads source column
/// `i + 5` (1-based), i.e. `sensors[i - 1]`.
pub fn select_sensors(
    records: &[CmapssRecord],
    sensor_ids: &[usize],
) -> Result<Vec<Trajectory>, CmapssError> {
    for &id in sensor_ids {
        if id == 0 || id > 21 {
            return Err(CmapssError::UnknownSensor(id));
        }
    }
    let mut trajectories: Vec<Trajectory> = Vec::new();
    let mut current: Option<(u32, Vec<Vec<f64>>)> = None;
    for record in records {
        match &mut current {
            Some((unit, rows)) if *unit == record.unit_id => {
                for (row, &id) in rows.iter_mut().zip(sensor_ids) {
                    row.push(record.sensors[id - 1]);
                }
            }
            _ => {
                if let Some((unit, rows)) = current.take() {
                    trajectories.push(Trajectory::new(unit, rows));
                }
                let mut rows = vec![Vec::new(); sensor_ids.len()];
                for (row, &id) in rows.iter_mut().zip(sensor_ids) {
                    row.push(record.sensors[id - 1]);
                }
                current = Some((record.unit_id, rows));
            }
        }
    }
    if let Some((unit, rows)) = current.take() {
        trajectories.push(Trajectory::new(unit, rows));
    }
    Ok(trajectories)
}

/// Per-sensor global min/max over all cycles of all trajectories.
/// A constant sensor is an error: it cannot be normalized and must be
/// excluded from the subset.
pub fn fit_normalization(trajectories: &[Trajectory]) -> Result<Normalization, CmapssError> {
    let first = trajectories.first().ok_or(CmapssError::EmptyFleet)?;
    let s = first.sensor_count();
    let mut min = vec![f64::INFINITY; s];
    let mut max = vec![f64::NEG_INFINITY; s];
    for traj in trajectories {
        assert_eq!(
            traj.sensor_count(),
            s,
            "trajectories must share the sensor subset"
        );
        for (r, row) in traj.rows().iter().enumerate() {
            for &v in row {
                min[r] = min[r].min(v);
                max[r] = max[r].max(v);
            }
        }
    }
    for r in 0..s {
        if max[r] == min[r] {
            return Err(CmapssError::ConstantSensor {
                index: r,
                value: min[r],
            });
        }
    }
    Ok(Normalization { min, max })
}

/// Map every value to `(v - min) / (max - min)`. Values outside the fitted
/// range map outside `[0, 1]`; no clipping.
pub fn apply_normalization(trajectory: &Trajectory, norm: &Normalization) -> Trajectory {
    assert_eq!(
        trajectory.sensor_count(),
        norm.sensor_count(),
        "normalization and trajectory must share the sensor subset"
    );
    let rows = trajectory
        .rows()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let span = norm.max[r] - norm.min[r];
            row.iter().map(|v| (v - norm.min[r]) / span).collect()
        })
        .collect();
    Trajectory::new(trajectory.unit_id(), rows)
}

/// Reorganize a trajectory into lagged pairs for `t = k+1 ..= t_len`:
/// `x_t = [x¹_{t-k} .. x¹_{t-1}, ..., xˢ_{t-k} .. xˢ_{t-1}]`, `d_t` the
/// sensor vector at `t`. Produces `t_len - k` pairs.
pub fn lag_embed(trajectory: &Trajectory, k: usize) -> Result<Vec<TrainingPair>, CmapssError> {
    if k == 0 {
        return Err(CmapssError::InvalidLag);
    }
    let t_len = trajectory.len();
    if t_len < k + 1 {
        return Err(CmapssError::TrajectoryTooShort { t_len, k });
    }
    let s = trajectory.sensor_count();
    let rows = trajectory.rows();
    let mut pairs = Vec::with_capacity(t_len - k);
    for t in (k + 1)..=t_len {
        let mut x = Vec::with_capacity(s * k);
        for row in rows {
            x.extend_from_slice(&row[(t - k - 1)..(t - 1)]);
        }
        let d = rows.iter().map(|row| row[t - 1]).collect();
        pairs.push(TrainingPair { x, d, t });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn record_line(unit: u32, cycle: u32) -> String {
        let mut fields = vec![unit.to_string(), cycle.to_string()];
        fields.push("-0.0007".into());
        fields.push("-0.0004".into());
        fields.push("100.0".into());
        for s in 0..21 {
            fields.push(format!("{}", 500.0 + s as f64 + 0.01 * cycle as f64));
        }
        fields.join(" ")
    }

    #[test]
    fn parse_maps_fields() {
        let line = record_line(1, 1);
        let records = parse_cmapss(Cursor::new(line)).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.unit_id, 1);
        assert_eq!(r.cycle, 1);
        assert_eq!(r.op_settings, [-0.0007, -0.0004, 100.0]);
        assert_eq!(r.sensors[0], 500.01);
        assert_eq!(r.sensors[20], 520.01);
    }

    #[test]
    fn parse_empty_input_gives_empty_list() {
        assert!(parse_cmapss(Cursor::new("")).unwrap().is_empty());
        assert!(parse_rul(Cursor::new("")).unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_wrong_column_count() {
        let err = parse_cmapss(Cursor::new("1 2 3")).unwrap_err();
        assert!(matches!(
            err,
            CmapssError::ColumnCount { line: 1, found: 3 }
        ));
    }

    #[test]
    fn parse_rejects_non_numeric_token() {
        let mut line = record_line(1, 1);
        line = line.replace("100.0", "oops");
        let err = parse_cmapss(Cursor::new(line)).unwrap_err();
        match err {
            CmapssError::InvalidNumber { line, token } => {
                assert_eq!(line, 1);
                assert_eq!(token, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_non_consecutive_cycles() {
        let text = [record_line(1, 1), record_line(1, 3)].join("\n");
        let err = parse_cmapss(Cursor::new(text)).unwrap_err();
        match err {
            CmapssError::NonConsecutiveCycle {
                line,
                unit,
                expected,
                found,
            } => {
                assert_eq!((line, unit, expected, found), (2, 1, 2, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_orders_by_unit_and_cycle() {
        let text = [
            record_line(2, 1),
            record_line(1, 2),
            record_line(1, 1),
            record_line(2, 2),
        ]
        .join("\n");
        let records = parse_cmapss(Cursor::new(text)).unwrap();
        let keys: Vec<(u32, u32)> = records.iter().map(|r| (r.unit_id, r.cycle)).collect();
        assert_eq!(keys, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn rul_file_parses_entries_in_order() {
        assert_eq!(parse_rul(Cursor::new("112\n98\n")).unwrap(), vec![112, 98]);
        assert!(parse_rul(Cursor::new("12\nxyz\n")).is_err());
    }

    #[test]
    fn select_sensors_reads_expected_columns() {
        let line = record_line(1, 1);
        let records = parse_cmapss(Cursor::new(line)).unwrap();
        // Sensor id 2 is source column 7, i.e. sensors[1].
        let trajs = select_sensors(&records, &[2]).unwrap();
        assert_eq!(trajs[0].rows()[0][0], records[0].sensors[1]);
    }

    #[test]
    fn select_sensors_shapes() {
        let text: Vec<String> = (1..=3).map(|c| record_line(1, c)).collect();
        let records = parse_cmapss(Cursor::new(text.join("\n"))).unwrap();
        let trajs = select_sensors(&records, &[2]).unwrap();
        assert_eq!(trajs.len(), 1);
        assert_eq!(trajs[0].sensor_count(), 1);
        assert_eq!(trajs[0].len(), 3);

        let trajs = select_sensors(&records, &DEFAULT_SENSOR_IDS).unwrap();
        assert_eq!(trajs[0].sensor_count(), 5);
    }

    #[test]
    fn select_sensors_rejects_unknown_id() {
        let records = parse_cmapss(Cursor::new(record_line(1, 1))).unwrap();
        assert!(matches!(
            select_sensors(&records, &[22]),
            Err(CmapssError::UnknownSensor(22))
        ));
        assert!(matches!(
            select_sensors(&records, &[0]),
            Err(CmapssError::UnknownSensor(0))
        ));
    }

    #[test]
    fn normalization_fits_global_extremes() {
        let a = Trajectory::new(1, vec![vec![1.0, 3.0]]);
        let b = Trajectory::new(2, vec![vec![2.0, 8.0]]);
        let norm = fit_normalization(&[a, b]).unwrap();
        assert_eq!(norm.min, vec![1.0]);
        assert_eq!(norm.max, vec![8.0]);
    }

    #[test]
    fn normalization_maps_examples() {
        let t = Trajectory::new(1, vec![vec![0.0, 5.0, 10.0]]);
        let norm = fit_normalization(std::slice::from_ref(&t)).unwrap();
        let mapped = apply_normalization(&t, &norm);
        assert_eq!(mapped.rows()[0], vec![0.0, 0.5, 1.0]);

        // No clipping outside the fitted range.
        let wide = Trajectory::new(2, vec![vec![12.0]]);
        let mapped = apply_normalization(&wide, &norm);
        assert_eq!(mapped.rows()[0], vec![1.2]);
    }

    #[test]
    fn normalization_round_trips_through_inverse_map() {
        let t = Trajectory::new(1, vec![vec![3.25, 7.5, 19.0, 4.125]]);
        let norm = fit_normalization(std::slice::from_ref(&t)).unwrap();
        let mapped = apply_normalization(&t, &norm);
        for (orig, v) in t.rows()[0].iter().zip(&mapped.rows()[0]) {
            let restored = v * (norm.max[0] - norm.min[0]) + norm.min[0];
            assert!((restored - orig).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_rejects_constant_sensor() {
        let t = Trajectory::new(1, vec![vec![4.2, 4.2, 4.2]]);
        assert!(matches!(
            fit_normalization(&[t]),
            Err(CmapssError::ConstantSensor { index: 0, .. })
        ));
        assert!(matches!(
            fit_normalization(&[]),
            Err(CmapssError::EmptyFleet)
        ));
    }

    #[test]
    fn lag_embed_scalar_series() {
        let t = Trajectory::new(1, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let pairs = lag_embed(&t, 2).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].x, vec![1.0, 2.0]);
        assert_eq!(pairs[0].d, vec![3.0]);
        assert_eq!(pairs[0].t, 3);
        assert_eq!(pairs[1].x, vec![2.0, 3.0]);
        assert_eq!(pairs[1].d, vec![4.0]);
        assert_eq!(pairs[1].t, 4);
    }

    #[test]
    fn lag_embed_is_sensor_major() {
        let t = Trajectory::new(1, vec![vec![1.0, 2.0], vec![5.0, 6.0]]);
        let pairs = lag_embed(&t, 1).unwrap();
        assert_eq!(pairs[0].x, vec![1.0, 5.0]);
        assert_eq!(pairs[0].d, vec![2.0, 6.0]);
    }

    #[test]
    fn lag_embed_rejects_short_trajectories() {
        let t = Trajectory::new(1, vec![vec![1.0, 2.0]]);
        assert!(matches!(
            lag_embed(&t, 2),
            Err(CmapssError::TrajectoryTooShort { t_len: 2, k: 2 })
        ));
        assert!(matches!(lag_embed(&t, 0), Err(CmapssError::InvalidLag)));
    }

    proptest! {
        #[test]
        fn parse_write_parse_is_identity(
            units in proptest::collection::vec(1u32..5, 1..4),
            seed in 0u64..100,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut records = Vec::new();
            for (u, len) in units.iter().enumerate() {
                for c in 1..=*len {
                    let mut sensors = [0.0; 21];
                    for s in sensors.iter_mut() {
                        *s = (rng.random_range(-1e4..1e4_f64) * 1e-2).round() * 1e-2;
                    }
                    records.push(CmapssRecord {
                        unit_id: u as u32 + 1,
                        cycle: c,
                        op_settings: [rng.random_range(-1.0..1.0), 0.0003, 100.0],
                        sensors,
                    });
                }
            }
            let mut buf = Vec::new();
            write_records(&mut buf, &records).unwrap();
            let reparsed = parse_cmapss(Cursor::new(buf)).unwrap();
            prop_assert_eq!(reparsed, records);
        }

        #[test]
        fn lag_embed_count_and_window_consistency(
            series in proptest::collection::vec(-10.0f64..10.0, 3..40),
            k in 1usize..6,
        ) {
            prop_assume!(series.len() > k);
            let t = Trajectory::new(1, vec![series.clone()]);
            let pairs = lag_embed(&t, k).unwrap();
            prop_assert_eq!(pairs.len(), series.len() - k);
            // De-embedding reproduces the raw series: window j of pair t
            // equals series[t-k-1+j], and the target is series[t-1].
            for pair in &pairs {
                for (j, v) in pair.x.iter().enumerate() {
                    prop_assert_eq!(*v, series[pair.t - k - 1 + j]);
                }
                prop_assert_eq!(pair.d[0], series[pair.t - 1]);
            }
        }

        #[test]
        fn normalization_maps_fleet_into_unit_interval(
            rows in proptest::collection::vec(
                proptest::collection::vec(-100.0f64..100.0, 4..20),
                1..5,
            ),
        ) {
            let trajs: Vec<Trajectory> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| Trajectory::new(i as u32 + 1, vec![r.clone()]))
                .collect();
            match fit_normalization(&trajs) {
                Ok(norm) => {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for t in &trajs {
                        let mapped = apply_normalization(t, &norm);
                        for &v in &mapped.rows()[0] {
                            lo = lo.min(v);
                            hi = hi.max(v);
                            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                        }
                    }
                    prop_assert_eq!(lo, 0.0);
                    prop_assert_eq!(hi, 1.0);
                }
                Err(CmapssError::ConstantSensor { .. }) => {}
                Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
            }
        }
    }
}
