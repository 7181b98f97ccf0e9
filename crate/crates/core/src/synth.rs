//! Deterministic synthetic turbofan dataset in the C-MAPSS file layout.
//!
//! Each unit follows an accelerating degradation curve `base + jitter +
//! delta · (t/T)^q` per sensor with per-unit life `T`, curve exponent `q`
//! and baseline jitter, plus Gaussian measurement noise. Several sensor
//! columns are constant, mirroring the benchmark. The generator is seeded,
//! so identical parameters always produce byte-identical files; it exists
//! so the full pipeline can be exercised end to end without the
//! original benchmark files, and it matches their layout: 100 training
//! units / 20631 rows, 100 test units / 13096 rows, 100 truth values.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cmapss::{write_records, CmapssRecord};

/// Per-sensor curve parameters: `(base, delta, noise sd, unit jitter sd)`.
/// `delta == 0` marks a constant column.
const SENSOR_PROFILES: [(f64, f64, f64, f64); 21] = [
    (518.67, 0.0, 0.0, 0.0),      // 1: constant
    (641.82, 3.2, 0.05, 0.08),    // 2
    (1585.29, 10.0, 1.2, 2.0),    // 3
    (1398.91, 9.0, 1.0, 1.5),     // 4
    (14.62, 0.0, 0.0, 0.0),       // 5: constant
    (21.61, 0.0, 0.0, 0.0),       // 6: constant
    (554.52, -4.0, 0.35, 0.5),    // 7
    (2388.02, 0.35, 0.006, 0.01), // 8
    (9056.4, 25.0, 4.0, 6.0),     // 9
    (1.3, 0.0, 0.0, 0.0),         // 10: constant
    (47.25, 0.95, 0.015, 0.025),  // 11
    (521.72, -3.6, 0.3, 0.45),    // 12
    (2388.03, 0.33, 0.005, 0.009),// 13
    (8133.5, 20.0, 5.0, 7.0),     // 14
    (8.4016, 0.105, 0.0018, 0.003),// 15
    (0.03, 0.0, 0.0, 0.0),        // 16: constant
    (392.0, 4.5, 0.8, 1.0),       // 17
    (2388.0, 0.0, 0.0, 0.0),      // 18: constant
    (100.0, 0.0, 0.0, 0.0),       // 19: constant
    (38.95, -0.85, 0.12, 0.15),   // 20
    (23.35, -0.52, 0.07, 0.09),   // 21
];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub seed: u64,
    pub units: usize,
    /// Total rows of the training file; unit lives are adjusted to sum to it.
    pub train_rows: usize,
    /// Total rows of the test file.
    pub test_rows: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 2008,
            units: 100,
            train_rows: 20631,
            test_rows: 13096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub train: Vec<CmapssRecord>,
    pub test: Vec<CmapssRecord>,
    /// Ground-truth RUL per test unit, in unit order.
    pub rul: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub train_file: PathBuf,
    pub test_file: PathBuf,
    pub rul_file: PathBuf,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Draw unit lengths in `[lo, hi]`, then nudge them one cycle at a time
/// until they sum to `total`.
fn unit_lengths(
    rng: &mut ChaCha8Rng,
    units: usize,
    lo: usize,
    hi: usize,
    total: usize,
) -> Vec<usize> {
    let bounds = (lo.saturating_sub(25), hi + 40);
    assert!(
        (units * bounds.0..=units * bounds.1).contains(&total),
        "row total {total} unreachable for {units} units of {}..={} cycles",
        bounds.0,
        bounds.1
    );
    let mut lengths: Vec<usize> = (0..units).map(|_| rng.random_range(lo..=hi)).collect();
    let mut sum: usize = lengths.iter().sum();
    let mut i = 0;
    while sum != total {
        let idx = i % units;
        if sum < total && lengths[idx] < bounds.1 {
            lengths[idx] += 1;
            sum += 1;
        } else if sum > total && lengths[idx] > bounds.0 {
            lengths[idx] -= 1;
            sum -= 1;
        }
        i += 1;
    }
    lengths
}

struct UnitParams {
    /// Full life in cycles.
    life: usize,
    /// Damage curve exponent; larger means a later, sharper ramp.
    exponent: f64,
    /// Share of steady linear wear versus accelerating damage.
    linear_mix: f64,
    /// Per-sensor baseline offset.
    jitter: [f64; 21],
}

impl UnitParams {
    /// Normalized wear in `[0, 1]`: steady drift plus accelerating damage.
    fn wear(&self, tau: f64) -> f64 {
        self.linear_mix * tau + (1.0 - self.linear_mix) * tau.powf(self.exponent)
    }
}

fn draw_unit(rng: &mut ChaCha8Rng, life: usize) -> UnitParams {
    let exponent = rng.random_range(1.9..2.4);
    let linear_mix = rng.random_range(0.2..0.32);
    let mut jitter = [0.0; 21];
    for (j, profile) in SENSOR_PROFILES.iter().enumerate() {
        if profile.3 > 0.0 {
            jitter[j] = Normal::new(0.0, profile.3).unwrap().sample(rng);
        }
    }
    UnitParams {
        life,
        exponent,
        linear_mix,
        jitter,
    }
}

fn emit_unit(
    rng: &mut ChaCha8Rng,
    unit_id: u32,
    params: &UnitParams,
    cycles: usize,
    out: &mut Vec<CmapssRecord>,
) {
    let op_noise = [
        Normal::new(0.0, 0.0015).unwrap(),
        Normal::new(0.0, 0.0003).unwrap(),
    ];
    for t in 1..=cycles {
        let tau = t as f64 / params.life as f64;
        let wear = params.wear(tau);
        let mut sensors = [0.0; 21];
        for (j, &(base, delta, noise, _)) in SENSOR_PROFILES.iter().enumerate() {
            let mut v = base + params.jitter[j] + delta * wear;
            if noise > 0.0 {
                v += Normal::new(0.0, noise).unwrap().sample(rng);
            }
            sensors[j] = round4(v);
        }
        let op_settings = [
            round4(op_noise[0].sample(rng)),
            round4(op_noise[1].sample(rng)),
            100.0,
        ];
        out.push(CmapssRecord {
            unit_id,
            cycle: t as u32,
            op_settings,
            sensors,
        });
    }
}

/// Generate the full dataset for a spec. Deterministic in the spec.
pub fn generate(spec: &SynthSpec) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Training fleet: run-to-failure series.
    let lives = unit_lengths(&mut rng, spec.units, 150, 300, spec.train_rows);
    let mut train = Vec::with_capacity(spec.train_rows);
    for (u, &life) in lives.iter().enumerate() {
        let params = draw_unit(&mut rng, life);
        emit_unit(&mut rng, u as u32 + 1, &params, life, &mut train);
    }

    // Test fleet: truncated series plus ground truth.
    let observed = unit_lengths(&mut rng, spec.units, 90, 170, spec.test_rows);
    let mut test = Vec::with_capacity(spec.test_rows);
    let mut rul = Vec::with_capacity(spec.units);
    for (u, &t_c) in observed.iter().enumerate() {
        let remaining = rng.random_range(10..=130);
        let params = draw_unit(&mut rng, t_c + remaining);
        emit_unit(&mut rng, u as u32 + 1, &params, t_c, &mut test);
        rul.push(remaining as u32);
    }

    SynthDataset { train, test, rul }
}

/// Write `train-FD001.txt`, `test-FD001.txt` and `RUL_FD001.txt` under
/// `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, spec: &SynthSpec) -> io::Result<DatasetPaths> {
    let dataset = generate(spec);
    fs::create_dir_all(dir)?;
    let paths = DatasetPaths {
        train_file: dir.join("train-FD001.txt"),
        test_file: dir.join("test-FD001.txt"),
        rul_file: dir.join("RUL_FD001.txt"),
    };
    write_records(BufWriter::new(File::create(&paths.train_file)?), &dataset.train)?;
    write_records(BufWriter::new(File::create(&paths.test_file)?), &dataset.test)?;
    let mut rul_out = BufWriter::new(File::create(&paths.rul_file)?);
    for r in &dataset.rul {
        writeln!(rul_out, "{r}")?;
    }
    rul_out.flush()?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmapss::{parse_cmapss, parse_rul};
    use std::io::Cursor;

    #[test]
    fn generated_fleet_matches_requested_shape() {
        let spec = SynthSpec {
            seed: 1,
            units: 8,
            train_rows: 1600,
            test_rows: 900,
        };
        let data = generate(&spec);
        assert_eq!(data.train.len(), 1600);
        assert_eq!(data.test.len(), 900);
        assert_eq!(data.rul.len(), 8);
        let units: std::collections::BTreeSet<u32> =
            data.train.iter().map(|r| r.unit_id).collect();
        assert_eq!(units.len(), 8);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec {
            seed: 5,
            units: 4,
            train_rows: 700,
            test_rows: 420,
        };
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.rul, b.rul);
    }

    #[test]
    fn generated_records_parse_back() {
        let spec = SynthSpec {
            seed: 3,
            units: 3,
            train_rows: 520,
            test_rows: 310,
        };
        let data = generate(&spec);
        let mut buf = Vec::new();
        write_records(&mut buf, &data.train).unwrap();
        let reparsed = parse_cmapss(Cursor::new(buf)).unwrap();
        assert_eq!(reparsed, data.train);

        let mut rul_buf = Vec::new();
        for r in &data.rul {
            writeln!(rul_buf, "{r}").unwrap();
        }
        assert_eq!(parse_rul(Cursor::new(rul_buf)).unwrap(), data.rul);
    }

    #[test]
    fn informative_sensors_degrade_monotonically_on_average() {
        let spec = SynthSpec {
            seed: 11,
            units: 2,
            train_rows: 500,
            test_rows: 200,
        };
        let data = generate(&spec);
        let first = &data.train[0];
        let unit_rows: Vec<&CmapssRecord> = data
            .train
            .iter()
            .filter(|r| r.unit_id == first.unit_id)
            .collect();
        let early: f64 = unit_rows[..10].iter().map(|r| r.sensors[1]).sum::<f64>() / 10.0;
        let tail = &unit_rows[unit_rows.len() - 10..];
        let late: f64 = tail.iter().map(|r| r.sensors[1]).sum::<f64>() / 10.0;
        assert!(late > early + 1.0, "sensor 2 should climb: {early} -> {late}");
    }
}
