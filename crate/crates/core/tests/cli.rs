//! End-to-end checks of the `rulkit` binary: subcommand wiring, file
//! artifacts, exit codes and stream discipline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rulkit")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn rulkit")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small dataset + trained model directory shared by the tests.
struct Env {
    data: PathBuf,
    models: PathBuf,
}

fn env_fixture() -> &'static Env {
    static ENV: OnceLock<Env> = OnceLock::new();
    ENV.get_or_init(|| {
        let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let data = root.join("data");
        let models = root.join("models");
        let out = run(&["gen-data", data.to_str().unwrap(), "--seed", "42"]);
        assert!(out.status.success(), "{}", stderr(&out));
        let out = run(&[
            "train",
            data.join("train-FD001.txt").to_str().unwrap(),
            models.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        Env { data, models }
    })
}

#[test]
fn gen_data_writes_benchmark_layout() {
    let env = env_fixture();
    for name in ["train-FD001.txt", "test-FD001.txt", "RUL_FD001.txt"] {
        assert!(env.data.join(name).exists(), "{name} missing");
    }
    let rul = fs::read_to_string(env.data.join("RUL_FD001.txt")).unwrap();
    assert_eq!(rul.lines().count(), 100);
}

#[test]
fn train_writes_models_and_fleet_summary() {
    let env = env_fixture();
    let files: Vec<String> = fs::read_dir(&env.models)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(files.contains(&"fleet.json".to_string()));
    let models = files.iter().filter(|f| f.starts_with("model_")).count();
    assert_eq!(models, 100);

    let fleet: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(env.models.join("fleet.json")).unwrap()).unwrap();
    assert_eq!(fleet["version"], 1);
    assert_eq!(fleet["sensor_ids"].as_array().unwrap().len(), 5);
    assert_eq!(fleet["models"].as_array().unwrap().len(), 100);
}

#[test]
fn retraining_overwrites_deterministically_and_drops_stale_files() {
    let env = env_fixture();
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-retrain");
    fs::create_dir_all(&root).unwrap();
    let stale = root.join("model_999.json");
    fs::write(&stale, "stale").unwrap();

    let train = env.data.join("train-FD001.txt");
    let out = run(&["train", train.to_str().unwrap(), root.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!stale.exists(), "stale model file must be removed");

    let reference = fs::read(root.join("model_7.json")).unwrap();
    let fleet_ref = fs::read(root.join("fleet.json")).unwrap();
    let out = run(&["train", train.to_str().unwrap(), root.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read(root.join("model_7.json")).unwrap(), reference);
    assert_eq!(fs::read(root.join("fleet.json")).unwrap(), fleet_ref);
}

#[test]
fn predict_writes_one_row_per_unit_with_schema() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-predict");
    fs::create_dir_all(&dir).unwrap();
    let out_csv = dir.join("results.csv");
    let out = run(&[
        "predict",
        env.models.to_str().unwrap(),
        env.data.join("test-FD001.txt").to_str().unwrap(),
        out_csv.to_str().unwrap(),
        "--rul-file",
        env.data.join("RUL_FD001.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "engine_id,t_c,rul_estimated,rul_true,censored,selected_ids"
    );
    assert_eq!(lines.count(), 100);

    // Same schema with a different selection size; only the estimates and
    // the selected id lists may change.
    let out_csv_j1 = dir.join("results_j1.csv");
    let out = run(&[
        "predict",
        env.models.to_str().unwrap(),
        env.data.join("test-FD001.txt").to_str().unwrap(),
        out_csv_j1.to_str().unwrap(),
        "--rul-file",
        env.data.join("RUL_FD001.txt").to_str().unwrap(),
        "--j",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text_j1 = fs::read_to_string(&out_csv_j1).unwrap();
    for (a, b) in text.lines().zip(text_j1.lines()).skip(1) {
        let a: Vec<&str> = a.split(',').collect();
        let b: Vec<&str> = b.split(',').collect();
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
        assert_eq!(a[3], b[3]);
        assert_eq!(b[5].split(';').count(), 1);
    }
}

#[test]
fn censored_forecasts_pass_the_horizon_cap_through() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-censored");
    fs::create_dir_all(&dir).unwrap();
    let out_csv = dir.join("results.csv");
    // A one-cycle horizon censors every engine not already at failure.
    let out = run(&[
        "predict",
        env.models.to_str().unwrap(),
        env.data.join("test-FD001.txt").to_str().unwrap(),
        out_csv.to_str().unwrap(),
        "--horizon",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_csv).unwrap();
    let mut censored_rows = 0;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[4] == "true" {
            censored_rows += 1;
            assert_eq!(fields[2], "1", "censored estimate equals the cap: {line}");
        }
    }
    assert!(censored_rows > 0, "one-cycle horizon should censor engines");
}

#[test]
fn thread_cap_does_not_change_results() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-threads");
    fs::create_dir_all(&dir).unwrap();
    let base = dir.join("base.csv");
    let single = dir.join("single.csv");
    let test_file = env.data.join("test-FD001.txt");
    for (path, extra) in [(&base, None), (&single, Some(["--threads", "1"]))] {
        let mut args = vec![
            "predict",
            env.models.to_str().unwrap(),
            test_file.to_str().unwrap(),
            path.to_str().unwrap(),
        ];
        if let Some(extra) = extra {
            args.extend(extra);
        }
        let out = run(&args);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&base).unwrap(), fs::read(&single).unwrap());
}

#[test]
fn predict_rejects_conflicting_training_flags() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-conflict");
    fs::create_dir_all(&dir).unwrap();
    let out = run(&[
        "predict",
        env.models.to_str().unwrap(),
        env.data.join("test-FD001.txt").to_str().unwrap(),
        dir.join("r.csv").to_str().unwrap(),
        "--k",
        "3",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--k conflicts"), "{}", stderr(&out));
}

#[test]
fn evaluate_scores_perfect_results_and_writes_artifacts() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-eval");
    fs::create_dir_all(&dir).unwrap();
    let results = dir.join("results.csv");
    let truth = dir.join("rul.txt");
    let mut csv = String::from("engine_id,t_c,rul_estimated,rul_true,censored,selected_ids\n");
    let mut rul = String::new();
    for i in 1..=10 {
        csv.push_str(&format!("{i},100,{r},{r},false,1;2\n", r = 20 + i));
        rul.push_str(&format!("{}\n", 20 + i));
    }
    fs::write(&results, csv).unwrap();
    fs::write(&truth, rul).unwrap();

    let out = run(&["evaluate", results.to_str().unwrap(), truth.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("Accuracy rate  1.0000"), "{table}");
    assert!(table.contains("Score          0.0000"), "{table}");

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["accuracy_rate"], 1.0);
    assert_eq!(metrics["in_time"], 10);
    let hist = fs::read_to_string(dir.join("histogram.csv")).unwrap();
    assert_eq!(hist, "bin,count\n0,10\n");
}

#[test]
fn evaluate_names_offending_engine_ids() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-eval-bad");
    fs::create_dir_all(&dir).unwrap();
    let results = dir.join("results.csv");
    let truth = dir.join("rul.txt");
    fs::write(
        &results,
        "engine_id,t_c,rul_estimated,rul_true,censored,selected_ids\n\
         1,100,30,,false,1\n7,90,25,,false,1\n",
    )
    .unwrap();
    fs::write(&truth, "30\n").unwrap();
    let out = run(&["evaluate", results.to_str().unwrap(), truth.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains('7'), "{}", stderr(&out));
}

#[test]
fn inspect_reports_codebook_and_counts() {
    let env = env_fixture();
    let out = run(&["inspect", env.models.join("model_1.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("engine id: 1"), "{text}");
    assert!(text.contains("centers (n_L):"), "{text}");
    assert!(text.contains("samples processed:"), "{text}");

    // Replaying the engine's own trajectory prints its state path.
    let out = run(&[
        "inspect",
        env.models.join("model_1.json").to_str().unwrap(),
        "--replay",
        env.data.join("train-FD001.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("state sequence"), "{text}");
}

#[test]
fn zero_quantization_size_yields_one_center_per_pair() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-eps0");
    let models = dir.join("models");
    let out = run(&[
        "train",
        env.data.join("train-FD001.txt").to_str().unwrap(),
        models.to_str().unwrap(),
        "--eps-u",
        "0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = run(&["inspect", models.join("model_1.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let grab = |prefix: &str| -> u64 {
        text.lines()
            .find(|l| l.starts_with(prefix))
            .unwrap_or_else(|| panic!("missing `{prefix}` in {text}"))
            .rsplit(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    let centers = grab("centers (n_L):");
    let samples = grab("samples processed:");
    assert!(centers >= 1);
    assert_eq!(centers, samples, "distinct inputs give one center per pair");

    let fleet: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(models.join("fleet.json")).unwrap()).unwrap();
    assert_eq!(fleet["models"][0]["engine_id"], 1);
    assert_eq!(fleet["models"][0]["pairs"], samples);
}

#[test]
fn inspect_rejects_corrupt_model_files() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-corrupt");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model_1.json");
    fs::write(&path, "{ not json").unwrap();
    let out = run(&["inspect", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!stderr(&out).is_empty());
    assert!(stdout(&out).is_empty(), "errors must not pollute stdout");
}

#[test]
fn missing_models_directory_is_a_clean_error() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-nomodels");
    fs::create_dir_all(&dir).unwrap();
    let out = run(&[
        "predict",
        dir.to_str().unwrap(),
        env.data.join("test-FD001.txt").to_str().unwrap(),
        dir.join("r.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("fleet.json"), "{}", stderr(&out));
}

#[test]
fn config_file_is_honored_and_flags_win() {
    let env = env_fixture();
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-config");
    fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.toml");
    fs::write(&config, "k = 12\nsigma = 1.0\n").unwrap();

    let models = dir.join("models");
    let out = run(&[
        "train",
        env.data.join("train-FD001.txt").to_str().unwrap(),
        models.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--sigma",
        "1.25",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let fleet: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(models.join("fleet.json")).unwrap()).unwrap();
    assert_eq!(fleet["k"], 12);
    assert_eq!(fleet["sigma"], 1.25);
}

#[test]
fn invalid_hyperparameters_exit_nonzero() {
    let env = env_fixture();
    let out = run(&[
        "train",
        env.data.join("train-FD001.txt").to_str().unwrap(),
        "/tmp/ignored-out",
        "--sigma",
        "0",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("sigma"), "{}", stderr(&out));
}
