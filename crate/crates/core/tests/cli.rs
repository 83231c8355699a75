use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tkg_continual::cli::{matrix_rows, read_csv, ReportRow, Settings};
use tkg_continual::dataset::TaskStream;
use tkg_continual::synthetic::{generate_events, to_tsv, SyntheticConfig};
use tkg_continual::trainer::{run_stream, Strategy, StrategyKind};

const QUICK: &[&str] = &["--dim", "6", "--epochs", "2", "--batch", "32", "--buffer", "40"];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tkg-continual"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a three-task event file and prepares a stream from it.
fn prepared(dir: &Path) -> PathBuf {
    let cfg = SyntheticConfig {
        tasks: 3,
        events_per_task: 160,
        groups: 4,
        ..SyntheticConfig::default()
    };
    let events = dir.join("events.tsv");
    std::fs::write(&events, to_tsv(&generate_events(&cfg).unwrap())).unwrap();
    let stream = dir.join("stream.txt");
    ok(&["prepare", "--input", s(&events), "--window", "30", "--out", s(&stream)]);
    stream
}

fn train(stream: &Path, out: &Path, extra: &[&str]) -> Vec<ReportRow> {
    let mut args = vec!["train", "--stream", s(stream), "--out", s(out)];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(extra);
    ok(&args);
    read_csv(&out.join("metrics.csv")).unwrap()
}

#[test]
fn prepare_is_reproducible_and_accepts_other_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let first = std::fs::read(&stream).unwrap();
    let events = dir.path().join("events.tsv");
    ok(&["prepare", "--input", s(&events), "--window", "30", "--out", s(&stream)]);
    assert_eq!(std::fs::read(&stream).unwrap(), first);

    let other = dir.path().join("other.txt");
    ok(&["prepare", "--input", s(&events), "--window", "30", "--ratios", "60/20/20", "--out", s(&other)]);
    let loaded = TaskStream::load(&other).unwrap();
    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded.tasks[0].train.len(), 96);

    let bad = run(&["prepare", "--input", s(&events), "--ratios", "60/20/30", "--out", s(&other)]);
    assert!(!bad.status.success());
}

#[test]
fn month_windows_need_dates() {
    let dir = tempfile::tempdir().unwrap();
    let dated = dir.path().join("dated.tsv");
    std::fs::write(&dated, "a\tr\tb\t2014-01-05\nb\tr\ta\t2014-01-20\na\tr\tc\t2014-02-03\nc\tr\tb\t2014-03-30\n").unwrap();
    let out = dir.path().join("s.txt");
    let summary = ok(&["prepare", "--input", s(&dated), "--window", "1m", "--out", s(&out)]);
    assert!(summary.contains("stream written"), "{summary}");
    assert_eq!(TaskStream::load(&out).unwrap().len(), 3);

    let ticks = dir.path().join("ticks.tsv");
    std::fs::write(&ticks, "a\tr\tb\t0\nb\tr\ta\t10\n").unwrap();
    assert!(!run(&["prepare", "--input", s(&ticks), "--window", "1m", "--out", s(&out)]).status.success());
}

#[test]
fn train_rows_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let rows = train(&stream, &dir.path().join("ft"), &["--strategy", "FT", "--seeds", "3"]);

    let mut settings = Settings::default();
    for (k, v) in QUICK.chunks(2).map(|p| (p[0].trim_start_matches("--"), p[1])) {
        settings.set(k, v).unwrap();
    }
    let cfg = tkg_continual::trainer::TrainConfig {
        seed: 3,
        ..settings.train
    };
    let out = run_stream(&TaskStream::load(&stream).unwrap(), &Strategy::preset(StrategyKind::Ft), &cfg).unwrap();
    assert_eq!(rows, matrix_rows("FT", 3, "", &out.metrics));
    // Two metrics for each cell of a 3-task lower triangle.
    assert_eq!(rows.len(), 2 * 6);
}

#[test]
fn full_writes_as_many_rows_as_fine_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let ft = train(&stream, &dir.path().join("ft"), &["--strategy", "FT"]);
    let full = train(&stream, &dir.path().join("full"), &["--strategy", "FULL"]);
    assert_eq!(ft.len(), full.len());
    assert!(full.iter().all(|r| r.strategy == "FULL"));
}

#[test]
fn interrupted_training_resumes_to_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let fresh = train(&stream, &dir.path().join("fresh"), &["--strategy", "CER,L2"]);

    let out = dir.path().join("resumed");
    let partial = train(&stream, &out, &["--strategy", "CER,L2", "--stop-after", "1"]);
    assert!(partial.iter().all(|r| r.train_step == 1));
    let resumed = train(&stream, &out, &["--strategy", "CER,L2"]);
    assert_eq!(resumed, fresh);
    assert_eq!(
        std::fs::read(out.join("metrics.csv")).unwrap(),
        std::fs::read(dir.path().join("fresh/metrics.csv")).unwrap()
    );
}

#[test]
fn config_files_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# quick run\nstrategy = RER\nseeds = 1, 2\nepochs = 9\n").unwrap();
    let rows = train(&stream, &dir.path().join("o"), &["--config", s(&config), "--seeds", "5"]);
    assert!(rows.iter().all(|r| r.strategy == "RER" && r.seed == 5));

    let bad = run(&["train", "--stream", s(&stream), "--out", s(dir.path()), "--set", "nonsense=1"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

#[test]
fn a_single_value_sweep_equals_train() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let trained = train(&stream, &dir.path().join("t"), &["--strategy", "CER"]);
    let out = dir.path().join("sw");
    let mut args = vec!["sweep", "--stream", s(&stream), "--out", s(&out)];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(&["--strategy", "CER", "--axis", "buffer", "--values", "40"]);
    ok(&args);
    let swept = read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(swept.len(), trained.len());
    for (a, b) in swept.iter().zip(&trained) {
        assert_eq!(a.axis_value, "40");
        assert_eq!((a.train_step, a.eval_step, a.metric, a.value), (b.train_step, b.eval_step, b.metric, b.value));
    }
}

#[test]
fn buffer_sweeps_with_both_replays_write_a_difference_table() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    let out = dir.path().join("sw");
    let mut args = vec!["sweep", "--stream", s(&stream), "--out", s(&out)];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(&["--strategy", "CER,RER", "--axis", "buffer", "--values", "10,40"]);
    let stdout = ok(&args);
    let table = std::fs::read_to_string(out.join("buffer_diff.txt")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(stdout.contains("CER-RER"));
}

#[test]
fn report_draws_one_vertex_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let stream = prepared(dir.path());
    train(&stream, &dir.path().join("t"), &["--strategy", "FT"]);
    let out = dir.path().join("rep");
    ok(&["report", "--out", s(&out), s(&dir.path().join("t/metrics.csv"))]);
    let svg = std::fs::read_to_string(out.join("report.svg")).unwrap();
    assert!(svg.contains(r#"width="800" height="500""#));
    let polylines: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="series""#)).collect();
    assert_eq!(polylines.len(), 1);
    let points = polylines[0].split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
    assert_eq!(points.split_whitespace().count(), 3);
    assert_eq!(svg.matches(r#"class="legend""#).count(), 1);
    assert!(std::fs::read_to_string(out.join("report.txt")).unwrap().contains("FT"));
}

#[test]
fn report_on_an_empty_csv_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "strategy,seed,axis_value,train_step,eval_step,metric,value\n").unwrap();
    let out = dir.path().join("rep");
    let res = run(&["report", "--out", s(&out), s(&empty)]);
    assert!(!res.status.success());
    assert!(!out.join("report.svg").exists());
    assert!(!out.join("report.txt").exists());
}

#[test]
fn missing_inputs_exit_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["train", "--stream", s(&dir.path().join("nope.txt")), "--out", s(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.starts_with("error:") && err.contains("nope.txt"), "{err}");
}
