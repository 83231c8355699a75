use std::collections::BTreeSet;

use tkg_continual::dataset::TaskStream;
use tkg_continual::eval::Metric;
use tkg_continual::synthetic::{synthetic_stream, SyntheticConfig};
use tkg_continual::trainer::{
    run_stream, run_stream_with, Penalty, ReplaySource, RunOptions, Strategy, StrategyKind,
    TrainConfig,
};

fn small_stream() -> TaskStream {
    synthetic_stream(&SyntheticConfig {
        tasks: 3,
        events_per_task: 240,
        groups: 4,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn small_config() -> TrainConfig {
    let mut cfg = TrainConfig {
        max_epochs: 3,
        patience: 2,
        buffer_capacity: 90,
        seed: 11,
        ..TrainConfig::default()
    };
    cfg.model.dim = 8;
    cfg.model.batch_size = 32;
    cfg.model.lr_first = 1e-2;
    cfg.model.lr_subsequent = 1e-3;
    cfg
}

#[test]
fn runs_are_deterministic() {
    let stream = small_stream();
    let strategy = Strategy::preset(StrategyKind::Full);
    let a = run_stream(&stream, &strategy, &small_config()).unwrap();
    let b = run_stream(&stream, &strategy, &small_config()).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.buffer, b.buffer);
    for t in 0..stream.len() {
        assert_eq!(a.models.get(t).unwrap(), b.models.get(t).unwrap());
    }
}

#[test]
fn every_strategy_fills_a_lower_triangular_matrix() {
    let stream = small_stream();
    for kind in StrategyKind::ALL {
        let out = run_stream(&stream, &Strategy::preset(kind), &small_config()).unwrap();
        assert_eq!(out.metrics.len(), stream.len(), "{kind:?}");
        assert_eq!(out.reports.len(), stream.len());
        for t in 0..stream.len() {
            assert_eq!(out.metrics.row(t).unwrap().len(), t + 1);
            assert!(out.metrics.get(t, t + 1, Metric::Mrr).is_none());
        }
    }
}

#[test]
fn replay_memory_holds_only_training_events() {
    let stream = small_stream();
    for kind in [StrategyKind::Rer, StrategyKind::Cer, StrategyKind::Full] {
        let out = run_stream(&stream, &Strategy::preset(kind), &small_config()).unwrap();
        assert_eq!(out.buffer.slots().len(), stream.len());
        assert!(out.buffer.len() <= small_config().buffer_capacity);
        for (t, slot) in out.buffer.slots().iter().enumerate() {
            let train: BTreeSet<_> = stream.tasks[t].train.iter().collect();
            assert!(slot.iter().all(|q| train.contains(q)), "{kind:?} slot {t}");
        }
    }
}

#[test]
fn fine_tuning_keeps_no_memory_and_upper_bound_sees_everything() {
    let stream = small_stream();
    let ft = run_stream(&stream, &Strategy::preset(StrategyKind::Ft), &small_config()).unwrap();
    assert!(ft.buffer.is_empty());
    assert!(ft.store.is_empty());
    assert!(ft.reports.iter().all(|r| r.replay_events == 0));

    let upp = run_stream(&stream, &Strategy::preset(StrategyKind::Upp), &small_config()).unwrap();
    let mut seen = 0;
    for (t, report) in upp.reports.iter().enumerate() {
        seen += stream.tasks[t].train.len();
        assert_eq!(report.train_events + report.replay_events, seen);
    }
    assert!(upp.store.is_empty());
    assert!(upp.buffer.is_empty());
}

#[test]
fn consolidation_store_grows_one_entry_per_task() {
    let stream = small_stream();
    let out = run_stream(&stream, &Strategy::preset(StrategyKind::Dewc), &small_config()).unwrap();
    let tasks: Vec<usize> = out.store.entries().iter().map(|(s, _)| s.task).collect();
    assert_eq!(tasks, vec![0, 1, 2]);
    for (t, (snap, _)) in out.store.entries().iter().enumerate() {
        assert_eq!(&snap.to_params().unwrap(), &out.models.get(t).unwrap());
    }
}

#[test]
fn full_factorizes_into_decayed_ewc_and_cluster_replay() {
    let full = Strategy::preset(StrategyKind::Full);
    assert_eq!(full.penalty, Strategy::preset(StrategyKind::Dewc).penalty);
    assert_eq!(full.replay, Strategy::preset(StrategyKind::Cer).replay);
    let ft = Strategy::preset(StrategyKind::Ft);
    assert_eq!(ft.penalty, Penalty::None);
    assert_eq!(ft.replay, ReplaySource::None);
    let upp = Strategy::preset(StrategyKind::Upp);
    assert!(upp.joint);
    assert_eq!(upp.penalty, Penalty::None);
}

#[test]
fn tie_baseline_replays_recent_tasks() {
    let stream = small_stream();
    let out = run_stream(&stream, &Strategy::preset(StrategyKind::L2), &small_config()).unwrap();
    assert_eq!(out.reports[0].replay_events, 0);
    assert!(out.reports[1..].iter().all(|r| r.replay_events > 0));
}

#[test]
fn a_huge_penalty_pins_later_tasks() {
    let stream = small_stream();
    let drift = |lambda: f64| {
        let mut cfg = small_config();
        cfg.reg.lambda = lambda;
        let out = run_stream(&stream, &Strategy::preset(StrategyKind::Dewc), &cfg).unwrap();
        out.models.get(2).unwrap().distance(&out.models.get(1).unwrap()).unwrap()
    };
    assert!(drift(1e6) < drift(0.0));
}

#[test]
fn interrupted_runs_resume_exactly() {
    let stream = small_stream();
    let strategy = Strategy::preset(StrategyKind::Full);
    let whole = run_stream(&stream, &strategy, &small_config()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        checkpoint_dir: Some(dir.path().to_path_buf()),
        stop_after: Some(1),
    };
    let partial = run_stream_with(&stream, &strategy, &small_config(), &opts).unwrap();
    assert_eq!(partial.metrics.len(), 1);
    let resumed = run_stream_with(
        &stream,
        &strategy,
        &small_config(),
        &RunOptions {
            stop_after: None,
            ..opts
        },
    )
    .unwrap();
    assert_eq!(resumed.metrics, whole.metrics);
    assert_eq!(resumed.buffer, whole.buffer);
    assert_eq!(resumed.store, whole.store);
    assert_eq!(resumed.models.get(2).unwrap(), whole.models.get(2).unwrap());
}

#[test]
fn checkpoints_from_another_configuration_are_refused() {
    let stream = small_stream();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        checkpoint_dir: Some(dir.path().to_path_buf()),
        stop_after: Some(1),
    };
    run_stream_with(&stream, &Strategy::preset(StrategyKind::Ft), &small_config(), &opts).unwrap();
    let mut other = small_config();
    other.seed += 1;
    assert!(run_stream_with(&stream, &Strategy::preset(StrategyKind::Ft), &other, &opts).is_err());
}
