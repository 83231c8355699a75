//! Trains on the first synthetic task, clusters its training events in
//! `[e_s : e_o]` space, and compares cluster-based and uniform samples.
//!
//!     cargo run --release --example cluster_replay

use std::collections::BTreeMap;

use tkg_continual::clustering::{hdbscan_fit, ClusterConfig};
use tkg_continual::replay::{embed_events, select_points_cer, select_points_rer};
use tkg_continual::synthetic::{synthetic_stream, synthetic_train_config, SyntheticConfig};
use tkg_continual::trainer::{run_stream_with, RunOptions, Strategy, StrategyKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stream = synthetic_stream(&SyntheticConfig::default())?;
    let cfg = synthetic_train_config(0);
    let opts = RunOptions { checkpoint_dir: None, stop_after: Some(1) };
    let out = run_stream_with(&stream, &Strategy::preset(StrategyKind::Ft), &cfg, &opts)?;
    let params = out.models.get(0)?;

    let train = &stream.tasks[0].train;
    let points = embed_events(&params, train)?;
    let result = hdbscan_fit(&points, ClusterConfig::default())?;
    println!(
        "{} events: {} clusters, {} noise points",
        train.len(),
        result.num_clusters(),
        result.noise_count()
    );

    let s = 50;
    let cer = select_points_cer(&result, &points, s, 0)?;
    let rer = select_points_rer(train, s, 0);
    let spread = |sample: &[tkg_continual::dataset::Quadruple]| {
        let mut by_object = BTreeMap::new();
        for q in sample {
            *by_object.entry(q.object).or_insert(0usize) += 1;
        }
        by_object.len()
    };
    println!("CER picked {} events covering {} objects", cer.len(), spread(&cer));
    println!("RER picked {} events covering {} objects", rer.len(), spread(&rer));
    Ok(())
}
