//! Sweeps the buffer size for cluster-based and uniform replay through the
//! command layer and prints the CER-minus-RER table.
//!
//!     cargo run --release --example buffer_sweep -- [out_dir]

use std::path::PathBuf;

use tkg_continual::cli::{cmd_sweep, CommandOptions, RunSpec, Settings, SweepAxis};
use tkg_continual::synthetic::{synthetic_stream, synthetic_train_config, SyntheticConfig};
use tkg_continual::trainer::{Strategy, StrategyKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-sweep".into()));
    std::fs::create_dir_all(&out_dir)?;
    let stream = synthetic_stream(&SyntheticConfig::default())?;
    let stream_path = out_dir.join("stream.txt");
    stream.save(&stream_path)?;

    let seen: usize = stream.tasks.iter().map(|t| t.train.len()).sum();
    let sizes = [seen / 50, seen / 20, seen / 10, seen / 2];
    let spec = RunSpec {
        stream: stream_path,
        settings: Settings {
            train: synthetic_train_config(0),
            strategies: vec![Strategy::preset(StrategyKind::Cer), Strategy::preset(StrategyKind::Rer)],
            seeds: vec![0, 1],
        },
        out_dir,
    };
    let out = cmd_sweep(&spec, &SweepAxis::Buffer(sizes.to_vec()), &CommandOptions::default())?;
    println!("{out}");
    Ok(())
}
