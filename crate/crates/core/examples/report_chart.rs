//! Trains FT and FULL through the command layer and renders the text table
//! and SVG chart of `P_t`.
//!
//!     cargo run --release --example report_chart -- [out_dir]

use std::path::PathBuf;

use tkg_continual::cli::{cmd_report, cmd_train, CommandOptions, RunSpec, Settings};
use tkg_continual::synthetic::{synthetic_stream, synthetic_train_config, SyntheticConfig};
use tkg_continual::trainer::{Strategy, StrategyKind, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-report".into()));
    std::fs::create_dir_all(&out_dir)?;
    let stream = synthetic_stream(&SyntheticConfig::default())?;
    let stream_path = out_dir.join("stream.txt");
    stream.save(&stream_path)?;

    let spec = RunSpec {
        stream: stream_path,
        settings: Settings {
            train: TrainConfig { buffer_capacity: 250, ..synthetic_train_config(0) },
            strategies: vec![Strategy::preset(StrategyKind::Ft), Strategy::preset(StrategyKind::Full)],
            seeds: vec![0],
        },
        out_dir: out_dir.join("train"),
    };
    let trained = cmd_train(&spec, &CommandOptions::default())?;
    let report = cmd_report(&[trained.csv_path], &out_dir)?;
    print!("{}", report.table);
    println!("chart written to {}", report.svg_path.display());
    Ok(())
}
