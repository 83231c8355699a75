//! Runs every strategy on the synthetic drifting stream and prints the
//! averaged MRR `P_t` after each task.
//!
//!     cargo run --release --example train_strategies -- [seed]

use tkg_continual::eval::{average_protocol, Metric};
use tkg_continual::synthetic::{synthetic_stream, synthetic_train_config, SyntheticConfig};
use tkg_continual::trainer::{run_stream, Strategy, StrategyKind, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let stream = synthetic_stream(&SyntheticConfig { seed, ..SyntheticConfig::default() })?;
    let seen: usize = stream.tasks.iter().map(|t| t.train.len()).sum();
    let cfg = TrainConfig { buffer_capacity: seen / 20, ..synthetic_train_config(seed) };

    println!("{:<6} {}", "", (1..=stream.len()).map(|t| format!("{:>7}", format!("P_{t}"))).collect::<String>());
    for kind in StrategyKind::ALL {
        let out = run_stream(&stream, &Strategy::preset(kind), &cfg)?;
        let row: String = (0..stream.len())
            .map(|t| format!(" {:>6.4}", average_protocol(&out.metrics, t, Metric::Mrr).unwrap()))
            .collect();
        println!("{:<6}{row}", kind.name());
    }
    Ok(())
}
