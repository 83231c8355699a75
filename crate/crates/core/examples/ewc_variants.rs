//! Compares the EWC task weightings on the synthetic stream, and shows the
//! decayed weights `λ·α^(t−τ)` for the last task.
//!
//!     cargo run --release --example ewc_variants -- [seed]

use tkg_continual::eval::{average_protocol, Metric};
use tkg_continual::regularizer::{decayed_lambda, EwcVariant};
use tkg_continual::synthetic::{synthetic_stream, synthetic_train_config, SyntheticConfig};
use tkg_continual::trainer::{run_stream, Strategy, StrategyKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let stream = synthetic_stream(&SyntheticConfig { seed, ..SyntheticConfig::default() })?;
    let cfg = synthetic_train_config(seed);
    let last = stream.len() - 1;

    let weights: Vec<String> = (0..last)
        .map(|tau| format!("{:.3}", decayed_lambda(cfg.reg.lambda, cfg.reg.alpha, last, tau).unwrap()))
        .collect();
    println!("decayed weights at the last task: {}", weights.join(" "));

    for variant in [EwcVariant::PrevOnly, EwcVariant::Uniform, EwcVariant::Decayed, EwcVariant::PermutedDecay] {
        let strategy = Strategy::preset(StrategyKind::Dewc).with_ewc_variant(variant)?;
        let out = run_stream(&stream, &strategy, &cfg)?;
        let p = average_protocol(&out.metrics, last, Metric::Mrr)?;
        println!("{:<15} P_{} = {p:.4}", variant.name(), stream.len());
    }
    Ok(())
}
