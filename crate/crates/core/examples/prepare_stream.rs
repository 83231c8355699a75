//! Writes a synthetic event file, windows it into a task stream, and prints
//! the stream summary.
//!
//!     cargo run --release --example prepare_stream -- [out_dir]

use std::path::PathBuf;

use tkg_continual::cli::{cmd_prepare, PrepareArgs, WindowSpec};
use tkg_continual::dataset::{SplitRatios, TimeFormat};
use tkg_continual::synthetic::{generate_events, to_tsv, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-stream".into()));
    std::fs::create_dir_all(&out_dir)?;

    let cfg = SyntheticConfig::default();
    let events = generate_events(&cfg)?;
    let tsv = out_dir.join("events.tsv");
    std::fs::write(&tsv, to_tsv(&events))?;

    let args = PrepareArgs {
        input: tsv,
        window: WindowSpec::Units(cfg.window),
        time_format: TimeFormat::Auto,
        ratios: SplitRatios::new(50, 25, 25)?,
        seed: 0,
        out: out_dir.join("stream.txt"),
    };
    let summary = cmd_prepare(&args)?;
    println!("{summary}");
    println!("stream written to {}", args.out.display());
    Ok(())
}
