use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tkg_continual::cli::{
    cmd_prepare, cmd_report, cmd_sweep, cmd_train, CommandOptions, PrepareArgs, RunSpec, Settings,
    SweepAxis, WindowSpec,
};
use tkg_continual::dataset::{SplitRatios, TimeFormat};

#[derive(Parser)]
#[command(name = "tkg-continual", version, about = "Continual training for temporal knowledge-graph completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Window a TSV of events into a task stream file.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        /// Snapshot width: time units (e.g. 30) or calendar months (e.g. 1m).
        #[arg(long, default_value = "1m")]
        window: WindowSpec,
        #[arg(long, default_value = "50/25/25")]
        ratios: SplitRatios,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// auto, date, or tick:<unit>.
        #[arg(long, default_value = "auto", value_parser = parse_time_format)]
        time_format: TimeFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train strategies over a stream and write metrics.csv.
    Train(RunArgs),
    /// Repeat training along one axis and write sweep.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// buffer, strategy, or ewc-variant.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
    },
    /// Summarize metric CSVs as a text table and an SVG chart.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated strategies (FT, RER, CER, EWC, DEWC, FULL, L2, UPP).
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    buffer: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    min_cluster_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    /// EWC weighting: PREV_ONLY, UNIFORM, DECAYED, PERMUTED_DECAY.
    #[arg(long)]
    variant: Option<String>,
    /// raw or time-filtered.
    #[arg(long)]
    ranking: Option<String>,
    /// Any other setting as key=value; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

impl RunArgs {
    fn spec(&self) -> Result<(RunSpec, CommandOptions), String> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags = [
            ("strategy", &self.strategy),
            ("seeds", &self.seeds),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("buffer", &self.buffer),
            ("batch", &self.batch),
            ("dim", &self.dim),
            ("min_cluster_size", &self.min_cluster_size),
            ("epochs", &self.epochs),
            ("patience", &self.patience),
            ("variant", &self.variant),
            ("ranking", &self.ranking),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                overrides.push((key.to_string(), v.clone()));
            }
        }
        let settings = Settings::from_sources(self.config.as_deref(), &overrides).map_err(|e| e.to_string())?;
        let spec = RunSpec {
            stream: self.stream.clone(),
            settings,
            out_dir: self.out.clone(),
        };
        let opts = CommandOptions {
            stop_after: self.stop_after,
        };
        Ok((spec, opts))
    }
}

fn parse_time_format(s: &str) -> Result<TimeFormat, String> {
    match s {
        "auto" => Ok(TimeFormat::Auto),
        "date" => Ok(TimeFormat::Date),
        _ => s
            .strip_prefix("tick:")
            .and_then(|u| u.parse().ok())
            .map(|unit| TimeFormat::Tick { unit })
            .ok_or_else(|| format!("bad time format {s:?}; use auto, date or tick:<unit>")),
    }
}

fn run(cli: Cli) -> Result<String, String> {
    match cli.command {
        Command::Prepare {
            input,
            window,
            ratios,
            seed,
            time_format,
            out,
        } => {
            let args = PrepareArgs {
                input,
                window,
                time_format,
                ratios,
                seed,
                out,
            };
            let summary = cmd_prepare(&args).map_err(|e| e.to_string())?;
            Ok(format!("{summary}\nstream written to {}", args.out.display()))
        }
        Command::Train(run) => {
            let (spec, opts) = run.spec()?;
            cmd_train(&spec, &opts).map(|o| o.to_string()).map_err(|e| e.to_string())
        }
        Command::Sweep { run, axis, values } => {
            let (spec, opts) = run.spec()?;
            let axis = SweepAxis::parse(&axis, &values).map_err(|e| e.to_string())?;
            cmd_sweep(&spec, &axis, &opts).map(|o| o.to_string()).map_err(|e| e.to_string())
        }
        Command::Report { out, csv } => {
            let report = cmd_report(&csv, &out).map_err(|e| e.to_string())?;
            Ok(format!(
                "{}\ntable written to {}\nchart written to {}",
                report.table.trim_end(),
                report.table_path.display(),
                report.svg_path.display()
            ))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
