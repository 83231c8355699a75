//! Command implementations behind the `tkg-continual` binary: stream
//! preparation, training runs, sweeps, and CSV/SVG reports.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! config file, then command-line overrides, in that order of precedence.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{
    build_month_snapshots, build_snapshots, parse_events, SplitRatios, TaskStream, TimeFormat,
    TimeOrigin,
};
use crate::error::{Error, Result};
use crate::eval::{average_protocol, Metric, MetricsMatrix, RankingMode};
use crate::regularizer::EwcVariant;
use crate::trainer::{run_stream_with, RunOptions, Strategy, StrategyKind, TrainConfig};

/// Everything a run needs besides its input and output paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub train: TrainConfig,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            strategies: vec![Strategy::preset(StrategyKind::Full)],
            seeds: vec![0],
        }
    }
}

/// Keys accepted in config files and `--set` overrides.
pub const SETTING_KEYS: &[&str] = &[
    "lambda",
    "alpha",
    "l2_lambda",
    "buffer",
    "batch",
    "dim",
    "min_cluster_size",
    "lr_first",
    "lr_subsequent",
    "epochs",
    "patience",
    "history_window",
    "fisher_samples",
    "ranking",
    "strategy",
    "variant",
    "seeds",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).ok_or_else(|| Error::invalid(format!("bad value {s:?} for {key}"))))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::invalid(format!("{key} needs at least one value")));
    }
    Ok(items)
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.train;
        match key {
            "lambda" => t.reg.lambda = parse_value(key, value)?,
            "alpha" => t.reg.alpha = parse_value(key, value)?,
            "l2_lambda" => t.l2_lambda = parse_value(key, value)?,
            "buffer" => t.buffer_capacity = parse_value(key, value)?,
            "batch" => t.model.batch_size = parse_value(key, value)?,
            "dim" => t.model.dim = parse_value(key, value)?,
            "min_cluster_size" => t.cluster.min_cluster_size = parse_value(key, value)?,
            "lr_first" => t.model.lr_first = parse_value(key, value)?,
            "lr_subsequent" => t.model.lr_subsequent = parse_value(key, value)?,
            "epochs" => t.max_epochs = parse_value(key, value)?,
            "patience" => t.patience = parse_value(key, value)?,
            "history_window" => t.model.history_window = parse_value(key, value)?,
            "fisher_samples" => t.reg.fisher_samples = parse_value(key, value)?,
            "ranking" => {
                t.ranking = RankingMode::parse(value)
                    .ok_or_else(|| Error::invalid(format!("unknown ranking mode {value:?}")))?
            }
            "strategy" => {
                self.strategies = parse_list(key, value, StrategyKind::parse)?
                    .into_iter()
                    .map(Strategy::preset)
                    .collect()
            }
            "variant" => {
                let variant = EwcVariant::parse(value)
                    .ok_or_else(|| Error::invalid(format!("unknown EWC variant {value:?}")))?;
                self.strategies = self
                    .strategies
                    .iter()
                    .map(|s| s.with_ewc_variant(variant))
                    .collect::<Result<_>>()?;
            }
            "seeds" => self.seeds = parse_list(key, value, |s| s.parse().ok())?,
            _ => return Err(Error::invalid(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Defaults, then the config file, then `overrides` in order.
    pub fn from_sources(config: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut settings = Self::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (key, value) in parse_config(&text).map_err(|e| e.context(path.display().to_string()))? {
                settings
                    .set(&key, &value)
                    .map_err(|e| e.context(path.display().to_string()))?;
            }
        }
        for (key, value) in overrides {
            settings.set(key, value)?;
        }
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.strategies.is_empty() {
            return Err(Error::invalid("no strategy selected"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("no seeds given"));
        }
        Ok(())
    }
}

/// `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if !SETTING_KEYS.contains(&key) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("unknown key {key:?}"),
            });
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Snapshot width for `prepare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSpec {
    /// Fixed number of time units (days for dates, ticks otherwise).
    Units(i64),
    /// Calendar months; dates only.
    Months(u32),
}

impl std::str::FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("bad window {s:?}; use e.g. 30 or 1m"));
        if let Some(n) = s.strip_suffix('m') {
            return n.parse().map(WindowSpec::Months).map_err(|_| bad());
        }
        s.parse().map(WindowSpec::Units).map_err(|_| bad())
    }
}

#[derive(Debug, Clone)]
pub struct PrepareArgs {
    pub input: PathBuf,
    pub window: WindowSpec,
    pub time_format: TimeFormat,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub tasks: usize,
    pub entities: usize,
    pub relations: usize,
    pub avg_train: f64,
    pub avg_valid: f64,
    pub avg_test: f64,
}

impl fmt::Display for PrepareSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tasks      {}", self.tasks)?;
        writeln!(f, "entities   {}", self.entities)?;
        writeln!(f, "relations  {}", self.relations)?;
        writeln!(f, "avg train  {:.1}", self.avg_train)?;
        writeln!(f, "avg valid  {:.1}", self.avg_valid)?;
        write!(f, "avg test   {:.1}", self.avg_test)
    }
}

/// Reads a TSV of events and writes the task stream file.
pub fn cmd_prepare(args: &PrepareArgs) -> Result<PrepareSummary> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let parsed = parse_events(&text, args.time_format).map_err(|e| e.context(args.input.display().to_string()))?;
    if parsed.quads.is_empty() {
        return Err(Error::format(&args.input, "no events"));
    }
    let snapshots = match (args.window, parsed.origin) {
        (WindowSpec::Units(n), _) => build_snapshots(&parsed.quads, n, 0)?,
        (WindowSpec::Months(m), TimeOrigin::Date(origin)) => build_month_snapshots(&parsed.quads, origin, m)?,
        (WindowSpec::Months(_), _) => {
            return Err(Error::invalid("month windows need date timestamps"));
        }
    };
    // Windows without events cannot be split; the remaining ones are
    // renumbered so tasks stay contiguous.
    let snapshots: Vec<_> = snapshots
        .into_iter()
        .filter(|s| !s.events.is_empty())
        .enumerate()
        .map(|(i, mut s)| {
            s.index = i;
            s
        })
        .collect();
    let stream = TaskStream::from_snapshots(&parsed.vocab, &snapshots, args.ratios, args.seed)?;
    stream.save(&args.out)?;
    let n = stream.len() as f64;
    let avg = |f: fn(&crate::dataset::Task) -> usize| stream.tasks.iter().map(f).sum::<usize>() as f64 / n;
    Ok(PrepareSummary {
        tasks: stream.len(),
        entities: stream.num_entities,
        relations: stream.num_relations,
        avg_train: avg(|t| t.train.len()),
        avg_valid: avg(|t| t.valid.len()),
        avg_test: avg(|t| t.test.len()),
    })
}

/// One cell of a metrics matrix. Steps are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: String,
    pub seed: u64,
    pub axis_value: String,
    pub train_step: usize,
    pub eval_step: usize,
    pub metric: Metric,
    pub value: f64,
}

pub const CSV_HEADER: [&str; 7] = [
    "strategy",
    "seed",
    "axis_value",
    "train_step",
    "eval_step",
    "metric",
    "value",
];

pub fn matrix_rows(strategy: &str, seed: u64, axis_value: &str, matrix: &MetricsMatrix) -> Vec<ReportRow> {
    matrix
        .cells()
        .into_iter()
        .map(|(t, j, metric, value)| ReportRow {
            strategy: strategy.to_string(),
            seed,
            axis_value: axis_value.to_string(),
            train_step: t + 1,
            eval_step: j + 1,
            metric,
            value,
        })
        .collect()
}

pub fn csv_bytes(rows: &[ReportRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.seed.to_string(),
            r.axis_value.clone(),
            r.train_step.to_string(),
            r.eval_step.to_string(),
            r.metric.name().to_string(),
            r.value.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::invalid(format!("csv buffer: {e}")))
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    crate::codec::write_all(path, &csv_bytes(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&bytes).map_err(|e| e.context(path.display().to_string()))
}

pub fn parse_csv(bytes: &[u8]) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::invalid(format!(
            "schema mismatch: expected header {}",
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        let row = ReportRow {
            strategy: field(0).to_string(),
            seed: field(1).parse().map_err(|_| bad("seed"))?,
            axis_value: field(2).to_string(),
            train_step: field(3).parse().map_err(|_| bad("train_step"))?,
            eval_step: field(4).parse().map_err(|_| bad("eval_step"))?,
            metric: Metric::parse(field(5)).ok_or_else(|| bad("metric"))?,
            value: field(6).parse().map_err(|_| bad("value"))?,
        };
        if row.train_step == 0 || row.eval_step == 0 || row.eval_step > row.train_step {
            return Err(bad("step pair"));
        }
        if !(0.0..=1.0).contains(&row.value) {
            return Err(bad("value"));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Series key: strategy and axis value.
pub type SeriesKey = (String, String);

/// One `(t, j, metric, value)` cell of a metrics matrix, 0-based.
type Cell = (usize, usize, Metric, f64);

/// Rebuilds one metrics matrix per `(strategy, axis_value, seed)`.
pub fn matrices_from_rows(rows: &[ReportRow]) -> Result<BTreeMap<(SeriesKey, u64), MetricsMatrix>> {
    let mut cells: BTreeMap<(SeriesKey, u64), Vec<Cell>> = BTreeMap::new();
    for r in rows {
        cells
            .entry(((r.strategy.clone(), r.axis_value.clone()), r.seed))
            .or_default()
            .push((r.train_step - 1, r.eval_step - 1, r.metric, r.value));
    }
    cells
        .into_iter()
        .map(|(k, c)| {
            MetricsMatrix::from_cells(&c)
                .map(|m| (k.clone(), m))
                .map_err(|e| e.context(format!("{} {} seed {}", k.0 .0, k.0 .1, k.1)))
        })
        .collect()
}

/// Paths and settings of a training run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub stream: PathBuf,
    pub settings: Settings,
    pub out_dir: PathBuf,
}

impl RunSpec {
    fn load_stream(&self) -> Result<TaskStream> {
        if !self.stream.exists() {
            return Err(Error::invalid(format!("stream file {} does not exist", self.stream.display())));
        }
        TaskStream::load(&self.stream)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    /// Stop every run after this many tasks (checkpoints remain resumable).
    pub stop_after: Option<usize>,
}

/// Final-step scores of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub strategy: String,
    pub axis_value: String,
    pub seed: u64,
    pub tasks: usize,
    /// `p_{T,T}` (MRR).
    pub current: f64,
    /// `P_T` (MRR).
    pub average: f64,
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<RunSummary>,
    pub failures: Vec<String>,
    pub csv_path: PathBuf,
    pub diff_table: Option<String>,
}

impl fmt::Display for CommandOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:<14} {:>5} {:>6} {:>8} {:>8}", "strategy", "axis", "seed", "tasks", "current", "average")?;
        for s in &self.summaries {
            writeln!(
                f,
                "{:<10} {:<14} {:>5} {:>6} {:>8.4} {:>8.4}",
                s.strategy, s.axis_value, s.seed, s.tasks, s.current, s.average
            )?;
        }
        if let Some(table) = &self.diff_table {
            writeln!(f)?;
            write!(f, "{table}")?;
        }
        for failure in &self.failures {
            writeln!(f, "failed: {failure}")?;
        }
        write!(f, "metrics written to {}", self.csv_path.display())
    }
}

struct Job {
    strategy: Strategy,
    axis_value: String,
    cfg: TrainConfig,
    seed: u64,
}

impl Job {
    fn label(&self) -> String {
        let mut label = self.strategy.name().to_string();
        if !self.axis_value.is_empty() {
            label.push('_');
            label.push_str(&self.axis_value);
        }
        format!("{label}_seed{}", self.seed)
    }
}

fn run_jobs(stream: &TaskStream, jobs: Vec<Job>, out_dir: &Path, opts: &CommandOptions) -> Vec<Result<(Vec<ReportRow>, RunSummary)>> {
    jobs.into_par_iter()
        .map(|job| {
            let label = job.label();
            let cfg = TrainConfig { seed: job.seed, ..job.cfg };
            let run_opts = RunOptions {
                checkpoint_dir: Some(out_dir.join("runs").join(&label)),
                stop_after: opts.stop_after,
            };
            let out = run_stream_with(stream, &job.strategy, &cfg, &run_opts).map_err(|e| e.context(label))?;
            let rows = matrix_rows(job.strategy.name(), job.seed, &job.axis_value, &out.metrics);
            let tasks = out.metrics.len();
            let (current, average) = match tasks {
                0 => (f64::NAN, f64::NAN),
                n => (
                    out.metrics.get(n - 1, n - 1, Metric::Mrr).unwrap_or(f64::NAN),
                    average_protocol(&out.metrics, n - 1, Metric::Mrr)?,
                ),
            };
            let summary = RunSummary {
                strategy: job.strategy.name().to_string(),
                axis_value: job.axis_value,
                seed: job.seed,
                tasks,
                current,
                average,
            };
            Ok((rows, summary))
        })
        .collect()
}

/// Runs every configured strategy for every seed and writes
/// `metrics.csv` into the output directory.
pub fn cmd_train(spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput> {
    spec.settings.validate()?;
    let stream = spec.load_stream()?;
    let jobs = spec
        .settings
        .strategies
        .iter()
        .flat_map(|&strategy| {
            spec.settings.seeds.iter().map(move |&seed| Job {
                strategy,
                axis_value: String::new(),
                cfg: spec.settings.train,
                seed,
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for result in run_jobs(&stream, jobs, &spec.out_dir, opts) {
        let (r, s) = result?;
        rows.extend(r);
        summaries.push(s);
    }
    let csv_path = spec.out_dir.join("metrics.csv");
    write_csv(&csv_path, &rows)?;
    Ok(CommandOutput {
        rows,
        summaries,
        failures: Vec::new(),
        csv_path,
        diff_table: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Buffer capacities, run for every configured strategy.
    Buffer(Vec<usize>),
    Strategy(Vec<StrategyKind>),
    /// EWC weightings, applied to every configured strategy.
    EwcVariant(Vec<EwcVariant>),
}

impl SweepAxis {
    pub fn parse(axis: &str, values: &str) -> Result<Self> {
        match axis {
            "buffer" => Ok(SweepAxis::Buffer(parse_list("buffer", values, |s| s.parse().ok())?)),
            "strategy" => Ok(SweepAxis::Strategy(parse_list("strategy", values, StrategyKind::parse)?)),
            "ewc-variant" | "variant" => Ok(SweepAxis::EwcVariant(parse_list("variant", values, EwcVariant::parse)?)),
            _ => Err(Error::invalid(format!(
                "unknown sweep axis {axis:?}; use buffer, strategy or ewc-variant"
            ))),
        }
    }
}

/// One run per (axis value, strategy, seed), written to `sweep.csv`. Failed
/// runs are reported and skipped. Buffer sweeps that include both CER and
/// RER also write the CER-minus-RER table to `buffer_diff.txt`.
pub fn cmd_sweep(spec: &RunSpec, axis: &SweepAxis, opts: &CommandOptions) -> Result<CommandOutput> {
    spec.settings.validate()?;
    let stream = spec.load_stream()?;
    let base = spec.settings.train;
    let mut jobs = Vec::new();
    let mut push = |strategy: Strategy, axis_value: String, cfg: TrainConfig| {
        for &seed in &spec.settings.seeds {
            jobs.push(Job {
                strategy,
                axis_value: axis_value.clone(),
                cfg,
                seed,
            });
        }
    };
    match axis {
        SweepAxis::Buffer(sizes) => {
            for &size in sizes {
                for &s in &spec.settings.strategies {
                    push(s, size.to_string(), TrainConfig { buffer_capacity: size, ..base });
                }
            }
        }
        SweepAxis::Strategy(kinds) => {
            for &k in kinds {
                push(Strategy::preset(k), k.name().to_string(), base);
            }
        }
        SweepAxis::EwcVariant(variants) => {
            for &v in variants {
                for &s in &spec.settings.strategies {
                    push(s.with_ewc_variant(v)?, v.name().to_string(), base);
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(Error::invalid("sweep has no runs"));
    }

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for result in run_jobs(&stream, jobs, &spec.out_dir, opts) {
        match result {
            Ok((r, s)) => {
                rows.extend(r);
                summaries.push(s);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if summaries.is_empty() {
        return Err(Error::invalid(format!("every sweep run failed: {}", failures.join("; "))));
    }
    let csv_path = spec.out_dir.join("sweep.csv");
    write_csv(&csv_path, &rows)?;
    let failures_path = spec.out_dir.join("failures.txt");
    if !failures.is_empty() {
        let text = failures.join("\n") + "\n";
        crate::codec::write_all(&failures_path, text.as_bytes()).map_err(|e| Error::io(&failures_path, e))?;
    } else if failures_path.exists() {
        std::fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
    }

    let diff_table = match axis {
        SweepAxis::Buffer(sizes) => buffer_diff_table(sizes, &summaries),
        _ => None,
    };
    if let Some(table) = &diff_table {
        let path = spec.out_dir.join("buffer_diff.txt");
        crate::codec::write_all(&path, table.as_bytes()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(CommandOutput {
        rows,
        summaries,
        failures,
        csv_path,
        diff_table,
    })
}

/// Mean final `P_T` of CER and RER per buffer size and their difference.
pub fn buffer_diff_table(sizes: &[usize], summaries: &[RunSummary]) -> Option<String> {
    let mean_of = |strategy: &str, size: usize| {
        let v: Vec<f64> = summaries
            .iter()
            .filter(|s| s.strategy == strategy && s.axis_value == size.to_string())
            .map(|s| s.average)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:>8} {:>8} {:>8} {:>9}", "buffer", "CER", "RER", "CER-RER");
    let mut any = false;
    for &size in sizes {
        if let (Some(c), Some(r)) = (mean_of("CER", size), mean_of("RER", size)) {
            let _ = writeln!(out, "{size:>8} {c:>8.4} {r:>8.4} {:>+9.4}", c - r);
            any = true;
        }
    }
    any.then_some(out)
}

/// Mean `P_t` per step of one series, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub key: SeriesKey,
    pub seeds: usize,
    /// Entry `t` is the mean `P_{t+1}` (MRR) over seeds that reached it.
    pub average_mrr: Vec<f64>,
    pub average_hits10: Vec<f64>,
    /// Mean `p_{T,T}` (MRR) at the last step.
    pub current_mrr: f64,
}

impl Series {
    pub fn label(&self) -> String {
        if self.key.1.is_empty() || self.key.1 == self.key.0 {
            self.key.0.clone()
        } else {
            format!("{} [{}]", self.key.0, self.key.1)
        }
    }
}

pub fn series_from_rows(rows: &[ReportRow]) -> Result<Vec<Series>> {
    let matrices = matrices_from_rows(rows)?;
    let mut grouped: BTreeMap<SeriesKey, Vec<MetricsMatrix>> = BTreeMap::new();
    for ((key, _), m) in matrices {
        grouped.entry(key).or_default().push(m);
    }
    grouped
        .into_iter()
        .map(|(key, ms)| {
            let steps = ms.iter().map(MetricsMatrix::len).max().unwrap_or(0);
            let mean_at = |t: usize, metric: Metric| -> Result<f64> {
                let vals = ms
                    .iter()
                    .filter(|m| m.len() > t)
                    .map(|m| average_protocol(m, t, metric))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(vals.iter().sum::<f64>() / vals.len() as f64)
            };
            let average_mrr = (0..steps).map(|t| mean_at(t, Metric::Mrr)).collect::<Result<_>>()?;
            let average_hits10 = (0..steps).map(|t| mean_at(t, Metric::Hits10)).collect::<Result<_>>()?;
            let finals: Vec<f64> = ms
                .iter()
                .filter(|m| m.len() == steps)
                .filter_map(|m| m.get(steps - 1, steps - 1, Metric::Mrr))
                .collect();
            Ok(Series {
                key,
                seeds: ms.len(),
                average_mrr,
                average_hits10,
                current_mrr: finals.iter().sum::<f64>() / finals.len() as f64,
            })
        })
        .collect()
}

pub fn report_table(series: &[Series]) -> String {
    let steps = series.iter().map(|s| s.average_mrr.len()).max().unwrap_or(0);
    let width = series.iter().map(|s| s.label().len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<width$} {:>5}", "series", "seeds");
    for t in 1..=steps {
        let _ = write!(out, " {:>7}", format!("P_{t}"));
    }
    let _ = writeln!(out, " {:>8} {:>8} {:>8}", "current", "average", "hits10");
    for s in series {
        let _ = write!(out, "{:<width$} {:>5}", s.label(), s.seeds);
        for t in 0..steps {
            match s.average_mrr.get(t) {
                Some(v) => {
                    let _ = write!(out, " {v:>7.4}");
                }
                None => {
                    let _ = write!(out, " {:>7}", "-");
                }
            }
        }
        let avg = s.average_mrr.last().copied().unwrap_or(f64::NAN);
        let hits = s.average_hits10.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(out, " {:>8.4} {avg:>8.4} {hits:>8.4}", s.current_mrr);
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// 800×500 line chart of mean `P_t` (MRR) against `t`, one polyline per
/// series, with axes and a legend.
pub fn report_svg(series: &[Series]) -> String {
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (70.0, 190.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let steps = series.iter().map(|s| s.average_mrr.len()).max().unwrap_or(1).max(1);
    let x_of = |t: usize| {
        if steps == 1 {
            left + pw / 2.0
        } else {
            left + pw * t as f64 / (steps - 1) as f64
        }
    };
    let y_of = |v: f64| top + ph * (1.0 - v.clamp(0.0, 1.0));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="800" height="500" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + ph);
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"##,
            left,
            left + pw,
            left - 8.0,
            y + 4.0
        );
    }
    for t in 0..steps {
        let x = x_of(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            t + 1
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">task t</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">average MRR P_t</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .average_mrr
            .iter()
            .enumerate()
            .map(|(t, &v)| format!("{:.2},{:.2}", x_of(t), y_of(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for (t, &v) in s.average_mrr.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x_of(t),
                y_of(v)
            );
        }
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 20.0;
        let _ = writeln!(
            out,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape_xml(&s.label())
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub table: String,
    pub table_path: PathBuf,
    pub svg_path: PathBuf,
}

/// Reads metric CSVs and writes `report.txt` and `report.svg`.
pub fn cmd_report(csvs: &[PathBuf], out_dir: &Path) -> Result<ReportOutput> {
    if csvs.is_empty() {
        return Err(Error::invalid("no CSV files given"));
    }
    let mut rows = Vec::new();
    for path in csvs {
        rows.extend(read_csv(path)?);
    }
    if rows.is_empty() {
        return Err(Error::invalid("no metric rows in the given CSV files"));
    }
    let series = series_from_rows(&rows)?;
    let table = report_table(&series);
    let svg = report_svg(&series);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let table_path = out_dir.join("report.txt");
    let svg_path = out_dir.join("report.svg");
    crate::codec::write_all(&table_path, table.as_bytes()).map_err(|e| Error::io(&table_path, e))?;
    crate::codec::write_all(&svg_path, svg.as_bytes()).map_err(|e| Error::io(&svg_path, e))?;
    Ok(ReportOutput {
        table,
        table_path,
        svg_path,
    })
}
