//! The continual training loop.
//!
//! Each task starts from the previous task's selected parameters, optimizes
//! cross-entropy over the task's training events plus any replayed events,
//! adds the strategy's consolidation penalty, and keeps the epoch with the
//! best validation MRR. After a task the model is evaluated on every test set
//! seen so far and the strategy's memory (Fisher store, replay buffer) is
//! updated from that task's training events only.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::clustering::ClusterConfig;
use crate::dataset::{Quadruple, TaskStream};
use crate::error::{Error, Result};
use crate::eval::{task_metrics, Metric, MetricsMatrix, RankingConfig, RankingMode, TaskScores};
use crate::model::{
    adam_step, init_params, loss_and_grads, read_params, write_params, AdamState, EventLog, Grads,
    ModelConfig, ModelParams, TrainingExample,
};
use crate::regularizer::{
    estimate_fisher, ewc_penalty, l2_penalty, ConsolidationStore, EwcVariant, ParamSnapshot,
    RegConfig,
};
use crate::replay::{select_sample, slot_quotas, update_buffer, MemoryBuffer, Selection};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Ft,
    Rer,
    Cer,
    Ewc,
    Dewc,
    Full,
    L2,
    Upp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::Ft,
        StrategyKind::Rer,
        StrategyKind::Cer,
        StrategyKind::Ewc,
        StrategyKind::Dewc,
        StrategyKind::Full,
        StrategyKind::L2,
        StrategyKind::Upp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Ft => "FT",
            StrategyKind::Rer => "RER",
            StrategyKind::Cer => "CER",
            StrategyKind::Ewc => "EWC",
            StrategyKind::Dewc => "DEWC",
            StrategyKind::Full => "FULL",
            StrategyKind::L2 => "L2",
            StrategyKind::Upp => "UPP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// Penalty term added to the data loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    None,
    Ewc(EwcVariant),
    /// Squared distance to the previous task's parameters.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferSelection {
    Uniform,
    Cluster,
}

/// Where replayed events come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplaySource {
    None,
    /// The slotted memory buffer, filled after each task.
    Buffer(BufferSelection),
    /// A fresh uniform draw of `capacity` events from the training sets of
    /// the last `n` tasks.
    RecentTasks(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    /// First-task rate, then the subsequent rate.
    Decay,
    /// First-task rate throughout.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub penalty: Penalty,
    pub replay: ReplaySource,
    pub lr: LrSchedule,
    /// Retrain from a fresh initialization on all training data so far.
    pub joint: bool,
}

impl Strategy {
    pub fn preset(kind: StrategyKind) -> Self {
        let base = Strategy {
            kind,
            penalty: Penalty::None,
            replay: ReplaySource::None,
            lr: LrSchedule::Decay,
            joint: false,
        };
        match kind {
            StrategyKind::Ft => base,
            StrategyKind::Rer => Strategy {
                replay: ReplaySource::Buffer(BufferSelection::Uniform),
                ..base
            },
            StrategyKind::Cer => Strategy {
                replay: ReplaySource::Buffer(BufferSelection::Cluster),
                ..base
            },
            StrategyKind::Ewc => Strategy {
                penalty: Penalty::Ewc(EwcVariant::Uniform),
                lr: LrSchedule::Constant,
                ..base
            },
            StrategyKind::Dewc => Strategy {
                penalty: Penalty::Ewc(EwcVariant::Decayed),
                lr: LrSchedule::Constant,
                ..base
            },
            StrategyKind::Full => Strategy {
                penalty: Penalty::Ewc(EwcVariant::Decayed),
                replay: ReplaySource::Buffer(BufferSelection::Cluster),
                ..base
            },
            StrategyKind::L2 => Strategy {
                penalty: Penalty::L2,
                replay: ReplaySource::RecentTasks(5),
                ..base
            },
            StrategyKind::Upp => Strategy {
                lr: LrSchedule::Constant,
                joint: true,
                ..base
            },
        }
    }

    /// Same strategy with a different EWC weighting. Errors if the strategy
    /// has no EWC term.
    pub fn with_ewc_variant(self, variant: EwcVariant) -> Result<Self> {
        match self.penalty {
            Penalty::Ewc(_) => Ok(Strategy {
                penalty: Penalty::Ewc(variant),
                ..self
            }),
            _ => Err(Error::invalid(format!(
                "strategy {} has no EWC penalty",
                self.kind.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn uses_fisher(&self) -> bool {
        matches!(self.penalty, Penalty::Ewc(_))
    }

    fn buffer_selection(&self, cluster: ClusterConfig) -> Option<Selection> {
        match self.replay {
            ReplaySource::Buffer(BufferSelection::Uniform) => Some(Selection::Uniform),
            ReplaySource::Buffer(BufferSelection::Cluster) => Some(Selection::Cluster(cluster)),
            _ => None,
        }
    }

    fn learning_rate(&self, model: &ModelConfig, task: usize) -> f64 {
        match (self.lr, task) {
            (_, 0) | (LrSchedule::Constant, _) => model.lr_first,
            (LrSchedule::Decay, _) => model.lr_subsequent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub buffer_capacity: usize,
    /// EWC settings. Its `seed` is replaced by the run seed.
    pub reg: RegConfig,
    /// Coefficient of the L2 penalty. Kept apart from the EWC `λ`, which is
    /// scaled by Fisher values several orders of magnitude below one.
    pub l2_lambda: f64,
    pub cluster: ClusterConfig,
    pub ranking: RankingMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            max_epochs: 30,
            patience: 5,
            buffer_capacity: 3000,
            reg: RegConfig::default(),
            l2_lambda: 0.01,
            cluster: ClusterConfig::default(),
            ranking: RankingMode::Raw,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.reg.validate()?;
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid("L2 coefficient must be finite and non-negative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max epochs must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.cluster.min_cluster_size < 2 {
            return Err(Error::invalid("min cluster size must be at least 2"));
        }
        Ok(())
    }

    fn reg_config(&self) -> RegConfig {
        RegConfig {
            seed: self.seed,
            ..self.reg
        }
    }

    fn ranking_config(&self) -> RankingConfig {
        RankingConfig {
            mode: self.ranking,
            history_window: self.model.history_window,
        }
    }
}

/// Splits one epoch into batches mixing current and replayed items in
/// proportion to their sizes. Every current item appears exactly once; the
/// replay side is reshuffled and cycled as needed.
pub fn compose_batches<T: Copy, R: Rng>(
    current: &[T],
    replay: &[T],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if current.is_empty() && replay.is_empty() {
        return Err(Error::invalid("no events to batch"));
    }
    let mut cur: Vec<T> = current.to_vec();
    cur.shuffle(rng);
    if cur.is_empty() {
        let mut rep = replay.to_vec();
        rep.shuffle(rng);
        return Ok(rep.chunks(batch_size).map(<[T]>::to_vec).collect());
    }

    let total = (cur.len() + replay.len()) as f64;
    let n_cur = ((batch_size as f64 * cur.len() as f64 / total).round() as usize).clamp(1, batch_size);
    let n_rep = if replay.is_empty() { 0 } else { batch_size - n_cur };

    let mut rep_order: Vec<T> = Vec::new();
    let mut rep_pos = 0;
    let mut batches = Vec::with_capacity(cur.len().div_ceil(n_cur));
    for chunk in cur.chunks(n_cur) {
        let take = if chunk.len() == n_cur {
            n_rep
        } else {
            (chunk.len() as f64 * n_rep as f64 / n_cur as f64).round() as usize
        };
        let mut batch = chunk.to_vec();
        for _ in 0..take {
            if rep_pos == rep_order.len() {
                rep_order = replay.to_vec();
                rep_order.shuffle(rng);
                rep_pos = 0;
            }
            batch.push(rep_order[rep_pos]);
            rep_pos += 1;
        }
        batches.push(batch);
    }
    Ok(batches)
}

/// The penalty applied while training one task.
#[derive(Debug, Clone, Copy)]
pub enum PenaltyTerm<'a> {
    None,
    Ewc {
        store: &'a ConsolidationStore,
        variant: EwcVariant,
        reg: RegConfig,
    },
    L2 {
        anchor: &'a ParamSnapshot,
        lambda: f64,
    },
}

impl PenaltyTerm<'_> {
    fn evaluate(&self, params: &ModelParams, task: usize) -> Result<Option<(f64, Grads)>> {
        match *self {
            PenaltyTerm::None => Ok(None),
            PenaltyTerm::Ewc { store, .. } if store.is_empty() => Ok(None),
            PenaltyTerm::Ewc {
                store,
                variant,
                reg,
            } => ewc_penalty(params, store, variant, &reg, task).map(Some),
            PenaltyTerm::L2 { anchor, lambda } => l2_penalty(params, anchor, lambda).map(Some),
        }
    }
}

/// Data for one task. Events are tagged with the snapshot whose history
/// they are scored against.
#[derive(Debug, Clone, Copy)]
pub struct TaskInputs<'a> {
    pub task: usize,
    pub train: &'a [(usize, Quadruple)],
    pub replay: &'a [(usize, Quadruple)],
    pub valid: &'a [Quadruple],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    pub task: usize,
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_valid_mrr: Option<f64>,
    pub train_events: usize,
    pub replay_events: usize,
    pub buffer_events: usize,
}

/// Trains one task and returns the parameters of the epoch with the best
/// validation MRR (the last epoch when there is no validation data).
pub fn train_task(
    mut params: ModelParams,
    inputs: &TaskInputs<'_>,
    penalty: &PenaltyTerm<'_>,
    log: &EventLog,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<(ModelParams, TaskReport)> {
    cfg.validate()?;
    let window = cfg.model.history_window;
    let rcfg = cfg.ranking_config();
    let mut adam = AdamState::for_params(&params, &cfg.model);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;

    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let mut rng = rng::rng_for(cfg.seed, Stream::Batches, &[inputs.task as u64, epoch as u64]);
        let batches = compose_batches(inputs.train, inputs.replay, cfg.model.batch_size, &mut rng)?;
        for batch in &batches {
            let examples: Vec<TrainingExample> = batch
                .iter()
                .map(|&(snap, q)| TrainingExample {
                    quad: q,
                    history: log.history(q.subject, q.relation, snap, window),
                })
                .collect();
            let pen = penalty.evaluate(&params, inputs.task)?;
            let (_, grads) = loss_and_grads(&params, &examples, pen.as_ref().map(|(_, g)| g))?;
            adam_step(&mut params, &grads, &mut adam, lr)?;
        }

        if inputs.valid.is_empty() {
            continue;
        }
        let mrr = task_metrics(&params, log, inputs.task, inputs.valid, &rcfg)?.mrr;
        match &best {
            Some((b, _, _)) if mrr <= *b => {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((mrr, epochs_run, params.clone()));
                since_best = 0;
            }
        }
    }

    let (selected, best_epoch, best_mrr) = match best {
        Some((mrr, epoch, p)) => (p, epoch, Some(mrr)),
        None => (params, epochs_run, None),
    };
    let report = TaskReport {
        task: inputs.task,
        epochs_run,
        best_epoch,
        best_valid_mrr: best_mrr,
        train_events: inputs.train.len(),
        replay_events: inputs.replay.len(),
        buffer_events: 0,
    };
    Ok((selected, report))
}

/// Selected parameters after each task.
#[derive(Debug, Clone)]
pub enum ModelEntry {
    InMemory(ModelParams),
    Stored(PathBuf),
}

#[derive(Debug, Clone, Default)]
pub struct ModelSequence {
    entries: Vec<ModelEntry>,
}

impl ModelSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn get(&self, t: usize) -> Result<ModelParams> {
        match self.entries.get(t) {
            Some(ModelEntry::InMemory(p)) => Ok(p.clone()),
            Some(ModelEntry::Stored(path)) => read_params(path),
            None => Err(Error::invalid(format!("no model for task {t}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for per-task checkpoints. A run finding a checkpoint there
    /// resumes after its last completed task.
    pub checkpoint_dir: Option<PathBuf>,
    /// Stop once this many tasks are complete.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub models: ModelSequence,
    pub metrics: MetricsMatrix,
    pub reports: Vec<TaskReport>,
    pub buffer: MemoryBuffer,
    pub store: ConsolidationStore,
}

pub fn run_stream(stream: &TaskStream, strategy: &Strategy, cfg: &TrainConfig) -> Result<RunOutput> {
    run_stream_with(stream, strategy, cfg, &RunOptions::default())
}

pub fn run_stream_with(
    stream: &TaskStream,
    strategy: &Strategy,
    cfg: &TrainConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    stream.validate()?;
    if stream.is_empty() {
        return Err(Error::invalid("stream has no tasks"));
    }
    let log = EventLog::from_stream(stream);
    let reg = cfg.reg_config();
    let rcfg = cfg.ranking_config();
    let fingerprint = run_fingerprint(stream, strategy, cfg);
    let fresh = || {
        init_params(
            cfg.model.dim,
            stream.num_entities,
            stream.num_relations,
            rng::derive_seed(cfg.seed, Stream::Init, &[]),
        )
    };

    let mut state = match &opts.checkpoint_dir {
        Some(dir) => match Checkpoint::load(dir, &fingerprint)? {
            Some(state) => state,
            None => RunState::new(fresh()?, cfg.buffer_capacity),
        },
        None => RunState::new(fresh()?, cfg.buffer_capacity),
    };
    let last = opts.stop_after.unwrap_or(stream.len()).min(stream.len());

    for t in state.completed..last {
        let task = &stream.tasks[t];
        let train: Vec<(usize, Quadruple)> = if strategy.joint {
            stream.tasks[..=t]
                .iter()
                .flat_map(|tk| tk.train.iter().map(move |q| (tk.index, *q)))
                .collect()
        } else {
            task.train.iter().map(|q| (t, *q)).collect()
        };
        let replay: Vec<(usize, Quadruple)> = match strategy.replay {
            ReplaySource::None => Vec::new(),
            ReplaySource::Buffer(_) => state.buffer.events(),
            ReplaySource::RecentTasks(n) => {
                let pool: Vec<(usize, Quadruple)> = stream.tasks[t.saturating_sub(n)..t]
                    .iter()
                    .flat_map(|tk| tk.train.iter().map(move |q| (tk.index, *q)))
                    .collect();
                uniform_subset(&pool, cfg.buffer_capacity, rng::derive_seed(cfg.seed, Stream::Replay, &[t as u64, 1]))
            }
        };

        let start = if strategy.joint { fresh()? } else { state.params.clone() };
        let anchor = ParamSnapshot::capture(t.saturating_sub(1), &start);
        let penalty = match strategy.penalty {
            Penalty::None => PenaltyTerm::None,
            Penalty::Ewc(variant) => PenaltyTerm::Ewc {
                store: &state.store,
                variant,
                reg,
            },
            Penalty::L2 if t == 0 => PenaltyTerm::None,
            Penalty::L2 => PenaltyTerm::L2 {
                anchor: &anchor,
                lambda: cfg.l2_lambda,
            },
        };
        let inputs = TaskInputs {
            task: t,
            train: &train,
            replay: &replay,
            valid: &task.valid,
        };
        let lr = strategy.learning_rate(&cfg.model, t);
        let (params, mut report) = train_task(start, &inputs, &penalty, &log, cfg, lr)?;

        let row = (0..=t)
            .map(|j| task_metrics(&params, &log, j, &stream.tasks[j].test, &rcfg))
            .collect::<Result<Vec<TaskScores>>>()?;
        state.metrics.push_row(row)?;

        if strategy.uses_fisher() {
            let fisher = estimate_fisher(&params, t, &task.train, &log, cfg.model.history_window, &reg)?;
            state.store.push(ParamSnapshot::capture(t, &params), fisher)?;
        }
        if let Some(selection) = strategy.buffer_selection(cfg.cluster) {
            let quota = slot_quotas(cfg.buffer_capacity, t + 1)[t];
            let seed = rng::derive_seed(cfg.seed, Stream::Replay, &[t as u64]);
            let sample = select_sample(selection, &params, &task.train, quota, seed)?;
            update_buffer(&mut state.buffer, &sample, t + 1, cfg.seed)?;
        }
        report.buffer_events = state.buffer.len();
        state.reports.push(report);
        state.params = params;
        state.completed = t + 1;

        match &opts.checkpoint_dir {
            Some(dir) => {
                let path = Checkpoint::save(dir, &state, &fingerprint)?;
                state.models.push(ModelEntry::Stored(path));
            }
            None => state.models.push(ModelEntry::InMemory(state.params.clone())),
        }
    }

    Ok(RunOutput {
        models: ModelSequence {
            entries: state.models,
        },
        metrics: state.metrics,
        reports: state.reports,
        buffer: state.buffer,
        store: state.store,
    })
}

fn uniform_subset<T: Copy>(pool: &[T], n: usize, seed: u64) -> Vec<T> {
    if n >= pool.len() {
        return pool.to_vec();
    }
    let mut rng = rng::rng_for(seed, Stream::Replay, &[]);
    let mut picked = index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i]).collect()
}

fn run_fingerprint(stream: &TaskStream, strategy: &Strategy, cfg: &TrainConfig) -> String {
    let sizes: Vec<String> = stream
        .tasks
        .iter()
        .map(|t| format!("{}/{}/{}", t.train.len(), t.valid.len(), t.test.len()))
        .collect();
    format!(
        "entities={} relations={} tasks={} seed={} strategy={:?} config={:?}",
        stream.num_entities,
        stream.num_relations,
        sizes.join(","),
        stream.seed,
        strategy,
        cfg
    )
}

struct RunState {
    completed: usize,
    params: ModelParams,
    buffer: MemoryBuffer,
    store: ConsolidationStore,
    metrics: MetricsMatrix,
    reports: Vec<TaskReport>,
    models: Vec<ModelEntry>,
}

impl RunState {
    fn new(params: ModelParams, capacity: usize) -> Self {
        Self {
            completed: 0,
            params,
            buffer: MemoryBuffer::new(capacity),
            store: ConsolidationStore::new(),
            metrics: MetricsMatrix::new(),
            reports: Vec::new(),
            models: Vec::new(),
        }
    }
}

/// Checkpoint files in a run directory. `progress.txt` is written last and
/// names the completed task count, so an interrupted write leaves the
/// previous checkpoint intact.
struct Checkpoint;

const PROGRESS_MAGIC: &str = "#tkg-run";

impl Checkpoint {
    fn model_path(dir: &Path, t: usize) -> PathBuf {
        dir.join(format!("model_{t}.tkgm"))
    }

    fn buffer_path(dir: &Path, t: usize) -> PathBuf {
        dir.join(format!("buffer_{t}.txt"))
    }

    fn store_path(dir: &Path, t: usize) -> PathBuf {
        dir.join(format!("store_{t}.tkgs"))
    }

    fn save(dir: &Path, state: &RunState, fingerprint: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let t = state.completed - 1;
        let model = Self::model_path(dir, t);
        write_params(&model, &state.params)?;
        state.buffer.save(&Self::buffer_path(dir, t))?;
        state.store.save(&Self::store_path(dir, t), state.params.layout())?;

        let mut text = String::new();
        let _ = writeln!(text, "{PROGRESS_MAGIC} completed={}", state.completed);
        let _ = writeln!(text, "fingerprint {fingerprint}");
        for r in &state.reports {
            let mrr = r.best_valid_mrr.map_or("-".to_string(), |v| v.to_string());
            let _ = writeln!(
                text,
                "report {} {} {} {} {} {} {}",
                r.task, r.epochs_run, r.best_epoch, mrr, r.train_events, r.replay_events, r.buffer_events
            );
        }
        for (tt, j, m, v) in state.metrics.cells() {
            let _ = writeln!(text, "cell {tt} {j} {} {v}", m.name());
        }
        let progress = dir.join("progress.txt");
        crate::codec::write_all(&progress, text.as_bytes()).map_err(|e| Error::io(&progress, e))?;

        if t > 0 {
            let _ = std::fs::remove_file(Self::buffer_path(dir, t - 1));
            let _ = std::fs::remove_file(Self::store_path(dir, t - 1));
        }
        Ok(model)
    }

    fn load(dir: &Path, fingerprint: &str) -> Result<Option<RunState>> {
        let progress = dir.join("progress.txt");
        let text = match std::fs::read_to_string(&progress) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&progress, e)),
        };
        let bad = |m: String| Error::format(&progress, m);
        let mut lines = text.lines();
        let completed = lines
            .next()
            .and_then(|h| h.strip_prefix(PROGRESS_MAGIC))
            .and_then(|rest| rest.trim().strip_prefix("completed="))
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&c| c > 0)
            .ok_or_else(|| bad("bad progress header".into()))?;
        let mut reports = Vec::new();
        let mut cells = Vec::new();
        let mut seen_fingerprint = false;
        for line in lines {
            let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
            match kind {
                "fingerprint" => {
                    if rest != fingerprint {
                        return Err(Error::invalid(format!(
                            "checkpoint in {} belongs to a different run configuration",
                            dir.display()
                        )));
                    }
                    seen_fingerprint = true;
                }
                "report" => reports.push(parse_report(rest).ok_or_else(|| bad(format!("bad report line {line:?}")))?),
                "cell" => {
                    let f: Vec<&str> = rest.split(' ').collect();
                    let cell = match f.as_slice() {
                        [t, j, m, v] => (|| Some((t.parse().ok()?, j.parse().ok()?, Metric::parse(m)?, v.parse().ok()?)))(),
                        _ => None,
                    };
                    cells.push(cell.ok_or_else(|| bad(format!("bad cell line {line:?}")))?);
                }
                _ => return Err(bad(format!("unknown line {line:?}"))),
            }
        }
        if !seen_fingerprint {
            return Err(bad("missing fingerprint".into()));
        }
        let metrics = MetricsMatrix::from_cells(&cells)?;
        if metrics.len() != completed || reports.len() != completed {
            return Err(bad("progress file is inconsistent".into()));
        }
        let t = completed - 1;
        let params = read_params(&Self::model_path(dir, t))?;
        let buffer = MemoryBuffer::load(&Self::buffer_path(dir, t))?;
        let store = ConsolidationStore::load(&Self::store_path(dir, t))?;
        let models = (0..completed)
            .map(|k| ModelEntry::Stored(Self::model_path(dir, k)))
            .collect();
        Ok(Some(RunState {
            completed,
            params,
            buffer,
            store,
            metrics,
            reports,
            models,
        }))
    }
}

fn parse_report(s: &str) -> Option<TaskReport> {
    let f: Vec<&str> = s.split(' ').collect();
    let [task, epochs, best, mrr, train, replay, buffer] = f.as_slice() else {
        return None;
    };
    Some(TaskReport {
        task: task.parse().ok()?,
        epochs_run: epochs.parse().ok()?,
        best_epoch: best.parse().ok()?,
        best_valid_mrr: match *mrr {
            "-" => None,
            v => Some(v.parse().ok()?),
        },
        train_events: train.parse().ok()?,
        replay_events: replay.parse().ok()?,
        buffer_events: buffer.parse().ok()?,
    })
}
