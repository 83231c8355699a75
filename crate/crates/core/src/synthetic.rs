//! A small drifting event stream for experiments and tests.
//!
//! Entities form `groups × slots` blocks; entity `g·slots + k` has group `g`
//! and slot `k`. Task `t` draws subjects from a window of groups that slides
//! with `t` (by default consecutive tasks share one group),
//! and each event's object sits in the subject's group at slot
//! `(r + t·rotation) mod slots`, so the meaning of every relation rotates
//! from task to task. A fraction of events get a uniformly random object from
//! the task's groups instead.

use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::dataset::{build_snapshots, Quadruple, SplitRatios, TaskStream, Vocab};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub groups: usize,
    pub slots: usize,
    pub relations: usize,
    pub tasks: usize,
    pub events_per_task: usize,
    /// Subject groups active in each task.
    pub groups_per_task: usize,
    /// Offset between the first groups of consecutive tasks. Values below
    /// `groups_per_task` make neighbouring tasks share subjects.
    pub group_stride: usize,
    /// Slot shift applied to every relation per task.
    pub rotation: usize,
    /// Fraction of events with a random object.
    pub noise: f64,
    /// Relation `r` is drawn with weight `(r + 1)^-skew`.
    pub relation_skew: f64,
    /// Time units per task.
    pub window: i64,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            groups: 10,
            slots: 10,
            relations: 10,
            tasks: 5,
            events_per_task: 2000,
            groups_per_task: 2,
            group_stride: 1,
            rotation: 3,
            noise: 0.2,
            relation_skew: 0.0,
            window: 30,
            ratios: SplitRatios {
                train: 50,
                valid: 25,
                test: 25,
            },
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn num_entities(&self) -> usize {
        self.groups * self.slots
    }

    fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.slots == 0 || self.relations == 0 || self.tasks == 0 {
            return Err(Error::invalid("synthetic stream dimensions must be positive"));
        }
        if self.groups_per_task == 0 || self.groups_per_task > self.groups {
            return Err(Error::invalid("groups per task must lie in 1..=groups"));
        }
        if self.events_per_task == 0 {
            return Err(Error::invalid("events per task must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::invalid("noise must lie in [0, 1]"));
        }
        if !self.relation_skew.is_finite() || self.relation_skew < 0.0 {
            return Err(Error::invalid("relation skew must be finite and non-negative"));
        }
        if self.window <= 0 {
            return Err(Error::invalid("window must be positive"));
        }
        self.ratios.validate()
    }

    /// Subject groups of task `t`.
    pub fn task_groups(&self, t: usize) -> Vec<usize> {
        (0..self.groups_per_task)
            .map(|i| (t * self.group_stride + i) % self.groups)
            .collect()
    }

    /// Noise-free object of `(s, r)` in task `t`.
    pub fn true_object(&self, s: usize, r: usize, t: usize) -> usize {
        let group = s / self.slots;
        group * self.slots + (r + t * self.rotation) % self.slots
    }
}

/// Training settings sized for the default synthetic stream: `d = 32`,
/// learning rates `1e-2` then `1e-3`, batches of 32. Other values are the
/// library defaults.
pub fn synthetic_train_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    cfg.model.dim = 32;
    cfg.model.lr_first = 1e-2;
    cfg.model.lr_subsequent = 1e-3;
    cfg.model.batch_size = 32;
    cfg
}

/// Vocabulary `e0..` / `r0..` with ids equal to the numeric suffix.
pub fn synthetic_vocab(cfg: &SyntheticConfig) -> Vocab {
    let mut vocab = Vocab::default();
    for e in 0..cfg.num_entities() {
        vocab.intern_entity(&format!("e{e}"));
    }
    for r in 0..cfg.relations {
        vocab.intern_relation(&format!("r{r}"));
    }
    vocab
}

/// Timestamped events of every task, task by task.
pub fn generate_events(cfg: &SyntheticConfig) -> Result<Vec<Quadruple>> {
    cfg.validate()?;
    let weights: Vec<f64> = (0..cfg.relations)
        .map(|r| ((r + 1) as f64).powf(-cfg.relation_skew))
        .collect();
    let relation_dist = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = Vec::with_capacity(cfg.tasks * cfg.events_per_task);
    for t in 0..cfg.tasks {
        let mut rng = rng::rng_for(cfg.seed, Stream::Synthetic, &[t as u64]);
        let groups = cfg.task_groups(t);
        for _ in 0..cfg.events_per_task {
            let g = groups[rng.gen_range(0..groups.len())];
            let s = g * cfg.slots + rng.gen_range(0..cfg.slots);
            let r = relation_dist.sample(&mut rng);
            let o = if rng.gen_bool(cfg.noise) {
                groups[rng.gen_range(0..groups.len())] * cfg.slots + rng.gen_range(0..cfg.slots)
            } else {
                cfg.true_object(s, r, t)
            };
            let ts = t as i64 * cfg.window + rng.gen_range(0..cfg.window);
            out.push(Quadruple::new(s, r, o, ts));
        }
    }
    Ok(out)
}

/// The generated events as `subject relation object tick` TSV lines.
pub fn to_tsv(events: &[Quadruple]) -> String {
    let mut out = String::new();
    for q in events {
        let _ = writeln!(out, "e{}\tr{}\te{}\t{}", q.subject, q.relation, q.object, q.timestamp);
    }
    out
}

/// The generated stream split into tasks.
pub fn synthetic_stream(cfg: &SyntheticConfig) -> Result<TaskStream> {
    let events = generate_events(cfg)?;
    let vocab = synthetic_vocab(cfg);
    let snapshots = build_snapshots(&events, cfg.window, 0)?;
    TaskStream::from_snapshots(&vocab, &snapshots, cfg.ratios, cfg.seed)
}
