//! Consolidation penalties anchored to earlier tasks' parameters.
//!
//! After each task the trainer stores a snapshot `θ*_τ` and a diagonal
//! empirical Fisher `F_τ`. While training task `t` the penalty is
//!
//! ```text
//! λ · Σ_τ Σ_i (w_τ / 2) · F_τ,i · (θ_i − θ*_τ,i)²
//! ```
//!
//! with `w_τ = α^(t−τ)` for the decayed variant, `1` for the uniform one,
//! only the latest task for the previous-only one, and the decayed weights
//! shuffled across tasks for the permuted one.

use std::path::Path;

use rand::seq::{index, SliceRandom};

use crate::codec::{self, Reader};
use crate::dataset::Quadruple;
use crate::error::{Error, Result};
use crate::model::{accumulate_example, EventLog, Grads, ModelParams, ParamLayout, TrainingExample};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EwcVariant {
    /// Only the most recent task, weight 1.
    PrevOnly,
    /// All past tasks with equal weight.
    Uniform,
    /// All past tasks, weight `α^(t−τ)`.
    Decayed,
    /// The decayed weights assigned to past tasks in a seeded random order.
    PermutedDecay,
}

impl EwcVariant {
    pub fn name(self) -> &'static str {
        match self {
            EwcVariant::PrevOnly => "PREV_ONLY",
            EwcVariant::Uniform => "UNIFORM",
            EwcVariant::Decayed => "DECAYED",
            EwcVariant::PermutedDecay => "PERMUTED_DECAY",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "PREV_ONLY" | "PREV" => Some(EwcVariant::PrevOnly),
            "UNIFORM" => Some(EwcVariant::Uniform),
            "DECAYED" => Some(EwcVariant::Decayed),
            "PERMUTED_DECAY" | "PERMUTED" => Some(EwcVariant::PermutedDecay),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegConfig {
    pub lambda: f64,
    pub alpha: f64,
    /// Upper bound on events sampled for each Fisher estimate.
    pub fisher_samples: usize,
    pub seed: u64,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            alpha: 0.9,
            fisher_samples: 1024,
            seed: 0,
        }
    }
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.fisher_samples == 0 {
            return Err(Error::invalid("fisher sample count must be at least 1"));
        }
        Ok(())
    }
}

/// Flattened copy of all parameter tables after task `task`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSnapshot {
    pub task: usize,
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl ParamSnapshot {
    pub fn capture(task: usize, params: &ModelParams) -> Self {
        Self {
            task,
            layout: params.layout(),
            values: params.values().to_vec(),
        }
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        ModelParams::from_values(self.layout, self.values.clone())
    }
}

/// Diagonal empirical Fisher for task `task`, laid out like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherRecord {
    pub task: usize,
    pub values: Vec<f64>,
}

/// Per-task snapshots and Fisher diagonals, oldest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConsolidationStore {
    entries: Vec<(ParamSnapshot, FisherRecord)>,
}

impl ConsolidationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(ParamSnapshot, FisherRecord)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, snapshot: ParamSnapshot, fisher: FisherRecord) -> Result<()> {
        if snapshot.task != fisher.task {
            return Err(Error::invalid("snapshot and Fisher belong to different tasks"));
        }
        if snapshot.values.len() != fisher.values.len() {
            return Err(Error::shape("snapshot and Fisher lengths differ"));
        }
        if let Some((last, _)) = self.entries.last() {
            if snapshot.task <= last.task {
                return Err(Error::invalid(format!(
                    "task {} does not follow stored task {}",
                    snapshot.task, last.task
                )));
            }
            if snapshot.layout != last.layout {
                return Err(Error::shape("snapshot layout differs from the store"));
            }
        }
        if fisher.values.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::invalid("Fisher entries must be finite and non-negative"));
        }
        self.entries.push((snapshot, fisher));
        Ok(())
    }

    /// Binary layout, little-endian: magic `TKGS`, version u32, entity /
    /// relation / dim counts (u64 each), entry count u64, then per entry the
    /// task index (u64), the snapshot and the Fisher diagonal as f64 arrays
    /// of the layout's length.
    pub fn encode(&self, layout: ParamLayout) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"TKGS");
        out.extend_from_slice(&1u32.to_le_bytes());
        crate::model::encode_layout(&mut out, layout);
        codec::put_u64(&mut out, self.entries.len() as u64);
        for (snap, fisher) in &self.entries {
            codec::put_u64(&mut out, snap.task as u64);
            codec::put_f64s(&mut out, &snap.values);
            codec::put_f64s(&mut out, &fisher.values);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::new(bytes);
        if r.take(4) != Some(b"TKGS".as_slice()) {
            return Err("not a consolidation store (bad magic)".into());
        }
        if r.u32() != Some(1) {
            return Err("unsupported store version".into());
        }
        let layout = crate::model::decode_layout(&mut r)
            .ok_or("truncated header")?
            .map_err(|e| e.to_string())?;
        let count = r.u64().ok_or("truncated header")? as usize;
        let mut store = Self::new();
        for _ in 0..count {
            let task = r.u64().ok_or("truncated entry")? as usize;
            let snap = r.f64s(layout.len()).ok_or("truncated snapshot")?;
            let fisher = r.f64s(layout.len()).ok_or("truncated Fisher")?;
            store
                .push(
                    ParamSnapshot {
                        task,
                        layout,
                        values: snap,
                    },
                    FisherRecord {
                        task,
                        values: fisher,
                    },
                )
                .map_err(|e| e.to_string())?;
        }
        if !r.is_empty() {
            return Err("trailing bytes".into());
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path, layout: ParamLayout) -> Result<()> {
        codec::write_all(path, &self.encode(layout)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = codec::read_file(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes).map_err(|m| Error::format(path, m))
    }
}

/// Diagonal empirical Fisher: the mean squared gradient of `log p(o | s, r)`
/// at the true object over `min(N, |D|)` uniformly sampled training events.
pub fn estimate_fisher(
    params: &ModelParams,
    task: usize,
    train: &[Quadruple],
    log: &EventLog,
    history_window: usize,
    cfg: &RegConfig,
) -> Result<FisherRecord> {
    if train.is_empty() {
        return Err(Error::invalid("cannot estimate Fisher on an empty training set"));
    }
    if cfg.fisher_samples == 0 {
        return Err(Error::invalid("fisher sample count must be at least 1"));
    }
    let n = cfg.fisher_samples.min(train.len());
    let mut rng = rng::rng_for(cfg.seed, Stream::Fisher, &[task as u64]);
    let mut picked = index::sample(&mut rng, train.len(), n).into_vec();
    picked.sort_unstable();

    let examples: Vec<TrainingExample> = picked
        .iter()
        .map(|&i| {
            let q = train[i];
            TrainingExample {
                quad: q,
                history: log.history(q.subject, q.relation, task, history_window),
            }
        })
        .collect();
    fisher_from_examples(params, task, &examples)
}

/// Fisher diagonal from an explicit list of examples.
pub fn fisher_from_examples(
    params: &ModelParams,
    task: usize,
    examples: &[TrainingExample],
) -> Result<FisherRecord> {
    if examples.is_empty() {
        return Err(Error::invalid("cannot estimate Fisher from zero examples"));
    }
    // Validates ids.
    for ex in examples {
        crate::model::score_example(params, ex)?;
    }
    let mut fisher = vec![0.0; params.values().len()];
    let mut scratch = Grads::zeros(params.layout());
    for ex in examples {
        scratch.fill_zero();
        accumulate_example(params, ex, &mut scratch, 1.0);
        for (f, g) in fisher.iter_mut().zip(scratch.values()) {
            *f += g * g;
        }
    }
    let inv = 1.0 / examples.len() as f64;
    fisher.iter_mut().for_each(|f| *f *= inv);
    Ok(FisherRecord {
        task,
        values: fisher,
    })
}

/// `λ · α^(t−τ)` for a past task `τ < t`.
pub fn decayed_lambda(lambda: f64, alpha: f64, t: usize, tau: usize) -> Result<f64> {
    if tau >= t {
        return Err(Error::invalid(format!(
            "past task {tau} must precede current task {t}"
        )));
    }
    Ok(lambda * alpha.powi((t - tau) as i32))
}

/// Per-entry weights `w_τ` (before `λ`) for the store entries in order.
pub fn variant_weights(
    store: &ConsolidationStore,
    variant: EwcVariant,
    cfg: &RegConfig,
    t: usize,
) -> Result<Vec<f64>> {
    let entries = store.entries();
    if let Some((snap, _)) = entries.iter().find(|(s, _)| s.task >= t) {
        return Err(Error::invalid(format!(
            "store holds task {} which is not before current task {t}",
            snap.task
        )));
    }
    let decayed: Vec<f64> = entries
        .iter()
        .map(|(s, _)| decayed_lambda(1.0, cfg.alpha, t, s.task))
        .collect::<Result<_>>()?;
    Ok(match variant {
        EwcVariant::Decayed => decayed,
        EwcVariant::Uniform => vec![1.0; entries.len()],
        EwcVariant::PrevOnly => {
            let mut w = vec![0.0; entries.len()];
            if let Some(last) = w.last_mut() {
                *last = 1.0;
            }
            w
        }
        EwcVariant::PermutedDecay => {
            let mut w = decayed;
            let mut rng = rng::rng_for(cfg.seed, Stream::Permutation, &[t as u64]);
            w.shuffle(&mut rng);
            w
        }
    })
}

/// Consolidation penalty and its gradient for the live parameters while
/// training task `t`.
pub fn ewc_penalty(
    params: &ModelParams,
    store: &ConsolidationStore,
    variant: EwcVariant,
    cfg: &RegConfig,
    t: usize,
) -> Result<(f64, Grads)> {
    let weights = variant_weights(store, variant, cfg, t)?;
    let theta = params.values();
    let mut grads = Grads::zeros(params.layout());
    let mut penalty = 0.0;
    for ((snap, fisher), w) in store.entries().iter().zip(weights) {
        if snap.layout != params.layout() || fisher.values.len() != theta.len() {
            return Err(Error::shape(format!(
                "store entry for task {} does not match the live parameters",
                snap.task
            )));
        }
        if w == 0.0 {
            continue;
        }
        let scale = cfg.lambda * w;
        let g = grads.values_mut();
        for i in 0..theta.len() {
            let diff = theta[i] - snap.values[i];
            let fd = fisher.values[i] * diff;
            penalty += 0.5 * scale * fd * diff;
            g[i] += scale * fd;
        }
    }
    Ok((penalty, grads))
}

/// `(λ/2)·‖θ − θ*‖²` and its gradient `λ·(θ − θ*)`.
pub fn l2_penalty(
    params: &ModelParams,
    previous: &ParamSnapshot,
    lambda: f64,
) -> Result<(f64, Grads)> {
    if previous.layout != params.layout() {
        return Err(Error::shape("snapshot layout does not match the live parameters"));
    }
    let mut grads = Grads::zeros(params.layout());
    let mut sq = 0.0;
    for ((g, t), p) in grads
        .values_mut()
        .iter_mut()
        .zip(params.values())
        .zip(&previous.values)
    {
        let diff = t - p;
        sq += diff * diff;
        *g = lambda * diff;
    }
    Ok((0.5 * lambda * sq, grads))
}
