use std::collections::HashMap;

use crate::dataset::{Quadruple, TaskStream};

use super::params::ModelParams;

/// Objects that a `(subject, relation)` query was linked to in the history
/// window, with multiplicity. The history feature is the mean of their
/// current entity embeddings, so gradients flow back into those rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    pub objects: Vec<usize>,
}

impl History {
    pub fn new(objects: Vec<usize>) -> Self {
        Self { objects }
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Mean of the object embeddings; the zero vector when empty.
    pub fn vector(&self, params: &ModelParams) -> Vec<f64> {
        let d = params.layout().dim;
        let mut h = vec![0.0; d];
        if self.objects.is_empty() {
            return h;
        }
        for &o in &self.objects {
            for (acc, v) in h.iter_mut().zip(params.entity(o)) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.objects.len() as f64;
        h.iter_mut().for_each(|v| *v *= inv);
        h
    }
}

/// Append-only record of ground-truth events keyed by snapshot.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    by_query: HashMap<(usize, usize), Vec<(usize, usize)>>,
    by_instant: HashMap<(usize, usize, i64), Vec<usize>>,
    len: usize,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every event of every split, each under its task's snapshot index.
    pub fn from_stream(stream: &TaskStream) -> Self {
        let mut log = Self::new();
        for task in &stream.tasks {
            for q in task.train.iter().chain(&task.valid).chain(&task.test) {
                log.push(task.index, q);
            }
        }
        log
    }

    pub fn push(&mut self, snapshot: usize, q: &Quadruple) {
        self.by_query
            .entry((q.subject, q.relation))
            .or_default()
            .push((snapshot, q.object));
        self.by_instant
            .entry((q.subject, q.relation, q.timestamp))
            .or_default()
            .push(q.object);
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Objects of `(s, r, ·)` events in snapshots `t − window ..= t − 1`.
    pub fn history(&self, s: usize, r: usize, t: usize, window: usize) -> History {
        let lo = t.saturating_sub(window);
        let objects = self
            .by_query
            .get(&(s, r))
            .map(|evs| {
                evs.iter()
                    .filter(|(snap, _)| *snap >= lo && *snap < t)
                    .map(|&(_, o)| o)
                    .collect()
            })
            .unwrap_or_default();
        History { objects }
    }

    /// All true objects of `(s, r)` at exactly timestamp `tau`.
    pub fn objects_at(&self, s: usize, r: usize, tau: i64) -> &[usize] {
        self.by_instant
            .get(&(s, r, tau))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// The history feature `h(s, r)` for snapshot `t`.
pub fn history_vector(
    params: &ModelParams,
    log: &EventLog,
    s: usize,
    r: usize,
    t: usize,
    window: usize,
) -> Vec<f64> {
    log.history(s, r, t, window).vector(params)
}
