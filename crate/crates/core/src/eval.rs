//! Ranking metrics and the averaged evaluation protocol.

use rayon::prelude::*;

use crate::dataset::Quadruple;
use crate::error::{Error, Result};
use crate::model::{score, EventLog, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankingMode {
    #[default]
    Raw,
    /// Other true objects of the same `(s, r, τ)` are removed before ranking.
    TimeFiltered,
}

impl RankingMode {
    pub fn name(self) -> &'static str {
        match self {
            RankingMode::Raw => "raw",
            RankingMode::TimeFiltered => "time-filtered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "raw" => Some(RankingMode::Raw),
            "time-filtered" | "filtered" => Some(RankingMode::TimeFiltered),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RankingConfig {
    pub mode: RankingMode,
    pub history_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mrr,
    Hits10,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Mrr, Metric::Hits10];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mrr => "mrr",
            Metric::Hits10 => "hits10",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mrr" => Some(Metric::Mrr),
            "hits10" => Some(Metric::Hits10),
            _ => None,
        }
    }
}

/// Scores of one model on one test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskScores {
    pub mrr: f64,
    pub hits10: f64,
}

impl TaskScores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Mrr => self.mrr,
            Metric::Hits10 => self.hits10,
        }
    }
}

/// 1-based rank of `true_object` with pessimistic ties. Entities in `filter`
/// are not candidates.
pub fn rank_of(logits: &[f64], true_object: usize, filter: &[usize]) -> Result<usize> {
    if true_object >= logits.len() {
        return Err(Error::invalid(format!(
            "true object {true_object} out of range for {} candidates",
            logits.len()
        )));
    }
    if filter.contains(&true_object) {
        return Err(Error::invalid("true object is filtered out"));
    }
    let target = logits[true_object];
    if target.is_nan() {
        return Err(Error::NonFinite("score of the true object is NaN".into()));
    }
    let mut rank = 1;
    for (o, &l) in logits.iter().enumerate() {
        if o != true_object && l >= target && !filter.contains(&o) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// MRR and inclusive Hit@10 over a list of ranks.
pub fn metrics_from_ranks(ranks: &[usize]) -> Result<TaskScores> {
    if ranks.is_empty() {
        return Err(Error::invalid("no ranks to aggregate"));
    }
    if ranks.contains(&0) {
        return Err(Error::invalid("ranks are 1-based"));
    }
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    let hits = ranks.iter().filter(|&&r| r <= 10).count() as f64 / n;
    Ok(TaskScores { mrr, hits10: hits })
}

/// Ranks of every test event. Events are scored in parallel, results keep
/// the input order.
pub fn test_ranks(
    params: &ModelParams,
    log: &EventLog,
    task: usize,
    testset: &[Quadruple],
    rcfg: &RankingConfig,
) -> Result<Vec<usize>> {
    testset
        .par_iter()
        .map(|q| {
            let h = log
                .history(q.subject, q.relation, task, rcfg.history_window)
                .vector(params);
            let logits = score(params, q.subject, q.relation, &h)?;
            match rcfg.mode {
                RankingMode::Raw => rank_of(&logits, q.object, &[]),
                RankingMode::TimeFiltered => {
                    let filter: Vec<usize> = log
                        .objects_at(q.subject, q.relation, q.timestamp)
                        .iter()
                        .copied()
                        .filter(|&o| o != q.object)
                        .collect();
                    rank_of(&logits, q.object, &filter)
                }
            }
        })
        .collect()
}

/// MRR and Hit@10 of `params` on the test events of snapshot `task`.
pub fn task_metrics(
    params: &ModelParams,
    log: &EventLog,
    task: usize,
    testset: &[Quadruple],
    rcfg: &RankingConfig,
) -> Result<TaskScores> {
    if testset.is_empty() {
        return Err(Error::invalid(format!("test set of task {task} is empty")));
    }
    metrics_from_ranks(&test_ranks(params, log, task, testset, rcfg)?)
}

/// Lower-triangular grid of `p_{t,j}` (0-based `j ≤ t`) per metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsMatrix {
    rows: Vec<Vec<TaskScores>>,
}

impl MetricsMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of complete rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends row `t`, which must hold exactly `t + 1` entries in `[0, 1]`.
    pub fn push_row(&mut self, row: Vec<TaskScores>) -> Result<()> {
        let t = self.rows.len();
        if row.len() != t + 1 {
            return Err(Error::shape(format!(
                "row {t} needs {} entries, got {}",
                t + 1,
                row.len()
            )));
        }
        for s in &row {
            for m in Metric::ALL {
                let v = s.get(m);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("{} value {v} outside [0, 1]", m.name())));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn get(&self, t: usize, j: usize, metric: Metric) -> Option<f64> {
        self.rows.get(t)?.get(j).map(|s| s.get(metric))
    }

    pub fn row(&self, t: usize) -> Option<&[TaskScores]> {
        self.rows.get(t).map(Vec::as_slice)
    }

    /// Rebuilds a matrix from `(t, j, metric, value)` cells. Every cell of
    /// every row up to the largest `t` must be present exactly once.
    pub fn from_cells(cells: &[(usize, usize, Metric, f64)]) -> Result<Self> {
        let Some(last) = cells.iter().map(|c| c.0).max() else {
            return Ok(Self::new());
        };
        let mut grid: Vec<Vec<[Option<f64>; 2]>> = (0..=last).map(|t| vec![[None; 2]; t + 1]).collect();
        for &(t, j, m, v) in cells {
            let slot = grid
                .get_mut(t)
                .and_then(|row| row.get_mut(j))
                .ok_or_else(|| Error::shape(format!("cell ({t}, {j}) outside the lower triangle")))?;
            let k = m as usize;
            if slot[k].replace(v).is_some() {
                return Err(Error::invalid(format!("duplicate cell ({t}, {j}, {})", m.name())));
            }
        }
        let mut out = Self::new();
        for (t, row) in grid.into_iter().enumerate() {
            let row = row
                .into_iter()
                .enumerate()
                .map(|(j, [mrr, hits])| match (mrr, hits) {
                    (Some(mrr), Some(hits10)) => Ok(TaskScores { mrr, hits10 }),
                    _ => Err(Error::shape(format!("missing cell ({t}, {j})"))),
                })
                .collect::<Result<Vec<_>>>()?;
            out.push_row(row)?;
        }
        Ok(out)
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize, Metric, f64)> {
        let mut out = Vec::new();
        for (t, row) in self.rows.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                for m in Metric::ALL {
                    out.push((t, j, m, s.get(m)));
                }
            }
        }
        out
    }
}

/// `P_t`: mean of row `t` (0-based) of the matrix.
pub fn average_protocol(matrix: &MetricsMatrix, t: usize, metric: Metric) -> Result<f64> {
    let row = matrix
        .row(t)
        .ok_or_else(|| Error::invalid(format!("row {t} has not been evaluated")))?;
    Ok(row.iter().map(|s| s.get(metric)).sum::<f64>() / row.len() as f64)
}
