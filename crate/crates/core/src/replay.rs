//! Fixed-capacity replay memory with one slot per task seen so far.
//!
//! After task `t` the capacity is divided into `t` equal quotas (remainder to
//! the newest tasks); older slots are shrunk by uniform eviction and the new
//! slot is filled by either uniform sampling or cluster-based selection.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;

use crate::clustering::{find_exemplars, hdbscan_fit, ClusterConfig, ClusterResult, PointSet};
use crate::dataset::{format_event_record, parse_event_record, Quadruple, SplitKind};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{self, Stream};

/// How a task's training events are sampled into its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Uniform sampling without replacement.
    Uniform,
    /// HDBSCAN over `[e_s : e_o]`, then nearest-to-exemplar points with
    /// larger clusters first.
    Cluster(ClusterConfig),
}

/// Slot sizes oldest-to-newest: `⌊capacity / t⌋` each, with the remainder
/// handed out one apiece to the most recent tasks.
pub fn slot_quotas(capacity: usize, tasks: usize) -> Vec<usize> {
    if tasks == 0 {
        return Vec::new();
    }
    let base = capacity / tasks;
    let extra = capacity % tasks;
    (0..tasks)
        .map(|i| base + usize::from(i >= tasks - extra))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBuffer {
    capacity: usize,
    slots: Vec<Vec<Quadruple>>,
}

impl MemoryBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            slots: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Slot `i` holds events of task `i`.
    pub fn slots(&self) -> &[Vec<Quadruple>] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored event with the index of the task it came from.
    pub fn events(&self) -> Vec<(usize, Quadruple)> {
        self.slots
            .iter()
            .enumerate()
            .flat_map(|(t, slot)| slot.iter().map(move |q| (t, *q)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#tkg-buffer capacity={} slots={}",
            self.capacity,
            self.slots.len()
        );
        for (t, slot) in self.slots.iter().enumerate() {
            let _ = writeln!(out, "slot {t} {}", slot.len());
            for q in slot {
                out.push_str(&format_event_record(t, SplitKind::Train, q));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("missing buffer header")?;
        let mut fields = header.split_ascii_whitespace();
        if fields.next() != Some("#tkg-buffer") {
            return Err("not a buffer checkpoint".into());
        }
        let mut capacity = None;
        let mut n_slots = None;
        for f in fields {
            match f.split_once('=') {
                Some(("capacity", v)) => capacity = v.parse::<usize>().ok(),
                Some(("slots", v)) => n_slots = v.parse::<usize>().ok(),
                _ => return Err(format!("bad header field {f:?}")),
            }
        }
        let capacity = capacity.ok_or("header lacks capacity")?;
        let n_slots = n_slots.ok_or("header lacks slots")?;
        let mut slots = Vec::with_capacity(n_slots);
        for t in 0..n_slots {
            let line = lines.next().ok_or("truncated buffer checkpoint")?;
            let count = match line.split_ascii_whitespace().collect::<Vec<_>>()[..] {
                ["slot", idx, count] if idx.parse::<usize>().ok() == Some(t) => count
                    .parse::<usize>()
                    .map_err(|_| format!("bad slot size in {line:?}"))?,
                _ => return Err(format!("expected slot {t} header, got {line:?}")),
            };
            let mut slot = Vec::with_capacity(count);
            for _ in 0..count {
                let line = lines.next().ok_or("truncated buffer checkpoint")?;
                match parse_event_record(line) {
                    Some((task, _, q)) if task == t => slot.push(q),
                    _ => return Err(format!("bad event record {line:?} in slot {t}")),
                }
            }
            slots.push(slot);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err("trailing content after last slot".into());
        }
        let buffer = Self { capacity, slots };
        if buffer.len() > capacity {
            return Err(format!(
                "buffer holds {} events, capacity {capacity}",
                buffer.len()
            ));
        }
        Ok(buffer)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::codec::write_all(path, self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|m| Error::format(path, m))
    }
}

/// Rows `[e_s : e_o]` of the current entity embeddings, one per event.
pub fn embed_events(params: &ModelParams, events: &[Quadruple]) -> Result<PointSet> {
    let layout = params.layout();
    let mut coords = Vec::with_capacity(events.len() * 2 * layout.dim);
    for q in events {
        if q.subject >= layout.num_entities || q.object >= layout.num_entities {
            return Err(Error::invalid(format!(
                "event {q:?} references an entity outside the model ({} entities)",
                layout.num_entities
            )));
        }
        coords.extend_from_slice(params.entity(q.subject));
        coords.extend_from_slice(params.entity(q.object));
    }
    PointSet::new(2 * layout.dim, coords)?.with_events(events.to_vec())
}

/// Uniform sample of `min(s, |events|)` events without replacement, kept in
/// source order.
pub fn select_points_rer(events: &[Quadruple], s: usize, seed: u64) -> Vec<Quadruple> {
    let n = events.len();
    if s >= n {
        return events.to_vec();
    }
    let mut rng = rng::rng_for(seed, Stream::Replay, &[n as u64, s as u64]);
    let mut picked = index::sample(&mut rng, n, s).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| events[i]).collect()
}

/// Per-cluster quota `⌈|C_i| · s / Σ_j |C_j|⌉`.
pub fn cluster_quota(cluster_size: usize, total: usize, s: usize) -> usize {
    if total == 0 {
        return 0;
    }
    (cluster_size * s).div_ceil(total)
}

/// Point indices chosen by the cluster-replay queue: each cluster enters a
/// FIFO queue (largest first) with its exemplar-ordered members and quota;
/// every pop takes the front member and re-enqueues the rest while quota
/// and members remain, until `s` points are chosen or the queue drains.
pub fn select_indices_cer(
    result: &ClusterResult,
    points: &PointSet,
    s: usize,
) -> Result<Vec<usize>> {
    let total = result.clustered_count();
    let mut queue: VecDeque<(VecDeque<usize>, usize)> = VecDeque::new();
    for i in 0..result.num_clusters() {
        let quota = cluster_quota(result.clusters[i].members.len(), total, s);
        let members = find_exemplars(result, points, i, quota)?;
        queue.push_back((members.into(), quota));
    }
    let mut chosen = Vec::with_capacity(s.min(total));
    while chosen.len() < s {
        let Some((mut members, quota)) = queue.pop_front() else {
            break;
        };
        let Some(front) = members.pop_front() else {
            continue;
        };
        chosen.push(front);
        if quota > 1 && !members.is_empty() {
            queue.push_back((members, quota - 1));
        }
    }
    Ok(chosen)
}

/// Cluster-based selection over `points` (which must carry their source
/// events). Falls back to uniform sampling when every point is noise.
pub fn select_points_cer(
    result: &ClusterResult,
    points: &PointSet,
    s: usize,
    seed: u64,
) -> Result<Vec<Quadruple>> {
    let events = points
        .events()
        .ok_or_else(|| Error::invalid("point set carries no source events"))?;
    if result.labels.len() != points.len() {
        return Err(Error::shape(format!(
            "clustering covers {} points, point set has {}",
            result.labels.len(),
            points.len()
        )));
    }
    if result.num_clusters() == 0 {
        return Ok(select_points_rer(events, s, seed));
    }
    Ok(select_indices_cer(result, points, s)?
        .into_iter()
        .map(|i| events[i])
        .collect())
}

/// Picks `s` of `events` with the given rule.
pub fn select_sample(
    selection: Selection,
    params: &ModelParams,
    events: &[Quadruple],
    s: usize,
    seed: u64,
) -> Result<Vec<Quadruple>> {
    match selection {
        Selection::Uniform => Ok(select_points_rer(events, s, seed)),
        Selection::Cluster(cfg) => {
            let points = embed_events(params, events)?;
            let result = hdbscan_fit(&points, cfg)?;
            select_points_cer(&result, &points, s, seed)
        }
    }
}

/// Appends the slot for task `tasks − 1` after shrinking every existing slot
/// to its new quota by uniform eviction.
pub fn update_buffer(
    buffer: &mut MemoryBuffer,
    new_sample: &[Quadruple],
    tasks: usize,
    seed: u64,
) -> Result<()> {
    if tasks != buffer.slots.len() + 1 {
        return Err(Error::invalid(format!(
            "buffer has {} slots; cannot insert as task {tasks}",
            buffer.slots.len()
        )));
    }
    let quotas = slot_quotas(buffer.capacity, tasks);
    for (i, slot) in buffer.slots.iter_mut().enumerate() {
        let keep = quotas[i];
        if slot.len() > keep {
            let mut rng = rng::rng_for(seed, Stream::Eviction, &[tasks as u64, i as u64]);
            let mut kept = index::sample(&mut rng, slot.len(), keep).into_vec();
            kept.sort_unstable();
            *slot = kept.into_iter().map(|k| slot[k]).collect();
        }
    }
    let take = new_sample.len().min(quotas[tasks - 1]);
    buffer.slots.push(new_sample[..take].to_vec());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Cluster;
    use crate::model::init_params;

    fn quads(n: usize, task: i64) -> Vec<Quadruple> {
        (0..n).map(|i| Quadruple::new(i, 0, i + 1, task)).collect()
    }

    #[test]
    fn quotas_put_the_remainder_on_recent_tasks() {
        assert_eq!(slot_quotas(6, 3), vec![2, 2, 2]);
        assert_eq!(slot_quotas(7, 3), vec![2, 2, 3]);
        assert_eq!(slot_quotas(6, 1), vec![6]);
        assert_eq!(slot_quotas(3, 5), vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn buffer_updates_follow_quotas() {
        let mut b = MemoryBuffer::new(6);
        update_buffer(&mut b, &quads(6, 0), 1, 0).unwrap();
        assert_eq!(b.slots().len(), 1);
        assert_eq!(b.slots()[0].len(), 6);
        update_buffer(&mut b, &quads(3, 1), 2, 0).unwrap();
        let sizes: Vec<usize> = b.slots().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3]);
        update_buffer(&mut b, &quads(2, 2), 3, 0).unwrap();
        let sizes: Vec<usize> = b.slots().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 2]);
        assert!(update_buffer(&mut b, &quads(2, 3), 5, 0).is_err());
    }

    #[test]
    fn eviction_keeps_a_subset() {
        let mut b = MemoryBuffer::new(10);
        let first = quads(10, 0);
        update_buffer(&mut b, &first, 1, 4).unwrap();
        update_buffer(&mut b, &quads(5, 1), 2, 4).unwrap();
        assert!(b.slots()[0].iter().all(|q| first.contains(q)));
    }

    #[test]
    fn rer_samples() {
        let ev = quads(20, 0);
        let a = select_points_rer(&ev, 7, 3);
        assert_eq!(a.len(), 7);
        assert_eq!(a, select_points_rer(&ev, 7, 3));
        assert_eq!(select_points_rer(&ev, 20, 3), ev);
        assert_eq!(select_points_rer(&ev, 50, 3), ev);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 7);
    }

    #[test]
    fn embedding_rows_are_subject_then_object() {
        let p = init_params(3, 6, 2, 0).unwrap();
        let ev = vec![Quadruple::new(1, 0, 4, 0), Quadruple::new(1, 1, 4, 9)];
        let pts = embed_events(&p, &ev).unwrap();
        assert_eq!(pts.dim(), 6);
        assert_eq!(&pts.point(0)[..3], p.entity(1));
        assert_eq!(&pts.point(0)[3..], p.entity(4));
        assert_eq!(pts.point(0), pts.point(1));
        assert!(embed_events(&p, &[Quadruple::new(6, 0, 0, 0)]).is_err());
    }

    #[test]
    fn updating_a_subject_row_moves_only_its_events() {
        let mut p = init_params(2, 5, 1, 0).unwrap();
        let ev = vec![
            Quadruple::new(0, 0, 1, 0),
            Quadruple::new(2, 0, 3, 0),
            Quadruple::new(0, 0, 4, 0),
        ];
        let before = embed_events(&p, &ev).unwrap();
        p.entity_mut(0)[0] += 1.0;
        let after = embed_events(&p, &ev).unwrap();
        assert_ne!(before.point(0), after.point(0));
        assert_eq!(before.point(1), after.point(1));
        assert_ne!(before.point(2), after.point(2));
    }

    // A hand-built result: points are 1-D, clusters given explicitly with
    // exemplar at the first member.
    fn manual_result(sizes: &[usize]) -> (ClusterResult, PointSet) {
        let n: usize = sizes.iter().sum();
        let mut coords = Vec::with_capacity(n);
        let mut clusters = Vec::new();
        let mut labels = vec![None; n];
        let mut next = 0;
        for (c, &size) in sizes.iter().enumerate() {
            let members: Vec<usize> = (next..next + size).collect();
            for (k, &m) in members.iter().enumerate() {
                coords.push(100.0 * c as f64 + k as f64);
                labels[m] = Some(c);
            }
            clusters.push(Cluster {
                exemplars: vec![members[0]],
                members,
            });
            next += size;
        }
        let points = PointSet::new(1, coords)
            .unwrap()
            .with_events(quads(n, 0))
            .unwrap();
        let result = ClusterResult {
            labels,
            clusters,
            persistence: vec![1.0; n],
            condensed: crate::clustering::CondensedTree {
                clusters: Vec::new(),
                n_points: n,
            },
        };
        (result, points)
    }

    #[test]
    fn cer_counts_for_sizes_six_three_one() {
        let (res, pts) = manual_result(&[6, 3, 1]);
        let chosen = select_indices_cer(&res, &pts, 5).unwrap();
        let mut per = [0usize; 3];
        for i in chosen {
            per[res.labels[i].unwrap()] += 1;
        }
        assert_eq!(per, [2, 2, 1]);
    }

    #[test]
    fn cer_single_cluster_takes_nearest_to_exemplar() {
        let (res, pts) = manual_result(&[4]);
        assert_eq!(select_indices_cer(&res, &pts, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn cer_with_large_s_returns_everything_clustered() {
        let (res, pts) = manual_result(&[3, 2, 2]);
        let mut chosen = select_indices_cer(&res, &pts, 50).unwrap();
        chosen.sort_unstable();
        assert_eq!(chosen, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn cer_with_fewer_slots_than_clusters_takes_the_largest() {
        let (res, pts) = manual_result(&[5, 4, 3, 2, 2]);
        let chosen = select_indices_cer(&res, &pts, 3).unwrap();
        let labels: Vec<usize> = chosen.iter().map(|&i| res.labels[i].unwrap()).collect();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn all_noise_falls_back_to_uniform() {
        let pts = PointSet::new(1, vec![0.0, 10.0, 20.0])
            .unwrap()
            .with_events(quads(3, 0))
            .unwrap();
        let res = hdbscan_fit(&pts, ClusterConfig::default()).unwrap();
        let chosen = select_points_cer(&res, &pts, 2, 1).unwrap();
        assert_eq!(chosen, select_points_rer(&quads(3, 0), 2, 1));
    }

    #[test]
    fn buffer_checkpoint_round_trips() {
        let mut b = MemoryBuffer::new(7);
        update_buffer(&mut b, &quads(7, 0), 1, 0).unwrap();
        update_buffer(&mut b, &quads(4, 1), 2, 0).unwrap();
        let back = MemoryBuffer::from_text(&b.to_text()).unwrap();
        assert_eq!(back, b);
        assert!(MemoryBuffer::from_text("#tkg-buffer capacity=1 slots=1\nslot 0 2\n").is_err());
    }
}
