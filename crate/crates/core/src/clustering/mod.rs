//! Hierarchical density-based clustering (HDBSCAN) over dense point sets.
//!
//! Pipeline: core distances with `k = min_cluster_size − 1`, mutual
//! reachability, a minimum spanning tree of the complete mutual-reachability
//! graph, the single-linkage hierarchy of its sorted edges, condensation by
//! minimum cluster size, and excess-of-mass selection. Each selected cluster
//! reports the members that persist to the highest density level as its
//! exemplars.

mod hierarchy;
mod mst;

use rayon::prelude::*;

use crate::dataset::Quadruple;
use crate::error::{Error, Result};

pub use hierarchy::{CondensedCluster, CondensedTree, MIN_DISTANCE};
pub use mst::{euclidean, mutual_reachability, mutual_reachability_mst, MstEdge};

use hierarchy::Dendrogram;

/// `n` points of equal dimension, row-major, optionally tied back to the
/// events they embed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    events: Option<Vec<Quadruple>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            if !coords.is_empty() {
                return Err(Error::shape("zero-dimensional points with coordinates"));
            }
        } else if !coords.len().is_multiple_of(dim) {
            return Err(Error::shape(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        Ok(Self {
            dim,
            coords,
            events: None,
        })
    }

    pub fn with_events(mut self, events: Vec<Quadruple>) -> Result<Self> {
        if events.len() != self.len() {
            return Err(Error::shape(format!(
                "{} events for {} points",
                events.len(),
                self.len()
            )));
        }
        self.events = Some(events);
        Ok(self)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape("rows of unequal dimension"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn events(&self) -> Option<&[Quadruple]> {
        self.events.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    pub min_cluster_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            min_cluster_size: 5,
        }
    }
}

/// One selected cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Member point indices, ascending.
    pub members: Vec<usize>,
    /// Members attaining the cluster's maximal persistence, ascending.
    pub exemplars: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    /// Cluster index per point; `None` is noise.
    pub labels: Vec<Option<usize>>,
    /// Selected clusters in non-increasing size order.
    pub clusters: Vec<Cluster>,
    /// Density level (1 / distance) at which each point leaves the tree.
    pub persistence: Vec<f64>,
    pub condensed: CondensedTree,
}

impl ClusterResult {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn clustered_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum()
    }
}

/// Distance from each point to its `k`-th nearest other point.
pub fn core_distance(points: &PointSet, k: usize) -> Result<Vec<f64>> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "core distance needs 1 <= k < n (k={k}, n={n})"
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(points.point(i), points.point(j)))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

fn all_noise(n: usize) -> ClusterResult {
    let condensed = CondensedTree {
        clusters: vec![CondensedCluster {
            parent: None,
            birth_lambda: 0.0,
            death_lambda: None,
            size: n,
            children: Vec::new(),
            shed: (0..n).map(|p| (p, 0.0)).collect(),
        }],
        n_points: n,
    };
    ClusterResult {
        labels: vec![None; n],
        clusters: Vec::new(),
        persistence: vec![0.0; n],
        condensed,
    }
}

pub fn hdbscan_fit(points: &PointSet, cfg: ClusterConfig) -> Result<ClusterResult> {
    if cfg.min_cluster_size < 2 {
        return Err(Error::invalid("min_cluster_size must be at least 2"));
    }
    let n = points.len();
    if n < cfg.min_cluster_size {
        return Ok(all_noise(n));
    }
    let core = core_distance(points, cfg.min_cluster_size - 1)?;
    let mst = mutual_reachability_mst(points, &core);
    let dendrogram = Dendrogram::from_mst(n, &mst);
    let condensed = CondensedTree::condense(&dendrogram, cfg.min_cluster_size);

    let mut deepest = vec![0usize; n];
    let mut persistence = vec![0.0; n];
    for (c, cl) in condensed.clusters.iter().enumerate() {
        for &(p, l) in &cl.shed {
            deepest[p] = c;
            persistence[p] = l;
        }
    }

    let selected = condensed.select_eom();
    let mut owner = vec![None; condensed.clusters.len()];
    for &c in &selected {
        owner[c] = Some(c);
    }
    // Parents precede children, so one forward pass propagates ownership.
    for c in 1..condensed.clusters.len() {
        if owner[c].is_none() {
            if let Some(p) = condensed.clusters[c].parent {
                owner[c] = owner[p];
            }
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = selected.iter().map(|&c| (c, Vec::new())).collect();
    for p in 0..n {
        if let Some(c) = owner[deepest[p]] {
            let g = groups.iter_mut().find(|(id, _)| *id == c).unwrap();
            g.1.push(p);
        }
    }
    groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.1[0].cmp(&b.1[0])));

    let mut labels = vec![None; n];
    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(label, (_, members))| {
            let top = members
                .iter()
                .map(|&p| persistence[p])
                .fold(f64::NEG_INFINITY, f64::max);
            let exemplars = members
                .iter()
                .copied()
                .filter(|&p| persistence[p] == top)
                .collect();
            for &p in &members {
                labels[p] = Some(label);
            }
            Cluster { members, exemplars }
        })
        .collect();

    Ok(ClusterResult {
        labels,
        clusters,
        persistence,
        condensed,
    })
}

/// Members of `cluster` ordered by distance to the nearest exemplar
/// (exemplars first among equal distances, then by point index), truncated
/// to `k`.
pub fn find_exemplars(
    result: &ClusterResult,
    points: &PointSet,
    cluster: usize,
    k: usize,
) -> Result<Vec<usize>> {
    let c = result.clusters.get(cluster).ok_or_else(|| {
        Error::invalid(format!(
            "cluster {cluster} out of range ({} clusters)",
            result.clusters.len()
        ))
    })?;
    let mut ranked: Vec<(f64, bool, usize)> = c
        .members
        .iter()
        .map(|&p| {
            let d = c
                .exemplars
                .iter()
                .map(|&e| euclidean(points.point(p), points.point(e)))
                .fold(f64::INFINITY, f64::min);
            (d, !c.exemplars.contains(&p), p)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(ranked.into_iter().take(k).map(|(_, _, p)| p).collect())
}
