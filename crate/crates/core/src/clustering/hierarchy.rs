//! Single-linkage hierarchy, condensation and excess-of-mass selection.
//!
//! MST edges of equal weight are merged as one level, so a level that joins
//! several components at once yields one multi-way node. This makes the
//! hierarchy independent of the order in which tied edges are visited.

use std::fmt::Write as _;

use super::mst::MstEdge;

/// Distances below this are clamped, so coincident points get a large but
/// finite density level.
pub const MIN_DISTANCE: f64 = 1e-12;

pub(crate) fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(MIN_DISTANCE)
}

#[derive(Debug, Clone)]
struct Node {
    weight: f64,
    children: Vec<usize>,
    size: usize,
    rep: usize,
}

/// Multi-way single-linkage tree. Nodes `0..n` are the points.
#[derive(Debug, Clone)]
pub(crate) struct Dendrogram {
    nodes: Vec<Node>,
    n_points: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl Dendrogram {
    pub(crate) fn from_mst(n_points: usize, edges: &[MstEdge]) -> Self {
        let mut nodes: Vec<Node> = (0..n_points)
            .map(|p| Node {
                weight: 0.0,
                children: Vec::new(),
                size: 1,
                rep: p,
            })
            .collect();
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by(|&i, &j| edges[i].weight.total_cmp(&edges[j].weight).then(i.cmp(&j)));

        let mut uf = UnionFind::new(n_points);
        // Current dendrogram node for each union-find root.
        let mut node_of: Vec<usize> = (0..n_points).collect();
        let mut start = 0;
        while start < order.len() {
            let w = edges[order[start]].weight;
            let mut end = start;
            while end < order.len() && edges[order[end]].weight == w {
                end += 1;
            }
            let level = &order[start..end];

            let mut touched: Vec<usize> = Vec::new();
            for &e in level {
                for p in [edges[e].a, edges[e].b] {
                    let node = node_of[uf.find(p)];
                    if !touched.contains(&node) {
                        touched.push(node);
                    }
                }
            }
            for &e in level {
                uf.union(edges[e].a, edges[e].b);
            }
            touched.sort_unstable();
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for node in touched {
                let root = uf.find(nodes[node].rep);
                match groups.iter_mut().find(|(r, _)| *r == root) {
                    Some((_, members)) => members.push(node),
                    None => groups.push((root, vec![node])),
                }
            }
            for (root, children) in groups {
                let size = children.iter().map(|&c| nodes[c].size).sum();
                let rep = children.iter().map(|&c| nodes[c].rep).min().unwrap();
                let id = nodes.len();
                nodes.push(Node {
                    weight: w,
                    children,
                    size,
                    rep,
                });
                node_of[root] = id;
            }
            start = end;
        }
        Self { nodes, n_points }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    fn is_leaf(&self, node: usize) -> bool {
        node < self.n_points
    }

    fn leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if self.is_leaf(x) {
                out.push(x);
            } else {
                stack.extend(self.nodes[x].children.iter().copied());
            }
        }
    }
}

/// One cluster of the condensed tree. Cluster 0 is the whole data set.
#[derive(Debug, Clone)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    pub birth_lambda: f64,
    /// Level at which the cluster splits into child clusters or dissolves.
    pub death_lambda: Option<f64>,
    pub size: usize,
    pub children: Vec<usize>,
    /// Points that leave this cluster directly, with their exit level.
    pub shed: Vec<(usize, f64)>,
}

/// The condensed cluster tree.
#[derive(Debug, Clone)]
pub struct CondensedTree {
    pub clusters: Vec<CondensedCluster>,
    pub n_points: usize,
}

impl CondensedTree {
    /// Condenses the hierarchy. The root is treated as a virtual cluster:
    /// every component of at least `min_cluster_size` points at its first
    /// level becomes a top-level cluster, and anything smaller that leaves
    /// the root is noise.
    pub(crate) fn condense(dendrogram: &Dendrogram, min_cluster_size: usize) -> Self {
        let n = dendrogram.n_points;
        let mut clusters = vec![CondensedCluster {
            parent: None,
            birth_lambda: 0.0,
            death_lambda: None,
            size: n,
            children: Vec::new(),
            shed: Vec::new(),
        }];
        if n == 0 {
            return Self {
                clusters,
                n_points: 0,
            };
        }
        let mut stack = vec![(dendrogram.root(), 0usize)];
        let mut buf = Vec::new();
        while let Some((node, c)) = stack.pop() {
            if dendrogram.is_leaf(node) {
                // Only reachable for a single-point data set.
                clusters[c].shed.push((node, 0.0));
                continue;
            }
            let level = lambda_of(dendrogram.nodes[node].weight);
            let children = &dendrogram.nodes[node].children;
            let big: Vec<usize> = children
                .iter()
                .copied()
                .filter(|&ch| dendrogram.nodes[ch].size >= min_cluster_size)
                .collect();
            for &ch in children {
                if dendrogram.nodes[ch].size < min_cluster_size {
                    buf.clear();
                    dendrogram.leaves(ch, &mut buf);
                    clusters[c].shed.extend(buf.iter().map(|&p| (p, level)));
                }
            }
            if c == 0 || big.len() >= 2 {
                clusters[c].death_lambda = Some(level);
                for &b in &big {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(c),
                        birth_lambda: level,
                        death_lambda: None,
                        size: dendrogram.nodes[b].size,
                        children: Vec::new(),
                        shed: Vec::new(),
                    });
                    clusters[c].children.push(id);
                    stack.push((b, id));
                }
            } else if big.len() == 1 {
                stack.push((big[0], c));
            } else {
                clusters[c].death_lambda = Some(level);
            }
        }
        for c in &mut clusters {
            c.shed.sort_by_key(|&(p, _)| p);
        }
        Self {
            clusters,
            n_points: n,
        }
    }

    /// Excess of mass: `Σ_p (λ_p − λ_birth)` over the points of the cluster,
    /// where points handed to child clusters leave at the split level.
    pub fn stability(&self, c: usize) -> f64 {
        let cl = &self.clusters[c];
        let birth = cl.birth_lambda;
        let mut s: f64 = cl.shed.iter().map(|&(_, l)| l - birth).sum();
        if let Some(death) = cl.death_lambda {
            for &ch in &cl.children {
                s += self.clusters[ch].size as f64 * (death - birth);
            }
        }
        s
    }

    /// Selects clusters bottom-up; a parent is kept when its own stability is
    /// at least the summed stability of its selected descendants. The root is
    /// never selected.
    pub fn select_eom(&self) -> Vec<usize> {
        let k = self.clusters.len();
        let mut stab: Vec<f64> = (0..k).map(|c| self.stability(c)).collect();
        let mut selected = vec![true; k];
        selected[0] = false;
        for c in (1..k).rev() {
            let children = &self.clusters[c].children;
            if children.is_empty() {
                continue;
            }
            let sum: f64 = children.iter().map(|&ch| stab[ch]).sum();
            if sum > stab[c] {
                selected[c] = false;
                stab[c] = sum;
            } else {
                let mut stack = children.clone();
                while let Some(d) = stack.pop() {
                    selected[d] = false;
                    stack.extend(self.clusters[d].children.iter().copied());
                }
            }
        }
        (1..k).filter(|&c| selected[c]).collect()
    }

    /// Text dump, one `parent child lambda size` line per edge. Clusters are
    /// numbered from `n_points`; points keep their own index.
    pub fn to_text(&self) -> String {
        let n = self.n_points;
        let mut out = String::new();
        for (c, cl) in self.clusters.iter().enumerate() {
            for &(p, l) in &cl.shed {
                let _ = writeln!(out, "{} {} {} 1", n + c, p, l);
            }
            for &ch in &cl.children {
                let child = &self.clusters[ch];
                let _ = writeln!(out, "{} {} {} {}", n + c, n + ch, child.birth_lambda, child.size);
            }
        }
        out
    }
}
