use super::PointSet;

/// An edge of the mutual-reachability spanning tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `max(core_a, core_b, d(a, b))`.
pub fn mutual_reachability(points: &PointSet, core: &[f64], a: usize, b: usize) -> f64 {
    euclidean(points.point(a), points.point(b))
        .max(core[a])
        .max(core[b])
}

/// Prim's algorithm over the complete mutual-reachability graph, computing
/// distances on the fly (O(n²) time, O(n) memory). Among equal keys the
/// smallest point index is taken first, and a key is only replaced by a
/// strictly smaller one.
pub fn mutual_reachability_mst(points: &PointSet, core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_key = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mutual_reachability(points, core, current, j);
            if w < key[j] {
                key[j] = w;
                parent[j] = current;
            }
            if best == usize::MAX || key[j] < best_key {
                best = j;
                best_key = key[j];
            }
        }
        in_tree[best] = true;
        edges.push(MstEdge {
            a: parent[best],
            b: best,
            weight: best_key,
        });
        current = best;
    }
    edges
}
