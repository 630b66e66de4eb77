//! Core distances, mutual reachability and the minimum spanning tree.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;

/// Distance from each point to its `k`-th nearest neighbour, counting the
/// point itself as the first neighbour. `k` larger than the number of points
/// falls back to the farthest point.
pub fn core_distances(dist: &DistanceMatrix, k: usize) -> Vec<f64> {
    let n = dist.len();
    (0..n)
        .map(|i| {
            let mut row = dist.row(i).to_vec();
            row.sort_by(f64::total_cmp);
            row[k.clamp(1, n) - 1]
        })
        .collect()
}

#[inline]
pub fn mutual_reachability(dist: &DistanceMatrix, core: &[f64], a: usize, b: usize) -> f64 {
    dist.get(a, b).max(core[a]).max(core[b])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self { a, b, weight }
    }

    /// Strict total order: weight, then lower endpoint, then upper endpoint.
    pub fn key_cmp(&self, other: &Edge) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Prim's algorithm over the dense mutual reachability graph.
///
/// Edges are compared by [`Edge::key_cmp`]; under that strict order the
/// minimum spanning tree is unique. Output edges are sorted by the same key.
pub fn prim_mst(dist: &DistanceMatrix, core: &[f64]) -> Vec<Edge> {
    let n = dist.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<Edge>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let cand = Edge::new(current, v, mutual_reachability(dist, core, current, v));
            match &best[v] {
                Some(e) if e.key_cmp(&cand) != Ordering::Greater => {}
                _ => best[v] = Some(cand),
            }
        }
        let (next, edge) = (0..n)
            .filter(|&v| !in_tree[v])
            .map(|v| (v, best[v].expect("frontier vertex has a candidate edge")))
            .min_by(|x, y| x.1.key_cmp(&y.1))
            .expect("frontier is non-empty");
        in_tree[next] = true;
        edges.push(edge);
        current = next;
    }
    edges.sort_by(Edge::key_cmp);
    edges
}

pub fn total_weight(edges: &[Edge]) -> f64 {
    edges.iter().map(|e| e.weight).sum()
}
