//! Density-Based Clustering Validation (DBCV).
//!
//! For each cluster the all-points core distance of every member is
//!
//! ```text
//! apcd(o) = ( sum_{j != o} (1 / d(o, j))^dim / (m - 1) )^(-1 / dim)
//! ```
//!
//! computed in log space so high-dimensional embeddings neither overflow nor
//! underflow. Density sparseness is the largest internal edge of the cluster's
//! mutual-reachability MST; density separation between two clusters is the
//! smallest mutual reachability between their internal vertices. Noise points
//! count towards the total in the final weighting.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distance::{validate_points, DistanceMatrix};
use crate::mst::Edge;
use crate::{ClusterAssignment, ClusterError};

/// Per-cluster quantities behind a DBCV score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbcvComponents {
    pub sparseness: Vec<f64>,
    /// `separation[i][j]`; the diagonal is unused and set to infinity.
    pub separation: Vec<Vec<f64>>,
    pub validity: Vec<f64>,
    pub score: f64,
}

pub fn dbcv<P: AsRef<[f64]>>(
    points: &[P],
    assignment: &ClusterAssignment,
) -> Result<f64, ClusterError> {
    Ok(dbcv_components(points, assignment)?.score)
}

pub fn dbcv_components<P: AsRef<[f64]>>(
    points: &[P],
    assignment: &ClusterAssignment,
) -> Result<DbcvComponents, ClusterError> {
    validate_points(points)?;
    if assignment.labels.len() != points.len() {
        return Err(ClusterError::InvalidParams(format!(
            "assignment covers {} points, got {}",
            assignment.labels.len(),
            points.len()
        )));
    }
    let clusters: Vec<&Vec<usize>> = assignment.members.iter().filter(|m| !m.is_empty()).collect();
    if clusters.is_empty() {
        return Err(ClusterError::AllNoise);
    }
    let dim = points[0].as_ref().len().max(1) as f64;
    let dist = DistanceMatrix::euclidean(points);

    let mut apcd = vec![0.0; points.len()];
    let mut sparseness = Vec::with_capacity(clusters.len());
    let mut internal: Vec<Vec<usize>> = Vec::with_capacity(clusters.len());
    for members in &clusters {
        for &o in members.iter() {
            apcd[o] = all_points_core_distance(&dist, o, members, dim);
        }
        let mst = cluster_mst(&dist, &apcd, members);
        let (vertices, dsc) = internal_structure(members, &mst);
        sparseness.push(dsc);
        internal.push(vertices);
    }

    let k = clusters.len();
    let mut separation = vec![vec![f64::INFINITY; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let mut best = f64::INFINITY;
            for &u in &internal[i] {
                for &v in &internal[j] {
                    let w = dist.get(u, v).max(apcd[u]).max(apcd[v]);
                    best = best.min(w);
                }
            }
            separation[i][j] = best;
            separation[j][i] = best;
        }
    }

    let total = points.len() as f64;
    let mut validity = Vec::with_capacity(k);
    let mut score = 0.0;
    for i in 0..k {
        // A lone cluster has nothing to be separated from.
        let sep = if k == 1 {
            0.0
        } else {
            separation[i]
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &s)| s)
                .fold(f64::INFINITY, f64::min)
        };
        let denom = sep.max(sparseness[i]);
        let v = if denom > 0.0 {
            (sep - sparseness[i]) / denom
        } else {
            0.0
        };
        validity.push(v);
        score += clusters[i].len() as f64 / total * v;
    }
    Ok(DbcvComponents {
        sparseness,
        separation,
        validity,
        score,
    })
}

fn all_points_core_distance(dist: &DistanceMatrix, o: usize, members: &[usize], dim: f64) -> f64 {
    let others: Vec<f64> = members
        .iter()
        .filter(|&&j| j != o)
        .map(|&j| dist.get(o, j))
        .collect();
    if others.is_empty() {
        return 0.0;
    }
    if others.contains(&0.0) {
        return 0.0;
    }
    // log of (1/d)^dim = -dim * ln d
    let logs: Vec<f64> = others.iter().map(|&d| -dim * d.ln()).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let log_mean = lse - (others.len() as f64).ln();
    (-log_mean / dim).exp()
}

fn cluster_mst(dist: &DistanceMatrix, apcd: &[f64], members: &[usize]) -> Vec<Edge> {
    let m = members.len();
    if m < 2 {
        return Vec::new();
    }
    let weight = |a: usize, b: usize| dist.get(a, b).max(apcd[a]).max(apcd[b]);
    let mut in_tree = vec![false; m];
    let mut best: Vec<Option<Edge>> = vec![None; m];
    let mut edges = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        for v in 0..m {
            if in_tree[v] {
                continue;
            }
            let (a, b) = (members[current], members[v]);
            let cand = Edge::new(a, b, weight(a, b));
            match &best[v] {
                Some(e) if e.key_cmp(&cand) != Ordering::Greater => {}
                _ => best[v] = Some(cand),
            }
        }
        let (next, edge) = (0..m)
            .filter(|&v| !in_tree[v])
            .map(|v| (v, best[v].expect("candidate edge")))
            .min_by(|x, y| x.1.key_cmp(&y.1))
            .expect("frontier is non-empty");
        in_tree[next] = true;
        edges.push(edge);
        current = next;
    }
    edges
}

/// Internal vertices (MST degree > 1) and the density sparseness.
///
/// Without internal edges the largest edge overall is used; without internal
/// vertices every member counts as internal.
fn internal_structure(members: &[usize], mst: &[Edge]) -> (Vec<usize>, f64) {
    let mut degree = std::collections::HashMap::new();
    for e in mst {
        *degree.entry(e.a).or_insert(0usize) += 1;
        *degree.entry(e.b).or_insert(0usize) += 1;
    }
    let is_internal = |v: usize| degree.get(&v).copied().unwrap_or(0) > 1;
    let internal_edges: Vec<&Edge> = mst
        .iter()
        .filter(|e| is_internal(e.a) && is_internal(e.b))
        .collect();
    let dsc = if internal_edges.is_empty() {
        mst.iter().map(|e| e.weight).fold(0.0, f64::max)
    } else {
        internal_edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    };
    let mut vertices: Vec<usize> = members.iter().copied().filter(|&v| is_internal(v)).collect();
    if vertices.is_empty() {
        vertices = members.to_vec();
    }
    (vertices, dsc)
}
