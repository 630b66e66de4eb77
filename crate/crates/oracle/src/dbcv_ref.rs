//! DBCV evaluated directly from its definition.

use std::collections::BTreeSet;

use crate::dist;
use crate::mst_ref::kruskal;

/// `labels` uses -1 for noise. Returns `None` when every point is noise.
pub fn reference_dbcv(points: &[Vec<f64>], labels: &[i32]) -> Option<f64> {
    let ids: BTreeSet<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
    if ids.is_empty() {
        return None;
    }
    let dim = points[0].len() as f64;
    let clusters: Vec<Vec<usize>> = ids
        .iter()
        .map(|&id| (0..points.len()).filter(|&i| labels[i] == id).collect())
        .collect();

    let mut core = vec![0.0; points.len()];
    for members in &clusters {
        for &o in members {
            let m = members.len();
            if m < 2 {
                core[o] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for &j in members {
                if j != o {
                    acc += (1.0 / dist(&points[o], &points[j])).powf(dim);
                }
            }
            core[o] = (acc / (m as f64 - 1.0)).powf(-1.0 / dim);
        }
    }
    let mreach = |a: usize, b: usize| dist(&points[a], &points[b]).max(core[a]).max(core[b]);

    let mut sparseness = Vec::new();
    let mut internal = Vec::new();
    for members in &clusters {
        let tree = kruskal(members.len(), |i, j| mreach(members[i], members[j]));
        let mut deg = vec![0; members.len()];
        for &(_, a, b) in &tree {
            deg[a] += 1;
            deg[b] += 1;
        }
        let inner: Vec<usize> = (0..members.len()).filter(|&v| deg[v] >= 2).collect();
        let inner_edges: Vec<f64> = tree
            .iter()
            .filter(|&&(_, a, b)| deg[a] >= 2 && deg[b] >= 2)
            .map(|e| e.0)
            .collect();
        let pool = if inner_edges.is_empty() {
            tree.iter().map(|e| e.0).collect()
        } else {
            inner_edges
        };
        sparseness.push(pool.into_iter().fold(0.0, f64::max));
        internal.push(if inner.is_empty() {
            members.clone()
        } else {
            inner.into_iter().map(|v| members[v]).collect()
        });
    }

    let k = clusters.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut sep = if k == 1 { 0.0 } else { f64::INFINITY };
        for j in 0..k {
            if i == j {
                continue;
            }
            for &u in &internal[i] {
                for &v in &internal[j] {
                    sep = sep.min(mreach(u, v));
                }
            }
        }
        let hi = if sep > sparseness[i] { sep } else { sparseness[i] };
        let v = if hi == 0.0 { 0.0 } else { (sep - sparseness[i]) / hi };
        total += v * clusters[i].len() as f64 / points.len() as f64;
    }
    Some(total)
}
