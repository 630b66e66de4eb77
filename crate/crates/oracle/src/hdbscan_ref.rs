//! Top-down reference for HDBSCAN with excess-of-mass selection.
//!
//! The hierarchy is obtained by deleting MST edges from heaviest to lightest
//! (same edge order as the exhaustive Kruskal build) and following connected
//! components, instead of merging bottom-up.

use std::collections::BTreeSet;

use crate::mst_ref::{edge_order, kruskal, RefEdge};
use crate::dist;

struct RefCluster {
    birth: f64,
    members: BTreeSet<usize>,
    children: Vec<usize>,
    /// (lambda, size) of everything that left this cluster
    departures: Vec<(f64, usize)>,
}

fn lambda(w: f64) -> f64 {
    if w == 0.0 {
        f64::INFINITY
    } else {
        1.0 / w
    }
}

fn persist(l: f64, birth: f64) -> f64 {
    if l == birth {
        0.0
    } else {
        l - birth
    }
}

pub fn core_distances(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = points.len();
    points
        .iter()
        .map(|p| {
            let mut ds: Vec<f64> = points.iter().map(|q| dist(p, q)).collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds[k.min(n).max(1) - 1]
        })
        .collect()
}

pub fn mutual_reachability_mst(points: &[Vec<f64>], min_samples: usize) -> Vec<RefEdge> {
    let core = core_distances(points, min_samples);
    kruskal(points.len(), |i, j| {
        let d = dist(&points[i], &points[j]);
        let mut w = d;
        if core[i] > w {
            w = core[i];
        }
        if core[j] > w {
            w = core[j];
        }
        w
    })
}

fn components(vertices: &BTreeSet<usize>, edges: &[RefEdge]) -> Vec<BTreeSet<usize>> {
    let mut remaining = vertices.clone();
    let mut out = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = BTreeSet::new();
        let mut frontier = vec![start];
        while let Some(v) = frontier.pop() {
            if !comp.insert(v) {
                continue;
            }
            for e in edges {
                if e.1 == v && !comp.contains(&e.2) {
                    frontier.push(e.2);
                }
                if e.2 == v && !comp.contains(&e.1) {
                    frontier.push(e.1);
                }
            }
        }
        for v in &comp {
            remaining.remove(v);
        }
        out.push(comp);
    }
    out
}

/// Returns flat labels (-1 noise) in arbitrary cluster numbering.
pub fn reference_hdbscan(points: &[Vec<f64>], min_cluster_size: usize, min_samples: usize) -> Vec<i32> {
    let n = points.len();
    let mst = mutual_reachability_mst(points, min_samples);
    let mut clusters = vec![RefCluster {
        birth: 0.0,
        members: (0..n).collect(),
        children: Vec::new(),
        departures: Vec::new(),
    }];
    // point -> lambda at which it left its last cluster
    let mut point_exit: Vec<f64> = vec![f64::INFINITY; n];

    // work items: (cluster id, current component, MST edges inside it)
    let mut work: Vec<(usize, BTreeSet<usize>, Vec<RefEdge>)> = vec![(0, (0..n).collect(), mst)];
    while let Some((cid, comp, mut edges)) = work.pop() {
        if edges.is_empty() {
            // single vertex left in a live cluster
            for &p in &comp {
                clusters[cid].departures.push((f64::INFINITY, 1));
                point_exit[p] = f64::INFINITY;
            }
            continue;
        }
        edges.sort_by(edge_order);
        let heaviest = edges.pop().unwrap();
        let l = lambda(heaviest.0);
        let parts = components(&comp, &edges);
        assert_eq!(parts.len(), 2);
        let split_edges = |part: &BTreeSet<usize>| -> Vec<RefEdge> {
            edges
                .iter()
                .copied()
                .filter(|e| part.contains(&e.1) && part.contains(&e.2))
                .collect()
        };
        let big: Vec<bool> = parts.iter().map(|p| p.len() >= min_cluster_size).collect();
        if big[0] && big[1] {
            for part in &parts {
                let child = clusters.len();
                clusters.push(RefCluster {
                    birth: l,
                    members: part.clone(),
                    children: Vec::new(),
                    departures: Vec::new(),
                });
                clusters[cid].children.push(child);
                clusters[cid].departures.push((l, part.len()));
                work.push((child, part.clone(), split_edges(part)));
            }
        } else {
            for (part, is_big) in parts.iter().zip(&big) {
                if *is_big {
                    work.push((cid, part.clone(), split_edges(part)));
                } else {
                    for &p in part {
                        clusters[cid].departures.push((l, 1));
                        point_exit[p] = l;
                    }
                }
            }
        }
    }

    let stability: Vec<f64> = clusters
        .iter()
        .map(|c| c.departures.iter().map(|&(l, s)| persist(l, c.birth) * s as f64).sum())
        .collect();

    fn choose(c: usize, clusters: &[RefCluster], stability: &[f64]) -> (f64, Vec<usize>) {
        if clusters[c].children.is_empty() {
            return (stability[c], vec![c]);
        }
        let mut sum = 0.0;
        let mut picked = Vec::new();
        for &ch in &clusters[c].children {
            let (s, p) = choose(ch, clusters, stability);
            sum += s;
            picked.extend(p);
        }
        if sum > stability[c] {
            (sum, picked)
        } else {
            (stability[c], vec![c])
        }
    }

    let mut labels = vec![-1i32; n];
    if clusters[0].children.is_empty() {
        let top = point_exit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let keep: Vec<usize> = (0..n).filter(|&p| point_exit[p] == top).collect();
        if keep.len() >= min_cluster_size {
            for p in keep {
                labels[p] = 0;
            }
        }
        return labels;
    }
    let mut selected = Vec::new();
    for &ch in &clusters[0].children {
        selected.extend(choose(ch, &clusters, &stability).1);
    }
    for (k, &c) in selected.iter().enumerate() {
        for &p in &clusters[c].members {
            labels[p] = k as i32;
        }
    }
    labels
}
