//! Exhaustive minimum spanning trees.

use std::collections::BTreeSet;

/// (weight, lower endpoint, upper endpoint)
pub type RefEdge = (f64, usize, usize);

pub fn edge_order(x: &RefEdge, y: &RefEdge) -> std::cmp::Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

/// Kruskal over every pair of vertices, edges ordered by weight then indices.
pub fn kruskal(n: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<RefEdge> {
    let mut all = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            all.push((weight(i, j), i, j));
        }
    }
    all.sort_by(edge_order);
    // component label per vertex, relabelled on merge
    let mut comp: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for e in all {
        let (ci, cj) = (comp[e.1], comp[e.2]);
        if ci == cj {
            continue;
        }
        for c in comp.iter_mut() {
            if *c == cj {
                *c = ci;
            }
        }
        out.push(e);
        if out.len() + 1 == n {
            break;
        }
    }
    out
}

/// Minimum total weight over every labelled spanning tree, enumerated via
/// Prüfer sequences. Feasible for n ≤ 8.
pub fn enumerate_min_weight(n: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return weight(0, 1);
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        let edges = prufer_decode(n, &seq);
        let w: f64 = edges.iter().map(|&(a, b)| weight(a, b)).sum();
        if w < best {
            best = w;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == len {
                return best;
            }
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

/// Exact minimum spanning-tree weight by dynamic programming over vertex
/// subsets. Every tree on two or more vertices has a leaf other than vertex 0,
/// so the best tree on `S` is the best tree on `S - {v}` plus the lightest
/// edge from some non-root `v` back into it. Exponential; fine up to n = 16.
pub fn subset_min_weight(n: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    best[1] = 0.0;
    for s in 1..=full {
        if s & 1 == 0 || s == 1 {
            continue;
        }
        for v in 1..n {
            if s & (1 << v) == 0 {
                continue;
            }
            let rest = s & !(1 << v);
            if !best[rest].is_finite() {
                continue;
            }
            let attach = (0..n)
                .filter(|&u| rest & (1 << u) != 0)
                .map(|u| weight(u, v))
                .fold(f64::INFINITY, f64::min);
            best[s] = best[s].min(best[rest] + attach);
        }
    }
    best[full]
}

fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = *leaves.iter().next().unwrap();
        leaves.remove(&leaf);
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Cycle-property certificate: a spanning tree is minimum iff no non-tree
/// edge is lighter than the heaviest tree edge on the path it closes.
pub fn is_minimum_by_cycle_property(
    n: usize,
    tree: &[(usize, usize)],
    weight: impl Fn(usize, usize) -> f64,
) -> bool {
    if tree.len() + 1 != n {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    let in_tree = |a: usize, b: usize| tree.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a));
    for i in 0..n {
        // heaviest edge on the tree path from i to every vertex
        let mut heaviest = vec![None::<f64>; n];
        heaviest[i] = Some(f64::NEG_INFINITY);
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if heaviest[u].is_none() {
                    heaviest[u] = Some(heaviest[v].unwrap().max(weight(v, u)));
                    stack.push(u);
                }
            }
        }
        for (j, h) in heaviest.iter().enumerate().skip(i + 1) {
            let Some(h) = *h else {
                return false;
            };
            if !in_tree(i, j) && weight(i, j) < h {
                return false;
            }
        }
    }
    true
}
