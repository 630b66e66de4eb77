//! Single-linkage dendrogram, condensed tree and excess-of-mass selection.

use serde::{Deserialize, Serialize};

use crate::mst::Edge;
use crate::ClusterAssignment;

/// Binary merge tree built from MST edges in ascending key order.
///
/// Leaves are `0..n`; internal node `n + i` is the `i`-th merge.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

#[derive(Debug, Clone, Copy)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
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
}

impl Dendrogram {
    /// `mst` must be sorted by [`Edge::key_cmp`].
    pub fn from_mst(n: usize, mst: &[Edge]) -> Self {
        let mut uf = UnionFind::new(2 * n);
        let mut sizes = vec![1usize; 2 * n];
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for (i, e) in mst.iter().enumerate() {
            let left = uf.find(e.a);
            let right = uf.find(e.b);
            let node = n + i;
            let size = sizes[left] + sizes[right];
            uf.parent[left] = node;
            uf.parent[right] = node;
            sizes[node] = size;
            merges.push(Merge {
                left,
                right,
                distance: e.weight,
                size,
            });
        }
        Self { n, merges }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    fn size(&self, node: usize) -> usize {
        if node < self.n {
            1
        } else {
            self.merges[node - self.n].size
        }
    }

    fn leaves(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                let m = &self.merges[x - self.n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// `lambda - birth`, with equal infinities persisting for zero.
pub fn persistence(lambda: f64, birth: f64) -> f64 {
    if lambda == birth {
        0.0
    } else {
        lambda - birth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CondensedChild {
    Point { index: usize },
    Cluster { id: usize },
}

/// One row of the condensed tree: `child` leaves `parent` at `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedEntry {
    pub parent: usize,
    pub child: CondensedChild,
    /// Serialized as `null` when infinite (zero distance).
    #[serde(with = "inf_as_null")]
    pub lambda: f64,
    pub size: usize,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    #[serde(with = "inf_as_null")]
    pub birth: f64,
    pub children: Vec<usize>,
    #[serde(with = "inf_as_null")]
    pub stability: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fallout {
    pub cluster: usize,
    #[serde(with = "inf_as_null")]
    pub lambda: f64,
}

/// HDBSCAN hierarchy simplified at `min_cluster_size`. Cluster 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub min_cluster_size: usize,
    pub entries: Vec<CondensedEntry>,
    pub clusters: Vec<CondensedCluster>,
    /// For each point: the cluster it fell out of and at which lambda.
    pub fallout: Vec<Fallout>,
}

impl CondensedTree {
    pub fn build(dendrogram: &Dendrogram, min_cluster_size: usize) -> Self {
        let n = dendrogram.n_points();
        let mut tree = CondensedTree {
            n_points: n,
            min_cluster_size,
            entries: Vec::new(),
            clusters: vec![CondensedCluster {
                parent: None,
                birth: 0.0,
                children: Vec::new(),
                stability: 0.0,
                size: n,
            }],
            fallout: vec![
                Fallout {
                    cluster: 0,
                    lambda: f64::INFINITY,
                };
                n
            ],
        };
        if n < 2 {
            return tree;
        }
        let top = 2 * n - 2;
        let mut stack = vec![(top, 0usize)];
        while let Some((node, cluster)) = stack.pop() {
            if node < n {
                tree.fall_out(node, cluster, f64::INFINITY);
                continue;
            }
            let m = dendrogram.merges()[node - n];
            let lambda = lambda_of(m.distance);
            let left_big = dendrogram.size(m.left) >= min_cluster_size;
            let right_big = dendrogram.size(m.right) >= min_cluster_size;
            match (left_big, right_big) {
                (true, true) => {
                    let lc = tree.open_cluster(cluster, lambda, dendrogram.size(m.left));
                    let rc = tree.open_cluster(cluster, lambda, dendrogram.size(m.right));
                    stack.push((m.right, rc));
                    stack.push((m.left, lc));
                }
                (true, false) => {
                    for p in dendrogram.leaves(m.right) {
                        tree.fall_out(p, cluster, lambda);
                    }
                    stack.push((m.left, cluster));
                }
                (false, true) => {
                    for p in dendrogram.leaves(m.left) {
                        tree.fall_out(p, cluster, lambda);
                    }
                    stack.push((m.right, cluster));
                }
                (false, false) => {
                    for p in dendrogram.leaves(m.left) {
                        tree.fall_out(p, cluster, lambda);
                    }
                    for p in dendrogram.leaves(m.right) {
                        tree.fall_out(p, cluster, lambda);
                    }
                }
            }
        }
        tree
    }

    fn open_cluster(&mut self, parent: usize, lambda: f64, size: usize) -> usize {
        let id = self.clusters.len();
        self.clusters.push(CondensedCluster {
            parent: Some(parent),
            birth: lambda,
            children: Vec::new(),
            stability: 0.0,
            size,
        });
        let p = &mut self.clusters[parent];
        p.children.push(id);
        p.stability += persistence(lambda, p.birth) * size as f64;
        self.entries.push(CondensedEntry {
            parent,
            child: CondensedChild::Cluster { id },
            lambda,
            size,
        });
        id
    }

    fn fall_out(&mut self, point: usize, cluster: usize, lambda: f64) {
        let c = &mut self.clusters[cluster];
        c.stability += persistence(lambda, c.birth);
        self.fallout[point] = Fallout { cluster, lambda };
        self.entries.push(CondensedEntry {
            parent: cluster,
            child: CondensedChild::Point { index: point },
            lambda,
            size: 1,
        });
    }

    /// Excess-of-mass selection.
    ///
    /// The root is never selected unless it has no child clusters, in which
    /// case it is selected with the points that persist to its largest lambda
    /// (provided there are at least `min_cluster_size` of them).
    pub fn select_clusters(&self) -> ClusterAssignment {
        let n = self.n_points;
        let k = self.clusters.len();
        let mut raw = vec![-1i32; n];
        if k == 1 {
            let max_lambda = self
                .fallout
                .iter()
                .map(|f| f.lambda)
                .fold(f64::NEG_INFINITY, f64::max);
            let members: Vec<usize> = (0..n)
                .filter(|&p| self.fallout[p].lambda == max_lambda)
                .collect();
            if members.len() >= self.min_cluster_size {
                for p in members {
                    raw[p] = 0;
                }
            }
            return ClusterAssignment::from_labels(&raw);
        }

        let mut stability: Vec<f64> = self.clusters.iter().map(|c| c.stability).collect();
        let mut selected = vec![false; k];
        for c in (1..k).rev() {
            let children = &self.clusters[c].children;
            if children.is_empty() {
                selected[c] = true;
                continue;
            }
            let child_sum: f64 = children.iter().map(|&ch| stability[ch]).sum();
            if child_sum > stability[c] {
                stability[c] = child_sum;
            } else {
                selected[c] = true;
                let mut stack = children.clone();
                while let Some(d) = stack.pop() {
                    selected[d] = false;
                    stack.extend(self.clusters[d].children.iter().copied());
                }
            }
        }

        for (p, label) in raw.iter_mut().enumerate() {
            let mut c = Some(self.fallout[p].cluster);
            while let Some(id) = c {
                if selected[id] {
                    *label = id as i32;
                    break;
                }
                c = self.clusters[id].parent;
            }
        }
        ClusterAssignment::from_labels(&raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::DistanceMatrix;
    use crate::mst::{core_distances, prim_mst};

    fn tree_for(points: &[Vec<f64>], mcs: usize, ms: usize) -> CondensedTree {
        let d = DistanceMatrix::euclidean(points);
        let core = core_distances(&d, ms);
        let mst = prim_mst(&d, &core);
        CondensedTree::build(&Dendrogram::from_mst(points.len(), &mst), mcs)
    }

    #[test]
    fn every_point_falls_out_exactly_once() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i * i % 7) as f64, i as f64]).collect();
        let t = tree_for(&pts, 3, 2);
        let point_rows = t
            .entries
            .iter()
            .filter(|e| matches!(e.child, CondensedChild::Point { .. }))
            .count();
        assert_eq!(point_rows, 12);
    }

    #[test]
    fn persistence_of_equal_infinities_is_zero() {
        assert_eq!(persistence(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(persistence(f64::INFINITY, 1.0), f64::INFINITY);
        assert_eq!(persistence(3.0, 1.0), 2.0);
    }

    #[test]
    fn three_groups_on_a_line() {
        let mut pts = Vec::new();
        for c in [0.0, 10.0, 20.0] {
            for j in 0..4 {
                pts.push(vec![c + 0.1 * j as f64]);
            }
        }
        let out = tree_for(&pts, 3, 2).select_clusters();
        assert_eq!(out.n_clusters, 3);
        assert_eq!(out.members[1], vec![4, 5, 6, 7]);
    }

    #[test]
    fn json_dump_round_trips_infinite_lambda() {
        let pts = vec![vec![0.0], vec![0.0], vec![5.0], vec![5.0]];
        let t = tree_for(&pts, 2, 2);
        let s = serde_json::to_string(&t).unwrap();
        let back: CondensedTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back.entries, t.entries);
    }
}
