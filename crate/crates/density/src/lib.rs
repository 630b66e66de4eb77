//! Density-based clustering for embedding vectors.
//!
//! The crate provides a from-scratch HDBSCAN (core distances, mutual
//! reachability, minimum spanning tree, single-linkage hierarchy, condensed
//! tree and excess-of-mass selection), the DBCV validity index, and the
//! `min_cluster_size` grid search used to tune HDBSCAN on a pool of points.
//!
//! Distances are Euclidean. Callers working in cosine geometry pass
//! unit-normalized vectors, for which Euclidean distance is a monotone
//! function of cosine similarity.

mod dbcv;
pub mod distance;
mod error;
mod grid;
pub mod hierarchy;
pub mod mst;

use serde::{Deserialize, Serialize};

pub use dbcv::{dbcv, dbcv_components, DbcvComponents};
pub use error::ClusterError;
pub use grid::{candidate_grid, MIN_POINTS as MIN_GRID_POINTS, grid_search, select_hyperparameters, GridCell, GridSearch};
pub use hierarchy::{CondensedEntry, CondensedTree};

/// Default `min_samples` held fixed while `min_cluster_size` is swept.
pub const DEFAULT_MIN_SAMPLES: usize = 5;

/// Distance used by the clusterer. Only one metric is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Euclidean distance on unit-normalized vectors.
    #[default]
    EuclideanOnNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    #[serde(default)]
    pub metric: Metric,
}

impl ClusteringParams {
    pub fn new(min_cluster_size: usize, min_samples: usize) -> Self {
        Self {
            min_cluster_size,
            min_samples,
            metric: Metric::EuclideanOnNormalized,
        }
    }

    /// `min_samples` equal to `min_cluster_size`, the usual HDBSCAN default.
    pub fn with_min_cluster_size(min_cluster_size: usize) -> Self {
        Self::new(min_cluster_size, min_cluster_size)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::InvalidParams(format!(
                "min_cluster_size must be at least 2, got {}",
                self.min_cluster_size
            )));
        }
        if self.min_samples == 0 {
            return Err(ClusterError::InvalidParams(
                "min_samples must be positive".into(),
            ));
        }
        if self.min_samples > self.min_cluster_size {
            tracing::warn!(
                min_samples = self.min_samples,
                min_cluster_size = self.min_cluster_size,
                "min_samples exceeds min_cluster_size"
            );
        }
        Ok(())
    }
}

/// Flat clustering result. Label `-1` marks noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<i32>,
    pub n_clusters: usize,
    /// Member indices per cluster, ascending.
    pub members: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    /// Builds an assignment from raw labels, renumbering clusters densely in
    /// order of their smallest member index.
    pub fn from_labels(raw: &[i32]) -> Self {
        let mut order: Vec<i32> = Vec::new();
        for &l in raw {
            if l >= 0 && !order.contains(&l) {
                order.push(l);
            }
        }
        let mut members = vec![Vec::new(); order.len()];
        let labels = raw
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if l < 0 {
                    -1
                } else {
                    let k = order.iter().position(|&o| o == l).unwrap();
                    members[k].push(i);
                    k as i32
                }
            })
            .collect();
        Self {
            labels,
            n_clusters: order.len(),
            members,
        }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Runs HDBSCAN with excess-of-mass cluster selection.
///
/// Ties between equal mutual-reachability weights are broken by the lower
/// point index, so the output is a deterministic function of the input order.
pub fn hdbscan<P: AsRef<[f64]>>(
    points: &[P],
    params: &ClusteringParams,
) -> Result<ClusterAssignment, ClusterError> {
    let tree = condensed_tree(points, params)?;
    Ok(tree.select_clusters())
}

/// Builds the condensed tree without selecting clusters, for inspection.
pub fn condensed_tree<P: AsRef<[f64]>>(
    points: &[P],
    params: &ClusteringParams,
) -> Result<CondensedTree, ClusterError> {
    params.validate()?;
    distance::validate_points(points)?;
    if points.len() < params.min_cluster_size {
        return Err(ClusterError::TooFewPoints {
            got: points.len(),
            need: params.min_cluster_size,
        });
    }
    let dist = distance::DistanceMatrix::euclidean(points);
    let core = mst::core_distances(&dist, params.min_samples);
    let tree = mst::prim_mst(&dist, &core);
    let dendrogram = hierarchy::Dendrogram::from_mst(points.len(), &tree);
    Ok(CondensedTree::build(&dendrogram, params.min_cluster_size))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn two_orthogonal_duplicate_pairs() {
        let a = unit(&[1.0, 0.0]);
        let b = unit(&[0.0, 1.0]);
        let pts = vec![a.clone(), a, b.clone(), b];
        let out = hdbscan(&pts, &ClusteringParams::with_min_cluster_size(2)).unwrap();
        assert_eq!(out.n_clusters, 2);
        assert_eq!(out.labels, vec![0, 0, 1, 1]);
        assert_eq!(out.noise_count(), 0);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![unit(&[0.3, 0.4, 0.5]); 5];
        let out = hdbscan(&pts, &ClusteringParams::with_min_cluster_size(3)).unwrap();
        assert_eq!(out.n_clusters, 1);
        assert_eq!(out.members[0], vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn too_few_points_rejected() {
        let pts = vec![vec![1.0, 0.0]; 2];
        let err = hdbscan(&pts, &ClusteringParams::with_min_cluster_size(3)).unwrap_err();
        assert!(matches!(err, ClusterError::TooFewPoints { got: 2, need: 3 }));
    }

    #[test]
    fn non_finite_rejected() {
        let pts = vec![vec![1.0, 0.0], vec![f64::NAN, 0.0], vec![0.0, 1.0]];
        let err = hdbscan(&pts, &ClusteringParams::with_min_cluster_size(2)).unwrap_err();
        assert!(matches!(err, ClusterError::NonFinite { index: 1 }));
    }

    #[test]
    fn min_cluster_size_one_rejected() {
        let pts = vec![vec![1.0, 0.0]; 3];
        assert!(matches!(
            hdbscan(&pts, &ClusteringParams::new(1, 1)),
            Err(ClusterError::InvalidParams(_))
        ));
    }

    #[test]
    fn from_labels_renumbers_by_first_member() {
        let a = ClusterAssignment::from_labels(&[7, -1, 3, 7, 3]);
        assert_eq!(a.labels, vec![0, -1, 1, 0, 1]);
        assert_eq!(a.members, vec![vec![0, 3], vec![2, 4]]);
        assert_eq!(a.n_clusters, 2);
    }
}
