//! Grid search over `min_cluster_size`, scored by DBCV.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{dbcv, hdbscan, ClusterAssignment, ClusterError, ClusteringParams, DEFAULT_MIN_SAMPLES};

/// Smallest pool the grid search accepts.
pub const MIN_POINTS: usize = 10;

/// `{5, 7, 9, ⌈0.01·n⌉, ⌈0.02·n⌉, ⌈0.03·n⌉, ⌈0.04·n⌉}`, deduplicated, values
/// below 2 dropped, ascending.
pub fn candidate_grid(n: usize) -> Vec<usize> {
    let mut grid = vec![5, 7, 9];
    for pct in 1..=4u64 {
        // ceil(pct * n / 100) in integer arithmetic
        grid.push(((pct * n as u64).div_ceil(100)) as usize);
    }
    grid.retain(|&m| m >= 2);
    grid.sort_unstable();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCell {
    pub params: ClusteringParams,
    /// `None` when the cell failed (too few points, all noise).
    pub score: Option<f64>,
    pub n_clusters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: ClusteringParams,
    pub best_score: f64,
    pub assignment: ClusterAssignment,
    pub cells: Vec<GridCell>,
}

/// Evaluates every grid cell and keeps the DBCV maximum, ties going to the
/// smaller `min_cluster_size`.
pub fn grid_search<P: AsRef<[f64]> + Sync>(
    points: &[P],
    min_samples: usize,
) -> Result<GridSearch, ClusterError> {
    if points.len() < MIN_POINTS {
        return Err(ClusterError::TooFewPoints {
            got: points.len(),
            need: MIN_POINTS,
        });
    }
    crate::distance::validate_points(points)?;
    let grid = candidate_grid(points.len());
    let evaluated: Vec<(GridCell, Option<ClusterAssignment>)> = grid
        .par_iter()
        .map(|&mcs| {
            let params = ClusteringParams::new(mcs, min_samples);
            let outcome = hdbscan(points, &params)
                .and_then(|a| dbcv(points, &a).map(|s| (s, a)));
            match outcome {
                Ok((score, a)) => (
                    GridCell {
                        params,
                        score: Some(score),
                        n_clusters: a.n_clusters,
                    },
                    Some(a),
                ),
                Err(e) => {
                    tracing::debug!(min_cluster_size = mcs, error = %e, "grid cell failed");
                    (
                        GridCell {
                            params,
                            score: None,
                            n_clusters: 0,
                        },
                        None,
                    )
                }
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, (cell, _)) in evaluated.iter().enumerate() {
        if let Some(s) = cell.score {
            // grid is ascending, so strict improvement keeps the smaller size on ties
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (idx, best_score) = best.ok_or(ClusterError::NoClusteringFound)?;
    let cells: Vec<GridCell> = evaluated.iter().map(|(c, _)| c.clone()).collect();
    let (cell, assignment) = evaluated.into_iter().nth(idx).expect("index in range");
    Ok(GridSearch {
        best: cell.params,
        best_score,
        assignment: assignment.expect("scored cell has an assignment"),
        cells,
    })
}

pub fn select_hyperparameters<P: AsRef<[f64]> + Sync>(
    points: &[P],
) -> Result<ClusteringParams, ClusterError> {
    grid_search(points, DEFAULT_MIN_SAMPLES).map(|g| g.best)
}
