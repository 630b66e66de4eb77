use talkpoints_density::{grid_search, ClusterError, DEFAULT_MIN_SAMPLES};
use talkpoints_oracle::instances::{planted_gaussians, rng};

#[test]
fn planted_gaussians_recovered() {
    let mut r = rng(42);
    let centers = vec![vec![0.0, 0.0, 0.0], vec![10.0, 0.0, 0.0], vec![0.0, 10.0, 0.0]];
    let (pts, truth) = planted_gaussians(&mut r, 100, &centers, 0.8);
    let g = grid_search(&pts, DEFAULT_MIN_SAMPLES).unwrap();
    assert_eq!(g.assignment.n_clusters, 3);
    assert!(g.best_score > 0.5, "score {}", g.best_score);
    // every found cluster is pure with respect to the planted labels
    for members in &g.assignment.members {
        let t = truth[members[0]];
        assert!(members.iter().all(|&i| truth[i] == t));
    }
    let noise = g.assignment.noise_count();
    assert!(noise < 30, "noise {noise}");
    assert_eq!(g.cells.len(), talkpoints_density::candidate_grid(300).len());
}

#[test]
fn uniform_noise_too_small() {
    let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, 0.0]).collect();
    assert!(matches!(
        grid_search(&pts, DEFAULT_MIN_SAMPLES),
        Err(ClusterError::TooFewPoints { got: 9, need: 10 })
    ));
}
