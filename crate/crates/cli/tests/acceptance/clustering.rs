use std::time::Instant;

use rand::Rng;
use talkpoints_density::distance::DistanceMatrix;
use talkpoints_density::mst::{core_distances, mutual_reachability, prim_mst, total_weight};
use talkpoints_density::{dbcv, hdbscan, ClusteringParams};
use talkpoints_oracle::canonical_partition;
use talkpoints_oracle::dbcv_ref::reference_dbcv;
use talkpoints_oracle::hdbscan_ref::reference_hdbscan;
use talkpoints_oracle::instances::{blobs, rng};
use talkpoints_oracle::mst_ref::subset_min_weight;

use crate::{ensure, Check};

fn instance(seed: u64) -> (Vec<Vec<f64>>, usize, usize) {
    let mut r = rng(seed);
    let n = r.random_range(6..=40);
    let dim = r.random_range(2..=8);
    let centers = r.random_range(1..5);
    let spread = [0.05, 0.15, 0.4][r.random_range(0..3)];
    let pts = blobs(&mut r, n, dim, centers, spread, seed % 3 == 0);
    (pts, r.random_range(2..=5), r.random_range(1..6))
}

pub fn hdbscan_oracle() -> Check {
    let start = Instant::now();
    let mut clustered = 0;
    let total = 120;
    for seed in 0..total {
        let (pts, mcs, ms) = instance(seed);
        let got = hdbscan(&pts, &ClusteringParams::new(mcs, ms)).map_err(|e| format!("seed {seed}: {e}"))?;
        let want = reference_hdbscan(&pts, mcs, ms);
        ensure!(
            canonical_partition(&got.labels) == canonical_partition(&want),
            "seed {seed}: partitions differ"
        );
        clustered += want.iter().any(|&l| l >= 0) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{total} instances equal, {clustered} with clusters"))
}

pub fn mst_optimality() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 0..120u64 {
        let mut r = rng(1000 + seed);
        let n = 2 + (seed as usize % 11);
        let pts = blobs(&mut r, n, 3, 2, 0.3, seed % 2 == 0);
        let ms = r.random_range(1..4);
        let d = DistanceMatrix::euclidean(&pts);
        let core = core_distances(&d, ms);
        let w = |a: usize, b: usize| mutual_reachability(&d, &core, a, b);
        let diff = (total_weight(&prim_mst(&d, &core)) - subset_min_weight(n, w)).abs();
        worst = worst.max(diff);
        ensure!(diff <= 1e-9, "seed {seed} n={n}: off by {diff}");
        count += 1;
    }
    Ok(format!("{count} instances n=2..12, worst gap {worst:.1e}"))
}

pub fn dbcv_formula() -> Check {
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 5000u64;
    while compared < 20 {
        ensure!(seed < 5400, "too few clusterable fixtures");
        let s = seed;
        seed += 1;
        if s % 3 == 0 {
            // quantized instances hold duplicates, where the direct formula divides by zero
            continue;
        }
        let (pts, mcs, ms) = instance(s);
        let a = hdbscan(&pts, &ClusteringParams::new(mcs, ms)).map_err(|e| e.to_string())?;
        let Some(want) = reference_dbcv(&pts, &a.labels) else {
            continue;
        };
        let got = dbcv(&pts, &a).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() < 1e-6, "fixture {s}: {got} vs {want}");
        compared += 1;
    }
    Ok(format!("{compared} fixtures, worst gap {worst:.1e}"))
}
