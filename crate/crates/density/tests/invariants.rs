use proptest::prelude::*;
use talkpoints_density::distance::DistanceMatrix;
use talkpoints_density::mst::{core_distances, mutual_reachability};
use talkpoints_density::{hdbscan, ClusteringParams};
use talkpoints_oracle::canonical_partition;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

proptest! {
    #[test]
    fn mutual_reachability_bounds(pts in prop::collection::vec(point(3), 3..25), k in 1usize..6) {
        let d = DistanceMatrix::euclidean(&pts);
        let core = core_distances(&d, k);
        for a in 0..pts.len() {
            for b in 0..pts.len() {
                let m = mutual_reachability(&d, &core, a, b);
                prop_assert_eq!(m, mutual_reachability(&d, &core, b, a));
                prop_assert!(m >= d.get(a, b));
                prop_assert!(m >= core[a] && m >= core[b]);
            }
        }
    }

    #[test]
    fn labels_invariant_under_permutation(
        pts in prop::collection::vec(point(2), 6..30),
        mcs in 2usize..5,
        seed in any::<u64>(),
    ) {
        // equal weights may merge in index order, so only tie-free inputs
        // (min_samples 1, distinct pairwise distances) are order independent
        let n = pts.len();
        let d = DistanceMatrix::euclidean(&pts);
        let mut all: Vec<f64> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).map(|(a, b)| d.get(a, b)).collect();
        all.sort_by(f64::total_cmp);
        prop_assume!(all.windows(2).all(|w| w[0] != w[1]) && all[0] > 0.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let params = ClusteringParams::new(mcs, 1);
        let a = hdbscan(&pts, &params).unwrap();
        let b = hdbscan(&shuffled, &params).unwrap();
        let mut back = vec![0; n];
        for (pos, &orig) in perm.iter().enumerate() {
            back[orig] = b.labels[pos];
        }
        prop_assert_eq!(canonical_partition(&a.labels), canonical_partition(&back));
    }

    #[test]
    fn duplicate_groups_become_clusters(
        centers in prop::collection::vec(point(4), 2..6),
        copies in 3usize..7,
    ) {
        // drop centers that coincide
        let mut distinct: Vec<Vec<f64>> = Vec::new();
        for c in centers {
            if distinct.iter().all(|d| d.iter().zip(&c).any(|(x, y)| (x - y).abs() > 1e-6)) {
                distinct.push(c);
            }
        }
        prop_assume!(distinct.len() >= 2);
        let mut pts = Vec::new();
        for c in &distinct {
            for _ in 0..copies {
                pts.push(c.clone());
            }
        }
        let out = hdbscan(&pts, &ClusteringParams::new(copies, copies)).unwrap();
        prop_assert_eq!(out.n_clusters, distinct.len());
        prop_assert_eq!(out.noise_count(), 0);
        for (k, c) in out.members.iter().enumerate() {
            prop_assert_eq!(c.clone(), ((k * copies)..((k + 1) * copies)).collect::<Vec<_>>());
        }
    }
}
