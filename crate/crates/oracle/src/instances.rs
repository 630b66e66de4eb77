//! Seeded random point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Unit vectors in `dim` dimensions drawn around `centers` random directions.
/// `quantize` rounds coordinates to one decimal before normalizing, which
/// produces duplicate points and tied distances.
pub fn blobs(rng: &mut ChaCha8Rng, n: usize, dim: usize, centers: usize, spread: f64, quantize: bool) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let cs: Vec<Vec<f64>> = (0..centers.max(1))
        .map(|_| {
            let mut c: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
            normalize(&mut c);
            c
        })
        .collect();
    (0..n)
        .map(|_| {
            let c = &cs[rng.random_range(0..cs.len())];
            let mut p: Vec<f64> = c.iter().map(|x| x + spread * normal.sample(rng)).collect();
            if quantize {
                for x in p.iter_mut() {
                    *x = (*x * 10.0).round() / 10.0;
                }
                if p.iter().all(|&x| x == 0.0) {
                    p[0] = 1.0;
                }
            }
            normalize(&mut p);
            p
        })
        .collect()
}

/// Gaussian clusters around well-separated centers in the plane, scaled
/// into `dim` dimensions (extra coordinates are small noise), not normalized.
pub fn planted_gaussians(rng: &mut ChaCha8Rng, per_cluster: usize, centers: &[Vec<f64>], sigma: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            pts.push(c.iter().map(|x| x + normal.sample(rng)).collect());
            truth.push(k);
        }
    }
    (pts, truth)
}
