//! Brute-force references for the test suites.
//!
//! Nothing here depends on the production crates; every routine is written
//! from the definitions with plain collections so it can serve as an
//! independent check.

pub mod dbcv_ref;
pub mod hdbscan_ref;
pub mod instances;
pub mod mst_ref;
pub mod tallies;

/// Canonical form of a flat clustering: clusters renumbered by first
/// appearance, noise kept as -1.
pub fn canonical_partition(labels: &[i32]) -> Vec<i32> {
    let mut seen: Vec<i32> = Vec::new();
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                -1
            } else if let Some(p) = seen.iter().position(|&s| s == l) {
                p as i32
            } else {
                seen.push(l);
                (seen.len() - 1) as i32
            }
        })
        .collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}
