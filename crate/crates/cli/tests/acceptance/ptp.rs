use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use talkpoints_core::gateway::mock::HashEmbedder;
use talkpoints_core::gateway::Gateway;
use talkpoints_core::ptp::{identify_ptps, PtpConfig, PtpRun};
use talkpoints_core::talking_points::TalkingPoint;

use crate::fixtures::{erratic_chat, planted, planted_gateway, point, Planted};
use crate::{ensure, Check};

const GROUPS: [(usize, u64); 3] = [(3, 11), (5, 12), (8, 13)];

fn run(p: &Planted) -> Result<PtpRun, String> {
    identify_ptps(&planted_gateway(p), &p.points, p.points.len() / 3, &PtpConfig::default()).map_err(|e| e.to_string())
}

fn accuracy(p: &Planted, r: &PtpRun) -> f64 {
    let assignment = r.assignment();
    let aspect: BTreeMap<usize, &str> = r.clusters.iter().map(|c| (c.id, c.label.aspect.as_str())).collect();
    let hits = p
        .truth
        .iter()
        .filter(|(id, g)| assignment.get(*id).is_some_and(|c| aspect[c] == format!("group {g}")))
        .count();
    hits as f64 / p.truth.len() as f64
}

pub fn planted_recovery() -> Check {
    let mut notes = Vec::new();
    for (k, seed) in GROUPS {
        let p = planted(k, 24, seed);
        let r = run(&p)?;
        ensure!(r.clusters.len() == k, "k={k}: found {} PTPs", r.clusters.len());
        let acc = accuracy(&p, &r);
        ensure!(acc >= 0.95, "k={k}: membership accuracy {acc:.3}");
        notes.push(format!("k={k} acc {acc:.3}"));
    }
    Ok(notes.join(", "))
}

pub fn coverage_floor() -> Check {
    let mut notes = Vec::new();
    for (k, seed) in GROUPS {
        let r = run(&planted(k, 24, seed))?;
        let c = r.coverage();
        ensure!(c >= 0.80, "k={k}: coverage {c:.3}");
        notes.push(format!("k={k} {c:.3}"));
    }
    Ok(notes.join(", "))
}

pub fn termination() -> Check {
    let mut worst_ratio: f64 = 0.0;
    let cases = 60;
    for seed in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(0..80);
        let dim = rng.random_range(2..12);
        let all_noise = seed % 3 == 0;
        let blobs = rng.random_range(1..4);
        let points: Vec<TalkingPoint> = (0..n)
            .map(|i| {
                let v: Vec<f64> = if all_noise {
                    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
                } else {
                    (0..dim).map(|d| if d == i % blobs { 1.0 } else { 0.0 } + rng.random_range(-0.1..0.1)).collect()
                };
                point(format!("q{i}"), format!("s{i}"), i, v)
            })
            .collect();
        let gw = Gateway::uncached(Arc::new(erratic_chat(seed)), Arc::new(HashEmbedder::new(dim)));
        let cfg = PtpConfig {
            membership_threshold: rng.random_range(0.3..0.99),
            ..PtpConfig::default()
        };
        let r = identify_ptps(&gw, &points, n / 3, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let min_assigned = r.iterations.iter().map(|l| l.assigned).min().unwrap_or(0);
        let bound = n.div_ceil(min_assigned.max(1)) + 1;
        ensure!(r.iterations.len() <= bound, "seed {seed}: {} iterations, bound {bound}", r.iterations.len());
        worst_ratio = worst_ratio.max(r.iterations.len() as f64 / bound as f64);
    }
    Ok(format!("{cases} fuzzed inputs, a third all-noise; worst iterations/bound {worst_ratio:.2}"))
}
