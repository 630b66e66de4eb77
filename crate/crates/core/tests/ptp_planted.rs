//! Planted-group recovery, coverage and loop termination for `identify_ptps`.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use talkpoints_core::corpus::Ideology;
use talkpoints_core::gateway::mock::{FnChat, HashEmbedder};
use talkpoints_core::gateway::{EmbeddingBackend, Gateway, GatewayError};
use talkpoints_core::prompts;
use talkpoints_core::ptp::{identify_ptps, PtpConfig, PtpRun};
use talkpoints_core::talking_points::TalkingPoint;
use talkpoints_core::vector::EmbeddingVector;

const DIM: usize = 32;

/// Label texts of the form "group N: ..." map to the planted centre N; any
/// other text falls back to a hash embedding.
struct CentreLookup {
    centres: Vec<Vec<f64>>,
    fallback: HashEmbedder,
}

impl EmbeddingBackend for CentreLookup {
    fn id(&self) -> &str {
        "centre-lookup"
    }
    fn model(&self) -> &str {
        "test"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        texts
            .iter()
            .map(|t| {
                let g = t
                    .strip_prefix("group ")
                    .and_then(|r| r.split(':').next())
                    .and_then(|n| n.trim().parse::<usize>().ok());
                match g.and_then(|g| self.centres.get(g)) {
                    Some(c) => Ok(c.clone()),
                    None => Ok(self.fallback.embed(std::slice::from_ref(t))?.remove(0)),
                }
            })
            .collect()
    }
}

/// Names a cluster after the most frequent "gN" tag among its statements.
fn scripted_labels() -> FnChat {
    FnChat::new(|r| {
        if r.template_id == prompts::LABEL_CLUSTER.id {
            let s = prompts::section(&r.rendered_prompt, "STATEMENTS").unwrap_or("");
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for tok in s.split_whitespace() {
                if let Some(g) = tok.strip_prefix('g').and_then(|n| n.parse::<usize>().ok()) {
                    *counts.entry(g).or_default() += 1;
                }
            }
            let g = counts.iter().max_by_key(|(g, c)| (**c, std::cmp::Reverse(**g))).map(|(g, _)| *g);
            Ok(match g {
                Some(g) => format!(r#"{{"aspect":"group {g}","description":"planted theme {g}"}}"#),
                None => r#"{"aspect":"noise","description":"unrelated chatter"}"#.into(),
            })
        } else if r.template_id == prompts::MERGE_LABELS.id {
            Ok("no".into())
        } else {
            Ok("yes".into())
        }
    })
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn point(id: String, summary: String, i: usize, v: Vec<f64>) -> TalkingPoint {
    TalkingPoint {
        article_id: format!("art-{}", i / 3),
        id,
        summary,
        entities: Vec::new(),
        activities: Vec::new(),
        ideology: if i % 2 == 0 { Ideology::Left } else { Ideology::Right },
        embedding: Some(EmbeddingVector::normalized(v).unwrap()),
    }
}

struct Planted {
    points: Vec<TalkingPoint>,
    truth: BTreeMap<String, usize>,
    centres: Vec<Vec<f64>>,
}

/// `k` groups around orthogonal centres plus 10% scattered noise points.
fn planted(k: usize, per_group: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.04).unwrap();
    let centres: Vec<Vec<f64>> = (0..k).map(|g| (0..DIM).map(|d| if d == g { 1.0 } else { 0.0 }).collect()).collect();
    let mut points = Vec::new();
    let mut truth = BTreeMap::new();
    let mut i = 0;
    for (g, c) in centres.iter().enumerate() {
        for j in 0..per_group {
            let v = unit(c.iter().map(|x| x + noise.sample(&mut rng)).collect());
            let id = format!("p{i:04}");
            truth.insert(id.clone(), g);
            points.push(point(id, format!("g{g} statement {j}"), i, v));
            i += 1;
        }
    }
    for j in 0..(k * per_group) / 10 {
        let v = unit((0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect());
        points.push(point(format!("p{i:04}"), format!("stray remark {j}"), i, v));
        i += 1;
    }
    Planted { points, truth, centres }
}

fn run(p: &Planted) -> PtpRun {
    let gw = Gateway::uncached(
        Arc::new(scripted_labels()),
        Arc::new(CentreLookup {
            centres: p.centres.clone(),
            fallback: HashEmbedder::new(DIM),
        }),
    );
    identify_ptps(&gw, &p.points, p.points.len() / 3, &PtpConfig::default()).unwrap()
}

fn membership_accuracy(p: &Planted, run: &PtpRun) -> f64 {
    let assignment = run.assignment();
    let by_id: BTreeMap<usize, &str> = run.clusters.iter().map(|c| (c.id, c.label.aspect.as_str())).collect();
    let hits = p
        .truth
        .iter()
        .filter(|(id, g)| {
            assignment
                .get(*id)
                .is_some_and(|c| by_id[c] == format!("group {g}"))
        })
        .count();
    hits as f64 / p.truth.len() as f64
}

#[test]
fn planted_groups_are_recovered() {
    for (k, seed) in [(3, 11u64), (5, 12), (8, 13)] {
        let p = planted(k, 24, seed);
        let r = run(&p);
        assert_eq!(r.clusters.len(), k, "k={k}: {:?}", r.clusters.iter().map(|c| &c.label.aspect).collect::<Vec<_>>());
        let acc = membership_accuracy(&p, &r);
        assert!(acc >= 0.95, "k={k}: membership accuracy {acc}");
        let cov = r.coverage();
        assert!(cov >= 0.80, "k={k}: coverage {cov}");
    }
}

#[test]
fn ids_are_dense_and_one_based() {
    let r = run(&planted(3, 20, 5));
    let ids: Vec<usize> = r.clusters.iter().map(|c| c.id).collect();
    assert_eq!(ids, (1..=ids.len()).collect::<Vec<_>>());
    for c in &r.clusters {
        assert_eq!(c.frequency, c.member_ids.len());
        assert_eq!(c.left_member_ids.len() + c.right_member_ids.len(), c.frequency);
    }
}

/// Upper bound on iterations given the smallest number of points any one
/// iteration assigned.
fn iteration_bound(total: usize, run: &PtpRun) -> usize {
    let min_assigned = run.iterations.iter().map(|l| l.assigned).min().unwrap_or(0);
    total.div_ceil(min_assigned.max(1)) + 1
}

fn random_chat(seed: u64) -> FnChat {
    FnChat::new(move |r| {
        let h = r.rendered_prompt.bytes().fold(seed, |a, b| a.wrapping_mul(31).wrapping_add(b as u64));
        Ok(match (r.template_id.as_str(), h % 4) {
            (t, 0) if t == prompts::LABEL_CLUSTER.id => "not json at all".into(),
            (t, _) if t == prompts::LABEL_CLUSTER.id => format!(r#"{{"aspect":"topic {}","description":"d"}}"#, h % 5),
            (_, 0) => "no".into(),
            (_, 1) => "maybe?".into(),
            _ => "yes".into(),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loop_terminates_within_bound(
        seed in any::<u64>(),
        n in 0usize..70,
        dim in 2usize..12,
        all_noise in any::<bool>(),
        threshold in 0.3f64..0.99,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = rng.random_range(1..4);
        let points: Vec<TalkingPoint> = (0..n)
            .map(|i| {
                let v: Vec<f64> = if all_noise {
                    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
                } else {
                    let b = i % blobs;
                    (0..dim).map(|d| if d == b { 1.0 } else { 0.0 } + rng.random_range(-0.1..0.1)).collect()
                };
                let v = if v.iter().all(|x| *x == 0.0) { vec![1.0; dim] } else { v };
                point(format!("q{i}"), format!("s{i}"), i, v)
            })
            .collect();
        let gw = Gateway::uncached(Arc::new(random_chat(seed)), Arc::new(HashEmbedder::new(dim)));
        let cfg = PtpConfig { membership_threshold: threshold, ..PtpConfig::default() };
        let r = identify_ptps(&gw, &points, n / 3, &cfg).unwrap();
        prop_assert!(r.iterations.len() <= iteration_bound(n, &r), "{} iterations for {n} points", r.iterations.len());
        prop_assert_eq!(r.assigned_points, r.assignment().len());
        prop_assert!(r.assigned_points <= n);
    }
}

#[test]
fn all_noise_input_halts() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let points: Vec<TalkingPoint> = (0..60)
        .map(|i| point(format!("z{i}"), format!("z{i}"), i, (0..48).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let gw = Gateway::uncached(Arc::new(random_chat(1)), Arc::new(HashEmbedder::new(48)));
    let r = identify_ptps(&gw, &points, 20, &PtpConfig::default()).unwrap();
    assert!(r.iterations.len() <= iteration_bound(60, &r));
}
