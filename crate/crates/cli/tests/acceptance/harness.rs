use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use talkpoints_core::corpus::Ideology;
use talkpoints_core::evaluation::{
    classify_ideology, classify_partisan, score_report, topic_diversity_task, ClassificationRecord, ViewpointIndex,
};
use talkpoints_core::gateway::Gateway;
use talkpoints_core::perspectives::{aggregate_metadata, PartisanPerspective, TargetSummary, DIGEST_TOP};
use talkpoints_core::ptp::{PtpCluster, PtpLabel};
use talkpoints_core::talking_points::{Activity, MediaFrame, Sentiment, TalkingPoint};
use talkpoints_core::vector::EmbeddingVector;
use talkpoints_oracle::tallies::{partition_digest, DigestRows, RefActivity};

use crate::fixtures::{article, coin, gateway, oracle, perspective, topic_fixture};
use crate::{ensure, Check};

fn truth(i: usize) -> Ideology {
    if (i * 7) % 10 < 6 {
        Ideology::Left
    } else {
        Ideology::Right
    }
}

fn partisan(g: &Gateway, n: usize) -> Result<Vec<ClassificationRecord>, String> {
    (0..n)
        .map(|i| classify_partisan(g, &article(i, truth(i)), &perspective(i % 7 + 1), i % 3 == 0, 7).ok_or_else(|| format!("article {i}: no comparable viewpoints")))
        .collect()
}

fn ideology(g: &Gateway, n: usize) -> Result<Vec<ClassificationRecord>, String> {
    let pers: Vec<PartisanPerspective> = (1..=6).map(perspective).collect();
    let index = ViewpointIndex::build(g, &pers).map_err(|e| e.to_string())?;
    (0..n)
        .map(|i| {
            let a = article(i, truth(i));
            let e = g.embed_one(&a.embedding_text()).map_err(|e| e.to_string())?;
            Ok(classify_ideology(g, &a, &e, &index, 3, i % 2 == 0, 11))
        })
        .collect()
}

fn macro_f1(recs: &[ClassificationRecord]) -> Result<f64, String> {
    Ok(score_report(recs).map_err(|e| e.to_string())?.overall.macro_f1)
}

pub fn calibration() -> Check {
    let g = gateway(oracle);
    for (task, f1) in [("partisan", macro_f1(&partisan(&g, 200)?)?), ("ideology", macro_f1(&ideology(&g, 200)?)?)] {
        ensure!(f1 == 1.0, "oracle {task} macro F1 {f1}");
    }
    let (ptps, points) = topic_fixture(&g, 6, 20);
    let t = topic_diversity_task(&g, &ptps, &points, 3, 5).map_err(|e| e.to_string())?;
    ensure!(t.accuracy == 1.0, "oracle topic accuracy {}", t.accuracy);

    let g = gateway(coin);
    let p = macro_f1(&partisan(&g, 1000)?)?;
    let i = macro_f1(&ideology(&g, 1000)?)?;
    ensure!((p - 0.5).abs() <= 0.05, "random partisan macro F1 {p:.3}");
    ensure!((i - 0.5).abs() <= 0.05, "random ideology macro F1 {i:.3}");
    let (ptps, points) = topic_fixture(&g, 10, 200);
    let t = topic_diversity_task(&g, &ptps, &points, 3, 5).map_err(|e| e.to_string())?;
    ensure!(t.questions.len() == 1000, "{} topic questions", t.questions.len());
    ensure!((t.accuracy - 0.25).abs() <= 0.04, "random topic accuracy {:.3}", t.accuracy);
    Ok(format!("oracle 1.0 on all three; random {p:.3} / {i:.3} / {:.3}", t.accuracy))
}

const ACTORS: &[&str] = &["Mayor Lee", "Senator Cho", "Unions", "Farmers"];
const TARGETS: &[&str] = &["tax bill", "pipeline", "budget", "court ruling", "wind farm"];

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

struct Fixture {
    ptp: PtpCluster,
    points: BTreeMap<String, TalkingPoint>,
    label: Vec<f64>,
    raw: BTreeMap<String, Vec<f64>>,
}

fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(3..8);
    let label = random_vec(&mut rng, dim);
    let mut points = BTreeMap::new();
    let mut raw = BTreeMap::new();
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for i in 0..rng.random_range(1..16) {
        let id = format!("pt{i:02}");
        let v = random_vec(&mut rng, dim);
        let activities = (0..rng.random_range(0..4))
            .map(|_| Activity {
                description: String::new(),
                actor: ACTORS.choose(&mut rng).expect("non-empty").to_string(),
                target: TARGETS.choose(&mut rng).expect("non-empty").to_string(),
                sentiment: if rng.random_bool(0.5) { Sentiment::Positive } else { Sentiment::Negative },
                frame: *MediaFrame::ALL.choose(&mut rng).expect("non-empty"),
            })
            .collect();
        let ideology = if rng.random_bool(0.55) { Ideology::Left } else { Ideology::Right };
        match ideology {
            Ideology::Left => left.push(id.clone()),
            Ideology::Right => right.push(id.clone()),
        }
        raw.insert(id.clone(), v.clone());
        points.insert(
            id.clone(),
            TalkingPoint {
                id: id.clone(),
                article_id: format!("a{i}"),
                summary: format!("statement {i}"),
                entities: Vec::new(),
                activities,
                ideology,
                embedding: Some(EmbeddingVector::normalized(v).expect("non-zero")),
            },
        );
    }
    let ptp = PtpCluster {
        id: 1,
        label: PtpLabel {
            aspect: "a".into(),
            description: "d".into(),
            embedding: EmbeddingVector::normalized(label.clone()).expect("non-zero"),
        },
        member_ids: left.iter().chain(&right).cloned().collect(),
        frequency: left.len() + right.len(),
        left_member_ids: left,
        right_member_ids: right,
        iteration: 1,
    };
    Fixture { ptp, points, label, raw }
}

fn rows(v: &[TargetSummary]) -> DigestRows {
    v.iter().map(|t| (t.target.clone(), t.actor.clone(), t.frame.clone(), t.count)).collect()
}

pub fn digest_oracle() -> Check {
    let mut compared = 0;
    for seed in 0..50u64 {
        let f = fixture(seed);
        for side in Ideology::BOTH {
            let part: Vec<(String, Vec<f64>, Vec<RefActivity>)> = f
                .ptp
                .partition(side)
                .iter()
                .map(|id| {
                    let acts = f.points[id]
                        .activities
                        .iter()
                        .map(|a| RefActivity {
                            actor: a.actor.clone(),
                            target: a.target.clone(),
                            positive: a.sentiment == Sentiment::Positive,
                            frame: a.frame.name().to_string(),
                        })
                        .collect();
                    (id.clone(), f.raw[id].clone(), acts)
                })
                .collect();
            match (aggregate_metadata(&f.ptp, side, &f.points), partition_digest(&f.label, &part, DIGEST_TOP)) {
                (None, None) => {}
                (Some(g), Some((pos, neg))) => {
                    ensure!(rows(&g.positive_targets) == pos, "fixture {seed} {side:?}: positive rows differ");
                    ensure!(rows(&g.negative_targets) == neg, "fixture {seed} {side:?}: negative rows differ");
                    compared += 1;
                }
                _ => return Err(format!("fixture {seed} {side:?}: presence differs")),
            }
        }
    }
    ensure!(compared >= 50, "only {compared} non-empty partitions");
    Ok(format!("50 fixtures, {compared} partitions compared"))
}
