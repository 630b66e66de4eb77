//! Synthetic corpora and scripted backends shared by the checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;
use talkpoints_cli::PipelineConfig;
use talkpoints_core::corpus::{Article, Ideology};
use talkpoints_core::gateway::mock::{FnChat, HashEmbedder};
use talkpoints_core::gateway::{ChatRequest, EmbeddingBackend, Gateway, GatewayError};
use talkpoints_core::perspectives::{PartisanPerspective, Viewpoint};
use talkpoints_core::prompts;
use talkpoints_core::ptp::{PtpCluster, PtpLabel};
use talkpoints_core::talking_points::TalkingPoint;
use talkpoints_core::vector::EmbeddingVector;

pub const DIM: usize = 32;

pub fn fixture_config(out: &Path) -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml");
    let mut cfg = PipelineConfig::load(&path).expect("bundled config loads");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

pub fn point(id: String, summary: String, i: usize, v: Vec<f64>) -> TalkingPoint {
    TalkingPoint {
        article_id: format!("art-{}", i / 3),
        id,
        summary,
        entities: Vec::new(),
        activities: Vec::new(),
        ideology: Ideology::BOTH[i % 2],
        embedding: Some(EmbeddingVector::normalized(v).expect("non-zero")),
    }
}

pub struct Planted {
    pub points: Vec<TalkingPoint>,
    pub truth: BTreeMap<String, usize>,
    pub centres: Vec<Vec<f64>>,
}

/// `k` groups around orthogonal centres plus 10% scattered points.
pub fn planted(k: usize, per_group: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.04).expect("valid sigma");
    let centres: Vec<Vec<f64>> = (0..k).map(|g| (0..DIM).map(|d| if d == g { 1.0 } else { 0.0 }).collect()).collect();
    let mut points = Vec::new();
    let mut truth = BTreeMap::new();
    let mut i = 0;
    for (g, c) in centres.iter().enumerate() {
        for j in 0..per_group {
            let id = format!("p{i:04}");
            truth.insert(id.clone(), g);
            points.push(point(id, format!("g{g} statement {j}"), i, unit(c.iter().map(|x| x + noise.sample(&mut rng)).collect())));
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

/// Label texts "group N: ..." embed to planted centre N.
pub struct CentreLookup {
    pub centres: Vec<Vec<f64>>,
    pub fallback: HashEmbedder,
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

/// Names a cluster after its most frequent "gN" tag; never merges; always
/// coherent.
pub fn scripted_labels() -> FnChat {
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

pub fn planted_gateway(p: &Planted) -> Gateway {
    Gateway::uncached(
        Arc::new(scripted_labels()),
        Arc::new(CentreLookup {
            centres: p.centres.clone(),
            fallback: HashEmbedder::new(DIM),
        }),
    )
}

/// Pseudo-random but prompt-determined answers, including unusable ones.
pub fn erratic_chat(seed: u64) -> FnChat {
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

pub const MARK: [&str; 2] = ["alpha", "omega"];

pub fn mark(i: Ideology) -> &'static str {
    match i {
        Ideology::Left => MARK[0],
        Ideology::Right => MARK[1],
    }
}

pub fn article(id: usize, truth: Ideology) -> Article {
    serde_json::from_value(json!({
        "id": format!("a{id:04}"),
        "event_id": "e1",
        "title": format!("Report {id}"),
        "body": format!("Coverage number {id} leaning {} on the budget vote.", mark(truth)),
        "source": "Outlet",
        "bias": truth,
        "published_at": "2024-01-01",
        "issue": if id % 2 == 0 { "economy" } else { "health" },
    }))
    .expect("well-formed article")
}

pub fn viewpoint(ptp: usize, side: Ideology) -> Viewpoint {
    Viewpoint {
        ptp_id: ptp,
        ideology: side,
        title: format!("View {ptp} {}", mark(side)),
        bullets: vec![format!("{} bullet for theme {ptp}", mark(side))],
        supporting_point_ids: Vec::new(),
    }
}

pub fn perspective(ptp: usize) -> PartisanPerspective {
    PartisanPerspective {
        ptp_id: ptp,
        aspect: format!("theme {ptp}"),
        left: Some(viewpoint(ptp, Ideology::Left)),
        right: Some(viewpoint(ptp, Ideology::Right)),
        left_digest: None,
        right_digest: None,
        one_sided: false,
        diagnostics: Vec::new(),
    }
}

fn section<'a>(r: &'a ChatRequest, name: &str) -> &'a str {
    prompts::section(&r.rendered_prompt, name).unwrap_or("")
}

/// Knows the planted markers and themes.
pub fn oracle(r: &ChatRequest) -> Result<String, GatewayError> {
    if r.template_id == prompts::TOPIC_RELEVANCE.id {
        let theme = section(r, "STATEMENT").split_whitespace().last().unwrap_or("").to_string();
        let pick = section(r, "OPTIONS")
            .lines()
            .find(|l| l.contains(&format!("topic-{theme}:")))
            .and_then(|l| l.split('.').next())
            .unwrap_or("0");
        return Ok(pick.to_string());
    }
    let art = section(r, "ARTICLE");
    let m = MARK.iter().find(|m| art.contains(*m)).copied().unwrap_or("");
    Ok(if section(r, "SUMMARY1").contains(m) { "summary1" } else { "summary2" }.into())
}

/// Uniform choice from a hash of the prompt.
pub fn coin(r: &ChatRequest) -> Result<String, GatewayError> {
    let h = r.rendered_prompt.bytes().fold(0xcbf29ce484222325u64, |a, b| (a ^ b as u64).wrapping_mul(0x100000001b3));
    let h = h ^ (h >> 29);
    if r.template_id == prompts::TOPIC_RELEVANCE.id {
        Ok(format!("{}", h % 4 + 1))
    } else {
        Ok(if h % 2 == 0 { "summary1" } else { "summary2" }.into())
    }
}

pub fn gateway(f: fn(&ChatRequest) -> Result<String, GatewayError>) -> Gateway {
    Gateway::uncached(Arc::new(FnChat::new(f)), Arc::new(HashEmbedder::new(16)))
}

/// `n_ptps` themes with `per` member points each.
pub fn topic_fixture(g: &Gateway, n_ptps: usize, per: usize) -> (Vec<PtpCluster>, BTreeMap<String, TalkingPoint>) {
    let mut points = BTreeMap::new();
    let mut ptps = Vec::new();
    for t in 1..=n_ptps {
        let ids: Vec<String> = (0..per).map(|j| format!("t{t:02}-{j:03}")).collect();
        for (j, id) in ids.iter().enumerate() {
            let summary = format!("statement {j} about theme {t}");
            points.insert(
                id.clone(),
                TalkingPoint {
                    id: id.clone(),
                    article_id: format!("a{t}-{j}"),
                    embedding: Some(g.embed_one(&summary).expect("hash embedder")),
                    summary,
                    entities: Vec::new(),
                    activities: Vec::new(),
                    ideology: Ideology::BOTH[j % 2],
                },
            );
        }
        ptps.push(PtpCluster {
            id: t,
            label: PtpLabel {
                aspect: format!("topic-{t}"),
                description: format!("theme {t}"),
                embedding: EmbeddingVector::normalized(vec![1.0; 16]).expect("non-zero"),
            },
            left_member_ids: ids.iter().step_by(2).cloned().collect(),
            right_member_ids: ids.iter().skip(1).step_by(2).cloned().collect(),
            frequency: per,
            member_ids: ids,
            iteration: 1,
        });
    }
    (ptps, points)
}
