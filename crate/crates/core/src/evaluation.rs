//! Evaluation harnesses: ideology and partisan classification against
//! generated viewpoints, the TRP baseline, topic diversity, evidence
//! extraction, and the P/R/F1 report.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Article, Ideology};
use crate::gateway::{ChatRequest, Gateway, GatewayError};
use crate::jsonfix::{coerce_string, coerce_string_list, field, lenient_parse, parse_yes_no};
use crate::perspectives::PartisanPerspective;
use crate::prompts;
use crate::ptp::{ranked_partition, PtpCluster};
use crate::talking_points::{repair_request, TalkingPoint};
use crate::vector::{rank_by_similarity, EmbeddingVector};

pub use crate::ptp::coverage;

pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_NEGATIVES: usize = 3;
pub const TRP_TOP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "topk")]
    TopK,
    #[serde(rename = "topk+metadata")]
    TopKMetadata,
    #[serde(rename = "trp")]
    Trp,
    #[serde(rename = "partisan")]
    Partisan,
    #[serde(rename = "partisan+metadata")]
    PartisanMetadata,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Direct,
        Method::TopK,
        Method::TopKMetadata,
        Method::Trp,
        Method::Partisan,
        Method::PartisanMetadata,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::TopK => "topk",
            Method::TopKMetadata => "topk+metadata",
            Method::Trp => "trp",
            Method::Partisan => "partisan",
            Method::PartisanMetadata => "partisan+metadata",
        }
    }

    /// Methods scored on unseen articles rather than PTP members.
    pub fn is_ideology_task(self) -> bool {
        matches!(self, Method::Direct | Method::TopK | Method::TopKMetadata)
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub article_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptp_id: Option<usize>,
    pub true_label: Ideology,
    /// `None` is an abstention.
    pub predicted_label: Option<Ideology>,
    pub method: Method,
    /// Ideology shown in the summary1 slot; absent for direct prompting.
    pub placeholder_assignment: Option<Ideology>,
    pub raw_answer: String,
}

fn mask_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\w*(?:left|right)\w*").expect("static regex"))
}

/// Replaces every word containing "left" or "right" (any case) with `[side]`.
/// Over-masks words such as "bright" or "leftover" on purpose.
pub fn mask_sides(text: &str) -> String {
    mask_regex().replace_all(text, "[side]").into_owned()
}

/// Seeded coin flip choosing which ideology fills the summary1 slot.
pub fn summary1_ideology(seed: u64, article_id: &str) -> Ideology {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(article_id.as_bytes());
    let d = h.finalize();
    if d[0] & 1 == 0 {
        Ideology::Left
    } else {
        Ideology::Right
    }
}

/// Reads which slot the answer names. `None` when unreadable or both appear.
pub fn parse_slot_choice(raw: &str) -> Option<u8> {
    let norm: String = raw
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
        .collect();
    match (norm.contains("summary1"), norm.contains("summary2")) {
        (true, false) => return Some(1),
        (false, true) => return Some(2),
        (true, true) => return None,
        _ => {}
    }
    match norm.trim_matches(|c: char| !c.is_alphanumeric()) {
        "1" => Some(1),
        "2" => Some(2),
        _ => None,
    }
}

/// Reads a direct-prompting answer.
pub fn parse_direct_choice(raw: &str) -> Option<Ideology> {
    let lower = raw.to_lowercase();
    match (lower.contains("liberal"), lower.contains("conservative")) {
        (true, false) => Some(Ideology::Left),
        (false, true) => Some(Ideology::Right),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Decoder {
    Slots { summary1: Ideology },
    Direct,
}

/// A classification prompt ready to send, with what it takes to decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedClassification {
    pub request: ChatRequest,
    record: ClassificationRecord,
    decoder: Decoder,
}

impl PreparedClassification {
    pub fn decode(&self, answer: &str) -> ClassificationRecord {
        let mut rec = self.record.clone();
        rec.raw_answer = answer.trim().to_string();
        rec.predicted_label = match self.decoder {
            Decoder::Direct => parse_direct_choice(answer),
            Decoder::Slots { summary1 } => parse_slot_choice(answer).map(|s| match s {
                1 => summary1,
                _ => summary1.opposite(),
            }),
        };
        rec
    }
}

fn article_block(article: &Article) -> String {
    mask_sides(&format!("{}\n{}", article.title, article.body))
}

fn skeleton(article: &Article, method: Method, ptp_id: Option<usize>, summary1: Option<Ideology>) -> ClassificationRecord {
    ClassificationRecord {
        article_id: article.id.clone(),
        issue: article.issue.clone(),
        ptp_id,
        true_label: article.bias,
        predicted_label: None,
        method,
        placeholder_assignment: summary1,
        raw_answer: String::new(),
    }
}

/// Two-way choice between the texts for each ideology, with the slot order
/// fixed by the seeded coin flip. Every slot is masked.
pub fn prepare_two_way(
    article: &Article,
    left_text: &str,
    right_text: &str,
    method: Method,
    ptp_id: Option<usize>,
    seed: u64,
) -> PreparedClassification {
    let summary1 = summary1_ideology(seed, &article.id);
    let (s1, s2) = match summary1 {
        Ideology::Left => (left_text, right_text),
        Ideology::Right => (right_text, left_text),
    };
    let prompt = prompts::CLASSIFY_VIEWPOINTS
        .render(&[
            ("article", &article_block(article)),
            ("summary1", &mask_sides(s1)),
            ("summary2", &mask_sides(s2)),
        ])
        .expect("classification template placeholders are fixed");
    PreparedClassification {
        request: ChatRequest::new(prompts::CLASSIFY_VIEWPOINTS.id, prompt).with_max_tokens(8),
        record: skeleton(article, method, ptp_id, Some(summary1)),
        decoder: Decoder::Slots { summary1 },
    }
}

pub fn prepare_direct(article: &Article) -> PreparedClassification {
    let prompt = prompts::CLASSIFY_DIRECT
        .render(&[("article", &article_block(article))])
        .expect("direct template placeholders are fixed");
    PreparedClassification {
        request: ChatRequest::new(prompts::CLASSIFY_DIRECT.id, prompt).with_max_tokens(8),
        record: skeleton(article, Method::Direct, None, None),
        decoder: Decoder::Direct,
    }
}

/// Sends every prepared prompt; a failed call becomes an abstention.
pub fn run_classifications(gateway: &Gateway, prepared: &[PreparedClassification]) -> Vec<ClassificationRecord> {
    let requests: Vec<ChatRequest> = prepared.iter().map(|p| p.request.clone()).collect();
    prepared
        .iter()
        .zip(gateway.complete_many(&requests))
        .map(|(p, res)| match res {
            Ok(answer) => p.decode(&answer),
            Err(e) => {
                let mut rec = p.record.clone();
                rec.raw_answer = format!("error: {e}");
                rec
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedViewpoint {
    pub ptp_id: usize,
    pub ideology: Ideology,
    pub text: String,
    pub digest: Option<String>,
    pub embedding: EmbeddingVector,
}

/// Embedded viewpoints of one event, searchable per ideology.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewpointIndex {
    pub entries: Vec<IndexedViewpoint>,
}

impl ViewpointIndex {
    pub fn build(gateway: &Gateway, perspectives: &[PartisanPerspective]) -> Result<Self, GatewayError> {
        let mut pending = Vec::new();
        for p in perspectives {
            for i in Ideology::BOTH {
                if let Some(v) = p.viewpoint(i) {
                    pending.push((p.ptp_id, i, v.text(), p.digest(i).map(|d| d.render())));
                }
            }
        }
        let texts: Vec<String> = pending.iter().map(|p| p.2.clone()).collect();
        let vecs = if texts.is_empty() { Vec::new() } else { gateway.embed(&texts)? };
        Ok(Self {
            entries: pending
                .into_iter()
                .zip(vecs)
                .map(|((ptp_id, ideology, text, digest), embedding)| IndexedViewpoint {
                    ptp_id,
                    ideology,
                    text,
                    digest,
                    embedding,
                })
                .collect(),
        })
    }

    /// The `k` viewpoints of `ideology` nearest `query`; ties by PTP id.
    pub fn top_k(&self, query: &EmbeddingVector, ideology: Ideology, k: usize) -> Vec<&IndexedViewpoint> {
        let own: Vec<&IndexedViewpoint> = self.entries.iter().filter(|e| e.ideology == ideology).collect();
        rank_by_similarity(query, own.iter().map(|e| (e.ptp_id, &e.embedding)))
            .into_iter()
            .take(k)
            .filter_map(|(id, _)| own.iter().find(|e| e.ptp_id == id).copied())
            .collect()
    }
}

fn side_text(views: &[&IndexedViewpoint], with_metadata: bool) -> String {
    views
        .iter()
        .map(|v| match (&v.digest, with_metadata) {
            (Some(d), true) => format!("{}\n{}", v.text, d),
            _ => v.text.clone(),
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Ideology of an unseen article from the event's nearest viewpoints per side.
pub fn prepare_ideology(
    article: &Article,
    article_embedding: &EmbeddingVector,
    index: &ViewpointIndex,
    k: usize,
    with_metadata: bool,
    seed: u64,
) -> PreparedClassification {
    let left = side_text(&index.top_k(article_embedding, Ideology::Left, k), with_metadata);
    let right = side_text(&index.top_k(article_embedding, Ideology::Right, k), with_metadata);
    let method = if with_metadata { Method::TopKMetadata } else { Method::TopK };
    prepare_two_way(article, &left, &right, method, None, seed)
}

pub fn classify_ideology(
    gateway: &Gateway,
    article: &Article,
    article_embedding: &EmbeddingVector,
    index: &ViewpointIndex,
    k: usize,
    with_metadata: bool,
    seed: u64,
) -> ClassificationRecord {
    let p = prepare_ideology(article, article_embedding, index, k, with_metadata, seed);
    run_classifications(gateway, std::slice::from_ref(&p)).remove(0)
}

/// Two-way choice between a PTP's own viewpoints. `None` when the
/// perspective lacks a side.
pub fn prepare_partisan(
    article: &Article,
    perspective: &PartisanPerspective,
    with_metadata: bool,
    seed: u64,
) -> Option<PreparedClassification> {
    let text = |i: Ideology| -> Option<String> {
        let v = perspective.viewpoint(i)?;
        Some(match (with_metadata, perspective.digest(i)) {
            (true, Some(d)) => format!("{}\n{}", v.text(), d.render()),
            _ => v.text(),
        })
    };
    let (l, r) = (text(Ideology::Left)?, text(Ideology::Right)?);
    let method = if with_metadata { Method::PartisanMetadata } else { Method::Partisan };
    Some(prepare_two_way(article, &l, &r, method, Some(perspective.ptp_id), seed))
}

pub fn classify_partisan(
    gateway: &Gateway,
    article: &Article,
    perspective: &PartisanPerspective,
    with_metadata: bool,
    seed: u64,
) -> Option<ClassificationRecord> {
    let p = prepare_partisan(article, perspective, with_metadata, seed)?;
    Some(run_classifications(gateway, std::slice::from_ref(&p)).remove(0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrpTexts {
    pub left: String,
    pub right: String,
    pub left_point_ids: Vec<String>,
    pub right_point_ids: Vec<String>,
    /// Both sides selected the same summaries.
    pub degenerate: bool,
}

/// Each side's top-3 point summaries nearest the PTP label. `None` when a
/// partition is empty.
pub fn trp_baseline(ptp: &PtpCluster, points: &BTreeMap<String, TalkingPoint>) -> Option<TrpTexts> {
    let pick = |i: Ideology| -> Vec<&TalkingPoint> {
        ranked_partition(ptp, i, points).into_iter().take(TRP_TOP).map(|(p, _)| p).collect()
    };
    let (l, r) = (pick(Ideology::Left), pick(Ideology::Right));
    if l.is_empty() || r.is_empty() {
        return None;
    }
    let join = |ps: &[&TalkingPoint]| ps.iter().map(|p| p.summary.as_str()).collect::<Vec<_>>().join("\n");
    let (left, right) = (join(&l), join(&r));
    Some(TrpTexts {
        degenerate: left == right,
        left_point_ids: l.iter().map(|p| p.id.clone()).collect(),
        right_point_ids: r.iter().map(|p| p.id.clone()).collect(),
        left,
        right,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_class: BTreeMap<Ideology, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: usize,
    pub abstentions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: MetricSummary,
    pub per_issue: BTreeMap<String, MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no classification records")]
    Empty,
    #[error("every record abstained")]
    AllAbstain,
    #[error("need at least {need} PTPs, got {got}")]
    TooFewPtps { got: usize, need: usize },
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn summarize<'a>(records: impl IntoIterator<Item = &'a ClassificationRecord>) -> MetricSummary {
    let mut tp: BTreeMap<Ideology, usize> = BTreeMap::new();
    let mut fp: BTreeMap<Ideology, usize> = BTreeMap::new();
    let mut support: BTreeMap<Ideology, usize> = BTreeMap::new();
    let (mut total, mut abstentions, mut correct) = (0, 0, 0);
    for r in records {
        total += 1;
        *support.entry(r.true_label).or_default() += 1;
        match r.predicted_label {
            None => abstentions += 1,
            Some(p) if p == r.true_label => {
                correct += 1;
                *tp.entry(p).or_default() += 1;
            }
            Some(p) => *fp.entry(p).or_default() += 1,
        }
    }
    let per_class: BTreeMap<Ideology, ClassMetrics> = Ideology::BOTH
        .into_iter()
        .map(|c| {
            let t = tp.get(&c).copied().unwrap_or(0);
            let f = fp.get(&c).copied().unwrap_or(0);
            let s = support.get(&c).copied().unwrap_or(0);
            let precision = ratio(t, t + f);
            let recall = ratio(t, s);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (
                c,
                ClassMetrics {
                    precision,
                    recall,
                    f1,
                    support: s,
                },
            )
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / per_class.len() as f64;
    MetricSummary {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: ratio(correct, total),
        per_class,
        total,
        abstentions,
    }
}

/// Per-class and macro P/R/F1; abstentions count against the true class.
pub fn score_report(records: &[ClassificationRecord]) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    if records.iter().all(|r| r.predicted_label.is_none()) {
        return Err(EvalError::AllAbstain);
    }
    let mut by_issue: BTreeMap<String, Vec<&ClassificationRecord>> = BTreeMap::new();
    for r in records {
        by_issue
            .entry(r.issue.clone().unwrap_or_else(|| "unknown".into()))
            .or_default()
            .push(r);
    }
    Ok(EvalReport {
        overall: summarize(records),
        per_issue: by_issue.into_iter().map(|(k, v)| (k, summarize(v))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicQuestion {
    pub point_id: String,
    pub ptp_id: usize,
    pub quartile: usize,
    /// PTP ids in the order shown.
    pub options: Vec<usize>,
    pub answer: Option<usize>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDiversityReport {
    /// Accuracy for Q1 (nearest the label) through Q4.
    pub quartile_accuracy: [f64; 4],
    pub quartile_counts: [usize; 4],
    pub accuracy: f64,
    pub questions: Vec<TopicQuestion>,
}

/// Splits a ranked list into four contiguous quartiles, earlier ones taking
/// the remainder.
pub fn quartile_bounds(n: usize) -> [usize; 5] {
    [0, n.div_ceil(4), (2 * n).div_ceil(4), (3 * n).div_ceil(4), n]
}

fn sub_seed(seed: u64, tag: &str, id: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(id.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// First integer in the answer that names an option, 1-based.
pub fn parse_option_number(raw: &str, n_options: usize) -> Option<usize> {
    raw.split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse::<usize>().ok())
        .find(|&k| (1..=n_options).contains(&k))
}

pub fn topic_relevance_request(statement: &str, options: &[&PtpCluster]) -> ChatRequest {
    let opts = options
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{}. {}: {}", i + 1, p.label.aspect, p.label.description))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = prompts::TOPIC_RELEVANCE
        .render(&[("statement", statement), ("options", &opts)])
        .expect("topic template placeholders are fixed");
    ChatRequest::new(prompts::TOPIC_RELEVANCE.id, prompt).with_max_tokens(8)
}

/// Samples half of each similarity quartile of every PTP and asks which of
/// the true label and `negatives` other labels fits each sampled point.
pub fn topic_diversity_task(
    gateway: &Gateway,
    ptps: &[PtpCluster],
    points: &BTreeMap<String, TalkingPoint>,
    negatives: usize,
    seed: u64,
) -> Result<TopicDiversityReport, EvalError> {
    if ptps.len() < negatives + 1 {
        return Err(EvalError::TooFewPtps {
            got: ptps.len(),
            need: negatives + 1,
        });
    }
    let mut ordered: Vec<&PtpCluster> = ptps.iter().collect();
    ordered.sort_by_key(|p| p.id);
    let mut questions = Vec::new();
    let mut requests = Vec::new();
    for (pos, ptp) in ordered.iter().enumerate() {
        let ranked = rank_by_similarity(
            &ptp.label.embedding,
            ptp.member_ids
                .iter()
                .filter_map(|id| points.get(id))
                .filter_map(|p| p.embedding.as_ref().map(|e| (p.id.as_str(), e))),
        );
        let bounds = quartile_bounds(ranked.len());
        let mut rng = sub_seed(seed, "topic", ptp.id);
        for q in 0..4 {
            let slice = &ranked[bounds[q]..bounds[q + 1]];
            if slice.is_empty() {
                continue;
            }
            let mut picked = index::sample(&mut rng, slice.len(), slice.len().div_ceil(2)).into_vec();
            picked.sort_unstable();
            for k in picked {
                let point = &points[slice[k].0];
                let others: Vec<&PtpCluster> =
                    ordered.iter().enumerate().filter(|(j, _)| *j != pos).map(|(_, p)| *p).collect();
                let mut options: Vec<&PtpCluster> = index::sample(&mut rng, others.len(), negatives)
                    .into_iter()
                    .map(|j| others[j])
                    .collect();
                options.push(ptp);
                options.shuffle(&mut rng);
                requests.push(topic_relevance_request(&point.summary, &options));
                questions.push(TopicQuestion {
                    point_id: point.id.clone(),
                    ptp_id: ptp.id,
                    quartile: q + 1,
                    options: options.iter().map(|p| p.id).collect(),
                    answer: None,
                    correct: false,
                });
            }
        }
    }
    for (q, res) in questions.iter_mut().zip(gateway.complete_many(&requests)) {
        if let Ok(raw) = res {
            q.answer = parse_option_number(&raw, q.options.len()).map(|k| q.options[k - 1]);
        }
        q.correct = q.answer == Some(q.ptp_id);
    }
    let mut counts = [0usize; 4];
    let mut hits = [0usize; 4];
    for q in &questions {
        counts[q.quartile - 1] += 1;
        hits[q.quartile - 1] += q.correct as usize;
    }
    Ok(TopicDiversityReport {
        quartile_accuracy: std::array::from_fn(|i| ratio(hits[i], counts[i])),
        quartile_counts: counts,
        accuracy: ratio(hits.iter().sum(), questions.len()),
        questions,
    })
}

/// The four evidence questions, asked together.
pub const EVIDENCE_QUESTIONS: [&str; 4] = [
    "Do the article and the viewpoint summary cover the same subject?",
    "Does the article criticise the same people or groups that the summary presents unfavourably?",
    "Does the article favour the same people or groups that the summary presents favourably?",
    "Does the article approach the subject from the same angle as the summary?",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceAnswer {
    pub question: String,
    pub answer: Option<bool>,
    pub quotes: Vec<String>,
    /// At least one quote, and every quote found verbatim in the body.
    pub supported: bool,
}

pub fn evidence_request(article: &Article, viewpoint_text: &str) -> ChatRequest {
    let questions = EVIDENCE_QUESTIONS
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{}. {q}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = prompts::EVIDENCE
        .render(&[("article", &article.body), ("viewpoint", viewpoint_text), ("questions", &questions)])
        .expect("evidence template placeholders are fixed");
    ChatRequest::new(prompts::EVIDENCE.id, prompt).with_max_tokens(800)
}

/// Answers keyed by question number, falling back to list order.
pub fn parse_evidence(raw: &str, body: &str) -> Result<Vec<EvidenceAnswer>, String> {
    let (v, _) = lenient_parse(raw)?;
    let items: Vec<serde_json::Value> = match v {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => match field(&o, &["answers", "results"]) {
            Some(serde_json::Value::Array(a)) => a.clone(),
            _ => return Err("no answers list".into()),
        },
        _ => return Err("evidence is not an object".into()),
    };
    let mut slots: [Option<(Option<bool>, Vec<String>)>; 4] = Default::default();
    for (pos, item) in items.iter().enumerate() {
        let serde_json::Value::Object(o) = item else { continue };
        let k = coerce_string(field(o, &["question", "id", "number"]))
            .and_then(|s| parse_option_number(&s, 4))
            .unwrap_or(pos + 1);
        if !(1..=4).contains(&k) || slots[k - 1].is_some() {
            continue;
        }
        let answer = coerce_string(field(o, &["answer", "value"])).and_then(|s| parse_yes_no(&s));
        let quotes = coerce_string_list(field(o, &["quotes", "evidence", "quote"]));
        slots[k - 1] = Some((answer, quotes));
    }
    Ok(EVIDENCE_QUESTIONS
        .iter()
        .zip(slots)
        .map(|(q, slot)| {
            let (answer, quotes) = slot.unwrap_or((None, Vec::new()));
            let supported = answer.is_some() && !quotes.is_empty() && quotes.iter().all(|s| body.contains(s.as_str()));
            EvidenceAnswer {
                question: q.to_string(),
                answer,
                quotes,
                supported,
            }
        })
        .collect())
}

/// Four answers with verified quotes. An unreadable response after one
/// repair yields four unsupported answers.
pub fn extract_evidence(
    gateway: &Gateway,
    article: &Article,
    viewpoint_text: &str,
) -> Result<Vec<EvidenceAnswer>, GatewayError> {
    if article.body.trim().is_empty() || viewpoint_text.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("article and viewpoint must be non-empty".into()));
    }
    let raw = gateway.complete(&evidence_request(article, viewpoint_text))?;
    match parse_evidence(&raw, &article.body) {
        Ok(a) => Ok(a),
        Err(_) => {
            let fixed = gateway.complete(&repair_request(&raw))?;
            Ok(parse_evidence(&fixed, &article.body).unwrap_or_else(|e| {
                tracing::warn!(article = %article.id, error = %e, "evidence unparseable");
                EVIDENCE_QUESTIONS
                    .iter()
                    .map(|q| EvidenceAnswer {
                        question: q.to_string(),
                        answer: None,
                        quotes: Vec::new(),
                        supported: false,
                    })
                    .collect()
            }))
        }
    }
}
