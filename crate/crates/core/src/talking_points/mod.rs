//! Talking points: a key discussion element of an article with its entities
//! and actor-to-target activities.

mod frame;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use frame::MediaFrame;

use crate::corpus::{Article, Ideology};
use crate::gateway::{ChatRequest, Gateway};
use crate::jsonfix::{coerce_string, coerce_string_list, field, lenient_parse, Recovery};
use crate::prompts;
use crate::vector::EmbeddingVector;

/// Most points kept per article.
pub const MAX_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_lowercase().as_str() {
            "positive" | "pos" | "+" | "favorable" | "favourable" | "supportive" | "praise" => Some(Sentiment::Positive),
            "negative" | "neg" | "-" | "unfavorable" | "unfavourable" | "critical" | "hostile" | "criticism" => {
                Some(Sentiment::Negative)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub description: String,
    pub actor: String,
    pub target: String,
    pub sentiment: Sentiment,
    pub frame: MediaFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalkingPoint {
    pub id: String,
    pub article_id: String,
    pub summary: String,
    pub entities: Vec<String>,
    pub activities: Vec<Activity>,
    pub ideology: Ideology,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingVector>,
}

impl TalkingPoint {
    pub fn point_id(article_id: &str, k: usize) -> String {
        format!("{article_id}#{k}")
    }

    /// One-line rendering with metadata, for prompts.
    pub fn describe_with_metadata(&self) -> String {
        let mut s = self.summary.clone();
        for a in &self.activities {
            s.push_str(&format!(
                " [{} -> {}: {}, {}; {}]",
                a.actor, a.target, a.sentiment, a.frame, a.description
            ));
        }
        s
    }
}

/// Checks the type invariants. Usable standalone as a fuzz target.
pub fn validate_talking_point(p: &TalkingPoint) -> Result<(), Vec<String>> {
    let mut problems = Vec::new();
    if p.summary.trim().is_empty() {
        problems.push("empty summary".to_string());
    }
    if p.id.is_empty() || p.article_id.is_empty() {
        problems.push("missing id".to_string());
    }
    let entities: BTreeSet<&str> = p.entities.iter().map(String::as_str).collect();
    for (i, a) in p.activities.iter().enumerate() {
        if a.actor.trim().is_empty() {
            problems.push(format!("activity {i}: empty actor"));
        }
        if a.target.trim().is_empty() {
            problems.push(format!("activity {i}: empty target"));
        }
        for e in [&a.actor, &a.target] {
            if !entities.contains(e.as_str()) {
                problems.push(format!("activity {i}: {e:?} missing from entities"));
            }
        }
    }
    if let Some(v) = &p.embedding {
        if (v.norm() - 1.0).abs() > 1e-6 {
            problems.push("embedding not unit norm".to_string());
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub points: Vec<TalkingPoint>,
    /// Every dropped or coerced item, itemized.
    pub diagnostics: Vec<String>,
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no recoverable talking-point JSON: {0}")]
pub struct ParseFailure(pub String);

/// Strict-then-lenient parse of an extraction response.
pub fn parse_talking_point_response(raw: &str, article_id: &str, bias: Ideology) -> Result<ParseOutcome, ParseFailure> {
    let (value, how) = lenient_parse(raw).map_err(ParseFailure)?;
    let mut out = ParseOutcome {
        repaired: how != Recovery::Strict,
        ..ParseOutcome::default()
    };
    let items: Vec<Value> = match value {
        Value::Array(items) => items,
        Value::Object(ref obj) => {
            match field(obj, &["talking_points", "talkingPoints", "points", "talking points"]) {
                Some(Value::Array(items)) => items.clone(),
                Some(Value::Object(one)) => vec![Value::Object(one.clone())],
                Some(_) => return Err(ParseFailure("talking_points is not a list".into())),
                None if obj.contains_key("summary") => vec![value.clone()],
                None => return Err(ParseFailure("no talking_points field".into())),
            }
        }
        _ => return Err(ParseFailure("response is neither an object nor a list".into())),
    };
    let mut valid = Vec::new();
    for (k, item) in items.iter().enumerate() {
        let Value::Object(obj) = item else {
            out.diagnostics.push(format!("point {k}: not an object, dropped"));
            continue;
        };
        match parse_point(obj, k, article_id, bias, &mut out.diagnostics) {
            Some(p) => valid.push(p),
            None => continue,
        }
    }
    if valid.len() > MAX_POINTS {
        out.diagnostics.push(format!(
            "{} points returned, kept the first {MAX_POINTS}",
            valid.len()
        ));
        valid.truncate(MAX_POINTS);
    }
    out.points = valid;
    Ok(out)
}

fn parse_point(
    obj: &Map<String, Value>,
    k: usize,
    article_id: &str,
    bias: Ideology,
    diags: &mut Vec<String>,
) -> Option<TalkingPoint> {
    let summary = coerce_string(field(obj, &["summary", "key_discussion_element", "point", "talking_point"]))
        .unwrap_or_default();
    if summary.is_empty() {
        diags.push(format!("point {k}: missing summary, dropped"));
        return None;
    }
    let mut entities = coerce_string_list(field(obj, &["entities", "entity"]));
    let raw_activities: Vec<Value> = match field(obj, &["activities", "activity"]) {
        Some(Value::Array(a)) => a.clone(),
        Some(Value::Object(o)) => vec![Value::Object(o.clone())],
        Some(Value::Null) | None => Vec::new(),
        Some(_) => {
            diags.push(format!("point {k}: activities is not a list, ignored"));
            Vec::new()
        }
    };
    let mut activities = Vec::new();
    for (j, a) in raw_activities.iter().enumerate() {
        let Value::Object(a) = a else {
            diags.push(format!("point {k} activity {j}: not an object, dropped"));
            continue;
        };
        let get = |names: &[&str]| coerce_string(field(a, names)).filter(|s| !s.is_empty());
        let Some(actor) = get(&["actor", "agent", "who"]) else {
            diags.push(format!("point {k} activity {j}: missing actor, dropped"));
            continue;
        };
        let Some(target) = get(&["target", "patient", "whom"]) else {
            diags.push(format!("point {k} activity {j}: missing target, dropped"));
            continue;
        };
        let Some(sentiment) = get(&["sentiment", "polarity"]).as_deref().and_then(Sentiment::parse) else {
            diags.push(format!("point {k} activity {j}: unreadable sentiment, dropped"));
            continue;
        };
        let raw_frame = get(&["frame", "media_frame", "mediaFrame"]).unwrap_or_default();
        let (frame, known) = MediaFrame::parse(&raw_frame);
        if !known {
            diags.push(format!("point {k} activity {j}: frame {raw_frame:?} mapped to Other"));
        }
        activities.push(Activity {
            description: get(&["description", "what", "action"]).unwrap_or_default(),
            actor,
            target,
            sentiment,
            frame,
        });
    }
    for a in &activities {
        for e in [&a.actor, &a.target] {
            if !entities.contains(e) {
                entities.push(e.clone());
            }
        }
    }
    Some(TalkingPoint {
        id: TalkingPoint::point_id(article_id, k),
        article_id: article_id.to_string(),
        summary,
        entities,
        activities,
        ideology: bias,
        embedding: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub article_id: String,
    pub points: Vec<TalkingPoint>,
    pub diagnostics: Vec<String>,
    /// True when the article produced no parseable response at all.
    pub skipped: bool,
}

pub fn extraction_request(article: &Article) -> ChatRequest {
    let frames: Vec<&str> = MediaFrame::ALL.iter().map(|f| f.name()).collect();
    let prompt = prompts::EXTRACT_TALKING_POINTS
        .render(&[
            ("frames", &frames.join("; ")),
            ("max_points", &MAX_POINTS.to_string()),
            ("title", &article.title),
            ("body", &article.body),
        ])
        .expect("extraction template placeholders are fixed");
    ChatRequest::new(prompts::EXTRACT_TALKING_POINTS.id, prompt).with_max_tokens(2048)
}

pub fn repair_request(raw: &str) -> ChatRequest {
    let prompt = prompts::REPAIR_JSON
        .render(&[("raw", raw)])
        .expect("repair template placeholders are fixed");
    ChatRequest::new(prompts::REPAIR_JSON.id, prompt).with_max_tokens(2048)
}

pub fn extract_talking_points(gateway: &Gateway, article: &Article) -> ExtractionOutcome {
    extract_all(gateway, std::slice::from_ref(article)).remove(0)
}

/// Extracts every article; failures are per-article diagnostics. Output is in
/// article-id order.
pub fn extract_all(gateway: &Gateway, articles: &[Article]) -> Vec<ExtractionOutcome> {
    let mut order: Vec<&Article> = articles.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let requests: Vec<ChatRequest> = order.iter().map(|a| extraction_request(a)).collect();
    let first = gateway.complete_many(&requests);

    let mut outcomes: Vec<Option<ExtractionOutcome>> = vec![None; order.len()];
    let mut retry: Vec<(usize, String, String)> = Vec::new();
    for (i, (article, res)) in order.iter().zip(first).enumerate() {
        match res {
            Err(e) => {
                tracing::warn!(article = %article.id, error = %e, "extraction call failed");
                outcomes[i] = Some(skipped(article, format!("backend error: {e}")));
            }
            Ok(raw) => match parse_talking_point_response(&raw, &article.id, article.bias) {
                Ok(p) => outcomes[i] = Some(finish(article, p, Vec::new())),
                Err(e) => retry.push((i, raw, e.to_string())),
            },
        }
    }
    let repairs: Vec<ChatRequest> = retry.iter().map(|(_, raw, _)| repair_request(raw)).collect();
    for ((i, _, first_err), res) in retry.iter().zip(gateway.complete_many(&repairs)) {
        let article = order[*i];
        let note = format!("first response unparseable: {first_err}");
        outcomes[*i] = Some(match res {
            Err(e) => skipped(article, format!("{note}; repair call failed: {e}")),
            Ok(raw) => match parse_talking_point_response(&raw, &article.id, article.bias) {
                Ok(p) => finish(article, p, vec![note]),
                Err(e) => skipped(article, format!("{note}; repair unparseable: {e}")),
            },
        });
    }
    outcomes.into_iter().map(|o| o.expect("every article handled")).collect()
}

fn skipped(article: &Article, message: String) -> ExtractionOutcome {
    tracing::warn!(article = %article.id, %message, "article skipped");
    ExtractionOutcome {
        article_id: article.id.clone(),
        points: Vec::new(),
        diagnostics: vec![message],
        skipped: true,
    }
}

fn finish(article: &Article, parsed: ParseOutcome, mut diagnostics: Vec<String>) -> ExtractionOutcome {
    diagnostics.extend(parsed.diagnostics);
    ExtractionOutcome {
        article_id: article.id.clone(),
        points: parsed.points,
        diagnostics,
        skipped: false,
    }
}
