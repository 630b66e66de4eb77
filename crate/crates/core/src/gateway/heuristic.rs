//! A deterministic offline chat backend that answers every template from the
//! inputs recovered out of the rendered prompt. Quality is beside the point;
//! it exists so the whole pipeline can run without a model.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::mock::TokenHashEmbedder;
use super::{ChatBackend, ChatRequest, GatewayError};
use crate::jsonfix::lenient_parse;
use crate::prompts::{self, section};

const NEGATIVE_CUES: &[&str] = &[
    "criticized", "criticised", "attacked", "blamed", "condemned", "opposed", "slammed", "warned", "accused",
    "rejected", "denounced", "mocked", "questioned", "sued", "blocked",
];
const POSITIVE_CUES: &[&str] = &[
    "praised", "defended", "backed", "supported", "welcomed", "endorsed", "applauded", "championed", "thanked",
    "funded", "approved",
];

const FRAME_KEYWORDS: &[(&str, &str)] = &[
    ("jobs", "Economic"),
    ("tax", "Economic"),
    ("cost", "Economic"),
    ("prices", "Economic"),
    ("premiums", "Economic"),
    ("budget", "Capacity and Resources"),
    ("funding", "Capacity and Resources"),
    ("court", "Legality"),
    ("lawsuit", "Legality"),
    ("ruling", "Legality"),
    ("police", "Crime and Punishment"),
    ("crime", "Crime and Punishment"),
    ("border", "Security and Defense"),
    ("security", "Security and Defense"),
    ("health", "Health and Safety"),
    ("flooding", "Health and Safety"),
    ("hospital", "Health and Safety"),
    ("families", "Quality of Life"),
    ("poll", "Public Opinion"),
    ("voters", "Public Opinion"),
    ("rules", "External Regulation"),
    ("bill", "Policy Prescription"),
    ("plan", "Policy Prescription"),
];

/// Chat backend answering from prompt content alone.
#[derive(Debug, Default, Clone, Copy)]
pub struct HeuristicChat;

fn sentences(text: &str) -> Vec<String> {
    text.split_inclusive(['.', '!', '?'])
        .map(str::trim)
        .filter(|s| s.chars().filter(|c| c.is_alphanumeric()).count() > 3)
        .map(str::to_string)
        .collect()
}

fn token_set(text: &str) -> BTreeSet<String> {
    TokenHashEmbedder::tokens(text).into_iter().collect()
}

fn jaccard(a: &str, b: &str) -> f64 {
    let (a, b) = (token_set(a), token_set(b));
    let union = a.union(&b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}

fn overlap(a: &str, b: &str) -> usize {
    token_set(a).intersection(&token_set(b)).count()
}

/// Runs of capitalised words, sentence-initial position included.
fn capitalised_phrases(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for w in sentence.split_whitespace() {
        let clean = w.trim_matches(|c: char| !c.is_alphanumeric());
        let cap = clean.chars().next().is_some_and(char::is_uppercase);
        if cap {
            cur.push(clean);
        }
        if (!cap || clean.len() != w.len()) && !cur.is_empty() {
            out.push(cur.join(" "));
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.push(cur.join(" "));
    }
    out
}

fn attitude(text: &str) -> i32 {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).collect();
    let pos = words.iter().filter(|w| POSITIVE_CUES.contains(w)).count() as i32;
    let neg = words.iter().filter(|w| NEGATIVE_CUES.contains(w)).count() as i32;
    (pos - neg).signum()
}

fn frame_for(sentence: &str) -> &'static str {
    let toks = token_set(sentence);
    FRAME_KEYWORDS
        .iter()
        .find(|(k, _)| toks.contains(*k))
        .map_or("Political", |(_, f)| f)
}

fn extract(prompt: &str) -> String {
    let article = section(prompt, "ARTICLE").unwrap_or("");
    let body = article.split_once('\n').map_or(article, |(_, b)| b);
    let points: Vec<serde_json::Value> = sentences(body)
        .into_iter()
        .take(4)
        .map(|s| {
            let caps = capitalised_phrases(&s);
            let actor = caps.first().cloned().unwrap_or_else(|| "Unnamed source".into());
            let target = caps
                .iter()
                .rev()
                .find(|c| **c != actor)
                .cloned()
                .unwrap_or_else(|| "the public".into());
            let sentiment = if attitude(&s) < 0 { "negative" } else { "positive" };
            json!({
                "summary": s,
                "entities": [actor, target],
                "activities": [{
                    "description": s,
                    "actor": actor,
                    "target": target,
                    "sentiment": sentiment,
                    "frame": frame_for(&s),
                }],
            })
        })
        .collect();
    json!({ "talking_points": points }).to_string()
}

fn bullet_lines(block: &str) -> Vec<String> {
    block
        .lines()
        .filter_map(|l| l.trim().strip_prefix("- "))
        .map(|l| l.split(" [").next().unwrap_or(l).trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

fn label(prompt: &str) -> String {
    let statements = bullet_lines(section(prompt, "STATEMENTS").unwrap_or(""));
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut order = 0;
    for s in &statements {
        for t in TokenHashEmbedder::tokens(s) {
            let e = counts.entry(t).or_insert((0, order));
            e.0 += 1;
            order += 1;
        }
    }
    let mut ranked: Vec<(String, (usize, usize))> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    let aspect = ranked
        .iter()
        .take(3)
        .map(|(t, _)| {
            let mut c = t.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(" ");
    let description = statements.first().cloned().unwrap_or_default();
    json!({ "aspect": aspect, "description": description }).to_string()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn viewpoint(prompt: &str) -> String {
    let theme = prompt
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("Theme: "))
        .map(|l| l.split(". ").next().unwrap_or(l).trim_end_matches('.'))
        .unwrap_or("Theme");
    let mut seen = BTreeSet::new();
    let bullets: Vec<String> = bullet_lines(section(prompt, "OWN SIDE").unwrap_or(""))
        .into_iter()
        .filter(|b| seen.insert(b.clone()))
        .take(3)
        .collect();
    json!({ "title": format!("On {theme}"), "bullets": bullets }).to_string()
}

fn best_option(statement: &str, options: &str) -> usize {
    let mut best = (0usize, 1usize);
    for (i, line) in options.lines().enumerate() {
        let o = overlap(statement, line);
        if o > best.0 {
            best = (o, i + 1);
        }
    }
    best.1
}

fn evidence(prompt: &str) -> String {
    let article = section(prompt, "ARTICLE").unwrap_or("");
    let view = section(prompt, "VIEWPOINT").unwrap_or("");
    let sents = sentences(article);
    let quote = sents
        .iter()
        .enumerate()
        .max_by(|a, b| overlap(a.1, view).cmp(&overlap(b.1, view)).then(b.0.cmp(&a.0)))
        .map(|(_, s)| s.clone());
    let shared = overlap(article, view) > 0;
    let same_attitude = attitude(article) == attitude(view);
    let answers: Vec<serde_json::Value> = [shared, shared && same_attitude, shared && same_attitude, shared]
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            json!({
                "question": i + 1,
                "answer": yes_no(a),
                "quotes": quote.iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "answers": answers }).to_string()
}

fn agreement(prompt: &str) -> String {
    let a = section(prompt, "SUMMARY1").unwrap_or("");
    let b = section(prompt, "SUMMARY2").unwrap_or("");
    let q = section(prompt, "QUESTION").unwrap_or("");
    let j = jaccard(a, b);
    let same = attitude(a) == attitude(b);
    let ents_a: BTreeSet<String> = capitalised_phrases(a).into_iter().collect();
    let ents_b: BTreeSet<String> = capitalised_phrases(b).into_iter().collect();
    let idx = crate::snapshot::AGREEMENT_QUESTIONS.iter().position(|x| *x == q);
    yes_no(match idx {
        Some(0) => j >= 0.2,
        Some(1) => ents_a.intersection(&ents_b).count() > 1,
        Some(2) => same,
        Some(3) => same && j >= 0.6,
        _ => j >= 0.4,
    })
}

fn direct(prompt: &str) -> String {
    let article = section(prompt, "ARTICLE").unwrap_or("");
    let d = Sha256::digest(article.as_bytes());
    if d[0] & 1 == 0 { "liberal" } else { "conservative" }.to_string()
}

impl ChatBackend for HeuristicChat {
    fn id(&self) -> &str {
        "mock-heuristic"
    }
    fn model(&self) -> &str {
        "heuristic-v1"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let p = request.rendered_prompt.as_str();
        let out = match request.template_id.as_str() {
            id if id == prompts::EXTRACT_TALKING_POINTS.id => extract(p),
            id if id == prompts::REPAIR_JSON.id => lenient_parse(section(p, "MALFORMED").unwrap_or(""))
                .map(|(v, _)| v.to_string())
                .unwrap_or_else(|_| "{}".into()),
            id if id == prompts::LABEL_CLUSTER.id => label(p),
            id if id == prompts::MERGE_LABELS.id => yes_no(
                jaccard(section(p, "LABEL A").unwrap_or(""), section(p, "LABEL B").unwrap_or("")) >= 0.6,
            ),
            id if id == prompts::COHERENCE_CHECK.id => {
                let aspect = section(p, "ASPECT").unwrap_or("");
                let st = bullet_lines(section(p, "STATEMENTS").unwrap_or(""));
                let hits = st.iter().filter(|s| overlap(aspect, s) > 0).count();
                yes_no(2 * hits >= st.len())
            }
            id if id == prompts::CONDITIONED_SUMMARY.id => {
                sentences(section(p, "ARTICLE").unwrap_or("")).into_iter().take(2).collect::<Vec<_>>().join(" ")
            }
            id if id == prompts::VIEWPOINT.id => viewpoint(p),
            id if id == prompts::CLASSIFY_VIEWPOINTS.id => {
                let art = section(p, "ARTICLE").unwrap_or("");
                let s1 = overlap(art, section(p, "SUMMARY1").unwrap_or(""));
                let s2 = overlap(art, section(p, "SUMMARY2").unwrap_or(""));
                if s2 > s1 { "summary2" } else { "summary1" }.to_string()
            }
            id if id == prompts::CLASSIFY_DIRECT.id => direct(p),
            id if id == prompts::TOPIC_RELEVANCE.id => best_option(
                section(p, "STATEMENT").unwrap_or(""),
                section(p, "OPTIONS").unwrap_or(""),
            )
            .to_string(),
            id if id == prompts::EVIDENCE.id => evidence(p),
            id if id == prompts::AGREEMENT.id => agreement(p),
            other => return Err(GatewayError::InvalidRequest(format!("unknown template {other}"))),
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Ideology;
    use crate::talking_points::{extraction_request, parse_talking_point_response};

    #[test]
    fn extraction_round_trips_through_the_parser() {
        let article = crate::corpus::Article {
            id: "a".into(),
            event_id: "e".into(),
            title: "T".into(),
            body: "Senator Alvarez criticized the Coal Lobby over the bill. Mayor Chen praised Harbor Wind for new jobs."
                .into(),
            source: "s".into(),
            bias: Ideology::Left,
            published_at: chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            issue: None,
        };
        let raw = HeuristicChat.complete(&extraction_request(&article)).unwrap();
        let out = parse_talking_point_response(&raw, "a", Ideology::Left).unwrap();
        assert_eq!(out.points.len(), 2);
        let a = &out.points[0].activities[0];
        assert_eq!((a.actor.as_str(), a.target.as_str()), ("Senator Alvarez", "Coal Lobby"));
        assert_eq!(a.sentiment, crate::talking_points::Sentiment::Negative);
        assert_eq!(out.points[1].activities[0].frame.name(), "Economic");
    }

    #[test]
    fn answers_are_deterministic() {
        let r = ChatRequest::new(
            prompts::MERGE_LABELS.id,
            prompts::MERGE_LABELS
                .render(&[("label_a", "Coal Lobby Bill: x"), ("label_b", "Coal Lobby Bill: y")])
                .unwrap(),
        );
        assert_eq!(HeuristicChat.complete(&r).unwrap(), "yes");
        assert_eq!(HeuristicChat.complete(&r).unwrap(), HeuristicChat.complete(&r).unwrap());
    }
}
