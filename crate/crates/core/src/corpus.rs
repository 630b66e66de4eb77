//! Bias-coded news corpus: loading, validation, event partitioning and
//! selection of unseen evaluation articles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::vector::{cosine_similarity, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ideology {
    Left,
    Right,
}

impl Ideology {
    pub const BOTH: [Ideology; 2] = [Ideology::Left, Ideology::Right];

    pub fn opposite(self) -> Self {
        match self {
            Ideology::Left => Ideology::Right,
            Ideology::Right => Ideology::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ideology::Left => "left",
            Ideology::Right => "right",
        }
    }
}

impl fmt::Display for Ideology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ideology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Ideology::Left),
            "right" => Ok(Ideology::Right),
            other => Err(format!("unknown ideology {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub event_id: String,
    pub title: String,
    pub body: String,
    pub source: String,
    pub bias: Ideology,
    pub published_at: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
}

impl Article {
    /// Text sent to the embedding backend.
    pub fn embedding_text(&self) -> String {
        format!("{}\n{}", self.title, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub issue: String,
    pub title: String,
    pub description: String,
    pub article_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<EmbeddingVector>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueStats {
    pub articles: usize,
    pub events: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_issue: BTreeMap<String, IssueStats>,
    pub total: IssueStats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCorpus {
    pub events: Vec<Event>,
    pub articles: BTreeMap<String, Article>,
    pub stats: CorpusStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub article_id: Option<String>,
    pub message: String,
}

/// Machine-readable account of everything skipped while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines_read: usize,
    pub loaded: usize,
    pub diagnostics: Vec<Diagnostic>,
    /// Articles dropped because their outlet has no bias coding.
    pub unknown_outlets: BTreeMap<String, usize>,
}

impl LoadReport {
    pub fn dropped_unknown_outlet(&self) -> usize {
        self.unknown_outlets.values().sum()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate article id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("bias map {path}: {message}")]
    BiasMap { path: PathBuf, message: String },
    #[error("event {0} has no centroid")]
    MissingCentroid(String),
    #[error("candidate {0} has no embedding")]
    MissingEmbedding(String),
    #[error("event {0} not found")]
    UnknownEvent(String),
}

/// Renames input keys to the canonical article fields,
/// e.g. `{"text": "body"}` reads the body from a `text` column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldMapping(pub BTreeMap<String, String>);

impl FieldMapping {
    fn apply(&self, mut obj: Map<String, Value>) -> Map<String, Value> {
        for (from, to) in &self.0 {
            if let Some(v) = obj.remove(from) {
                obj.insert(to.clone(), v);
            }
        }
        obj
    }
}

pub fn load_bias_map(path: &Path) -> Result<HashMap<String, Ideology>, CorpusError> {
    let bias_err = |message: String| CorpusError::BiasMap {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bias_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bias_err(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| bias_err(format!("missing column {name:?}")))
    };
    let (src_col, bias_col) = (col("source")?, col("bias")?);
    let mut map = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bias_err(e.to_string()))?;
        let source = rec.get(src_col).unwrap_or("").to_string();
        let bias = rec
            .get(bias_col)
            .unwrap_or("")
            .parse::<Ideology>()
            .map_err(|e| bias_err(format!("row {}: {e}", i + 2)))?;
        if source.is_empty() {
            return Err(bias_err(format!("row {}: empty source", i + 2)));
        }
        map.insert(source, bias);
    }
    Ok(map)
}

pub fn load_corpus(path: &Path, bias_map_path: &Path) -> Result<(EventCorpus, LoadReport), CorpusError> {
    load_corpus_with(path, bias_map_path, &FieldMapping::default())
}

pub fn load_corpus_with(
    path: &Path,
    bias_map_path: &Path,
    mapping: &FieldMapping,
) -> Result<(EventCorpus, LoadReport), CorpusError> {
    let bias_map = load_bias_map(bias_map_path)?;
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut report = LoadReport::default();
    let mut articles: BTreeMap<String, Article> = BTreeMap::new();
    // event id -> (title, description) from the first record that carries them
    let mut event_meta: BTreeMap<String, (Option<String>, Option<String>)> = BTreeMap::new();
    let mut event_order: Vec<String> = Vec::new();
    let mut event_members: HashMap<String, Vec<String>> = HashMap::new();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines_read += 1;
        let value: Value = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line: lineno,
                message: "expected a JSON object".into(),
            });
        };
        let obj = mapping.apply(obj);
        let record = match parse_record(&obj) {
            Ok(r) => r,
            Err(message) => {
                tracing::warn!(line = lineno, %message, "skipping article record");
                report.diagnostics.push(Diagnostic {
                    line: lineno,
                    article_id: obj.get("id").and_then(Value::as_str).map(str::to_string),
                    message,
                });
                continue;
            }
        };
        let Some(&bias) = bias_map.get(&record.source) else {
            *report.unknown_outlets.entry(record.source.clone()).or_default() += 1;
            continue;
        };
        if articles.contains_key(&record.id) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: lineno,
                id: record.id,
            });
        }
        let meta = event_meta.entry(record.event_id.clone()).or_insert_with(|| {
            event_order.push(record.event_id.clone());
            (None, None)
        });
        if meta.0.is_none() {
            meta.0 = record.event_title.clone();
        }
        if meta.1.is_none() {
            meta.1 = record.event_description.clone();
        }
        event_members
            .entry(record.event_id.clone())
            .or_default()
            .push(record.id.clone());
        articles.insert(
            record.id.clone(),
            Article {
                id: record.id,
                event_id: record.event_id,
                title: record.title,
                body: record.body,
                source: record.source,
                bias,
                published_at: record.published_at,
                issue: record.issue,
            },
        );
    }
    report.loaded = articles.len();
    for (source, n) in &report.unknown_outlets {
        tracing::warn!(%source, count = n, "dropped articles from outlet without bias coding");
    }

    let mut events: Vec<Event> = event_order
        .into_iter()
        .map(|id| {
            let ids = event_members.remove(&id).unwrap_or_default();
            let issue = ids
                .iter()
                .find_map(|a| articles[a].issue.clone())
                .unwrap_or_else(|| "unknown".to_string());
            let (title, description) = event_meta.remove(&id).unwrap_or_default();
            Event {
                title: title.unwrap_or_else(|| id.clone()),
                description: description.unwrap_or_default(),
                id,
                issue,
                article_ids: ids,
                centroid: None,
            }
        })
        .collect();
    events.sort_by(|a, b| a.id.cmp(&b.id));
    let stats = compute_stats(&events);
    Ok((
        EventCorpus {
            events,
            articles,
            stats,
        },
        report,
    ))
}

struct Record {
    id: String,
    event_id: String,
    title: String,
    body: String,
    source: String,
    published_at: NaiveDate,
    issue: Option<String>,
    event_title: Option<String>,
    event_description: Option<String>,
}

fn parse_record(obj: &Map<String, Value>) -> Result<Record, String> {
    let text = |key: &str| -> Result<String, String> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Number(n)) if key == "id" => Ok(n.to_string()),
            Some(_) => Err(format!("field {key:?} is not a string")),
            None => Err(format!("missing field {key:?}")),
        }
    };
    let optional = |key: &str| obj.get(key).and_then(Value::as_str).map(str::to_string);
    let id = text("id")?;
    if id.trim().is_empty() {
        return Err("empty id".into());
    }
    let body = text("body")?;
    if body.trim().is_empty() {
        return Err("empty body".into());
    }
    let raw_date = text("published_at")?;
    Ok(Record {
        event_id: text("event_id")?,
        title: text("title").unwrap_or_default(),
        source: text("source")?,
        published_at: parse_date(&raw_date)?,
        issue: optional("issue"),
        event_title: optional("event_title"),
        event_description: optional("event_description"),
        id,
        body,
    })
}

/// Accepts `YYYY-MM-DD` or a full RFC 3339 timestamp (reduced to its UTC day).
fn parse_date(raw: &str) -> Result<NaiveDate, String> {
    let raw = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(d);
    }
    chrono::DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&chrono::Utc).date_naive())
        .map_err(|_| format!("unparseable published_at {raw:?}"))
}

pub fn compute_stats(events: &[Event]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for e in events {
        let s = stats.per_issue.entry(e.issue.clone()).or_default();
        s.events += 1;
        s.articles += e.article_ids.len();
        stats.total.events += 1;
        stats.total.articles += e.article_ids.len();
    }
    stats
}

impl EventCorpus {
    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn event_articles<'a>(&'a self, event: &'a Event) -> impl Iterator<Item = &'a Article> + 'a {
        event.article_ids.iter().filter_map(|id| self.articles.get(id))
    }

    /// `[min, max]` of member publication dates.
    pub fn date_span(&self, event: &Event) -> Option<(NaiveDate, NaiveDate)> {
        let dates: Vec<NaiveDate> = self.event_articles(event).map(|a| a.published_at).collect();
        Some((*dates.iter().min()?, *dates.iter().max()?))
    }

    /// Keeps only the listed events (all when `ids` is empty) and recomputes stats.
    pub fn restrict_to(&mut self, event_ids: &BTreeSet<String>, issue: Option<&str>) {
        self.events.retain(|e| {
            (event_ids.is_empty() || event_ids.contains(&e.id)) && issue.is_none_or(|i| e.issue == i)
        });
        let keep: BTreeSet<&String> = self.events.iter().flat_map(|e| &e.article_ids).collect();
        self.articles.retain(|id, _| keep.contains(id));
        self.stats = compute_stats(&self.events);
    }

    /// Sets each event's centroid to the re-normalized mean of its member
    /// article embeddings. Events with no embedded member keep `None`.
    pub fn compute_centroids(&mut self, embeddings: &HashMap<String, EmbeddingVector>) {
        for e in &mut self.events {
            e.centroid = crate::vector::centroid(e.article_ids.iter().filter_map(|id| embeddings.get(id)));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub article: Article,
    #[serde(default)]
    pub embedding: Option<EmbeddingVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedArticle {
    pub article: Article,
    pub similarity: f64,
}

/// Candidates published within `window_days` of the event's date span, absent
/// from the corpus, and at least `threshold` similar to the event centroid.
/// Sorted by similarity descending, ties by article id.
pub fn select_unseen_articles(
    corpus: &EventCorpus,
    candidate_pool: &[Candidate],
    event: &Event,
    window_days: i64,
    threshold: f64,
) -> Result<Vec<SelectedArticle>, CorpusError> {
    let centroid = event
        .centroid
        .as_ref()
        .ok_or_else(|| CorpusError::MissingCentroid(event.id.clone()))?;
    let (lo, hi) = corpus
        .date_span(event)
        .ok_or_else(|| CorpusError::UnknownEvent(event.id.clone()))?;
    let (lo, hi) = (lo - Duration::days(window_days), hi + Duration::days(window_days));
    let mut out = Vec::new();
    for c in candidate_pool {
        let emb = c
            .embedding
            .as_ref()
            .ok_or_else(|| CorpusError::MissingEmbedding(c.article.id.clone()))?;
        let a = &c.article;
        // stricter than excluding only this event's members: anything already
        // in the corpus is not unseen
        if corpus.articles.contains_key(&a.id) || event.article_ids.contains(&a.id) {
            continue;
        }
        if a.published_at < lo || a.published_at > hi {
            continue;
        }
        let Ok(sim) = cosine_similarity(centroid, emb) else {
            continue;
        };
        if sim >= threshold {
            out.push(SelectedArticle {
                article: a.clone(),
                similarity: sim,
            });
        }
    }
    out.sort_by(|x, y| {
        y.similarity
            .total_cmp(&x.similarity)
            .then_with(|| x.article.id.cmp(&y.article.id))
    });
    Ok(out)
}

/// Reads a JSON Lines file of candidate articles (embeddings optional).
pub fn load_candidates(path: &Path, bias_map: &HashMap<String, Ideology>) -> Result<Vec<Candidate>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let obj = value.as_object().cloned().ok_or_else(|| malformed("expected a JSON object".into()))?;
        let r = parse_record(&obj).map_err(malformed)?;
        let Some(&bias) = bias_map.get(&r.source) else {
            continue;
        };
        out.push(Candidate {
            article: Article {
                id: r.id,
                event_id: r.event_id,
                title: r.title,
                body: r.body,
                source: r.source,
                bias,
                published_at: r.published_at,
                issue: r.issue,
            },
            embedding: None,
        });
    }
    Ok(out)
}
