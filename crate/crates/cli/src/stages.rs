//! Stage execution with file artifacts and a checksum manifest that turns
//! re-runs on unchanged inputs into no-ops.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use talkpoints_core::corpus::{load_bias_map, load_candidates, load_corpus, select_unseen_articles, Article, EventCorpus};
use talkpoints_core::evaluation::{
    extract_evidence, prepare_direct, prepare_ideology, prepare_partisan, prepare_two_way, run_classifications,
    score_report, topic_diversity_task, trp_baseline, ClassificationRecord, Method, PreparedClassification,
    ViewpointIndex,
};
use talkpoints_core::gateway::heuristic::HeuristicChat;
use talkpoints_core::gateway::http::{HttpBackendConfig, HttpChat, HttpEmbedder};
use talkpoints_core::gateway::mock::TokenHashEmbedder;
use talkpoints_core::gateway::{ChatBackend, EmbeddingBackend, Gateway, GatewayConfig, RetryPolicy};
use talkpoints_core::perspectives::{export_finetune_pairs, generate_perspectives, PartisanPerspective, Sources};
use talkpoints_core::ptp::{coverage, identify_ptps, PtpCluster, PtpConfig, PtpRun};
use talkpoints_core::snapshot::{agreement_score, build_snapshot, write_snapshot, Canvas, SnapshotDocument};
use talkpoints_core::talking_points::{extract_all, TalkingPoint};

use crate::config::{BackendKind, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Extract,
    Cluster,
    Perspectives,
    Evaluate,
    Snapshot,
    ExportFinetune,
}

impl Stage {
    pub const ORDER: [Stage; 7] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Cluster,
        Stage::Perspectives,
        Stage::Evaluate,
        Stage::Snapshot,
        Stage::ExportFinetune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Cluster => "cluster",
            Stage::Perspectives => "perspectives",
            Stage::Evaluate => "evaluate",
            Stage::Snapshot => "snapshot",
            Stage::ExportFinetune => "export-finetune",
        }
    }
}

/// A required input file is absent.
#[derive(Debug, thiserror::Error)]
#[error("missing prerequisite {}: {hint}", path.display())]
pub struct MissingInput {
    pub path: PathBuf,
    pub hint: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filters {
    pub event: Option<String>,
    pub issue: Option<String>,
    /// Restricts evaluation to one method.
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: &'static str,
    pub status: &'static str,
    pub outputs: Vec<String>,
    pub details: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StageRecord {
    inputs: String,
    outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingInput {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        }
        .into())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<T> {
    require(path, hint)?;
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<Vec<T>> {
    require(path, hint)?;
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// Builds the gateway the config asks for.
pub fn build_gateway(config: &PipelineConfig, record_prompts: bool) -> Result<Gateway> {
    let b = &config.backend;
    let (chat, embedder): (Arc<dyn ChatBackend>, Arc<dyn EmbeddingBackend>) = match b.kind {
        BackendKind::Mock => (
            Arc::new(HeuristicChat),
            Arc::new(TokenHashEmbedder::new(b.mock_embedding_dim)),
        ),
        BackendKind::Live => {
            let http = |e: &crate::config::Endpoint| HttpBackendConfig {
                endpoint: e.endpoint.clone(),
                model: e.model.clone(),
                api_key: b.api_key.clone().filter(|k| !k.is_empty()),
                timeout_secs: e.timeout_secs,
            };
            (
                Arc::new(HttpChat::new(http(&b.chat))),
                Arc::new(HttpEmbedder::new(http(&b.embedding))),
            )
        }
    };
    let gw = GatewayConfig {
        retry: RetryPolicy {
            max_attempts: b.max_attempts.max(1),
            ..RetryPolicy::default()
        },
        requests_per_minute: b.requests_per_minute,
        max_in_flight: b.max_in_flight,
        cache_dir: Some(config.cache_path()),
        record_prompts,
        ..GatewayConfig::default()
    };
    Ok(Gateway::new(chat, embedder, &gw)?)
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub filters: Filters,
    pub gateway: Gateway,
}

const EXTRACT_HINT: &str = "run `talkpoints extract` first";
const CLUSTER_HINT: &str = "run `talkpoints cluster` first";
const PERSPECTIVES_HINT: &str = "run `talkpoints perspectives` first";

impl Pipeline {
    pub fn new(config: PipelineConfig, filters: Filters) -> Result<Self> {
        let gateway = build_gateway(&config, false)?;
        Ok(Self {
            config,
            filters,
            gateway,
        })
    }

    pub fn with_gateway(config: PipelineConfig, filters: Filters, gateway: Gateway) -> Self {
        Self {
            config,
            filters,
            gateway,
        }
    }

    pub fn out(&self) -> &Path {
        &self.config.output_dir
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out().join(rel)
    }

    fn event_dir(&self, id: &str) -> PathBuf {
        self.out().join("events").join(id)
    }

    fn load_corpus(&self) -> Result<(EventCorpus, talkpoints_core::corpus::LoadReport)> {
        require(&self.config.corpus.articles, "corpus file named in [corpus].articles")?;
        require(&self.config.corpus.bias_map, "bias map named in [corpus].bias_map")?;
        let (mut corpus, report) = load_corpus(&self.config.corpus.articles, &self.config.corpus.bias_map)?;
        let ids: BTreeSet<String> = self.filters.event.iter().cloned().collect();
        corpus.restrict_to(&ids, self.filters.issue.as_deref());
        if corpus.events.is_empty() {
            bail!("no events left after applying --event/--issue filters");
        }
        Ok((corpus, report))
    }

    fn points(&self) -> Result<Vec<TalkingPoint>> {
        read_jsonl(&self.path("talking_points.jsonl"), EXTRACT_HINT)
    }

    fn ptps(&self, event: &str) -> Result<Vec<PtpCluster>> {
        read_json(&self.event_dir(event).join("ptps.json"), CLUSTER_HINT)
    }

    fn perspectives(&self, event: &str) -> Result<Vec<PartisanPerspective>> {
        read_json(&self.event_dir(event).join("perspectives.json"), PERSPECTIVES_HINT)
    }

    /// Input files a stage depends on, relative to where they live.
    fn stage_inputs(&self, stage: Stage, corpus: &EventCorpus) -> Vec<PathBuf> {
        let mut v = vec![self.config.corpus.articles.clone(), self.config.corpus.bias_map.clone()];
        let events: Vec<&str> = corpus.events.iter().map(|e| e.id.as_str()).collect();
        let per_event = |name: &str| -> Vec<PathBuf> { events.iter().map(|e| self.event_dir(e).join(name)).collect() };
        match stage {
            Stage::Ingest | Stage::Extract => {}
            Stage::Cluster => v.push(self.path("talking_points.jsonl")),
            Stage::Perspectives => {
                v.push(self.path("talking_points.jsonl"));
                v.extend(per_event("ptps.json"));
            }
            Stage::Evaluate => {
                v.push(self.path("talking_points.jsonl"));
                v.extend(per_event("ptps.json"));
                v.extend(per_event("perspectives.json"));
                v.extend(self.config.corpus.candidates.iter().cloned());
            }
            Stage::Snapshot => {
                v.extend(per_event("ptps.json"));
                v.extend(per_event("perspectives.json"));
            }
            Stage::ExportFinetune => {
                v.push(self.path("talking_points.jsonl"));
                v.extend(per_event("ptps.json"));
                v.extend(per_event("perspectives.json"));
            }
        }
        v
    }

    fn input_digest(&self, stage: Stage, corpus: &EventCorpus) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.name().as_bytes());
        let mut cfg = self.config.clone();
        cfg.output_dir = PathBuf::new();
        cfg.cache_dir = None;
        cfg.corpus = Default::default();
        cfg.backend.api_key = None;
        h.update(serde_json::to_vec(&cfg)?);
        h.update(serde_json::to_vec(&self.filters)?);
        for p in self.stage_inputs(stage, corpus) {
            match fs::read(&p) {
                Ok(bytes) => {
                    h.update(b"file");
                    h.update(Sha256::digest(&bytes));
                }
                Err(_) => h.update(b"absent"),
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    fn manifest(&self) -> BTreeMap<String, StageRecord> {
        fs::read(self.path("manifest.json"))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    fn up_to_date(&self, record: &StageRecord) -> bool {
        !record.outputs.is_empty()
            && record.outputs.iter().all(|(rel, sum)| {
                fs::read(self.out().join(rel))
                    .map(|b| sha256_hex(&b) == *sum)
                    .unwrap_or(false)
            })
    }

    /// Runs one stage unless its inputs and outputs are unchanged since the
    /// last recorded run.
    pub fn run(&self, stage: Stage) -> Result<StageSummary> {
        let (corpus, report) = self.load_corpus()?;
        let digest = self.input_digest(stage, &corpus)?;
        let mut manifest = self.manifest();
        if let Some(rec) = manifest.get(stage.name()) {
            if rec.inputs == digest && self.up_to_date(rec) {
                return Ok(StageSummary {
                    stage: stage.name(),
                    status: "skipped",
                    outputs: rec.outputs.keys().cloned().collect(),
                    details: json!({"reason": "inputs unchanged"}),
                });
            }
        }
        let (outputs, details) = match stage {
            Stage::Ingest => self.ingest(&corpus, &report)?,
            Stage::Extract => self.extract(&corpus)?,
            Stage::Cluster => self.cluster(&corpus)?,
            Stage::Perspectives => self.perspectives_stage(&corpus)?,
            Stage::Evaluate => self.evaluate(&corpus)?,
            Stage::Snapshot => self.snapshot(&corpus)?,
            Stage::ExportFinetune => self.export(&corpus)?,
        };
        let mut sums = BTreeMap::new();
        for p in &outputs {
            let rel = p
                .strip_prefix(self.out())
                .map_err(|_| anyhow!("output {} outside the output directory", p.display()))?
                .to_string_lossy()
                .replace('\\', "/");
            sums.insert(rel, sha256_hex(&fs::read(p)?));
        }
        let summary = StageSummary {
            stage: stage.name(),
            status: "ran",
            outputs: sums.keys().cloned().collect(),
            details,
        };
        manifest.insert(
            stage.name().to_string(),
            StageRecord {
                inputs: digest,
                outputs: sums,
            },
        );
        write_json(&self.path("manifest.json"), &manifest)?;
        Ok(summary)
    }

    pub fn run_all(&self) -> Result<Vec<StageSummary>> {
        Stage::ORDER.iter().map(|s| self.run(*s)).collect()
    }

    fn ingest(
        &self,
        corpus: &EventCorpus,
        report: &talkpoints_core::corpus::LoadReport,
    ) -> Result<(Vec<PathBuf>, Value)> {
        let events: Vec<Value> = corpus
            .events
            .iter()
            .map(|e| json!({"id": e.id, "issue": e.issue, "title": e.title, "articles": e.article_ids.len()}))
            .collect();
        let path = self.path("ingest.json");
        write_json(&path, &json!({"stats": corpus.stats, "events": events, "report": report}))?;
        Ok((
            vec![path],
            json!({"events": corpus.events.len(), "articles": corpus.articles.len(),
                   "diagnostics": report.diagnostics.len(), "dropped_unknown_outlet": report.dropped_unknown_outlet()}),
        ))
    }

    fn extract(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let articles: Vec<Article> = corpus.articles.values().cloned().collect();
        let outcomes = extract_all(&self.gateway, &articles);
        let mut points: Vec<TalkingPoint> = outcomes.iter().flat_map(|o| o.points.clone()).collect();
        let texts: Vec<String> = points.iter().map(|p| p.summary.clone()).collect();
        if !texts.is_empty() {
            for (p, e) in points.iter_mut().zip(self.gateway.embed(&texts)?) {
                p.embedding = Some(e);
            }
        }
        let tp = self.path("talking_points.jsonl");
        write_jsonl(&tp, &points)?;
        let diags: Vec<Value> = outcomes
            .iter()
            .filter(|o| o.skipped || !o.diagnostics.is_empty())
            .map(|o| json!({"article_id": o.article_id, "skipped": o.skipped, "diagnostics": o.diagnostics}))
            .collect();
        let rp = self.path("extract_report.json");
        write_json(&rp, &diags)?;
        let skipped = outcomes.iter().filter(|o| o.skipped).count();
        Ok((vec![tp, rp], json!({"articles": outcomes.len(), "points": points.len(), "skipped": skipped})))
    }

    fn cluster(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let points = self.points()?;
        let mut outputs = Vec::new();
        let mut details = BTreeMap::new();
        for event in &corpus.events {
            let members: BTreeSet<&str> = event.article_ids.iter().map(String::as_str).collect();
            let ev_points: Vec<TalkingPoint> =
                points.iter().filter(|p| members.contains(p.article_id.as_str())).cloned().collect();
            let dir = self.event_dir(&event.id);
            let cfg = PtpConfig {
                membership_threshold: self.config.thresholds.membership,
                checkpoint_dir: Some(dir.join("checkpoints")),
                ..PtpConfig::default()
            };
            let run: PtpRun = identify_ptps(&self.gateway, &ev_points, event.article_ids.len(), &cfg)?;
            let p = dir.join("ptps.json");
            write_json(&p, &run.clusters)?;
            let log = dir.join("cluster_log.json");
            write_json(
                &log,
                &json!({"iterations": run.iterations, "stop": run.stop, "total_points": run.total_points,
                        "assigned_points": run.assigned_points, "coverage": run.coverage(),
                        "diagnostics": run.diagnostics}),
            )?;
            details.insert(
                event.id.clone(),
                json!({"ptps": run.clusters.len(), "coverage": run.coverage(), "stop": run.stop}),
            );
            outputs.extend([p, log]);
        }
        Ok((outputs, json!(details)))
    }

    fn perspectives_stage(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let points: BTreeMap<String, TalkingPoint> = self.points()?.into_iter().map(|p| (p.id.clone(), p)).collect();
        let src = Sources {
            points: &points,
            articles: &corpus.articles,
        };
        let mut outputs = Vec::new();
        let mut details = BTreeMap::new();
        for event in &corpus.events {
            let ptps = self.ptps(&event.id)?;
            let pers = generate_perspectives(
                &self.gateway,
                &ptps,
                &src,
                self.config.perspectives.k,
                self.config.perspectives.m,
            );
            let p = self.event_dir(&event.id).join("perspectives.json");
            write_json(&p, &pers)?;
            details.insert(
                event.id.clone(),
                json!({"perspectives": pers.len(),
                       "complete": pers.iter().filter(|p| p.is_complete()).count(),
                       "one_sided": pers.iter().filter(|p| p.one_sided).count()}),
            );
            outputs.push(p);
        }
        Ok((outputs, json!(details)))
    }

    fn methods(&self) -> Vec<Method> {
        match self.filters.method {
            Some(m) => vec![m],
            None => self.config.evaluation.methods.clone(),
        }
    }

    fn evaluate(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let seed = self.config.seed;
        let methods = self.methods();
        let points: BTreeMap<String, TalkingPoint> = self.points()?.into_iter().map(|p| (p.id.clone(), p)).collect();
        let candidates = match &self.config.corpus.candidates {
            Some(path) => {
                require(path, "candidate pool named in [corpus].candidates")?;
                let bias = load_bias_map(&self.config.corpus.bias_map)?;
                let mut c = load_candidates(path, &bias)?;
                let texts: Vec<String> = c.iter().map(|c| c.article.embedding_text()).collect();
                if !texts.is_empty() {
                    for (c, e) in c.iter_mut().zip(self.gateway.embed(&texts)?) {
                        c.embedding = Some(e);
                    }
                }
                c
            }
            None => Vec::new(),
        };
        let mut corpus = corpus.clone();
        let texts: Vec<String> = corpus.articles.values().map(Article::embedding_text).collect();
        let ids: Vec<String> = corpus.articles.keys().cloned().collect();
        let article_vecs: HashMap<String, _> = ids.into_iter().zip(self.gateway.embed(&texts)?).collect();
        corpus.compute_centroids(&article_vecs);

        let mut prepared: Vec<PreparedClassification> = Vec::new();
        let mut not_applicable: BTreeMap<&'static str, usize> = BTreeMap::new();
        let mut per_event = BTreeMap::new();
        for event in &corpus.events {
            let ptps = self.ptps(&event.id)?;
            let pers = self.perspectives(&event.id)?;
            let by_ptp: BTreeMap<usize, &PartisanPerspective> = pers.iter().map(|p| (p.ptp_id, p)).collect();
            let ev_points: Vec<&TalkingPoint> = points
                .values()
                .filter(|p| event.article_ids.contains(&p.article_id))
                .collect();
            let assignment: BTreeMap<String, usize> = ptps
                .iter()
                .flat_map(|c| c.member_ids.iter().map(move |m| (m.clone(), c.id)))
                .collect();

            let unseen = if candidates.is_empty() {
                Vec::new()
            } else {
                select_unseen_articles(
                    &corpus,
                    &candidates,
                    event,
                    self.config.thresholds.unseen_window_days,
                    self.config.thresholds.unseen,
                )?
            };
            let unseen_vecs: HashMap<&str, _> = candidates
                .iter()
                .filter_map(|c| c.embedding.as_ref().map(|e| (c.article.id.as_str(), e)))
                .collect();
            let index = ViewpointIndex::build(&self.gateway, &pers)?;
            for m in &methods {
                match m {
                    Method::Direct => prepared.extend(unseen.iter().map(|s| prepare_direct(&s.article))),
                    Method::TopK | Method::TopKMetadata => {
                        for s in &unseen {
                            prepared.push(prepare_ideology(
                                &s.article,
                                unseen_vecs[s.article.id.as_str()],
                                &index,
                                self.config.evaluation.top_k,
                                *m == Method::TopKMetadata,
                                seed,
                            ));
                        }
                    }
                    Method::Partisan | Method::PartisanMetadata | Method::Trp => {
                        for ptp in &ptps {
                            let arts: BTreeSet<&str> = ptp
                                .member_ids
                                .iter()
                                .filter_map(|id| points.get(id))
                                .map(|p| p.article_id.as_str())
                                .collect();
                            let arts: Vec<&Article> = arts.iter().filter_map(|a| corpus.articles.get(*a)).collect();
                            if *m == Method::Trp {
                                match trp_baseline(ptp, &points) {
                                    Some(t) => prepared.extend(
                                        arts.iter()
                                            .map(|a| prepare_two_way(a, &t.left, &t.right, Method::Trp, Some(ptp.id), seed)),
                                    ),
                                    None => *not_applicable.entry(m.as_str()).or_default() += 1,
                                }
                                continue;
                            }
                            let Some(p) = by_ptp.get(&ptp.id).filter(|p| p.is_complete()) else {
                                *not_applicable.entry(m.as_str()).or_default() += 1;
                                continue;
                            };
                            prepared.extend(
                                arts.iter()
                                    .filter_map(|a| prepare_partisan(a, p, *m == Method::PartisanMetadata, seed)),
                            );
                        }
                    }
                }
            }

            let topic = topic_diversity_task(&self.gateway, &ptps, &points, self.config.evaluation.negatives, seed)
                .map(|r| json!({"quartile_accuracy": r.quartile_accuracy, "quartile_counts": r.quartile_counts,
                                 "accuracy": r.accuracy}))
                .unwrap_or_else(|e| json!({"error": e.to_string()}));
            let mut evidence = Vec::new();
            for p in pers.iter().filter(|p| p.is_complete()) {
                for v in [p.left.as_ref(), p.right.as_ref()].into_iter().flatten() {
                    let Some(article) = v
                        .supporting_point_ids
                        .first()
                        .and_then(|id| points.get(id))
                        .and_then(|pt| corpus.articles.get(&pt.article_id))
                    else {
                        continue;
                    };
                    let answers = extract_evidence(&self.gateway, article, &v.text())?;
                    evidence.push(json!({"ptp_id": p.ptp_id, "ideology": v.ideology, "article_id": article.id,
                                          "answers": answers}));
                }
            }
            per_event.insert(
                event.id.clone(),
                json!({
                    "coverage": coverage(ev_points.len(), &assignment),
                    "unseen_selected": unseen.iter().map(|s| &s.article.id).collect::<Vec<_>>(),
                    "topic_diversity": topic,
                    "evidence": evidence,
                }),
            );
        }

        let records: Vec<ClassificationRecord> = run_classifications(&self.gateway, &prepared);
        let mut method_reports = BTreeMap::new();
        for m in &methods {
            let mine: Vec<ClassificationRecord> = records.iter().filter(|r| r.method == *m).cloned().collect();
            let report = match score_report(&mine) {
                Ok(r) => serde_json::to_value(r)?,
                Err(e) => json!({"error": e.to_string()}),
            };
            method_reports.insert(
                m.as_str(),
                json!({"records": mine.len(), "not_applicable": not_applicable.get(m.as_str()).copied().unwrap_or(0),
                       "report": report}),
            );
        }
        let path = self.path("eval_report.json");
        write_json(
            &path,
            &json!({"seed": seed, "methods": method_reports, "events": per_event, "records": records}),
        )?;
        let macro_f1: BTreeMap<&str, Value> = method_reports
            .iter()
            .map(|(k, v)| (*k, v["report"].get("macro_f1").cloned().unwrap_or(Value::Null)))
            .collect();
        Ok((vec![path], json!({"records": records.len(), "macro_f1": macro_f1})))
    }

    fn snapshot(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let mut outputs = Vec::new();
        let mut details = BTreeMap::new();
        let s = &self.config.snapshot;
        for event in &corpus.events {
            let ptps = self.ptps(&event.id)?;
            let pers = self.perspectives(&event.id)?;
            let scores: BTreeMap<usize, _> = pers
                .iter()
                .filter_map(|p| Some((p.ptp_id, agreement_score(&self.gateway, p.left.as_ref()?, p.right.as_ref()?))))
                .collect();
            let (entries, missing) = build_snapshot(&ptps, &scores, s.radius_c);
            let doc = SnapshotDocument {
                event_id: event.id.clone(),
                canvas: Canvas {
                    width: s.width,
                    height: s.height,
                    margin: s.margin,
                },
                entries,
            };
            let dir = self.event_dir(&event.id);
            write_snapshot(&doc, &dir).with_context(|| format!("writing snapshot for {}", event.id))?;
            let ag = dir.join("agreement.json");
            write_json(&ag, &scores.values().collect::<Vec<_>>())?;
            let mut cats: BTreeMap<&str, usize> = BTreeMap::new();
            for e in &doc.entries {
                *cats.entry(e.category.as_str()).or_default() += 1;
            }
            details.insert(event.id.clone(), json!({"entries": doc.entries.len(), "categories": cats, "unscored": missing}));
            outputs.extend([dir.join("snapshot.svg"), dir.join("snapshot.json"), ag]);
        }
        Ok((outputs, json!(details)))
    }

    fn export(&self, corpus: &EventCorpus) -> Result<(Vec<PathBuf>, Value)> {
        let points: BTreeMap<String, TalkingPoint> = self.points()?.into_iter().map(|p| (p.id.clone(), p)).collect();
        let src = Sources {
            points: &points,
            articles: &corpus.articles,
        };
        let mut pairs = Vec::new();
        for event in &corpus.events {
            let ptps = self.ptps(&event.id)?;
            let pers = self.perspectives(&event.id)?;
            pairs.extend(export_finetune_pairs(&self.gateway, &ptps, &pers, &src)?);
        }
        let path = self.path("finetune_pairs.jsonl");
        write_jsonl(&path, &pairs)?;
        Ok((vec![path], json!({"pairs": pairs.len()})))
    }
}

/// Writes one machine-readable summary line.
pub fn print_summary(out: &mut impl Write, s: &StageSummary) -> Result<()> {
    serde_json::to_writer(&mut *out, s)?;
    out.write_all(b"\n")?;
    Ok(())
}
