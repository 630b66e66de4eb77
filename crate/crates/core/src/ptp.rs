//! Iterative identification of prominent talking points (PTPs): cluster the
//! unassigned pool, label each cluster, merge redundant labels, prune
//! incoherent clusters, then assign pool points to labels by similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use talkpoints_density::{grid_search, ClusterError, DEFAULT_MIN_SAMPLES};
use thiserror::Error;

use crate::corpus::Ideology;
use crate::gateway::{ChatRequest, Gateway};
use crate::jsonfix::{coerce_string, field, lenient_parse, parse_yes_no};
use crate::prompts;
use crate::talking_points::{repair_request, TalkingPoint};
use crate::vector::{centroid, cosine_similarity, rank_by_similarity, top_k, EmbeddingVector};

/// Membership threshold used when none is configured.
pub const DEFAULT_MEMBERSHIP_THRESHOLD: f64 = 0.85;
/// Alternative membership threshold kept as a named preset.
pub const LOOSE_MEMBERSHIP_THRESHOLD: f64 = 0.76;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpLabel {
    pub aspect: String,
    pub description: String,
    #[serde(rename = "label_embedding")]
    pub embedding: EmbeddingVector,
}

impl PtpLabel {
    /// Text whose embedding represents the label.
    pub fn embedding_text(aspect: &str, description: &str) -> String {
        format!("{aspect}: {description}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpCluster {
    /// 1-based, in order of discovery.
    pub id: usize,
    #[serde(flatten)]
    pub label: PtpLabel,
    pub member_ids: Vec<String>,
    pub left_member_ids: Vec<String>,
    pub right_member_ids: Vec<String>,
    pub frequency: usize,
    pub iteration: usize,
}

impl PtpCluster {
    pub fn partition(&self, ideology: Ideology) -> &[String] {
        match ideology {
            Ideology::Left => &self.left_member_ids,
            Ideology::Right => &self.right_member_ids,
        }
    }

    pub fn is_one_sided(&self) -> bool {
        self.left_member_ids.is_empty() || self.right_member_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpConfig {
    pub membership_threshold: f64,
    pub label_top_n: usize,
    pub merge_neighbours: usize,
    pub merge_iterations: usize,
    pub coherence_top_n: usize,
    pub min_samples: usize,
    /// The loop runs while the pool exceeds this fraction of the article count.
    pub pool_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for PtpConfig {
    fn default() -> Self {
        Self {
            membership_threshold: DEFAULT_MEMBERSHIP_THRESHOLD,
            label_top_n: 5,
            merge_neighbours: 7,
            merge_iterations: 2,
            coherence_top_n: 3,
            min_samples: DEFAULT_MIN_SAMPLES,
            pool_fraction: 0.1,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PtpError {
    #[error("talking point {0} has no embedding")]
    MissingEmbedding(String),
    #[error("duplicate talking point id {0}")]
    DuplicateId(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    PoolBelowFraction,
    PoolTooSmall,
    NoClusteringFound,
    NoLabeledClusters,
    NoProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub pool_before: usize,
    pub min_cluster_size: usize,
    pub dbcv: f64,
    pub candidates: usize,
    pub labeled: usize,
    pub after_merge: usize,
    pub after_prune: usize,
    pub assigned: usize,
    pub new_ptps: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpRun {
    pub clusters: Vec<PtpCluster>,
    pub iterations: Vec<IterationLog>,
    pub stop: StopReason,
    pub total_points: usize,
    pub assigned_points: usize,
    pub diagnostics: Vec<String>,
}

impl PtpRun {
    pub fn coverage(&self) -> f64 {
        if self.total_points == 0 {
            0.0
        } else {
            self.assigned_points as f64 / self.total_points as f64
        }
    }

    /// Point id to PTP id for every assigned point.
    pub fn assignment(&self) -> BTreeMap<String, usize> {
        self.clusters
            .iter()
            .flat_map(|c| c.member_ids.iter().map(move |m| (m.clone(), c.id)))
            .collect()
    }
}

/// A cluster under construction: member indices into the point slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCluster {
    pub label: PtpLabel,
    pub members: Vec<usize>,
}

fn statements(points: &[&TalkingPoint]) -> String {
    points.iter().map(|p| format!("- {}", p.summary)).collect::<Vec<_>>().join("\n")
}

/// Members sorted by similarity to `query`, ties by point id.
fn nearest<'a>(query: &EmbeddingVector, members: &[&'a TalkingPoint], n: usize) -> Vec<&'a TalkingPoint> {
    let by_id: BTreeMap<&str, &TalkingPoint> = members.iter().map(|p| (p.id.as_str(), *p)).collect();
    top_k(
        query,
        members.iter().filter_map(|p| p.embedding.as_ref().map(|e| (p.id.as_str(), e))),
        n,
    )
    .into_iter()
    .map(|(id, _)| by_id[id])
    .collect()
}

pub fn label_request(members: &[&TalkingPoint], centroid: &EmbeddingVector, top_n: usize) -> ChatRequest {
    let chosen = nearest(centroid, members, top_n);
    let prompt = prompts::LABEL_CLUSTER
        .render(&[("statements", &statements(&chosen))])
        .expect("label template placeholders are fixed");
    ChatRequest::new(prompts::LABEL_CLUSTER.id, prompt).with_max_tokens(256)
}

/// Aspect and description from a label response.
pub fn parse_label(raw: &str) -> Result<(String, String), String> {
    let (v, _) = lenient_parse(raw)?;
    let obj = match &v {
        serde_json::Value::Object(o) => o.clone(),
        serde_json::Value::Array(a) => match a.first() {
            Some(serde_json::Value::Object(o)) => o.clone(),
            _ => return Err("label is not an object".into()),
        },
        _ => return Err("label is not an object".into()),
    };
    let aspect = coerce_string(field(&obj, &["aspect", "label", "name", "title"])).unwrap_or_default();
    if aspect.is_empty() {
        return Err("label has no aspect".into());
    }
    let description = coerce_string(field(&obj, &["description", "desc", "summary"])).unwrap_or_default();
    Ok((aspect, description))
}

/// Labels one cluster: nearest members to the centroid, summaries only.
pub fn label_cluster(
    gateway: &Gateway,
    members: &[&TalkingPoint],
    centroid: &EmbeddingVector,
    top_n: usize,
) -> Result<PtpLabel, String> {
    let mut out = label_clusters(gateway, &[(members.to_vec(), centroid.clone())], top_n);
    out.remove(0)
}

/// Fans out every label request, then one repair round, then one embedding batch.
fn label_clusters(
    gateway: &Gateway,
    clusters: &[(Vec<&TalkingPoint>, EmbeddingVector)],
    top_n: usize,
) -> Vec<Result<PtpLabel, String>> {
    let requests: Vec<ChatRequest> = clusters.iter().map(|(m, c)| label_request(m, c, top_n)).collect();
    let mut parsed: Vec<Result<(String, String), String>> = Vec::with_capacity(clusters.len());
    let mut retry = Vec::new();
    for (i, res) in gateway.complete_many(&requests).into_iter().enumerate() {
        match res {
            Ok(raw) => match parse_label(&raw) {
                Ok(l) => parsed.push(Ok(l)),
                Err(e) => {
                    parsed.push(Err(e));
                    retry.push((i, raw));
                }
            },
            Err(e) => parsed.push(Err(format!("label call failed: {e}"))),
        }
    }
    let repairs: Vec<ChatRequest> = retry.iter().map(|(_, raw)| repair_request(raw)).collect();
    for ((i, _), res) in retry.iter().zip(gateway.complete_many(&repairs)) {
        parsed[*i] = res
            .map_err(|e| format!("label repair call failed: {e}"))
            .and_then(|raw| parse_label(&raw).map_err(|e| format!("label unparseable after repair: {e}")));
    }
    let texts: Vec<String> = parsed
        .iter()
        .filter_map(|p| p.as_ref().ok())
        .map(|(a, d)| PtpLabel::embedding_text(a, d))
        .collect();
    let mut vectors = if texts.is_empty() {
        Ok(Vec::new())
    } else {
        gateway.embed(&texts)
    }
    .map(|v| v.into_iter());
    parsed
        .into_iter()
        .map(|p| {
            let (aspect, description) = p?;
            match &mut vectors {
                Ok(it) => Ok(PtpLabel {
                    aspect,
                    description,
                    embedding: it.next().expect("one vector per label"),
                }),
                Err(e) => Err(format!("label embedding failed: {e}")),
            }
        })
        .collect()
}

pub fn merge_request(a: &PtpLabel, b: &PtpLabel) -> ChatRequest {
    let render = |l: &PtpLabel| format!("{}: {}", l.aspect, l.description);
    let prompt = prompts::MERGE_LABELS
        .render(&[("label_a", &render(a)), ("label_b", &render(b))])
        .expect("merge template placeholders are fixed");
    ChatRequest::new(prompts::MERGE_LABELS.id, prompt).with_max_tokens(8)
}

/// Candidate pairs from each label's nearest neighbours, by descending
/// similarity then index.
fn merge_pairs(candidates: &[CandidateCluster], neighbours: usize) -> Vec<(usize, usize, f64)> {
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let others = candidates
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, o)| (j, &o.label.embedding));
        for (j, sim) in top_k(&c.label.embedding, others, neighbours) {
            pairs.insert((i.min(j), i.max(j)), sim);
        }
    }
    let mut out: Vec<(usize, usize, f64)> = pairs.into_iter().map(|((a, b), s)| (a, b, s)).collect();
    out.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    out
}

/// Greedy merge of labels judged to share an aspect. In each iteration every
/// candidate pair is queried, then pairs are folded in order; a merge retires
/// all other pending pairs touching either label. The survivor is the label
/// with more members (ties: lexicographically smaller aspect, then lower index)
/// and takes the union of members.
pub fn merge_redundant_labels(
    gateway: &Gateway,
    mut candidates: Vec<CandidateCluster>,
    neighbours: usize,
    iterations: usize,
) -> (Vec<CandidateCluster>, Vec<String>) {
    let mut diags = Vec::new();
    for round in 0..iterations {
        if candidates.len() < 2 {
            break;
        }
        let pairs = merge_pairs(&candidates, neighbours);
        let requests: Vec<ChatRequest> = pairs
            .iter()
            .map(|&(a, b, _)| merge_request(&candidates[a].label, &candidates[b].label))
            .collect();
        let answers = gateway.complete_many(&requests);
        let mut touched = vec![false; candidates.len()];
        let mut removed = vec![false; candidates.len()];
        let mut merged = 0;
        for (&(a, b, _), ans) in pairs.iter().zip(answers) {
            if touched[a] || touched[b] {
                continue;
            }
            let yes = match ans {
                Ok(text) => match parse_yes_no(&text) {
                    Some(v) => v,
                    None => {
                        diags.push(format!("merge answer for ({a}, {b}) unreadable: {text:?}"));
                        false
                    }
                },
                Err(e) => {
                    tracing::warn!(error = %e, "merge query failed, pair skipped");
                    diags.push(format!("merge query for ({a}, {b}) failed: {e}"));
                    false
                }
            };
            if !yes {
                continue;
            }
            let (ca, cb) = (&candidates[a], &candidates[b]);
            let a_wins = match ca.members.len().cmp(&cb.members.len()) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => ca.label.aspect <= cb.label.aspect,
            };
            let (keep, drop) = if a_wins { (a, b) } else { (b, a) };
            let absorbed = candidates[drop].members.clone();
            let set: BTreeSet<usize> = candidates[keep].members.iter().copied().chain(absorbed).collect();
            candidates[keep].members = set.into_iter().collect();
            removed[drop] = true;
            touched[a] = true;
            touched[b] = true;
            merged += 1;
        }
        candidates = candidates
            .into_iter()
            .zip(removed)
            .filter_map(|(c, r)| (!r).then_some(c))
            .collect();
        tracing::debug!(round, merged, remaining = candidates.len(), "label merge round");
        if merged == 0 {
            break;
        }
    }
    (candidates, diags)
}

pub fn coherence_request(label: &PtpLabel, members: &[&TalkingPoint], top_n: usize) -> ChatRequest {
    let chosen = nearest(&label.embedding, members, top_n);
    let prompt = prompts::COHERENCE_CHECK
        .render(&[("aspect", &label.aspect), ("statements", &statements(&chosen))])
        .expect("coherence template placeholders are fixed");
    ChatRequest::new(prompts::COHERENCE_CHECK.id, prompt).with_max_tokens(8)
}

/// Drops clusters whose nearest members do not discuss the label's aspect.
/// Returns the kept clusters and the member indices released to the pool.
/// A failed or unreadable check keeps the cluster.
pub fn prune_incoherent_clusters(
    gateway: &Gateway,
    candidates: Vec<CandidateCluster>,
    points: &[TalkingPoint],
    top_n: usize,
) -> (Vec<CandidateCluster>, Vec<usize>, Vec<String>) {
    let requests: Vec<ChatRequest> = candidates
        .iter()
        .map(|c| {
            let members: Vec<&TalkingPoint> = c.members.iter().map(|&i| &points[i]).collect();
            coherence_request(&c.label, &members, top_n)
        })
        .collect();
    let mut kept = Vec::new();
    let mut released = Vec::new();
    let mut diags = Vec::new();
    for (c, ans) in candidates.into_iter().zip(gateway.complete_many(&requests)) {
        let coherent = match ans {
            Ok(text) => parse_yes_no(&text).unwrap_or_else(|| {
                diags.push(format!("coherence answer for {:?} unreadable, kept", c.label.aspect));
                true
            }),
            Err(e) => {
                tracing::warn!(aspect = %c.label.aspect, error = %e, "coherence check failed, cluster kept");
                diags.push(format!("coherence check for {:?} failed, kept: {e}", c.label.aspect));
                true
            }
        };
        if coherent {
            kept.push(c);
        } else {
            released.extend(c.members);
        }
    }
    (kept, released, diags)
}

/// Each point goes to the most similar label when that similarity reaches
/// `threshold`; ties go to the earlier label. `None` means unassigned.
pub fn assign_membership<'a>(
    points: impl IntoIterator<Item = (&'a str, &'a EmbeddingVector)>,
    labels: &[(usize, &EmbeddingVector)],
    threshold: f64,
) -> BTreeMap<String, Option<usize>> {
    let mut out = BTreeMap::new();
    for (id, emb) in points {
        let mut best: Option<(usize, f64)> = None;
        for &(ptp, lab) in labels {
            let Ok(s) = cosine_similarity(emb, lab) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bid, bs)) => s > bs || (s == bs && ptp < bid),
            };
            if better {
                best = Some((ptp, s));
            }
        }
        out.insert(id.to_string(), best.filter(|&(_, s)| s >= threshold).map(|(p, _)| p));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    iteration: usize,
    clusters: Vec<PtpCluster>,
    iterations: Vec<IterationLog>,
    pool: Vec<String>,
    diagnostics: Vec<String>,
}

fn fingerprint(points: &[TalkingPoint], n_articles: usize, config: &PtpConfig) -> String {
    let mut h = Sha256::new();
    for p in points {
        h.update(p.id.as_bytes());
        h.update([0]);
        h.update(p.summary.as_bytes());
        h.update([0]);
    }
    h.update(n_articles.to_le_bytes());
    h.update(config.membership_threshold.to_bits().to_le_bytes());
    h.update(config.min_samples.to_le_bytes());
    hex::encode(h.finalize())
}

fn latest_checkpoint(dir: &PathBuf, fp: &str) -> Option<Checkpoint> {
    let mut best: Option<Checkpoint> = None;
    for entry in fs::read_dir(dir).ok()?.flatten() {
        let name = entry.file_name().to_string_lossy().to_string();
        if !name.starts_with("iteration_") || !name.ends_with(".json") {
            continue;
        }
        let Ok(bytes) = fs::read(entry.path()) else { continue };
        let Ok(cp) = serde_json::from_slice::<Checkpoint>(&bytes) else { continue };
        if cp.fingerprint == fp && best.as_ref().is_none_or(|b| cp.iteration > b.iteration) {
            best = Some(cp);
        }
    }
    best
}

/// Runs the identification loop until the pool is small, clustering finds
/// nothing, or an iteration makes no progress.
pub fn identify_ptps(
    gateway: &Gateway,
    points: &[TalkingPoint],
    n_articles: usize,
    config: &PtpConfig,
) -> Result<PtpRun, PtpError> {
    let mut seen = BTreeSet::new();
    for p in points {
        if p.embedding.is_none() {
            return Err(PtpError::MissingEmbedding(p.id.clone()));
        }
        if !seen.insert(p.id.as_str()) {
            return Err(PtpError::DuplicateId(p.id.clone()));
        }
    }
    let index: BTreeMap<&str, usize> = points.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let fp = fingerprint(points, n_articles, config);

    let mut pool: Vec<usize> = (0..points.len()).collect();
    let mut clusters: Vec<PtpCluster> = Vec::new();
    let mut logs: Vec<IterationLog> = Vec::new();
    let mut diagnostics = Vec::new();
    if let Some(dir) = &config.checkpoint_dir {
        fs::create_dir_all(dir).map_err(|e| PtpError::Checkpoint {
            path: dir.clone(),
            message: e.to_string(),
        })?;
        if let Some(cp) = latest_checkpoint(dir, &fp) {
            tracing::info!(iteration = cp.iteration, "resuming from checkpoint");
            pool = cp.pool.iter().filter_map(|id| index.get(id.as_str()).copied()).collect();
            clusters = cp.clusters;
            logs = cp.iterations;
            diagnostics = cp.diagnostics;
        }
    }
    let assigned_count = |clusters: &[PtpCluster]| clusters.iter().map(|c| c.frequency).sum::<usize>();
    let threshold_pool = config.pool_fraction * n_articles as f64;

    let stop = loop {
        if pool.len() as f64 <= threshold_pool {
            break StopReason::PoolBelowFraction;
        }
        if pool.len() < talkpoints_density::MIN_GRID_POINTS {
            break StopReason::PoolTooSmall;
        }
        let iteration = logs.len() + 1;
        let pool_vecs: Vec<&EmbeddingVector> =
            pool.iter().map(|&i| points[i].embedding.as_ref().expect("checked")).collect();
        let search = match grid_search(&pool_vecs, config.min_samples) {
            Ok(s) => s,
            Err(ClusterError::NoClusteringFound) | Err(ClusterError::AllNoise) => {
                break StopReason::NoClusteringFound;
            }
            Err(e) => {
                diagnostics.push(format!("iteration {iteration}: clustering failed: {e}"));
                break StopReason::NoClusteringFound;
            }
        };
        let groups: Vec<Vec<usize>> = search
            .assignment
            .members
            .iter()
            .map(|m| m.iter().map(|&k| pool[k]).collect())
            .collect();
        let to_label: Vec<(Vec<&TalkingPoint>, EmbeddingVector)> = groups
            .iter()
            .map(|g| {
                let members: Vec<&TalkingPoint> = g.iter().map(|&i| &points[i]).collect();
                let c = centroid(members.iter().filter_map(|p| p.embedding.as_ref()))
                    .unwrap_or_else(|| members[0].embedding.clone().expect("checked"));
                (members, c)
            })
            .collect();
        let mut candidates = Vec::new();
        for (g, label) in groups.iter().zip(label_clusters(gateway, &to_label, config.label_top_n)) {
            match label {
                Ok(label) => candidates.push(CandidateCluster {
                    label,
                    members: g.clone(),
                }),
                Err(e) => diagnostics.push(format!("iteration {iteration}: cluster discarded: {e}")),
            }
        }
        let labeled = candidates.len();
        let (candidates, merge_diags) =
            merge_redundant_labels(gateway, candidates, config.merge_neighbours, config.merge_iterations);
        diagnostics.extend(merge_diags.into_iter().map(|d| format!("iteration {iteration}: {d}")));
        let after_merge = candidates.len();
        let (candidates, _released, prune_diags) =
            prune_incoherent_clusters(gateway, candidates, points, config.coherence_top_n);
        diagnostics.extend(prune_diags.into_iter().map(|d| format!("iteration {iteration}: {d}")));
        let after_prune = candidates.len();

        let labels: Vec<(usize, &EmbeddingVector)> =
            candidates.iter().enumerate().map(|(k, c)| (k, &c.label.embedding)).collect();
        let membership = assign_membership(
            pool.iter().map(|&i| (points[i].id.as_str(), points[i].embedding.as_ref().expect("checked"))),
            &labels,
            config.membership_threshold,
        );
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); candidates.len()];
        for &i in &pool {
            if let Some(Some(k)) = membership.get(points[i].id.as_str()) {
                members[*k].push(i);
            }
        }
        let assigned: usize = members.iter().map(Vec::len).sum();
        let before = clusters.len();
        for (c, m) in candidates.into_iter().zip(members) {
            if m.is_empty() {
                continue;
            }
            let ids = |filter: Option<Ideology>| -> Vec<String> {
                m.iter()
                    .filter(|&&i| filter.is_none_or(|f| points[i].ideology == f))
                    .map(|&i| points[i].id.clone())
                    .collect()
            };
            clusters.push(PtpCluster {
                id: clusters.len() + 1,
                member_ids: ids(None),
                left_member_ids: ids(Some(Ideology::Left)),
                right_member_ids: ids(Some(Ideology::Right)),
                frequency: m.len(),
                iteration,
                label: c.label,
            });
        }
        let assigned_set: BTreeSet<usize> = clusters[before..]
            .iter()
            .flat_map(|c| c.member_ids.iter().map(|id| index[id.as_str()]))
            .collect();
        pool.retain(|i| !assigned_set.contains(i));
        logs.push(IterationLog {
            iteration,
            pool_before: pool.len() + assigned,
            min_cluster_size: search.best.min_cluster_size,
            dbcv: search.best_score,
            candidates: groups.len(),
            labeled,
            after_merge,
            after_prune,
            assigned,
            new_ptps: clusters.len() - before,
            coverage: if points.is_empty() {
                0.0
            } else {
                assigned_count(&clusters) as f64 / points.len() as f64
            },
        });
        if let Some(dir) = &config.checkpoint_dir {
            let cp = Checkpoint {
                fingerprint: fp.clone(),
                iteration,
                clusters: clusters.clone(),
                iterations: logs.clone(),
                pool: pool.iter().map(|&i| points[i].id.clone()).collect(),
                diagnostics: diagnostics.clone(),
            };
            let path = dir.join(format!("iteration_{iteration:03}.json"));
            let body = serde_json::to_vec_pretty(&cp).expect("checkpoint serializes");
            fs::write(&path, body).map_err(|e| PtpError::Checkpoint {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        tracing::info!(iteration, assigned, ptps = clusters.len(), pool = pool.len(), "PTP iteration");
        if after_prune == 0 {
            break StopReason::NoLabeledClusters;
        }
        if assigned == 0 {
            break StopReason::NoProgress;
        }
    };
    Ok(PtpRun {
        assigned_points: assigned_count(&clusters),
        clusters,
        iterations: logs,
        stop,
        total_points: points.len(),
        diagnostics,
    })
}

/// Assigned over total; `None` for an empty point set.
pub fn coverage(total_points: usize, assignment: &BTreeMap<String, usize>) -> Option<f64> {
    (total_points > 0).then(|| assignment.len() as f64 / total_points as f64)
}

/// Points of a partition ranked by similarity to the label, ties by id.
pub fn ranked_partition<'a>(
    cluster: &PtpCluster,
    ideology: Ideology,
    points: &'a BTreeMap<String, TalkingPoint>,
) -> Vec<(&'a TalkingPoint, f64)> {
    rank_by_similarity(
        &cluster.label.embedding,
        cluster
            .partition(ideology)
            .iter()
            .filter_map(|id| points.get(id))
            .filter_map(|p| p.embedding.as_ref().map(|e| (p.id.as_str(), e))),
    )
    .into_iter()
    .map(|(id, s)| (&points[id], s))
    .collect()
}
