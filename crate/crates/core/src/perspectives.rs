//! Contrastive per-ideology viewpoints for each PTP, metadata digests, and
//! fine-tuning pair export.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Ideology};
use crate::gateway::{ChatRequest, Gateway, GatewayError};
use crate::jsonfix::{coerce_string, coerce_string_list, field, lenient_parse};
use crate::prompts;
use crate::ptp::{ranked_partition, PtpCluster};
use crate::talking_points::{repair_request, Activity, Sentiment, TalkingPoint};
use crate::vector::{rank_by_similarity, EmbeddingVector};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_M: usize = 3;
pub const MAX_BULLETS: usize = 3;
/// Targets kept per sentiment in a digest.
pub const DIGEST_TOP: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub ptp_id: usize,
    pub ideology: Ideology,
    pub title: String,
    pub bullets: Vec<String>,
    pub supporting_point_ids: Vec<String>,
}

impl Viewpoint {
    /// Title and bullets as one block of text.
    pub fn text(&self) -> String {
        let mut s = self.title.clone();
        for b in &self.bullets {
            s.push_str("\n- ");
            s.push_str(b);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target: String,
    pub actor: String,
    pub frame: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataDigest {
    pub ptp_id: usize,
    pub ideology: Ideology,
    pub positive_targets: Vec<TargetSummary>,
    pub negative_targets: Vec<TargetSummary>,
}

impl MetadataDigest {
    pub fn render(&self) -> String {
        let line = |t: &TargetSummary| format!("{} (by {}, {} frame, {}x)", t.target, t.actor, t.frame, t.count);
        let join = |v: &[TargetSummary]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(line).collect::<Vec<_>>().join("; ")
            }
        };
        format!(
            "Viewed positively: {}\nViewed negatively: {}",
            join(&self.positive_targets),
            join(&self.negative_targets)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartisanPerspective {
    pub ptp_id: usize,
    pub aspect: String,
    pub left: Option<Viewpoint>,
    pub right: Option<Viewpoint>,
    pub left_digest: Option<MetadataDigest>,
    pub right_digest: Option<MetadataDigest>,
    /// Set when one ideology partition of the PTP is empty.
    pub one_sided: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl PartisanPerspective {
    pub fn viewpoint(&self, ideology: Ideology) -> Option<&Viewpoint> {
        match ideology {
            Ideology::Left => self.left.as_ref(),
            Ideology::Right => self.right.as_ref(),
        }
    }

    pub fn digest(&self, ideology: Ideology) -> Option<&MetadataDigest> {
        match ideology {
            Ideology::Left => self.left_digest.as_ref(),
            Ideology::Right => self.right_digest.as_ref(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.left.is_some() && self.right.is_some()
    }
}

/// Looks up talking points and articles by id.
pub struct Sources<'a> {
    pub points: &'a BTreeMap<String, TalkingPoint>,
    pub articles: &'a BTreeMap<String, Article>,
}

pub fn conditioned_summary_request(article: &Article, ideology: Ideology, theme: &str) -> ChatRequest {
    let prompt = prompts::CONDITIONED_SUMMARY
        .render(&[("ideology", ideology.as_str()), ("theme", theme), ("body", &article.body)])
        .expect("summary template placeholders are fixed");
    ChatRequest::new(prompts::CONDITIONED_SUMMARY.id, prompt).with_max_tokens(300)
}

pub fn conditioned_summary(
    gateway: &Gateway,
    article: &Article,
    ideology: Ideology,
    theme: &str,
) -> Result<String, GatewayError> {
    if article.body.trim().is_empty() {
        return Err(GatewayError::InvalidRequest(format!("article {} has an empty body", article.id)));
    }
    gateway.complete(&conditioned_summary_request(article, ideology, theme))
}

/// Title, bullets, and whether bullets were dropped.
pub type ParsedViewpoint = (String, Vec<String>, bool);

/// Title and bullets from a viewpoint response; extra bullets are dropped.
pub fn parse_viewpoint(raw: &str) -> Result<ParsedViewpoint, String> {
    let (v, _) = lenient_parse(raw)?;
    let serde_json::Value::Object(obj) = v else {
        return Err("viewpoint is not an object".into());
    };
    let title = coerce_string(field(&obj, &["title", "heading", "name"])).unwrap_or_default();
    let mut bullets = coerce_string_list(field(&obj, &["bullets", "points", "bullet_points"]));
    if title.is_empty() && bullets.is_empty() {
        return Err("viewpoint has neither title nor bullets".into());
    }
    if bullets.is_empty() {
        return Err("viewpoint has no bullets".into());
    }
    let truncated = bullets.len() > MAX_BULLETS;
    bullets.truncate(MAX_BULLETS);
    Ok((title, bullets, truncated))
}

struct ViewpointPlan<'a> {
    ptp: &'a PtpCluster,
    ideology: Ideology,
    own: Vec<&'a TalkingPoint>,
    other: Vec<&'a TalkingPoint>,
    articles: Vec<&'a Article>,
}

fn plan<'a>(ptp: &'a PtpCluster, ideology: Ideology, src: &Sources<'a>, k: usize, m: usize) -> Option<ViewpointPlan<'a>> {
    let own: Vec<&TalkingPoint> = ranked_partition(ptp, ideology, src.points)
        .into_iter()
        .take(k)
        .map(|(p, _)| p)
        .collect();
    if own.is_empty() {
        return None;
    }
    let other = ranked_partition(ptp, ideology.opposite(), src.points)
        .into_iter()
        .take(m)
        .map(|(p, _)| p)
        .collect();
    let mut seen = BTreeSet::new();
    let articles = own
        .iter()
        .filter(|p| seen.insert(p.article_id.clone()))
        .filter_map(|p| src.articles.get(&p.article_id))
        .collect();
    Some(ViewpointPlan {
        ptp,
        ideology,
        own,
        other,
        articles,
    })
}

fn viewpoint_request(plan: &ViewpointPlan, summaries: &[String]) -> ChatRequest {
    let lines = |ps: &[&TalkingPoint]| {
        if ps.is_empty() {
            "(none)".to_string()
        } else {
            ps.iter().map(|p| format!("- {}", p.describe_with_metadata())).collect::<Vec<_>>().join("\n")
        }
    };
    let summaries = if summaries.is_empty() {
        "(none)".to_string()
    } else {
        summaries.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n")
    };
    let prompt = prompts::VIEWPOINT
        .render(&[
            ("aspect", &plan.ptp.label.aspect),
            ("description", &plan.ptp.label.description),
            ("ideology", plan.ideology.as_str()),
            ("own_points", &lines(&plan.own)),
            ("summaries", &summaries),
            ("other_points", &lines(&plan.other)),
        ])
        .expect("viewpoint template placeholders are fixed");
    ChatRequest::new(prompts::VIEWPOINT.id, prompt).with_max_tokens(400)
}

/// One viewpoint; `Ok(None)` when the partition is empty.
pub fn generate_viewpoint(
    gateway: &Gateway,
    ptp: &PtpCluster,
    ideology: Ideology,
    src: &Sources,
    k: usize,
    m: usize,
) -> Result<Option<Viewpoint>, String> {
    let mut diags = Vec::new();
    let out = generate_all(gateway, &[(ptp, ideology)], src, k, m, &mut diags);
    match out.into_iter().next().flatten() {
        Some(v) => Ok(Some(v)),
        None if ptp.partition(ideology).is_empty() => Ok(None),
        None => Err(diags.join("; ")),
    }
}

/// Fans out conditioned summaries, then viewpoint prompts, then one repair
/// round. Output is aligned with `jobs`.
fn generate_all(
    gateway: &Gateway,
    jobs: &[(&PtpCluster, Ideology)],
    src: &Sources,
    k: usize,
    m: usize,
    diags: &mut Vec<String>,
) -> Vec<Option<Viewpoint>> {
    let plans: Vec<Option<ViewpointPlan>> = jobs.iter().map(|&(p, i)| plan(p, i, src, k, m)).collect();

    let mut summary_requests = Vec::new();
    let mut owners = Vec::new();
    for (j, pl) in plans.iter().enumerate() {
        let Some(pl) = pl else { continue };
        for a in &pl.articles {
            if a.body.trim().is_empty() {
                continue;
            }
            summary_requests.push(conditioned_summary_request(a, pl.ideology, &pl.ptp.label.aspect));
            owners.push(j);
        }
    }
    let mut summaries: Vec<Vec<String>> = vec![Vec::new(); jobs.len()];
    for (j, res) in owners.into_iter().zip(gateway.complete_many(&summary_requests)) {
        match res {
            Ok(s) => summaries[j].push(s.trim().to_string()),
            Err(e) => diags.push(format!("PTP {}: conditioned summary failed: {e}", jobs[j].0.id)),
        }
    }

    let live: Vec<usize> = (0..jobs.len()).filter(|&j| plans[j].is_some()).collect();
    let requests: Vec<ChatRequest> = live
        .iter()
        .map(|&j| viewpoint_request(plans[j].as_ref().expect("live"), &summaries[j]))
        .collect();
    let mut parsed: BTreeMap<usize, Result<ParsedViewpoint, String>> = BTreeMap::new();
    let mut retry = Vec::new();
    for (&j, res) in live.iter().zip(gateway.complete_many(&requests)) {
        match res {
            Ok(raw) => {
                let p = parse_viewpoint(&raw);
                if p.is_err() {
                    retry.push((j, raw));
                }
                parsed.insert(j, p);
            }
            Err(e) => {
                parsed.insert(j, Err(format!("viewpoint call failed: {e}")));
            }
        }
    }
    let repairs: Vec<ChatRequest> = retry.iter().map(|(_, raw)| repair_request(raw)).collect();
    for ((j, _), res) in retry.iter().zip(gateway.complete_many(&repairs)) {
        parsed.insert(
            *j,
            res.map_err(|e| format!("viewpoint repair call failed: {e}"))
                .and_then(|raw| parse_viewpoint(&raw).map_err(|e| format!("viewpoint unparseable after repair: {e}"))),
        );
    }

    (0..jobs.len())
        .map(|j| {
            let pl = plans[j].as_ref()?;
            match parsed.remove(&j)? {
                Ok((title, bullets, truncated)) => {
                    if truncated {
                        diags.push(format!("PTP {} {}: bullets truncated to {MAX_BULLETS}", pl.ptp.id, pl.ideology));
                    }
                    Some(Viewpoint {
                        ptp_id: pl.ptp.id,
                        ideology: pl.ideology,
                        title,
                        bullets,
                        supporting_point_ids: pl.own.iter().map(|p| p.id.clone()).collect(),
                    })
                }
                Err(e) => {
                    diags.push(format!("PTP {} {}: viewpoint omitted: {e}", pl.ptp.id, pl.ideology));
                    None
                }
            }
        })
        .collect()
}

/// Per-sentiment target tallies over a set of activities. Counts are of
/// (target, sentiment) occurrences; the reported actor is the modal actor for
/// that pair and the frame is the modal frame for (actor, target, sentiment).
/// Ties go to the lexicographically smaller string.
pub fn digest_activities<'a>(
    activities: impl IntoIterator<Item = &'a Activity>,
) -> (Vec<TargetSummary>, Vec<TargetSummary>) {
    type Key = (String, Sentiment);
    let mut counts: BTreeMap<Key, usize> = BTreeMap::new();
    let mut actors: BTreeMap<Key, BTreeMap<String, usize>> = BTreeMap::new();
    let mut frames: BTreeMap<(String, String, Sentiment), BTreeMap<String, usize>> = BTreeMap::new();
    for a in activities {
        let key = (a.target.clone(), a.sentiment);
        *counts.entry(key.clone()).or_default() += 1;
        *actors.entry(key).or_default().entry(a.actor.clone()).or_default() += 1;
        *frames
            .entry((a.actor.clone(), a.target.clone(), a.sentiment))
            .or_default()
            .entry(a.frame.name().to_string())
            .or_default() += 1;
    }
    // BTreeMap iteration is ascending, so max_by with a strict comparison keeps
    // the smallest key among equal counts
    let modal = |m: &BTreeMap<String, usize>| -> String {
        m.iter()
            .fold(None::<(&String, usize)>, |best, (k, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((k, c)),
            })
            .map(|(k, _)| k.clone())
            .unwrap_or_default()
    };
    let side = |s: Sentiment| -> Vec<TargetSummary> {
        let mut rows: Vec<(&String, usize)> =
            counts.iter().filter(|((_, ks), _)| *ks == s).map(|((t, _), &c)| (t, c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows.into_iter()
            .take(DIGEST_TOP)
            .map(|(t, c)| {
                let actor = modal(&actors[&(t.clone(), s)]);
                let frame = modal(&frames[&(actor.clone(), t.clone(), s)]);
                TargetSummary {
                    target: t.clone(),
                    actor,
                    frame,
                    count: c,
                }
            })
            .collect()
    };
    (side(Sentiment::Positive), side(Sentiment::Negative))
}

/// Size of the "top half" selection: ceil(n / 2), at least 1.
pub fn top_half(n: usize) -> usize {
    n.div_ceil(2).max(1)
}

/// Digest over the nearest half of a partition. `None` for an empty partition.
pub fn aggregate_metadata(
    ptp: &PtpCluster,
    ideology: Ideology,
    points: &BTreeMap<String, TalkingPoint>,
) -> Option<MetadataDigest> {
    let ranked = ranked_partition(ptp, ideology, points);
    if ranked.is_empty() {
        return None;
    }
    let n = top_half(ranked.len());
    let (positive_targets, negative_targets) =
        digest_activities(ranked.iter().take(n).flat_map(|(p, _)| p.activities.iter()));
    Some(MetadataDigest {
        ptp_id: ptp.id,
        ideology,
        positive_targets,
        negative_targets,
    })
}

/// Perspectives for every PTP, in PTP id order.
pub fn generate_perspectives(
    gateway: &Gateway,
    ptps: &[PtpCluster],
    src: &Sources,
    k: usize,
    m: usize,
) -> Vec<PartisanPerspective> {
    let mut ordered: Vec<&PtpCluster> = ptps.iter().collect();
    ordered.sort_by_key(|p| p.id);
    let jobs: Vec<(&PtpCluster, Ideology)> =
        ordered.iter().flat_map(|p| Ideology::BOTH.map(|i| (*p, i))).collect();
    let mut diags = Vec::new();
    let mut views = generate_all(gateway, &jobs, src, k, m, &mut diags).into_iter();
    ordered
        .iter()
        .map(|p| {
            let left = views.next().flatten();
            let right = views.next().flatten();
            let prefix = format!("PTP {} ", p.id);
            PartisanPerspective {
                ptp_id: p.id,
                aspect: p.label.aspect.clone(),
                left,
                right,
                left_digest: aggregate_metadata(p, Ideology::Left, src.points),
                right_digest: aggregate_metadata(p, Ideology::Right, src.points),
                one_sided: p.is_one_sided(),
                diagnostics: diags
                    .iter()
                    .filter(|d| d.starts_with(&prefix) || d.starts_with(&format!("PTP {}:", p.id)))
                    .cloned()
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetunePair {
    pub article_id: String,
    pub ptp_id: usize,
    pub ideology: Ideology,
    pub prompt_text: String,
    pub chosen: String,
    pub rejected: String,
}

/// Number of articles kept by the export: ceil(25%), at least 1.
pub fn export_quota(n: usize) -> usize {
    n.div_ceil(4).max(1)
}

pub fn finetune_prompt(ptp: &PtpCluster, article: &Article) -> String {
    format!(
        "Theme: {}. {}\n\nDescribe how the outlet behind this article discusses the theme.\n\nTitle: {}\n{}",
        ptp.label.aspect, ptp.label.description, article.title, article.body
    )
}

/// For each two-sided PTP and ideology, ranks the partition's articles by
/// similarity to that side's viewpoint text and keeps the top quarter.
pub fn export_finetune_pairs(
    gateway: &Gateway,
    ptps: &[PtpCluster],
    perspectives: &[PartisanPerspective],
    src: &Sources,
) -> Result<Vec<FinetunePair>, GatewayError> {
    let by_id: HashMap<usize, &PartisanPerspective> = perspectives.iter().map(|p| (p.ptp_id, p)).collect();
    let mut ordered: Vec<&PtpCluster> = ptps.iter().collect();
    ordered.sort_by_key(|p| p.id);

    let mut article_ids: BTreeSet<&str> = BTreeSet::new();
    let mut view_texts: BTreeSet<String> = BTreeSet::new();
    for p in &ordered {
        let Some(pp) = by_id.get(&p.id).filter(|pp| pp.is_complete()) else { continue };
        for i in Ideology::BOTH {
            view_texts.insert(pp.viewpoint(i).expect("complete").text());
            for id in p.partition(i) {
                if let Some(pt) = src.points.get(id) {
                    article_ids.insert(pt.article_id.as_str());
                }
            }
        }
    }
    let article_ids: Vec<&str> = article_ids.into_iter().filter(|a| src.articles.contains_key(*a)).collect();
    let texts: Vec<String> = article_ids.iter().map(|a| src.articles[*a].embedding_text()).collect();
    let article_vecs: HashMap<&str, EmbeddingVector> =
        article_ids.iter().copied().zip(gateway.embed(&texts)?).collect();
    let view_texts: Vec<String> = view_texts.into_iter().collect();
    let view_vecs: HashMap<String, EmbeddingVector> =
        view_texts.iter().cloned().zip(gateway.embed(&view_texts)?).collect();

    let mut out = Vec::new();
    for p in ordered {
        let Some(pp) = by_id.get(&p.id).filter(|pp| pp.is_complete()) else { continue };
        for i in Ideology::BOTH {
            let chosen = pp.viewpoint(i).expect("complete").text();
            let rejected = pp.viewpoint(i.opposite()).expect("complete").text();
            let members: BTreeSet<&str> = p
                .partition(i)
                .iter()
                .filter_map(|id| src.points.get(id))
                .map(|pt| pt.article_id.as_str())
                .filter(|a| article_vecs.contains_key(a))
                .collect();
            if members.is_empty() {
                continue;
            }
            let ranked = rank_by_similarity(&view_vecs[&chosen], members.iter().map(|a| (*a, &article_vecs[a])));
            for (a, _) in ranked.into_iter().take(export_quota(members.len())) {
                out.push(FinetunePair {
                    article_id: a.to_string(),
                    ptp_id: p.id,
                    ideology: i,
                    prompt_text: finetune_prompt(p, &src.articles[a]),
                    chosen: chosen.clone(),
                    rejected: rejected.clone(),
                });
            }
        }
    }
    Ok(out)
}
