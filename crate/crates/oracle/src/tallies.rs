//! Counting and metric references.

/// One actor-to-target activity with its sentiment and frame name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefActivity {
    pub actor: String,
    pub target: String,
    pub positive: bool,
    pub frame: String,
}

/// (target, actor, frame, count) rows for one sentiment.
pub type DigestRows = Vec<(String, String, String, usize)>;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Most frequent string, smallest first among equals.
fn mode(values: &[String]) -> String {
    let mut distinct: Vec<&String> = values.iter().collect();
    distinct.sort();
    distinct.dedup();
    let mut best: Option<(&String, usize)> = None;
    for v in distinct {
        let c = values.iter().filter(|x| *x == v).count();
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best.map(|(v, _)| v.clone()).unwrap_or_default()
}

/// Target tallies per sentiment, at most `top` rows each, count descending
/// then target ascending.
pub fn digest(activities: &[RefActivity], top: usize) -> (DigestRows, DigestRows) {
    let side = |positive: bool| -> DigestRows {
        let mine: Vec<&RefActivity> = activities.iter().filter(|a| a.positive == positive).collect();
        let mut targets: Vec<String> = mine.iter().map(|a| a.target.clone()).collect();
        targets.sort();
        targets.dedup();
        let mut rows: DigestRows = targets
            .into_iter()
            .map(|t| {
                let with_t: Vec<&&RefActivity> = mine.iter().filter(|a| a.target == t).collect();
                let actor = mode(&with_t.iter().map(|a| a.actor.clone()).collect::<Vec<_>>());
                let frames: Vec<String> =
                    with_t.iter().filter(|a| a.actor == actor).map(|a| a.frame.clone()).collect();
                let frame = mode(&frames);
                let n = with_t.len();
                (t, actor, frame, n)
            })
            .collect();
        rows.sort_by(|a, b| b.3.cmp(&a.3).then(a.0.cmp(&b.0)));
        rows.truncate(top);
        rows
    };
    (side(true), side(false))
}

/// Digest over the ceil(n/2) points (at least one) nearest `label`, ties by
/// point id. `points` holds (id, embedding, activities).
pub fn partition_digest(
    label: &[f64],
    points: &[(String, Vec<f64>, Vec<RefActivity>)],
    top: usize,
) -> Option<(DigestRows, DigestRows)> {
    if points.is_empty() {
        return None;
    }
    let order = brute_force_top_k(label, &points.iter().map(|(id, e, _)| (id.clone(), e.clone())).collect::<Vec<_>>(), points.len());
    let keep = points.len().div_ceil(2).max(1);
    let acts: Vec<RefActivity> = order[..keep]
        .iter()
        .flat_map(|id| points.iter().find(|p| &p.0 == id).unwrap().2.clone())
        .collect();
    Some(digest(&acts, top))
}

/// Ids of the `k` items most cosine-similar to `query`, ties by id, found by
/// repeated selection of the best remaining item.
pub fn brute_force_top_k(query: &[f64], items: &[(String, Vec<f64>)], k: usize) -> Vec<String> {
    let mut left: Vec<(String, f64)> = items.iter().map(|(id, v)| (id.clone(), cosine(query, v))).collect();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (bi, bs) = (&left[best].0, left[best].1);
            let (ci, cs) = (&left[i].0, left[i].1);
            if cs > bs || (cs == bs && ci < bi) {
                best = i;
            }
        }
        out.push(left.remove(best).0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefScores {
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Two-class scores from a confusion count; `None` predictions are wrong for
/// every class.
pub fn two_class_scores(truth: &[usize], predicted: &[Option<usize>]) -> RefScores {
    let mut s = RefScores {
        precision: [0.0; 2],
        recall: [0.0; 2],
        f1: [0.0; 2],
        macro_f1: 0.0,
        accuracy: 0.0,
    };
    for c in 0..2 {
        let predicted_c = predicted.iter().filter(|p| **p == Some(c)).count();
        let actual_c = truth.iter().filter(|t| **t == c).count();
        let hits = truth.iter().zip(predicted).filter(|(t, p)| **t == c && **p == Some(c)).count();
        let p = if predicted_c == 0 { 0.0 } else { hits as f64 / predicted_c as f64 };
        let r = if actual_c == 0 { 0.0 } else { hits as f64 / actual_c as f64 };
        s.precision[c] = p;
        s.recall[c] = r;
        s.f1[c] = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    s.macro_f1 = (s.f1[0] + s.f1[1]) / 2.0;
    let right = truth.iter().zip(predicted).filter(|(t, p)| Some(**t) == **p).count();
    s.accuracy = if truth.is_empty() { 0.0 } else { right as f64 / truth.len() as f64 };
    s
}
