use std::collections::BTreeMap;

use regex::Regex;
use talkpoints_core::ptp::{PtpCluster, PtpLabel};
use talkpoints_core::snapshot::{
    build_snapshot, render_svg, AgreementScore, Canvas, Category, SnapshotDocument, SnapshotEntry,
};
use talkpoints_core::vector::EmbeddingVector;

use crate::{ensure, Check};

/// (id, left, right, agreement total); ids 1, 10, 16, 2 and 3 are the named
/// agreement, disagreement, agenda-setting, battle and right-only themes.
const LAYOUT: [(usize, usize, usize, u8); 16] = [
    (1, 8, 7, 5),
    (2, 15, 14, 2),
    (3, 0, 12, 0),
    (4, 3, 2, 4),
    (5, 2, 3, 1),
    (6, 4, 1, 5),
    (7, 1, 4, 3),
    (8, 2, 2, 4),
    (9, 3, 3, 0),
    (10, 6, 3, 3),
    (11, 0, 3, 0),
    (12, 2, 1, 2),
    (13, 3, 4, 5),
    (14, 1, 2, 3),
    (15, 4, 4, 4),
    (16, 10, 1, 4),
];

fn ptp(id: usize, left: usize, right: usize) -> PtpCluster {
    let l: Vec<String> = (0..left).map(|i| format!("{id}-l{i}")).collect();
    let r: Vec<String> = (0..right).map(|i| format!("{id}-r{i}")).collect();
    PtpCluster {
        id,
        label: PtpLabel {
            aspect: format!("Theme {id}"),
            description: String::new(),
            embedding: EmbeddingVector::normalized(vec![1.0, 0.0]).expect("non-zero"),
        },
        member_ids: l.iter().chain(&r).cloned().collect(),
        frequency: left + right,
        left_member_ids: l,
        right_member_ids: r,
        iteration: 1,
    }
}

fn entries(swap: bool) -> Vec<SnapshotEntry> {
    let mut ptps = Vec::new();
    let mut scores = BTreeMap::new();
    for (id, l, r, total) in LAYOUT {
        let (l, r) = if swap { (r, l) } else { (l, r) };
        ptps.push(ptp(id, l, r));
        if l > 0 && r > 0 {
            scores.insert(id, AgreementScore::from_answers(id, std::array::from_fn(|i| i < total as usize)));
        }
    }
    build_snapshot(&ptps, &scores, 4.0).0
}

pub fn contracts() -> Check {
    let (a, b) = (entries(false), entries(true));
    ensure!(a.len() == LAYOUT.len() && b.len() == a.len(), "entry counts {} / {}", a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        ensure!(p.x == -q.x, "ptp {}: x {} after swap {}", p.ptp_id, p.x, q.x);
    }
    for e in &a {
        if let Some(t) = e.total {
            ensure!((t <= 3) == (e.y < 0.0), "ptp {} total {t} y {}", e.ptp_id, e.y);
        }
    }

    let doc = SnapshotDocument {
        event_id: "layout".into(),
        canvas: Canvas::default(),
        entries: a.clone(),
    };
    let json: SnapshotDocument =
        serde_json::from_str(&serde_json::to_string(&doc).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(json == doc, "json round trip changed the document");
    let re = Regex::new(
        r#"data-ptp="(\d+)" data-x="([^"]+)" data-y="([^"]+)" data-radius="([^"]+)" data-category="([^"]+)""#,
    )
    .expect("valid regex");
    let svg = render_svg(&doc);
    let from_svg: Vec<(usize, f64, f64, f64, String)> = re
        .captures_iter(&svg)
        .map(|c| {
            (
                c[1].parse().unwrap_or(0),
                c[2].parse().unwrap_or(f64::NAN),
                c[3].parse().unwrap_or(f64::NAN),
                c[4].parse().unwrap_or(f64::NAN),
                c[5].to_string(),
            )
        })
        .collect();
    let from_json: Vec<(usize, f64, f64, f64, String)> =
        json.entries.iter().map(|e| (e.ptp_id, e.x, e.y, e.radius, e.category.as_str().to_string())).collect();
    ensure!(from_svg == from_json, "svg data attributes disagree with json");

    let cat: BTreeMap<usize, Category> = a.iter().map(|e| (e.ptp_id, e.category)).collect();
    for (id, want) in [
        (1, Category::Agreement),
        (10, Category::Disagreement),
        (16, Category::AgendaSetting),
        (2, Category::PartisanBattle),
        (3, Category::RightOnly),
    ] {
        ensure!(cat[&id] == want, "ptp {id} is {:?}, expected {want:?}", cat[&id]);
    }
    Ok(format!("{} entries, five named categories present", a.len()))
}
