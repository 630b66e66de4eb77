//! Snapshot geometry, categories and SVG/JSON agreement on a sixteen-PTP
//! event shaped like a typical discourse map.

use std::collections::BTreeMap;

use proptest::prelude::*;
use regex::Regex;
use talkpoints_core::ptp::{PtpCluster, PtpLabel};
use talkpoints_core::snapshot::{
    build_snapshot, render_svg, write_snapshot, AgreementScore, Canvas, Category, SnapshotDocument, SnapshotEntry,
};
use talkpoints_core::vector::EmbeddingVector;

fn ptp(id: usize, left: usize, right: usize) -> PtpCluster {
    let l: Vec<String> = (0..left).map(|i| format!("{id}-l{i}")).collect();
    let r: Vec<String> = (0..right).map(|i| format!("{id}-r{i}")).collect();
    PtpCluster {
        id,
        label: PtpLabel {
            aspect: format!("Theme {id} & <co>"),
            description: String::new(),
            embedding: EmbeddingVector::normalized(vec![1.0, 0.0]).unwrap(),
        },
        member_ids: l.iter().chain(&r).cloned().collect(),
        frequency: left + right,
        left_member_ids: l,
        right_member_ids: r,
        iteration: 1,
    }
}

fn score(id: usize, total: u8) -> AgreementScore {
    let answers = std::array::from_fn(|i| i < total as usize);
    AgreementScore::from_answers(id, answers)
}

/// (id, left, right, agreement total) for sixteen PTPs. Ids 1, 2, 3, 10 and
/// 16 carry the five named categories; the rest are small fillers.
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

fn fixture(swap: bool) -> (Vec<PtpCluster>, BTreeMap<usize, AgreementScore>) {
    let mut ptps = Vec::new();
    let mut scores = BTreeMap::new();
    for (id, l, r, total) in LAYOUT {
        let (l, r) = if swap { (r, l) } else { (l, r) };
        ptps.push(ptp(id, l, r));
        if l > 0 && r > 0 {
            scores.insert(id, score(id, total));
        }
    }
    (ptps, scores)
}

fn entries(swap: bool) -> Vec<SnapshotEntry> {
    let (ptps, scores) = fixture(swap);
    let (e, missing) = build_snapshot(&ptps, &scores, 4.0);
    assert!(missing.is_empty());
    e
}

#[test]
fn named_ptps_take_the_five_categories() {
    let e = entries(false);
    let cat: BTreeMap<usize, Category> = e.iter().map(|e| (e.ptp_id, e.category)).collect();
    assert_eq!(cat[&1], Category::Agreement);
    assert_eq!(cat[&10], Category::Disagreement);
    assert_eq!(cat[&16], Category::AgendaSetting);
    assert_eq!(cat[&2], Category::PartisanBattle);
    assert_eq!(cat[&3], Category::RightOnly);
    // a small balanced low-agreement PTP is not a battle
    assert_eq!(cat[&9], Category::Disagreement);
}

#[test]
fn swapping_partitions_negates_every_x() {
    let a = entries(false);
    let b = entries(true);
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.ptp_id, q.ptp_id);
        assert_eq!(p.x, -q.x, "ptp {}", p.ptp_id);
        assert_eq!(p.y, q.y);
        let mirrored = match p.category {
            Category::LeftOnly => Category::RightOnly,
            Category::RightOnly => Category::LeftOnly,
            c => c,
        };
        assert_eq!(q.category, mirrored);
    }
}

#[test]
fn low_totals_fall_below_the_axis() {
    for e in entries(false) {
        if let Some(t) = e.total {
            assert_eq!(t <= 3, e.y < 0.0, "ptp {} total {t} y {}", e.ptp_id, e.y);
        } else {
            assert_eq!(e.y, 0.0);
            assert_eq!(e.x.abs(), 1.0);
        }
    }
}

fn svg_attrs(svg: &str) -> Vec<(usize, f64, f64, f64, String)> {
    let re = Regex::new(
        r#"<g class="ptp" data-ptp="(\d+)" data-x="([^"]+)" data-y="([^"]+)" data-radius="([^"]+)" data-category="([^"]+)">"#,
    )
    .unwrap();
    re.captures_iter(svg)
        .map(|c| (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap(), c[4].parse().unwrap(), c[5].to_string()))
        .collect()
}

#[test]
fn svg_and_json_carry_the_same_data() {
    let doc = SnapshotDocument {
        event_id: "fixture".into(),
        canvas: Canvas::default(),
        entries: entries(false),
    };
    let dir = tempfile::tempdir().unwrap();
    write_snapshot(&doc, dir.path()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("snapshot.svg")).unwrap();
    let json: SnapshotDocument =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("snapshot.json")).unwrap()).unwrap();
    assert_eq!(json, doc);
    let attrs = svg_attrs(&svg);
    assert_eq!(attrs.len(), json.entries.len());
    for (a, e) in attrs.iter().zip(&json.entries) {
        assert_eq!(*a, (e.ptp_id, e.x, e.y, e.radius, e.category.as_str().to_string()));
    }
    assert!(svg.contains("Theme 1 &amp; &lt;co&gt;"));
    assert_eq!(svg, render_svg(&doc));
}

#[test]
fn origin_is_the_canvas_centre_and_points_stay_inside() {
    let c = Canvas::default();
    assert_eq!(c.project(0.0, 0.0), (400.0, 300.0));
    for e in entries(false) {
        let (px, py) = c.project(e.x, e.y);
        assert!(px >= c.margin && px <= c.width - c.margin);
        assert!(py >= c.margin && py <= c.height - c.margin);
    }
}

proptest! {
    #[test]
    fn swap_symmetry_holds_for_any_layout(
        sizes in prop::collection::vec((0usize..20, 0usize..20, 0u8..=5), 1..20),
    ) {
        let build = |swap: bool| {
            let mut ptps = Vec::new();
            let mut scores = BTreeMap::new();
            for (i, &(l, r, t)) in sizes.iter().enumerate() {
                let (l, r) = if swap { (r, l) } else { (l, r) };
                let (l, r) = if l + r == 0 { (1, 1) } else { (l, r) };
                ptps.push(ptp(i + 1, l, r));
                scores.insert(i + 1, score(i + 1, t));
            }
            build_snapshot(&ptps, &scores, 2.0).0
        };
        let (a, b) = (build(false), build(true));
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!(p.x, -q.x);
            prop_assert!(p.radius > 0.0);
            prop_assert!(p.x.abs() <= 1.0);
            if let Some(t) = p.total {
                prop_assert_eq!(t <= 3, p.y < 0.0);
            }
        }
    }
}
