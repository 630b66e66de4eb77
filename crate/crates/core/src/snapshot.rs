//! Left/right agreement scoring per PTP and the event-discourse snapshot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, Gateway};
use crate::jsonfix::parse_yes_no;
use crate::perspectives::Viewpoint;
use crate::prompts;
use crate::ptp::PtpCluster;

pub const AGREEMENT_QUESTIONS: [&str; 5] = [
    "Do the two summaries share at least one point of discussion?",
    "Do the two summaries mention largely the same people, groups or organisations?",
    "Are the people or groups mentioned in both summaries treated with the same attitude, favourable or unfavourable, in each?",
    "Do the two summaries approach the event from the same standpoint?",
    "Where the summaries take different standpoints, do they still partly agree with each other?",
];

/// |x| at or above this, with both sides present, marks agenda setting.
pub const AGENDA_SETTING_X: f64 = 0.6;
/// |x| below this can mark a partisan battle.
pub const BALANCED_X: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementScore {
    pub ptp_id: usize,
    pub answers: [bool; 5],
    pub total: u8,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl AgreementScore {
    pub fn from_answers(ptp_id: usize, answers: [bool; 5]) -> Self {
        Self {
            ptp_id,
            answers,
            total: answers.iter().filter(|a| **a).count() as u8,
            diagnostics: Vec::new(),
        }
    }
}

pub fn agreement_requests(left: &Viewpoint, right: &Viewpoint) -> Vec<ChatRequest> {
    let (l, r) = (left.text(), right.text());
    AGREEMENT_QUESTIONS
        .iter()
        .map(|q| {
            let prompt = prompts::AGREEMENT
                .render(&[("summary1", &l), ("summary2", &r), ("question", q)])
                .expect("agreement template placeholders are fixed");
            ChatRequest::new(prompts::AGREEMENT.id, prompt).with_max_tokens(8)
        })
        .collect()
}

/// Five yes/no calls; an unreadable or failed answer scores 0.
pub fn agreement_score(gateway: &Gateway, left: &Viewpoint, right: &Viewpoint) -> AgreementScore {
    let mut answers = [false; 5];
    let mut diagnostics = Vec::new();
    for (i, res) in gateway.complete_many(&agreement_requests(left, right)).into_iter().enumerate() {
        match res.map(|t| (parse_yes_no(&t), t)) {
            Ok((Some(v), _)) => answers[i] = v,
            Ok((None, t)) => diagnostics.push(format!("question {} unreadable, scored 0: {t:?}", i + 1)),
            Err(e) => diagnostics.push(format!("question {} failed, scored 0: {e}", i + 1)),
        }
    }
    let mut s = AgreementScore::from_answers(left.ptp_id, answers);
    s.diagnostics = diagnostics;
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Agreement,
    Disagreement,
    AgendaSetting,
    PartisanBattle,
    LeftOnly,
    RightOnly,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Agreement,
        Category::Disagreement,
        Category::AgendaSetting,
        Category::PartisanBattle,
        Category::LeftOnly,
        Category::RightOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Agreement => "agreement",
            Category::Disagreement => "disagreement",
            Category::AgendaSetting => "agenda-setting",
            Category::PartisanBattle => "partisan-battle",
            Category::LeftOnly => "left-only",
            Category::RightOnly => "right-only",
        }
    }

    fn colour(self) -> &'static str {
        match self {
            Category::Agreement => "#4c9a5b",
            Category::Disagreement => "#c9803a",
            Category::AgendaSetting => "#7b5ea7",
            Category::PartisanBattle => "#c0392b",
            Category::LeftOnly => "#2e6fbf",
            Category::RightOnly => "#b03a48",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub ptp_id: usize,
    pub aspect: String,
    /// Negative is left-dominant.
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub category: Category,
    pub frequency: usize,
    pub left: usize,
    pub right: usize,
    pub total: Option<u8>,
}

/// Bias position from partition sizes. Both zero gives 0.
pub fn bias_position(left: usize, right: usize) -> f64 {
    if left + right == 0 {
        0.0
    } else {
        (right as f64 - left as f64) / (right + left) as f64
    }
}

/// Agreement position: totals up to 3 land below zero, 4 and 5 above.
pub fn agreement_position(total: u8) -> f64 {
    (f64::from(total) - 3.5) / 2.5
}

/// Smallest frequency still inside the top quarter of PTPs (at least one PTP).
pub fn top_quartile_floor(frequencies: &[usize]) -> Option<usize> {
    let mut f = frequencies.to_vec();
    f.sort_unstable_by(|a, b| b.cmp(a));
    let k = f.len().div_ceil(4).max(1);
    f.get(k - 1).copied()
}

/// One entry per PTP. Two-sided PTPs without a score are skipped and their
/// ids returned.
pub fn build_snapshot(
    ptps: &[PtpCluster],
    scores: &BTreeMap<usize, AgreementScore>,
    radius_c: f64,
) -> (Vec<SnapshotEntry>, Vec<usize>) {
    let floor = top_quartile_floor(&ptps.iter().map(|p| p.frequency).collect::<Vec<_>>());
    let mut ordered: Vec<&PtpCluster> = ptps.iter().collect();
    ordered.sort_by_key(|p| p.id);
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    for p in ordered {
        let (l, r) = (p.left_member_ids.len(), p.right_member_ids.len());
        let radius = radius_c * (p.frequency as f64).sqrt();
        let base = |x: f64, y: f64, category: Category, total: Option<u8>| SnapshotEntry {
            ptp_id: p.id,
            aspect: p.label.aspect.clone(),
            x,
            y,
            radius,
            category,
            frequency: p.frequency,
            left: l,
            right: r,
            total,
        };
        if r == 0 {
            entries.push(base(-1.0, 0.0, Category::LeftOnly, None));
            continue;
        }
        if l == 0 {
            entries.push(base(1.0, 0.0, Category::RightOnly, None));
            continue;
        }
        let Some(score) = scores.get(&p.id) else {
            missing.push(p.id);
            continue;
        };
        let x = bias_position(l, r);
        let y = agreement_position(score.total);
        let top = floor.is_some_and(|f| p.frequency >= f);
        let category = if x.abs() >= AGENDA_SETTING_X {
            Category::AgendaSetting
        } else if score.total <= 3 && x.abs() < BALANCED_X && top {
            Category::PartisanBattle
        } else if score.total >= 4 {
            Category::Agreement
        } else {
            Category::Disagreement
        };
        entries.push(base(x, y, category, Some(score.total)));
    }
    (entries, missing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 600.0,
            margin: 60.0,
        }
    }
}

/// Data-space extent. Symmetric, so the origin is the canvas centre.
pub const X_DOMAIN: f64 = 1.25;
pub const Y_DOMAIN: f64 = 1.5;

impl Canvas {
    /// Pixel position of a data point; y grows upward in data space.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        (
            self.margin + (x + X_DOMAIN) / (2.0 * X_DOMAIN) * w,
            self.margin + (Y_DOMAIN - y) / (2.0 * Y_DOMAIN) * h,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub event_id: String,
    pub canvas: Canvas,
    pub entries: Vec<SnapshotEntry>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Axes, one labelled circle per entry and a legend. Each circle carries its
/// data values as `data-*` attributes.
pub fn render_svg(doc: &SnapshotDocument) -> String {
    let c = doc.canvas;
    let (cx0, cy0) = c.project(0.0, 0.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = c.width,
        h = c.height
    );
    let _ = writeln!(s, "  <title>{}</title>", escape(&format!("Discourse snapshot: {}", doc.event_id)));
    let _ = writeln!(s, r#"  <rect width="{}" height="{}" fill="white"/>"#, c.width, c.height);
    let _ = writeln!(s, r##"  <g class="axes" stroke="#999" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"    <line x1="{:.3}" y1="{cy0:.3}" x2="{:.3}" y2="{cy0:.3}"/>"#,
        c.margin,
        c.width - c.margin
    );
    let _ = writeln!(
        s,
        r#"    <line x1="{cx0:.3}" y1="{:.3}" x2="{cx0:.3}" y2="{:.3}"/>"#,
        c.margin,
        c.height - c.margin
    );
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r##"  <g class="axis-labels" fill="#444">"##);
    let _ = writeln!(s, r#"    <text x="{:.3}" y="{:.3}">left-dominant</text>"#, c.margin, cy0 - 6.0);
    let _ = writeln!(
        s,
        r#"    <text x="{:.3}" y="{:.3}" text-anchor="end">right-dominant</text>"#,
        c.width - c.margin,
        cy0 - 6.0
    );
    let _ = writeln!(s, r#"    <text x="{:.3}" y="{:.3}">agreement</text>"#, cx0 + 6.0, c.margin + 12.0);
    let _ = writeln!(s, r#"    <text x="{:.3}" y="{:.3}">disagreement</text>"#, cx0 + 6.0, c.height - c.margin);
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r#"  <g class="ptps">"#);
    for e in &doc.entries {
        let (px, py) = c.project(e.x, e.y);
        let _ = writeln!(
            s,
            r#"    <g class="ptp" data-ptp="{id}" data-x="{x}" data-y="{y}" data-radius="{r}" data-category="{cat}">"#,
            id = e.ptp_id,
            x = e.x,
            y = e.y,
            r = e.radius,
            cat = e.category.as_str()
        );
        let _ = writeln!(
            s,
            r##"      <circle cx="{px:.3}" cy="{py:.3}" r="{:.3}" fill="{}" fill-opacity="0.55" stroke="#333"><title>{}</title></circle>"##,
            e.radius,
            e.category.colour(),
            escape(&format!("PTP {}: {}", e.ptp_id, e.aspect))
        );
        let _ = writeln!(
            s,
            r#"      <text x="{px:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            py + 4.0,
            e.ptp_id
        );
        let _ = writeln!(s, "    </g>");
    }
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r#"  <g class="legend">"#);
    for (i, cat) in Category::ALL.iter().enumerate() {
        let y = 14.0 + 14.0 * i as f64;
        let x = c.width - 130.0;
        let _ = writeln!(
            s,
            r#"    <circle cx="{x:.3}" cy="{y:.3}" r="5" fill="{}"/><text x="{:.3}" y="{:.3}">{}</text>"#,
            cat.colour(),
            x + 10.0,
            y + 4.0,
            cat.as_str()
        );
    }
    let _ = writeln!(s, "  </g>");
    s.push_str("</svg>\n");
    s
}

/// Writes `snapshot.svg` and `snapshot.json` into `dir`.
pub fn write_snapshot(doc: &SnapshotDocument, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("snapshot.svg"), render_svg(doc))?;
    let mut json = serde_json::to_string_pretty(doc).map_err(std::io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("snapshot.json"), json)
}
