//! Versioned prompt templates and `{{name}}` substitution.
//!
//! Each rendered prompt delimits its inputs with `### NAME` lines closed by
//! `### END`, which keeps the inputs recoverable by [`section`].

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub id: &'static str,
    pub text: &'static str,
}

macro_rules! template {
    ($name:ident, $id:literal) => {
        pub const $name: Template = Template {
            id: $id,
            text: include_str!(concat!("../templates/", $id, ".txt")),
        };
    };
}

template!(EXTRACT_TALKING_POINTS, "extract_talking_points.v1");
template!(REPAIR_JSON, "repair_json.v1");
template!(LABEL_CLUSTER, "label_cluster.v1");
template!(MERGE_LABELS, "merge_labels.v1");
template!(COHERENCE_CHECK, "coherence_check.v1");
template!(CONDITIONED_SUMMARY, "conditioned_summary.v1");
template!(VIEWPOINT, "viewpoint.v1");
template!(CLASSIFY_VIEWPOINTS, "classify_viewpoints.v1");
template!(CLASSIFY_DIRECT, "classify_direct.v1");
template!(TOPIC_RELEVANCE, "topic_relevance.v1");
template!(EVIDENCE, "evidence.v1");
template!(AGREEMENT, "agreement.v1");

pub const ALL: &[Template] = &[
    EXTRACT_TALKING_POINTS,
    REPAIR_JSON,
    LABEL_CLUSTER,
    MERGE_LABELS,
    COHERENCE_CHECK,
    CONDITIONED_SUMMARY,
    VIEWPOINT,
    CLASSIFY_VIEWPOINTS,
    CLASSIFY_DIRECT,
    TOPIC_RELEVANCE,
    EVIDENCE,
    AGREEMENT,
];

pub fn by_id(id: &str) -> Option<Template> {
    ALL.iter().copied().find(|t| t.id == id)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template {template} has no value for {{{{{name}}}}}")]
    Missing { template: &'static str, name: String },
    #[error("template {template} does not use {name}")]
    Unused { template: &'static str, name: String },
}

impl Template {
    /// Substitutes every `{{name}}` in one pass; inserted values are not rescanned.
    pub fn render(&self, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.text.len() + vars.iter().map(|v| v.1.len()).sum::<usize>());
        let mut used = vec![false; vars.len()];
        let mut rest = self.text;
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            let Some(end) = after.find("}}") else {
                break;
            };
            let name = &after[..end];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                out.push_str(&rest[..start + 2]);
                rest = after;
                continue;
            }
            let Some(i) = vars.iter().position(|(k, _)| *k == name) else {
                return Err(PromptError::Missing {
                    template: self.id,
                    name: name.to_string(),
                });
            };
            used[i] = true;
            out.push_str(&rest[..start]);
            out.push_str(vars[i].1);
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(PromptError::Unused {
                template: self.id,
                name: vars[i].0.to_string(),
            });
        }
        Ok(out)
    }
}

/// Text between a `### NAME` line and the next `### ` line.
pub fn section<'a>(prompt: &'a str, name: &str) -> Option<&'a str> {
    let marker = format!("### {name}\n");
    let start = prompt.find(&marker)? + marker.len();
    let body = &prompt[start..];
    let end = body.find("\n### ").map_or(body.len(), |e| e);
    Some(body[..end].trim_end_matches('\n'))
}
