//! Strict-then-lenient JSON recovery for chat-backend output.

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recovery {
    Strict,
    Extracted,
    Repaired,
}

/// Tries, in order: the raw text, the first balanced object or array inside
/// it (code fences and prose ignored), and that span after syntax repair.
pub fn lenient_parse(raw: &str) -> Result<(Value, Recovery), String> {
    if let Ok(v) = serde_json::from_str::<Value>(raw.trim()) {
        return Ok((v, Recovery::Strict));
    }
    let first = raw.find(['{', '[']);
    // an unterminated payload: close whatever is still open before looking
    // for smaller balanced spans inside it
    if let Some(start) = first.filter(|&s| matching_close(raw, s).is_none()) {
        let closed = close_open(&repair(&raw[start..]));
        if let Ok(v) = serde_json::from_str::<Value>(&closed) {
            return Ok((v, Recovery::Repaired));
        }
    }
    let mut last_err = None;
    for span in candidate_spans(raw) {
        if let Ok(v) = serde_json::from_str::<Value>(span) {
            return Ok((v, Recovery::Extracted));
        }
        match serde_json::from_str::<Value>(&repair(span)) {
            Ok(v) => return Ok((v, Recovery::Repaired)),
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    Err(last_err.unwrap_or_else(|| "no JSON object or array found".to_string()))
}

/// Balanced `{...}` / `[...]` spans, outermost first, at most a handful.
fn candidate_spans(raw: &str) -> Vec<&str> {
    let bytes = raw.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() && spans.len() < 8 {
        if bytes[i] == b'{' || bytes[i] == b'[' {
            if let Some(end) = matching_close(raw, i) {
                spans.push(&raw[i..=end]);
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    spans
}

/// Index of the bracket closing the one at `start`, skipping string contents.
fn matching_close(raw: &str, start: usize) -> Option<usize> {
    let mut stack: Vec<u8> = Vec::new();
    let mut in_str: Option<u8> = None;
    let mut escaped = false;
    for (i, &b) in raw.as_bytes().iter().enumerate().skip(start) {
        if let Some(q) = in_str {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == q {
                in_str = None;
            }
            continue;
        }
        match b {
            b'"' => in_str = Some(b),
            b'{' => stack.push(b'}'),
            b'[' => stack.push(b']'),
            b'}' | b']' => {
                if stack.pop() != Some(b) {
                    return None;
                }
                if stack.is_empty() {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Fixes common syntax slips outside string literals: trailing commas,
/// unquoted or single-quoted keys and strings, smart quotes, Python literals.
pub fn repair(span: &str) -> String {
    let s: String = span
        .chars()
        .map(|c| match c {
            '\u{201c}' | '\u{201d}' => '"',
            '\u{2018}' | '\u{2019}' => '\'',
            c => c,
        })
        .collect();
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' | '\'' => {
                // copy a string literal, converting single quotes to double
                let q = c;
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    if d == '\\' && i + 1 < chars.len() {
                        out.push(d);
                        out.push(chars[i + 1]);
                        i += 2;
                        continue;
                    }
                    if d == q {
                        break;
                    }
                    if d == '"' {
                        out.push_str("\\\"");
                    } else if d == '\n' {
                        out.push_str("\\n");
                    } else {
                        out.push(d);
                    }
                    i += 1;
                }
                out.push('"');
                i += 1;
            }
            ',' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == '}' || chars[j] == ']') {
                    i += 1;
                } else {
                    out.push(c);
                    i += 1;
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '-') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let mut k = j;
                while k < chars.len() && chars[k].is_whitespace() {
                    k += 1;
                }
                if k < chars.len() && chars[k] == ':' {
                    out.push('"');
                    out.push_str(&word);
                    out.push('"');
                } else {
                    match word.as_str() {
                        "True" => out.push_str("true"),
                        "False" => out.push_str("false"),
                        "None" => out.push_str("null"),
                        _ => out.push_str(&word),
                    }
                }
                i = j;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Appends the closers for any brackets or string left open.
fn close_open(s: &str) -> String {
    let mut stack = Vec::new();
    let mut in_str = false;
    let mut escaped = false;
    for c in s.chars() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' => stack.push('}'),
            '[' => stack.push(']'),
            '}' | ']' => {
                stack.pop();
            }
            _ => {}
        }
    }
    let mut out = s.trim_end().trim_end_matches(',').to_string();
    if in_str {
        out.push('"');
    }
    while let Some(c) = stack.pop() {
        out.push(c);
    }
    out
}

/// Reads a string field, accepting numbers and joining string arrays.
pub fn coerce_string(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().filter_map(|x| coerce_string(Some(x))).collect();
            (!parts.is_empty()).then(|| parts.join(", "))
        }
        _ => None,
    }
}

/// Reads a list of strings, accepting a single comma-separated string.
pub fn coerce_string_list(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(|x| coerce_string(Some(x)))
            .filter(|s| !s.is_empty())
            .collect(),
        Some(Value::String(s)) => s
            .split([',', ';'])
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect(),
        _ => Vec::new(),
    }
}

/// First present key among `names`.
pub fn field<'a>(obj: &'a serde_json::Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n))
}

/// Interprets a free-text yes/no answer. `None` when neither or both appear
/// as the leading word.
pub fn parse_yes_no(raw: &str) -> Option<bool> {
    let lower = raw.trim().to_lowercase();
    let first = lower
        .split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())?
        .to_string();
    match first.as_str() {
        "yes" | "y" | "true" | "1" => return Some(true),
        "no" | "n" | "false" | "0" => return Some(false),
        _ => {}
    }
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).collect();
    match (words.contains(&"yes"), words.contains(&"no")) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn strict_first() {
        assert_eq!(lenient_parse(r#"{"a":1}"#).unwrap(), (json!({"a":1}), Recovery::Strict));
    }

    #[test]
    fn extracts_from_prose_and_fences() {
        let raw = "Sure! Here it is:\n```json\n{\"a\": [1, 2]}\n```\nHope that helps.";
        assert_eq!(lenient_parse(raw).unwrap(), (json!({"a":[1,2]}), Recovery::Extracted));
    }

    #[test]
    fn repairs_trailing_commas_and_bare_keys() {
        let raw = "{a: 'x', \"b\": [1, 2,], c: True,}";
        let (v, how) = lenient_parse(raw).unwrap();
        assert_eq!(v, json!({"a":"x","b":[1,2],"c":true}));
        assert_eq!(how, Recovery::Repaired);
    }

    #[test]
    fn closes_truncated_output() {
        let (v, _) = lenient_parse(r#"{"items": [{"x": "abc"}, {"x": "de"#).unwrap();
        assert_eq!(v["items"][1]["x"], "de");
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_extraction() {
        let raw = r#"note {"s": "a } b", "t": "{"} trailing"#;
        assert_eq!(lenient_parse(raw).unwrap().0, json!({"s": "a } b", "t": "{"}));
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(lenient_parse("no json here").is_err());
    }

    #[test]
    fn yes_no_answers() {
        assert_eq!(parse_yes_no("Yes."), Some(true));
        assert_eq!(parse_yes_no("no, they differ"), Some(false));
        assert_eq!(parse_yes_no("I think the answer is yes"), Some(true));
        assert_eq!(parse_yes_no("maybe"), None);
        assert_eq!(parse_yes_no(""), None);
    }
}
