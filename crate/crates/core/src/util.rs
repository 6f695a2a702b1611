//! Small helpers shared across the pipeline stages.

use std::cmp::Ordering;

use sha2::{Digest, Sha256};

/// Lower-case hex SHA-256 of `data`.
pub fn sha256_hex(data: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(data.as_ref()))
}

/// Numeric-aware ordering so that `FR2` sorts before `FR10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut left = a.as_bytes();
    let mut right = b.as_bytes();
    loop {
        match (left.first(), right.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let ln = left.iter().take_while(|c| c.is_ascii_digit()).count();
                let rn = right.iter().take_while(|c| c.is_ascii_digit()).count();
                let ld = trim_zeros(&left[..ln]);
                let rd = trim_zeros(&right[..rn]);
                let ord = ld.len().cmp(&rd.len()).then_with(|| ld.cmp(rd));
                if ord != Ordering::Equal {
                    return ord;
                }
                left = &left[ln..];
                right = &right[rn..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                left = &left[1..];
                right = &right[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let start = digits.iter().take_while(|c| **c == b'0').count();
    &digits[start..]
}

/// Collapse runs of whitespace to single spaces and trim the ends.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Pull a JSON value out of free-form model output.
///
/// Accepts bare JSON, fenced code blocks, or JSON embedded in prose. Trailing
/// commas before `}`/`]` are dropped since models copy them from examples.
pub fn extract_json(text: &str) -> Result<serde_json::Value, String> {
    let trimmed = text.trim();
    let mut candidates: Vec<&str> = vec![trimmed];
    if let Some(inner) = fenced_block(trimmed) {
        candidates.push(inner);
    }
    if let Some(slice) = outer_span(trimmed, '{', '}') {
        candidates.push(slice);
    }
    if let Some(slice) = outer_span(trimmed, '[', ']') {
        candidates.push(slice);
    }
    let mut last_err = String::from("no JSON value found");
    for candidate in candidates {
        match serde_json::from_str::<serde_json::Value>(candidate) {
            Ok(v) => return Ok(v),
            Err(_) => match serde_json::from_str(&strip_trailing_commas(candidate)) {
                Ok(v) => return Ok(v),
                Err(e) => last_err = e.to_string(),
            },
        }
    }
    Err(last_err)
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}

fn outer_span(text: &str, open: char, close: char) -> Option<&str> {
    let start = text.find(open)?;
    let end = text.rfind(close)?;
    (end > start).then(|| &text[start..=end])
}

fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        if c == '"' {
            in_string = true;
            out.push(c);
            continue;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|n| !n.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Map `f` over `items` with up to `concurrency` worker threads, keeping
/// input order in the output.
pub fn par_map_ordered<I, T, F>(items: &[I], concurrency: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if concurrency <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency)
        .build()
    {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Whole-word occurrences of `needle` in `haystack` (word characters are
/// ASCII alphanumerics, `_`, `-` and `.` inside ids).
pub fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '-';
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        let at = start + pos;
        let end = at + needle.len();
        let before_ok = haystack[..at]
            .chars()
            .next_back()
            .is_none_or(|c| !is_word(c));
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !is_word(c));
        if before_ok && after_ok {
            return true;
        }
        start = at + needle.len().max(1);
        while !haystack.is_char_boundary(start) {
            start += 1;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_matching() {
        assert!(contains_word("see [G1] and T12", "G1"));
        assert!(!contains_word("G12 only", "G1"));
        assert!(!contains_word("xG1", "G1"));
        assert!(contains_word("SR FR10.", "FR10"));
    }

    #[test]
    fn ordered_parallel_map() {
        let items: Vec<u32> = (0..50).collect();
        assert_eq!(
            par_map_ordered(&items, 4, |x| x * 2),
            items.iter().map(|x| x * 2).collect::<Vec<_>>()
        );
    }

    #[test]
    fn natural_order_handles_numbers() {
        let mut ids = vec!["FR10", "FR2", "FR1", "NFR3", "FR02"];
        ids.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(ids, vec!["FR1", "FR02", "FR2", "FR10", "NFR3"]);
    }

    #[test]
    fn extract_json_from_fence_and_prose() {
        let text = "Here you go:\n```json\n{\"a\": 1}\n```\nthanks";
        assert_eq!(extract_json(text).unwrap()["a"], 1);
        let prose = "The result is {\"b\": [1, 2,],} as requested.";
        assert_eq!(extract_json(prose).unwrap()["b"][1], 2);
    }

    #[test]
    fn trailing_comma_inside_string_is_kept() {
        let v = extract_json("{\"a\": \"x,}\",}").unwrap();
        assert_eq!(v["a"], "x,}");
    }

    #[test]
    fn prose_only_is_rejected() {
        assert!(extract_json("I could not find any goals.").is_err());
    }
}
