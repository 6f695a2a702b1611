use std::collections::BTreeMap;

use super::prompts;
use super::AgentError;

pub type PromptVars = BTreeMap<String, String>;

pub fn vars<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> PromptVars {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Substitute `{name}` placeholders. `{{` and `}}` are literal braces; any
/// other brace is a template error. Values are inserted verbatim and never
/// re-scanned.
pub fn render(template_id: &str, template: &str, vars: &PromptVars) -> Result<String, AgentError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if matches!(chars.peek(), Some((_, '{'))) => {
                chars.next();
                out.push('{');
            }
            '}' if matches!(chars.peek(), Some((_, '}'))) => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let rest = &template[i + 1..];
                let end = rest
                    .find('}')
                    .ok_or_else(|| AgentError::MalformedTemplate {
                        template: template_id.into(),
                        detail: format!("unclosed brace at byte {i}"),
                    })?;
                let name = &rest[..end];
                let valid = !name.is_empty()
                    && name.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
                    && name
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
                if !valid {
                    return Err(AgentError::MalformedTemplate {
                        template: template_id.into(),
                        detail: format!("bad placeholder {{{name}}} at byte {i}"),
                    });
                }
                let value = vars
                    .get(name)
                    .ok_or_else(|| AgentError::UnboundPlaceholder {
                        template: template_id.into(),
                        name: name.into(),
                    })?;
                out.push_str(value);
                for _ in 0..=end {
                    chars.next();
                }
            }
            '}' => {
                return Err(AgentError::MalformedTemplate {
                    template: template_id.into(),
                    detail: format!("stray closing brace at byte {i}"),
                })
            }
            _ => out.push(c),
        }
    }
    Ok(out)
}

/// Placeholder names a template expects, in first-use order.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => i += 2,
            b'}' if bytes.get(i + 1) == Some(&b'}') => i += 2,
            b'{' => {
                if let Some(end) = template[i + 1..].find('}') {
                    let name = template[i + 1..i + 1 + end].to_string();
                    if !names.contains(&name) {
                        names.push(name);
                    }
                    i += end + 2;
                } else {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    names
}

/// Render one of the built-in templates by id.
pub fn render_prompt(template_id: &str, vars: &PromptVars) -> Result<String, AgentError> {
    let template = prompts::lookup(template_id)
        .ok_or_else(|| AgentError::UnknownTemplate(template_id.into()))?;
    render(template_id, template, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_and_escapes() {
        let out = render("t", "a {x} {{literal}} b", &vars([("x", "1")])).unwrap();
        assert_eq!(out, "a 1 {literal} b");
    }

    #[test]
    fn values_are_not_rescanned() {
        let out = render("t", "{x}", &vars([("x", "{y}")])).unwrap();
        assert_eq!(out, "{y}");
    }

    #[test]
    fn unbound_is_error() {
        assert_eq!(
            render("t", "tools: {tools}", &PromptVars::new()),
            Err(AgentError::UnboundPlaceholder {
                template: "t".into(),
                name: "tools".into()
            })
        );
    }

    #[test]
    fn stray_braces_rejected() {
        assert!(matches!(
            render("t", "{ \"a\": 1 }", &PromptVars::new()),
            Err(AgentError::MalformedTemplate { .. })
        ));
        assert!(matches!(
            render("t", "x }", &PromptVars::new()),
            Err(AgentError::MalformedTemplate { .. })
        ));
    }

    #[test]
    fn unknown_template() {
        assert_eq!(
            render_prompt("nope", &PromptVars::new()),
            Err(AgentError::UnknownTemplate("nope".into()))
        );
    }

    #[test]
    fn every_builtin_renders_with_its_placeholders() {
        for (id, text) in prompts::ALL {
            let names = placeholders(text);
            let bound: PromptVars = names
                .iter()
                .map(|n| (n.clone(), format!("<{n}>")))
                .collect();
            let out = render_prompt(id, &bound).unwrap_or_else(|e| panic!("{id}: {e}"));
            for n in &names {
                assert!(out.contains(&format!("<{n}>")), "{id} lost {n}");
            }
            let first_missing = PromptVars::new();
            if !names.is_empty() {
                assert!(render_prompt(id, &first_missing).is_err());
            }
        }
    }

    #[test]
    fn iterative_template_carries_chunk_id() {
        let names = placeholders(prompts::KG_ITERATIVE);
        let mut bound: PromptVars = names.iter().map(|n| (n.clone(), String::new())).collect();
        bound.insert("chunk_id".into(), "c1".into());
        let out = render_prompt("kg_iterative", &bound).unwrap();
        assert!(out.contains("Chunk ID: c1"));
        assert_eq!(out, render_prompt("kg_iterative", &bound).unwrap());
    }
}
