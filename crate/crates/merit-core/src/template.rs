//! `${name}` placeholder substitution for commands and dependent parameters.
//!
//! Expansion is single-pass and non-recursive: text substituted for a
//! placeholder is emitted literally and never rescanned. Only `${` opens a
//! placeholder; a bare `$` is ordinary text.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown placeholder `${{{0}}}`")]
    UnknownPlaceholder(String),
    #[error("malformed placeholder at byte {position}: {reason}")]
    Malformed { position: usize, reason: &'static str },
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn scan<F>(text: &str, mut on_placeholder: F) -> Result<(), TemplateError>
where
    F: FnMut(usize, &str, &str) -> Result<(), TemplateError>,
{
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut literal_start = 0;
    while i < bytes.len() {
        if bytes[i] == b'$' && i + 1 < bytes.len() && bytes[i + 1] == b'{' {
            let name_start = i + 2;
            let Some(rel_end) = text[name_start..].find('}') else {
                return Err(TemplateError::Malformed {
                    position: i,
                    reason: "unterminated `${`",
                });
            };
            let name = &text[name_start..name_start + rel_end];
            let mut chars = name.chars();
            let valid = match chars.next() {
                Some(first) => is_name_start(first) && chars.all(is_name_char),
                None => false,
            };
            if !valid {
                return Err(TemplateError::Malformed {
                    position: i,
                    reason: "placeholder name must match [A-Za-z_][A-Za-z0-9_]*",
                });
            }
            on_placeholder(literal_start, &text[literal_start..i], name)?;
            i = name_start + rel_end + 1;
            literal_start = i;
        } else {
            i += 1;
        }
    }
    on_placeholder(literal_start, &text[literal_start..], "")?;
    Ok(())
}

/// Replaces every `${name}` in `text` with `assignment[name]`.
///
/// Errors if a placeholder names a parameter absent from the assignment or
/// if a `${` is left unterminated.
pub fn render_template(
    text: &str,
    assignment: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    scan(text, |_, literal, name| {
        out.push_str(literal);
        if !name.is_empty() {
            match assignment.get(name) {
                Some(value) => out.push_str(value),
                None => return Err(TemplateError::UnknownPlaceholder(String::from(name))),
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Lists the placeholder names referenced by `text`, in order of appearance.
pub fn placeholders(text: &str) -> Result<Vec<String>, TemplateError> {
    let mut names = Vec::new();
    scan(text, |_, _, name| {
        if !name.is_empty() {
            names.push(String::from(name));
        }
        Ok(())
    })?;
    Ok(names)
}
