//! `{{key}}` substitution. Keys may contain spaces and `+`
//! (`{{common_high + private}}`); values are inserted verbatim and never
//! rescanned.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unbound placeholder(s): {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
}

pub type Vars = BTreeMap<String, String>;

/// Placeholder names in order of appearance.
pub fn placeholders(template: &str) -> Result<Vec<String>, TemplateError> {
    let mut out = Vec::new();
    scan(template, |piece| {
        if let Piece::Key(k) = piece {
            out.push(k.to_string());
        }
    })?;
    Ok(out)
}

pub fn render(template: &str, vars: &Vars) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut missing: Vec<String> = Vec::new();
    scan(template, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Key(k) => match vars.get(k) {
            Some(v) => out.push_str(v),
            None => {
                if !missing.iter().any(|m| m == k) {
                    missing.push(k.to_string());
                }
            }
        },
    })?;
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(TemplateError::Unbound(missing))
    }
}

enum Piece<'a> {
    Text(&'a str),
    Key(&'a str),
}

fn scan<'a>(template: &'a str, mut f: impl FnMut(Piece<'a>)) -> Result<(), TemplateError> {
    let mut rest = template;
    let mut offset = 0;
    while let Some(open) = rest.find("{{") {
        f(Piece::Text(&rest[..open]));
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(TemplateError::Unterminated(offset + open))?;
        f(Piece::Key(after[..close].trim()));
        let consumed = open + 2 + close + 2;
        offset += consumed;
        rest = &rest[consumed..];
    }
    f(Piece::Text(rest));
    Ok(())
}

/// Builds a [`Vars`] map from pairs.
pub fn vars<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Vars {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_and_reports_unbound() {
        let v = vars([("private", "99"), ("common_high + private", "40")]);
        assert_eq!(render("$0 and ${{private}}, max {{common_high + private}}", &v).unwrap(), "$0 and $99, max 40");
        assert_eq!(
            render("{{a}} {{private}} {{b}} {{a}}", &v),
            Err(TemplateError::Unbound(vec!["a".into(), "b".into()]))
        );
        assert_eq!(render("x {{oops", &v), Err(TemplateError::Unterminated(2)));
    }

    #[test]
    fn values_are_not_rescanned() {
        let v = vars([("plan", "{{private}}")]);
        assert_eq!(render("P: {{plan}}", &v).unwrap(), "P: {{private}}");
    }

    #[test]
    fn lists_placeholders() {
        assert_eq!(placeholders("{{n}} and {{ currency symbol }}").unwrap(), vec!["n", "currency symbol"]);
    }
}
