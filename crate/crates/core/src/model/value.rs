use std::fmt;
use std::sync::Arc;

/// A domain element: either a constant or a labeled null.
///
/// Constants and nulls live in disjoint namespaces, so `Const("1")` and
/// `Null("1")` are different values. Ordering puts every constant before
/// every null, then compares labels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Const(Arc<str>),
    Null(Arc<str>),
}

impl Value {
    pub fn constant(label: impl AsRef<str>) -> Self {
        Value::Const(Arc::from(label.as_ref()))
    }

    pub fn null(label: impl AsRef<str>) -> Self {
        Value::Null(Arc::from(label.as_ref()))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Value::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null(_))
    }

    pub fn label(&self) -> &str {
        match self {
            Value::Const(l) | Value::Null(l) => l,
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Renders constants as bare numerals when possible and quoted strings
/// otherwise; nulls render as `?label`. This is the form accepted inside
/// dependency bodies.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(l) if is_numeral(l) => f.write_str(l),
            Value::Const(l) => f.write_str(&quote(l)),
            Value::Null(l) => write!(f, "?{l}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Instance-file rendering: bare identifiers are also accepted as constants there.
pub(crate) struct FactValue<'a>(pub &'a Value);

impl fmt::Display for FactValue<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Value::Const(l) if is_identifier(l) && !is_keyword(l) => f.write_str(l),
            v => write!(f, "{v}"),
        }
    }
}

pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "schema" | "map" | "functions" | "exists" | "instance" | "over" | "query" | "false" | "semantics"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_nulls_are_disjoint() {
        assert_ne!(Value::constant("1"), Value::null("1"));
        assert!(Value::constant("z") < Value::null("a"));
    }

    #[test]
    fn display_forms() {
        assert_eq!(Value::constant("075").to_string(), "075");
        assert_eq!(Value::constant("Chris").to_string(), "\"Chris\"");
        assert_eq!(FactValue(&Value::constant("Chris")).to_string(), "Chris");
        assert_eq!(FactValue(&Value::constant("a b")).to_string(), "\"a b\"");
        assert_eq!(Value::null("n1").to_string(), "?n1");
    }
}
