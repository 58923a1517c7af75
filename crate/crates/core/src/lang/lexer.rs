use crate::error::{MapError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    /// `?label`
    Null(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Slash,
    Colon,
    Arrow,
    Dot,
    Amp,
    Bar,
    Eq,
    Neq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(s) => format!("number {s}"),
            Tok::Null(s) => format!("null ?{s}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> MapError {
    MapError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Splits `text` into tokens. `//` and `#` start line comments.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |tok: Tok, out: &mut Vec<Token>| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(1, &mut i, &mut col);
            }
            push(Tok::Ident(s), &mut out);
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance(1, &mut i, &mut col);
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(syntax(line, col, format!("unexpected `{}` after number", chars[i])));
            }
            push(Tok::Num(s), &mut out);
            continue;
        }
        if c == '"' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(syntax(start_line, start_col, "unterminated string")),
                    Some('"') => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some(&e @ ('"' | '\\')) => {
                            s.push(e);
                            advance(2, &mut i, &mut col);
                        }
                        _ => return Err(syntax(line, col, "invalid escape in string")),
                    },
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            push(Tok::Str(s), &mut out);
            continue;
        }
        if c == '?' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(1, &mut i, &mut col);
            }
            if s.is_empty() {
                return Err(syntax(start_line, start_col, "expected a null label after `?`"));
            }
            push(Tok::Null(s), &mut out);
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, n) = match (c, two.as_str()) {
            (_, "->") => (Tok::Arrow, 2),
            (_, "!=") => (Tok::Neq, 2),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            ('/', _) => (Tok::Slash, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            ('&', _) => (Tok::Amp, 1),
            ('|', _) => (Tok::Bar, 1),
            ('=', _) => (Tok::Eq, 1),
            _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
        };
        advance(n, &mut i, &mut col);
        push(tok, &mut out);
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("S(x, \"a b\") -> ?n1 != 07 // c\n&").unwrap();
        let kinds: Vec<Tok> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("S".into()),
                Tok::LParen,
                Tok::Ident("x".into()),
                Tok::Comma,
                Tok::Str("a b".into()),
                Tok::RParen,
                Tok::Arrow,
                Tok::Null("n1".into()),
                Tok::Neq,
                Tok::Num("07".into()),
                Tok::Amp,
                Tok::Eof
            ]
        );
        assert_eq!((toks[10].line, toks[10].column), (2, 1));
    }

    #[test]
    fn bad_character() {
        assert!(matches!(
            tokenize("S(x) $"),
            Err(MapError::Syntax { line: 1, column: 6, .. })
        ));
    }
}
