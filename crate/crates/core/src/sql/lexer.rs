//! Tokenizer for the extended-SQL dialect. Tracks exact line/column positions
//! so parse errors can point at the offending token.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Int(v) => v.to_string(),
            TokenKind::Float(v) => v.to_string(),
            TokenKind::Str(s) => format!("'{s}'"),
            TokenKind::Punct(p) => (*p).to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind.describe())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("lex error at line {line}, column {column}: {message}")]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, column);
        if c.is_whitespace() {
            advance!();
            continue;
        }
        // -- line comments
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance!();
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token { kind: TokenKind::Ident(word), line: tline, column: tcol });
            continue;
        }
        if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()))
        {
            let start = i;
            advance!();
            let mut is_float = false;
            while i < chars.len()
                && (chars[i].is_ascii_digit() || (chars[i] == '.' && !is_float))
            {
                // a dot must be followed by a digit to belong to the number
                if chars[i] == '.' {
                    if chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()) {
                        is_float = true;
                    } else {
                        break;
                    }
                }
                advance!();
            }
            let text: String = chars[start..i].iter().collect();
            let kind = if is_float {
                TokenKind::Float(text.parse().map_err(|_| LexError {
                    line: tline,
                    column: tcol,
                    message: format!("bad number `{text}`"),
                })?)
            } else {
                TokenKind::Int(text.parse().map_err(|_| LexError {
                    line: tline,
                    column: tcol,
                    message: format!("bad number `{text}`"),
                })?)
            };
            out.push(Token { kind, line: tline, column: tcol });
            continue;
        }
        if c == '\'' {
            advance!();
            let start = i;
            while i < chars.len() && chars[i] != '\'' {
                advance!();
            }
            if i >= chars.len() {
                return Err(LexError {
                    line: tline,
                    column: tcol,
                    message: "unterminated string literal".to_string(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            advance!(); // closing quote
            out.push(Token { kind: TokenKind::Str(s), line: tline, column: tcol });
            continue;
        }
        let two: Option<&'static str> = match (c, chars.get(i + 1)) {
            ('<', Some('=')) => Some("<="),
            ('>', Some('=')) => Some(">="),
            ('!', Some('=')) => Some("!="),
            ('<', Some('>')) => Some("<>"),
            ('-', Some('>')) => Some("->"),
            _ => None,
        };
        if let Some(p) = two {
            advance!();
            advance!();
            out.push(Token { kind: TokenKind::Punct(p), line: tline, column: tcol });
            continue;
        }
        let one: Option<&'static str> = match c {
            '(' => Some("("),
            ')' => Some(")"),
            ',' => Some(","),
            ';' => Some(";"),
            '.' => Some("."),
            '*' => Some("*"),
            '=' => Some("="),
            '<' => Some("<"),
            '>' => Some(">"),
            _ => None,
        };
        match one {
            Some(p) => {
                advance!();
                out.push(Token { kind: TokenKind::Punct(p), line: tline, column: tcol });
            }
            None => {
                return Err(LexError {
                    line: tline,
                    column: tcol,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token { kind: TokenKind::Eof, line, column });
    Ok(out)
}
