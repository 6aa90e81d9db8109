//! Tokenizer for single Java source lines.
//!
//! Identifiers, keywords and literals become single tokens; operators are
//! matched by maximal munch over the Java operator set, except that `<` is
//! never fused with a following `>` so that generic brackets stay separate.
//! String and character literals are kept whole, quotes included.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A statement split into tokens, together with the line it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedStatement {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl TokenizedStatement {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
        let raw = tokens.join(" ");
        Self { tokens, raw }
    }

    /// Canonical serialized form: tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for TokenizedStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("unterminated string literal at column {0}")]
    UnterminatedString(usize),
    #[error("unterminated character literal at column {0}")]
    UnterminatedChar(usize),
    #[error("unterminated block comment at column {0}")]
    UnterminatedComment(usize),
    #[error("unexpected character {1:?} at column {0}")]
    UnexpectedChar(usize, char),
}

// Longest first so that a linear scan implements maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

const SINGLE_PUNCT: &str = "(){}[];,.@=><!~?:+-*/&|^%";

/// Split one physical source line into tokens.
///
/// Line comments and inline block comments are stripped. An empty result is
/// not an error here; callers apply their own minimum-length filters.
pub fn tokenize(raw: &str) -> Result<TokenizedStatement, TokenizeError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            break;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(TokenizeError::UnterminatedComment(start));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_part(chars[i]) {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let end = scan_number(&chars, i);
            tokens.push(chars[i..end].iter().collect());
            i = end;
            continue;
        }
        if c == '"' || c == '\'' {
            let end = scan_quoted(&chars, i)?;
            tokens.push(chars[i..end].iter().collect());
            i = end;
            continue;
        }
        if let Some(op) = match_operator(&chars[i..]) {
            tokens.push(op.to_string());
            i += op.chars().count();
            continue;
        }
        if SINGLE_PUNCT.contains(c) {
            tokens.push(c.to_string());
            i += 1;
            continue;
        }
        return Err(TokenizeError::UnexpectedChar(i, c));
    }
    Ok(TokenizedStatement {
        tokens,
        raw: raw.to_string(),
    })
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn match_operator(rest: &[char]) -> Option<&'static str> {
    OPERATORS.iter().copied().find(|op| {
        let n = op.chars().count();
        rest.len() >= n && op.chars().zip(rest).all(|(a, b)| a == *b)
    })
}

fn scan_number(chars: &[char], start: usize) -> usize {
    let mut i = start;
    let at = |k: usize| chars.get(k).copied().unwrap_or('\0');
    if at(i) == '0' && matches!(at(i + 1), 'x' | 'X' | 'b' | 'B') {
        i += 2;
        while at(i).is_ascii_hexdigit() || at(i) == '_' {
            i += 1;
        }
        if matches!(at(i), 'l' | 'L') {
            i += 1;
        }
        return i;
    }
    while at(i).is_ascii_digit() || at(i) == '_' {
        i += 1;
    }
    if at(i) == '.' && at(i + 1).is_ascii_digit() {
        i += 1;
        while at(i).is_ascii_digit() || at(i) == '_' {
            i += 1;
        }
    } else if at(i) == '.' && !is_ident_start(at(i + 1)) && at(i + 1) != '.' {
        // `1.` is a valid double literal
        i += 1;
    }
    if matches!(at(i), 'e' | 'E') {
        let mut j = i + 1;
        if matches!(at(j), '+' | '-') {
            j += 1;
        }
        if at(j).is_ascii_digit() {
            i = j;
            while at(i).is_ascii_digit() {
                i += 1;
            }
        }
    }
    if matches!(at(i), 'l' | 'L' | 'f' | 'F' | 'd' | 'D') {
        i += 1;
    }
    i
}

fn scan_quoted(chars: &[char], start: usize) -> Result<usize, TokenizeError> {
    let quote = chars[start];
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            c if c == quote => return Ok(i + 1),
            _ => i += 1,
        }
    }
    Err(if quote == '"' {
        TokenizeError::UnterminatedString(start)
    } else {
        TokenizeError::UnterminatedChar(start)
    })
}
