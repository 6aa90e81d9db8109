//! Argument abstraction and reinsertion.
//!
//! Non-empty method-call argument lists collapse to the placeholder `arg`,
//! non-empty array index expressions to `val`. A single literal used as an
//! array index is kept verbatim so that constant edits such as `[ 10 ]` to
//! `[ 11 ]` remain learnable.

use super::token::TokenizedStatement;
use serde::{Deserialize, Serialize};

pub const ARG: &str = "arg";
pub const VAL: &str = "val";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceholderKind {
    Arg,
    Val,
}

impl PlaceholderKind {
    pub fn token(self) -> &'static str {
        match self {
            PlaceholderKind::Arg => ARG,
            PlaceholderKind::Val => VAL,
        }
    }

    fn brackets(self) -> (&'static str, &'static str) {
        match self {
            PlaceholderKind::Arg => ("(", ")"),
            PlaceholderKind::Val => ("[", "]"),
        }
    }
}

/// One abstracted argument list or index expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgumentEntry {
    /// Position of the call or array access among the abstracted sites, left to right.
    pub call_index: usize,
    pub kind: PlaceholderKind,
    /// Method (or array) name directly before the bracket; empty when the
    /// bracket follows an expression such as `)` or `]`.
    pub callee: String,
    /// Verbatim contents between the brackets.
    pub contents: Vec<String>,
}

impl ArgumentEntry {
    pub fn original_text(&self) -> String {
        self.contents.join(" ")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgumentTable {
    pub entries: Vec<ArgumentEntry>,
}

impl ArgumentTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn callee_names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.callee.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unbalanced brackets at token {0}")]
pub struct UnbalancedBrackets(pub usize);

// Keywords that may directly precede `(` without forming a call.
const NON_CALL_KEYWORDS: &[&str] = &[
    "if", "while", "for", "switch", "catch", "synchronized", "return", "throw", "case", "assert",
    "try", "else", "do", "new", "instanceof", "yield",
];

const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

fn is_identifier(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

pub(crate) fn is_literal(tok: &str) -> bool {
    let first = tok.chars().next().unwrap_or(' ');
    first.is_ascii_digit()
        || first == '"'
        || first == '\''
        || (first == '.' && tok.len() > 1)
        || matches!(tok, "true" | "false" | "null")
}

/// Whether the `(` at `open` starts a call argument list.
fn is_call_paren(tokens: &[String], open: usize) -> bool {
    open > 0 && {
        let prev = tokens[open - 1].as_str();
        is_identifier(prev)
            && !NON_CALL_KEYWORDS.contains(&prev)
            && !PRIMITIVES.contains(&prev)
            && !is_literal(prev)
    }
}

/// Whether the `[` at `open` is an index (or dimension) expression.
fn is_index_bracket(tokens: &[String], open: usize) -> bool {
    open > 0 && {
        let prev = tokens[open - 1].as_str();
        (is_identifier(prev) && !is_literal(prev)) || prev == ")" || prev == "]"
    }
}

fn matching_close(tokens: &[String], open: usize) -> Result<usize, UnbalancedBrackets> {
    let mut stack: Vec<&str> = Vec::new();
    for (i, tok) in tokens.iter().enumerate().skip(open) {
        match tok.as_str() {
            "(" | "[" | "{" => stack.push(tok.as_str()),
            ")" | "]" | "}" => {
                let expected = match tok.as_str() {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                if stack.pop() != Some(expected) {
                    return Err(UnbalancedBrackets(i));
                }
                if stack.is_empty() {
                    return Ok(i);
                }
            }
            _ => {}
        }
    }
    Err(UnbalancedBrackets(open))
}

fn check_balanced(tokens: &[String]) -> Result<(), UnbalancedBrackets> {
    let mut stack = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        match tok.as_str() {
            "(" | "[" | "{" => stack.push(tok.as_str()),
            ")" | "]" | "}" => {
                let expected = match tok.as_str() {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                // A leading `}` (as in `} else {`) closes a block outside the line.
                match stack.pop() {
                    Some(open) if open == expected => {}
                    None if tok == "}" => {}
                    _ => return Err(UnbalancedBrackets(i)),
                }
            }
            _ => {}
        }
    }
    // Unclosed `{` is legal for block headers such as `if ( x ) {`.
    if stack.iter().any(|open| *open != "{") {
        return Err(UnbalancedBrackets(tokens.len()));
    }
    Ok(())
}

/// Replace argument lists and index expressions with placeholders.
pub fn abstract_arguments(
    stmt: &TokenizedStatement,
) -> Result<(TokenizedStatement, ArgumentTable), UnbalancedBrackets> {
    let tokens = &stmt.tokens;
    check_balanced(tokens)?;
    let mut out = Vec::with_capacity(tokens.len());
    let mut table = ArgumentTable::default();
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i].as_str();
        let kind = match tok {
            "(" if is_call_paren(tokens, i) => Some(PlaceholderKind::Arg),
            "[" if is_index_bracket(tokens, i) => Some(PlaceholderKind::Val),
            _ => None,
        };
        if let Some(kind) = kind {
            let close = matching_close(tokens, i)?;
            let contents = &tokens[i + 1..close];
            let keep = contents.is_empty()
                || (kind == PlaceholderKind::Val && contents.len() == 1 && is_literal(&contents[0]));
            if !keep {
                let callee = tokens[i - 1].clone();
                table.entries.push(ArgumentEntry {
                    call_index: table.entries.len(),
                    kind,
                    callee: if is_identifier(&callee) { callee } else { String::new() },
                    contents: contents.to_vec(),
                });
                let (l, r) = kind.brackets();
                out.push(l.to_string());
                out.push(kind.token().to_string());
                out.push(r.to_string());
                i = close + 1;
                continue;
            }
        }
        out.push(tok.to_string());
        i += 1;
    }
    Ok((
        TokenizedStatement {
            raw: out.join(" "),
            tokens: out,
        },
        table,
    ))
}

/// A placeholder site in a generated statement.
#[derive(Debug, Clone)]
struct Site {
    position: usize,
    kind: PlaceholderKind,
    callee: String,
}

fn placeholder_sites(tokens: &[String]) -> Vec<Site> {
    let mut sites = Vec::new();
    for i in 1..tokens.len().saturating_sub(1) {
        let kind = match (tokens[i - 1].as_str(), tokens[i].as_str(), tokens[i + 1].as_str()) {
            ("(", ARG, ")") => PlaceholderKind::Arg,
            ("[", VAL, "]") => PlaceholderKind::Val,
            _ => continue,
        };
        let callee = if i >= 2 && is_identifier(&tokens[i - 2]) {
            tokens[i - 2].clone()
        } else {
            String::new()
        };
        sites.push(Site {
            position: i,
            kind,
            callee,
        });
    }
    sites
}

/// Outcome of filling placeholders in a generated statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reinsertion {
    pub statement: TokenizedStatement,
    /// Placeholders that received contents from the query.
    pub filled: usize,
    /// Placeholders left empty because no candidate remained.
    pub emptied: usize,
}

/// Fill `arg`/`val` placeholders in `generated` from the query's table.
///
/// Name matches are assigned first (unused entries before reuse of an
/// already assigned one), then remaining placeholders take the unused
/// entries of the same kind in left-to-right order. Whatever is left gets an
/// empty bracket pair.
pub fn reinsert_arguments(generated: &TokenizedStatement, query_args: &ArgumentTable) -> Reinsertion {
    let sites = placeholder_sites(&generated.tokens);
    let mut used = vec![false; query_args.entries.len()];
    let mut assignment: Vec<Option<usize>> = vec![None; sites.len()];

    for (s, site) in sites.iter().enumerate() {
        if site.callee.is_empty() {
            continue;
        }
        let same_name = |e: &&ArgumentEntry| e.kind == site.kind && e.callee == site.callee;
        let unused = query_args
            .entries
            .iter()
            .enumerate()
            .find(|(k, e)| !used[*k] && same_name(e));
        let pick = unused
            .or_else(|| query_args.entries.iter().enumerate().find(|(_, e)| same_name(e)))
            .map(|(k, _)| k);
        if let Some(k) = pick {
            used[k] = true;
            assignment[s] = Some(k);
        }
    }
    for (s, site) in sites.iter().enumerate() {
        if assignment[s].is_some() {
            continue;
        }
        if let Some(k) = (0..query_args.entries.len())
            .find(|&k| !used[k] && query_args.entries[k].kind == site.kind)
        {
            used[k] = true;
            assignment[s] = Some(k);
        }
    }

    let mut out = Vec::with_capacity(generated.tokens.len());
    let mut filled = 0;
    let mut emptied = 0;
    let mut next_site = 0;
    for (i, tok) in generated.tokens.iter().enumerate() {
        if next_site < sites.len() && sites[next_site].position == i {
            match assignment[next_site] {
                Some(k) => {
                    out.extend(query_args.entries[k].contents.iter().cloned());
                    filled += 1;
                }
                None => emptied += 1,
            }
            next_site += 1;
            continue;
        }
        out.push(tok.clone());
    }
    Reinsertion {
        statement: TokenizedStatement {
            raw: out.join(" "),
            tokens: out,
        },
        filled,
        emptied,
    }
}
