//! Statement tokenization, argument abstraction and parse validation.

mod abstraction;
mod parser;
mod token;

pub use abstraction::{
    abstract_arguments, reinsert_arguments, ArgumentEntry, ArgumentTable, PlaceholderKind,
    Reinsertion, UnbalancedBrackets, ARG, VAL,
};
pub use parser::{parse_statement, ParseError};
pub use token::{tokenize, TokenizeError, TokenizedStatement};

/// True iff the statement parses as the sole statement of a method body.
pub fn validate_statement(stmt: &TokenizedStatement) -> bool {
    match parse_statement(&stmt.tokens) {
        Ok(()) => true,
        Err(e) => {
            log::trace!("rejected statement {:?}: {}", stmt.joined(), e);
            false
        }
    }
}

/// Read a line written as space-separated tokens (corpus file format).
///
/// Splits on single spaces, re-joining the pieces of string and character
/// literals that themselves contain spaces. Tokens such as `<unk>` survive
/// unchanged, which the source tokenizer would split.
pub fn from_corpus_line(line: &str) -> TokenizedStatement {
    let mut tokens: Vec<String> = Vec::new();
    let mut open: Option<String> = None;
    for piece in line.split(' ') {
        if let Some(mut acc) = open.take() {
            acc.push(' ');
            acc.push_str(piece);
            if literal_closed(&acc) {
                tokens.push(acc);
            } else {
                open = Some(acc);
            }
            continue;
        }
        if piece.is_empty() {
            continue;
        }
        if (piece.starts_with('"') || piece.starts_with('\'')) && !literal_closed(piece) {
            open = Some(piece.to_string());
        } else {
            tokens.push(piece.to_string());
        }
    }
    if let Some(acc) = open {
        tokens.push(acc);
    }
    TokenizedStatement {
        raw: line.to_string(),
        tokens,
    }
}

fn literal_closed(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(quote) = chars.next() else {
        return false;
    };
    let mut escaped = false;
    let mut closed_at_end = false;
    for c in chars {
        if closed_at_end {
            return false;
        }
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            closed_at_end = true;
        }
    }
    closed_at_end
}
