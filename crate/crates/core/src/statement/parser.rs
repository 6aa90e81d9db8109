//! Recursive-descent recognizer for single Java statements.
//!
//! The accepted language is what a dummy method body can hold when the line
//! is its only statement: local variable declarations, expression
//! statements, jump statements and control-flow headers. An unclosed `{` at
//! the end of the line is completed with an empty body, and a leading `}`
//! may precede `else`, `catch`, `finally` or the `while` of a do loop.
//! Lambdas with block bodies, anonymous classes and local class
//! declarations are rejected.

use std::fmt;

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

const PRIMITIVE_TYPES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double"];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: &'static str,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at token {}", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

/// Shape of a parsed expression, as far as statement rules care.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Expr {
    Name,
    FieldAccess,
    ArrayAccess,
    Call,
    Creation,
    Assignment,
    IncDec,
    Lambda,
    Other,
}

impl Expr {
    fn is_assignable(self) -> bool {
        matches!(self, Expr::Name | Expr::FieldAccess | Expr::ArrayAccess)
    }

    fn is_statement_expression(self) -> bool {
        matches!(self, Expr::Call | Expr::Creation | Expr::Assignment | Expr::IncDec)
    }
}

#[derive(Debug, Clone)]
struct Lexeme {
    text: String,
    /// Set when this piece was split off a longer `>` operator and the next
    /// piece followed it without whitespace.
    glued: bool,
}

fn split_angles(tokens: &[String]) -> Vec<Lexeme> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let pieces: &[&str] = match tok.as_str() {
            ">>" => &[">", ">"],
            ">>>" => &[">", ">", ">"],
            ">>=" => &[">", ">="],
            ">>>=" => &[">", ">", ">="],
            _ => {
                out.push(Lexeme {
                    text: tok.clone(),
                    glued: false,
                });
                continue;
            }
        };
        for (k, p) in pieces.iter().enumerate() {
            out.push(Lexeme {
                text: p.to_string(),
                glued: k + 1 < pieces.len(),
            });
        }
    }
    out
}

pub(crate) fn is_identifier(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
        && !KEYWORDS.contains(&tok)
}

fn is_literal_token(tok: &str) -> bool {
    let first = match tok.chars().next() {
        Some(c) => c,
        None => return false,
    };
    first.is_ascii_digit()
        || (first == '.' && tok.len() > 1)
        || (first == '"' && tok.len() >= 2 && tok.ends_with('"'))
        || (first == '\'' && tok.len() >= 3 && tok.ends_with('\''))
        || matches!(tok, "true" | "false" | "null")
}

struct Parser {
    toks: Vec<Lexeme>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|l| l.text.as_str())
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.toks.get(self.pos + k).map(|l| l.text.as_str())
    }

    fn at(&self, s: &str) -> bool {
        self.peek() == Some(s)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn fail<T>(&self, message: &'static str) -> PResult<T> {
        Err(ParseError {
            position: self.pos,
            message,
        })
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str, message: &'static str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.fail(message)
        }
    }

    fn ident(&mut self) -> PResult<()> {
        match self.peek() {
            Some(t) if is_identifier(t) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail("expected identifier"),
        }
    }

    /// Run `f`, rewinding on failure.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let saved = self.pos;
        let r = f(self);
        if r.is_err() {
            self.pos = saved;
        }
        r
    }

    // ----- statements -----

    fn line(&mut self) -> PResult<()> {
        if self.eat("}") {
            match self.peek() {
                Some("else") => self.else_clause()?,
                Some("catch") | Some("finally") => self.handler_clauses()?,
                Some("while") => {
                    self.pos += 1;
                    self.par_expression()?;
                    self.expect(";", "expected ';' after do-while condition")?;
                }
                _ => return self.fail("unexpected tokens after '}'"),
            }
        } else if self.at("else") {
            self.else_clause()?;
        } else if self.at("catch") || self.at("finally") {
            self.handler_clauses()?;
        } else {
            self.statement()?;
        }
        if !self.at_end() {
            return self.fail("trailing tokens");
        }
        Ok(())
    }

    fn else_clause(&mut self) -> PResult<()> {
        self.expect("else", "expected 'else'")?;
        self.body()
    }

    fn handler_clauses(&mut self) -> PResult<()> {
        let mut any = false;
        while self.eat("catch") {
            any = true;
            self.expect("(", "expected '(' after catch")?;
            self.modifiers()?;
            self.class_type()?;
            while self.eat("|") {
                self.class_type()?;
            }
            self.ident()?;
            self.expect(")", "expected ')' in catch")?;
            self.block()?;
            if self.at_end() {
                return Ok(());
            }
        }
        if self.eat("finally") {
            any = true;
            self.block()?;
        }
        if any {
            Ok(())
        } else {
            self.fail("expected catch or finally")
        }
    }

    /// A `{ ... }` block whose closing brace may be elided at end of line.
    fn block(&mut self) -> PResult<()> {
        self.expect("{", "expected '{'")?;
        loop {
            if self.at_end() {
                return Ok(());
            }
            if self.eat("}") {
                return Ok(());
            }
            self.block_statement()?;
        }
    }

    /// Statement allowed inside a block: local declarations or statements.
    fn block_statement(&mut self) -> PResult<()> {
        if self.at("class") || self.at("interface") || self.at("enum") {
            return self.fail("local type declarations are not supported");
        }
        self.statement()
    }

    /// The body of a control statement; missing entirely is an error.
    fn body(&mut self) -> PResult<()> {
        if self.at_end() {
            return self.fail("missing statement body");
        }
        self.statement()
    }

    fn statement(&mut self) -> PResult<()> {
        let Some(tok) = self.peek() else {
            return self.fail("expected statement");
        };
        match tok {
            "{" => self.block(),
            ";" => {
                self.pos += 1;
                Ok(())
            }
            "if" => {
                self.pos += 1;
                self.par_expression()?;
                self.body()?;
                if self.at("else") {
                    self.else_clause()?;
                }
                Ok(())
            }
            "while" => {
                self.pos += 1;
                self.par_expression()?;
                self.body()
            }
            "do" => {
                self.pos += 1;
                self.body()?;
                if self.at_end() {
                    return Ok(());
                }
                self.expect("while", "expected 'while' after do body")?;
                self.par_expression()?;
                self.expect(";", "expected ';' after do-while")
            }
            "for" => {
                self.pos += 1;
                self.expect("(", "expected '(' after for")?;
                self.for_control()?;
                self.expect(")", "expected ')' after for control")?;
                self.body()
            }
            "switch" => {
                self.pos += 1;
                self.par_expression()?;
                self.expect("{", "expected '{' after switch")?;
                if self.at_end() {
                    return Ok(());
                }
                self.expect("}", "switch bodies must be elided")
            }
            "try" => {
                self.pos += 1;
                if self.eat("(") {
                    self.resources()?;
                }
                self.block()?;
                if self.at("catch") || self.at("finally") {
                    self.handler_clauses()?;
                }
                Ok(())
            }
            "synchronized" => {
                self.pos += 1;
                self.par_expression()?;
                self.block()
            }
            "return" => {
                self.pos += 1;
                if !self.at(";") {
                    self.expression()?;
                }
                self.expect(";", "expected ';' after return")
            }
            "throw" => {
                self.pos += 1;
                self.expression()?;
                self.expect(";", "expected ';' after throw")
            }
            "break" | "continue" => {
                self.pos += 1;
                if !self.at(";") {
                    self.ident()?;
                }
                self.expect(";", "expected ';'")
            }
            "assert" => {
                self.pos += 1;
                self.expression()?;
                if self.eat(":") {
                    self.expression()?;
                }
                self.expect(";", "expected ';' after assert")
            }
            "case" => {
                self.pos += 1;
                self.ternary()?;
                while self.eat(",") {
                    self.ternary()?;
                }
                self.expect(":", "expected ':' after case label")?;
                self.trailing_statements()
            }
            "default" => {
                self.pos += 1;
                self.expect(":", "expected ':' after default")?;
                self.trailing_statements()
            }
            "class" | "interface" | "enum" | "abstract" | "static" | "public" | "private" | "protected" => {
                self.fail("declarations other than local variables are not supported")
            }
            _ => {
                if self.peek_at(1) == Some(":") && is_identifier(tok) {
                    self.pos += 2;
                    return self.body();
                }
                if self
                    .attempt(|p| {
                        p.local_variable_declaration()?;
                        p.expect(";", "expected ';' after declaration")
                    })
                    .is_ok()
                {
                    return Ok(());
                }
                let kind = self.expression()?;
                if !kind.is_statement_expression() {
                    return self.fail("not a statement");
                }
                self.expect(";", "expected ';'")
            }
        }
    }

    fn trailing_statements(&mut self) -> PResult<()> {
        while !self.at_end() {
            self.statement()?;
        }
        Ok(())
    }

    fn resources(&mut self) -> PResult<()> {
        loop {
            if self.attempt(|p| p.local_variable_declaration()).is_err() {
                self.expression()?;
            }
            if self.eat(";") {
                if self.eat(")") {
                    return Ok(());
                }
                continue;
            }
            return self.expect(")", "expected ')' after resources");
        }
    }

    fn for_control(&mut self) -> PResult<()> {
        let enhanced = self.attempt(|p| {
            p.modifiers()?;
            p.type_()?;
            p.ident()?;
            p.expect(":", "expected ':'")?;
            p.expression()?;
            Ok(())
        });
        if enhanced.is_ok() {
            return Ok(());
        }
        if !self.at(";") && self.attempt(|p| p.local_variable_declaration()).is_err() {
            self.expression_list()?;
        }
        self.expect(";", "expected ';' in for")?;
        if !self.at(";") {
            self.expression()?;
        }
        self.expect(";", "expected ';' in for")?;
        if !self.at(")") {
            self.expression_list()?;
        }
        Ok(())
    }

    fn expression_list(&mut self) -> PResult<()> {
        loop {
            self.expression()?;
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn modifiers(&mut self) -> PResult<()> {
        loop {
            if self.eat("final") {
                continue;
            }
            if self.at("@") && self.peek_at(1).is_some_and(is_identifier) && self.peek_at(1) != Some("interface") {
                self.pos += 1;
                self.qualified_name()?;
                if self.eat("(") {
                    if !self.at(")") {
                        self.expression_list()?;
                    }
                    self.expect(")", "expected ')' after annotation")?;
                }
                continue;
            }
            return Ok(());
        }
    }

    fn qualified_name(&mut self) -> PResult<()> {
        self.ident()?;
        while self.at(".") && self.peek_at(1).is_some_and(is_identifier) {
            self.pos += 2;
        }
        Ok(())
    }

    fn local_variable_declaration(&mut self) -> PResult<()> {
        self.modifiers()?;
        self.type_()?;
        loop {
            self.ident()?;
            self.dims();
            if self.eat("=") {
                self.variable_initializer()?;
            }
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn variable_initializer(&mut self) -> PResult<()> {
        if self.at("{") {
            self.array_initializer()
        } else {
            self.expression().map(|_| ())
        }
    }

    fn array_initializer(&mut self) -> PResult<()> {
        self.expect("{", "expected '{'")?;
        if self.eat("}") {
            return Ok(());
        }
        loop {
            self.variable_initializer()?;
            if self.eat(",") {
                if self.eat("}") {
                    return Ok(());
                }
                continue;
            }
            return self.expect("}", "expected '}' after array initializer");
        }
    }

    fn dims(&mut self) -> usize {
        let mut n = 0;
        while self.at("[") && self.peek_at(1) == Some("]") {
            self.pos += 2;
            n += 1;
        }
        n
    }

    // ----- types -----

    fn type_(&mut self) -> PResult<()> {
        if self.peek().is_some_and(|t| PRIMITIVE_TYPES.contains(&t)) {
            self.pos += 1;
        } else {
            self.class_type()?;
        }
        self.dims();
        Ok(())
    }

    fn class_type(&mut self) -> PResult<()> {
        self.ident()?;
        if self.at("<") {
            self.type_arguments(false)?;
        }
        while self.at(".") && self.peek_at(1).is_some_and(is_identifier) {
            self.pos += 2;
            if self.at("<") {
                self.type_arguments(false)?;
            }
        }
        Ok(())
    }

    fn type_arguments(&mut self, allow_diamond: bool) -> PResult<()> {
        self.expect("<", "expected '<'")?;
        if self.eat(">") {
            return if allow_diamond {
                Ok(())
            } else {
                self.fail("diamond not allowed here")
            };
        }
        loop {
            if self.eat("?") {
                if self.eat("extends") || self.eat("super") {
                    self.reference_type()?;
                }
            } else {
                self.reference_type()?;
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(">", "expected '>'")
    }

    fn reference_type(&mut self) -> PResult<()> {
        if self.peek().is_some_and(|t| PRIMITIVE_TYPES.contains(&t)) {
            self.pos += 1;
            if self.dims() == 0 {
                return self.fail("primitive type argument");
            }
            return Ok(());
        }
        self.class_type()?;
        self.dims();
        Ok(())
    }

    // ----- expressions -----

    fn par_expression(&mut self) -> PResult<()> {
        self.expect("(", "expected '('")?;
        self.expression()?;
        self.expect(")", "expected ')'")
    }

    fn expression(&mut self) -> PResult<Expr> {
        if let Ok(()) = self.attempt(|p| p.lambda()) {
            return Ok(Expr::Lambda);
        }
        let lhs = self.ternary()?;
        if let Some(op) = self.peek() {
            if ASSIGN_OPS.contains(&op) {
                if !lhs.is_assignable() {
                    return self.fail("invalid assignment target");
                }
                self.pos += 1;
                if self.at("{") {
                    return self.fail("array initializer in assignment");
                }
                self.expression()?;
                return Ok(Expr::Assignment);
            }
            // `>` `>=` glued together is `>>=`, likewise for `>>>=`.
            if op == ">" && self.toks[self.pos].glued {
                let mut k = self.pos;
                while self.toks[k].text == ">" && self.toks[k].glued {
                    k += 1;
                }
                if self.toks[k].text == ">=" {
                    if !lhs.is_assignable() {
                        return self.fail("invalid assignment target");
                    }
                    self.pos = k + 1;
                    self.expression()?;
                    return Ok(Expr::Assignment);
                }
            }
        }
        Ok(lhs)
    }

    fn lambda(&mut self) -> PResult<()> {
        if self.peek().is_some_and(is_identifier) && self.peek_at(1) == Some("->") {
            self.pos += 2;
        } else {
            self.expect("(", "expected lambda parameters")?;
            if !self.eat(")") {
                loop {
                    let typed = self.attempt(|p| {
                        p.modifiers()?;
                        p.type_()?;
                        p.ident()
                    });
                    if typed.is_err() {
                        self.ident()?;
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(")", "expected ')' after lambda parameters")?;
            }
            self.expect("->", "expected '->'")?;
        }
        if self.at("{") {
            return self.fail("lambda block bodies are not supported");
        }
        self.expression().map(|_| ())
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if self.eat("?") {
            self.expression()?;
            self.expect(":", "expected ':' in conditional")?;
            if self.attempt(|p| p.lambda()).is_err() {
                self.ternary()?;
            }
            return Ok(Expr::Other);
        }
        Ok(cond)
    }

    /// Binary operator at the cursor: (precedence, token count).
    fn binary_op(&self) -> Option<(u8, usize)> {
        let tok = self.peek()?;
        let prec = match tok {
            "||" => 1,
            "&&" => 2,
            "|" => 3,
            "^" => 4,
            "&" => 5,
            "==" | "!=" => 6,
            "<" | "<=" | ">=" | "instanceof" => 7,
            ">" => {
                let lex = &self.toks[self.pos];
                if lex.glued {
                    let next = self.peek_at(1)?;
                    if next == ">" {
                        let third = &self.toks[self.pos + 1];
                        if third.glued {
                            return match self.peek_at(2) {
                                Some(">") => Some((8, 3)),
                                _ => None, // `>>>=` is assignment
                            };
                        }
                        return Some((8, 2));
                    }
                    return None; // `>>=` is assignment
                }
                7
            }
            "<<" => 8,
            "+" | "-" => 9,
            "*" | "/" | "%" => 10,
            _ => return None,
        };
        Some((prec, 1))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((prec, width)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            let is_instanceof = self.at("instanceof");
            self.pos += width;
            if is_instanceof {
                self.eat("final");
                self.type_()?;
                if self.peek().is_some_and(is_identifier) {
                    self.pos += 1;
                }
            } else {
                self.binary(prec + 1)?;
            }
            lhs = Expr::Other;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some("++") | Some("--") => {
                self.pos += 1;
                let e = self.unary()?;
                if !e.is_assignable() {
                    return self.fail("invalid increment target");
                }
                Ok(Expr::IncDec)
            }
            Some("+") | Some("-") => {
                self.pos += 1;
                self.unary()?;
                Ok(Expr::Other)
            }
            Some("!") | Some("~") => {
                self.pos += 1;
                self.unary()?;
                Ok(Expr::Other)
            }
            Some("(") => {
                if self.attempt(|p| p.cast()).is_ok() {
                    return Ok(Expr::Other);
                }
                self.postfix()
            }
            _ => self.postfix(),
        }
    }

    fn cast(&mut self) -> PResult<()> {
        self.expect("(", "expected '('")?;
        if self.peek().is_some_and(|t| PRIMITIVE_TYPES.contains(&t)) {
            self.pos += 1;
            let dims = self.dims();
            self.expect(")", "expected ')' after cast type")?;
            if dims == 0 {
                self.unary()?;
            } else {
                self.unary_not_plus_minus()?;
            }
            return Ok(());
        }
        self.reference_type()?;
        while self.eat("&") {
            self.class_type()?;
        }
        self.expect(")", "expected ')' after cast type")?;
        self.unary_not_plus_minus()
    }

    fn unary_not_plus_minus(&mut self) -> PResult<()> {
        match self.peek() {
            Some("+") | Some("-") | Some("++") | Some("--") => self.fail("ambiguous cast operand"),
            None => self.fail("missing cast operand"),
            _ => {
                if self.attempt(|p| p.lambda()).is_ok() {
                    return Ok(());
                }
                self.unary().map(|_| ())
            }
        }
    }

    fn arguments(&mut self) -> PResult<()> {
        self.expect("(", "expected '('")?;
        if self.eat(")") {
            return Ok(());
        }
        self.expression_list()?;
        self.expect(")", "expected ')' after arguments")
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut kind = self.primary()?;
        loop {
            match self.peek() {
                Some(".") => {
                    self.pos += 1;
                    match self.peek() {
                        Some("<") => {
                            self.type_arguments(false)?;
                            self.ident()?;
                            self.arguments()?;
                            kind = Expr::Call;
                        }
                        Some("class") | Some("this") => {
                            self.pos += 1;
                            kind = Expr::Other;
                        }
                        Some("new") => {
                            self.creator()?;
                            kind = Expr::Creation;
                        }
                        Some("super") => {
                            self.pos += 1;
                            if self.eat("::") {
                                self.ident()?;
                                kind = Expr::Other;
                            } else {
                                self.expect(".", "expected '.' after super")?;
                                self.ident()?;
                                if self.at("(") {
                                    self.arguments()?;
                                    kind = Expr::Call;
                                } else {
                                    kind = Expr::FieldAccess;
                                }
                            }
                        }
                        _ => {
                            self.ident()?;
                            if self.at("(") {
                                self.arguments()?;
                                kind = Expr::Call;
                            } else {
                                kind = Expr::FieldAccess;
                            }
                        }
                    }
                }
                Some("[") => {
                    if kind == Expr::Creation && self.peek_at(1) != Some("]") {
                        // `new int [ 2 ] [ 3 ]` dimensions were consumed by the creator.
                        return self.fail("index on array creation");
                    }
                    self.pos += 1;
                    self.expression()?;
                    self.expect("]", "expected ']'")?;
                    kind = Expr::ArrayAccess;
                }
                Some("::") => {
                    self.pos += 1;
                    if !self.eat("new") {
                        self.ident()?;
                    }
                    kind = Expr::Other;
                }
                Some("++") | Some("--") => {
                    if !kind.is_assignable() {
                        return self.fail("invalid increment target");
                    }
                    self.pos += 1;
                    kind = Expr::IncDec;
                }
                _ => return Ok(kind),
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek() else {
            return self.fail("expected expression");
        };
        if is_literal_token(tok) {
            self.pos += 1;
            return Ok(Expr::Other);
        }
        match tok {
            "(" => {
                self.pos += 1;
                self.expression()?;
                self.expect(")", "expected ')'")?;
                Ok(Expr::Other)
            }
            "this" => {
                self.pos += 1;
                if self.at("(") {
                    self.arguments()?;
                    return Ok(Expr::Call);
                }
                Ok(Expr::Name)
            }
            "super" => {
                self.pos += 1;
                if self.at("(") {
                    self.arguments()?;
                    return Ok(Expr::Call);
                }
                if self.eat("::") {
                    self.ident()?;
                    return Ok(Expr::Other);
                }
                self.expect(".", "expected '.' after super")?;
                self.ident()?;
                if self.at("(") {
                    self.arguments()?;
                    return Ok(Expr::Call);
                }
                Ok(Expr::FieldAccess)
            }
            "new" => {
                self.creator()?;
                Ok(Expr::Creation)
            }
            "void" => {
                self.pos += 1;
                self.expect(".", "expected '.class'")?;
                self.expect("class", "expected '.class'")?;
                Ok(Expr::Other)
            }
            t if PRIMITIVE_TYPES.contains(&t) => {
                self.pos += 1;
                self.dims();
                if self.eat("::") {
                    self.expect("new", "expected 'new'")?;
                    return Ok(Expr::Other);
                }
                self.expect(".", "expected '.class'")?;
                self.expect("class", "expected '.class'")?;
                Ok(Expr::Other)
            }
            t if is_identifier(t) => {
                self.pos += 1;
                if self.at("(") {
                    self.arguments()?;
                    return Ok(Expr::Call);
                }
                // `String [ ] . class` and `int [ ] :: new`
                if self.at("[") && self.peek_at(1) == Some("]") {
                    self.dims();
                    if self.eat("::") {
                        self.expect("new", "expected 'new'")?;
                        return Ok(Expr::Other);
                    }
                    self.expect(".", "expected '.class'")?;
                    self.expect("class", "expected '.class'")?;
                    return Ok(Expr::Other);
                }
                // Generic type before a method reference, e.g. `List < String > :: new`.
                if self.at("<") {
                    let saved = self.pos;
                    if self.type_arguments(false).is_ok() && self.at("::") {
                        return Ok(Expr::Name);
                    }
                    self.pos = saved;
                }
                Ok(Expr::Name)
            }
            _ => self.fail("expected expression"),
        }
    }

    fn creator(&mut self) -> PResult<()> {
        self.expect("new", "expected 'new'")?;
        if self.at("<") {
            self.type_arguments(false)?;
        }
        let primitive = self.peek().is_some_and(|t| PRIMITIVE_TYPES.contains(&t));
        if primitive {
            self.pos += 1;
        } else {
            self.ident()?;
            if self.at("<") {
                self.type_arguments(true)?;
            }
            while self.at(".") && self.peek_at(1).is_some_and(is_identifier) {
                self.pos += 2;
                if self.at("<") {
                    self.type_arguments(true)?;
                }
            }
        }
        if self.at("[") {
            if self.peek_at(1) == Some("]") {
                self.dims();
                return self.array_initializer();
            }
            while self.at("[") && self.peek_at(1) != Some("]") {
                self.pos += 1;
                self.expression()?;
                self.expect("]", "expected ']' in array creation")?;
            }
            self.dims();
            return Ok(());
        }
        if primitive {
            return self.fail("primitive creation needs dimensions");
        }
        self.arguments()?;
        if self.at("{") {
            return self.fail("anonymous classes are not supported");
        }
        Ok(())
    }
}

/// Parse a token sequence as a standalone statement.
pub fn parse_statement(tokens: &[String]) -> Result<(), ParseError> {
    if tokens.is_empty() {
        return Err(ParseError {
            position: 0,
            message: "empty statement",
        });
    }
    let mut parser = Parser {
        toks: split_angles(tokens),
        pos: 0,
    };
    parser.line()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(s: &str) -> bool {
        let toks: Vec<String> = s.split_whitespace().map(String::from).collect();
        parse_statement(&toks).is_ok()
    }

    #[test]
    fn declarations() {
        assert!(ok("long days = ( long ) uptime ;"));
        assert!(ok("long hours = ( long ) ( ( uptime - days ) * 24 ) ;"));
        assert!(ok("Set < String > knownRoles = new HashSet < > ( ) ;"));
        assert!(ok("List < ? > body = assertIsInstanceOf ( arg ) ;"));
        assert!(ok("Map < String , List < Integer >> m = new HashMap < > ( ) ;"));
        assert!(ok("final int [ ] a = { 1 , 2 , } , b ;"));
        assert!(ok("String [ ] [ ] grid = new String [ n ] [ ] ;"));
        assert!(ok("var x = foo ( ) ;"));
        assert!(!ok("Set < String > knownRoles = new HashSet < > ( )"));
        assert!(!ok("List < > x = y ;"));
    }

    #[test]
    fn expression_statements() {
        assert!(ok("commands [ 11 ] = this . passwordFile . toString ( ) ;"));
        assert!(ok("i ++ ;"));
        assert!(ok("-- i ;"));
        assert!(ok("x >>= 2 ;"));
        assert!(ok("x >>>= y >> 1 ;"));
        assert!(ok("a . b ( ) . < String > c ( d ) ;"));
        assert!(ok("super ( arg ) ;"));
        assert!(ok("new Foo ( ) ;"));
        assert!(ok("list . forEach ( x -> System . out . println ( x ) ) ;"));
        assert!(ok("r = ( a , b ) -> a + b ;"));
        assert!(ok("s = x instanceof String ? ( String ) x : \"\" ;"));
        assert!(ok("f = String [ ] :: new ;"));
        assert!(!ok("a + b ;"));
        assert!(!ok("( foo ( ) ) ;"));
        assert!(!ok("x ;"));
        assert!(!ok("1 = x ;"));
        assert!(!ok("foo ( ) ++ ;"));
    }

    #[test]
    fn rejected_constructs() {
        assert!(!ok("r = ( ) -> { run ( ) ; } ;"));
        assert!(!ok("Runnable r = new Runnable ( ) {"));
        assert!(!ok("class Local { }"));
        assert!(!ok("if ( x"));
        assert!(!ok("if ( x )"));
        assert!(!ok("foo ( a ,"));
        assert!(!ok("return x"));
        assert!(!ok("}"));
        assert!(!ok("x = <unk> ;"));
    }

    #[test]
    fn control_headers() {
        assert!(ok("if ( x != null ) {"));
        assert!(ok("if ( x ) return y ;"));
        assert!(ok("if ( x ) { y ( ) ; } else { z ( ) ; }"));
        assert!(ok("} else if ( a < b ) {"));
        assert!(ok("} catch ( IOException | RuntimeException e ) {"));
        assert!(ok("} finally {"));
        assert!(ok("for ( int i = 0 ; i < n ; i ++ ) {"));
        assert!(ok("for ( String s : names ) {"));
        assert!(ok("for ( ; ; ) {"));
        assert!(ok("while ( it . hasNext ( ) ) {"));
        assert!(ok("do {"));
        assert!(ok("} while ( x ) ;"));
        assert!(ok("switch ( kind ) {"));
        assert!(ok("try ( InputStream in = open ( ) ) {"));
        assert!(ok("synchronized ( lock ) {"));
        assert!(ok("case FOO :"));
        assert!(ok("default : return 0 ;"));
        assert!(ok("throw new IllegalStateException ( arg ) ;"));
        assert!(ok("break outer ;"));
        assert!(ok("return ;"));
        assert!(ok("assert x > 0 : \"neg\" ;"));
        assert!(ok("outer : for ( ; ; ) {"));
    }

    #[test]
    fn shift_versus_generics() {
        assert!(ok("int y = x >> 2 ;"));
        assert!(ok("int y = x >>> 2 ;"));
        assert!(ok("boolean b = a < c && d > e ;"));
        assert!(ok("List < List < String >> l = x ;"));
        assert!(ok("List < List < List < String >>> l = x ;"));
    }
}
