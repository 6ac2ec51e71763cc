//! Recursive-descent parser for the supported Python subset.
//!
//! Statements the grammar does not cover are not errors: the parser skips the
//! offending logical line (plus its indented suite, if any) and records it as
//! [`Stmt::Opaque`] carrying every identifier it saw. Only tokenizer failures
//! make a whole cell unparseable.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Alias, Expr, Generator, Handler, Param, Pos, Stmt};
use super::lexer::{tokenize, LexError, Token, TokenKind};

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

/// Keywords only at the start of a statement; ordinary names elsewhere.
const SOFT_KEYWORDS: &[&str] = &["match", "case", "type"];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { line: e.line, message: e.message.to_string() }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a module (one notebook cell after magic stripping).
pub fn parse_module(src: &str) -> PResult<Vec<Stmt>> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    loop {
        match p.kind() {
            TokenKind::End => break,
            TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent => p.pos += 1,
            _ => body.extend(p.statement_or_opaque()),
        }
    }
    Ok(body)
}

/// Parses a single expression, used for f-string fields.
pub fn parse_expression(src: &str) -> PResult<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.testlist_star_expr()?;
    if !matches!(p.kind(), TokenKind::Newline | TokenKind::End) {
        return Err(p.error("trailing tokens in expression"));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn tok(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn kind(&self) -> &TokenKind {
        &self.tok().kind
    }

    fn peek_kind(&self, off: usize) -> &TokenKind {
        &self.tokens[(self.pos + off).min(self.tokens.len() - 1)].kind
    }

    fn at_op(&self, op: &str) -> bool {
        self.tok().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.tok().is_name(kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError {
            line: self.tok().line,
            message: alloc::format!("{message} (found `{}`)", self.kind()),
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{op}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.kind() {
            TokenKind::Name(n) if !is_keyword(n) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn at_newline(&self) -> bool {
        matches!(self.kind(), TokenKind::Newline | TokenKind::End)
    }

    // ---- statements -------------------------------------------------------

    fn statement_or_opaque(&mut self) -> Vec<Stmt> {
        let start = self.pos;
        match self.statement() {
            Ok(stmts) => stmts,
            Err(_) => {
                self.pos = start;
                alloc::vec![self.recover()]
            }
        }
    }

    /// Skips the current logical line, and the suite below it when the line
    /// ends in `:`, collecting identifiers.
    fn recover(&mut self) -> Stmt {
        let mut names = Vec::new();
        let mut prev_dot = false;
        let mut prev_colon = false;
        let mut consumed = false;
        let mut line_start = true;
        loop {
            match self.kind().clone() {
                TokenKind::End => break,
                TokenKind::Newline => {
                    self.pos += 1;
                    consumed = true;
                    break;
                }
                kind => {
                    if let TokenKind::Name(n) = &kind {
                        let soft = line_start && SOFT_KEYWORDS.contains(&n.as_str());
                        if !prev_dot && !soft && !is_keyword(n) && !names.contains(n) {
                            names.push(n.clone());
                        }
                    }
                    line_start = false;
                    prev_dot = matches!(kind, TokenKind::Op("."));
                    prev_colon = matches!(kind, TokenKind::Op(":"));
                    self.pos += 1;
                    consumed = true;
                }
            }
        }
        if prev_colon && matches!(self.kind(), TokenKind::Indent) {
            let mut depth = 0usize;
            prev_dot = false;
            loop {
                let kind = self.kind().clone();
                match &kind {
                    TokenKind::End => break,
                    TokenKind::Indent => depth += 1,
                    TokenKind::Dedent => {
                        depth -= 1;
                        if depth == 0 {
                            self.pos += 1;
                            break;
                        }
                    }
                    TokenKind::Name(n) => {
                        let soft = line_start && SOFT_KEYWORDS.contains(&n.as_str());
                        if !prev_dot && !soft && !is_keyword(n) && !names.contains(n) {
                            names.push(n.clone());
                        }
                    }
                    _ => {}
                }
                line_start = matches!(kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent);
                prev_dot = self.at_op(".");
                self.pos += 1;
            }
        }
        if !consumed && !matches!(self.kind(), TokenKind::End) {
            self.pos += 1;
        }
        Stmt::Opaque(names)
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        if self.at_op("@") {
            let mut decorators = Vec::new();
            while self.eat_op("@") {
                decorators.push(self.namedexpr_test()?);
                self.expect_newline()?;
            }
            self.eat_kw("async");
            return Ok(alloc::vec![match self.kind() {
                TokenKind::Name(n) if n == "def" => self.funcdef(decorators)?,
                TokenKind::Name(n) if n == "class" => self.classdef(decorators)?,
                _ => return Err(self.error("expected def or class after decorator")),
            }]);
        }
        if self.at_kw("async")
            && matches!(self.peek_kind(1), TokenKind::Name(n) if n == "def" || n == "for" || n == "with")
        {
            self.pos += 1;
        }
        let stmt = match self.kind() {
            TokenKind::Name(n) => match n.as_str() {
                "def" => self.funcdef(Vec::new())?,
                "class" => self.classdef(Vec::new())?,
                "if" => self.if_stmt()?,
                "for" => self.for_stmt()?,
                "while" => self.while_stmt()?,
                "with" => self.with_stmt()?,
                "try" => self.try_stmt()?,
                _ => return self.simple_stmts(),
            },
            _ => return self.simple_stmts(),
        };
        Ok(alloc::vec![stmt])
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.kind() {
            TokenKind::Newline => {
                self.pos += 1;
                Ok(())
            }
            TokenKind::End => Ok(()),
            _ => Err(self.error("expected end of line")),
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if !matches!(self.kind(), TokenKind::Newline) {
            return self.simple_stmts();
        }
        self.pos += 1;
        if !matches!(self.kind(), TokenKind::Indent) {
            return Err(self.error("expected an indented block"));
        }
        self.pos += 1;
        let mut body = Vec::new();
        loop {
            match self.kind() {
                TokenKind::Dedent => {
                    self.pos += 1;
                    break;
                }
                TokenKind::End => break,
                TokenKind::Newline => self.pos += 1,
                TokenKind::Indent => return Err(self.error("unexpected indent")),
                _ => body.extend(self.statement_or_opaque()),
            }
        }
        Ok(body)
    }

    fn funcdef(&mut self, decorators: Vec<Expr>) -> PResult<Stmt> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let params = self.params(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") { Some(self.test()?) } else { None };
        let body = self.block()?;
        Ok(Stmt::FunctionDef { name, decorators, params, returns, body })
    }

    /// Parameter list up to (not including) `close`.
    fn params(&mut self, close: &str, annotated: bool) -> PResult<Vec<Param>> {
        let mut params = Vec::new();
        while !self.at_op(close) {
            if self.eat_op("/") {
            } else if self.eat_op("*") || self.eat_op("**") {
                if matches!(self.kind(), TokenKind::Name(_)) {
                    let name = self.ident()?;
                    let annotation = if annotated && self.eat_op(":") { Some(self.test()?) } else { None };
                    params.push(Param { name, default: None, annotation });
                }
            } else {
                let name = self.ident()?;
                let annotation = if annotated && self.eat_op(":") { Some(self.test()?) } else { None };
                let default = if self.eat_op("=") { Some(self.test()?) } else { None };
                params.push(Param { name, default, annotation });
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn classdef(&mut self, decorators: Vec<Expr>) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        let mut bases = Vec::new();
        if self.eat_op("(") {
            let (args, keywords) = self.arglist()?;
            bases.extend(args);
            bases.extend(keywords);
            self.expect_op(")")?;
        }
        let body = self.block()?;
        Ok(Stmt::ClassDef { name, decorators, bases, body })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        // Called on `if` or `elif`.
        self.pos += 1;
        let test = self.namedexpr_test()?;
        let body = self.block()?;
        let orelse = if self.at_kw("elif") {
            alloc::vec![self.if_stmt()?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::If { test, body, orelse })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.exprlist()?;
        self.expect_kw("in")?;
        let iter = self.testlist_star_expr()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        Ok(Stmt::For { target, iter, body, orelse })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        self.expect_kw("while")?;
        let test = self.namedexpr_test()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        Ok(Stmt::While { test, body, orelse })
    }

    fn with_stmt(&mut self) -> PResult<Stmt> {
        self.expect_kw("with")?;
        let mut items = Vec::new();
        loop {
            let ctx = self.test()?;
            let target = if self.eat_kw("as") { Some(self.expr()?) } else { None };
            items.push((ctx, target));
            if !self.eat_op(",") {
                break;
            }
        }
        let body = self.block()?;
        Ok(Stmt::With { items, body })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        self.expect_kw("try")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.eat_kw("except") {
            self.eat_op("*");
            let mut kind = None;
            let mut name = None;
            if !self.at_op(":") {
                kind = Some(self.test()?);
                if self.eat_kw("as") {
                    name = Some(self.ident()?);
                }
            }
            let body = self.block()?;
            handlers.push(Handler { kind, name, body });
        }
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        let finalbody = if self.eat_kw("finally") { self.block()? } else { Vec::new() };
        if handlers.is_empty() && finalbody.is_empty() {
            return Err(self.error("try without except or finally"));
        }
        Ok(Stmt::Try { body, handlers, orelse, finalbody })
    }

    fn simple_stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        loop {
            let mut stmt = self.small_stmt()?;
            if self.eat_op(";") {
                if self.at_newline() {
                    if let Stmt::Expr { suppressed, .. } = &mut stmt {
                        *suppressed = true;
                    }
                    stmts.push(stmt);
                    break;
                }
                stmts.push(stmt);
                continue;
            }
            stmts.push(stmt);
            break;
        }
        self.expect_newline()?;
        Ok(stmts)
    }

    fn small_stmt(&mut self) -> PResult<Stmt> {
        let TokenKind::Name(word) = self.kind().clone() else {
            return self.expr_stmt();
        };
        match word.as_str() {
            "pass" | "break" | "continue" => {
                self.pos += 1;
                Ok(Stmt::Pass)
            }
            "return" => {
                self.pos += 1;
                if self.at_newline() || self.at_op(";") {
                    Ok(Stmt::Return(None))
                } else {
                    Ok(Stmt::Return(Some(self.testlist_star_expr()?)))
                }
            }
            "del" => {
                self.pos += 1;
                let target = self.exprlist()?;
                Ok(Stmt::Delete(match target {
                    Expr::Tuple(items) => items,
                    other => alloc::vec![other],
                }))
            }
            "global" | "nonlocal" => {
                self.pos += 1;
                let mut names = alloc::vec![self.ident()?];
                while self.eat_op(",") {
                    names.push(self.ident()?);
                }
                Ok(if word == "global" { Stmt::Global(names) } else { Stmt::Pass })
            }
            "import" => {
                self.pos += 1;
                let mut names = Vec::new();
                loop {
                    let name = self.dotted_name()?;
                    let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                    names.push(Alias { name, asname });
                    if !self.eat_op(",") {
                        break;
                    }
                }
                Ok(Stmt::Import(names))
            }
            "from" => {
                self.pos += 1;
                let mut module = String::new();
                loop {
                    if self.eat_op(".") {
                        module.push('.');
                    } else if self.eat_op("...") {
                        module.push_str("...");
                    } else {
                        break;
                    }
                }
                if !self.at_kw("import") {
                    module.push_str(&self.dotted_name()?);
                }
                self.expect_kw("import")?;
                let mut names = Vec::new();
                if self.eat_op("*") {
                    names.push(Alias { name: "*".into(), asname: None });
                } else {
                    let paren = self.eat_op("(");
                    loop {
                        if paren && self.at_op(")") {
                            break;
                        }
                        let name = self.ident()?;
                        let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                        names.push(Alias { name, asname });
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    if paren {
                        self.expect_op(")")?;
                    }
                }
                Ok(Stmt::ImportFrom { module, names })
            }
            "raise" => {
                self.pos += 1;
                let mut parts = Vec::new();
                if !self.at_newline() && !self.at_op(";") {
                    parts.push(self.test()?);
                    if self.eat_kw("from") {
                        parts.push(self.test()?);
                    }
                }
                Ok(Stmt::Raise(parts))
            }
            "assert" => {
                self.pos += 1;
                let mut parts = alloc::vec![self.test()?];
                if self.eat_op(",") {
                    parts.push(self.test()?);
                }
                Ok(Stmt::Assert(parts))
            }
            _ => self.expr_stmt(),
        }
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn expr_stmt(&mut self) -> PResult<Stmt> {
        let first = self.testlist_star_or_yield()?;
        if self.eat_op(":") {
            let annotation = self.test()?;
            let value = if self.eat_op("=") { Some(self.testlist_star_or_yield()?) } else { None };
            return Ok(Stmt::AnnAssign { target: first, annotation, value });
        }
        const AUG: &[&str] =
            &["+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="];
        if let TokenKind::Op(op) = self.kind() {
            if AUG.contains(op) {
                self.pos += 1;
                let value = self.testlist_star_or_yield()?;
                return Ok(Stmt::AugAssign { target: first, value });
            }
        }
        if self.at_op("=") {
            let mut exprs = alloc::vec![first];
            while self.eat_op("=") {
                exprs.push(self.testlist_star_or_yield()?);
            }
            let value = exprs.pop().expect("at least two expressions");
            return Ok(Stmt::Assign { targets: exprs, value });
        }
        Ok(Stmt::Expr { value: first, suppressed: false })
    }

    // ---- expressions ------------------------------------------------------

    fn testlist_star_or_yield(&mut self) -> PResult<Expr> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.testlist_star_expr()
        }
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        self.expect_kw("yield")?;
        self.eat_kw("from");
        if self.at_newline() || self.at_op(")") || self.at_op("=") || self.at_op(";") {
            return Ok(Expr::Constant);
        }
        Ok(Expr::Op(alloc::vec![self.testlist_star_expr()?]))
    }

    fn starts_expr(&self) -> bool {
        match self.kind() {
            TokenKind::Name(n) => !is_keyword(n) || matches!(n.as_str(), "None" | "True" | "False" | "not" | "lambda" | "await"),
            TokenKind::Number | TokenKind::Str { .. } => true,
            TokenKind::Op(op) => matches!(*op, "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..."),
            _ => false,
        }
    }

    /// Comma-separated `test | star_expr`; a tuple when a comma appears.
    fn testlist_star_expr(&mut self) -> PResult<Expr> {
        let first = self.test_or_star()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = alloc::vec![first];
        while self.eat_op(",") {
            if !self.starts_expr() {
                break;
            }
            items.push(self.test_or_star()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn test_or_star(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.expr()?)))
        } else {
            self.namedexpr_test()
        }
    }

    /// Loop targets: `expr`-level items so that `in` is not swallowed.
    fn exprlist(&mut self) -> PResult<Expr> {
        let first = self.expr_or_star()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = alloc::vec![first];
        while self.eat_op(",") {
            if !self.starts_expr() {
                break;
            }
            items.push(self.expr_or_star()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn expr_or_star(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.expr()?)))
        } else {
            self.expr()
        }
    }

    fn namedexpr_test(&mut self) -> PResult<Expr> {
        if let TokenKind::Name(n) = self.kind() {
            if !is_keyword(n) && matches!(self.peek_kind(1), TokenKind::Op(":=")) {
                let name = n.clone();
                self.pos += 2;
                let value = self.test()?;
                return Ok(Expr::NamedExpr(name, Box::new(value)));
            }
        }
        self.test()
    }

    fn test(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.or_test()?;
        if self.eat_kw("if") {
            let cond = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(Expr::Op(alloc::vec![cond, body, orelse]));
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        self.expect_kw("lambda")?;
        let params = self.params(":", false)?;
        self.expect_op(":")?;
        let body = self.test()?;
        Ok(Expr::Lambda { params, body: Box::new(body) })
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let mut parts = alloc::vec![self.and_test()?];
        while self.eat_kw("or") {
            parts.push(self.and_test()?);
        }
        Ok(collapse(parts))
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let mut parts = alloc::vec![self.not_test()?];
        while self.eat_kw("and") {
            parts.push(self.not_test()?);
        }
        Ok(collapse(parts))
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Op(alloc::vec![self.not_test()?]));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let mut parts = alloc::vec![self.expr()?];
        loop {
            let matched = match self.kind() {
                TokenKind::Op(op) => matches!(*op, "<" | ">" | "==" | ">=" | "<=" | "!="),
                TokenKind::Name(n) => n == "in" || n == "is" || (n == "not" && matches!(self.peek_kind(1), TokenKind::Name(m) if m == "in")),
                _ => false,
            };
            if !matched {
                break;
            }
            if self.eat_kw("not") {
                self.expect_kw("in")?;
            } else if self.eat_kw("is") {
                self.eat_kw("not");
            } else {
                self.pos += 1;
            }
            parts.push(self.expr()?);
        }
        Ok(collapse(parts))
    }

    /// Bitwise-or level and everything below it.
    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[&str]] = &[
            &["|"],
            &["^"],
            &["&"],
            &["<<", ">>"],
            &["+", "-"],
            &["*", "@", "/", "%", "//"],
        ];
        if level == LEVELS.len() {
            return self.factor();
        }
        let mut parts = alloc::vec![self.binary(level + 1)?];
        while matches!(self.kind(), TokenKind::Op(op) if LEVELS[level].contains(op)) {
            self.pos += 1;
            parts.push(self.binary(level + 1)?);
        }
        Ok(collapse(parts))
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.eat_op("-") || self.eat_op("+") || self.eat_op("~") {
            return Ok(Expr::Op(alloc::vec![self.factor()?]));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let awaited = self.eat_kw("await");
        let base = self.primary()?;
        let base = if awaited { Expr::Op(alloc::vec![base]) } else { base };
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::Op(alloc::vec![base, exp]));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_op("(") {
                let pos = self.pos as Pos;
                self.pos += 1;
                let (args, keywords) = self.arglist()?;
                self.expect_op(")")?;
                e = Expr::Call { func: Box::new(e), args, keywords, pos };
            } else if self.eat_op("[") {
                let index = self.subscripts()?;
                self.expect_op("]")?;
                e = Expr::Subscript(Box::new(e), Box::new(index));
            } else if self.eat_op(".") {
                let TokenKind::Name(attr) = self.kind().clone() else {
                    return Err(self.error("expected attribute name"));
                };
                self.pos += 1;
                e = Expr::Attribute(Box::new(e), attr);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn arglist(&mut self) -> PResult<(Vec<Expr>, Vec<Expr>)> {
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("*") {
                args.push(Expr::Starred(Box::new(self.test()?)));
            } else if self.eat_op("**") {
                keywords.push(self.test()?);
            } else if matches!(self.kind(), TokenKind::Name(n) if !is_keyword(n))
                && matches!(self.peek_kind(1), TokenKind::Op("="))
            {
                self.pos += 2;
                keywords.push(self.test()?);
            } else {
                let value = self.namedexpr_test()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comp_for()?;
                    args.push(Expr::Comprehension { elts: alloc::vec![value], generators });
                } else {
                    args.push(value);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok((args, keywords))
    }

    fn subscripts(&mut self) -> PResult<Expr> {
        let mut items = Vec::new();
        let mut tuple = false;
        loop {
            items.push(self.subscript()?);
            if !self.eat_op(",") {
                break;
            }
            tuple = true;
            if self.at_op("]") {
                break;
            }
        }
        Ok(if tuple || items.len() > 1 { Expr::Tuple(items) } else { items.pop().unwrap_or(Expr::Constant) })
    }

    fn subscript(&mut self) -> PResult<Expr> {
        let mut parts = Vec::new();
        let mut is_slice = false;
        if self.eat_op("*") {
            return Ok(Expr::Starred(Box::new(self.expr()?)));
        }
        if !self.at_op(":") {
            parts.push(self.namedexpr_test()?);
        }
        while self.eat_op(":") {
            is_slice = true;
            if !self.at_op(":") && !self.at_op("]") && !self.at_op(",") {
                parts.push(self.test()?);
            }
        }
        if is_slice {
            Ok(Expr::Slice(parts))
        } else {
            Ok(parts.pop().unwrap_or(Expr::Constant))
        }
    }

    fn comp_for(&mut self) -> PResult<Vec<Generator>> {
        let mut generators = Vec::new();
        loop {
            self.eat_kw("async");
            if !self.eat_kw("for") {
                break;
            }
            let target = self.exprlist()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.or_test()?);
            }
            generators.push(Generator { target, iter, ifs });
        }
        if generators.is_empty() {
            return Err(self.error("expected `for`"));
        }
        Ok(generators)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.kind().clone() {
            TokenKind::Name(n) => {
                self.pos += 1;
                match n.as_str() {
                    "None" | "True" | "False" => Ok(Expr::Constant),
                    _ if is_keyword(&n) => {
                        self.pos -= 1;
                        Err(self.error("unexpected keyword"))
                    }
                    _ => Ok(Expr::Name(n)),
                }
            }
            TokenKind::Number => {
                self.pos += 1;
                Ok(Expr::Constant)
            }
            TokenKind::Str { .. } => {
                let mut fields = Vec::new();
                let mut any_f = false;
                while let TokenKind::Str { fstring } = self.kind().clone() {
                    self.pos += 1;
                    if let Some(body) = fstring {
                        any_f = true;
                        fields.extend(fstring_fields(&body));
                    }
                }
                Ok(if any_f { Expr::FString(fields) } else { Expr::Constant })
            }
            TokenKind::Op("...") => {
                self.pos += 1;
                Ok(Expr::Constant)
            }
            TokenKind::Op("(") => {
                self.pos += 1;
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                if self.at_kw("yield") {
                    let e = self.yield_expr()?;
                    self.expect_op(")")?;
                    return Ok(e);
                }
                let first = self.test_or_star()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comp_for()?;
                    self.expect_op(")")?;
                    return Ok(Expr::Comprehension { elts: alloc::vec![first], generators });
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = alloc::vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.test_or_star()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            TokenKind::Op("[") => {
                self.pos += 1;
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.test_or_star()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comp_for()?;
                    self.expect_op("]")?;
                    return Ok(Expr::Comprehension { elts: alloc::vec![first], generators });
                }
                let mut items = alloc::vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    items.push(self.test_or_star()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            TokenKind::Op("{") => {
                self.pos += 1;
                self.dict_or_set()
            }
            _ => Err(self.error("unexpected token")),
        }
    }

    fn dict_or_set(&mut self) -> PResult<Expr> {
        if self.eat_op("}") {
            return Ok(Expr::Dict(Vec::new()));
        }
        let mut items = Vec::new();
        let mut is_dict = false;
        loop {
            if self.eat_op("**") {
                is_dict = true;
                items.push(self.expr()?);
            } else {
                let key = self.test_or_star()?;
                if self.eat_op(":") {
                    is_dict = true;
                    let value = self.test()?;
                    if items.is_empty() && (self.at_kw("for") || self.at_kw("async")) {
                        let generators = self.comp_for()?;
                        self.expect_op("}")?;
                        return Ok(Expr::Comprehension { elts: alloc::vec![key, value], generators });
                    }
                    items.push(key);
                    items.push(value);
                } else {
                    if items.is_empty() && (self.at_kw("for") || self.at_kw("async")) {
                        let generators = self.comp_for()?;
                        self.expect_op("}")?;
                        return Ok(Expr::Comprehension { elts: alloc::vec![key], generators });
                    }
                    items.push(key);
                }
            }
            if !self.eat_op(",") || self.at_op("}") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(if is_dict { Expr::Dict(items) } else { Expr::Set(items) })
    }
}

fn collapse(mut parts: Vec<Expr>) -> Expr {
    if parts.len() == 1 {
        parts.pop().expect("one element")
    } else {
        Expr::Op(parts)
    }
}

/// Extracts and parses the `{...}` replacement fields of an f-string body.
/// Fields that fail to parse are dropped.
fn fstring_fields(body: &str) -> Vec<Expr> {
    let chars: Vec<char> = body.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '{' if chars.get(i + 1) == Some(&'{') => i += 2,
            '{' => {
                let start = i + 1;
                let mut depth = 0usize;
                let mut end = None;
                let mut j = start;
                let mut quote: Option<char> = None;
                while j < chars.len() {
                    let c = chars[j];
                    if let Some(q) = quote {
                        if c == q {
                            quote = None;
                        }
                    } else {
                        match c {
                            '\'' | '"' => quote = Some(c),
                            '(' | '[' | '{' => depth += 1,
                            ')' | ']' => depth = depth.saturating_sub(1),
                            '}' if depth > 0 => depth -= 1,
                            '}' => {
                                end.get_or_insert(j);
                                break;
                            }
                            '!' if depth == 0 && chars.get(j + 1) != Some(&'=') && end.is_none() => {
                                end = Some(j);
                            }
                            ':' if depth == 0 && end.is_none() => end = Some(j),
                            _ => {}
                        }
                    }
                    j += 1;
                }
                // Skip to the closing brace of this field (format spec may nest).
                let mut close = j;
                let mut nest = 0usize;
                while close < chars.len() {
                    match chars[close] {
                        '{' => nest += 1,
                        '}' if nest == 0 => break,
                        '}' => nest -= 1,
                        _ => {}
                    }
                    close += 1;
                }
                let stop = end.unwrap_or(j).min(chars.len());
                let mut text: String = chars[start..stop].iter().collect();
                let trimmed = text.trim_end();
                if let Some(stripped) = trimmed.strip_suffix('=') {
                    text = stripped.into();
                }
                if let Ok(e) = parse_expression(text.trim()) {
                    out.push(e);
                }
                i = close + 1;
            }
            _ => i += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Vec<Stmt> {
        parse_module(src).unwrap()
    }

    #[test]
    fn simple_assignment() {
        let m = parse("x = 1\n");
        assert!(matches!(&m[0], Stmt::Assign { targets, .. } if targets == &[Expr::Name("x".into())]));
    }

    #[test]
    fn chained_and_tuple_targets() {
        let m = parse("a = b = 1\nc, *d = e\n");
        assert!(matches!(&m[0], Stmt::Assign { targets, .. } if targets.len() == 2));
        assert!(matches!(&m[1], Stmt::Assign { targets, .. } if matches!(&targets[0], Expr::Tuple(t) if t.len() == 2)));
    }

    #[test]
    fn compound_statements() {
        let src = "\
@dec(1)
def f(a, b=2, *args, c: int = 3, **kw) -> int:
    if a:
        return b
    elif c:
        pass
    else:
        for i, j in zip(a, b):
            print(i)
    while x:
        break
    try:
        g()
    except (ValueError, KeyError) as err:
        raise RuntimeError() from err
    finally:
        h()
    with open(p) as fh, lock:
        yield fh
class C(Base, metaclass=M):
    x: int = 3
    def m(self):
        return [y async for y in z if y]
";
        let m = parse(src);
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|s| !matches!(s, Stmt::Opaque(_))), "{m:?}");
    }

    #[test]
    fn expressions() {
        let src = "\
x = lambda a, *b, c=1: a if b else c
y = {k: v for k, v in d.items()}
z = {1, 2, *s}
w = df.loc[df['a'] > 1, ['b', 'c']][::2]
v = not a in b and c is not d or e not in f
u = f'{name!r:>10} {obj.attr} {{literal}} {g(1)}'
t = (yield)
s = [*a, *b]
r = -x ** 2 // 3 @ m
if (n := len(a)) > 10: print(n)
";
        let m = parse(src);
        assert!(m.iter().all(|s| !matches!(s, Stmt::Opaque(_))), "{m:?}");
    }

    #[test]
    fn unsupported_statement_becomes_opaque() {
        let m = parse("match cmd:\n    case 1:\n        foo(x)\ny = 2\n");
        assert_eq!(m.len(), 2);
        let Stmt::Opaque(names) = &m[0] else { panic!("{m:?}") };
        assert!(names.contains(&"cmd".to_string()));
        assert!(names.contains(&"foo".to_string()));
        assert!(matches!(&m[1], Stmt::Assign { .. }));
    }

    #[test]
    fn python2_print_is_opaque() {
        let m = parse("print 'hello', x\n");
        assert_eq!(m, alloc::vec![Stmt::Opaque(alloc::vec!["print".into(), "x".into()])]);
    }

    #[test]
    fn trailing_semicolon_suppresses_display() {
        let m = parse("df.plot();\n");
        assert!(matches!(&m[0], Stmt::Expr { suppressed: true, .. }));
    }

    #[test]
    fn fstring_fields_are_parsed() {
        let m = parse("s = f\"{a + b:.2f} and {c}\"\n");
        let Stmt::Assign { value: Expr::FString(fields), .. } = &m[0] else { panic!() };
        assert_eq!(fields.len(), 2);
    }

    #[test]
    fn imports() {
        let m = parse("import a.b as c, d\nfrom .x import (y as z,\n  w)\nfrom m import *\n");
        assert_eq!(
            m[0],
            Stmt::Import(alloc::vec![
                Alias { name: "a.b".into(), asname: Some("c".into()) },
                Alias { name: "d".into(), asname: None },
            ])
        );
        assert!(matches!(&m[1], Stmt::ImportFrom { module, names } if module == ".x" && names.len() == 2));
        assert!(matches!(&m[2], Stmt::ImportFrom { names, .. } if names[0].name == "*"));
    }

    #[test]
    fn lexer_errors_fail_the_module() {
        assert!(parse_module("x = 'unterminated\n").is_err());
    }
}
