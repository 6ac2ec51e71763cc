//! Tokenizer for the Python subset understood by the slicer and the API
//! extractor. Produces logical-line tokens with INDENT/DEDENT markers the
//! same way CPython's tokenizer does, minus encoding detection.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Name(String),
    Number,
    /// String literal. `fstring` holds the raw body when the literal carries an
    /// `f` prefix so the parser can pick out the embedded expressions.
    Str { fstring: Option<String> },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub message: &'static str,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

// Longest first.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    depth: usize,
    indents: Vec<usize>,
    tokens: Vec<Token>,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 0,
        depth: 0,
        indents: alloc::vec![0],
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, line: u32, col: u32) {
        self.tokens.push(Token { kind, line, col });
    }

    fn err(&self, message: &'static str) -> LexError {
        LexError { line: self.line, message }
    }

    fn last_is_newline(&self) -> bool {
        matches!(
            self.tokens.last().map(|t| &t.kind),
            None | Some(TokenKind::Newline) | Some(TokenKind::Indent) | Some(TokenKind::Dedent)
        )
    }

    fn run(&mut self) -> Result<(), LexError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                // Measure indentation; skip blank and comment-only lines.
                let mut width = 0usize;
                while let Some(c) = self.peek() {
                    match c {
                        ' ' => width += 1,
                        '\t' => width = (width / 8 + 1) * 8,
                        '\x0c' => width = 0,
                        _ => break,
                    }
                    self.bump();
                }
                match self.peek() {
                    None => break,
                    Some('#') => {
                        self.skip_comment();
                        continue;
                    }
                    Some('\n') => {
                        self.bump();
                        continue;
                    }
                    Some('\r') => {
                        self.bump();
                        continue;
                    }
                    Some('\\') if matches!(self.peek_at(1), Some('\n')) => {
                        self.bump();
                        self.bump();
                        continue;
                    }
                    _ => {}
                }
                let current = *self.indents.last().unwrap_or(&0);
                if width > current {
                    self.indents.push(width);
                    self.push(TokenKind::Indent, self.line, 0);
                } else if width < current {
                    while width < *self.indents.last().unwrap_or(&0) {
                        self.indents.pop();
                        self.push(TokenKind::Dedent, self.line, 0);
                    }
                    if width != *self.indents.last().unwrap_or(&0) {
                        return Err(self.err("unindent does not match any outer indentation level"));
                    }
                }
                at_line_start = false;
            }

            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_newline() {
                            self.push(TokenKind::Newline, line, col);
                        }
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' | '\x0c' => {
                    self.bump();
                }
                '#' => self.skip_comment(),
                '\\' => {
                    self.bump();
                    match self.peek() {
                        Some('\n') => {
                            self.bump();
                        }
                        Some('\r') if self.peek_at(1) == Some('\n') => {
                            self.bump();
                            self.bump();
                        }
                        None => {}
                        _ => return Err(self.err("unexpected character after line continuation")),
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.lex_number();
                    self.push(TokenKind::Number, line, col);
                }
                c if is_ident_start(c) => {
                    let start = self.pos;
                    while self.peek().is_some_and(is_ident_continue) {
                        self.bump();
                    }
                    let word: String = self.chars[start..self.pos].iter().collect();
                    if matches!(self.peek(), Some('\'') | Some('"')) && is_string_prefix(&word) {
                        let is_f = word.contains(['f', 'F']);
                        let body = self.lex_string()?;
                        self.push(TokenKind::Str { fstring: is_f.then_some(body) }, line, col);
                    } else {
                        self.push(TokenKind::Name(word), line, col);
                    }
                }
                '\'' | '"' => {
                    self.lex_string()?;
                    self.push(TokenKind::Str { fstring: None }, line, col);
                }
                _ => {
                    let op = OPERATORS
                        .iter()
                        .find(|op| op.chars().enumerate().all(|(i, oc)| self.peek_at(i) == Some(oc)))
                        .copied()
                        .ok_or_else(|| self.err("unexpected character"))?;
                    for _ in 0..op.len() {
                        self.bump();
                    }
                    match op {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => {
                            if self.depth == 0 {
                                return Err(self.err("unmatched closing bracket"));
                            }
                            self.depth -= 1;
                        }
                        _ => {}
                    }
                    self.push(TokenKind::Op(op), line, col);
                }
            }
        }
        if self.depth != 0 {
            return Err(self.err("unclosed bracket at end of input"));
        }
        if !self.last_is_newline() {
            self.push(TokenKind::Newline, self.line, self.col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, self.line, 0);
        }
        self.push(TokenKind::End, self.line, self.col);
        Ok(())
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn lex_number(&mut self) {
        let mut prev = '\0';
        while let Some(c) = self.peek() {
            let sign_ok = (c == '+' || c == '-') && (prev == 'e' || prev == 'E');
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' || sign_ok {
                // `1.real` style attribute access is rare enough to ignore, but
                // a second dot (`1..`) never belongs to the number.
                if c == '.' && prev == '.' {
                    break;
                }
                prev = c;
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Consumes a string literal starting at the opening quote and returns
    /// the body text.
    fn lex_string(&mut self) -> Result<String, LexError> {
        let quote = self.bump().ok_or_else(|| self.err("expected quote"))?;
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut body = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.err("unterminated string literal"));
            };
            match c {
                '\\' => {
                    body.push(c);
                    if let Some(n) = self.bump() {
                        body.push(n);
                    }
                }
                '\n' if !triple => return Err(self.err("unterminated string literal")),
                c if c == quote => {
                    if !triple {
                        break;
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        self.bump();
                        self.bump();
                        break;
                    }
                    body.push(c);
                }
                c => body.push(c),
            }
        }
        Ok(body)
    }
}

fn is_string_prefix(word: &str) -> bool {
    word.len() <= 2
        && word.chars().all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
        && !word.to_ascii_lowercase().contains("rr")
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        matches!(&self.kind, TokenKind::Op(o) if *o == op)
    }

    pub fn is_name(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Name(n) if n == name)
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Name(n) => f.write_str(n),
            TokenKind::Number => f.write_str("<number>"),
            TokenKind::Str { .. } => f.write_str("<string>"),
            TokenKind::Op(o) => f.write_str(o),
            TokenKind::Newline => f.write_str("<newline>"),
            TokenKind::Indent => f.write_str("<indent>"),
            TokenKind::Dedent => f.write_str("<dedent>"),
            TokenKind::End => f.write_str("<end>"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn indentation_produces_indent_and_dedent() {
        let k = kinds("if x:\n    y = 1\nz = 2\n");
        assert!(k.contains(&TokenKind::Indent));
        assert!(k.contains(&TokenKind::Dedent));
        assert_eq!(k.last(), Some(&TokenKind::End));
    }

    #[test]
    fn newlines_inside_brackets_are_joined() {
        let k = kinds("f(a,\n  b)\n");
        let newlines = k.iter().filter(|t| **t == TokenKind::Newline).count();
        assert_eq!(newlines, 1);
    }

    #[test]
    fn strings_and_prefixes() {
        let k = kinds("x = f'{a}' + r'\\d' + b\"x\" + '''multi\nline'''\n");
        let strs = k.iter().filter(|t| matches!(t, TokenKind::Str { .. })).count();
        assert_eq!(strs, 4);
        assert!(k.contains(&TokenKind::Str { fstring: Some("{a}".into()) }));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("x = 'abc\n").is_err());
        assert!(tokenize("x = (1,\n").is_err());
    }

    #[test]
    fn bad_dedent_is_an_error() {
        assert!(tokenize("if x:\n        a\n    b\n").is_err());
    }

    #[test]
    fn numbers() {
        let k = kinds("x = 1e-3 + 0x1F + 3.5j + .5 + 1_000\n");
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Number).count(), 5);
    }
}
