//! Recursive-descent parser for polynomial expressions.
//!
//! Accepts the canonical `Display` form as well as hand-written input with
//! parentheses, unary minus, `^` with a non-negative integer exponent and
//! division by a nonzero constant, e.g. `-2*x1*(x1 - 2*x2) - 2*x2*(3*x1 + 4*x2)`.

use thiserror::Error;

use super::MultiPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParsePolyError {
    #[error("unexpected character `{ch}` at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected token at byte {pos}: expected {expected}")]
    Unexpected { pos: usize, expected: &'static str },
    #[error("invalid number `{text}` at byte {pos}")]
    BadNumber { text: String, pos: usize },
    #[error("exponent at byte {pos} must be a non-negative integer")]
    BadExponent { pos: usize },
    #[error("division at byte {pos} requires a nonzero constant divisor")]
    BadDivisor { pos: usize },
    #[error("empty polynomial expression")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>, ParsePolyError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &s[start..i];
                let value: f64 =
                    text.parse().map_err(|_| ParsePolyError::BadNumber { text: text.to_string(), pos: start })?;
                out.push((start, Tok::Num(value, text.to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(s[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = s[start..].chars().next().unwrap_or(c);
                return Err(ParsePolyError::UnexpectedChar { ch, pos: start });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<MultiPoly, ParsePolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, ParsePolyError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    let at = self.offset();
                    self.pos += 1;
                    let divisor = self.unary()?;
                    if divisor.degree() != 0 || divisor.is_zero() {
                        return Err(ParsePolyError::BadDivisor { pos: at });
                    }
                    acc = acc.scale(1.0 / divisor.constant_term());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<MultiPoly, ParsePolyError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.scale(-1.0))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<MultiPoly, ParsePolyError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        match self.peek() {
            Some(Tok::Num(_, text)) if text.bytes().all(|b| b.is_ascii_digit()) => {
                let k: u32 = text.parse().map_err(|_| ParsePolyError::BadExponent { pos: at })?;
                self.pos += 1;
                Ok(base.pow(k))
            }
            _ => Err(ParsePolyError::BadExponent { pos: at }),
        }
    }

    fn atom(&mut self) -> Result<MultiPoly, ParsePolyError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v, _)) => {
                self.pos += 1;
                Ok(MultiPoly::constant(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                // Tokenizer only yields valid identifiers.
                Ok(MultiPoly::var(&name).expect("tokenizer yields valid identifiers"))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(ParsePolyError::Unexpected { pos: self.offset(), expected: "`)`" });
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(ParsePolyError::Unexpected { pos: at, expected: "number, variable or `(`" }),
        }
    }
}

pub(super) fn parse(s: &str) -> Result<MultiPoly, ParsePolyError> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err(ParsePolyError::Empty);
    }
    let mut parser = Parser { toks, pos: 0, end: s.len() };
    let poly = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(ParsePolyError::Unexpected { pos: parser.offset(), expected: "operator or end of input" });
    }
    Ok(poly)
}
