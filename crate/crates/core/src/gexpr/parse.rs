//! Lexer and recursive-descent parser for the coupling-expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? power
//! power  := atom ('^' integer)?
//! atom   := number | 'g' | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Whitespace is insignificant; numbers are decimals with optional fraction
//! and exponent. Errors carry the byte offset of the offending token.

use super::GExpr;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let ident = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .to_string();
            return Ok((Tok::Ident(ident), start));
        }
        Err(Error::Parse {
            offset: start,
            msg: format!("unexpected character `{}`", c as char),
        })
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2e` followed by nothing).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            msg: format!("malformed number `{text}`"),
        })?;
        Ok((Tok::Num(value), start))
    }
}

struct Parser<R: Real> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    _marker: std::marker::PhantomData<R>,
}

/// Parses a source string into an expression tree.
pub fn parse<R: Real>(src: &str) -> Result<GExpr<R>> {
    if src.trim().is_empty() {
        return Err(Error::Parse {
            offset: 0,
            msg: "empty expression".into(),
        });
    }
    let mut lexer = Lexer::new(src);
    let mut tokens = Vec::new();
    loop {
        let (tok, off) = lexer.next_token()?;
        let end = matches!(tok, Tok::End);
        tokens.push((tok, off));
        if end {
            break;
        }
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        _marker: std::marker::PhantomData,
    };
    let expr = parser.expr()?;
    let (tok, off) = parser.peek();
    if !matches!(tok, Tok::End) {
        return Err(Error::Parse {
            offset: off,
            msg: format!("unexpected trailing token {tok:?}"),
        });
    }
    Ok(expr)
}

impl<R: Real> Parser<R> {
    fn peek(&self) -> (&Tok, usize) {
        let (tok, off) = &self.tokens[self.pos];
        (tok, *off)
    }

    fn bump(&mut self) -> (Tok, usize) {
        let out = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        out
    }

    fn expr(&mut self) -> Result<GExpr<R>> {
        let mut acc = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.bump();
                    acc = GExpr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    acc = GExpr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<GExpr<R>> {
        let mut acc = self.factor()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.bump();
                    acc = GExpr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    acc = GExpr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<GExpr<R>> {
        if matches!(self.peek().0, Tok::Minus) {
            self.bump();
            return Ok(GExpr::Neg(Box::new(self.power()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<GExpr<R>> {
        let base = self.atom()?;
        if matches!(self.peek().0, Tok::Caret) {
            self.bump();
            let exponent = self.integer_exponent()?;
            return Ok(GExpr::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32> {
        let negative = if matches!(self.peek().0, Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => {
                if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                    return Err(Error::Parse {
                        offset: off,
                        msg: format!("exponent must be an integer, got `{v}`"),
                    });
                }
                let e = v as i32;
                Ok(if negative { -e } else { e })
            }
            other => Err(Error::Parse {
                offset: off,
                msg: format!("expected integer exponent, found {other:?}"),
            }),
        }
    }

    fn atom(&mut self) -> Result<GExpr<R>> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(GExpr::Num(R::of(v))),
            Tok::Ident(name) if name == "g" => Ok(GExpr::G),
            Tok::Ident(name) if name == "sqrt" => {
                self.expect(Tok::LParen)?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(GExpr::Sqrt(Box::new(inner)))
            }
            Tok::Ident(name) => Err(Error::Parse {
                offset: off,
                msg: format!("unknown identifier `{name}`"),
            }),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            other => Err(Error::Parse {
                offset: off,
                msg: format!("expected a number, `g`, `sqrt(...)` or `(`, found {other:?}"),
            }),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let (tok, off) = self.bump();
        if std::mem::discriminant(&tok) == std::mem::discriminant(&want) {
            Ok(())
        } else {
            Err(Error::Parse {
                offset: off,
                msg: format!("expected {want:?}, found {tok:?}"),
            })
        }
    }
}
