//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)?
//! exponent:= '-'? int | '(' '-'? int ('/' int)? ')'
//! primary := int | ident | 'D1' '(' sum ')' | '(' sum ')'
//! ```

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::rational::Q;
use crate::var::{self, Var, MAX_JET};

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    /// Offset of `s` inside the caller's text, for error positions.
    base: usize,
    params: &'a [String],
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn at(&self) -> usize {
        self.base + self.pos
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.at(), format!("expected `{}`", c as char)))
        }
    }

    fn lift(&self, pos: usize, r: Result<Expr>) -> Result<Expr> {
        r.map_err(|e| match e {
            Error::RadicalMismatch => Error::SecondRadical(format!("at {pos}")),
            Error::Unsupported(m) => syntax(pos, m),
            other => other,
        })
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    let p = self.at();
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.lift(p, acc.try_add(&t))?;
                }
                Some(b'-') => {
                    let p = self.at();
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.lift(p, acc.try_sub(&t))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    let p = self.at();
                    self.pos += 1;
                    let t = self.unary()?;
                    acc = self.lift(p, acc.try_mul(&t))?;
                }
                Some(b'/') => {
                    let p = self.at();
                    self.pos += 1;
                    let t = self.unary()?;
                    acc = self.lift(p, acc.try_div(&t))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(syntax(self.at(), "expected a number"));
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(text.parse().unwrap())
    }

    fn small_int(&mut self) -> Result<i64> {
        let p = self.at();
        let n = self.integer()?;
        i64::try_from(n).map_err(|_| syntax(p, "exponent too large"))
    }

    fn signed_small(&mut self) -> Result<i64> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            Ok(-self.small_int()?)
        } else {
            self.small_int()
        }
    }

    fn exponent(&mut self) -> Result<(i64, i64)> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let p = self.signed_small()?;
            let q = if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.at();
                let q = self.small_int()?;
                if q == 0 {
                    return Err(syntax(at, "zero exponent denominator"));
                }
                q
            } else {
                1
            };
            self.expect(b')')?;
            Ok((p, q))
        } else {
            Ok((self.signed_small()?, 1))
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let at = self.at();
            let (p, q) = self.exponent()?;
            if p.abs() > 1000 {
                return Err(syntax(at, "exponent too large"));
            }
            if base.is_zero() && p < 0 {
                return Err(Error::DivisionByZero);
            }
            let r = Expr::pow_rational(&base, p, q);
            return self.lift(at, r);
        }
        Ok(base)
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(syntax(self.at(), "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Expr::constant(Q::from_bigint(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.at();
                let name = self.ident();
                match name {
                    "x" => Ok(Expr::x()),
                    "u" => Ok(Expr::u(0)),
                    "ux" => Ok(Expr::u(1)),
                    "uxx" => Ok(Expr::u(2)),
                    "D1" => {
                        self.expect(b'(')?;
                        let inner = self.sum()?;
                        self.expect(b')')?;
                        inner.total_x()
                    }
                    _ if name.len() >= 2
                        && name.starts_with('u')
                        && name[1..].bytes().all(|b| b.is_ascii_digit()) =>
                    {
                        match name[1..].parse::<usize>() {
                            Ok(o) if o <= MAX_JET => Ok(Expr::u(o)),
                            _ => Err(Error::OrderOverflow(
                                name[1..].parse().unwrap_or(usize::MAX),
                            )),
                        }
                    }
                    _ if self.params.iter().any(|p| p == name) => Ok(Expr::var(var::param(name)?)),
                    _ => Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        pos: at,
                    }),
                }
            }
            Some(c) => Err(syntax(
                self.at(),
                format!("unexpected character `{}`", c as char),
            )),
        }
    }
}

/// Parses with the given declared parameter names.
pub fn parse_with(text: &str, params: &[String]) -> Result<Expr> {
    parse_at(text, 0, params)
}

fn parse_at(text: &str, base: usize, params: &[String]) -> Result<Expr> {
    for p in params {
        var::param(p)?;
    }
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        base,
        params,
    };
    let e = p.sum()?;
    if p.peek().is_some() {
        return Err(syntax(p.at(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Parses an expression without parameters.
pub fn parse(text: &str) -> Result<Expr> {
    parse_with(text, &[])
}

/// A parsed `.ham` / `.flow` file.
#[derive(Clone, Debug)]
pub struct Document {
    pub params: Vec<String>,
    pub expr: Expr,
}

/// Parses a file: `#` comment lines, an optional `params: a, b` header and
/// the expression (possibly over several lines). Error positions are byte
/// offsets into `text`.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut params = Vec::new();
    let mut body = String::new();
    let mut body_start: Option<usize> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('#') || trimmed.is_empty() {
            if body_start.is_some() {
                body.push_str(&" ".repeat(line.len()));
            }
            offset += line.len();
            continue;
        }
        if body_start.is_none() {
            if let Some(rest) = trimmed.strip_prefix("params:") {
                for name in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    if var::is_reserved(name) {
                        return Err(Error::InvalidParameter(name.to_string()));
                    }
                    var::param(name)?;
                    params.push(name.to_string());
                }
                offset += line.len();
                continue;
            }
            body_start = Some(offset);
        }
        body.push_str(line);
        offset += line.len();
    }
    let Some(start) = body_start else {
        return Err(syntax(text.len(), "missing expression"));
    };
    let expr = parse_at(&body, start, &params)?;
    Ok(Document { params, expr })
}

/// Line and column (1-based) of a byte offset.
pub fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let pos = pos.min(text.len());
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map(|i| pos - i).unwrap_or(pos + 1);
    (line, col)
}

pub fn var_of(name: &str) -> Option<Var> {
    match name {
        "x" => Some(Var::X),
        "u" => Some(Var::jet(0)),
        "ux" => Some(Var::jet(1)),
        "uxx" => Some(Var::jet(2)),
        _ if name.starts_with('u') && name.len() > 1 => {
            name[1..].parse().ok().and_then(|o| Var::try_jet(o).ok())
        }
        _ => var::lookup_param(name),
    }
}
