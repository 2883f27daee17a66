//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr     := term (("+"|"-") term)* ;
//! term     := factor (("*"|"/") factor)* ;
//! factor   := base ("^" rational)? ;
//! base     := number | ident | "(" expr ")" | func "(" expr ")" | "-" base ;
//! func     := "exp" | "log" | "sin" | "cos" ;
//! ident    := "t" | "x" digits | "p" digits ;
//! rational := integer | "(" integer "/" integer ")" ;
//! ```
//!
//! Integers in exponents may carry a leading `-`, and `"(" integer ")"` is
//! accepted as a rational, so that printed negative exponents parse back.

use thiserror::Error;

use super::{Expr, Rational, Var};

/// Maximum nesting depth of a parsed tree.
pub const MAX_DEPTH: usize = 256;

/// Exponent numerators and denominators are bounded by this magnitude.
const MAX_EXPONENT: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{name}` at byte {offset} is out of range for dimension {n}")]
    IndexOutOfRange { offset: usize, name: String, n: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::IndexOutOfRange { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Sym(u8),
    End,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

type Parsed = (Expr, usize);

impl<'a> Parser<'a> {
    fn syntax(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Offset of the next token.
    fn here(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    fn peek_sym(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied().filter(|c| b"+-*/^()".contains(c))
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek_sym() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        let at = self.here();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(at, format!("expected `{}`", c as char)))
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn next_token(&mut self) -> Result<Tok, ParseError> {
        let start = self.here();
        let Some(&c) = self.src.get(start) else {
            return Ok(Tok::End);
        };
        if c.is_ascii_digit() {
            self.digits();
            let mut integral = true;
            if self.src.get(self.pos) == Some(&b'.') {
                integral = false;
                self.pos += 1;
                self.digits();
            }
            if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if self.digits() == 0 {
                    self.pos = save;
                } else {
                    integral = false;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
            if integral {
                if let Ok(k) = text.parse::<i64>() {
                    return Ok(Tok::Int(k));
                }
            }
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
                _ => Err(self.syntax(start, format!("number `{text}` is not a finite double"))),
            };
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok(Tok::Ident(text));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok(Tok::Sym(c));
        }
        Err(self.syntax(start, "unexpected character"))
    }

    fn check_depth(&self, depth: usize, at: usize) -> Result<(), ParseError> {
        if depth > MAX_DEPTH {
            Err(self.syntax(at, format!("expression nested deeper than {MAX_DEPTH}")))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self, nest: usize) -> Result<Parsed, ParseError> {
        let at = self.here();
        self.check_depth(nest, at)?;
        let (mut acc, mut depth) = self.term(nest)?;
        loop {
            let at = self.here();
            let op = match self.peek_sym() {
                Some(c @ (b'+' | b'-')) => c,
                _ => break,
            };
            self.pos += 1;
            let (rhs, d) = self.term(nest)?;
            depth = depth.max(d) + 1;
            self.check_depth(depth, at)?;
            acc = if op == b'+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok((acc, depth))
    }

    fn term(&mut self, nest: usize) -> Result<Parsed, ParseError> {
        let (mut acc, mut depth) = self.factor(nest)?;
        loop {
            let at = self.here();
            let op = match self.peek_sym() {
                Some(c @ (b'*' | b'/')) => c,
                _ => break,
            };
            self.pos += 1;
            let (rhs, d) = self.factor(nest)?;
            depth = depth.max(d) + 1;
            self.check_depth(depth, at)?;
            acc = if op == b'*' { acc.mul(&rhs) } else { acc.div(&rhs) };
        }
        Ok((acc, depth))
    }

    fn factor(&mut self, nest: usize) -> Result<Parsed, ParseError> {
        let (base, depth) = self.base(nest)?;
        if self.eat(b'^') {
            let k = self.rational()?;
            return Ok((base.pow(k), depth + 1));
        }
        Ok((base, depth))
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat(b'-');
        let at = self.here();
        match self.next_token()? {
            Tok::Int(k) if k <= MAX_EXPONENT => Ok(if negative { -k } else { k }),
            Tok::Int(_) => Err(self.syntax(at, format!("exponent exceeds {MAX_EXPONENT}"))),
            _ => Err(self.syntax(at, "expected an integer exponent")),
        }
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let at = self.here();
        if self.eat(b'(') {
            let num = self.signed_int()?;
            let den = if self.eat(b'/') { self.signed_int()? } else { 1 };
            self.expect(b')')?;
            return Rational::new(num, den).ok_or_else(|| self.syntax(at, "zero denominator in exponent"));
        }
        Ok(Rational::integer(self.signed_int()?))
    }

    fn variable(&self, name: &str, at: usize) -> Result<Option<Var>, ParseError> {
        if name == "t" {
            return Ok(Some(Var::Time));
        }
        let (head, tail) = name.split_at(1);
        if tail.is_empty() || !tail.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(None);
        }
        let make = match head {
            "x" => Var::Space,
            "p" => Var::Momentum,
            _ => return Ok(None),
        };
        let out_of_range = || ParseError::IndexOutOfRange {
            offset: at,
            name: name.to_string(),
            n: self.n,
        };
        let k: usize = tail.parse().map_err(|_| out_of_range())?;
        if k == 0 || k > self.n {
            return Err(out_of_range());
        }
        Ok(Some(make(k - 1)))
    }

    fn base(&mut self, nest: usize) -> Result<Parsed, ParseError> {
        let at = self.here();
        self.check_depth(nest, at)?;
        match self.next_token()? {
            Tok::Num(v) => Ok((Expr::constant(v), 1)),
            Tok::Int(k) => Ok((Expr::constant(k as f64), 1)),
            Tok::Sym(b'(') => {
                let inner = self.expr(nest + 1)?;
                self.expect(b')')?;
                Ok(inner)
            }
            Tok::Sym(b'-') => {
                let (e, d) = self.base(nest + 1)?;
                Ok((e.neg(), d + 1))
            }
            Tok::Ident(name) => {
                if let Some(v) = self.variable(&name, at)? {
                    return Ok((Expr::var(v), 1));
                }
                let func: fn(&Expr) -> Expr = match name.as_str() {
                    "exp" => Expr::exp,
                    "log" => Expr::log,
                    "sin" => Expr::sin,
                    "cos" => Expr::cos,
                    _ => return Err(ParseError::UnknownIdentifier { offset: at, name }),
                };
                self.expect(b'(')?;
                let (arg, d) = self.expr(nest + 1)?;
                self.expect(b')')?;
                Ok((func(&arg), d + 1))
            }
            Tok::End => Err(self.syntax(at, "unexpected end of input")),
            Tok::Sym(c) => Err(self.syntax(at, format!("unexpected `{}`", c as char))),
        }
    }
}

/// Parses `src` as an expression over `t, x1..xn, p1..pn`.
pub fn parse(src: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        n,
    };
    let (e, _) = p.expr(0)?;
    let at = p.here();
    if at < p.src.len() {
        return Err(p.syntax(at, "trailing input"));
    }
    Ok(e)
}

impl std::str::FromStr for Rational {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
            n: 0,
        };
        let k = p.rational()?;
        let at = p.here();
        if at < p.src.len() {
            return Err(p.syntax(at, "trailing input"));
        }
        Ok(k)
    }
}
