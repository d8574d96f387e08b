//! A small operator-expression language.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := coeff ('*' factor)* | factor ('*' factor)*
//! factor := name site? "'"?
//! coeff  := real | real 'i' | real ('+'|'-') real 'i'
//! name   := a | n | sx | sy | sz | sp | sm | id
//! site   := 1-based factor index, omitted on single-factor spaces
//! ```
//!
//! Whitespace is ignored everywhere except inside numbers and names. A real
//! literal followed by `±<real>i` is always read as one complex coefficient,
//! so `1 - 0.5i*sx` means `(1 − 0.5i)·σx`.

use std::fmt;

use crate::algebra::{self, HilbertSpace, Operator, Pauli};
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Bosonic annihilation.
    A,
    /// Bosonic number operator.
    N,
    Sx,
    Sy,
    Sz,
    Sp,
    Sm,
    Id,
}

impl Symbol {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "a" => Symbol::A,
            "n" => Symbol::N,
            "sx" => Symbol::Sx,
            "sy" => Symbol::Sy,
            "sz" => Symbol::Sz,
            "sp" => Symbol::Sp,
            "sm" => Symbol::Sm,
            "id" => Symbol::Id,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::A => "a",
            Symbol::N => "n",
            Symbol::Sx => "sx",
            Symbol::Sy => "sy",
            Symbol::Sz => "sz",
            Symbol::Sp => "sp",
            Symbol::Sm => "sm",
            Symbol::Id => "id",
        }
    }

    fn local_operator(self, dim: usize) -> Result<Operator> {
        let spin = |p| {
            if dim == 2 {
                Ok(algebra::pauli(p))
            } else {
                Err(Error::Semantic(format!(
                    "`{}` needs a two-level factor, found dimension {dim}",
                    self.name()
                )))
            }
        };
        let boson = |f: fn(usize) -> Result<Operator>| {
            if dim >= 2 {
                f(dim - 1)
            } else {
                Err(Error::Semantic(format!("`{}` needs a factor of dimension ≥ 2", self.name())))
            }
        };
        match self {
            Symbol::A => boson(algebra::annihilation),
            Symbol::N => boson(algebra::number),
            Symbol::Sx => spin(Pauli::X),
            Symbol::Sy => spin(Pauli::Y),
            Symbol::Sz => spin(Pauli::Z),
            Symbol::Sp => spin(Pauli::Plus),
            Symbol::Sm => spin(Pauli::Minus),
            Symbol::Id => Ok(algebra::identity(dim)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub symbol: Symbol,
    /// 1-based site, as written.
    pub site: Option<usize>,
    pub dagger: bool,
    /// Byte offset of the factor in the source text.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    /// Coefficient with the preceding sign folded in.
    pub coeff: C64,
    pub factors: Vec<Factor>,
}

/// Parsed expression: a sum of terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub terms: Vec<Term>,
}

impl Expr {
    /// Builds the denoted operator on `space`.
    pub fn to_operator(&self, space: &HilbertSpace) -> Result<Operator> {
        let mut total = Operator::zeros(space);
        for term in &self.terms {
            let mut product = Operator::identity(space);
            for f in &term.factors {
                product = &product * &factor_operator(f, space)?;
            }
            total = &total + &product.scale(term.coeff);
        }
        Ok(total)
    }
}

fn factor_operator(f: &Factor, space: &HilbertSpace) -> Result<Operator> {
    let site = match (f.site, space.n_factors()) {
        (None, 1) => 0,
        (None, n) => {
            return Err(Error::Semantic(format!(
                "`{}` at byte {} needs a site index: the space has {n} factors",
                f.symbol.name(),
                f.offset
            )))
        }
        (Some(s), n) if s >= 1 && s <= n => s - 1,
        (Some(s), n) => {
            return Err(Error::Semantic(format!(
                "site {s} at byte {} is out of range 1..={n}",
                f.offset
            )))
        }
    };
    let local = f
        .symbol
        .local_operator(space.dims()[site])
        .map_err(|e| match e {
            Error::Semantic(m) => Error::Semantic(format!("{m} (byte {})", f.offset)),
            other => other,
        })?;
    let local = if f.dagger { local.dagger() } else { local };
    algebra::embed(&local, site, space)
}

fn write_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // `{:?}` keeps a decimal point or exponent and round-trips exactly;
    // adding zero turns −0 into +0.
    write!(f, "{:?}", x + 0.0)
}

fn write_coeff(f: &mut fmt::Formatter<'_>, z: C64) -> fmt::Result {
    if z.im == 0.0 {
        write_real(f, z.re)
    } else if z.re == 0.0 {
        write_real(f, z.im)?;
        f.write_str("i")
    } else {
        write_real(f, z.re)?;
        f.write_str(if z.im < 0.0 { "-" } else { "+" })?;
        write_real(f, z.im.abs())?;
        f.write_str("i")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0.0");
        }
        for (k, term) in self.terms.iter().enumerate() {
            let negative = term.coeff.re < 0.0 || (term.coeff.re == 0.0 && term.coeff.im < 0.0);
            let shown = if negative { -term.coeff } else { term.coeff };
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_coeff(f, shown)?;
            for factor in &term.factors {
                write!(f, "*{}", factor.symbol.name())?;
                if let Some(s) = factor.site {
                    write!(f, "{s}")?;
                }
                if factor.dagger {
                    f.write_str("'")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Int(usize),
    Plus,
    Minus,
    Star,
    Quote,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset, message: message.into() })
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        // After an identifier, digits are a site index rather than a number.
        let mut after_ident = false;
        while self.pos < self.src.len() {
            let b = self.bytes()[self.pos];
            let start = self.pos;
            match b {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                    after_ident = false;
                    continue;
                }
                b'+' => out.push((Tok::Plus, start)),
                b'-' => out.push((Tok::Minus, start)),
                b'*' => out.push((Tok::Star, start)),
                b'\'' => out.push((Tok::Quote, start)),
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self.pos < self.src.len()
                        && (self.bytes()[self.pos].is_ascii_alphabetic() || self.bytes()[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    out.push((Tok::Ident(self.src[start..self.pos].to_string()), start));
                    after_ident = true;
                    continue;
                }
                b'0'..=b'9' if after_ident => {
                    while self.pos < self.src.len() && self.bytes()[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let site = self.src[start..self.pos]
                        .parse()
                        .or_else(|_| self.err(start, "site index too large"))?;
                    out.push((Tok::Int(site), start));
                    after_ident = false;
                    continue;
                }
                b'0'..=b'9' | b'.' => {
                    let value = self.number()?;
                    if self.pos < self.src.len() && self.bytes()[self.pos] == b'i' {
                        self.pos += 1;
                        out.push((Tok::Imag(value), start));
                    } else {
                        out.push((Tok::Num(value), start));
                    }
                    after_ident = false;
                    continue;
                }
                other => {
                    let ch = self.src[start..].chars().next().unwrap_or(other as char);
                    return self.err(start, format!("unexpected character `{ch}`"));
                }
            }
            self.pos += 1;
            after_ident = false;
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let b = self.bytes();
        let digits = |mut p: usize| {
            while p < b.len() && b[p].is_ascii_digit() {
                p += 1;
            }
            p
        };
        let mut p = digits(self.pos);
        if p < b.len() && b[p] == b'.' {
            p = digits(p + 1);
        }
        if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
            let mut q = p + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            let end = digits(q);
            if end == q {
                return self.err(p, "exponent without digits");
            }
            p = end;
        }
        let text = &self.src[start..p];
        let value: f64 = text
            .parse()
            .or_else(|_| self.err(start, format!("malformed number `{text}`")))?;
        self.pos = p;
        Ok(value)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, o)| o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        if self.toks.is_empty() {
            return self.err("empty expression");
        }
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -1.0
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        loop {
            let mut term = self.term()?;
            term.coeff *= sign;
            terms.push(term);
            match self.peek() {
                None => break,
                Some(Tok::Plus) => sign = 1.0,
                Some(Tok::Minus) => sign = -1.0,
                Some(_) => return self.err("expected `+`, `-`, `*` or end of expression"),
            }
            self.pos += 1;
        }
        Ok(Expr { terms })
    }

    fn term(&mut self) -> Result<Term> {
        let (coeff, mut factors) = match self.peek() {
            Some(Tok::Num(_)) | Some(Tok::Imag(_)) => (self.coeff()?, Vec::new()),
            Some(Tok::Ident(_)) => (c(1.0, 0.0), vec![self.factor()?]),
            Some(_) => return self.err("expected a coefficient or an operator name"),
            None => return self.err("unexpected end of expression"),
        };
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(Term { coeff, factors })
    }

    fn coeff(&mut self) -> Result<C64> {
        match self.peek().cloned() {
            Some(Tok::Imag(im)) => {
                self.pos += 1;
                Ok(c(0.0, im))
            }
            Some(Tok::Num(re)) => {
                self.pos += 1;
                // Greedy complex literal: `re ± im i`.
                if let (Some(op @ (Tok::Plus | Tok::Minus)), Some(Tok::Imag(im))) =
                    (self.peek().cloned(), self.peek_at(1).cloned())
                {
                    self.pos += 2;
                    let im = if op == Tok::Minus { -im } else { im };
                    return Ok(c(re, im));
                }
                Ok(c(re, 0.0))
            }
            _ => self.err("expected a number"),
        }
    }

    fn factor(&mut self) -> Result<Factor> {
        let offset = self.offset();
        let name = match self.peek().cloned() {
            Some(Tok::Ident(name)) => name,
            Some(_) => return self.err("expected an operator name"),
            None => return self.err("unexpected end of expression after `*`"),
        };
        let symbol = Symbol::from_name(&name).ok_or_else(|| {
            Error::Semantic(format!(
                "unknown operator `{name}` at byte {offset} (expected one of a, n, sx, sy, sz, sp, sm, id)"
            ))
        })?;
        self.pos += 1;
        let site = match self.peek() {
            Some(&Tok::Int(s)) => {
                self.pos += 1;
                Some(s)
            }
            _ => None,
        };
        let dagger = if let Some(Tok::Quote) = self.peek() {
            self.pos += 1;
            true
        } else {
            false
        };
        Ok(Factor { symbol, site, dagger, offset })
    }
}

/// Parses an expression without binding it to a space.
pub fn parse_expression(src: &str) -> Result<Expr> {
    let toks = Lexer { src, pos: 0 }.tokens()?;
    Parser { toks, pos: 0, end: src.len() }.expr()
}

/// Parses `src` and builds the operator it denotes on `space`.
pub fn parse_operator_expression(src: &str, space: &HilbertSpace) -> Result<Operator> {
    parse_expression(src)?.to_operator(space)
}
