//! Expression grammar shared by every text format:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= '-'? primary
//! primary := integer | identifier | '(' expr ')'
//! ```
//!
//! Whitespace is ignored. `^` binds tightest and takes an integer exponent;
//! formats that use `^` for the wedge product resolve `name^name` through
//! [`Resolve::wedge`].

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::kernel::{Assumptions, KernelError, ScalarExpr, SymbolTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("function application `{0}(...)` is not supported; only rational expressions are accepted")]
    FunctionCall(String),
    #[error("exponent must be an integer constant")]
    NonIntegerExponent,
    #[error("nonlinear term: product of two basis quantities")]
    Nonlinear,
    #[error("cannot divide by an expression containing basis quantities")]
    DivideByBasis,
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError { pos, kind }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Caret => f.write_str("^"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

fn tokenize(src: &str, origin: Pos) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut pos = origin;
    let advance = |pos: &mut Pos, c: char| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let start = pos;
        if c.is_whitespace() {
            advance(&mut pos, c);
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance(&mut pos, chars[i]);
                i += 1;
            }
            out.push((Tok::Int(s.parse().expect("digits")), start));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(&mut pos, chars[i]);
                i += 1;
            }
            out.push((Tok::Ident(s), start));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => return Err(ParseError::new(start, ParseErrorKind::UnexpectedChar(other))),
        };
        out.push((tok, start));
        advance(&mut pos, c);
        i += 1;
    }
    Ok(out)
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Int(BigInt),
    Ident(String, Pos),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>, Pos),
    Pow(Box<Ast>, Box<Ast>, Pos),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    let pos = self.pos();
                    self.bump();
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?), pos);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            let pos = self.pos();
            self.bump();
            let exponent = if self.peek() == Some(&Tok::Minus) {
                self.bump();
                Ast::Neg(Box::new(self.primary()?))
            } else {
                self.primary()?
            };
            return Ok(Ast::Pow(Box::new(base), Box::new(exponent), pos));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::Int(n), _)) => Ok(Ast::Int(n)),
            Some((Tok::Ident(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    return Err(ParseError::new(pos, ParseErrorKind::FunctionCall(name)));
                }
                Ok(Ast::Ident(name, pos))
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    Some((t, p)) => Err(ParseError::new(p, ParseErrorKind::UnexpectedToken(t.to_string()))),
                    None => Err(ParseError::new(self.end, ParseErrorKind::UnexpectedEnd)),
                }
            }
            Some((t, p)) => Err(ParseError::new(p, ParseErrorKind::UnexpectedToken(t.to_string()))),
            None => Err(ParseError::new(self.end, ParseErrorKind::UnexpectedEnd)),
        }
    }
}

/// Parses a complete expression. `origin` is the position of the first
/// character of `src` within its file, for diagnostics.
pub fn parse_expr_at(src: &str, origin: Pos) -> Result<Ast, ParseError> {
    let toks = tokenize(src, origin)?;
    let end = Pos {
        line: origin.line,
        col: origin.col + src.chars().count(),
    };
    let mut p = Parser { toks, i: 0, end };
    let ast = p.expr()?;
    if let Some((t, pos)) = p.bump() {
        return Err(ParseError::new(pos, ParseErrorKind::UnexpectedToken(t.to_string())));
    }
    Ok(ast)
}

pub fn parse_expr(src: &str) -> Result<Ast, ParseError> {
    parse_expr_at(src, Pos { line: 1, col: 1 })
}

/// Affine combination `scalar + sum_k coeff_k * k` over basis keys `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linear<K: Ord> {
    pub scalar: ScalarExpr,
    pub terms: BTreeMap<K, ScalarExpr>,
}

impl<K: Ord + Clone> Linear<K> {
    pub fn scalar(s: ScalarExpr) -> Self {
        Linear {
            scalar: s,
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(k: K) -> Self {
        Linear {
            scalar: ScalarExpr::zero(),
            terms: BTreeMap::from([(k, ScalarExpr::one())]),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(mut self, other: Linear<K>, sign: bool) -> Self {
        self.scalar = if sign {
            &self.scalar - &other.scalar
        } else {
            &self.scalar + &other.scalar
        };
        for (k, c) in other.terms {
            let entry = self.terms.entry(k.clone()).or_insert_with(ScalarExpr::zero);
            *entry = if sign { &*entry - &c } else { &*entry + &c };
            if entry.is_zero() {
                self.terms.remove(&k);
            }
        }
        self
    }

    fn scale(self, s: &ScalarExpr) -> Self {
        if s.is_zero() {
            return Linear::scalar(ScalarExpr::zero());
        }
        Linear {
            scalar: &self.scalar * s,
            terms: self.terms.into_iter().map(|(k, c)| (k, &c * s)).collect(),
        }
    }
}

/// Maps identifiers (and optionally `a^b` wedge products) to values.
pub trait Resolve {
    type Key: Ord + Clone;

    fn ident(&self, name: &str) -> Option<Linear<Self::Key>>;

    fn wedge(&self, _lhs: &str, _rhs: &str) -> Option<Linear<Self::Key>> {
        None
    }
}

/// Evaluates an AST to an affine combination, rejecting products of two
/// basis quantities. Non-constant divisors are recorded in `ledger`.
pub fn eval_linear<R: Resolve>(
    ast: &Ast,
    resolver: &R,
    ledger: &mut Assumptions,
) -> Result<Linear<R::Key>, ParseError> {
    let here = |ast: &Ast| match ast {
        Ast::Ident(_, p) | Ast::Div(_, _, p) | Ast::Pow(_, _, p) => *p,
        _ => Pos::default(),
    };
    Ok(match ast {
        Ast::Int(n) => Linear::scalar(ScalarExpr::from_bigint(n.clone())),
        Ast::Ident(name, pos) => resolver
            .ident(name)
            .ok_or_else(|| ParseError::new(*pos, ParseErrorKind::UnknownSymbol(name.clone())))?,
        Ast::Neg(a) => eval_linear(a, resolver, ledger)?.scale(&ScalarExpr::int(-1)),
        Ast::Add(a, b) => eval_linear(a, resolver, ledger)?.add(eval_linear(b, resolver, ledger)?, false),
        Ast::Sub(a, b) => eval_linear(a, resolver, ledger)?.add(eval_linear(b, resolver, ledger)?, true),
        Ast::Mul(a, b) => {
            let (la, lb) = (eval_linear(a, resolver, ledger)?, eval_linear(b, resolver, ledger)?);
            match (la.is_scalar(), lb.is_scalar()) {
                (true, _) => lb.scale(&la.scalar),
                (_, true) => la.scale(&lb.scalar),
                _ => return Err(ParseError::new(here(b), ParseErrorKind::Nonlinear)),
            }
        }
        Ast::Div(a, b, pos) => {
            let lb = eval_linear(b, resolver, ledger)?;
            if !lb.is_scalar() {
                return Err(ParseError::new(*pos, ParseErrorKind::DivideByBasis));
            }
            let inv = ScalarExpr::one()
                .div_recording(&lb.scalar, ledger)
                .map_err(|e| ParseError::new(*pos, e.into()))?;
            eval_linear(a, resolver, ledger)?.scale(&inv)
        }
        Ast::Pow(base, exponent, pos) => {
            if let (Ast::Ident(l, _), Ast::Ident(r, _)) = (base.as_ref(), exponent.as_ref()) {
                if let Some(w) = resolver.wedge(l, r) {
                    return Ok(w);
                }
            }
            let e = eval_linear(exponent, resolver, ledger)?;
            let e = e
                .scalar
                .to_rational()
                .filter(|r| e.terms.is_empty() && r.is_integer())
                .and_then(|r| r.to_integer().to_i64())
                .ok_or_else(|| ParseError::new(*pos, ParseErrorKind::NonIntegerExponent))?;
            let lb = eval_linear(base, resolver, ledger)?;
            if lb.is_scalar() {
                if e < 0 {
                    ledger.record(&lb.scalar);
                }
                let v = lb.scalar.pow(e).map_err(|k| ParseError::new(*pos, k.into()))?;
                Linear::scalar(v)
            } else if e == 1 {
                lb
            } else {
                return Err(ParseError::new(*pos, ParseErrorKind::Nonlinear));
            }
        }
    })
}

/// Resolver that accepts only declared kernel symbols.
pub struct ScalarResolver<'a>(pub &'a SymbolTable);

impl Resolve for ScalarResolver<'_> {
    type Key = ();

    fn ident(&self, name: &str) -> Option<Linear<()>> {
        self.0.lookup(name).map(|v| Linear::scalar(ScalarExpr::var(v)))
    }
}

/// Parses a rational expression in the declared symbols of `table`.
pub fn parse_scalar(src: &str, table: &SymbolTable) -> Result<ScalarExpr, ParseError> {
    let ast = parse_expr(src)?;
    let mut ledger = Assumptions::new();
    let l = eval_linear(&ast, &ScalarResolver(table), &mut ledger)?;
    debug_assert!(l.terms.is_empty());
    Ok(l.scalar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SymbolKind;

    fn table() -> SymbolTable {
        SymbolTable::declare_all([("x", SymbolKind::SourceCoordinate), ("y", SymbolKind::SourceCoordinate)]).unwrap()
    }

    #[test]
    fn precedence_and_unary_minus() {
        let t = table();
        let e = parse_scalar("-x^2 + 2*x*y - y/x", &t).unwrap();
        assert_eq!(e.display(&t).to_string(), "(-x^3 + 2*x^2*y - y)/x");
        let e = parse_scalar("( x + y ) ^ 2 - x^2 - y^2", &t).unwrap();
        assert_eq!(e.display(&t).to_string(), "2*x*y");
        assert_eq!(parse_scalar("x^-1", &t).unwrap().display(&t).to_string(), "1/x");
        assert_eq!(parse_scalar("2/4*x", &t).unwrap().display(&t).to_string(), "x/2");
    }

    #[test]
    fn display_round_trips_through_parser() {
        let t = table();
        for src in ["(x + 1)/(2*y)", "-y/x^2", "x*y - 3", "1/(x*y + 1)", "-7/3"] {
            let e = parse_scalar(src, &t).unwrap();
            let again = parse_scalar(&e.display(&t).to_string(), &t).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        let t = table();
        let err = parse_scalar("x + q", &t).unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 5 });
        assert_eq!(err.kind, ParseErrorKind::UnknownSymbol("q".into()));
        let err = parse_scalar("x^y", &t).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonIntegerExponent);
        let err = parse_scalar("log(x)", &t).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::FunctionCall(ref f) if f == "log"));
        let err = parse_scalar("x / (y - y)", &t).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Kernel(KernelError::DivisionByZero));
        assert!(parse_scalar("(x + 1", &t).is_err());
        assert!(parse_scalar("x $ y", &t).is_err());
    }
}
