use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{Monomial, Poly};
use super::symbol::{SymbolTable, Var};
use super::KernelError;

/// Exact rational function `numerator / denominator` over the integers.
///
/// Canonical form: numerator and denominator are coprime in `Z[symbols]` and
/// the denominator has a positive leading coefficient. Zero is `0 / 1`.
/// Structural equality is therefore value equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ScalarExpr {
    num: Poly,
    den: Poly,
}

impl Default for ScalarExpr {
    fn default() -> Self {
        ScalarExpr::zero()
    }
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        ScalarExpr::int(1)
    }

    pub fn int(n: i64) -> Self {
        ScalarExpr::from_bigint(BigInt::from(n))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        ScalarExpr {
            num: Poly::constant(n),
            den: Poly::one(),
        }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        ScalarExpr::from_parts(Poly::constant(r.numer().clone()), Poly::constant(r.denom().clone()))
            .expect("rational denominators are nonzero")
    }

    pub fn var(v: Var) -> Self {
        ScalarExpr {
            num: Poly::var(v),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        ScalarExpr {
            num: p,
            den: Poly::one(),
        }
    }

    /// Builds a canonical quotient; fails when `den` is the zero polynomial.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Self, KernelError> {
        if den.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return ScalarExpr::zero();
        }
        if den.is_one() {
            return ScalarExpr { num, den };
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        if den.leading_coeff_sign_negative() {
            num = num.neg();
            den = den.neg();
        }
        ScalarExpr { num, den }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(BigRational::new(n, d))
    }

    /// True when the value is "visibly negative": leading numerator
    /// coefficient below zero. Used for sign-aware rendering only.
    pub fn is_negative_leading(&self) -> bool {
        self.num.leading_coeff_sign_negative()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.num.vars().into_iter().chain(self.den.vars()).collect()
    }

    pub fn checked_div(&self, rhs: &ScalarExpr) -> Result<ScalarExpr, KernelError> {
        if rhs.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        Ok(Self::normalize(self.num.mul(&rhs.den), self.den.mul(&rhs.num)))
    }

    /// Division that records the divisor in `ledger` when it is not constant.
    pub fn div_recording(&self, rhs: &ScalarExpr, ledger: &mut Assumptions) -> Result<ScalarExpr, KernelError> {
        let q = self.checked_div(rhs)?;
        ledger.record(rhs);
        Ok(q)
    }

    pub fn recip(&self) -> Result<ScalarExpr, KernelError> {
        ScalarExpr::one().checked_div(self)
    }

    pub fn pow(&self, e: i64) -> Result<ScalarExpr, KernelError> {
        if e < 0 {
            return self.recip()?.pow(-e);
        }
        let e = u32::try_from(e).map_err(|_| KernelError::ExponentTooLarge(e))?;
        Ok(ScalarExpr {
            num: self.num.pow(e),
            den: self.den.pow(e),
        })
    }

    pub fn diff(&self, v: Var) -> ScalarExpr {
        let dn = self.num.diff(v);
        if self.den.is_constant() {
            return Self::normalize(dn, self.den.clone());
        }
        let dd = self.den.diff(v);
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::normalize(num, self.den.mul(&self.den))
    }

    /// Simultaneous substitution `v -> map[v]`; unmapped symbols stay put.
    pub fn substitute(&self, map: &BTreeMap<Var, ScalarExpr>) -> Result<ScalarExpr, KernelError> {
        let num = substitute_poly(&self.num, map);
        let den = substitute_poly(&self.den, map);
        if den.is_zero() {
            return Err(KernelError::DegeneratePoint);
        }
        num.checked_div(&den)
    }

    /// Numeric value at a point assigning every symbol that occurs.
    pub fn evaluate(&self, point: &BTreeMap<Var, BigRational>) -> Result<BigRational, KernelError> {
        let map: BTreeMap<Var, ScalarExpr> = point.iter().map(|(v, r)| (*v, ScalarExpr::from_rational(r))).collect();
        let value = self.substitute(&map)?;
        value.to_rational().ok_or(KernelError::UnassignedSymbol)
    }

    /// Polynomial that must not vanish for a division by `self` to be
    /// legal: the numerator with integer content and sign removed.
    /// Constants yield `None`.
    pub fn nonvanishing_factor(&self) -> Option<ScalarExpr> {
        if self.num.is_constant() {
            return None;
        }
        let content = self.num.integer_content();
        let p = self
            .num
            .div_exact(&Poly::constant(content))
            .expect("content divides")
            .sign_normalized();
        Some(ScalarExpr::from_poly(p))
    }

    pub fn display<'a>(&'a self, table: &'a SymbolTable) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, table }
    }

    /// Number of additive terms in the numerator (for parenthesization).
    pub fn is_sum(&self) -> bool {
        self.den.is_one() && self.num.terms().len() > 1
    }

    pub fn latex(&self, table: &SymbolTable) -> String {
        let sign = self.num.leading_coeff_sign_negative() && self.num.terms().len() == 1;
        if self.den.is_one() {
            return poly_latex(&self.num, table);
        }
        let num = if sign {
            poly_latex(&self.num.neg(), table)
        } else {
            poly_latex(&self.num, table)
        };
        format!(
            "{}\\frac{{{}}}{{{}}}",
            if sign { "-" } else { "" },
            num,
            poly_latex(&self.den, table)
        )
    }
}

fn substitute_poly(p: &Poly, map: &BTreeMap<Var, ScalarExpr>) -> ScalarExpr {
    let mut acc = ScalarExpr::zero();
    for (m, c) in p.terms() {
        let mut term = ScalarExpr::from_bigint(c.clone());
        let mut rest = Monomial::one();
        for (v, e) in m.factors() {
            match map.get(&v) {
                Some(val) => term = &term * &val.pow(e as i64).expect("nonnegative exponent"),
                None => rest = rest.mul(&Monomial::var(v, e)),
            }
        }
        if !rest.is_one() {
            term = &term * &ScalarExpr::from_poly(Poly::monomial(rest, BigInt::one()));
        }
        acc = &acc + &term;
    }
    acc
}

/// Set of functions assumed nonvanishing (the genericity ledger).
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct Assumptions(BTreeSet<ScalarExpr>);

impl Assumptions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `divisor != 0` when the divisor is not a constant.
    pub fn record(&mut self, divisor: &ScalarExpr) {
        if let Some(f) = divisor.nonvanishing_factor() {
            self.0.insert(f);
        }
    }

    pub fn extend(&mut self, other: &Assumptions) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScalarExpr> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &ScalarExpr) -> bool {
        self.0.contains(e)
    }

    pub fn substitute(&self, map: &BTreeMap<Var, ScalarExpr>) -> Result<Assumptions, KernelError> {
        let mut out = Assumptions::new();
        for a in &self.0 {
            out.record(&a.substitute(map)?);
        }
        Ok(out)
    }

    /// Fails with `DegeneratePoint` if any assumption vanishes at `point`.
    pub fn check_point(&self, point: &BTreeMap<Var, BigRational>) -> Result<(), KernelError> {
        for a in &self.0 {
            if a.evaluate(point)?.is_zero() {
                return Err(KernelError::DegeneratePoint);
            }
        }
        Ok(())
    }
}

impl FromIterator<ScalarExpr> for Assumptions {
    fn from_iter<T: IntoIterator<Item = ScalarExpr>>(iter: T) -> Self {
        let mut a = Assumptions::new();
        for e in iter {
            a.record(&e);
        }
        a
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a ScalarExpr,
    table: &'a SymbolTable,
}

fn write_monomial(f: &mut impl fmt::Write, m: &Monomial, table: &SymbolTable, sep: &str) -> fmt::Result {
    let mut first = true;
    for (v, e) in m.factors() {
        if !first {
            f.write_str(sep)?;
        }
        first = false;
        f.write_str(table.name(v))?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

fn write_poly(f: &mut impl fmt::Write, p: &Poly, table: &SymbolTable) -> fmt::Result {
    if p.is_zero() {
        return f.write_str("0");
    }
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let abs = c.abs();
        if i == 0 {
            if c.is_negative() {
                f.write_str("-")?;
            }
        } else {
            f.write_str(if c.is_negative() { " - " } else { " + " })?;
        }
        if m.is_one() {
            write!(f, "{abs}")?;
        } else {
            if !abs.is_one() {
                write!(f, "{abs}*")?;
            }
            write_monomial(f, m, table, "*")?;
        }
    }
    Ok(())
}

/// A denominator can be written bare after `/` only if it is a single
/// factor: an integer or one symbol power with unit coefficient.
fn is_atomic_factor(p: &Poly) -> bool {
    match p.terms() {
        [(m, c)] => m.is_one() || (c.is_one() && m.factors().count() == 1),
        _ => false,
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ScalarExpr { num, den } = self.expr;
        if den.is_one() {
            return write_poly(f, num, self.table);
        }
        if num.terms().len() > 1 {
            f.write_str("(")?;
            write_poly(f, num, self.table)?;
            f.write_str(")")?;
        } else {
            write_poly(f, num, self.table)?;
        }
        f.write_str("/")?;
        if is_atomic_factor(den) {
            write_poly(f, den, self.table)
        } else {
            f.write_str("(")?;
            write_poly(f, den, self.table)?;
            f.write_str(")")
        }
    }
}

fn poly_latex(p: &Poly, table: &SymbolTable) -> String {
    let mut s = String::new();
    if p.is_zero() {
        return "0".into();
    }
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let abs = c.abs();
        if i == 0 {
            if c.is_negative() {
                s.push('-');
            }
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
        }
        if m.is_one() {
            s.push_str(&abs.to_string());
            continue;
        }
        if !abs.is_one() {
            s.push_str(&abs.to_string());
            s.push(' ');
        }
        let mut first = true;
        for (v, e) in m.factors() {
            if !first {
                s.push(' ');
            }
            first = false;
            s.push_str(table.name(v));
            if e > 1 {
                s.push_str(&format!("^{{{e}}}"));
            }
        }
    }
    s
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs)
            }
        }
        impl $tr<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                (&self).$method(rhs)
            }
        }
    };
}

fn add_impl(a: &ScalarExpr, b: &ScalarExpr, subtract: bool) -> ScalarExpr {
    let combine = |x: &Poly, y: &Poly| if subtract { x.sub(y) } else { x.add(y) };
    if a.den == b.den {
        if a.den.is_one() {
            return ScalarExpr::from_poly(combine(&a.num, &b.num));
        }
        return ScalarExpr::normalize(combine(&a.num, &b.num), a.den.clone());
    }
    let num = combine(&a.num.mul(&b.den), &b.num.mul(&a.den));
    ScalarExpr::normalize(num, a.den.mul(&b.den))
}

forward_binop!(Add, add, |a, b| add_impl(a, b, false));
forward_binop!(Sub, sub, |a, b| add_impl(a, b, true));
forward_binop!(Mul, mul, |a, b| {
    if a.is_zero() || b.is_zero() {
        return ScalarExpr::zero();
    }
    if a.den.is_one() && b.den.is_one() {
        return ScalarExpr::from_poly(a.num.mul(&b.num));
    }
    ScalarExpr::normalize(a.num.mul(&b.num), a.den.mul(&b.den))
});

/// Panics on division by zero; use [`ScalarExpr::checked_div`] for
/// fallible division.
impl Div<&ScalarExpr> for &ScalarExpr {
    type Output = ScalarExpr;
    fn div(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.checked_div(rhs).expect("division by the zero function")
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        -&self
    }
}

impl From<i64> for ScalarExpr {
    fn from(n: i64) -> Self {
        ScalarExpr::int(n)
    }
}
