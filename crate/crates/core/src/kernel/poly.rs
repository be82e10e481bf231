//! Sparse distributed multivariate polynomials over the integers.
//!
//! Terms are kept sorted in descending graded-lexicographic order, where the
//! lexicographic tie-break follows symbol declaration order (symbol 0 is the
//! most significant variable). Zero coefficients are never stored, so two
//! equal polynomials are structurally identical.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::symbol::Var;

/// Exponent vector indexed by symbol id, trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, exp: u32) -> Self {
        let mut e = vec![0; v.index() + 1];
        e[v.index()] = exp;
        Monomial(e).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exp(&self, v: Var) -> u32 {
        self.0.get(v.index()).copied().unwrap_or(0)
    }

    /// Nonzero `(symbol, exponent)` pairs in declaration order.
    pub fn factors(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(i, e)| (Var::new(i), *e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let e = (0..n)
            .map(|i| self.0.get(i).unwrap_or(&0) + other.0.get(i).unwrap_or(&0))
            .collect();
        Monomial(e)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, e)| *e <= other.0.get(i).copied().unwrap_or(0))
    }

    /// `other / self`; caller guarantees `self.divides(other)`.
    fn quotient_of(&self, other: &Monomial) -> Monomial {
        let e = other
            .0
            .iter()
            .enumerate()
            .map(|(i, e)| e - self.0.get(i).copied().unwrap_or(0))
            .collect();
        Monomial(e).trimmed()
    }

    fn without(&self, v: Var) -> Monomial {
        let mut e = self.0.clone();
        if let Some(x) = e.get_mut(v.index()) {
            *x = 0;
        }
        Monomial(e).trimmed()
    }

    fn lowest_var(&self) -> Option<Var> {
        self.0.iter().position(|e| *e > 0).map(Var::new)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let n = self.0.len().max(other.0.len());
            for i in 0..n {
                let a = self.0.get(i).copied().unwrap_or(0);
                let b = other.0.get(i).copied().unwrap_or(0);
                match a.cmp(&b) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `Z[symbols]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Poly {
    // descending monomial order, no zero coefficients
    terms: Vec<(Monomial, BigInt)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    pub fn var(v: Var) -> Self {
        Poly {
            terms: vec![(Monomial::var(v, 1), BigInt::one())],
        }
    }

    pub fn monomial(m: Monomial, c: BigInt) -> Self {
        Poly::constant(c).mul_monomial(&m)
    }

    fn from_map(map: BTreeMap<Monomial, BigInt>) -> Self {
        let terms = map.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect();
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Monomial, BigInt)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_one())
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        match self.terms.as_slice() {
            [] => Some(BigInt::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<&(Monomial, BigInt)> {
        self.terms.first()
    }

    pub fn leading_coeff_sign_negative(&self) -> bool {
        self.terms.first().is_some_and(|(_, c)| c.is_negative())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    /// Symbols with a positive exponent somewhere in the polynomial.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen: Vec<Var> = Vec::new();
        for (m, _) in &self.terms {
            for (v, _) in m.factors() {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen.sort();
        seen
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.combine(other, true)
    }

    fn combine(&self, other: &Poly, subtract: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let ord = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Greater,
                (None, Some(_)) => Ordering::Less,
                (None, None) => unreachable!(),
            };
            match ord {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let (m, c) = &other.terms[j];
                    out.push((m.clone(), if subtract { -c } else { c.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if subtract {
                        &self.terms[i].1 - &other.terms[j].1
                    } else {
                        &self.terms[i].1 + &other.terms[j].1
                    };
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        Poly::from_map(acc)
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        if d.terms.len() == 1 && dm.is_one() && dc.is_one() {
            return Some(self.clone());
        }
        let mut quotient: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        let mut rem = self.clone();
        while let Some((rm, rc)) = rem.leading().cloned() {
            if !dm.divides(&rm) {
                return None;
            }
            let (q, r) = rc.div_rem(dc);
            if !r.is_zero() {
                return None;
            }
            let qm = dm.quotient_of(&rm);
            rem = rem.sub(&d.mul_monomial(&qm).scale(&q));
            quotient.insert(qm, q);
        }
        Some(Poly::from_map(quotient))
    }

    /// Divides every coefficient by `c`, which must divide them all.
    fn scale_down(&self, c: &BigInt) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k / c)).collect(),
        }
    }

    /// Integer content (gcd of coefficients, positive).
    pub fn integer_content(&self) -> BigInt {
        self.terms.iter().fold(BigInt::zero(), |g, (_, c)| g.gcd(c))
    }

    pub fn diff(&self, v: Var) -> Poly {
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[v.index()] -= 1;
            let nm = Monomial(exps).trimmed();
            *acc.entry(nm).or_insert_with(BigInt::zero) += c * BigInt::from(e);
        }
        Poly::from_map(acc)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    /// Coefficients with respect to `v`: entry `k` multiplies `v^k`.
    fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let deg = self.degree_in(v) as usize;
        let mut maps: Vec<BTreeMap<Monomial, BigInt>> = vec![BTreeMap::new(); deg + 1];
        for (m, c) in &self.terms {
            maps[m.exp(v) as usize].insert(m.without(v), c.clone());
        }
        maps.into_iter().map(Poly::from_map).collect()
    }

    fn leading_coeff_in(&self, v: Var) -> Poly {
        self.coeffs_in(v).pop().unwrap_or_else(Poly::zero)
    }

    fn lowest_var(&self) -> Option<Var> {
        self.terms.iter().filter_map(|(m, _)| m.lowest_var()).min()
    }

    /// Sign-normalized copy: leading coefficient positive.
    pub fn sign_normalized(&self) -> Poly {
        if self.leading_coeff_sign_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Greatest common divisor in `Z[symbols]`, with positive leading
    /// coefficient. `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.sign_normalized();
        }
        if other.is_zero() || self.is_one() {
            return if other.is_zero() {
                self.sign_normalized()
            } else {
                Poly::one()
            };
        }
        if other.is_one() {
            return Poly::one();
        }
        match heuristic_gcd(self, other) {
            Some(g) => g.sign_normalized(),
            None => self.prs_gcd(other),
        }
    }

    /// Gcd by primitive pseudo-remainder sequences, recursively on contents.
    fn prs_gcd(&self, other: &Poly) -> Poly {
        let v = match (self.lowest_var(), other.lowest_var()) {
            (None, None) => {
                let a = self.constant_value().unwrap_or_default();
                let b = other.constant_value().unwrap_or_default();
                return Poly::constant(a.gcd(&b));
            }
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
        };
        let ca = self.content_in(v);
        let cb = other.content_in(v);
        let content = ca.gcd(&cb);
        let pa = self.div_exact(&ca).expect("content divides");
        let pb = other.div_exact(&cb).expect("content divides");
        let prim = primitive_prs(pa, pb, v);
        content.mul(&prim).sign_normalized()
    }

    /// Gcd of the coefficients of `self` viewed as a polynomial in `v`.
    fn content_in(&self, v: Var) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(v) {
            if c.is_zero() {
                continue;
            }
            g = g.gcd(&c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn primitive_part_in(&self, v: Var) -> Poly {
        let c = self.content_in(v);
        self.div_exact(&c).expect("content divides").sign_normalized()
    }
}

fn max_norm(p: &Poly) -> BigInt {
    p.terms.iter().map(|(_, c)| c.abs()).max().unwrap_or_default()
}

/// `p` with `v` replaced by the integer `xi`.
fn evaluate_at(p: &Poly, v: Var, xi: &BigInt) -> Poly {
    let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
    for (m, c) in &p.terms {
        *map.entry(m.without(v)).or_default() += c * num_traits::pow(xi.clone(), m.exp(v) as usize);
    }
    Poly::from_map(map)
}

/// Inverse of [`evaluate_at`] for small coefficients: expands every
/// integer coefficient of `g` in balanced base `xi` as a polynomial in `v`.
fn xi_adic_lift(g: &Poly, v: Var, xi: &BigInt) -> Poly {
    let half = xi / 2;
    let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
    for (m, c) in &g.terms {
        let mut c = c.clone();
        let mut e = 0;
        while !c.is_zero() {
            let mut digit = c.mod_floor(xi);
            if digit > half {
                digit -= xi;
            }
            if !digit.is_zero() {
                map.insert(m.mul(&Monomial::var(v, e)), digit.clone());
            }
            c = (c - digit) / xi;
            e += 1;
        }
    }
    Poly::from_map(map)
}

/// Heuristic gcd: evaluate one variable at a large integer, take the gcd
/// of the images recursively, lift the result back and keep it only if it
/// divides both inputs (which makes it the gcd). `None` when the heuristic
/// gives up.
fn heuristic_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    if a.is_zero() || b.is_zero() {
        return None;
    }
    let (ca, cb) = (a.integer_content(), b.integer_content());
    let content = ca.gcd(&cb);
    if a.is_constant() || b.is_constant() {
        return Some(Poly::constant(content));
    }
    let a = a.scale_down(&ca);
    let b = b.scale_down(&cb);
    let v = *a.vars().iter().chain(b.vars().iter()).max()?;
    let degree = a.degree_in(v).max(b.degree_in(v)) as u64;
    let mut xi: BigInt = max_norm(&a).min(max_norm(&b)) * 2 + 29;
    for _ in 0..6 {
        if xi.bits() * degree > 6000 {
            return None;
        }
        let (ea, eb) = (evaluate_at(&a, v, &xi), evaluate_at(&b, v, &xi));
        if !ea.is_zero() && !eb.is_zero() {
            let image = heuristic_gcd(&ea, &eb)?;
            let lifted = xi_adic_lift(&image, v, &xi);
            if !lifted.is_zero() {
                let g = lifted.scale_down(&lifted.integer_content());
                if a.div_exact(&g).is_some() && b.div_exact(&g).is_some() {
                    return Some(g.scale(&content));
                }
            }
        }
        xi = xi * 73794 / 27011;
    }
    None
}

/// Pseudo-remainder of `a` by `b` with respect to `v`.
fn pseudo_remainder(a: &Poly, b: &Poly, v: Var) -> Poly {
    let db = b.degree_in(v);
    let lb = b.leading_coeff_in(v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = r.leading_coeff_in(v);
        let shift = Poly::monomial(Monomial::var(v, dr - db), BigInt::one());
        r = lb.mul(&r).sub(&lr.mul(&shift).mul(b));
    }
    r
}

/// Gcd of two polynomials that are primitive with respect to `v`.
fn primitive_prs(a: Poly, b: Poly, v: Var) -> Poly {
    let (mut a, mut b) = if a.degree_in(v) >= b.degree_in(v) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        if b.is_zero() {
            return a.primitive_part_in(v);
        }
        if b.degree_in(v) == 0 {
            return Poly::one();
        }
        let r = pseudo_remainder(&a, &b, v);
        a = b;
        b = if r.is_zero() { r } else { r.primitive_part_in(v) };
    }
}
