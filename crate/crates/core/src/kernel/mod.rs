//! Exact scalar arithmetic: rational functions over the integers in
//! declared symbols, with differentiation, substitution and a canonical
//! normal form (so zero-testing is structural).

mod expr;
mod poly;
mod symbol;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use expr::{Assumptions, ExprDisplay, ScalarExpr};
pub use poly::{Monomial, Poly};
pub use symbol::{is_identifier, Symbol, SymbolKind, SymbolTable, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("`{name}` is already declared as a {existing}")]
    ReservedName { name: String, existing: SymbolKind },
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("division by the zero function")]
    DivisionByZero,
    #[error("expression is singular at the requested point")]
    DegeneratePoint,
    #[error("evaluation point does not assign every symbol")]
    UnassignedSymbol,
    #[error("exponent {0} is out of range")]
    ExponentTooLarge(i64),
}

/// Coefficient field used by jet computations: exact rationals at a point,
/// or rational functions when working symbolically.
pub trait Field: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_bigint(n: BigInt) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_bigint(n: BigInt) -> Self {
        BigRational::from_integer(n)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Field for ScalarExpr {
    fn zero() -> Self {
        ScalarExpr::zero()
    }
    fn one() -> Self {
        ScalarExpr::one()
    }
    fn is_zero(&self) -> bool {
        ScalarExpr::is_zero(self)
    }
    fn from_bigint(n: BigInt) -> Self {
        ScalarExpr::from_bigint(n)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table() -> (SymbolTable, Var, Var) {
        let t = SymbolTable::declare_all([("x", SymbolKind::SourceCoordinate), ("y", SymbolKind::SourceCoordinate)])
            .unwrap();
        let (x, y) = (t.lookup("x").unwrap(), t.lookup("y").unwrap());
        (t, x, y)
    }

    #[test]
    fn cancellation_and_unique_zero() {
        let (_, x, y) = table();
        let (x, y) = (ScalarExpr::var(x), ScalarExpr::var(y));
        assert_eq!(x.checked_div(&x).unwrap(), ScalarExpr::one());
        let z = &(&x * &y) - &(&y * &x);
        assert_eq!(z, ScalarExpr::zero());
        assert!(z.is_zero());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let (_, x, _) = table();
        let x = ScalarExpr::var(x);
        assert_eq!(x.checked_div(&ScalarExpr::zero()), Err(KernelError::DivisionByZero));
        let x_minus_x = &x - &x;
        assert_eq!(x.checked_div(&x_minus_x), Err(KernelError::DivisionByZero));
    }

    #[test]
    fn division_records_nonconstant_divisor() {
        let (t, x, _) = table();
        let xe = ScalarExpr::var(x);
        let mut ledger = Assumptions::new();
        let q = ScalarExpr::one().div_recording(&xe, &mut ledger).unwrap();
        assert_eq!(q.display(&t).to_string(), "1/x");
        assert!(ledger.contains(&xe));
        ScalarExpr::one()
            .div_recording(&ScalarExpr::int(3), &mut ledger)
            .unwrap();
        assert_eq!(ledger.len(), 1);
    }

    #[test]
    fn derivatives() {
        let (t, x, y) = table();
        let (xe, ye) = (ScalarExpr::var(x), ScalarExpr::var(y));
        assert_eq!((&xe * &ye).diff(x), ye);
        let q = &ye / &xe;
        assert_eq!(q.diff(x).display(&t).to_string(), "-y/x^2");
        assert_eq!(q.diff(y).display(&t).to_string(), "1/x");
        assert_eq!(ScalarExpr::int(7).diff(x), ScalarExpr::zero());
    }

    #[test]
    fn substitution_and_evaluation() {
        let mut t = SymbolTable::new();
        let x = t.declare("x", SymbolKind::SourceCoordinate).unwrap();
        let y = t.declare("y", SymbolKind::SourceCoordinate).unwrap();
        let cx = t.declare("X", SymbolKind::TargetCoordinate).unwrap();
        let e = &ScalarExpr::var(x) * &ScalarExpr::var(y);
        let lifted = e.substitute(&BTreeMap::from([(x, ScalarExpr::var(cx))])).unwrap();
        assert_eq!(lifted.display(&t).to_string(), "y*X");
        assert_eq!(e.substitute(&BTreeMap::new()).unwrap(), e);

        let q = &ScalarExpr::var(y) / &ScalarExpr::var(x);
        let point = BTreeMap::from([
            (x, BigRational::from_integer(1.into())),
            (y, BigRational::from_integer(2.into())),
        ]);
        assert_eq!(q.evaluate(&point).unwrap(), BigRational::from_integer(2.into()));
        let pole = BTreeMap::from([
            (x, BigRational::from_integer(0.into())),
            (y, BigRational::from_integer(2.into())),
        ]);
        assert_eq!(q.evaluate(&pole), Err(KernelError::DegeneratePoint));
    }

    #[test]
    fn display_parenthesizes_compound_parts() {
        let (t, x, y) = table();
        let (xe, ye) = (ScalarExpr::var(x), ScalarExpr::var(y));
        let e = &(&xe + &ScalarExpr::one()) / &(&ScalarExpr::int(2) * &ye);
        assert_eq!(e.display(&t).to_string(), "(x + 1)/(2*y)");
        assert_eq!((&xe / &ScalarExpr::int(-2)).display(&t).to_string(), "-x/2");
    }

    #[test]
    fn negative_power() {
        let (t, x, _) = table();
        let e = ScalarExpr::var(x).pow(-2).unwrap();
        assert_eq!(e.display(&t).to_string(), "1/x^2");
        assert_eq!(e.latex(&t), "\\frac{1}{x^{2}}");
    }
}
