//! Row reduction over the rational-function field.
//!
//! Rows are sparse maps from ordered column keys to coefficients. The pivot
//! of a row is its greatest key; stored rows are normalized (pivot
//! coefficient 1) and fully reduced against each other, so the result is the
//! unique reduced echelon form for the column order.

use std::collections::BTreeMap;

use crate::kernel::{Assumptions, KernelError, ScalarExpr};

pub type Row<K> = BTreeMap<K, ScalarExpr>;

fn axpy<K: Ord + Clone>(row: &mut Row<K>, s: &ScalarExpr, other: &Row<K>) {
    for (k, c) in other {
        let v = match row.get(k) {
            Some(e) => e + &(s * c),
            None => s * c,
        };
        if v.is_zero() {
            row.remove(k);
        } else {
            row.insert(k.clone(), v);
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Echelon<K: Ord> {
    rows: BTreeMap<K, Row<K>>,
    assumptions: Assumptions,
}

impl<K: Ord + Clone> Echelon<K> {
    pub fn new() -> Self {
        Echelon {
            rows: BTreeMap::new(),
            assumptions: Assumptions::new(),
        }
    }

    /// Pivot key to normalized row (the row includes its pivot with coefficient 1).
    pub fn rows(&self) -> &BTreeMap<K, Row<K>> {
        &self.rows
    }

    pub fn assumptions(&self) -> &Assumptions {
        &self.assumptions
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, k: &K) -> bool {
        self.rows.contains_key(k)
    }

    /// Remainder of `row` after eliminating every pivot column.
    pub fn reduce(&self, row: &Row<K>) -> Row<K> {
        let mut r = row.clone();
        // pivot rows are fully reduced, so one sweep suffices
        for (p, prow) in &self.rows {
            if let Some(c) = r.get(p).cloned() {
                axpy(&mut r, &-c, prow);
            }
        }
        r
    }

    /// Adds a row; returns the new pivot, or `None` if it was dependent.
    pub fn insert(&mut self, row: &Row<K>) -> Result<Option<K>, KernelError> {
        let mut r = self.reduce(row);
        let Some((p, c)) = r.iter().next_back().map(|(k, c)| (k.clone(), c.clone())) else {
            return Ok(None);
        };
        if !c.is_one() {
            let inv = ScalarExpr::one().div_recording(&c, &mut self.assumptions)?;
            for v in r.values_mut() {
                *v = &*v * &inv;
            }
        }
        for prow in self.rows.values_mut() {
            if let Some(e) = prow.get(&p).cloned() {
                axpy(prow, &-e, &r);
            }
        }
        self.rows.insert(p.clone(), r);
        Ok(Some(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{SymbolKind, SymbolTable};

    fn row(v: &[(u32, ScalarExpr)]) -> Row<u32> {
        v.iter().cloned().collect()
    }

    #[test]
    fn reduced_form_is_order_independent() {
        let t = SymbolTable::declare_all([("x", SymbolKind::SourceCoordinate)]).unwrap();
        let x = ScalarExpr::var(t.lookup("x").unwrap());
        let a = row(&[(0, ScalarExpr::one()), (2, x.clone())]);
        let b = row(&[(1, ScalarExpr::int(2)), (2, ScalarExpr::one())]);
        let c = row(&[(0, ScalarExpr::int(3)), (1, ScalarExpr::one())]);
        let mut e1 = Echelon::new();
        let mut e2 = Echelon::new();
        for r in [&a, &b, &c] {
            e1.insert(r).unwrap();
        }
        for r in [&c, &a, &b] {
            e2.insert(r).unwrap();
        }
        assert_eq!(e1.rows(), e2.rows());
        assert_eq!(e1.rank(), 3);
        assert!(e1.assumptions().iter().all(|a| !a.is_constant()));
        assert_eq!(e1.insert(&a).unwrap(), None);
    }

    #[test]
    fn dependent_row_reduces_to_zero() {
        let mut e = Echelon::new();
        e.insert(&row(&[(0, ScalarExpr::one()), (1, ScalarExpr::int(2))]))
            .unwrap();
        let r = e.reduce(&row(&[(0, ScalarExpr::int(-3)), (1, ScalarExpr::int(-6))]));
        assert!(r.is_empty());
    }
}
