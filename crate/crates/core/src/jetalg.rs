//! Truncated jets of vector fields at a base point `z0`, their Lie bracket,
//! and checks relating brackets to structure equations.
//!
//! A jet is stored through its Taylor coefficients `zeta^a_A(z0)`, i.e. as
//! `sum zeta^a_A v_a^A` with monomial fields `v_a^A = (z - z0)^A / A! d/dz^a`.
//! The bracket follows `[v, w] = v(w) - w(v)`, which on monomials gives
//!
//! ```text
//! [v_a^A, v_b^B] = C(A + B\a, A) v_b^{A + B\a} - C(B + A\b, B) v_a^{B + A\b}
//! ```
//!
//! With `(alpha ^ beta)(v, w) = alpha(v) beta(w) - alpha(w) beta(v)` and the
//! pairing `<mu^a_A, v> = zeta^a_A(z0)`, structure equations and brackets
//! are related by `(d g)(v, w) = -<g, [v, w]>`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::detsys::{DetSysError, DeterminingSystem, JetSymbol};
use crate::exterior::{GenNames, LiftedRelations, McGenerator};
use crate::kernel::{Field, KernelError, ScalarExpr, Var};
use crate::multiindex::MultiIndex;
use crate::structure::StructureEquationSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("cannot bracket jets truncated at orders {0} and {1}")]
    Truncation(u32, u32),
    #[error("jets must be known to order {needed} for this check, got order {got}")]
    TooShort { needed: u32, got: u32 },
    #[error("evaluation point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    DetSys(#[from] DetSysError),
    #[error("the solution space still has free jets of order {0}; compute at a higher order to get a finite basis")]
    NotFiniteType(u32),
    #[error("bracket of basis jets {0} and {1} leaves the span of the basis")]
    NotClosed(usize, usize),
    #[error("the equation set carries no lifted relations")]
    NoRelations,
}

#[derive(Clone, PartialEq, Eq)]
pub struct JetVectorField<K: Field = BigRational> {
    dim: usize,
    truncation: u32,
    coeffs: BTreeMap<JetSymbol, K>,
}

impl<K: Field> JetVectorField<K> {
    pub fn zero(dim: usize, truncation: u32) -> Self {
        JetVectorField {
            dim,
            truncation,
            coeffs: BTreeMap::new(),
        }
    }

    /// `v_a^A` truncated at `truncation`.
    pub fn monomial(dim: usize, a: usize, index: MultiIndex, truncation: u32) -> Self {
        let mut v = Self::zero(dim, truncation);
        v.set(&JetSymbol::new(a, index), K::one());
        v
    }

    /// Entries beyond the truncation order are ignored.
    pub fn set(&mut self, j: &JetSymbol, value: K) {
        if j.order() > self.truncation {
            return;
        }
        if value.is_zero() {
            self.coeffs.remove(j);
        } else {
            self.coeffs.insert(j.clone(), value);
        }
    }

    pub fn coeff(&self, j: &JetSymbol) -> K {
        self.coeffs.get(j).cloned().unwrap_or_else(K::zero)
    }

    /// `<mu^a_A, v>`.
    pub fn pairing(&self, g: &McGenerator) -> K {
        self.coeff(&JetSymbol::from_generator(g.clone()))
    }

    pub fn coeffs(&self) -> &BTreeMap<JetSymbol, K> {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, n: u32) -> Self {
        JetVectorField {
            dim: self.dim,
            truncation: n.min(self.truncation),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(j, _)| j.order() <= n)
                .map(|(j, c)| (j.clone(), c.clone()))
                .collect(),
        }
    }

    fn accumulate(&mut self, j: JetSymbol, c: K) {
        let v = self.coeff(&j).add(&c);
        self.set(&j, v);
    }

    /// Componentwise sum; the result keeps the smaller truncation.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(other.truncation);
        for (j, c) in &other.coeffs {
            out.accumulate(j.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &K) -> Self {
        let mut out = Self::zero(self.dim, self.truncation);
        for (j, c) in &self.coeffs {
            out.set(j, c.mul(s));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&K::one().neg()))
    }

    /// `[self, other]`, exact up to order `N - 1` for inputs known to order `N`.
    pub fn bracket(&self, other: &Self) -> Result<Self, JetError> {
        if self.truncation != other.truncation {
            return Err(JetError::Truncation(self.truncation, other.truncation));
        }
        let n = self.truncation;
        let mut out = Self::zero(self.dim, n.saturating_sub(1));
        if n == 0 {
            return Ok(out);
        }
        for (p, c) in &self.coeffs {
            for (q, d) in &other.coeffs {
                if p.order() + q.order() > n {
                    continue;
                }
                let cd = c.mul(d);
                for (w, r) in bracket_monomial(p.component(), p.index(), q.component(), q.index()) {
                    out.accumulate(r, cd.mul(&K::from_bigint(w)));
                }
            }
        }
        Ok(out)
    }

    pub fn map<L: Field>(&self, f: impl Fn(&K) -> L) -> JetVectorField<L> {
        let mut out = JetVectorField::zero(self.dim, self.truncation);
        for (j, c) in &self.coeffs {
            out.set(j, f(c));
        }
        out
    }
}

impl<K: Field> fmt::Debug for JetVectorField<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()?;
        write!(f, " (to order {})", self.truncation)
    }
}

/// `[v_a^A, v_b^B]` as at most two integer-weighted monomials.
pub fn bracket_monomial(a: usize, ai: &MultiIndex, b: usize, bi: &MultiIndex) -> Vec<(BigInt, JetSymbol)> {
    let mut out: BTreeMap<JetSymbol, BigInt> = BTreeMap::new();
    if let Some(rest) = bi.delete_one(a) {
        let c = ai.union(&rest);
        let w: BigInt = MultiIndex::multinomial(&c, ai).into();
        *out.entry(JetSymbol::new(b, c)).or_default() += w;
    }
    if let Some(rest) = ai.delete_one(b) {
        let c = bi.union(&rest);
        let w: BigInt = MultiIndex::multinomial(&c, bi).into();
        *out.entry(JetSymbol::new(a, c)).or_default() -= w;
    }
    out.into_iter()
        .filter(|(_, w)| *w != BigInt::default())
        .map(|(j, w)| (w, j))
        .collect()
}

fn point_map(vars: &[Var], point: &[BigRational]) -> Result<BTreeMap<Var, BigRational>, JetError> {
    if vars.len() != point.len() {
        return Err(JetError::PointDimension {
            expected: vars.len(),
            got: point.len(),
        });
    }
    Ok(vars.iter().copied().zip(point.iter().cloned()).collect())
}

/// Solution jets in echelon form: `jets[i]` has coordinate 1 at
/// `parametric[i]` and 0 at every other parametric jet.
#[derive(Clone, Debug)]
pub struct SolutionBasis<K: Field = BigRational> {
    pub jets: Vec<JetVectorField<K>>,
    pub parametric: Vec<JetSymbol>,
}

/// Basis of the order-`n` solution jets of `sys` at the source point `z0`.
pub fn solution_basis(
    sys: &DeterminingSystem,
    z0: &[BigRational],
    n: u32,
    cap: Option<u32>,
) -> Result<SolutionBasis, JetError> {
    let point = point_map(sys.coords(), z0)?;
    let solved = sys.solve_to_order(n, cap)?;
    let values = solved.evaluate(&point)?;
    let jets = solved
        .parametric()
        .iter()
        .map(|p| {
            let mut v = JetVectorField::zero(sys.dim(), n);
            v.set(p, BigRational::from_integer(1.into()));
            for (d, row) in &values {
                if let Some(c) = row.get(p) {
                    v.set(d, c.clone());
                }
            }
            v
        })
        .collect();
    Ok(SolutionBasis {
        jets,
        parametric: solved.parametric().to_vec(),
    })
}

/// Solution jets with the target coordinates left symbolic, read off the
/// lifted relations.
pub fn symbolic_solution_basis(dim: usize, rel: &LiftedRelations) -> SolutionBasis<ScalarExpr> {
    let n = rel.order();
    let jets = rel
        .parametric()
        .iter()
        .map(|p| {
            let mut v = JetVectorField::zero(dim, n);
            v.set(&JetSymbol::from_generator(p.clone()), ScalarExpr::one());
            for (d, rhs) in rel.solved() {
                v.set(&JetSymbol::from_generator(d.clone()), rhs.coeff(p));
            }
            v
        })
        .collect();
    SolutionBasis {
        jets,
        parametric: rel
            .parametric()
            .iter()
            .cloned()
            .map(JetSymbol::from_generator)
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Violation<K: Field> {
    pub generator: McGenerator,
    pub i: usize,
    pub j: usize,
    /// `(d g)(v_i, v_j)`
    pub lhs: K,
    /// `-<g, [v_i, v_j]>`
    pub rhs: K,
}

#[derive(Clone, Debug)]
pub struct DualityReport<K: Field = BigRational> {
    pub pairings: usize,
    pub violations: Vec<Violation<K>>,
}

impl<K: Field> DualityReport<K> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Summary line plus one line per violation, printing values with `show`.
    pub fn text_with(&self, names: &GenNames, show: impl Fn(&K) -> String) -> String {
        let mut out = String::new();
        for v in &self.violations {
            out.push_str(&format!(
                "violation: (d {})(v{}, v{}) = {} but -<{}, [v{}, v{}]> = {}\n",
                names.text(&v.generator),
                v.i + 1,
                v.j + 1,
                show(&v.lhs),
                names.text(&v.generator),
                v.i + 1,
                v.j + 1,
                show(&v.rhs)
            ));
        }
        out.push_str(&format!(
            "{} pairings checked, {} violation{}\n",
            self.pairings,
            self.violations.len(),
            if self.violations.len() == 1 { "" } else { "s" }
        ));
        out
    }
}

impl DualityReport {
    pub fn text(&self, names: &GenNames) -> String {
        self.text_with(names, |v| v.to_string())
    }
}

fn duality_with<K: Field>(
    eqs: &StructureEquationSet,
    jets: &[JetVectorField<K>],
    coeff: impl Fn(&ScalarExpr) -> Result<K, KernelError>,
) -> Result<DualityReport<K>, JetError> {
    let needed = eqs.order() + 1;
    if let Some(v) = jets.iter().find(|v| v.truncation() < needed) {
        return Err(JetError::TooShort {
            needed,
            got: v.truncation(),
        });
    }
    let jets: Vec<JetVectorField<K>> = jets.iter().map(|v| v.truncate(needed)).collect();
    // evaluated equations: g -> [(h, k, c)]
    let mut evaluated = Vec::new();
    for g in eqs.basis() {
        let terms = eqs.equations()[g]
            .terms()
            .iter()
            .map(|((h, k), c)| Ok((h.clone(), k.clone(), coeff(c)?)))
            .collect::<Result<Vec<_>, KernelError>>()?;
        evaluated.push((g.clone(), terms));
    }
    let mut report = DualityReport {
        pairings: 0,
        violations: Vec::new(),
    };
    for (i, vi) in jets.iter().enumerate() {
        for (j, vj) in jets.iter().enumerate() {
            let br = vi.bracket(vj)?;
            for (g, terms) in &evaluated {
                let mut lhs = K::zero();
                for (h, k, c) in terms {
                    let w = vi
                        .pairing(h)
                        .mul(&vj.pairing(k))
                        .sub(&vi.pairing(k).mul(&vj.pairing(h)));
                    lhs = lhs.add(&c.mul(&w));
                }
                let rhs = br.pairing(g).neg();
                report.pairings += 1;
                if lhs != rhs {
                    report.violations.push(Violation {
                        generator: g.clone(),
                        i,
                        j,
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Checks `(d g)(v_i, v_j) = -<g, [v_i, v_j]>` for every basis generator and
/// every ordered pair of jets, with coefficients evaluated at `z0` (target
/// coordinates equal source coordinates on the identity fiber).
pub fn check_duality(
    eqs: &StructureEquationSet,
    jets: &[JetVectorField],
    z0: &[BigRational],
) -> Result<DualityReport, JetError> {
    let vars: Vec<Var> = eqs
        .names()
        .targets
        .iter()
        .map(|t| eqs.table().lookup(t).expect("targets are declared"))
        .collect();
    let point = point_map(&vars, z0)?;
    eqs.assumptions().check_point(&point)?;
    duality_with(eqs, jets, |c| c.evaluate(&point))
}

/// The same identity as [`check_duality`] with the target coordinates left
/// symbolic, using the solution jets read off the equation set's own lifted
/// relations.
pub fn check_duality_symbolic(eqs: &StructureEquationSet) -> Result<DualityReport<ScalarExpr>, JetError> {
    let rel = eqs.relations().ok_or(JetError::NoRelations)?;
    let basis = symbolic_solution_basis(eqs.dim(), rel);
    duality_with(eqs, &basis.jets, |c| Ok(c.clone()))
}

#[derive(Clone, Debug)]
pub struct JacobiReport {
    pub triples: usize,
    pub failures: Vec<(usize, usize, usize)>,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Cyclic sums `[[a,b],c] + [[b,c],a] + [[c,a],b]` for every triple, which
/// must vanish to order `N - 2`.
pub fn jacobi_check<K: Field>(jets: &[JetVectorField<K>]) -> Result<JacobiReport, JetError> {
    let n = jets.iter().map(|v| v.truncation()).min().unwrap_or(0);
    let jets: Vec<JetVectorField<K>> = jets.iter().map(|v| v.truncate(n)).collect();
    let short: Vec<JetVectorField<K>> = jets.iter().map(|v| v.truncate(n.saturating_sub(1))).collect();
    let mut report = JacobiReport {
        triples: 0,
        failures: Vec::new(),
    };
    let r = jets.len();
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let t1 = jets[i].bracket(&jets[j])?.bracket(&short[k])?;
                let t2 = jets[j].bracket(&jets[k])?.bracket(&short[i])?;
                let t3 = jets[k].bracket(&jets[i])?.bracket(&short[j])?;
                report.triples += 1;
                if !t1.add(&t2).add(&t3).is_zero() {
                    report.failures.push((i, j, k));
                }
            }
        }
    }
    Ok(report)
}

/// Structure constants of a finite-dimensional solution algebra:
/// `[v_j, v_k] = sum_i c^i_{jk} v_i`.
#[derive(Clone, Debug)]
pub struct BracketTable {
    pub legend: Vec<String>,
    /// `(i, j, k, c^i_{jk})` for `j < k`, nonzero entries only.
    pub entries: Vec<(usize, usize, usize, BigRational)>,
}

impl SolutionBasis {
    pub fn bracket_table(&self, sys: &DeterminingSystem) -> Result<BracketTable, JetError> {
        let n = self.jets.first().map(|v| v.truncation()).unwrap_or(0);
        if let Some(p) = self.parametric.iter().find(|p| p.order() >= n) {
            return Err(JetError::NotFiniteType(p.order()));
        }
        let short: Vec<JetVectorField> = self.jets.iter().map(|v| v.truncate(n.saturating_sub(1))).collect();
        let mut entries = Vec::new();
        for j in 0..self.jets.len() {
            for k in j + 1..self.jets.len() {
                let u = self.jets[j].bracket(&self.jets[k])?;
                let mut rest = u.clone();
                for (i, p) in self.parametric.iter().enumerate() {
                    let c = u.coeff(p);
                    if !Field::is_zero(&c) {
                        rest = rest.sub(&short[i].scale(&c));
                        entries.push((i, j, k, c));
                    }
                }
                if !rest.is_zero() {
                    return Err(JetError::NotClosed(j, k));
                }
            }
        }
        Ok(BracketTable {
            legend: self.parametric.iter().map(|p| sys.jet_name(p)).collect(),
            entries,
        })
    }
}

impl BracketTable {
    pub fn is_abelian(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.legend.iter().enumerate() {
            out.push_str(&format!("# v{} is normalized by {} = 1\n", i + 1, name));
        }
        let mut rows: BTreeMap<(usize, usize), Vec<(usize, BigRational)>> = BTreeMap::new();
        for (i, j, k, c) in &self.entries {
            rows.entry((*j, *k)).or_default().push((*i, c.clone()));
        }
        for ((j, k), terms) in &rows {
            let mut s = String::new();
            for (n, (i, c)) in terms.iter().enumerate() {
                let neg = *c < BigRational::default();
                let a = if neg { -c.clone() } else { c.clone() };
                match (n, neg) {
                    (0, true) => s.push('-'),
                    (0, false) => {}
                    (_, true) => s.push_str(" - "),
                    (_, false) => s.push_str(" + "),
                }
                if a != BigRational::from_integer(1.into()) {
                    s.push_str(&format!("{a}*"));
                }
                s.push_str(&format!("v{}", i + 1));
            }
            out.push_str(&format!("[v{}, v{}] = {}\n", j + 1, k + 1, s));
        }
        if self.entries.is_empty() {
            out.push_str("all brackets vanish (abelian)\n");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(i, j, k, c)| json!({"i": i + 1, "j": j + 1, "k": k + 1, "value": c.to_string()}))
            .collect();
        json!({"basis": self.legend, "constants": entries})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Jet = JetVectorField;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::from_indices(v)
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn monomial_brackets() {
        assert_eq!(
            bracket_monomial(0, &mi(&[]), 0, &mi(&[0])),
            vec![(BigInt::from(1), JetSymbol::new(0, mi(&[])))]
        );
        assert!(bracket_monomial(1, &mi(&[0, 1]), 1, &mi(&[0, 1])).is_empty());
        assert_eq!(
            bracket_monomial(0, &mi(&[0]), 0, &mi(&[0, 0])),
            vec![(BigInt::from(1), JetSymbol::new(0, mi(&[0, 0])))]
        );
    }

    #[test]
    fn jet_bracket_truncates() {
        let d = Jet::monomial(1, 0, mi(&[]), 3);
        let x2 = Jet::monomial(1, 0, mi(&[0, 0]), 3);
        let b = d.bracket(&x2).unwrap();
        assert_eq!(b.truncation(), 2);
        assert_eq!(b.coeff(&JetSymbol::new(0, mi(&[0]))), q(1));
        assert!(d.bracket(&d).unwrap().is_zero());
        assert!(matches!(d.bracket(&x2.truncate(2)), Err(JetError::Truncation(3, 2))));
    }

    #[test]
    fn one_dimensional_monomial_table() {
        // [v_j, v_k] = (C(j+k-1, j) - C(j+k-1, k)) v_{j+k-1}
        let binom = |n: i64, k: i64| -> i64 {
            if k < 0 || k > n {
                0
            } else {
                (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
            }
        };
        for j in 0..=5usize {
            for k in 0..=5usize {
                let vj = Jet::monomial(1, 0, mi(&vec![0; j]), 10);
                let vk = Jet::monomial(1, 0, mi(&vec![0; k]), 10);
                let b = vj.bracket(&vk).unwrap();
                if j + k == 0 {
                    assert!(b.is_zero());
                    continue;
                }
                let n = (j + k - 1) as i64;
                let c = binom(n, j as i64) - binom(n, k as i64);
                assert_eq!(
                    b.coeff(&JetSymbol::new(0, mi(&vec![0; j + k - 1]))),
                    q(c),
                    "j={j} k={k}"
                );
                assert_eq!(b.coeffs().len(), usize::from(c != 0));
            }
        }
    }

    #[test]
    fn jacobi_on_monomials() {
        let basis: Vec<Jet> = (0..=2).map(|n| Jet::monomial(1, 0, mi(&vec![0; n]), 4)).collect();
        let r = jacobi_check(&basis).unwrap();
        assert_eq!(r.triples, 1);
        assert!(r.passed());
    }

    #[test]
    fn unconstrained_solution_basis_is_monomial() {
        let sys = DeterminingSystem::unconstrained(1);
        let b = solution_basis(&sys, &[q(0)], 2, None).unwrap();
        assert_eq!(b.jets.len(), 3);
        for (n, v) in b.jets.iter().enumerate() {
            assert_eq!(v, &Jet::monomial(1, 0, mi(&vec![0; n]), 2));
        }
    }

    #[test]
    fn degenerate_point_is_rejected() {
        let sys =
            DeterminingSystem::parse("coords: x, y\nfields: xi, eta\nxi = 0\neta = x*eta_x\neta_y = 0\n").unwrap();
        assert_eq!(
            solution_basis(&sys, &[q(0), q(0)], 2, None).unwrap_err(),
            JetError::Kernel(KernelError::DegeneratePoint)
        );
        let b = solution_basis(&sys, &[q(1), q(0)], 3, None).unwrap();
        assert_eq!(b.jets.len(), 1);
        // the jet of x d/dy at x = 1: eta = 1, eta_x = 1
        let v = &b.jets[0];
        assert_eq!(v.coeff(&JetSymbol::new(1, mi(&[]))), q(1));
        assert_eq!(v.coeff(&JetSymbol::new(1, mi(&[0]))), q(1));
        assert_eq!(v.coeffs().len(), 2);
        assert!(v.bracket(v).unwrap().is_zero());
        assert!(b.bracket_table(&sys).unwrap().is_abelian());
    }

    #[test]
    fn duality_for_low_order_diffeomorphisms() {
        let eqs = StructureEquationSet::diffeo(1, 2);
        let jets: Vec<Jet> = (0..=3).map(|n| Jet::monomial(1, 0, mi(&vec![0; n]), 3)).collect();
        let r = check_duality(&eqs, &jets, &[q(0)]).unwrap();
        assert_eq!(r.pairings, 3 * 16);
        assert!(r.passed(), "{}", r.text(eqs.names()));
        let s = check_duality_symbolic(&eqs).unwrap();
        assert!(s.passed());
    }

    #[test]
    fn duality_detects_a_sign_error() {
        let mut eqs = StructureEquationSet::diffeo(1, 1);
        let g = eqs.basis()[0].clone();
        let flipped = eqs.equation(&g).unwrap().neg();
        eqs.set_equation(&g, flipped);
        let jets: Vec<Jet> = (0..=2).map(|n| Jet::monomial(1, 0, mi(&vec![0; n]), 2)).collect();
        assert!(!check_duality(&eqs, &jets, &[q(0)]).unwrap().passed());
    }
}
