//! Maurer-Cartan structure equations: the diffeomorphism equations
//! `d mu^a_C = sum_{C=(A,B)} sum_b C!/(A!B!) mu^a_{A,b} ^ mu^b_B`, their
//! reduction modulo lifted determining equations, and the `d^2 = 0` check.
//!
//! Everything is computed on a target fiber, where `dZ = 0`: coefficients
//! (functions of the target coordinates) are constants for `d`. The
//! horizontal forms satisfy `sigma^a = -mu^a`, so their equations are the
//! order-0 ones and are not listed separately.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::detsys::{DetSysError, DeterminingSystem};
use crate::exterior::{
    d_apply_two, ExteriorError, GenNames, LiftedRelations, McGenerator, OneForm, ThreeForm, TwoForm,
};
use crate::kernel::{Assumptions, ScalarExpr, SymbolKind, SymbolTable};
use crate::multiindex::MultiIndex;
use crate::parse::parse_scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("{0}")]
    DetSys(#[from] DetSysError),
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("invalid structure-equation JSON: {0}")]
    Json(String),
    #[error("the equation set carries no determining system, so it cannot be extended to a higher order")]
    NoSystem,
}

/// The unreduced diffeomorphism equation for `d mu^a_C`.
pub fn diffeo_structure_equation(g: &McGenerator, dim: usize) -> TwoForm {
    let mut out = TwoForm::zero();
    for (a_idx, b_idx) in g.index.sub_multisets() {
        let w = ScalarExpr::from_bigint(MultiIndex::multinomial(&g.index, &a_idx).into());
        for b in 0..dim {
            let left = McGenerator::new(g.component, a_idx.with(b));
            let right = McGenerator::new(b, b_idx.clone());
            out.add_wedge(w.clone(), &left, &right);
        }
    }
    out
}

/// Diffeomorphism equations for every generator of order at most `order`,
/// obtained by expanding `d mu[[H]] = grad mu[[H]] ^ mu[[H]]` with
/// `mu^a[[H]] = sum_A mu^a_A H^A / A!` and reading off `H^C / C!`.
pub fn power_series_structure(dim: usize, order: u32) -> BTreeMap<McGenerator, TwoForm> {
    let rational = |n: BigInt, d: BigInt| ScalarExpr::from_rational(&BigRational::new(n, d));
    let idx = MultiIndex::up_to_order(dim, order + 1);
    // series[a] : H-monomial -> one-form coefficient
    let series: Vec<BTreeMap<MultiIndex, OneForm>> = (0..dim)
        .map(|a| {
            idx.iter()
                .map(|m| {
                    let c = rational(BigInt::from(1), m.factorial_weight().into());
                    (m.clone(), OneForm::term(c, McGenerator::new(a, m.clone())))
                })
                .collect()
        })
        .collect();
    let partial = |s: &BTreeMap<MultiIndex, OneForm>, b: usize| -> BTreeMap<MultiIndex, OneForm> {
        let mut out: BTreeMap<MultiIndex, OneForm> = BTreeMap::new();
        for (m, f) in s {
            if let Some(rest) = m.delete_one(b) {
                let c = ScalarExpr::int(m.count(b) as i64);
                let e = out.entry(rest).or_default();
                *e = e.add(&f.scale(&c));
            }
        }
        out
    };
    let mut result = BTreeMap::new();
    for a in 0..dim {
        let mut product: BTreeMap<MultiIndex, TwoForm> = BTreeMap::new();
        for b in 0..dim {
            let grad = partial(&series[a], b);
            for (p, f) in &grad {
                for (q, h) in &series[b] {
                    let m = p.union(q);
                    if m.order() > order {
                        continue;
                    }
                    let e = product.entry(m).or_default();
                    *e = e.add(&crate::exterior::wedge(f, h));
                }
            }
        }
        for m in MultiIndex::up_to_order(dim, order) {
            let c = ScalarExpr::from_bigint(m.factorial_weight().into());
            let w = product.get(&m).cloned().unwrap_or_default().scale(&c);
            result.insert(McGenerator::new(a, m), w);
        }
    }
    result
}

/// Structure equations of a pseudo-group on the target fiber up to a
/// given order.
#[derive(Clone, Debug)]
pub struct StructureEquationSet {
    dim: usize,
    order: u32,
    basis: Vec<McGenerator>,
    equations: BTreeMap<McGenerator, TwoForm>,
    assumptions: Assumptions,
    names: GenNames,
    table: SymbolTable,
    source: Option<Source>,
}

#[derive(Clone, Debug)]
struct Source {
    system: DeterminingSystem,
    relations: LiftedRelations,
    cap: Option<u32>,
}

impl StructureEquationSet {
    /// The full diffeomorphism pseudo-group in `dim` variables.
    pub fn diffeo(dim: usize, order: u32) -> Self {
        StructureEquationSet::from_system(&DeterminingSystem::unconstrained(dim), order, None)
            .expect("an empty system always solves")
    }

    /// Prolongs and solves `sys` to order `order + 1`, lifts, and reduces the
    /// diffeomorphism equations of every parametric generator of order at
    /// most `order`.
    pub fn from_system(sys: &DeterminingSystem, order: u32, cap: Option<u32>) -> Result<Self, StructureError> {
        let solved = sys.solve_to_order(order + 1, cap)?;
        let relations = solved.lift(sys)?;
        let basis: Vec<McGenerator> = relations
            .parametric()
            .iter()
            .filter(|g| g.order() <= order)
            .cloned()
            .collect();
        let targets: BTreeSet<_> = sys.targets().iter().copied().collect();
        let mut equations = BTreeMap::new();
        for g in &basis {
            let eq = relations.reduce_two(&diffeo_structure_equation(g, sys.dim()));
            if let Some(v) = eq.coefficient_vars().into_iter().find(|v| !targets.contains(v)) {
                return Err(StructureError::Internal(format!(
                    "source symbol `{}` survived lifting in d {}",
                    sys.table().name(v),
                    sys.gen_names().text(g)
                )));
            }
            equations.insert(g.clone(), eq);
        }
        Ok(StructureEquationSet {
            dim: sys.dim(),
            order,
            basis,
            equations,
            assumptions: relations.assumptions().clone(),
            names: sys.gen_names(),
            table: sys.table().clone(),
            source: Some(Source {
                system: sys.clone(),
                relations,
                cap,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn basis(&self) -> &[McGenerator] {
        &self.basis
    }

    pub fn equations(&self) -> &BTreeMap<McGenerator, TwoForm> {
        &self.equations
    }

    pub fn equation(&self, g: &McGenerator) -> Option<&TwoForm> {
        self.equations.get(g)
    }

    pub fn assumptions(&self) -> &Assumptions {
        &self.assumptions
    }

    pub fn names(&self) -> &GenNames {
        &self.names
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn system(&self) -> Option<&DeterminingSystem> {
        self.source.as_ref().map(|s| &s.system)
    }

    /// Lifted relations at the working order `order + 1`.
    pub fn relations(&self) -> Option<&LiftedRelations> {
        self.source.as_ref().map(|s| &s.relations)
    }

    /// Replaces one equation; used to probe the consistency checks.
    pub fn set_equation(&mut self, g: &McGenerator, rhs: TwoForm) {
        self.equations.insert(g.clone(), rhs);
    }

    /// Target coordinates occurring in the coefficients of each equation.
    pub fn coefficient_dependence(&self) -> BTreeMap<McGenerator, Vec<String>> {
        self.equations
            .iter()
            .map(|(g, w)| {
                let names = w
                    .coefficient_vars()
                    .into_iter()
                    .map(|v| self.table.name(v).to_string())
                    .collect();
                (g.clone(), names)
            })
            .collect()
    }

    fn assumption_strings(&self) -> Vec<String> {
        self.assumptions
            .iter()
            .map(|a| a.display(&self.table).to_string())
            .collect()
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "# structure equations to order {} in {} variable{}; d of the target coordinates is zero\n",
            self.order,
            self.dim,
            if self.dim == 1 { "" } else { "s" }
        );
        let basis: Vec<String> = self.basis.iter().map(|g| self.names.text(g)).collect();
        out.push_str(&format!("# basis: {}\n", basis.join(", ")));
        if !self.assumptions.is_empty() {
            out.push_str(&format!(
                "# assumed nonzero: {}\n",
                self.assumption_strings().join(", ")
            ));
        }
        let deps: Vec<String> = self
            .coefficient_dependence()
            .into_iter()
            .filter(|(_, t)| !t.is_empty())
            .map(|(g, t)| format!("d {} ({})", self.names.text(&g), t.join(", ")))
            .collect();
        if !deps.is_empty() {
            out.push_str(&format!("# coefficients depend on targets: {}\n", deps.join("; ")));
        }
        for g in &self.basis {
            out.push_str(&format!(
                "d {} = {}\n",
                self.names.text(g),
                self.equations[g].text(&self.names, &self.table)
            ));
        }
        out
    }

    pub fn latex(&self) -> String {
        let mut out = String::new();
        if !self.assumptions.is_empty() {
            let a: Vec<String> = self.assumptions.iter().map(|a| a.latex(&self.table)).collect();
            out.push_str(&format!("% assumed nonzero: {}\n", a.join(", ")));
        }
        out.push_str("\\begin{aligned}\n");
        for g in &self.basis {
            out.push_str(&format!(
                "d{} &= {} \\\\\n",
                self.names.latex(g),
                self.equations[g].latex(&self.names, &self.table)
            ));
        }
        out.push_str("\\end{aligned}\n");
        out
    }

    pub fn to_json(&self) -> Value {
        let gen = |g: &McGenerator| Value::String(self.names.text(g));
        let coeff = |c: &ScalarExpr| Value::String(c.display(&self.table).to_string());
        let equations: Vec<Value> = self
            .basis
            .iter()
            .map(|g| {
                let rhs: Vec<Value> = self.equations[g]
                    .terms()
                    .iter()
                    .map(|((a, b), c)| json!({"pair": [gen(a), gen(b)], "coeff": coeff(c)}))
                    .collect();
                json!({"lhs": gen(g), "rhs": rhs})
            })
            .collect();
        let dependence: Vec<Value> = self
            .coefficient_dependence()
            .into_iter()
            .map(|(g, t)| json!({"lhs": gen(&g), "targets": t}))
            .collect();
        json!({
            "dim": self.dim,
            "order": self.order,
            "components": self.names.components,
            "targets": self.names.targets,
            "basis": self.basis.iter().map(gen).collect::<Vec<_>>(),
            "assumptions": self.assumption_strings(),
            "equations": equations,
            "coefficient_dependence": dependence,
        })
    }

    /// Reads the output of [`StructureEquationSet::to_json`]. The result has
    /// no attached determining system.
    pub fn from_json(v: &Value) -> Result<Self, StructureError> {
        let bad = |m: &str| StructureError::Json(m.to_string());
        let strings = |key: &str| -> Result<Vec<String>, StructureError> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(&format!("missing array `{key}`")))?
                .iter()
                .map(|s| {
                    s.as_str()
                        .map(String::from)
                        .ok_or_else(|| bad(&format!("`{key}` must hold strings")))
                })
                .collect()
        };
        let dim = v
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing `dim`"))? as usize;
        let order = v
            .get("order")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing `order`"))? as u32;
        let components = strings("components")?;
        let targets = strings("targets")?;
        if components.len() != dim || targets.len() != dim {
            return Err(bad("`components` and `targets` must have `dim` entries"));
        }
        let table = SymbolTable::declare_all(targets.iter().map(|t| (t.as_str(), SymbolKind::TargetCoordinate)))
            .map_err(|e| bad(&e.to_string()))?;
        let mut names = GenNames::new(components, targets);
        names.compact = dim == 1;
        let parse_gen = |s: &Value| -> Result<McGenerator, StructureError> {
            let s = s.as_str().ok_or_else(|| bad("generators must be strings"))?;
            Ok(names.parse(s)?)
        };
        let parse_coeff = |s: &str| parse_scalar(s, &table).map_err(|e| bad(&format!("coefficient `{s}`: {e}")));
        let basis = v
            .get("basis")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `basis`"))?
            .iter()
            .map(parse_gen)
            .collect::<Result<Vec<_>, _>>()?;
        let mut assumptions = Assumptions::new();
        for a in strings("assumptions")? {
            assumptions.record(&parse_coeff(&a)?);
        }
        let mut equations = BTreeMap::new();
        for e in v
            .get("equations")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `equations`"))?
        {
            let lhs = parse_gen(e.get("lhs").ok_or_else(|| bad("equation without `lhs`"))?)?;
            let mut w = TwoForm::zero();
            for t in e
                .get("rhs")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("equation without `rhs`"))?
            {
                let pair = t.get("pair").and_then(Value::as_array).filter(|p| p.len() == 2);
                let pair = pair.ok_or_else(|| bad("`pair` must hold two generators"))?;
                let c = t
                    .get("coeff")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("term without `coeff`"))?;
                w.add_wedge(parse_coeff(c)?, &parse_gen(&pair[0])?, &parse_gen(&pair[1])?);
            }
            equations.insert(lhs, w);
        }
        if basis.iter().any(|g| !equations.contains_key(g)) {
            return Err(bad("every basis generator needs an equation"));
        }
        Ok(StructureEquationSet {
            dim,
            order,
            basis,
            equations,
            assumptions,
            names,
            table,
            source: None,
        })
    }

    /// `d(d g)` for every basis generator, using these equations for the
    /// basis and a set computed one order higher for the generators of order
    /// `order + 1` that occur on the right-hand sides.
    pub fn check_d_squared(&self) -> Result<DSquaredReport, StructureError> {
        let source = self.source.as_ref().ok_or(StructureError::NoSystem)?;
        let higher = StructureEquationSet::from_system(&source.system, self.order + 1, source.cap)?;
        let higher_rel = higher.relations().expect("computed from a system");
        let mut rules = higher.equations.clone();
        for g in &self.basis {
            rules.insert(g.clone(), self.equations[g].clone());
        }
        let mut residues = Vec::new();
        for g in &self.basis {
            let dg = higher_rel.reduce_two(&self.equations[g]);
            let r = d_apply_two(&dg, &rules, higher_rel)?;
            residues.push((g.clone(), r));
        }
        Ok(DSquaredReport { residues })
    }
}

#[derive(Clone, Debug)]
pub struct DSquaredReport {
    pub residues: Vec<(McGenerator, ThreeForm)>,
}

impl DSquaredReport {
    pub fn is_clean(&self) -> bool {
        self.residues.iter().all(|(_, r)| r.is_zero())
    }

    pub fn text(&self, set: &StructureEquationSet) -> String {
        let mut out = String::new();
        for (g, r) in &self.residues {
            let state = if r.is_zero() {
                "0".to_string()
            } else {
                r.text(set.names(), set.table())
            };
            out.push_str(&format!("d(d {}) = {}\n", set.names().text(g), state));
        }
        if self.is_clean() {
            out.push_str("all residues zero\n");
        } else {
            let n = self.residues.iter().filter(|(_, r)| !r.is_zero()).count();
            out.push_str(&format!("{n} nonzero residue{}\n", if n == 1 { "" } else { "s" }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mu(n: usize) -> McGenerator {
        McGenerator::new(0, MultiIndex::from_indices(&vec![0; n]))
    }

    #[test]
    fn one_dimensional_low_orders() {
        let mut e = TwoForm::zero();
        e.add_wedge(ScalarExpr::one(), &mu(1), &mu(0));
        assert_eq!(diffeo_structure_equation(&mu(0), 1), e);
        let mut e = TwoForm::zero();
        e.add_wedge(ScalarExpr::one(), &mu(2), &mu(0));
        assert_eq!(diffeo_structure_equation(&mu(1), 1), e);
    }

    #[test]
    fn three_dimensional_first_order_terms() {
        let g = |a: usize, idx: &[usize]| McGenerator::new(a, MultiIndex::from_indices(idx));
        let w = diffeo_structure_equation(&g(2, &[0]), 3);
        let mut expected = TwoForm::zero();
        for (l, r) in [
            (g(2, &[0, 0]), g(0, &[])),
            (g(2, &[0, 1]), g(1, &[])),
            (g(2, &[0, 2]), g(2, &[])),
            (g(2, &[0]), g(0, &[0])),
            (g(2, &[1]), g(1, &[0])),
            (g(2, &[2]), g(2, &[0])),
        ] {
            expected.add_wedge(ScalarExpr::one(), &l, &r);
        }
        assert_eq!(w, expected);
    }

    #[test]
    fn series_expansion_agrees_with_component_formula() {
        for dim in 1..=2 {
            for (g, w) in power_series_structure(dim, 3) {
                assert_eq!(w, diffeo_structure_equation(&g, dim), "{g:?}");
            }
        }
    }

    #[test]
    fn diffeo_set_is_unreduced() {
        let s = StructureEquationSet::diffeo(1, 2);
        assert_eq!(s.basis().len(), 3);
        assert_eq!(
            s.equation(&mu(2)).unwrap().text(s.names(), s.table()),
            "mu_2 ^ mu_1 + mu_3 ^ mu_0"
        );
        assert!(s.check_d_squared().unwrap().is_clean());
    }

    #[test]
    fn corrupted_equation_leaves_a_residue() {
        let mut s = StructureEquationSet::diffeo(1, 1);
        let flipped = s.equation(&mu(0)).unwrap().neg();
        s.set_equation(&mu(0), flipped);
        let report = s.check_d_squared().unwrap();
        assert!(!report.is_clean());
        let text = report.text(&s);
        assert!(text.contains("d(d mu_1) = -2*mu_0 ^ mu_1 ^ mu_2"), "{text}");
    }

    #[test]
    fn json_round_trip() {
        let s = StructureEquationSet::diffeo(2, 1);
        let j = s.to_json();
        let back = StructureEquationSet::from_json(&j).unwrap();
        assert_eq!(back.to_json(), j);
        assert_eq!(back.text(), s.text());
        assert!(matches!(back.check_d_squared(), Err(StructureError::NoSystem)));
    }
}
