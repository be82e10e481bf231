//! Linear infinitesimal determining systems: parsing, prolongation by total
//! derivatives, row reduction to solved form, and lifting to relations among
//! Maurer-Cartan generators (`z -> Z`, `zeta^b_A -> mu^b_A`).
//!
//! Input format:
//!
//! ```text
//! # comment
//! coords: x, y, z
//! targets: X, Y, Z        # optional, defaults to uppercased coords
//! fields: xi, eta, zeta   # one vector-field component per coordinate
//! eq: zeta_z = x*eta_y
//! xi = 0; eta_z = 0       # bare equations, `;`-separated, are accepted too
//! ```
//!
//! Jet symbols are written `<field>_<coords>`, e.g. `eta_xy` for the
//! second derivative of `eta` in `x` and `y`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::exterior::{render_sum, split_names, ExteriorError, GenNames, LiftedRelations, McGenerator, OneForm};
use crate::kernel::{Assumptions, KernelError, ScalarExpr, SymbolKind, SymbolTable, Var};
use crate::linalg::{Echelon, Row};
use crate::multiindex::MultiIndex;
use crate::parse::{eval_linear, parse_expr_at, Linear, ParseError, Pos, Resolve};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetSysError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("line {0}: equation has a term free of jet symbols; only homogeneous linear equations are accepted")]
    Inhomogeneous(usize),
    #[error("line {0}: equation reduces to a nonzero function, so the system has no solutions")]
    Inconsistent(usize),
    #[error("solved relations up to order {order} were still changing at prolongation order {cap}; raise the cap")]
    CapExceeded { order: u32, cap: u32 },
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
}

/// Jet coordinate `zeta^b_A`. Ordered like [`McGenerator`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct JetSymbol(McGenerator);

impl JetSymbol {
    pub fn new(component: usize, index: MultiIndex) -> Self {
        JetSymbol(McGenerator::new(component, index))
    }

    pub fn component(&self) -> usize {
        self.0.component
    }

    pub fn index(&self) -> &MultiIndex {
        &self.0.index
    }

    pub fn order(&self) -> u32 {
        self.0.order()
    }

    pub fn derive(&self, a: usize) -> Self {
        JetSymbol(self.0.derive(a))
    }

    /// The Maurer-Cartan generator this jet lifts to.
    pub fn generator(&self) -> &McGenerator {
        &self.0
    }

    pub fn from_generator(g: McGenerator) -> Self {
        JetSymbol(g)
    }

    pub fn up_to_order(dim: usize, max: u32) -> Vec<JetSymbol> {
        McGenerator::up_to_order(dim, max).into_iter().map(JetSymbol).collect()
    }
}

/// Homogeneous linear equation `sum c(z) zeta^b_A = 0`. Parsed equations
/// also keep their two written sides for display.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPdeEquation {
    terms: Row<JetSymbol>,
    sides: Option<(Row<JetSymbol>, Row<JetSymbol>)>,
}

impl LinearPdeEquation {
    /// `None` for the trivial equation `0 = 0`.
    pub fn from_terms(terms: Row<JetSymbol>) -> Option<Self> {
        let terms: Row<JetSymbol> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        (!terms.is_empty()).then_some(LinearPdeEquation { terms, sides: None })
    }

    pub fn terms(&self) -> &Row<JetSymbol> {
        &self.terms
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(JetSymbol::order).max().unwrap_or(0)
    }

    /// Written `(lhs, rhs)`; prolonged equations read `terms = 0`.
    pub fn sides(&self) -> (Row<JetSymbol>, Row<JetSymbol>) {
        self.sides.clone().unwrap_or_else(|| (self.terms.clone(), Row::new()))
    }

    /// `D_{z^a}` of the equation: `sum (dc/dz^a) zeta^b_A + c zeta^b_{A,a}`.
    pub fn total_derivative(&self, a: usize, za: Var) -> Option<LinearPdeEquation> {
        let mut out = Row::new();
        let mut add = |k: JetSymbol, c: ScalarExpr| {
            let v = match out.remove(&k) {
                Some(e) => &e + &c,
                None => c,
            };
            if !v.is_zero() {
                out.insert(k, v);
            }
        };
        for (j, c) in &self.terms {
            add(j.clone(), c.diff(za));
            add(j.derive(a), c.clone());
        }
        LinearPdeEquation::from_terms(out)
    }
}

#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    table: SymbolTable,
    coords: Vec<Var>,
    targets: Vec<Var>,
    fields: Vec<String>,
    equations: Vec<LinearPdeEquation>,
    assumptions: Assumptions,
}

fn default_names(dim: usize, short: &[&str], stem: &str) -> Vec<String> {
    if dim <= short.len() {
        short[..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("{stem}{i}")).collect()
    }
}

impl DeterminingSystem {
    /// An empty system over the given names. `targets` defaults to the
    /// uppercased coordinate names.
    pub fn new(coords: &[String], targets: Option<&[String]>, fields: &[String]) -> Result<Self, KernelError> {
        let uppercased: Vec<String>;
        let targets = match targets {
            Some(t) => t,
            None => {
                uppercased = coords.iter().map(|c| c.to_uppercase()).collect();
                &uppercased
            }
        };
        let mut table = SymbolTable::new();
        let coords: Vec<Var> = coords
            .iter()
            .map(|c| table.declare(c, SymbolKind::SourceCoordinate))
            .collect::<Result<_, _>>()?;
        let targets: Vec<Var> = targets
            .iter()
            .map(|c| table.declare(c, SymbolKind::TargetCoordinate))
            .collect::<Result<_, _>>()?;
        for f in fields {
            table.declare(f, SymbolKind::JetSymbol)?;
        }
        Ok(DeterminingSystem {
            table,
            coords,
            targets,
            fields: fields.to_vec(),
            equations: Vec::new(),
            assumptions: Assumptions::new(),
        })
    }

    /// No equations: the full diffeomorphism pseudo-group in `dim` variables,
    /// with conventional names (`x, y, z` and `xi, eta, zeta` up to three).
    pub fn unconstrained(dim: usize) -> Self {
        let coords = default_names(dim, &["x", "y", "z"], "x");
        let fields = default_names(dim, &["xi", "eta", "zeta"], "xi");
        DeterminingSystem::new(&coords, None, &fields).expect("default names are distinct")
    }

    pub fn parse(text: &str) -> Result<Self, DetSysError> {
        let mut coords: Option<Vec<String>> = None;
        let mut targets: Option<Vec<String>> = None;
        let mut fields: Option<Vec<String>> = None;
        let mut statements: Vec<(Pos, String)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let trimmed = content.trim_start();
            let mut offset = content.chars().count() - trimmed.chars().count();
            let mut body = trimmed;
            if let Some((key, rest)) = trimmed.split_once(':') {
                let key = key.trim();
                let list = || -> Vec<String> { rest.split(',').map(|s| s.trim().to_string()).collect() };
                let slot = match key {
                    "coords" => Some(&mut coords),
                    "targets" => Some(&mut targets),
                    "fields" => Some(&mut fields),
                    "eq" => None,
                    _ => {
                        return Err(DetSysError::Syntax {
                            line,
                            message: format!("unknown header `{key}:`"),
                        })
                    }
                };
                match slot {
                    Some(slot) => {
                        if slot.is_some() {
                            return Err(DetSysError::Syntax {
                                line,
                                message: format!("`{key}:` given twice"),
                            });
                        }
                        if !statements.is_empty() {
                            return Err(DetSysError::Syntax {
                                line,
                                message: format!("`{key}:` must precede the equations"),
                            });
                        }
                        *slot = Some(list());
                        continue;
                    }
                    None => {
                        offset = content.chars().count() - rest.chars().count();
                        body = rest;
                    }
                }
            }
            let mut col = offset;
            for piece in body.split(';') {
                if !piece.trim().is_empty() {
                    statements.push((Pos { line, col: col + 1 }, piece.to_string()));
                }
                col += piece.chars().count() + 1;
            }
        }

        let missing = |what: &str| DetSysError::Syntax {
            line: 1,
            message: format!("missing `{what}:` declaration"),
        };
        let coords = coords.ok_or_else(|| missing("coords"))?;
        let fields = fields.ok_or_else(|| missing("fields"))?;
        if fields.len() != coords.len() {
            return Err(DetSysError::Syntax {
                line: 1,
                message: format!(
                    "{} fields declared for {} coordinates; there must be one field per coordinate",
                    fields.len(),
                    coords.len()
                ),
            });
        }
        if let Some(t) = &targets {
            if t.len() != coords.len() {
                return Err(DetSysError::Syntax {
                    line: 1,
                    message: format!("{} targets declared for {} coordinates", t.len(), coords.len()),
                });
            }
        }
        let mut sys =
            DeterminingSystem::new(&coords, targets.as_deref(), &fields).map_err(|e| DetSysError::Syntax {
                line: 1,
                message: e.to_string(),
            })?;
        for (pos, src) in statements {
            sys.add_equation_at(&src, pos)?;
        }
        Ok(sys)
    }

    /// Parses `lhs = rhs` and appends it. Trivial equations are dropped.
    pub fn add_equation(&mut self, src: &str) -> Result<(), DetSysError> {
        self.add_equation_at(src, Pos { line: 1, col: 1 })
    }

    fn add_equation_at(&mut self, src: &str, pos: Pos) -> Result<(), DetSysError> {
        let parts: Vec<&str> = src.split('=').collect();
        if parts.len() != 2 {
            return Err(DetSysError::Syntax {
                line: pos.line,
                message: format!("expected one `=` in equation `{}`", src.trim()),
            });
        }
        let rhs_pos = Pos {
            line: pos.line,
            col: pos.col + parts[0].chars().count() + 1,
        };
        let lhs_ast = parse_expr_at(parts[0], pos)?;
        let rhs_ast = parse_expr_at(parts[1], rhs_pos)?;
        let resolver = JetResolver { sys: self };
        let mut ledger = Assumptions::new();
        let lhs = eval_linear(&lhs_ast, &resolver, &mut ledger)?;
        let rhs = eval_linear(&rhs_ast, &resolver, &mut ledger)?;
        let scalar = &lhs.scalar - &rhs.scalar;
        let mut terms = lhs.terms.clone();
        for (k, c) in &rhs.terms {
            let v = terms.get(k).cloned().unwrap_or_default() - c;
            terms.insert(k.clone(), v);
        }
        let Some(mut eq) = LinearPdeEquation::from_terms(terms) else {
            if scalar.is_zero() {
                return Ok(());
            }
            return Err(DetSysError::Inconsistent(pos.line));
        };
        if !scalar.is_zero() {
            return Err(DetSysError::Inhomogeneous(pos.line));
        }
        eq.sides = Some((lhs.terms, rhs.terms));
        self.assumptions.extend(&ledger);
        self.equations.push(eq);
        Ok(())
    }

    pub fn push_equation(&mut self, eq: LinearPdeEquation) {
        self.equations.push(eq);
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn order(&self) -> u32 {
        self.equations.iter().map(LinearPdeEquation::order).max().unwrap_or(0)
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn coords(&self) -> &[Var] {
        &self.coords
    }

    pub fn targets(&self) -> &[Var] {
        &self.targets
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn equations(&self) -> &[LinearPdeEquation] {
        &self.equations
    }

    /// Nonvanishing requirements recorded while parsing.
    pub fn assumptions(&self) -> &Assumptions {
        &self.assumptions
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords.iter().map(|v| self.table.name(*v).to_string()).collect()
    }

    pub fn target_names(&self) -> Vec<String> {
        self.targets.iter().map(|v| self.table.name(*v).to_string()).collect()
    }

    pub fn gen_names(&self) -> GenNames {
        let mut names = GenNames::new(self.coord_names(), self.target_names());
        names.compact = self.dim() == 1;
        names
    }

    /// `eta_xy` style name of a jet coordinate.
    pub fn jet_name(&self, j: &JetSymbol) -> String {
        let field = &self.fields[j.component()];
        if j.order() == 0 {
            field.clone()
        } else {
            format!("{field}_{}", j.index().render(&self.coord_names()))
        }
    }

    fn render_row(&self, row: &Row<JetSymbol>) -> String {
        let terms: Vec<(ScalarExpr, String)> = row.iter().rev().map(|(j, c)| (c.clone(), self.jet_name(j))).collect();
        render_sum(&terms, &self.table, false)
    }

    pub fn equation_text(&self, eq: &LinearPdeEquation) -> String {
        let (lhs, rhs) = eq.sides();
        format!("{} = {}", self.render_row(&lhs), self.render_row(&rhs))
    }

    /// Simultaneous replacement `z^a -> Z^a`.
    pub fn lift_map(&self) -> BTreeMap<Var, ScalarExpr> {
        self.coords
            .iter()
            .zip(&self.targets)
            .map(|(z, t)| (*z, ScalarExpr::var(*t)))
            .collect()
    }

    /// The system together with every total derivative up to order `n`.
    pub fn prolong(&self, n: u32) -> DeterminingSystem {
        let mut out = Vec::new();
        for eq in &self.equations {
            out.push(eq.clone());
            let k = eq.order();
            if k >= n {
                continue;
            }
            let mut memo: BTreeMap<MultiIndex, LinearPdeEquation> = BTreeMap::new();
            memo.insert(MultiIndex::empty(), eq.clone());
            for idx in MultiIndex::up_to_order(self.dim(), n - k) {
                let Some(last) = idx.indices().last() else { continue };
                let parent = idx.delete_one(last).expect("last index is present");
                let Some(base) = memo.get(&parent) else { continue };
                if let Some(d) = base.total_derivative(last, self.coords[last]) {
                    out.push(d.clone());
                    memo.insert(idx, d);
                }
            }
        }
        DeterminingSystem {
            equations: out,
            ..self.clone()
        }
    }

    /// Row reduction of the equations as given (no prolongation), with
    /// parametric jets listed up to the system's order.
    pub fn reduce(&self) -> Result<SolvedSourceRelations, DetSysError> {
        self.reduce_at(self.order())
    }

    fn reduce_at(&self, order: u32) -> Result<SolvedSourceRelations, DetSysError> {
        let mut ech = Echelon::new();
        for eq in &self.equations {
            ech.insert(eq.terms())?;
        }
        let mut assumptions = self.assumptions.clone();
        assumptions.extend(ech.assumptions());
        let solved: BTreeMap<JetSymbol, Row<JetSymbol>> = ech
            .rows()
            .iter()
            .map(|(p, row)| {
                let rhs = row
                    .iter()
                    .filter(|(k, _)| *k != p)
                    .map(|(k, c)| (k.clone(), -c))
                    .collect();
                (p.clone(), rhs)
            })
            .collect();
        let parametric = JetSymbol::up_to_order(self.dim(), order)
            .into_iter()
            .filter(|j| !solved.contains_key(j))
            .collect();
        Ok(SolvedSourceRelations {
            solved,
            parametric,
            assumptions,
            order,
            prolonged_to: order,
        })
    }

    /// Solved relations up to order `n`, prolonging until the order-`n`
    /// part stops changing. `cap` bounds the prolongation order; it
    /// defaults to two orders above the starting order.
    pub fn solve_to_order(&self, n: u32, cap: Option<u32>) -> Result<SolvedSourceRelations, DetSysError> {
        let start = n.max(self.order());
        let cap = cap.unwrap_or(start + 2);
        let mut previous: Option<SolvedSourceRelations> = None;
        for k in start..=cap {
            let mut current = self.prolong(k).reduce_at(k)?.restrict(n);
            current.prolonged_to = k;
            if let Some(prev) = previous {
                if prev.solved == current.solved {
                    return Ok(current);
                }
            }
            previous = Some(current);
        }
        Err(DetSysError::CapExceeded { order: n, cap })
    }

    /// Each equation lifted symbol for symbol, keeping its written sides.
    pub fn lifted_equations(&self) -> Result<Vec<(OneForm, OneForm)>, DetSysError> {
        let map = self.lift_map();
        let lift_row = |row: &Row<JetSymbol>| -> Result<OneForm, KernelError> {
            let mut f = OneForm::zero();
            for (j, c) in row {
                f.add_term(j.generator().clone(), c.substitute(&map)?);
            }
            Ok(f)
        };
        self.equations
            .iter()
            .map(|eq| {
                let (l, r) = eq.sides();
                Ok((lift_row(&l)?, lift_row(&r)?))
            })
            .collect()
    }
}

struct JetResolver<'a> {
    sys: &'a DeterminingSystem,
}

impl Resolve for JetResolver<'_> {
    type Key = JetSymbol;

    fn ident(&self, name: &str) -> Option<Linear<JetSymbol>> {
        let sys = self.sys;
        if let Some(v) = sys.table.lookup(name) {
            return match sys.table.kind(v) {
                SymbolKind::SourceCoordinate => Some(Linear::scalar(ScalarExpr::var(v))),
                SymbolKind::JetSymbol => {
                    let b = sys.fields.iter().position(|f| f == name)?;
                    Some(Linear::basis(JetSymbol::new(b, MultiIndex::empty())))
                }
                _ => None,
            };
        }
        let coords = sys.coord_names();
        sys.fields
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                name.len() > f.len() + 1 && name.starts_with(f.as_str()) && name[f.len()..].starts_with('_')
            })
            .max_by_key(|(_, f)| f.len())
            .and_then(|(b, f)| {
                let idx = split_names(&name[f.len() + 1..], &coords)?;
                Some(Linear::basis(JetSymbol::new(b, MultiIndex::from_indices(&idx))))
            })
    }
}

/// Reduced echelon form of a (prolonged) system: every dependent jet as a
/// combination of parametric jets, with source-coordinate coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvedSourceRelations {
    solved: BTreeMap<JetSymbol, Row<JetSymbol>>,
    parametric: Vec<JetSymbol>,
    assumptions: Assumptions,
    order: u32,
    prolonged_to: u32,
}

impl SolvedSourceRelations {
    pub fn solved(&self) -> &BTreeMap<JetSymbol, Row<JetSymbol>> {
        &self.solved
    }

    pub fn parametric(&self) -> &[JetSymbol] {
        &self.parametric
    }

    pub fn assumptions(&self) -> &Assumptions {
        &self.assumptions
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Highest order the system was prolonged to while solving.
    pub fn prolonged_to(&self) -> u32 {
        self.prolonged_to
    }

    /// Keeps relations and parametric jets of order at most `n`. Since each
    /// pivot is the highest jet of its row, the kept rows only involve
    /// jets of order at most `n`.
    pub fn restrict(&self, n: u32) -> SolvedSourceRelations {
        SolvedSourceRelations {
            solved: self
                .solved
                .iter()
                .filter(|(p, _)| p.order() <= n)
                .map(|(p, r)| (p.clone(), r.clone()))
                .collect(),
            parametric: self.parametric.iter().filter(|j| j.order() <= n).cloned().collect(),
            assumptions: self.assumptions.clone(),
            order: n.min(self.order),
            prolonged_to: self.prolonged_to,
        }
    }

    /// `z -> Z`, `zeta^b_A -> mu^b_A`.
    pub fn lift(&self, sys: &DeterminingSystem) -> Result<LiftedRelations, DetSysError> {
        let map = sys.lift_map();
        let mut solved = BTreeMap::new();
        for (p, row) in &self.solved {
            let mut f = OneForm::zero();
            for (j, c) in row {
                f.add_term(j.generator().clone(), c.substitute(&map)?);
            }
            solved.insert(p.generator().clone(), f);
        }
        let parametric = self.parametric.iter().map(|j| j.generator().clone()).collect();
        let assumptions = self.assumptions.substitute(&map)?;
        Ok(LiftedRelations::new(solved, parametric, assumptions, self.order)?)
    }

    /// Relation coefficients evaluated at a source point; fails when a
    /// recorded nonvanishing assumption vanishes there.
    pub fn evaluate(
        &self,
        point: &BTreeMap<Var, BigRational>,
    ) -> Result<BTreeMap<JetSymbol, BTreeMap<JetSymbol, BigRational>>, KernelError> {
        self.assumptions.check_point(point)?;
        self.solved
            .iter()
            .map(|(p, row)| {
                let r = row
                    .iter()
                    .map(|(j, c)| Ok((j.clone(), c.evaluate(point)?)))
                    .collect::<Result<_, KernelError>>()?;
                Ok((p.clone(), r))
            })
            .collect()
    }

    pub fn text(&self, sys: &DeterminingSystem) -> String {
        let mut out = String::new();
        for (p, row) in &self.solved {
            let rhs = if row.is_empty() {
                "0".to_string()
            } else {
                sys.render_row(row)
            };
            out.push_str(&format!("{} = {}\n", sys.jet_name(p), rhs));
        }
        out
    }
}

impl fmt::Display for JetSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "zeta^{}_{:?}", self.component(), self.index())
    }
}
