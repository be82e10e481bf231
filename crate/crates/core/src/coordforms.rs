//! Differential forms in explicit coordinates, used to verify claimed
//! structure equations of a given coframe.
//!
//! Coefficients are rational functions of the declared symbols; every
//! declared symbol (including jet coordinates such as `Y_x`) contributes an
//! independent differential. Input format:
//!
//! ```text
//! coords: x, y
//! form w1 = dx
//! form w2 = dy - (y/x)*dx
//! dw1 = 0
//! dw2 = (1/x)*w1^w2
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exterior::render_sum;
use crate::kernel::{Assumptions, KernelError, ScalarExpr, SymbolKind, SymbolTable, Var};
use crate::linalg::{Echelon, Row};
use crate::parse::{eval_linear, parse_expr_at, Linear, ParseError, Pos, Resolve};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoordError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("the forms {0} are linearly dependent, so they do not form a coframe")]
    Dependent(String),
}

fn add_into<K: Ord + Clone>(map: &mut BTreeMap<K, ScalarExpr>, k: K, c: ScalarExpr) {
    let v = match map.remove(&k) {
        Some(e) => &e + &c,
        None => c,
    };
    if !v.is_zero() {
        map.insert(k, v);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoordOneForm {
    terms: BTreeMap<Var, ScalarExpr>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoordTwoForm {
    terms: BTreeMap<(Var, Var), ScalarExpr>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoordThreeForm {
    terms: BTreeMap<[Var; 3], ScalarExpr>,
}

impl CoordOneForm {
    pub fn new(terms: BTreeMap<Var, ScalarExpr>) -> Self {
        let mut f = CoordOneForm::default();
        for (v, c) in terms {
            add_into(&mut f.terms, v, c);
        }
        f
    }

    /// `d s`.
    pub fn differential(s: Var) -> Self {
        CoordOneForm::new(BTreeMap::from([(s, ScalarExpr::one())]))
    }

    /// `df = sum (df/ds) ds` over the symbols of `f`.
    pub fn of_function(f: &ScalarExpr) -> Self {
        CoordOneForm::new(f.vars().into_iter().map(|v| (v, f.diff(v))).collect())
    }

    pub fn terms(&self) -> &BTreeMap<Var, ScalarExpr> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: &ScalarExpr) -> Self {
        CoordOneForm::new(self.terms.iter().map(|(v, c)| (*v, c * s)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, c) in &other.terms {
            add_into(&mut out.terms, *v, c.clone());
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> CoordTwoForm {
        let mut out = CoordTwoForm::default();
        for (a, c) in &self.terms {
            for (b, d) in &other.terms {
                out.add_wedge(c * d, *a, *b);
            }
        }
        out
    }

    /// `d(sum f ds) = sum df ^ ds`.
    pub fn exterior_derivative(&self) -> CoordTwoForm {
        let mut out = CoordTwoForm::default();
        for (s, f) in &self.terms {
            out = out.add(&CoordOneForm::of_function(f).wedge(&CoordOneForm::differential(*s)));
        }
        out
    }

    pub fn text(&self, table: &SymbolTable) -> String {
        let terms: Vec<(ScalarExpr, String)> = self
            .terms
            .iter()
            .map(|(v, c)| (c.clone(), format!("d{}", table.name(*v))))
            .collect();
        render_sum(&terms, table, false)
    }
}

impl CoordTwoForm {
    pub fn add_wedge(&mut self, c: ScalarExpr, a: Var, b: Var) {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => add_into(&mut self.terms, (a, b), c),
            std::cmp::Ordering::Greater => add_into(&mut self.terms, (b, a), -c),
            std::cmp::Ordering::Equal => {}
        }
    }

    pub fn terms(&self) -> &BTreeMap<(Var, Var), ScalarExpr> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, *k, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &ScalarExpr) -> Self {
        let mut out = CoordTwoForm::default();
        for (k, c) in &self.terms {
            add_into(&mut out.terms, *k, c * s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&ScalarExpr::int(-1)))
    }

    /// `d(f da ^ db) = df ^ da ^ db`.
    pub fn exterior_derivative(&self) -> CoordThreeForm {
        let mut out = CoordThreeForm::default();
        for ((a, b), f) in &self.terms {
            for (s, c) in CoordOneForm::of_function(f).terms {
                out.add_wedge(c, s, *a, *b);
            }
        }
        out
    }

    pub fn text(&self, table: &SymbolTable) -> String {
        let terms: Vec<(ScalarExpr, String)> = self
            .terms
            .iter()
            .map(|((a, b), c)| (c.clone(), format!("d{} ^ d{}", table.name(*a), table.name(*b))))
            .collect();
        render_sum(&terms, table, false)
    }
}

impl CoordThreeForm {
    pub fn add_wedge(&mut self, c: ScalarExpr, a: Var, b: Var, d: Var) {
        let mut v = [a, b, d];
        let mut sign = false;
        for i in 0..3 {
            for j in 0..2 - i {
                if v[j] == v[j + 1] {
                    return;
                }
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    sign = !sign;
                }
            }
        }
        add_into(&mut self.terms, v, if sign { -c } else { c });
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Linear combination of wedges `w_j ^ w_k` (`j < k`) of coframe members.
pub type FrameTwoForm = BTreeMap<(usize, usize), ScalarExpr>;

#[derive(Clone, Debug)]
pub struct Claim {
    pub form: usize,
    pub rhs: FrameTwoForm,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct Coframe {
    table: SymbolTable,
    names: Vec<String>,
    forms: Vec<CoordOneForm>,
    claims: Vec<Claim>,
    assumptions: Assumptions,
}

struct FormResolver<'a> {
    table: &'a SymbolTable,
}

impl Resolve for FormResolver<'_> {
    type Key = Var;

    fn ident(&self, name: &str) -> Option<Linear<Var>> {
        if let Some(v) = self.table.lookup(name) {
            return Some(Linear::scalar(ScalarExpr::var(v)));
        }
        let v = self.table.lookup(name.strip_prefix('d')?)?;
        Some(Linear::basis(v))
    }
}

struct ClaimResolver<'a> {
    table: &'a SymbolTable,
    names: &'a [String],
}

impl Resolve for ClaimResolver<'_> {
    type Key = (usize, usize);

    fn ident(&self, name: &str) -> Option<Linear<(usize, usize)>> {
        self.table.lookup(name).map(|v| Linear::scalar(ScalarExpr::var(v)))
    }

    fn wedge(&self, lhs: &str, rhs: &str) -> Option<Linear<(usize, usize)>> {
        let i = self.names.iter().position(|n| n == lhs)?;
        let j = self.names.iter().position(|n| n == rhs)?;
        Some(match i.cmp(&j) {
            std::cmp::Ordering::Less => Linear::basis((i, j)),
            std::cmp::Ordering::Greater => {
                let mut l = Linear::basis((j, i));
                l.terms.insert((j, i), ScalarExpr::int(-1));
                l
            }
            std::cmp::Ordering::Equal => Linear::scalar(ScalarExpr::zero()),
        })
    }
}

fn col_of(line: &str, sub: &str) -> usize {
    // `sub` is a suffix slice of `line`
    line[..line.len() - sub.len()].chars().count() + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Col<K> {
    Tag(usize),
    Coord(K),
}

impl Coframe {
    pub fn parse(text: &str) -> Result<Self, CoordError> {
        let mut table: Option<SymbolTable> = None;
        let mut names: Vec<String> = Vec::new();
        let mut forms = Vec::new();
        let mut claims = Vec::new();
        let mut assumptions = Assumptions::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let syntax = |message: String| CoordError::Syntax { line, message };
            if let Some(rest) = trimmed.strip_prefix("coords:") {
                if table.is_some() {
                    return Err(syntax("`coords:` given twice".into()));
                }
                let mut t = SymbolTable::new();
                for name in rest.split(',').map(str::trim) {
                    t.declare(name, SymbolKind::SourceCoordinate)
                        .map_err(|e| syntax(e.to_string()))?;
                }
                table = Some(t);
                continue;
            }
            let t = table
                .as_ref()
                .ok_or_else(|| syntax("`coords:` must come first".into()))?;
            let (lhs, rhs) = content.split_once('=').ok_or_else(|| {
                syntax(format!(
                    "expected `form <name> = ...` or `d<name> = ...`, found `{trimmed}`"
                ))
            })?;
            let rhs_pos = Pos {
                line,
                col: col_of(content, rhs),
            };
            let ast = parse_expr_at(rhs, rhs_pos)?;
            let lhs = lhs.trim();
            if let Some(name) = lhs.strip_prefix("form ") {
                let name = name.trim();
                if !crate::kernel::is_identifier(name) {
                    return Err(syntax(format!("`{name}` is not a valid form name")));
                }
                if names.iter().any(|n| n == name) || t.lookup(name).is_some() {
                    return Err(syntax(format!("`{name}` is already declared")));
                }
                let l = eval_linear(&ast, &FormResolver { table: t }, &mut assumptions)?;
                if !l.scalar.is_zero() {
                    return Err(syntax(format!("form `{name}` has a term without a differential")));
                }
                names.push(name.to_string());
                forms.push(CoordOneForm::new(l.terms));
            } else if let Some(name) = lhs.strip_prefix('d') {
                let form = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| syntax(format!("`{lhs}` does not name the differential of a declared form")))?;
                let l = eval_linear(
                    &ast,
                    &ClaimResolver {
                        table: t,
                        names: &names,
                    },
                    &mut assumptions,
                )?;
                if !l.scalar.is_zero() {
                    return Err(syntax(format!(
                        "claim for `{lhs}` must be a sum of wedge products `a*w1^w2`"
                    )));
                }
                claims.push(Claim {
                    form,
                    rhs: l.terms,
                    line,
                });
            } else {
                return Err(syntax(format!(
                    "expected `form <name> = ...` or `d<name> = ...`, found `{lhs}`"
                )));
            }
        }
        let table = table.ok_or(CoordError::Syntax {
            line: 1,
            message: "missing `coords:` declaration".into(),
        })?;
        Ok(Coframe {
            table,
            names,
            forms,
            claims,
            assumptions,
        })
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn forms(&self) -> &[CoordOneForm] {
        &self.forms
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    /// Expands a frame two-form in coordinate differentials.
    pub fn expand(&self, w: &FrameTwoForm) -> CoordTwoForm {
        let mut out = CoordTwoForm::default();
        for ((j, k), c) in w {
            out = out.add(&self.forms[*j].wedge(&self.forms[*k]).scale(c));
        }
        out
    }

    pub fn frame_text(&self, w: &FrameTwoForm) -> String {
        let terms: Vec<(ScalarExpr, String)> = w
            .iter()
            .map(|((j, k), c)| (c.clone(), format!("{} ^ {}", self.names[*j], self.names[*k])))
            .collect();
        render_sum(&terms, &self.table, false)
    }

    fn check_independent(&self) -> Result<(), CoordError> {
        let mut ech: Echelon<Col<Var>> = Echelon::new();
        let mut dependent = Vec::new();
        for (i, f) in self.forms.iter().enumerate() {
            let mut row: Row<Col<Var>> = f.terms.iter().map(|(v, c)| (Col::Coord(*v), c.clone())).collect();
            row.insert(Col::Tag(i), ScalarExpr::one());
            if let Some(Col::Tag(_)) = ech.insert(&row)? {
                dependent.push(self.names[i].clone());
            }
        }
        if dependent.is_empty() {
            Ok(())
        } else {
            Err(CoordError::Dependent(self.names.join(", ")))
        }
    }

    /// `d w_i` in the wedge basis of the coframe, or `None` when it lies
    /// outside their span.
    pub fn express(&self, i: usize) -> Result<Option<FrameTwoForm>, CoordError> {
        let pairs: Vec<(usize, usize)> = (0..self.forms.len())
            .flat_map(|j| (j + 1..self.forms.len()).map(move |k| (j, k)))
            .collect();
        let mut ech: Echelon<Col<(Var, Var)>> = Echelon::new();
        for (t, (j, k)) in pairs.iter().enumerate() {
            let w = self.forms[*j].wedge(&self.forms[*k]);
            let mut row: Row<Col<(Var, Var)>> = w.terms.iter().map(|(p, c)| (Col::Coord(*p), c.clone())).collect();
            row.insert(Col::Tag(t), ScalarExpr::one());
            ech.insert(&row)?;
        }
        let target: Row<Col<(Var, Var)>> = self.forms[i]
            .exterior_derivative()
            .terms
            .iter()
            .map(|(p, c)| (Col::Coord(*p), c.clone()))
            .collect();
        let rest = ech.reduce(&target);
        if rest.keys().any(|k| matches!(k, Col::Coord(_))) {
            return Ok(None);
        }
        Ok(Some(
            rest.iter()
                .filter_map(|(k, c)| match k {
                    Col::Tag(t) => Some((pairs[*t], -c)),
                    Col::Coord(_) => None,
                })
                .collect(),
        ))
    }

    /// Checks every claim. The residue is `claimed - d w` in coordinates.
    pub fn verify(&self) -> Result<CoframeReport, CoordError> {
        self.check_independent()?;
        let mut results = Vec::new();
        for claim in &self.claims {
            let computed = self.forms[claim.form].exterior_derivative();
            let residue = self.expand(&claim.rhs).sub(&computed);
            results.push(ClaimResult {
                form: claim.form,
                claimed: claim.rhs.clone(),
                expressed: self.express(claim.form)?,
                residue,
            });
        }
        Ok(CoframeReport {
            results,
            assumptions: self.assumptions.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ClaimResult {
    pub form: usize,
    pub claimed: FrameTwoForm,
    /// `d w` in the wedge basis, if it lies in their span.
    pub expressed: Option<FrameTwoForm>,
    pub residue: CoordTwoForm,
}

#[derive(Clone, Debug)]
pub struct CoframeReport {
    pub results: Vec<ClaimResult>,
    pub assumptions: Assumptions,
}

impl CoframeReport {
    pub fn verified(&self) -> bool {
        self.results.iter().all(|r| r.residue.is_zero())
    }

    pub fn text(&self, frame: &Coframe) -> String {
        let mut out = String::new();
        if !self.assumptions.is_empty() {
            let a: Vec<String> = self
                .assumptions
                .iter()
                .map(|e| e.display(frame.table()).to_string())
                .collect();
            out.push_str(&format!("# assumed nonzero: {}\n", a.join(", ")));
        }
        for r in &self.results {
            let name = &frame.names()[r.form];
            let claimed = frame.frame_text(&r.claimed);
            if r.residue.is_zero() {
                out.push_str(&format!("d{name} = {claimed}: verified\n"));
                continue;
            }
            out.push_str(&format!("d{name} = {claimed}: FAILS\n"));
            match &r.expressed {
                Some(w) => out.push_str(&format!("  computed: d{name} = {}\n", frame.frame_text(w))),
                None => out.push_str(&format!(
                    "  computed: d{name} is not in the span of the coframe wedges\n"
                )),
            }
            out.push_str(&format!(
                "  residue (claimed - computed): {}\n",
                r.residue.text(frame.table())
            ));
        }
        out
    }
}
