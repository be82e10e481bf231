//! Formal exterior algebra over Maurer-Cartan generators `mu^a_A`, with
//! rational-function coefficients.
//!
//! Two-forms are stored on strictly increasing generator pairs and
//! three-forms on strictly increasing triples; the evaluation convention is
//! `(a ^ b)(v, w) = a(v) b(w) - a(w) b(v)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::kernel::{Assumptions, ScalarExpr, SymbolTable, Var};
use crate::multiindex::MultiIndex;

/// Formal generator `mu^a_A`: component `a`, derivative multi-index `A`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct McGenerator {
    pub component: usize,
    pub index: MultiIndex,
}

impl McGenerator {
    pub fn new(component: usize, index: MultiIndex) -> Self {
        McGenerator { component, index }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }

    /// `mu^a_{A,b}`.
    pub fn derive(&self, b: usize) -> Self {
        McGenerator::new(self.component, self.index.with(b))
    }

    /// Every generator over `dim` components with `#A <= max`, ascending.
    pub fn up_to_order(dim: usize, max: u32) -> Vec<McGenerator> {
        let mut out: Vec<McGenerator> = MultiIndex::up_to_order(dim, max)
            .into_iter()
            .flat_map(|idx| (0..dim).map(move |a| McGenerator::new(a, idx.clone())))
            .collect();
        out.sort();
        out
    }
}

impl Ord for McGenerator {
    fn cmp(&self, other: &Self) -> Ordering {
        self.index
            .order()
            .cmp(&other.index.order())
            .then(self.component.cmp(&other.component))
            .then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialOrd for McGenerator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for McGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu^{}_{:?}", self.component, self.index)
    }
}

impl fmt::Display for McGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExteriorError {
    #[error("relation set is not in solved form: dependent generator {0} appears on a right-hand side")]
    NotSolved(McGenerator),
    #[error("no structure equation available for {0}; the equation set is not closed at this order")]
    MissingRule(McGenerator),
    #[error("cannot parse generator `{0}`")]
    BadGenerator(String),
}

/// Names used to print generators: component labels (source coordinates,
/// used as superscripts) and target coordinates (subscripts).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenNames {
    pub components: Vec<String>,
    pub targets: Vec<String>,
    /// One-dimensional shorthand `mu_n` for `mu^x_{X...X}`.
    pub compact: bool,
}

impl GenNames {
    pub fn new(components: Vec<String>, targets: Vec<String>) -> Self {
        let compact = false;
        GenNames {
            components,
            targets,
            compact,
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn text(&self, g: &McGenerator) -> String {
        if self.compact {
            let n = g.order();
            return if n < 10 {
                format!("mu_{n}")
            } else {
                format!("mu_{{{n}}}")
            };
        }
        let sub = g.index.render(&self.targets);
        let sup = &self.components[g.component];
        match g.index.order() {
            0 => format!("mu^{sup}"),
            _ if sub.chars().count() == 1 => format!("mu^{sup}_{sub}"),
            _ => format!("mu^{sup}_{{{sub}}}"),
        }
    }

    pub fn latex(&self, g: &McGenerator) -> String {
        self.text(g).replacen("mu", "\\mu", 1)
    }

    /// Inverse of [`GenNames::text`].
    pub fn parse(&self, s: &str) -> Result<McGenerator, ExteriorError> {
        let bad = || ExteriorError::BadGenerator(s.to_string());
        let rest = s.strip_prefix("mu").ok_or_else(bad)?;
        if self.compact {
            let n = rest.strip_prefix('_').ok_or_else(bad)?;
            let n = n.trim_start_matches('{').trim_end_matches('}');
            let n: usize = n.parse().map_err(|_| bad())?;
            return Ok(McGenerator::new(0, MultiIndex::from_indices(&vec![0; n])));
        }
        let rest = rest.strip_prefix('^').ok_or_else(bad)?;
        let (sup, sub) = match rest.split_once('_') {
            Some((a, b)) => (a, b.trim_start_matches('{').trim_end_matches('}')),
            None => (rest, ""),
        };
        let component = self.components.iter().position(|c| c == sup).ok_or_else(bad)?;
        let indices = split_names(sub, &self.targets).ok_or_else(bad)?;
        Ok(McGenerator::new(component, MultiIndex::from_indices(&indices)))
    }
}

/// Splits a concatenation of names, preferring the longest match at each step.
pub(crate) fn split_names(s: &str, names: &[String]) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let (i, n) = names
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.is_empty() && rest.starts_with(n.as_str()))
            .max_by_key(|(_, n)| n.len())?;
        out.push(i);
        rest = &rest[n.len()..];
    }
    Some(out)
}

fn add_into<K: Ord + Clone>(map: &mut BTreeMap<K, ScalarExpr>, k: K, c: ScalarExpr) {
    if c.is_zero() {
        return;
    }
    match map.get_mut(&k) {
        Some(e) => {
            *e = &*e + &c;
            if e.is_zero() {
                map.remove(&k);
            }
        }
        None => {
            map.insert(k, c);
        }
    }
}

#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct OneForm {
    terms: BTreeMap<McGenerator, ScalarExpr>,
}

impl OneForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(g: McGenerator) -> Self {
        Self::term(ScalarExpr::one(), g)
    }

    pub fn term(c: ScalarExpr, g: McGenerator) -> Self {
        let mut f = OneForm::zero();
        f.add_term(g, c);
        f
    }

    pub fn add_term(&mut self, g: McGenerator, c: ScalarExpr) {
        add_into(&mut self.terms, g, c);
    }

    pub fn terms(&self) -> &BTreeMap<McGenerator, ScalarExpr> {
        &self.terms
    }

    pub fn coeff(&self, g: &McGenerator) -> ScalarExpr {
        self.terms.get(g).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &ScalarExpr) -> OneForm {
        let mut out = OneForm::zero();
        for (g, c) in &self.terms {
            out.add_term(g.clone(), c * s);
        }
        out
    }

    pub fn neg(&self) -> OneForm {
        self.scale(&ScalarExpr::int(-1))
    }

    pub fn map_coeffs(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> OneForm {
        let mut out = OneForm::zero();
        for (g, c) in &self.terms {
            out.add_term(g.clone(), f(c));
        }
        out
    }

    pub fn text(&self, names: &GenNames, table: &SymbolTable) -> String {
        let terms: Vec<(ScalarExpr, String)> = self.terms.iter().map(|(g, c)| (c.clone(), names.text(g))).collect();
        render_sum(&terms, table, false)
    }

    pub fn latex(&self, names: &GenNames, table: &SymbolTable) -> String {
        let terms: Vec<(ScalarExpr, String)> = self.terms.iter().map(|(g, c)| (c.clone(), names.latex(g))).collect();
        render_sum(&terms, table, true)
    }
}

#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct TwoForm {
    terms: BTreeMap<(McGenerator, McGenerator), ScalarExpr>,
}

impl TwoForm {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Adds `c * g ^ h`, normalizing to the ordered pair.
    pub fn add_wedge(&mut self, c: ScalarExpr, g: &McGenerator, h: &McGenerator) {
        match g.cmp(h) {
            Ordering::Less => add_into(&mut self.terms, (g.clone(), h.clone()), c),
            Ordering::Greater => add_into(&mut self.terms, (h.clone(), g.clone()), -c),
            Ordering::Equal => {}
        }
    }

    pub fn terms(&self) -> &BTreeMap<(McGenerator, McGenerator), ScalarExpr> {
        &self.terms
    }

    pub fn coeff(&self, g: &McGenerator, h: &McGenerator) -> ScalarExpr {
        match g.cmp(h) {
            Ordering::Less => self.terms.get(&(g.clone(), h.clone())).cloned().unwrap_or_default(),
            Ordering::Greater => -self.coeff(h, g),
            Ordering::Equal => ScalarExpr::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &ScalarExpr) -> TwoForm {
        let mut out = TwoForm::zero();
        for (k, c) in &self.terms {
            add_into(&mut out.terms, k.clone(), c * s);
        }
        out
    }

    pub fn neg(&self) -> TwoForm {
        self.scale(&ScalarExpr::int(-1))
    }

    pub fn generators(&self) -> BTreeSet<McGenerator> {
        self.terms.keys().flat_map(|(g, h)| [g.clone(), h.clone()]).collect()
    }

    pub fn coefficient_vars(&self) -> BTreeSet<Var> {
        self.terms.values().flat_map(|c| c.vars()).collect()
    }

    pub fn map_coeffs(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> TwoForm {
        let mut out = TwoForm::zero();
        for (k, c) in &self.terms {
            add_into(&mut out.terms, k.clone(), f(c));
        }
        out
    }

    /// Terms oriented so each coefficient reads positive, grouped by right
    /// factor (descending), left factors ascending within a group.
    fn oriented_groups(&self) -> Vec<(McGenerator, Vec<(ScalarExpr, McGenerator)>)> {
        let mut groups: BTreeMap<McGenerator, Vec<(ScalarExpr, McGenerator)>> = BTreeMap::new();
        for ((g, h), c) in &self.terms {
            let (left, right, c) = if c.is_negative_leading() {
                (h, g, -c)
            } else {
                (g, h, c.clone())
            };
            groups.entry(right.clone()).or_default().push((c, left.clone()));
        }
        groups
            .into_iter()
            .rev()
            .map(|(right, mut lefts)| {
                lefts.sort_by(|a, b| a.1.cmp(&b.1));
                (right, lefts)
            })
            .collect()
    }

    fn render(&self, names: &GenNames, table: &SymbolTable, latex: bool) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let (wedge, gen): (&str, &dyn Fn(&McGenerator) -> String) = if latex {
            ("\\wedge", &|g| names.latex(g))
        } else {
            (" ^ ", &|g| names.text(g))
        };
        let mut parts: Vec<(ScalarExpr, String)> = Vec::new();
        for (right, lefts) in self.oriented_groups() {
            if lefts.len() == 1 {
                let (c, l) = &lefts[0];
                parts.push((c.clone(), format!("{}{wedge}{}", gen(l), gen(&right))));
            } else {
                let inner: Vec<(ScalarExpr, String)> = lefts.iter().map(|(c, l)| (c.clone(), gen(l))).collect();
                let sum = render_sum(&inner, table, latex);
                parts.push((ScalarExpr::one(), format!("({sum}){wedge}{}", gen(&right))));
            }
        }
        render_sum(&parts, table, latex)
    }

    pub fn text(&self, names: &GenNames, table: &SymbolTable) -> String {
        self.render(names, table, false)
    }

    pub fn latex(&self, names: &GenNames, table: &SymbolTable) -> String {
        self.render(names, table, true)
    }
}

/// Renders `sum c_i * body_i` with sign-aware joining.
pub(crate) fn render_sum(terms: &[(ScalarExpr, String)], table: &SymbolTable, latex: bool) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (c, body)) in terms.iter().enumerate() {
        let negative = c.is_negative_leading() && !c.is_sum();
        let c = if negative { -c } else { c.clone() };
        match (i, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&coefficient_prefix(&c, table, latex));
        out.push_str(body);
    }
    out
}

fn coefficient_prefix(c: &ScalarExpr, table: &SymbolTable, latex: bool) -> String {
    if c.is_one() {
        return String::new();
    }
    let compound = c.numerator().terms().len() > 1;
    if latex {
        let s = c.latex(table);
        if compound && c.denominator().is_one() {
            format!("({s})\\,")
        } else {
            format!("{s}\\,")
        }
    } else {
        let s = c.display(table).to_string();
        if compound || !c.denominator().is_one() {
            format!("({s})*")
        } else {
            format!("{s}*")
        }
    }
}

/// Three-forms appear only inside the `d^2 = 0` check.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct ThreeForm {
    terms: BTreeMap<[McGenerator; 3], ScalarExpr>,
}

impl ThreeForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_wedge(&mut self, c: ScalarExpr, g: &McGenerator, h: &McGenerator, k: &McGenerator) {
        let mut v = [g.clone(), h.clone(), k.clone()];
        let mut sign = 1;
        // bubble sort tracks permutation parity
        for i in 0..3 {
            for j in 0..2 - i {
                match v[j].cmp(&v[j + 1]) {
                    Ordering::Greater => {
                        v.swap(j, j + 1);
                        sign = -sign;
                    }
                    Ordering::Equal => return,
                    Ordering::Less => {}
                }
            }
        }
        let c = if sign < 0 { -c } else { c };
        add_into(&mut self.terms, v, c);
    }

    pub fn terms(&self) -> &BTreeMap<[McGenerator; 3], ScalarExpr> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn text(&self, names: &GenNames, table: &SymbolTable) -> String {
        let terms: Vec<(ScalarExpr, String)> = self
            .terms
            .iter()
            .map(|([a, b, c], k)| {
                (
                    k.clone(),
                    format!("{} ^ {} ^ {}", names.text(a), names.text(b), names.text(c)),
                )
            })
            .collect();
        render_sum(&terms, table, false)
    }
}

pub fn wedge(alpha: &OneForm, beta: &OneForm) -> TwoForm {
    let mut out = TwoForm::zero();
    for (g, a) in &alpha.terms {
        for (h, b) in &beta.terms {
            out.add_wedge(a * b, g, h);
        }
    }
    out
}

/// `omega ^ alpha` for a two-form and a one-form.
pub fn wedge_2_1(omega: &TwoForm, alpha: &OneForm) -> ThreeForm {
    let mut out = ThreeForm::zero();
    for ((g, h), a) in &omega.terms {
        for (k, b) in &alpha.terms {
            out.add_wedge(a * b, g, h, k);
        }
    }
    out
}

/// `alpha ^ omega` for a one-form and a two-form.
pub fn wedge_1_2(alpha: &OneForm, omega: &TwoForm) -> ThreeForm {
    let mut out = ThreeForm::zero();
    for (k, b) in &alpha.terms {
        for ((g, h), a) in &omega.terms {
            out.add_wedge(a * b, k, g, h);
        }
    }
    out
}

impl ThreeForm {
    pub fn add(&self, other: &ThreeForm) -> ThreeForm {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> ThreeForm {
        let mut out = ThreeForm::zero();
        for (k, c) in &self.terms {
            add_into(&mut out.terms, k.clone(), -c);
        }
        out
    }
}

/// Solved linear relations among generators: each dependent generator
/// equals a one-form over parametric generators only.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LiftedRelations {
    solved: BTreeMap<McGenerator, OneForm>,
    parametric: Vec<McGenerator>,
    assumptions: Assumptions,
    order: u32,
}

impl LiftedRelations {
    pub fn new(
        solved: BTreeMap<McGenerator, OneForm>,
        parametric: Vec<McGenerator>,
        assumptions: Assumptions,
        order: u32,
    ) -> Result<Self, ExteriorError> {
        for rhs in solved.values() {
            if let Some(g) = rhs.terms.keys().find(|g| solved.contains_key(*g)) {
                return Err(ExteriorError::NotSolved(g.clone()));
            }
        }
        Ok(LiftedRelations {
            solved,
            parametric,
            assumptions,
            order,
        })
    }

    /// No relations: the full diffeomorphism pseudo-group up to `order`.
    pub fn free(dim: usize, order: u32) -> Self {
        LiftedRelations {
            solved: BTreeMap::new(),
            parametric: McGenerator::up_to_order(dim, order),
            assumptions: Assumptions::new(),
            order,
        }
    }

    pub fn solved(&self) -> &BTreeMap<McGenerator, OneForm> {
        &self.solved
    }

    pub fn parametric(&self) -> &[McGenerator] {
        &self.parametric
    }

    pub fn assumptions(&self) -> &Assumptions {
        &self.assumptions
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_dependent(&self, g: &McGenerator) -> bool {
        self.solved.contains_key(g)
    }

    /// Image of a single generator.
    pub fn reduce_generator(&self, g: &McGenerator) -> OneForm {
        self.solved
            .get(g)
            .cloned()
            .unwrap_or_else(|| OneForm::generator(g.clone()))
    }

    pub fn reduce_one(&self, alpha: &OneForm) -> OneForm {
        let mut out = OneForm::zero();
        for (g, c) in &alpha.terms {
            match self.solved.get(g) {
                Some(rhs) => {
                    for (h, d) in &rhs.terms {
                        out.add_term(h.clone(), c * d);
                    }
                }
                None => out.add_term(g.clone(), c.clone()),
            }
        }
        out
    }

    pub fn reduce_two(&self, omega: &TwoForm) -> TwoForm {
        let mut out = TwoForm::zero();
        for ((g, h), c) in &omega.terms {
            if !self.is_dependent(g) && !self.is_dependent(h) {
                out.add_wedge(c.clone(), g, h);
                continue;
            }
            let w = wedge(&self.reduce_generator(g), &self.reduce_generator(h));
            out = out.add(&w.scale(c));
        }
        out
    }

    pub fn reduce_three(&self, omega: &ThreeForm) -> ThreeForm {
        let mut out = ThreeForm::zero();
        for ([g, h, k], c) in &omega.terms {
            let (rg, rh, rk) = (
                self.reduce_generator(g),
                self.reduce_generator(h),
                self.reduce_generator(k),
            );
            out = out.add(&wedge_2_1(&wedge(&rg, &rh), &rk.scale(c)));
        }
        out
    }
}

/// `d` of a one-form on the target fiber: coefficients are constant there,
/// so `d(f g) = f dg`. The result is reduced modulo `rel`.
pub fn d_apply(
    omega: &OneForm,
    rules: &BTreeMap<McGenerator, TwoForm>,
    rel: &LiftedRelations,
) -> Result<TwoForm, ExteriorError> {
    let mut out = TwoForm::zero();
    for (g, c) in &omega.terms {
        let dg = rules.get(g).ok_or_else(|| ExteriorError::MissingRule(g.clone()))?;
        out = out.add(&dg.scale(c));
    }
    Ok(rel.reduce_two(&out))
}

/// `d(c g ^ h) = c (dg ^ h - g ^ dh)`, reduced modulo `rel`.
pub fn d_apply_two(
    omega: &TwoForm,
    rules: &BTreeMap<McGenerator, TwoForm>,
    rel: &LiftedRelations,
) -> Result<ThreeForm, ExteriorError> {
    let mut out = ThreeForm::zero();
    for ((g, h), c) in &omega.terms {
        let dg = rules.get(g).ok_or_else(|| ExteriorError::MissingRule(g.clone()))?;
        let dh = rules.get(h).ok_or_else(|| ExteriorError::MissingRule(h.clone()))?;
        let first = wedge_2_1(&dg.scale(c), &OneForm::generator(h.clone()));
        let second = wedge_1_2(&OneForm::term(c.clone(), g.clone()), dh);
        out = out.add(&first).add(&second.neg());
    }
    Ok(rel.reduce_three(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SymbolKind;
    use proptest::prelude::*;

    fn gen(a: usize, idx: &[usize]) -> McGenerator {
        McGenerator::new(a, MultiIndex::from_indices(idx))
    }

    fn names3() -> (GenNames, SymbolTable) {
        let comps = ["x", "y", "z"].map(String::from).to_vec();
        let targets = ["X", "Y", "Z"].map(String::from).to_vec();
        let table =
            SymbolTable::declare_all(targets.iter().map(|n| (n.as_str(), SymbolKind::TargetCoordinate))).unwrap();
        (GenNames::new(comps, targets), table)
    }

    #[test]
    fn generator_order() {
        let mut v = vec![gen(1, &[0]), gen(2, &[]), gen(1, &[]), gen(1, &[1]), gen(2, &[0])];
        v.sort();
        assert_eq!(
            v,
            vec![gen(1, &[]), gen(2, &[]), gen(1, &[0]), gen(1, &[1]), gen(2, &[0])]
        );
    }

    #[test]
    fn generator_names_round_trip() {
        let (names, _) = names3();
        for g in McGenerator::up_to_order(3, 2) {
            assert_eq!(names.parse(&names.text(&g)).unwrap(), g);
        }
        assert_eq!(names.text(&gen(2, &[0, 0])), "mu^z_{XX}");
        assert_eq!(names.latex(&gen(1, &[1])), "\\mu^y_Y");
        let mut compact = GenNames::new(vec!["x".into()], vec!["X".into()]);
        compact.compact = true;
        assert_eq!(compact.text(&gen(0, &[0, 0, 0])), "mu_3");
        assert_eq!(compact.parse("mu_3").unwrap(), gen(0, &[0, 0, 0]));
    }

    #[test]
    fn wedge_normalization() {
        let m0 = OneForm::generator(gen(0, &[]));
        let m1 = OneForm::generator(gen(0, &[0]));
        assert!(wedge(&m0, &m0).is_zero());
        let w = wedge(&m1, &m0);
        assert_eq!(w.terms().len(), 1);
        assert_eq!(w.coeff(&gen(0, &[]), &gen(0, &[0])), ScalarExpr::int(-1));
    }

    #[test]
    fn wedge_with_coefficient_renders_like_the_structure_equation() {
        let (names, table) = names3();
        let x = ScalarExpr::var(table.lookup("X").unwrap());
        let a = OneForm::term(x, gen(1, &[1]));
        let b = OneForm::generator(gen(2, &[]));
        assert_eq!(wedge(&a, &b).text(&names, &table), "X*mu^y_Y ^ mu^z");
        assert_eq!(wedge(&a, &b).latex(&names, &table), "X\\,\\mu^y_Y\\wedge\\mu^z");
    }

    #[test]
    fn reduction_and_not_solved_error() {
        let (names, table) = names3();
        let x = ScalarExpr::var(table.lookup("X").unwrap());
        let solved = BTreeMap::from([
            (gen(0, &[]), OneForm::zero()),
            (gen(2, &[2]), OneForm::term(x.clone(), gen(1, &[1]))),
        ]);
        let rel = LiftedRelations::new(solved, vec![], Assumptions::new(), 1).unwrap();
        assert!(rel.reduce_one(&OneForm::generator(gen(0, &[]))).is_zero());
        let r = rel.reduce_one(&OneForm::generator(gen(2, &[2])));
        assert_eq!(r.text(&names, &table), "X*mu^y_Y");
        let param = OneForm::generator(gen(1, &[0]));
        assert_eq!(rel.reduce_one(&param), param);

        let bad = BTreeMap::from([
            (gen(0, &[]), OneForm::generator(gen(1, &[]))),
            (gen(1, &[]), OneForm::zero()),
        ]);
        assert_eq!(
            LiftedRelations::new(bad, vec![], Assumptions::new(), 0).unwrap_err(),
            ExteriorError::NotSolved(gen(1, &[]))
        );
    }

    #[test]
    fn d_of_zero_and_missing_rule() {
        let rel = LiftedRelations::free(1, 1);
        let rules = BTreeMap::new();
        assert!(d_apply(&OneForm::zero(), &rules, &rel).unwrap().is_zero());
        assert!(matches!(
            d_apply(&OneForm::generator(gen(0, &[])), &rules, &rel),
            Err(ExteriorError::MissingRule(_))
        ));
    }

    #[test]
    fn three_form_sign() {
        let (a, b, c) = (gen(0, &[]), gen(0, &[0]), gen(0, &[0, 0]));
        let mut t = ThreeForm::zero();
        t.add_wedge(ScalarExpr::one(), &b, &a, &c);
        assert_eq!(t.terms()[&[a.clone(), b.clone(), c.clone()]], ScalarExpr::int(-1));
        t.add_wedge(ScalarExpr::one(), &a, &b, &c);
        assert!(t.is_zero());
        t.add_wedge(ScalarExpr::one(), &a, &a, &c);
        assert!(t.is_zero());
    }

    fn arb_one_form() -> impl Strategy<Value = OneForm> {
        prop::collection::vec((0usize..2, 0u32..3, -3i64..4), 0..5).prop_map(|v| {
            let mut f = OneForm::zero();
            for (a, n, c) in v {
                f.add_term(gen(a, &vec![0; n as usize]), ScalarExpr::int(c));
            }
            f
        })
    }

    proptest! {
        #[test]
        fn wedge_is_antisymmetric_and_bilinear(a in arb_one_form(), b in arb_one_form(), c in arb_one_form(), k in -4i64..5) {
            prop_assert_eq!(wedge(&a, &b), wedge(&b, &a).neg());
            prop_assert!(wedge(&a, &a).is_zero());
            let s = ScalarExpr::int(k);
            prop_assert_eq!(wedge(&a.add(&c.scale(&s)), &b), wedge(&a, &b).add(&wedge(&c, &b).scale(&s)));
        }

        #[test]
        fn reduction_is_linear_and_idempotent(a in arb_one_form(), b in arb_one_form(), k in -4i64..5) {
            let solved = BTreeMap::from([
                (gen(0, &[]), OneForm::zero()),
                (gen(1, &[0]), OneForm::term(ScalarExpr::int(2), gen(1, &[]))),
                (gen(0, &[0, 0]), OneForm::generator(gen(1, &[0, 0])).add(&OneForm::generator(gen(0, &[0])))),
            ]);
            let rel = LiftedRelations::new(solved, vec![], Assumptions::new(), 2).unwrap();
            let s = ScalarExpr::int(k);
            let ra = rel.reduce_one(&a);
            prop_assert_eq!(rel.reduce_one(&ra), ra.clone());
            prop_assert_eq!(rel.reduce_one(&a.add(&b.scale(&s))), ra.add(&rel.reduce_one(&b).scale(&s)));
            let w = wedge(&a, &b);
            let rw = rel.reduce_two(&w);
            prop_assert_eq!(rel.reduce_two(&rw), rw.clone());
            prop_assert_eq!(rw, wedge(&rel.reduce_one(&a), &rel.reduce_one(&b)));
        }
    }
}
