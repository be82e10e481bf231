use std::collections::HashMap;
use std::fmt;

use super::KernelError;

/// Index of a declared symbol. Ordering follows declaration order, which is
/// also the variable order used by the monomial ordering.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(u32);

impl Var {
    pub fn new(index: usize) -> Self {
        Var(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SymbolKind {
    SourceCoordinate,
    TargetCoordinate,
    JetSymbol,
    EvaluationParameter,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::SourceCoordinate => "source coordinate",
            SymbolKind::TargetCoordinate => "target coordinate",
            SymbolKind::JetSymbol => "jet symbol",
            SymbolKind::EvaluationParameter => "evaluation parameter",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
}

/// Append-only table of declared symbols.
///
/// Mutation goes through `&mut self`, so sharing a table across threads
/// requires the usual exclusive borrow (or a lock around the owner).
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, Var>,
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from `(name, kind)` pairs in order.
    pub fn declare_all<'a, I>(spec: I) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = (&'a str, SymbolKind)>,
    {
        let mut table = SymbolTable::new();
        for (name, kind) in spec {
            table.declare(name, kind)?;
        }
        Ok(table)
    }

    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<Var, KernelError> {
        if !is_identifier(name) {
            return Err(KernelError::InvalidName(name.to_string()));
        }
        if let Some(&v) = self.by_name.get(name) {
            let existing = self.symbols[v.index()].kind;
            return Err(if kind == SymbolKind::JetSymbol && existing != SymbolKind::JetSymbol {
                KernelError::ReservedName {
                    name: name.to_string(),
                    existing,
                }
            } else {
                KernelError::DuplicateSymbol(name.to_string())
            });
        }
        let v = Var::new(self.symbols.len());
        self.symbols.push(Symbol {
            name: name.to_string(),
            kind,
        });
        self.by_name.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).copied()
    }

    pub fn symbol(&self, v: Var) -> &Symbol {
        &self.symbols[v.index()]
    }

    pub fn name(&self, v: Var) -> &str {
        &self.symbols[v.index()].name
    }

    pub fn kind(&self, v: Var) -> SymbolKind {
        self.symbols[v.index()].kind
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.symbols.len()).map(Var::new)
    }

    pub fn vars_of_kind(&self, kind: SymbolKind) -> Vec<Var> {
        self.vars().filter(|v| self.kind(*v) == kind).collect()
    }
}
