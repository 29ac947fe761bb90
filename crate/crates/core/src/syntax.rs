//! Logical syntax: terms, atoms, dependencies, queries and the knowledge base.
//!
//! Everything here is immutable once built. Identifiers are shared `Arc<str>`
//! so ontologies, chase instances and reports can be handed across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Interned-by-sharing identifier.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A term of the logical language.
///
/// The derived ordering puts every constant before every labeled null, and
/// orders nulls by creation ordinal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Name),
    Null(u64),
    Var(Name),
}

impl Term {
    pub fn constant(s: &str) -> Self {
        Term::Const(name(s))
    }

    pub fn var(s: &str) -> Self {
        Term::Var(name(s))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Null(n) => write!(f, "_:n{n}"),
            Term::Var(v) => f.write_str(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: name(predicate),
            args,
        }
    }

    /// Builds a ground atom from constant names.
    pub fn ground(predicate: &str, consts: &[&str]) -> Self {
        Atom::new(predicate, consts.iter().map(|c| Term::constant(c)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// True iff every argument is a constant.
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_const)
    }

    pub fn has_nulls(&self) -> bool {
        self.args.iter().any(Term::is_null)
    }

    /// Variables in order of first occurrence.
    pub fn variables(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Distinct variables of a conjunction, in order of first occurrence.
pub fn conjunction_vars(atoms: &[Atom]) -> Vec<Name> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in atoms.iter().flat_map(Atom::variables) {
        if seen.insert(v.clone()) {
            out.push(v.clone());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TgdClass {
    Linear,
    Guarded,
    Neither,
}

impl fmt::Display for TgdClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TgdClass::Linear => "linear",
            TgdClass::Guarded => "guarded",
            TgdClass::Neither => "neither",
        })
    }
}

/// Tuple-generating dependency with a single head atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tgd {
    pub label: Name,
    pub body: Vec<Atom>,
    pub head: Atom,
    /// Variables occurring in the head only.
    pub existentials: Vec<Name>,
}

impl Tgd {
    /// Universally quantified variables, i.e. those of the body.
    pub fn universal_vars(&self) -> Vec<Name> {
        conjunction_vars(&self.body)
    }

    /// Universal variables that also occur in the head.
    pub fn frontier(&self) -> Vec<Name> {
        let head: BTreeSet<&Name> = self.head.variables().collect();
        self.universal_vars()
            .into_iter()
            .filter(|v| head.contains(v))
            .collect()
    }

    /// Index of the leftmost body atom holding every universal variable.
    pub fn guard(&self) -> Option<usize> {
        let vars = self.universal_vars();
        self.body.iter().position(|a| {
            let held: BTreeSet<&Name> = a.variables().collect();
            vars.iter().all(|v| held.contains(v))
        })
    }

    pub fn classify(&self) -> TgdClass {
        classify_tgd(self)
    }
}

/// Linear (single body atom), guarded (some body atom holds every universal
/// variable), or neither. Linear implies guarded; the narrower class wins.
pub fn classify_tgd(t: &Tgd) -> TgdClass {
    if t.body.len() == 1 {
        TgdClass::Linear
    } else if t.guard().is_some() {
        TgdClass::Guarded
    } else {
        TgdClass::Neither
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        write_conj(f, &self.body, ", ")?;
        f.write_str(" -> ")?;
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(v)?;
            }
            f.write_str(" ")?;
        }
        write!(f, "{}.", self.head)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeConstraint {
    pub body: Vec<Atom>,
}

impl fmt::Display for NegativeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conj(f, &self.body, ", ")?;
        f.write_str(" -> false.")
    }
}

/// Equality-generating dependency `body -> lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Egd {
    pub body: Vec<Atom>,
    pub lhs: Name,
    pub rhs: Name,
}

impl fmt::Display for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conj(f, &self.body, ", ")?;
        write!(f, " -> {} = {}.", self.lhs, self.rhs)
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, atoms: &[Atom], sep: &str) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// A Datalog+/- knowledge base together with its declared schema.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub database: BTreeSet<Atom>,
    pub tgds: Vec<Tgd>,
    pub egds: Vec<Egd>,
    pub ncs: Vec<NegativeConstraint>,
    /// Predicate name to arity.
    pub schema: BTreeMap<Name, usize>,
    /// Predicate name to its ordered feature tuple.
    pub features: BTreeMap<Name, Vec<Name>>,
    /// Pairs of predicates declared to possibly share instances.
    pub overlaps: BTreeSet<(Name, Name)>,
}

impl Ontology {
    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.schema.get(predicate).copied()
    }

    pub fn features_of(&self, predicate: &str) -> Option<&[Name]> {
        self.features.get(predicate).map(Vec::as_slice)
    }

    pub fn tgd(&self, label: &str) -> Option<&Tgd> {
        self.tgds.iter().find(|t| &*t.label == label)
    }

    /// Whether the two predicates were declared as overlapping.
    pub fn declared_overlap(&self, p: &str, q: &str) -> bool {
        self.overlaps
            .iter()
            .any(|(a, b)| (&**a == p && &**b == q) || (&**a == q && &**b == p))
    }

    /// Counts of (linear, guarded-but-not-linear, neither) TGDs.
    pub fn classification(&self) -> (usize, usize, usize) {
        self.tgds
            .iter()
            .fold((0, 0, 0), |(l, g, n), t| match t.classify() {
                TgdClass::Linear => (l + 1, g, n),
                TgdClass::Guarded => (l, g + 1, n),
                TgdClass::Neither => (l, g, n + 1),
            })
    }
}

impl fmt::Display for Ontology {
    /// Prints the knowledge base in the source language; the output parses
    /// back to an equal ontology.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, arity) in &self.schema {
            write!(f, "@pred {p}/{arity}")?;
            if let Some(fs) = self.features.get(p) {
                f.write_str(" features(")?;
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(x)?;
                }
                f.write_str(")")?;
            }
            f.write_str(".\n")?;
        }
        for (p, q) in &self.overlaps {
            writeln!(f, "@overlap {p}, {q}.")?;
        }
        for a in &self.database {
            writeln!(f, "{a}.")?;
        }
        for t in &self.tgds {
            writeln!(f, "{t}")?;
        }
        for c in &self.ncs {
            writeln!(f, "{c}")?;
        }
        for e in &self.egds {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Conjunctive query `Q(free) = exists existential . atoms`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub atoms: Vec<Atom>,
    pub free: Vec<Name>,
    pub existential: Vec<Name>,
    /// Index of the distinguished atom when the query is simple.
    pub distinguished: Option<usize>,
}

impl Query {
    /// Builds a query whose free variables are all variables not listed as
    /// existential, in order of first occurrence, and detects simplicity.
    pub fn new(atoms: Vec<Atom>, existential: Vec<Name>) -> Self {
        let free: Vec<Name> = conjunction_vars(&atoms)
            .into_iter()
            .filter(|v| !existential.contains(v))
            .collect();
        let distinguished = find_distinguished(&atoms, &free);
        Query {
            atoms,
            free,
            existential,
            distinguished,
        }
    }

    pub fn is_simple(&self) -> bool {
        self.distinguished.is_some()
    }

    /// Single atom, no existential variables.
    pub fn is_atomic(&self) -> bool {
        self.atoms.len() == 1 && self.existential.is_empty() && self.is_simple()
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    pub fn distinguished_atom(&self) -> Option<&Atom> {
        self.distinguished.map(|i| &self.atoms[i])
    }

    /// Instantiates the distinguished atom with an answer tuple.
    pub fn atom_form(&self, tuple: &[Name]) -> Option<Atom> {
        let d = self.distinguished_atom()?;
        let args = d
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => {
                    let i = self.free.iter().position(|f| f == v)?;
                    Some(Term::Const(tuple[i].clone()))
                }
                other => Some(other.clone()),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Atom {
            predicate: d.predicate.clone(),
            args,
        })
    }
}

fn find_distinguished(atoms: &[Atom], free: &[Name]) -> Option<usize> {
    let mut candidates = atoms.iter().enumerate().filter(|(_, a)| {
        a.args.len() == free.len()
            && a.args
                .iter()
                .zip(free)
                .all(|(t, v)| t.as_var() == Some(v))
    });
    let first = candidates.next()?.0;
    if candidates.next().is_some() {
        None
    } else {
        Some(first)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.existential.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existential.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(v)?;
            }
            f.write_str(" . ")?;
        }
        write_conj(f, &self.atoms, " & ")
    }
}
