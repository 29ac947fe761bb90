//! Breadth-first restricted chase for linear and guarded TGDs.
//!
//! A level `k` step considers every body image whose highest atom level is
//! `k - 1`, sorts the resulting triggers by TGD position and then by the body
//! image (predicate name, then argument terms), and fires them in that order.
//! A trigger fires only if its head has no match yet, and every existential
//! variable gets a fresh null whose ordinal follows all existing ones. The
//! whole procedure is deterministic: two runs over the same input produce the
//! same atoms, levels and null ordinals.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::syntax::{Atom, Egd, Name, NegativeConstraint, Ontology, Query, Term, Tgd, TgdClass};

/// Variable assignment built during matching. Bodies are small, so a flat
/// vector beats a map here.
pub type Subst = Vec<(Name, Term)>;

fn lookup<'a>(s: &'a Subst, v: &Name) -> Option<&'a Term> {
    s.iter().find(|(k, _)| k == v).map(|(_, t)| t)
}

/// Applies a substitution to a pattern atom; unbound variables stay.
pub fn apply(s: &Subst, a: &Atom) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => lookup(s, v).cloned().unwrap_or_else(|| t.clone()),
                other => other.clone(),
            })
            .collect(),
    }
}

/// Limits on a chase run. `None` means unbounded in that dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChaseBound {
    /// Highest derivation level to build.
    pub max_level: Option<usize>,
    /// Highest nesting depth of a created null: a null made from a trigger
    /// whose frontier holds only constants has depth 1, otherwise one more
    /// than the deepest null in the frontier.
    pub max_null_depth: Option<u32>,
}

impl ChaseBound {
    pub fn levels(k: usize) -> Self {
        ChaseBound {
            max_level: Some(k),
            max_null_depth: None,
        }
    }

    pub fn null_depth(d: u32) -> Self {
        ChaseBound {
            max_level: None,
            max_null_depth: Some(d),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ChaseInstance {
    atoms: Vec<Atom>,
    levels: Vec<usize>,
    index: HashMap<Atom, usize>,
    by_pred: HashMap<Name, Vec<usize>>,
    by_arg: HashMap<(Name, usize, Term), Vec<usize>>,
    /// Depth of null `n` is stored at `n - 1`.
    null_depth: Vec<u32>,
    level: usize,
    fixpoint: bool,
}

impl ChaseInstance {
    /// Level-0 instance holding exactly the database.
    pub fn from_database<'a>(db: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut inst = ChaseInstance::default();
        for a in db {
            inst.insert(a.clone(), 0);
        }
        inst
    }

    fn insert(&mut self, a: Atom, level: usize) -> bool {
        if self.index.contains_key(&a) {
            return false;
        }
        let i = self.atoms.len();
        self.by_pred.entry(a.predicate.clone()).or_default().push(i);
        for (pos, t) in a.args.iter().enumerate() {
            self.by_arg
                .entry((a.predicate.clone(), pos, t.clone()))
                .or_default()
                .push(i);
        }
        self.index.insert(a.clone(), i);
        self.atoms.push(a);
        self.levels.push(level);
        true
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.index.contains_key(a)
    }

    pub fn level_of(&self, a: &Atom) -> Option<usize> {
        self.index.get(a).map(|&i| self.levels[i])
    }

    /// Atoms with their derivation levels, in insertion order.
    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, usize)> {
        self.atoms.iter().zip(self.levels.iter().copied())
    }

    /// Highest level built so far.
    pub fn level(&self) -> usize {
        self.level
    }

    /// True once a step added nothing.
    pub fn is_fixpoint(&self) -> bool {
        self.fixpoint
    }

    /// Number of nulls created so far.
    pub fn null_count(&self) -> u64 {
        self.null_depth.len() as u64
    }

    fn depth_of(&self, t: &Term) -> u32 {
        match t {
            Term::Null(n) => self.null_depth[(*n - 1) as usize],
            _ => 0,
        }
    }

    fn candidates(&self, pattern: &Atom, s: &Subst) -> &[usize] {
        for (pos, t) in pattern.args.iter().enumerate() {
            let bound = match t {
                Term::Var(v) => lookup(s, v).cloned(),
                other => Some(other.clone()),
            };
            if let Some(b) = bound {
                return self
                    .by_arg
                    .get(&(pattern.predicate.clone(), pos, b))
                    .map_or(&[], Vec::as_slice);
            }
        }
        self.by_pred
            .get(&pattern.predicate)
            .map_or(&[], Vec::as_slice)
    }

    /// Extends `s` so that `pattern` maps onto stored atom `i`.
    fn unify(&self, pattern: &Atom, i: usize, s: &mut Subst) -> bool {
        let target = &self.atoms[i];
        if target.predicate != pattern.predicate || target.args.len() != pattern.args.len() {
            return false;
        }
        let mark = s.len();
        for (p, t) in pattern.args.iter().zip(&target.args) {
            let ok = match p {
                Term::Var(v) => match lookup(s, v) {
                    Some(b) => b == t,
                    None => {
                        s.push((v.clone(), t.clone()));
                        true
                    }
                },
                other => other == t,
            };
            if !ok {
                s.truncate(mark);
                return false;
            }
        }
        true
    }

    /// All homomorphisms from `pattern` into the instance extending `init`,
    /// with the matched atom indices. `admit(j, level)` filters which stored
    /// atoms pattern atom `j` may map to.
    pub fn homomorphisms<F>(&self, pattern: &[Atom], init: Subst, admit: F) -> Vec<(Subst, Vec<usize>)>
    where
        F: Fn(usize, usize) -> bool,
    {
        let mut out = Vec::new();
        let mut image = Vec::with_capacity(pattern.len());
        let mut s = init;
        self.search(pattern, 0, &mut s, &mut image, &admit, &mut out, false);
        out
    }

    /// Whether at least one homomorphism exists.
    pub fn has_match(&self, pattern: &[Atom], init: Subst) -> bool {
        let mut out = Vec::new();
        let mut image = Vec::new();
        let mut s = init;
        self.search(pattern, 0, &mut s, &mut image, &|_, _| true, &mut out, true);
        !out.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    fn search<F>(
        &self,
        pattern: &[Atom],
        j: usize,
        s: &mut Subst,
        image: &mut Vec<usize>,
        admit: &F,
        out: &mut Vec<(Subst, Vec<usize>)>,
        first_only: bool,
    ) where
        F: Fn(usize, usize) -> bool,
    {
        if j == pattern.len() {
            out.push((s.clone(), image.clone()));
            return;
        }
        for &i in self.candidates(&pattern[j], s) {
            if !admit(j, self.levels[i]) {
                continue;
            }
            let mark = s.len();
            if self.unify(&pattern[j], i, s) {
                image.push(i);
                self.search(pattern, j + 1, s, image, admit, out, first_only);
                image.pop();
                s.truncate(mark);
                if first_only && !out.is_empty() {
                    return;
                }
            }
        }
    }

    /// Triggers of one TGD whose body image peaks exactly at `frontier`.
    fn triggers(&self, t: &Tgd, frontier: usize) -> Vec<(Vec<Atom>, Subst)> {
        let mut found = Vec::new();
        for i in 0..t.body.len() {
            let admit = |j: usize, lvl: usize| match j.cmp(&i) {
                std::cmp::Ordering::Less => lvl < frontier,
                std::cmp::Ordering::Equal => lvl == frontier,
                std::cmp::Ordering::Greater => lvl <= frontier,
            };
            for (s, img) in self.homomorphisms(&t.body, Vec::new(), admit) {
                let image = img.iter().map(|&k| self.atoms[k].clone()).collect();
                found.push((image, s));
            }
        }
        found
    }

    /// Runs one breadth-first level; returns the number of atoms added.
    pub fn step(&mut self, tgds: &[Tgd], bound: ChaseBound, mode: Execution) -> usize {
        if self.fixpoint {
            return 0;
        }
        let frontier = self.level;
        let per_tgd = exec::map(mode, tgds, |t| self.triggers(t, frontier));
        let mut triggers: Vec<(usize, Vec<Atom>, Subst)> = per_tgd
            .into_iter()
            .enumerate()
            .flat_map(|(ti, ts)| ts.into_iter().map(move |(img, s)| (ti, img, s)))
            .collect();
        triggers.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        let mut added = 0;
        for (ti, _, s) in triggers {
            let t = &tgds[ti];
            if !t.existentials.is_empty() {
                if let Some(max) = bound.max_null_depth {
                    let depth = 1 + t
                        .frontier()
                        .iter()
                        .filter_map(|v| lookup(&s, v))
                        .map(|x| self.depth_of(x))
                        .max()
                        .unwrap_or(0);
                    if depth > max {
                        continue;
                    }
                }
            }
            if self.has_match(std::slice::from_ref(&t.head), s.clone()) {
                continue;
            }
            let mut s = s;
            if !t.existentials.is_empty() {
                let depth = 1 + t
                    .frontier()
                    .iter()
                    .filter_map(|v| lookup(&s, v))
                    .map(|x| self.depth_of(x))
                    .max()
                    .unwrap_or(0);
                for z in &t.existentials {
                    self.null_depth.push(depth);
                    s.push((z.clone(), Term::Null(self.null_depth.len() as u64)));
                }
            }
            if self.insert(apply(&s, &t.head), frontier + 1) {
                added += 1;
            }
        }
        if added == 0 {
            self.fixpoint = true;
        } else {
            self.level = frontier + 1;
        }
        added
    }

    /// Steps until the bound is reached or nothing changes.
    pub fn run(&mut self, tgds: &[Tgd], bound: ChaseBound, mode: Execution) {
        while !self.fixpoint && bound.max_level.is_none_or(|k| self.level < k) {
            self.step(tgds, bound, mode);
        }
    }

    /// Answer tuples of `q` over this instance; tuples containing nulls are
    /// dropped.
    pub fn answers(&self, q: &Query) -> BTreeSet<Vec<Name>> {
        self.homomorphisms(&q.atoms, Vec::new(), |_, _| true)
            .into_iter()
            .filter_map(|(s, _)| {
                q.free
                    .iter()
                    .map(|v| match lookup(&s, v) {
                        Some(Term::Const(c)) => Some(c.clone()),
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .collect()
    }

    /// Applies EGDs to a fixpoint: a null equated with a constant (or a
    /// younger null with an older one) is replaced everywhere. Two distinct
    /// constants being equated is a hard failure.
    pub fn apply_egds(&mut self, egds: &[Egd]) -> Result<(), Violation> {
        'outer: loop {
            for (ei, e) in egds.iter().enumerate() {
                for (s, _) in self.homomorphisms(&e.body, Vec::new(), |_, _| true) {
                    let l = lookup(&s, &e.lhs).cloned().expect("egd variable bound by body");
                    let r = lookup(&s, &e.rhs).cloned().expect("egd variable bound by body");
                    if l == r {
                        continue;
                    }
                    let (from, to) = match (&l, &r) {
                        (Term::Const(_), Term::Const(_)) => {
                            return Err(Violation::Egd {
                                index: ei,
                                rule: e.to_string(),
                                left: l.to_string(),
                                right: r.to_string(),
                            })
                        }
                        (Term::Null(_), Term::Const(_)) => (l, r),
                        (Term::Const(_), Term::Null(_)) => (r, l),
                        _ => (l.clone().max(r.clone()), l.min(r)),
                    };
                    self.substitute(&from, &to);
                    continue 'outer;
                }
            }
            return Ok(());
        }
    }

    fn substitute(&mut self, from: &Term, to: &Term) {
        let old = std::mem::take(&mut self.atoms);
        let levels = std::mem::take(&mut self.levels);
        let null_depth = std::mem::take(&mut self.null_depth);
        let (level, fixpoint) = (self.level, self.fixpoint);
        let mut merged: Vec<(Atom, usize)> = Vec::with_capacity(old.len());
        let mut seen: HashMap<Atom, usize> = HashMap::new();
        for (a, lvl) in old.into_iter().zip(levels) {
            let a = Atom {
                predicate: a.predicate,
                args: a
                    .args
                    .into_iter()
                    .map(|t| if &t == from { to.clone() } else { t })
                    .collect(),
            };
            match seen.get(&a) {
                Some(&k) => merged[k].1 = merged[k].1.min(lvl),
                None => {
                    seen.insert(a.clone(), merged.len());
                    merged.push((a, lvl));
                }
            }
        }
        *self = ChaseInstance::default();
        for (a, lvl) in merged {
            self.insert(a, lvl);
        }
        self.null_depth = null_depth;
        self.level = level;
        self.fixpoint = fixpoint;
    }

    /// First negative constraint whose body has a match, if any.
    pub fn violated_constraint(&self, ncs: &[NegativeConstraint]) -> Option<Violation> {
        ncs.iter().enumerate().find_map(|(i, c)| {
            self.has_match(&c.body, Vec::new()).then(|| Violation::Constraint {
                index: i,
                rule: c.to_string(),
            })
        })
    }

    /// Renders the instance in the source language, one atom per line with its
    /// level as a trailing comment. Nulls print as `_:nK`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (a, lvl) in self.atoms() {
            out.push_str(&format!("{a}.  % level {lvl}\n"));
        }
        out
    }
}

/// Why a knowledge base is inconsistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Constraint {
        index: usize,
        rule: String,
    },
    Egd {
        index: usize,
        rule: String,
        left: String,
        right: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Constraint { rule, .. } => write!(f, "negative constraint violated: {rule}"),
            Violation::Egd {
                rule, left, right, ..
            } => write!(f, "equality {left} = {right} forced by {rule}"),
        }
    }
}

/// Rejects TGD sets with a rule that is neither linear nor guarded.
pub fn ensure_guarded(tgds: &[Tgd]) -> Result<()> {
    match tgds.iter().find(|t| t.classify() == TgdClass::Neither) {
        Some(t) => Err(Error::Unguarded(t.label.to_string())),
        None => Ok(()),
    }
}

/// One breadth-first level on a copy of `inst`.
pub fn chase_step(inst: &ChaseInstance, tgds: &[Tgd]) -> ChaseInstance {
    let mut next = inst.clone();
    next.step(tgds, ChaseBound::default(), Execution::Sequential);
    next
}

/// The chase of level up to `k`, stopping early at a fixpoint.
pub fn chase_to_level(kb: &Ontology, k: usize) -> Result<ChaseInstance> {
    chase_bounded(kb, ChaseBound::levels(k), Execution::default())
}

pub fn chase_bounded(kb: &Ontology, bound: ChaseBound, mode: Execution) -> Result<ChaseInstance> {
    ensure_guarded(&kb.tgds)?;
    let mut inst = ChaseInstance::from_database(&kb.database);
    inst.run(&kb.tgds, bound, mode);
    Ok(inst)
}
