//! Query answering over a knowledge base via the bounded chase.
//!
//! A query with `m` atoms is evaluated on the restricted chase whose nulls
//! nest at most `depth_constant * m` deep; Datalog-only derivations are run
//! to saturation. The default depth constant is the largest `1 + head arity`
//! over the TGDs. Chase instances are cached and reused by any query whose
//! bound they already cover.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, OnceLock};

use crate::chase::{ensure_guarded, ChaseBound, ChaseInstance, Violation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::syntax::{Atom, Name, Ontology, Query};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Violated(Violation),
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

/// Default depth constant: the largest `1 + head arity` among the TGDs.
pub fn default_depth_constant(kb: &Ontology) -> usize {
    kb.tgds
        .iter()
        .map(|t| 1 + t.head.arity())
        .max()
        .unwrap_or(1)
}

pub struct Reasoner<'kb> {
    kb: &'kb Ontology,
    depth_constant: usize,
    mode: Execution,
    cache: Mutex<Option<(u32, Arc<ChaseInstance>)>>,
    consistency: OnceLock<Consistency>,
}

impl<'kb> Reasoner<'kb> {
    /// Fails if some TGD is neither linear nor guarded.
    pub fn new(kb: &'kb Ontology) -> Result<Self> {
        ensure_guarded(&kb.tgds)?;
        Ok(Reasoner {
            kb,
            depth_constant: default_depth_constant(kb),
            mode: Execution::default(),
            cache: Mutex::new(None),
            consistency: OnceLock::new(),
        })
    }

    pub fn with_depth_constant(mut self, c: usize) -> Self {
        self.depth_constant = c.max(1);
        self
    }

    pub fn with_execution(mut self, mode: Execution) -> Self {
        self.mode = mode;
        self
    }

    pub fn kb(&self) -> &'kb Ontology {
        self.kb
    }

    pub fn depth_constant(&self) -> usize {
        self.depth_constant
    }

    fn bound_for(&self, atoms: usize) -> u32 {
        (self.depth_constant * atoms.max(1)) as u32
    }

    /// Chase whose null depth covers queries with `atoms` atoms.
    pub fn chase_for(&self, atoms: usize) -> Arc<ChaseInstance> {
        let depth = self.bound_for(atoms);
        let mut cache = self.cache.lock().unwrap();
        if let Some((d, inst)) = cache.as_ref() {
            if *d >= depth || inst.is_fixpoint() {
                return inst.clone();
            }
        }
        let mut inst = ChaseInstance::from_database(&self.kb.database);
        inst.run(&self.kb.tgds, ChaseBound::null_depth(depth), self.mode);
        let inst = Arc::new(inst);
        *cache = Some((depth, inst.clone()));
        inst
    }

    /// Evaluates every negative constraint as a Boolean query and applies the
    /// EGDs on the bounded chase. Violations are values, not errors.
    pub fn check_consistency(&self) -> &Consistency {
        self.consistency.get_or_init(|| {
            let widest = self
                .kb
                .ncs
                .iter()
                .map(|c| c.body.len())
                .chain(self.kb.egds.iter().map(|e| e.body.len()))
                .max()
                .unwrap_or(1);
            let chase = self.chase_for(widest);
            if !self.kb.egds.is_empty() {
                let mut merged = (*chase).clone();
                if let Err(v) = merged.apply_egds(&self.kb.egds) {
                    return Consistency::Violated(v);
                }
                if let Some(v) = merged.violated_constraint(&self.kb.ncs) {
                    return Consistency::Violated(v);
                }
                return Consistency::Consistent;
            }
            match chase.violated_constraint(&self.kb.ncs) {
                Some(v) => Consistency::Violated(v),
                None => Consistency::Consistent,
            }
        })
    }

    fn ensure_consistent(&self) -> Result<()> {
        match self.check_consistency() {
            Consistency::Consistent => Ok(()),
            Consistency::Violated(v) => Err(Error::Inconsistent(v.to_string())),
        }
    }

    /// Certain answers over constants. A Boolean query answers `{()}` for yes
    /// and `{}` for no.
    pub fn answer_cq(&self, q: &Query) -> Result<BTreeSet<Vec<Name>>> {
        self.ensure_consistent()?;
        Ok(self.chase_for(q.atoms.len()).answers(q))
    }

    /// Answers of a simple query as instances of its distinguished atom.
    pub fn answers_in_atom_form(&self, q: &Query) -> Result<BTreeSet<Atom>> {
        if !q.is_simple() {
            return Err(Error::NotSimple(q.to_string()));
        }
        Ok(self
            .answer_cq(q)?
            .iter()
            .filter_map(|t| q.atom_form(t))
            .collect())
    }

    /// Whether a ground atom holds in the bounded chase.
    pub fn entails(&self, a: &Atom) -> bool {
        a.is_ground() && self.chase_for(1).contains(a)
    }
}

/// Certain answers of `q` with the default depth constant.
pub fn answer_cq(q: &Query, kb: &Ontology) -> Result<BTreeSet<Vec<Name>>> {
    Reasoner::new(kb)?.answer_cq(q)
}

pub fn answers_in_atom_form(q: &Query, kb: &Ontology) -> Result<BTreeSet<Atom>> {
    Reasoner::new(kb)?.answers_in_atom_form(q)
}

pub fn check_consistency(kb: &Ontology) -> Result<Consistency> {
    Ok(Reasoner::new(kb)?.check_consistency().clone())
}

pub fn entails(kb: &Ontology, a: &Atom) -> Result<bool> {
    Ok(Reasoner::new(kb)?.entails(a))
}
