//! Generalized reports: reports attached to every answer of a simple query.
//!
//! A hierarchy of linear is-a rules lets a report about a general atom
//! (`hotel(a2)`) inform a more specific one (`apthotel(a2)`). When several
//! g-reports land on the same atom, the more specific ones weigh more.
//!
//! How the weights enter the ranking is our own choice: in the basic
//! algorithm each report's term is multiplied by its weight; in the
//! histogram algorithm each inserted score is.

use std::collections::{BTreeMap, BTreeSet};

use crate::chase::{ChaseBound, ChaseInstance};
use crate::error::{Error, ReportError, Result};
use crate::exec::{self, Execution};
use crate::parser::parse_query;
use crate::ranking::{answers_with_features, rank_contributions, Algorithm, Contribution, RankSetup, RankedAnswer};
use crate::reasoner::Reasoner;
use crate::report::{features_for, parse_records, plain_report, Report, ReportStore, Score};
use crate::spo::Spo;
use crate::syntax::{name, Atom, Name, Ontology, Query, Tgd, TgdClass};

#[derive(Clone, Debug, PartialEq)]
pub struct GReport {
    pub report: Report,
    pub descriptor: Query,
}

impl GReport {
    pub fn new(report: Report, descriptor: Query, kb: &Ontology) -> Result<Self> {
        let d = descriptor
            .distinguished_atom()
            .ok_or_else(|| Error::NotSimple(descriptor.to_string()))?;
        let features = features_for(kb, &report.id, &d.predicate)?;
        if report.features() != features {
            return Err(ReportError::FeatureMismatch {
                id: report.id.clone(),
                expected: features.iter().map(|f| f.to_string()).collect(),
                found: report.features().iter().map(|f| f.to_string()).collect(),
            }
            .into());
        }
        Ok(GReport { report, descriptor })
    }

    pub fn id(&self) -> &str {
        &self.report.id
    }
}

/// A validated set of hierarchical (is-a) rules.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HierarchySet {
    rules: Vec<Tgd>,
}

fn features_or_empty<'a>(kb: &'a Ontology, p: &str) -> &'a [Name] {
    kb.features_of(p).unwrap_or(&[])
}

/// Checks that the named rules form a hierarchical set:
///
/// * each is linear;
/// * the head predicate's features are among the body predicate's (the more
///   specific predicate inherits every feature of the general one);
/// * no two rules share a body predicate, and no two body predicates are
///   declared to overlap. This stands in for the semantic requirement that
///   no database makes two rules fire on the same individual.
pub fn validate_hierarchical(labels: &[&str], kb: &Ontology) -> Result<HierarchySet> {
    let mut rules: Vec<Tgd> = Vec::new();
    for &l in labels {
        let t = kb
            .tgd(l)
            .ok_or_else(|| Error::Hierarchy(format!("no rule labelled `{l}`")))?;
        if rules.iter().any(|r| r.label == t.label) {
            continue;
        }
        if t.classify() != TgdClass::Linear {
            return Err(Error::Hierarchy(format!("rule `{l}` is not linear")));
        }
        let body = &t.body[0].predicate;
        let head = &t.head.predicate;
        let fb = features_or_empty(kb, body);
        if let Some(f) = features_or_empty(kb, head).iter().find(|f| !fb.contains(f)) {
            return Err(Error::Hierarchy(format!(
                "rule `{l}`: feature `{f}` of `{head}` is not a feature of `{body}`"
            )));
        }
        for r in &rules {
            let other = &r.body[0].predicate;
            if other == body || kb.declared_overlap(other, body) {
                return Err(Error::Hierarchy(format!(
                    "rules `{}` and `{l}` have overlapping bodies `{other}` and `{body}`",
                    r.label
                )));
            }
        }
        rules.push(t.clone());
    }
    Ok(HierarchySet { rules })
}

impl HierarchySet {
    pub fn rules(&self) -> &[Tgd] {
        &self.rules
    }

    /// Ground atoms entailed by `{a}` under the hierarchy, `a` included.
    pub fn ancestors(&self, a: &Atom) -> BTreeSet<Atom> {
        let mut inst = ChaseInstance::from_database([a]);
        // Linear rules: every ground consequence of a single atom lies on a
        // chain no longer than the number of rules.
        let depth = self.rules.len() as u32 + 1;
        inst.run(&self.rules, ChaseBound::null_depth(depth), Execution::Sequential);
        inst.atoms()
            .map(|(x, _)| x)
            .filter(|x| x.is_ground())
            .cloned()
            .collect()
    }

    /// `a` is-a `b`: the chase of `{a}` under the hierarchy contains `b`.
    pub fn is_a(&self, a: &Atom, b: &Atom) -> bool {
        a == b || self.ancestors(a).contains(b)
    }
}

/// Copies the scores of shared features onto `to`; features missing from
/// `from` become absent.
pub fn particularize(scores: &[Score], from: &[Name], to: &[Name]) -> Vec<Score> {
    to.iter()
        .map(|f| {
            from.iter()
                .position(|g| g == f)
                .map_or(Score::Absent, |i| scores[i])
        })
        .collect()
}

/// The report carried over to the feature tuple `to`: scores particularized,
/// preferences kept between shared features, new features unrelated.
pub fn particularize_report(r: &Report, to: &[Name]) -> Result<Report> {
    let pairs: Vec<(Name, Name)> = r
        .spo
        .pairs()
        .filter(|(a, b)| to.contains(a) && to.contains(b))
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    let spo = Spo::validate(&pairs, to)?;
    let scores = particularize(&r.scores, r.features(), to);
    Ok(Report::new(&r.id, scores, spo, r.register.clone())?)
}

/// `gr` restricted to the entailed atom `a`, if some answer of its
/// descriptor is a generalization of `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Specialization {
    pub atom: Atom,
    pub report: Report,
}

pub fn specialize(gr: &GReport, a: &Atom, reasoner: &Reasoner<'_>, hs: &HierarchySet) -> Result<Option<Specialization>> {
    let answers = reasoner.answers_in_atom_form(&gr.descriptor)?;
    let up = hs.ancestors(a);
    if answers.is_disjoint(&up) {
        return Ok(None);
    }
    let to = features_for(reasoner.kb(), &gr.report.id, &a.predicate)?;
    Ok(Some(Specialization {
        atom: a.clone(),
        report: particularize_report(&gr.report, to)?,
    }))
}

/// How the first g-report relates to the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GOrder {
    MoreGeneral,
    LessGeneral,
    Equivalent,
    Incomparable,
}

impl GOrder {
    pub fn from_flags(first_covers_second: bool, second_covers_first: bool) -> Self {
        match (first_covers_second, second_covers_first) {
            (true, true) => GOrder::Equivalent,
            (true, false) => GOrder::MoreGeneral,
            (false, true) => GOrder::LessGeneral,
            (false, false) => GOrder::Incomparable,
        }
    }
}

/// Answer sets of descriptors and the ancestors of their atoms, computed
/// once and shared by every comparison.
struct Coverage {
    answers: Vec<BTreeSet<Atom>>,
    ancestors: BTreeMap<Atom, BTreeSet<Atom>>,
}

impl Coverage {
    fn new(greports: &[&GReport], reasoner: &Reasoner<'_>, hs: &HierarchySet, mode: Execution) -> Result<Self> {
        let answers = greports
            .iter()
            .map(|g| reasoner.answers_in_atom_form(&g.descriptor))
            .collect::<Result<Vec<_>>>()?;
        let atoms: Vec<Atom> = answers.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let ups = exec::map(mode, &atoms, |a| hs.ancestors(a));
        Ok(Coverage {
            answers,
            ancestors: atoms.into_iter().zip(ups).collect(),
        })
    }

    /// Every answer of `j` is-a some answer of `i` (which includes plain
    /// answer-set inclusion).
    fn covers(&self, i: usize, j: usize) -> bool {
        self.answers[j]
            .iter()
            .all(|x| !self.ancestors[x].is_disjoint(&self.answers[i]))
    }

    fn order(&self, i: usize, j: usize) -> GOrder {
        GOrder::from_flags(self.covers(i, j), self.covers(j, i))
    }
}

/// Relation of `gr1` to `gr2` in the more-general-than order: `gr2 ⊑ gr1`
/// when every answer of `gr2`'s descriptor is, or is-a, an answer of
/// `gr1`'s.
pub fn compare(gr1: &GReport, gr2: &GReport, reasoner: &Reasoner<'_>, hs: &HierarchySet) -> Result<GOrder> {
    let cov = Coverage::new(&[gr1, gr2], reasoner, hs, Execution::Sequential)?;
    Ok(cov.order(0, 1))
}

/// The specificity order over a context: `i ≻ j` iff `i` is strictly less
/// general than `j`. Universe names are the positions `0..n`.
pub fn specificity_spo(orders: &dyn Fn(usize, usize) -> GOrder, n: usize) -> Spo {
    let universe: Vec<Name> = (0..n).map(|i| name(&i.to_string())).collect();
    let pairs: Vec<(Name, Name)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && orders(i, j) == GOrder::LessGeneral)
        .map(|(i, j)| (universe[i].clone(), universe[j].clone()))
        .collect();
    Spo::validate(&pairs, &universe).expect("strict part of a preorder is acyclic")
}

/// Assigns each g-report of a context a weight in `[0, 1]` from the
/// specificity order, higher for more specific ones.
pub trait Weighting: Send + Sync {
    fn name(&self) -> &str;
    fn weights(&self, specificity: &Spo) -> Vec<f64>;
}

/// `ω = 2^(1 - rank)` under the specificity order.
#[derive(Clone, Copy, Debug, Default)]
pub struct RankExponentialWeight;

impl Weighting for RankExponentialWeight {
    fn name(&self) -> &str {
        "rank-exp"
    }

    fn weights(&self, specificity: &Spo) -> Vec<f64> {
        specificity
            .ranks()
            .into_iter()
            .map(|k| 2f64.powi(1 - k as i32))
            .collect()
    }
}

pub const WEIGHTINGS: &[&str] = &["rank-exp"];

pub fn weighting(name: &str) -> Option<Box<dyn Weighting>> {
    match name {
        "rank-exp" => Some(Box::new(RankExponentialWeight)),
        _ => None,
    }
}

pub fn weight_rank_exponential(specificity: &Spo) -> Vec<f64> {
    RankExponentialWeight.weights(specificity)
}

/// G-reports plus any plain reports from the same file.
#[derive(Clone, Debug, Default)]
pub struct GReportStore {
    pub greports: Vec<GReport>,
    pub plain: ReportStore,
}

impl GReportStore {
    pub fn get(&self, id: &str) -> Option<&GReport> {
        self.greports.iter().find(|g| g.id() == id)
    }
}

/// Loads a report file whose entries carry either an `atom` (plain report)
/// or a `descriptor` (simple query).
pub fn load_greports(text: &str, reasoner: &Reasoner<'_>) -> Result<GReportStore> {
    let kb = reasoner.kb();
    let mut store = GReportStore::default();
    let mut ids = BTreeSet::new();
    for rec in parse_records(text)? {
        if !ids.insert(rec.id.clone()) {
            return Err(ReportError::Invalid {
                id: rec.id.clone(),
                msg: "duplicate report id".into(),
            }
            .into());
        }
        match (&rec.atom, &rec.descriptor) {
            (Some(a), None) => {
                let (atom, report) = plain_report(&rec, a, reasoner)?;
                store.plain.insert(atom, report);
            }
            (None, Some(d)) => {
                let q = parse_query(d, kb).map_err(|e| ReportError::Invalid {
                    id: rec.id.clone(),
                    msg: format!("bad descriptor `{d}`: {e}"),
                })?;
                let pred = &q
                    .distinguished_atom()
                    .ok_or_else(|| ReportError::Invalid {
                        id: rec.id.clone(),
                        msg: format!("descriptor `{d}` is not a simple query"),
                    })?
                    .predicate;
                let report = rec.to_report(features_for(kb, &rec.id, pred)?)?;
                store.greports.push(GReport::new(report, q, kb)?);
            }
            _ => {
                return Err(ReportError::Invalid {
                    id: rec.id.clone(),
                    msg: "exactly one of `atom` and `descriptor` is required".into(),
                }
                .into())
            }
        }
    }
    Ok(store)
}

/// Ranks the answers of `q` by plain reports and by the specializations of
/// every applicable g-report, the latter weighted within each atom's
/// context of g-reports.
pub fn rank_with_greports(
    reasoner: &Reasoner<'_>,
    q: &Query,
    setup: &RankSetup<'_>,
    algo: &Algorithm,
    weighting: &dyn Weighting,
    store: &GReportStore,
    hs: &HierarchySet,
) -> Result<Vec<RankedAnswer>> {
    let (answers, features) = answers_with_features(reasoner, q)?;
    let grs: Vec<&GReport> = store.greports.iter().collect();
    let cov = Coverage::new(&grs, reasoner, hs, setup.mode)?;
    let specialized = grs
        .iter()
        .map(|g| particularize_report(&g.report, &features))
        .collect::<Result<Vec<_>>>()?;
    let ups = exec::map(setup.mode, &answers, |a| hs.ancestors(a));

    let mut atoms = Vec::with_capacity(answers.len());
    for (a, up) in answers.into_iter().zip(ups) {
        let ctx: Vec<usize> = (0..grs.len())
            .filter(|&i| !cov.answers[i].is_disjoint(&up))
            .collect();
        let spo = specificity_spo(&|x, y| cov.order(ctx[x], ctx[y]), ctx.len());
        let weights = weighting.weights(&spo);
        let mut cs: Vec<Contribution<'_>> = store
            .plain
            .reports_for(&a)
            .into_iter()
            .map(Contribution::plain)
            .collect();
        cs.extend(ctx.iter().zip(weights).map(|(&i, w)| Contribution {
            report: std::borrow::Cow::Borrowed(&specialized[i]),
            weight: w,
        }));
        atoms.push((a, cs));
    }
    rank_contributions(atoms, &features, setup, algo)
}
