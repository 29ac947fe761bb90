//! Subjective reports and the store attaching them to entailed atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::parser::parse_ground_atom;
use crate::reasoner::Reasoner;
use crate::spo::Spo;
use crate::syntax::{name, Atom, Name, Ontology};

/// A feature score in `[0, 1]`, or absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Score {
    Rated(f64),
    Absent,
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Rated(v) => Some(v),
            Score::Absent => None,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Rated(v) => write!(f, "{v}"),
            Score::Absent => f.write_str("-"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegisterValue {
    Number(serde_json::Number),
    Text(String),
}

impl RegisterValue {
    /// Values compare as their text form.
    pub fn as_text(&self) -> String {
        match self {
            RegisterValue::Number(n) => n.to_string(),
            RegisterValue::Text(s) => s.clone(),
        }
    }
}

/// Information register: free-form key/value data about a report.
pub type InfoRegister = BTreeMap<String, RegisterValue>;

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub id: String,
    /// Aligned with `spo.universe()`.
    pub scores: Vec<Score>,
    pub spo: Spo,
    pub register: InfoRegister,
}

impl Report {
    pub fn new(id: &str, scores: Vec<Score>, spo: Spo, register: InfoRegister) -> Result<Self, ReportError> {
        if scores.len() != spo.len() {
            return Err(ReportError::Invalid {
                id: id.to_string(),
                msg: format!("{} scores for {} features", scores.len(), spo.len()),
            });
        }
        for (f, s) in spo.universe().iter().zip(&scores) {
            if let Score::Rated(v) = s {
                if !(0.0..=1.0).contains(v) {
                    return Err(ReportError::ScoreOutOfRange {
                        id: id.to_string(),
                        feature: f.to_string(),
                        value: *v,
                    });
                }
            }
        }
        Ok(Report {
            id: id.to_string(),
            scores,
            spo,
            register,
        })
    }

    pub fn features(&self) -> &[Name] {
        self.spo.universe()
    }

    pub fn register_text(&self, key: &str) -> Option<String> {
        self.register.get(key).map(RegisterValue::as_text)
    }
}

/// One entry of a report file. Plain reports name an `atom`; generalized
/// ones carry a `descriptor` query instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
    pub id: String,
    pub scores: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub prefers: Vec<(String, String)>,
    #[serde(default)]
    pub register: InfoRegister,
}

/// Reads a JSON array of report records; blank input is an empty list.
pub fn parse_records(text: &str) -> Result<Vec<ReportRecord>, ReportError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(serde_json::from_str(text)?)
}

impl ReportRecord {
    /// Builds the report over `features`, checking names, ranges and the SPO.
    pub fn to_report(&self, features: &[Name]) -> Result<Report, ReportError> {
        let expected: BTreeSet<&str> = features.iter().map(|f| &**f).collect();
        let found: BTreeSet<&str> = self.scores.keys().map(String::as_str).collect();
        if expected != found || expected.len() != features.len() {
            return Err(ReportError::FeatureMismatch {
                id: self.id.clone(),
                expected: features.iter().map(|f| f.to_string()).collect(),
                found: self.scores.keys().cloned().collect(),
            });
        }
        let scores = features
            .iter()
            .map(|f| match self.scores[&**f] {
                Some(v) if v.is_nan() || !(0.0..=1.0).contains(&v) => {
                    Err(ReportError::ScoreOutOfRange {
                        id: self.id.clone(),
                        feature: f.to_string(),
                        value: v,
                    })
                }
                Some(v) => Ok(Score::Rated(v)),
                None => Ok(Score::Absent),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spo = Spo::validate(&self.prefers, features).map_err(|source| ReportError::Spo {
            id: self.id.clone(),
            source,
        })?;
        Report::new(&self.id, scores, spo, self.register.clone())
    }
}

/// Feature tuple of a predicate, or an error naming the report.
pub fn features_for<'a>(kb: &'a Ontology, id: &str, predicate: &str) -> Result<&'a [Name], ReportError> {
    kb.features_of(predicate).ok_or_else(|| ReportError::Invalid {
        id: id.to_string(),
        msg: format!("predicate `{predicate}` has no declared features"),
    })
}

/// Reports indexed by the ground atom they talk about.
#[derive(Clone, Debug, Default)]
pub struct ReportStore {
    reports: Vec<Report>,
    by_atom: BTreeMap<Atom, Vec<usize>>,
}

impl ReportStore {
    /// Adds a report for `atom`; the caller vouches for entailment.
    pub fn insert(&mut self, atom: Atom, report: Report) {
        let i = self.reports.len();
        self.reports.push(report);
        self.by_atom.entry(atom).or_default().push(i);
    }

    pub fn reports_for(&self, atom: &Atom) -> Vec<&Report> {
        self.by_atom
            .get(atom)
            .map(|ix| ix.iter().map(|&i| &self.reports[i]).collect())
            .unwrap_or_default()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.by_atom.keys()
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Report> {
        self.reports.iter().find(|r| r.id == id)
    }
}

/// Loads plain reports, checking every invariant and that each atom is
/// entailed by the knowledge base.
pub fn load_reports(text: &str, reasoner: &Reasoner<'_>) -> Result<ReportStore, ReportError> {
    let records = parse_records(text)?;
    let mut store = ReportStore::default();
    let mut ids = BTreeSet::new();
    for rec in records {
        if !ids.insert(rec.id.clone()) {
            return Err(ReportError::Invalid {
                id: rec.id.clone(),
                msg: "duplicate report id".into(),
            });
        }
        let atom_text = match (&rec.atom, &rec.descriptor) {
            (Some(a), None) => a,
            _ => {
                return Err(ReportError::Invalid {
                    id: rec.id.clone(),
                    msg: "a plain report needs `atom` and no `descriptor`".into(),
                })
            }
        };
        let (atom, report) = plain_report(&rec, atom_text, reasoner)?;
        store.insert(atom, report);
    }
    Ok(store)
}

pub(crate) fn plain_report(
    rec: &ReportRecord,
    atom_text: &str,
    reasoner: &Reasoner<'_>,
) -> Result<(Atom, Report), ReportError> {
    let kb = reasoner.kb();
    let atom = parse_ground_atom(atom_text, kb).map_err(|e| ReportError::Invalid {
        id: rec.id.clone(),
        msg: format!("bad atom `{atom_text}`: {e}"),
    })?;
    let features = features_for(kb, &rec.id, &atom.predicate)?;
    let report = rec.to_report(features)?;
    if !reasoner.entails(&atom) {
        return Err(ReportError::NotEntailed {
            id: rec.id.clone(),
            atom: atom.to_string(),
        });
    }
    Ok((atom, report))
}

/// Convenience for tests and fixtures: builds a report from literal parts.
pub fn report_from_parts(
    id: &str,
    features: &[&str],
    scores: &[Option<f64>],
    prefers: &[(&str, &str)],
    register: &[(&str, &str)],
) -> Result<Report, ReportError> {
    let universe: Vec<Name> = features.iter().map(|f| name(f)).collect();
    let spo = Spo::validate(prefers, &universe).map_err(|source| ReportError::Spo {
        id: id.to_string(),
        source,
    })?;
    let scores = scores
        .iter()
        .map(|s| s.map_or(Score::Absent, Score::Rated))
        .collect();
    let register = register
        .iter()
        .map(|(k, v)| (k.to_string(), RegisterValue::Text(v.to_string())))
        .collect();
    Report::new(id, scores, spo, register)
}
