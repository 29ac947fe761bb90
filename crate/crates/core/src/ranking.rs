//! Top-k ranking of query answers by their attached reports.
//!
//! Two algorithms: the basic one averages relevance-weighted, trust-weighted
//! scores per report; the histogram one buckets scores by trust, collapses
//! each feature's histogram to a single value and discards reports below a
//! relevance threshold.

use std::borrow::Cow;

use serde::Serialize;

use crate::error::{Error, ReportError, Result};
use crate::exec::{self, Execution};
use crate::measures::{RelevanceMeasure, TrustMeasure};
use crate::reasoner::Reasoner;
use crate::report::{Report, ReportStore, Score};
use crate::spo::Spo;
use crate::syntax::{Atom, Name, Query};

pub const BUCKETS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedAnswer {
    #[serde(serialize_with = "atom_text")]
    pub atom: Atom,
    pub score: f64,
}

fn atom_text<S: serde::Serializer>(a: &Atom, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(a)
}

/// One feature's trust histogram: bucket `j` covers `[j/10, (j+1)/10)`, the
/// last one closed at 1. Sums and counts are kept apart so the mean is
/// exactly `sum / count`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Histogram {
    sums: [f64; BUCKETS],
    counts: [usize; BUCKETS],
}

pub fn bucket_of(trust: f64) -> usize {
    ((trust * BUCKETS as f64).floor().max(0.0) as usize).min(BUCKETS - 1)
}

impl Histogram {
    pub fn insert(&mut self, trust: f64, value: f64) {
        let b = bucket_of(trust);
        self.sums[b] += value;
        self.counts[b] += 1;
    }

    pub fn mean(&self, b: usize) -> Option<f64> {
        (self.counts[b] > 0).then(|| self.sums[b] / self.counts[b] as f64)
    }

    pub fn count(&self, b: usize) -> usize {
        self.counts[b]
    }

    /// Nonempty buckets with their means, lowest trust first.
    pub fn nonempty(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..BUCKETS).filter_map(|b| self.mean(b).map(|m| (b, m)))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

/// How a histogram row collapses to one value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Collapse {
    /// Mean of nonempty buckets after discarding the lowest-trust one, if
    /// at least two are nonempty.
    DropLowest,
    /// Sum of all bucket means over 10; empty buckets count as 0.
    Mean10,
    /// `Σ w_b · mean_b / 10` with nondecreasing weights in `[0, 1]`.
    Weighted([f64; BUCKETS]),
    /// Mean of nonempty buckets, ignoring the first `k` buckets.
    SkipK(usize),
}

pub const COLLAPSE_FUNCTIONS: &[&str] = &["drop-lowest", "mean10", "weighted", "skip-k"];

impl Collapse {
    pub fn weighted(weights: &[f64]) -> Result<Self> {
        let w: [f64; BUCKETS] = weights.try_into().map_err(|_| {
            Error::Invalid(format!("weighted collapse needs {BUCKETS} weights, got {}", weights.len()))
        })?;
        if w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Invalid("collapse weights must lie in [0, 1]".into()));
        }
        if w.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::Invalid("collapse weights must be nondecreasing".into()));
        }
        Ok(Collapse::Weighted(w))
    }

    /// Looks a collapse function up by name; `weights` and `skip` feed the
    /// parameterized ones.
    pub fn by_name(name: &str, weights: Option<&[f64]>, skip: Option<usize>) -> Result<Self> {
        match name {
            "drop-lowest" => Ok(Collapse::DropLowest),
            "mean10" => Ok(Collapse::Mean10),
            "weighted" => Collapse::weighted(
                weights.ok_or_else(|| Error::Invalid("weighted collapse needs weights".into()))?,
            ),
            "skip-k" => Ok(Collapse::SkipK(skip.unwrap_or(0))),
            other => Err(Error::Invalid(format!(
                "unknown collapse function `{other}` (expected one of {})",
                COLLAPSE_FUNCTIONS.join(", ")
            ))),
        }
    }

    pub fn apply(&self, h: &Histogram) -> f64 {
        let avg = |it: &mut dyn Iterator<Item = f64>| {
            let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                0.0
            } else {
                s / n as f64
            }
        };
        match self {
            Collapse::DropLowest => {
                let skip = usize::from(h.nonempty().count() >= 2);
                avg(&mut h.nonempty().skip(skip).map(|(_, m)| m))
            }
            Collapse::Mean10 => h.nonempty().map(|(_, m)| m).sum::<f64>() / BUCKETS as f64,
            Collapse::Weighted(w) => {
                h.nonempty().map(|(b, m)| w[b] * m).sum::<f64>() / BUCKETS as f64
            }
            Collapse::SkipK(k) => avg(&mut h.nonempty().filter(|&(b, _)| b >= *k).map(|(_, m)| m)),
        }
    }
}

/// A report as it enters a ranking, with its weight (1 for plain reports).
#[derive(Clone, Debug)]
pub struct Contribution<'a> {
    pub report: Cow<'a, Report>,
    pub weight: f64,
}

impl<'a> Contribution<'a> {
    pub fn plain(report: &'a Report) -> Self {
        Contribution {
            report: Cow::Borrowed(report),
            weight: 1.0,
        }
    }
}

fn summarize(trust: &dyn TrustMeasure, reports: &[Contribution<'_>], n: usize, collapse: &Collapse) -> Vec<f64> {
    let mut hists = vec![Histogram::default(); n];
    for c in reports {
        let t = trust.trust(&c.report);
        for (i, s) in c.report.scores.iter().enumerate() {
            if let Score::Rated(v) = s {
                hists[i].insert(t[i], c.weight * v);
            }
        }
    }
    hists.iter().map(|h| collapse.apply(h)).collect()
}

/// Collapsed per-feature scores of `reports`, all over the same `n`
/// features. Absent scores are not inserted anywhere.
pub fn summarize_reports(trust: &dyn TrustMeasure, reports: &[&Report], n: usize, collapse: &Collapse) -> Vec<f64> {
    let cs: Vec<_> = reports.iter().map(|r| Contribution::plain(r)).collect();
    summarize(trust, &cs, n, collapse)
}

/// The measures and user preferences a ranking is computed against.
#[derive(Clone, Copy)]
pub struct RankSetup<'a> {
    pub user: &'a Spo,
    pub trust: &'a dyn TrustMeasure,
    pub relevance: &'a dyn RelevanceMeasure,
    pub k: usize,
    pub mode: Execution,
}

impl<'a> RankSetup<'a> {
    pub fn new(user: &'a Spo, trust: &'a dyn TrustMeasure, relevance: &'a dyn RelevanceMeasure, k: usize) -> Self {
        RankSetup {
            user,
            trust,
            relevance,
            k,
            mode: Execution::default(),
        }
    }

    pub fn with_execution(mut self, mode: Execution) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    Basic,
    Hist { rel_threshold: f64, collapse: Collapse },
}

/// `ρ · (1/n) Σ E[i] · τ[i] / rank_U(i)` over the rated features of one
/// report; `user_ranks` is aligned with the report's features.
pub fn basic_report_term(r: &Report, setup: &RankSetup<'_>, user_ranks: &[usize]) -> Result<f64> {
    let rho = setup.relevance.relevance(r, setup.user)?;
    let tau = setup.trust.trust(r);
    let (sum, n) = r
        .scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.value().map(|v| v * tau[i] / user_ranks[i] as f64))
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    Ok(if n == 0 { 0.0 } else { rho * sum / n as f64 })
}

fn score_atom(contribs: &[Contribution<'_>], setup: &RankSetup<'_>, algo: &Algorithm, user_ranks: &[usize]) -> Result<f64> {
    match algo {
        Algorithm::Basic => {
            if contribs.is_empty() {
                return Ok(0.0);
            }
            let mut total = 0.0;
            for c in contribs {
                total += c.weight * basic_report_term(&c.report, setup, user_ranks)?;
            }
            Ok(total / contribs.len() as f64)
        }
        Algorithm::Hist {
            rel_threshold,
            collapse,
        } => {
            let mut kept = Vec::new();
            for c in contribs {
                if setup.relevance.relevance(&c.report, setup.user)? >= *rel_threshold {
                    kept.push(c.clone());
                }
            }
            let scores = summarize(setup.trust, &kept, user_ranks.len(), collapse);
            Ok(scores
                .iter()
                .zip(user_ranks)
                .map(|(s, &k)| s / k as f64)
                .sum())
        }
    }
}

fn check_params(setup: &RankSetup<'_>, algo: &Algorithm) -> Result<()> {
    if setup.k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if let Algorithm::Hist { rel_threshold, .. } = algo {
        if !(0.0..=1.0).contains(rel_threshold) {
            return Err(Error::Invalid(format!(
                "relevance threshold {rel_threshold} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Scores each atom from its contributions and returns the `k` best,
/// highest score first, ties broken by the atom's text.
pub fn rank_contributions(
    atoms: Vec<(Atom, Vec<Contribution<'_>>)>,
    features: &[Name],
    setup: &RankSetup<'_>,
    algo: &Algorithm,
) -> Result<Vec<RankedAnswer>> {
    check_params(setup, algo)?;
    let user_ranks = setup.user.aligned_to(features)?.ranks();
    for (_, cs) in &atoms {
        for c in cs {
            if c.report.features() != features {
                return Err(ReportError::FeatureMismatch {
                    id: c.report.id.clone(),
                    expected: features.iter().map(|f| f.to_string()).collect(),
                    found: c.report.features().iter().map(|f| f.to_string()).collect(),
                }
                .into());
            }
        }
    }
    let scores = exec::try_map(setup.mode, &atoms, |(_, cs)| {
        score_atom(cs, setup, algo, &user_ranks)
    })?;
    let mut ranked: Vec<(String, RankedAnswer)> = atoms
        .into_iter()
        .zip(scores)
        .map(|((atom, _), score)| (atom.to_string(), RankedAnswer { atom, score }))
        .collect();
    ranked.sort_by(|(ta, a), (tb, b)| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| ta.cmp(tb))
    });
    ranked.truncate(setup.k);
    Ok(ranked.into_iter().map(|(_, r)| r).collect())
}

/// Answers of `q` in atom form with the feature tuple of their predicate.
pub fn answers_with_features(reasoner: &Reasoner<'_>, q: &Query) -> Result<(Vec<Atom>, Vec<Name>)> {
    let answers = reasoner.answers_in_atom_form(q)?;
    let pred = &q.distinguished_atom().expect("simple query").predicate;
    let features = reasoner
        .kb()
        .features_of(pred)
        .ok_or_else(|| Error::Invalid(format!("predicate `{pred}` has no declared features")))?
        .to_vec();
    Ok((answers.into_iter().collect(), features))
}

/// Ranks the answers of a simple query by plain reports.
pub fn rank(
    reasoner: &Reasoner<'_>,
    q: &Query,
    setup: &RankSetup<'_>,
    algo: &Algorithm,
    store: &ReportStore,
) -> Result<Vec<RankedAnswer>> {
    check_params(setup, algo)?;
    let (answers, features) = answers_with_features(reasoner, q)?;
    let atoms = answers
        .into_iter()
        .map(|a| {
            let cs = store.reports_for(&a).into_iter().map(Contribution::plain).collect();
            (a, cs)
        })
        .collect();
    rank_contributions(atoms, &features, setup, algo)
}

pub fn rep_rank_basic(
    reasoner: &Reasoner<'_>,
    q: &Query,
    setup: &RankSetup<'_>,
    store: &ReportStore,
) -> Result<Vec<RankedAnswer>> {
    rank(reasoner, q, setup, &Algorithm::Basic, store)
}

pub fn rep_rank_hist(
    reasoner: &Reasoner<'_>,
    q: &Query,
    setup: &RankSetup<'_>,
    rel_threshold: f64,
    collapse: Collapse,
    store: &ReportStore,
) -> Result<Vec<RankedAnswer>> {
    rank(
        reasoner,
        q,
        setup,
        &Algorithm::Hist {
            rel_threshold,
            collapse,
        },
        store,
    )
}
