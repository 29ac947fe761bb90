//! Strict partial orders over a feature tuple.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SpoError;
use crate::syntax::{name, Name};

/// Irreflexive, transitively closed preference relation over `universe`.
///
/// `prefers(a, b)` reads "a is preferred to b". Stored as a dense relation
/// matrix; feature tuples are small.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spo {
    universe: Vec<Name>,
    rel: Vec<bool>,
}

/// JSON form: `{"features": [...], "prefers": [["a","b"], ...]}`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SpoSpec {
    pub features: Vec<String>,
    #[serde(default)]
    pub prefers: Vec<(String, String)>,
}

impl Spo {
    /// The empty relation over `universe`.
    pub fn empty(universe: &[Name]) -> Result<Self, SpoError> {
        let mut seen = BTreeSet::new();
        for f in universe {
            if !seen.insert(f) {
                return Err(SpoError::DuplicateFeature(f.to_string()));
            }
        }
        let n = universe.len();
        Ok(Spo {
            universe: universe.to_vec(),
            rel: vec![false; n * n],
        })
    }

    /// Closes `pairs` transitively; fails if the closure relates a feature to
    /// itself.
    pub fn validate<S: AsRef<str>>(pairs: &[(S, S)], universe: &[Name]) -> Result<Self, SpoError> {
        let mut spo = Spo::empty(universe)?;
        let n = spo.universe.len();
        for (a, b) in pairs {
            let i = spo.index(a.as_ref())?;
            let j = spo.index(b.as_ref())?;
            spo.rel[i * n + j] = true;
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                if spo.rel[i * n + k] {
                    for j in 0..n {
                        if spo.rel[k * n + j] {
                            spo.rel[i * n + j] = true;
                        }
                    }
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| spo.rel[i * n + i]) {
            return Err(SpoError::Cycle(spo.universe[i].to_string()));
        }
        Ok(spo)
    }

    pub fn from_spec(spec: &SpoSpec) -> Result<Self, SpoError> {
        let universe: Vec<Name> = spec.features.iter().map(|f| name(f)).collect();
        Spo::validate(&spec.prefers, &universe)
    }

    pub fn to_spec(&self) -> SpoSpec {
        SpoSpec {
            features: self.universe.iter().map(|f| f.to_string()).collect(),
            prefers: self
                .pairs()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    pub fn universe(&self) -> &[Name] {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn index(&self, f: &str) -> Result<usize, SpoError> {
        self.universe
            .iter()
            .position(|u| &**u == f)
            .ok_or_else(|| SpoError::UnknownFeature(f.to_string()))
    }

    /// Relation by position.
    pub fn prefers_at(&self, i: usize, j: usize) -> bool {
        self.rel[i * self.universe.len() + j]
    }

    pub fn prefers(&self, a: &str, b: &str) -> Result<bool, SpoError> {
        Ok(self.prefers_at(self.index(a)?, self.index(b)?))
    }

    /// All related pairs of the closure, in universe order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Name, &Name)> {
        let n = self.universe.len();
        (0..n)
            .flat_map(move |i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.prefers_at(i, j))
            .map(|(i, j)| (&self.universe[i], &self.universe[j]))
    }

    /// Ranks of every feature, aligned with the universe. Rank 1 holds the
    /// undominated features; rank k + 1 those undominated once every feature
    /// of rank at most k is removed.
    pub fn ranks(&self) -> Vec<usize> {
        let n = self.universe.len();
        let mut rank = vec![0usize; n];
        let mut assigned = 0;
        let mut layer = 1;
        while assigned < n {
            let current: Vec<usize> = (0..n)
                .filter(|&j| rank[j] == 0)
                .filter(|&j| !(0..n).any(|i| rank[i] == 0 && self.prefers_at(i, j)))
                .collect();
            debug_assert!(!current.is_empty(), "acyclic relation always has a maximal element");
            for &j in &current {
                rank[j] = layer;
            }
            assigned += current.len();
            layer += 1;
        }
        rank
    }

    pub fn rank(&self, f: &str) -> Result<usize, SpoError> {
        Ok(self.ranks()[self.index(f)?])
    }

    /// Same relation over a larger universe; new features are unrelated.
    pub fn extend_universe(&self, universe: &[Name]) -> Result<Spo, SpoError> {
        let pairs: Vec<(Name, Name)> = self
            .pairs()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        for f in &self.universe {
            if !universe.contains(f) {
                return Err(SpoError::UnknownFeature(f.to_string()));
            }
        }
        Spo::validate(&pairs, universe)
    }

    /// Reorders this relation onto `universe`, which must hold the same
    /// features.
    pub fn aligned_to(&self, universe: &[Name]) -> Result<Spo, SpoError> {
        if universe.len() != self.universe.len() {
            return Err(SpoError::UnknownFeature(
                universe
                    .iter()
                    .find(|f| !self.universe.contains(f))
                    .or_else(|| self.universe.iter().find(|f| !universe.contains(f)))
                    .map_or_else(String::new, |f| f.to_string()),
            ));
        }
        self.extend_universe(universe)
    }
}

/// Agreement of two SPOs on one unordered pair `(i, j)`, `i != j`, both
/// given as positions in a shared universe: 1 when they order the pair the
/// same way or both leave it open, 0.5 when exactly one orders it, 0 when
/// they order it oppositely.
pub fn sim_pair(i: usize, j: usize, p1: &Spo, p2: &Spo) -> f64 {
    let ij = (p1.prefers_at(i, j), p2.prefers_at(i, j));
    let ji = (p1.prefers_at(j, i), p2.prefers_at(j, i));
    let in_union_ij = ij.0 || ij.1;
    let in_union_ji = ji.0 || ji.1;
    if (ij.0 && ij.1) || (ji.0 && ji.1) {
        1.0
    } else if !in_union_ij && !in_union_ji {
        1.0
    } else if in_union_ij && in_union_ji {
        0.0
    } else {
        0.5
    }
}

/// Mean pairwise agreement over all unordered pairs. Defined as 1 for
/// universes with fewer than two features.
pub fn sim(p1: &Spo, p2: &Spo) -> Result<f64, SpoError> {
    let p2 = if p1.universe == p2.universe {
        p2.clone()
    } else {
        p2.aligned_to(&p1.universe)?
    };
    let n = p1.len();
    if n < 2 {
        return Ok(1.0);
    }
    let total: f64 = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| sim_pair(i, j, p1, &p2))
        .sum();
    Ok(total / (n * (n - 1) / 2) as f64)
}
