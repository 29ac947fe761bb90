//! Trust and relevance measures, selectable by name.

use std::sync::Arc;

use crate::error::SpoError;
use crate::report::Report;
use crate::spo::{sim, Spo};

/// Per-feature trustworthiness of a report, each value in `[0, 1]`.
pub trait TrustMeasure: Send + Sync {
    fn name(&self) -> &str;
    /// One value per feature of `r`, in the report's feature order.
    fn trust(&self, r: &Report) -> Vec<f64>;
}

/// Relevance of a report to a querying user's SPO, in `[0, 1]`.
pub trait RelevanceMeasure: Send + Sync {
    fn name(&self) -> &str;
    fn relevance(&self, r: &Report, user: &Spo) -> Result<f64, SpoError>;
}

/// `2^-(rank - 1)` per feature under the report's own SPO, scaled by
/// `discount` unless the register's `key` equals `trusted` exactly. A missing
/// key takes the discounted branch.
#[derive(Clone, Debug)]
pub struct RankExponentialTrust {
    pub key: String,
    pub trusted: String,
    pub discount: f64,
}

impl Default for RankExponentialTrust {
    fn default() -> Self {
        RankExponentialTrust {
            key: "nationality".into(),
            trusted: "Italian".into(),
            discount: 0.25,
        }
    }
}

impl TrustMeasure for RankExponentialTrust {
    fn name(&self) -> &str {
        "rank-exp"
    }

    fn trust(&self, r: &Report) -> Vec<f64> {
        let factor = match r.register_text(&self.key) {
            Some(v) if v == self.trusted => 1.0,
            _ => self.discount,
        };
        r.spo
            .ranks()
            .into_iter()
            .map(|k| factor * 2f64.powi(-(k as i32 - 1)))
            .collect()
    }
}

/// Total absolute rank difference between report and user SPO, mapped
/// through `2^-d`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RankDistanceRelevance;

impl RelevanceMeasure for RankDistanceRelevance {
    fn name(&self) -> &str {
        "rank-dist"
    }

    fn relevance(&self, r: &Report, user: &Spo) -> Result<f64, SpoError> {
        let user = user.aligned_to(r.features())?;
        let d: i64 = r
            .spo
            .ranks()
            .iter()
            .zip(user.ranks())
            .map(|(&a, b)| (a as i64 - b as i64).abs())
            .sum();
        Ok(2f64.powi(-(d as i32)))
    }
}

/// Pairwise agreement between the report's SPO and the user's; ignores the
/// register.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimilarityRelevance;

impl RelevanceMeasure for SimilarityRelevance {
    fn name(&self) -> &str {
        "sim"
    }

    fn relevance(&self, r: &Report, user: &Spo) -> Result<f64, SpoError> {
        sim(&r.spo, user)
    }
}

pub const TRUST_MEASURES: &[&str] = &["rank-exp"];
pub const RELEVANCE_MEASURES: &[&str] = &["rank-dist", "sim"];

pub fn trust_measure(name: &str) -> Option<Arc<dyn TrustMeasure>> {
    match name {
        "rank-exp" => Some(Arc::new(RankExponentialTrust::default())),
        _ => None,
    }
}

pub fn relevance_measure(name: &str) -> Option<Arc<dyn RelevanceMeasure>> {
    match name {
        "rank-dist" => Some(Arc::new(RankDistanceRelevance)),
        "sim" => Some(Arc::new(SimilarityRelevance)),
        _ => None,
    }
}
