//! Declarative matchmaking over the aggregated index.
//!
//! The match predicate is: goal equals the request goal, the canonical output
//! type equals the requested output, every quality bound is satisfied by a
//! present metric, all request keywords appear in the candidate's token set,
//! and the price proxy fits the budget when one is given. Besides single
//! assets, depth-2 pipelines (one data source feeding one algorithm) are
//! synthesized when their composition is constraint-legal.
//!
//! Ranking uses a configurable scalarized score. The ranking function is this
//! kernel's own choice; nothing in the problem fixes one.

use super::{tokenize, Candidate::*, MarketIndex};
use crate::asset::{
    canonical_signature, compose_pipeline, AssetDescriptor, AssetId, AssetKind, LogicalSignature,
    PipelineGraph, SigType,
};
use crate::money::Money;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Metric value must be at most this.
    Max(f64),
    /// Metric value must be at least this.
    Min(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityBound {
    pub metric: String,
    pub bound: BoundKind,
}

impl QualityBound {
    pub fn max(metric: impl Into<String>, value: f64) -> Self {
        QualityBound { metric: metric.into(), bound: BoundKind::Max(value) }
    }

    pub fn min(metric: impl Into<String>, value: f64) -> Self {
        QualityBound { metric: metric.into(), bound: BoundKind::Min(value) }
    }
}

/// A declarative consumer request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub goal: String,
    pub required_output: SigType,
    #[serde(default)]
    pub quality_bounds: Vec<QualityBound>,
    #[serde(default)]
    pub budget: Option<Money>,
    #[serde(default)]
    pub keywords: Vec<String>,
}

/// Weights of the scalarized ranking score (quality slack vs cheapness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchWeights {
    pub quality: f64,
    pub price: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        MatchWeights { quality: 0.5, price: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub enum Candidate {
    Asset(AssetId),
    /// A synthesized data-source + algorithm pipeline.
    Pipeline { data: AssetId, algorithm: AssetId, graph: PipelineGraph },
}

impl Candidate {
    /// Deterministic tie-break key.
    pub fn key(&self) -> String {
        match self {
            Asset(id) => id.to_string(),
            Pipeline { data, algorithm, .. } => format!("{data}+{algorithm}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchEntry {
    pub candidate: Candidate,
    /// Signature class of the candidate (of the algorithm stage for
    /// synthesized pipelines): the assets that could substitute it.
    pub equivalents: BTreeSet<AssetId>,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    pub entries: Vec<MatchEntry>,
}

fn bounds_ok(d: &AssetDescriptor, bounds: &[QualityBound]) -> bool {
    bounds.iter().all(|b| match d.quality_metric(&b.metric) {
        Some(m) => match b.bound {
            BoundKind::Max(v) => m.value <= v,
            BoundKind::Min(v) => m.value >= v,
        },
        None => false,
    })
}

/// Average normalized slack over the bounds, clamped to [0, 1]; 1.0 when the
/// request carries no bounds.
fn quality_slack(d: &AssetDescriptor, bounds: &[QualityBound]) -> f64 {
    if bounds.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for b in bounds {
        let v = d.quality_metric(&b.metric).map(|m| m.value).unwrap_or(f64::NAN);
        let slack = match b.bound {
            BoundKind::Max(bound) => {
                if bound == 0.0 {
                    if v == 0.0 { 1.0 } else { 0.0 }
                } else {
                    (bound - v) / bound.abs()
                }
            }
            BoundKind::Min(bound) => {
                if bound == 0.0 {
                    if v >= 0.0 { 1.0 } else { 0.0 }
                } else {
                    (v - bound) / bound.abs()
                }
            }
        };
        total += slack.clamp(0.0, 1.0);
    }
    total / bounds.len() as f64
}

struct RawCandidate {
    candidate: Candidate,
    slack: f64,
    price: Money,
    equivalents: BTreeSet<AssetId>,
}

impl MarketIndex {
    /// Finds all and only the candidates satisfying the request predicate and
    /// ranks them. Ties are broken by candidate key, lexicographically.
    pub fn match_request(&self, r: &Request, weights: MatchWeights) -> MatchResult {
        let want_out = canonical_out(&r.required_output);
        let keywords: Vec<String> = r.keywords.iter().map(|k| k.to_lowercase()).collect();
        let mut raw: Vec<RawCandidate> = Vec::new();

        let keyword_ok = |tokens: &BTreeSet<String>| keywords.iter().all(|k| tokens.contains(k));
        let budget_ok = |price: Money| r.budget.is_none_or(|b| price <= b);

        for (id, entry) in self.entries() {
            let d = &entry.descriptor;
            if d.signature.goal != r.goal || canonical_out(&d.signature.output_type) != want_out {
                continue;
            }
            if !bounds_ok(d, &r.quality_bounds) || !keyword_ok(&tokenize(d)) {
                continue;
            }
            let price = d.pricing.price_proxy();
            if !budget_ok(price) {
                continue;
            }
            raw.push(RawCandidate {
                candidate: Asset(id.clone()),
                slack: quality_slack(d, &r.quality_bounds),
                price,
                equivalents: self.equivalents(id).expect("indexed id"),
            });
        }

        // Depth-2 synthesis: one data source feeding one algorithm.
        for (data_id, data_entry) in self.entries() {
            let data = &data_entry.descriptor;
            if data.kind != AssetKind::DataSource {
                continue;
            }
            for (algo_id, algo_entry) in self.entries() {
                let algo = &algo_entry.descriptor;
                if algo.kind != AssetKind::Algorithm
                    || algo.signature.goal != r.goal
                    || canonical_out(&algo.signature.output_type) != want_out
                    || algo.signature.input_types.len() != 1
                    || canonical_out(&algo.signature.input_types[0])
                        != canonical_out(&data.signature.output_type)
                {
                    continue;
                }
                if !bounds_ok(algo, &r.quality_bounds) {
                    continue;
                }
                let mut tokens = tokenize(data);
                tokens.extend(tokenize(algo));
                if !keyword_ok(&tokens) {
                    continue;
                }
                let price = data.pricing.price_proxy() + algo.pricing.price_proxy();
                if !budget_ok(price) {
                    continue;
                }
                let edges = vec![(data_id.to_string(), 0, algo_id.to_string(), 0)];
                let Ok(graph) = compose_pipeline(&[data.clone(), algo.clone()], &edges, None)
                else {
                    continue; // constraint-illegal combination
                };
                raw.push(RawCandidate {
                    candidate: Pipeline {
                        data: data_id.clone(),
                        algorithm: algo_id.clone(),
                        graph,
                    },
                    slack: quality_slack(algo, &r.quality_bounds),
                    price,
                    equivalents: self.equivalents(algo_id).expect("indexed id"),
                });
            }
        }

        let max_price = raw.iter().map(|c| c.price.micro_units.max(0)).max().unwrap_or(0);
        let mut entries: Vec<MatchEntry> = raw
            .into_iter()
            .map(|c| {
                let cheapness = if max_price == 0 {
                    1.0
                } else {
                    1.0 - c.price.micro_units.max(0) as f64 / max_price as f64
                };
                MatchEntry {
                    candidate: c.candidate,
                    equivalents: c.equivalents,
                    score: weights.quality * c.slack + weights.price * cheapness,
                }
            })
            .collect();
        entries.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| a.candidate.key().cmp(&b.candidate.key()))
        });
        MatchResult { entries }
    }
}

fn canonical_out(t: &SigType) -> String {
    // Reuse the signature canonicalizer on a throwaway signature.
    let sig = LogicalSignature {
        goal: String::new(),
        input_types: vec![],
        output_type: t.clone(),
    };
    canonical_signature(&sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::test_fixtures::*;
    use crate::asset::PricingModel;
    use crate::catalog::Marketplace;

    fn regression_request(max_mae: f64) -> Request {
        Request {
            goal: "regression".to_string(),
            required_output: SigType::category("price-predictor"),
            quality_bounds: vec![QualityBound::max("mae", max_mae)],
            budget: None,
            keywords: vec![],
        }
    }

    #[test]
    fn only_predictors_within_bound_are_returned() {
        // Request: regression with average error at most 5000.
        let mut m = Marketplace::new("m");
        m.publish(regressor("good-model", 4200.0)).unwrap();
        m.publish(regressor("weak-model", 7800.0)).unwrap();
        let idx = m.to_index();
        let result = idx.match_request(&regression_request(5000.0), MatchWeights::default());
        let keys: Vec<String> = result.entries.iter().map(|e| e.candidate.key()).collect();
        assert_eq!(keys, vec!["good-model".to_string()]);
    }

    #[test]
    fn impossible_bound_gives_empty_result() {
        let mut m = Marketplace::new("m");
        m.publish(regressor("a", 10.0)).unwrap();
        m.publish(regressor("b", 20.0)).unwrap();
        let idx = m.to_index();
        let result = idx.match_request(&regression_request(0.0), MatchWeights::default());
        assert!(result.entries.is_empty());
    }

    #[test]
    fn pipelines_are_synthesized_from_data_plus_algorithm() {
        let mut m = Marketplace::new("m");
        m.publish(crime_data()).unwrap();
        m.publish(join_augment()).unwrap();
        let idx = m.to_index();
        let r = Request {
            goal: "join-augment".to_string(),
            required_output: SigType::category("feature-table"),
            quality_bounds: vec![],
            budget: None,
            keywords: vec![],
        };
        let result = idx.match_request(&r, MatchWeights::default());
        assert!(result
            .entries
            .iter()
            .any(|e| e.candidate.key() == "crime-rate-berlin+join-augment"));
    }

    #[test]
    fn cheaper_equivalent_ranks_first_on_price() {
        let mut m = Marketplace::new("m");
        let mut a = regressor("pricey", 4000.0);
        a.pricing = PricingModel::PayOnce { price: crate::money::Money::from_units(10) };
        let mut b = regressor("cheap", 4000.0);
        b.pricing = PricingModel::PayOnce { price: crate::money::Money::from_units(1) };
        m.publish(a).unwrap();
        m.publish(b).unwrap();
        let idx = m.to_index();
        let result = idx.match_request(&regression_request(5000.0), MatchWeights::default());
        assert_eq!(result.entries[0].candidate.key(), "cheap");
        // Both carry the same signature, so each lists the two-element class.
        assert_eq!(result.entries[0].equivalents.len(), 2);
    }

    #[test]
    fn ties_break_lexicographically() {
        let mut m = Marketplace::new("m");
        m.publish(regressor("zeta", 4000.0)).unwrap();
        m.publish(regressor("alpha", 4000.0)).unwrap();
        let idx = m.to_index();
        let result = idx.match_request(&regression_request(5000.0), MatchWeights::default());
        let keys: Vec<String> = result.entries.iter().map(|e| e.candidate.key()).collect();
        assert_eq!(keys, vec!["alpha".to_string(), "zeta".to_string()]);
    }
}
