//! The data-movement cost model: shipped bytes at per-route rates plus a CPU
//! charge per consumed row.

use super::site::{SiteNode, SitePlan};
use super::stats::{Estimator, StatsError};
use crate::region::Region;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipRates {
    /// Rate used when no per-route override exists.
    pub default_rate: f64,
    /// Per-route overrides keyed "FROM->TO".
    #[serde(default)]
    pub pairs: BTreeMap<String, f64>,
    /// When set, an override for one direction applies to both.
    #[serde(default = "default_true")]
    pub symmetric: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ShipRates {
    fn default() -> Self {
        ShipRates { default_rate: 0.01, pairs: BTreeMap::new(), symmetric: true }
    }
}

impl ShipRates {
    pub fn rate(&self, from: Region, to: Region) -> f64 {
        if let Some(r) = self.pairs.get(&format!("{from}->{to}")) {
            return *r;
        }
        if self.symmetric {
            if let Some(r) = self.pairs.get(&format!("{to}->{from}")) {
                return *r;
            }
        }
        self.default_rate
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.default_rate.is_finite() || self.default_rate < 0.0 {
            return Err(format!("default ship rate {} must be finite and ≥ 0", self.default_rate));
        }
        for (route, r) in &self.pairs {
            if !r.is_finite() || *r < 0.0 {
                return Err(format!("ship rate {r} for {route} must be finite and ≥ 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub ship: ShipRates,
    pub cpu_cost_per_row: f64,
    pub filter_selectivity_default: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { ship: ShipRates::default(), cpu_cost_per_row: 0.001, filter_selectivity_default: 0.1 }
    }
}

impl CostModel {
    pub fn check(&self) -> Result<(), String> {
        self.ship.check()?;
        if !self.cpu_cost_per_row.is_finite() || self.cpu_cost_per_row < 0.0 {
            return Err(format!("cpu cost {} must be finite and ≥ 0", self.cpu_cost_per_row));
        }
        if !(self.filter_selectivity_default > 0.0 && self.filter_selectivity_default <= 1.0) {
            return Err(format!(
                "default selectivity {} must lie in (0, 1]",
                self.filter_selectivity_default
            ));
        }
        Ok(())
    }

    pub fn estimator<'a>(&self, registry: &'a crate::sql::TableRegistry) -> Estimator<'a> {
        Estimator::new(registry, self.filter_selectivity_default)
    }
}

/// Total plan cost: Σ over ships of `bytes(child) · rate(from, to)` plus
/// Σ over operators of `rows_in · cpu_cost_per_row`. Children fold before
/// the node's own term, left to right.
pub fn estimate_cost(
    plan: &SitePlan,
    cm: &CostModel,
    registry: &crate::sql::TableRegistry,
) -> Result<f64, StatsError> {
    let est = cm.estimator(registry);
    node_cost(&plan.root, cm, &est)
}

fn node_cost(node: &SiteNode, cm: &CostModel, est: &Estimator) -> Result<f64, StatsError> {
    match node {
        SiteNode::Scan { .. } => Ok(node.rows_in(est)? * cm.cpu_cost_per_row),
        SiteNode::Filter { child, .. }
        | SiteNode::Project { child, .. }
        | SiteNode::Aggregate { child, .. } => {
            Ok(node_cost(child, cm, est)? + node.rows_in(est)? * cm.cpu_cost_per_row)
        }
        SiteNode::Join { left, right, .. } => Ok(node_cost(left, cm, est)?
            + node_cost(right, cm, est)?
            + node.rows_in(est)? * cm.cpu_cost_per_row),
        SiteNode::Ship { from, to, child } => {
            Ok(node_cost(child, cm, est)? + child.bytes(est)? * cm.ship.rate(*from, *to))
        }
    }
}
