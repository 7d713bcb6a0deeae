//! Descriptor validation against the type invariants.
//!
//! Violations are data, not faults: the report names the field and the rule
//! broken so providers can fix their documents.

use super::types::{AssetDescriptor, AssetKind, PricingModel, Schema, SigType};
use std::collections::BTreeSet;
use std::fmt;

/// The flat controlled vocabulary of goal categories. Kept deliberately
/// small; unknown goals are validation violations.
pub const GOAL_TAXONOMY: [&str; 20] = [
    "join",
    "join-augment",
    "filter",
    "project",
    "aggregate",
    "sort",
    "feature-encoding",
    "feature-scaling",
    "imputation",
    "regression",
    "classification",
    "clustering",
    "anomaly-detection",
    "forecasting",
    "ranking",
    "recommendation",
    "summarization",
    "tokenization",
    "embedding",
    "storage",
];

pub fn goal_is_known(goal: &str) -> bool {
    GOAL_TAXONOMY.contains(&goal)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, rule: impl Into<String>) {
        self.violations.push(Violation { field: field.to_string(), rule: rule.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_schema(field: &str, schema: &Schema, report: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for c in &schema.columns {
        if c.name.is_empty() {
            report.push(field, "column name empty");
        }
        if !seen.insert(&c.name) {
            report.push(field, format!("duplicate column `{}`", c.name));
        }
    }
}

fn check_sig_type(field: &str, t: &SigType, report: &mut ValidationReport) {
    match t {
        SigType::Schema(s) => check_schema(field, s, report),
        SigType::Category(c) => {
            if c.is_empty() {
                report.push(field, "empty category");
            }
        }
    }
}

/// Checks every invariant of [`AssetDescriptor`] and its nested types.
pub fn validate_descriptor(d: &AssetDescriptor) -> ValidationReport {
    let mut report = ValidationReport::default();

    if d.name.is_empty() {
        report.push("name", "must be non-empty");
    }
    if d.provider.is_empty() {
        report.push("provider", "must be non-empty");
    }

    // Signature: known goal, well-formed schemas, relational data sources
    // expose a non-empty output schema.
    if !goal_is_known(&d.signature.goal) {
        report.push("signature.goal", format!("unknown goal category `{}`", d.signature.goal));
    }
    for (i, t) in d.signature.input_types.iter().enumerate() {
        check_sig_type(&format!("signature.input_types[{i}]"), t, &mut report);
    }
    check_sig_type("signature.output_type", &d.signature.output_type, &mut report);
    if d.kind == AssetKind::DataSource {
        if let SigType::Schema(s) = &d.signature.output_type {
            if s.columns.is_empty() {
                report.push("signature.output_type", "relational data source schema is empty");
            }
        }
    }

    for (i, q) in d.quality.iter().enumerate() {
        let field = format!("quality[{i}]");
        if q.name.is_empty() {
            report.push(&field, "metric name empty");
        }
        if !q.value.is_finite() || q.value < 0.0 {
            report.push(&field, format!("value {} not finite and non-negative", q.value));
        }
    }

    match &d.pricing {
        PricingModel::PayOnce { price } => {
            if price.is_negative() {
                report.push("pricing.price", "must be ≥ 0");
            }
        }
        PricingModel::Subscription { price, period_s } => {
            if price.is_negative() {
                report.push("pricing.price", "must be ≥ 0");
            }
            if *period_s == 0 {
                report.push("pricing.period_s", "must be > 0");
            }
        }
        PricingModel::PayPerUse { rate, .. } => {
            if rate.is_negative() {
                report.push("pricing.rate", "must be ≥ 0");
            }
        }
    }

    for (i, r) in d.required_certificates.iter().enumerate() {
        let field = format!("required_certificates[{i}]");
        if r.property.is_empty() {
            report.push(&field, "property empty");
        }
        if r.trusted_authorities.is_empty() {
            report.push(&field, "trusted authority set empty");
        }
    }

    // Kind-dependent structural rules.
    match (d.kind, d.graph.is_some()) {
        (AssetKind::Pipeline, false) => report.push("graph", "pipeline requires graph"),
        (AssetKind::Pipeline, true) => {}
        (_, true) => report.push("graph", "only pipelines carry a graph"),
        (_, false) => {}
    }
    if matches!(d.kind, AssetKind::DataSource | AssetKind::ComputeNode | AssetKind::StorageNode)
        && d.region.is_none()
    {
        report.push("region", format!("{} requires a region", d.kind.name()));
    }

    if let Some(g) = &d.graph {
        if g.nodes.is_empty() {
            report.push("graph.nodes", "pipeline graph is empty");
        }
        let mut ids = BTreeSet::new();
        for n in &g.nodes {
            if !ids.insert(n.node_id.as_str()) {
                report.push("graph.nodes", format!("duplicate node id `{}`", n.node_id));
            }
        }
        let mut bound = BTreeSet::new();
        for (i, e) in g.edges.iter().enumerate() {
            let field = format!("graph.edges[{i}]");
            if !ids.contains(e.from_node.as_str()) {
                report.push(&field, format!("unknown node `{}`", e.from_node));
            }
            if !ids.contains(e.to_node.as_str()) {
                report.push(&field, format!("unknown node `{}`", e.to_node));
            }
            if e.from_output_index != 0 {
                report.push(&field, "assets have a single output (index 0)");
            }
            if !bound.insert((e.to_node.clone(), e.to_input_index)) {
                report.push(&field, format!("input {} of `{}` bound twice", e.to_input_index, e.to_node));
            }
        }
        if has_cycle(g) {
            report.push("graph", "edges form a cycle");
        }
    }

    if let Some(tree) = &d.revenue_share {
        for rule in tree.check() {
            report.push("revenue_share", rule);
        }
    }

    report
}

fn has_cycle(g: &super::types::PipelineGraph) -> bool {
    // Kahn's algorithm over node ids.
    use std::collections::BTreeMap;
    let mut indegree: BTreeMap<&str, usize> = g.nodes.iter().map(|n| (n.node_id.as_str(), 0)).collect();
    for e in &g.edges {
        if let Some(d) = indegree.get_mut(e.to_node.as_str()) {
            *d += 1;
        }
    }
    let mut queue: Vec<&str> =
        indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
    let mut visited = 0;
    while let Some(id) = queue.pop() {
        visited += 1;
        for e in g.edges.iter().filter(|e| e.from_node == id) {
            if let Some(d) = indegree.get_mut(e.to_node.as_str()) {
                *d -= 1;
                if *d == 0 {
                    queue.push(e.to_node.as_str());
                }
            }
        }
    }
    visited < indegree.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::test_fixtures::{crime_data, pipeline_descriptor, regressor};
    use crate::asset::types::*;
    use crate::money::Money;
    use crate::region::Region;
    use crate::share::{RevenueShareTree, Share};
    use num_traits::One;

    #[test]
    fn pipeline_without_graph_is_rejected() {
        let mut d = pipeline_descriptor();
        d.graph = None;
        let report = validate_descriptor(&d);
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "graph" && v.rule == "pipeline requires graph"));
    }

    #[test]
    fn well_formed_data_source_is_ok() {
        // A data source in the EU priced pay-per-use at $1 per megabyte.
        let mut d = crime_data();
        d.region = Some(Region::EU);
        d.pricing = PricingModel::PayPerUse {
            rate: Money::from_units(1),
            metric: UsageMeter::PerMegabyte,
        };
        assert!(validate_descriptor(&d).is_ok());
    }

    #[test]
    fn revenue_shares_must_sum_to_one() {
        let mut d = regressor("model", 1000.0);
        d.revenue_share = Some(RevenueShareTree::node(
            "gross",
            Share::one(),
            vec![
                RevenueShareTree::leaf("a", Share::new(1, 2)),
                RevenueShareTree::leaf("b", Share::new(1, 3)),
            ],
        ));
        let report = validate_descriptor(&d);
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "revenue_share" && v.rule == "shares sum 5/6 ≠ 1"));
    }

    #[test]
    fn data_source_without_region_is_rejected() {
        let mut d = crime_data();
        d.region = None;
        let report = validate_descriptor(&d);
        assert!(report.violations.iter().any(|v| v.field == "region"));
    }

    #[test]
    fn unknown_goal_is_rejected() {
        let mut d = regressor("model", 1000.0);
        d.signature.goal = "alchemy".to_string();
        assert!(!validate_descriptor(&d).is_ok());
    }

    #[test]
    fn cyclic_graph_is_rejected() {
        let mut d = pipeline_descriptor();
        if let Some(g) = &mut d.graph {
            let first = g.nodes.first().unwrap().node_id.clone();
            let last = g.nodes.last().unwrap().node_id.clone();
            g.edges.push(PipelineEdge {
                from_node: last,
                from_output_index: 0,
                to_node: first,
                to_input_index: 1,
            });
        }
        let report = validate_descriptor(&d);
        assert!(report.violations.iter().any(|v| v.rule.contains("cycle")));
    }
}
