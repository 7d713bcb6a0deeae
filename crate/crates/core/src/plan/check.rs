//! Compliance checking of SHIP edges against the session policies.

use super::site::{SiteNode, SitePlan};
use crate::policy::CompliancePolicy;
use crate::region::Region;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ShipViolation {
    /// Preorder index of the ship among the plan's ship nodes.
    pub ship_index: usize,
    pub from: Region,
    pub to: Region,
    pub policy: CompliancePolicy,
}

impl fmt::Display for ShipViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SHIP {}->{} (#{}) violates {}", self.from, self.to, self.ship_index, self.policy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Compliance {
    Compliant,
    Violations(Vec<ShipViolation>),
}

impl Compliance {
    pub fn is_compliant(&self) -> bool {
        matches!(self, Compliance::Compliant)
    }
}

/// A ship `from -> to` carrying `lineage` breaks `policy` iff the policy
/// restricts `from` (and the destination, for targeted denies) and the
/// shipped data still contains non-aggregated rows originating in `from`.
pub fn ship_violates(
    from: Region,
    to: Region,
    lineage: &BTreeSet<super::site::LineageTag>,
    policy: &CompliancePolicy,
) -> bool {
    let raw_origin_data =
        |region: Region| lineage.iter().any(|t| t.origin_region == region && !t.aggregated);
    match policy {
        CompliancePolicy::DenyShip { from: f, to: t } => {
            from == *f && (t.is_none() || *t == Some(to)) && raw_origin_data(*f)
        }
        CompliancePolicy::AggregatedOnly { from: f } => from == *f && raw_origin_data(*f),
    }
}

/// Lists every (ship, policy) violation in the plan.
pub fn check_plan(plan: &SitePlan, policies: &[CompliancePolicy]) -> Compliance {
    let mut violations = Vec::new();
    let mut ship_index = 0;
    walk(&plan.root, policies, &mut ship_index, &mut violations);
    if violations.is_empty() {
        Compliance::Compliant
    } else {
        Compliance::Violations(violations)
    }
}

fn walk(
    node: &SiteNode,
    policies: &[CompliancePolicy],
    ship_index: &mut usize,
    out: &mut Vec<ShipViolation>,
) {
    if let SiteNode::Ship { from, to, child } = node {
        let idx = *ship_index;
        *ship_index += 1;
        let lineage = child.lineage_tags();
        for policy in policies {
            if ship_violates(*from, *to, &lineage, policy) {
                out.push(ShipViolation {
                    ship_index: idx,
                    from: *from,
                    to: *to,
                    policy: policy.clone(),
                });
            }
        }
    }
    for child in node.children() {
        walk(child, policies, ship_index, out);
    }
}
