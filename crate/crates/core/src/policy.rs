//! Declarative shipping policies and per-asset usage constraints.
//!
//! Shipping rules are judged on lineage: a SHIP edge is illegal when the data
//! it carries still contains non-aggregated rows that originate in the
//! restricted region. Aggregation therefore acts as an escape hatch.

use crate::region::Region;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A session-scoped rule constraining movement of intermediate data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompliancePolicy {
    /// Forbid shipping non-aggregated data originating in `from` out of
    /// `from` into `to` (`to = None` means any destination).
    DenyShip { from: Region, to: Option<Region> },
    /// Only aggregated data may leave `from`.
    AggregatedOnly { from: Region },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("degenerate policy: DENY SHIP FROM {0} TO {0}")]
    DegenerateDenyShip(Region),
}

impl CompliancePolicy {
    pub fn deny_ship(from: Region, to: Option<Region>) -> Result<Self, PolicyError> {
        if to == Some(from) {
            return Err(PolicyError::DegenerateDenyShip(from));
        }
        Ok(CompliancePolicy::DenyShip { from, to })
    }
}

impl fmt::Display for CompliancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompliancePolicy::DenyShip { from, to: Some(to) } => {
                write!(f, "DENY SHIP FROM {from} TO {to}")
            }
            CompliancePolicy::DenyShip { from, to: None } => {
                write!(f, "DENY SHIP FROM {from} TO ANY")
            }
            CompliancePolicy::AggregatedOnly { from } => {
                write!(f, "ALLOW ONLY AGGREGATED FROM {from}")
            }
        }
    }
}

/// A constraint a provider attaches to an asset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UsageConstraint {
    /// The asset's data may not be overlaid (joined) with other sources.
    NoOverlay,
    /// The asset may not be used by the listed consumers.
    VendorDeny { vendors: BTreeSet<String> },
}

impl fmt::Display for UsageConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageConstraint::NoOverlay => f.write_str("no-overlay"),
            UsageConstraint::VendorDeny { vendors } => {
                write!(f, "vendor-deny[{}]", vendors.iter().cloned().collect::<Vec<_>>().join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deny_ship_from_to_same_region_is_degenerate() {
        assert_eq!(
            CompliancePolicy::deny_ship(Region::EU, Some(Region::EU)),
            Err(PolicyError::DegenerateDenyShip(Region::EU))
        );
        assert!(CompliancePolicy::deny_ship(Region::EU, None).is_ok());
    }

    #[test]
    fn display_matches_statement_syntax() {
        let p = CompliancePolicy::deny_ship(Region::NA, Some(Region::EU)).unwrap();
        assert_eq!(p.to_string(), "DENY SHIP FROM NA TO EU");
        let q = CompliancePolicy::AggregatedOnly { from: Region::EU };
        assert_eq!(q.to_string(), "ALLOW ONLY AGGREGATED FROM EU");
    }
}
