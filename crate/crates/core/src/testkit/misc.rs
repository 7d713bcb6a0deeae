//! Small helpers for driving plans in tests.

use crate::asset::{AssetId, LogicalSignature, PricingModel, SigType};
use crate::exec::{operator_category, operators, ExecutionPlan, ImplementationVariant, OperatorBinding};
use crate::money::Money;
use crate::plan::{SiteNode, SitePlan};
use crate::region::Region;
use crate::sql::{LogicalNode, LogicalPlan};

/// Pins every operator of a logical plan to one region, with no ships: the
/// raw lowered tree made executable.
pub fn site_all_at(lp: &LogicalPlan, region: Region) -> SitePlan {
    fn walk(node: &LogicalNode, region: Region) -> SiteNode {
        match node {
            LogicalNode::Scan { table } => SiteNode::Scan { table: table.clone(), region },
            LogicalNode::Filter { pred, child } => SiteNode::Filter {
                pred: pred.clone(),
                region,
                child: Box::new(walk(child, region)),
            },
            LogicalNode::Project { cols, child } => SiteNode::Project {
                cols: cols.clone(),
                region,
                child: Box::new(walk(child, region)),
            },
            LogicalNode::Join { preds, left, right } => SiteNode::Join {
                preds: preds.clone(),
                region,
                left: Box::new(walk(left, region)),
                right: Box::new(walk(right, region)),
            },
            LogicalNode::Aggregate { group, items, child } => SiteNode::Aggregate {
                group: group.clone(),
                items: items.clone(),
                region,
                child: Box::new(walk(child, region)),
            },
        }
    }
    SitePlan { root: walk(&lp.root, region) }
}

/// Binds every operator to a built-in free variant on one synthetic node,
/// for tests that only care about data movement.
pub fn bind_builtin(plan: &SitePlan, node_id: &str) -> ExecutionPlan {
    let bindings = operators(plan)
        .iter()
        .enumerate()
        .map(|(op_index, op)| OperatorBinding {
            op_index,
            label: op.label(),
            variant: ImplementationVariant {
                asset: AssetId::new(format!("builtin-{}", operator_category(op))).unwrap(),
                implements: LogicalSignature {
                    goal: operator_category(op).to_string(),
                    input_types: vec![],
                    output_type: SigType::category("rows"),
                },
                runtime_factor: 1.0,
                price: PricingModel::PayOnce { price: Money::ZERO },
                required_certificates: vec![],
            },
            node_id: node_id.to_string(),
        })
        .collect();
    ExecutionPlan {
        site: plan.clone(),
        bindings,
        estimated_runtime_s: 0.0,
        estimated_price: Money::ZERO,
    }
}
