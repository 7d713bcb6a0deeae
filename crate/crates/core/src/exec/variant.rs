//! Budget-constrained selection of implementation variants and placement
//! nodes, gated on certificates.
//!
//! Each plan operator can be served by any variant implementing its category
//! on any node in its region that holds the variant's required certificates.
//! The search is exhaustive at desk scale: it minimizes estimated runtime
//! subject to the estimated price fitting the budget, breaking ties by lower
//! price and then by canonical (variant, node) order.

use super::node::{verify_certificates, AuthorityRegistry, CertError, NodeExecutorInfo};
use crate::asset::{AssetId, CertRequirement, LogicalSignature, PricingModel, UsageMeter};
use crate::money::Money;
use crate::plan::{Estimator, SiteNode, SitePlan, StatsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementationVariant {
    pub asset: AssetId,
    pub implements: LogicalSignature,
    /// Work units per consumed row; > 0.
    pub runtime_factor: f64,
    pub price: PricingModel,
    #[serde(default)]
    pub required_certificates: Vec<CertRequirement>,
}

impl ImplementationVariant {
    pub fn check(&self) -> Result<(), String> {
        if !(self.runtime_factor > 0.0 && self.runtime_factor.is_finite()) {
            return Err(format!(
                "variant `{}` runtime factor {} must be finite and > 0",
                self.asset, self.runtime_factor
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBinding {
    /// Preorder index among the plan's operators (ships excluded).
    pub op_index: usize,
    pub label: String,
    pub variant: ImplementationVariant,
    pub node_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    pub site: SitePlan,
    pub bindings: Vec<OperatorBinding>,
    pub estimated_runtime_s: f64,
    pub estimated_price: Money,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("budget infeasible: the cheapest feasible assignment costs {min_price}")]
    BudgetInfeasible { min_price: Money },
    #[error("no eligible (variant, node) pair for operator `{operator}`")]
    NoEligibleNode { operator: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("price overflow while estimating `{operator}`")]
    PriceOverflow { operator: String },
}

/// The goal category a plan operator needs implemented.
pub fn operator_category(node: &SiteNode) -> &'static str {
    match node {
        SiteNode::Scan { .. } => "scan",
        SiteNode::Filter { .. } => "filter",
        SiteNode::Project { .. } => "project",
        SiteNode::Join { .. } => "join",
        SiteNode::Aggregate { .. } => "aggregate",
        SiteNode::Ship { .. } => unreachable!("ships are not operators"),
    }
}

/// Operators of the plan in preorder (ships excluded).
pub fn operators(plan: &SitePlan) -> Vec<&SiteNode> {
    let mut out = Vec::new();
    collect_operators(&plan.root, &mut out);
    out
}

fn collect_operators<'a>(node: &'a SiteNode, out: &mut Vec<&'a SiteNode>) {
    if node.is_operator() {
        out.push(node);
    }
    for child in node.children() {
        collect_operators(child, out);
    }
}

/// Price of metering `rows_in`/`bytes_in`/`runtime_s` under a pricing model.
/// Quantities round up to whole units first, then the arithmetic is exact
/// integer arithmetic with one floor per component.
pub fn usage_price(
    model: &PricingModel,
    rows_in: f64,
    bytes_in: f64,
    runtime_s: f64,
) -> Option<Money> {
    match model {
        PricingModel::PayOnce { price } | PricingModel::Subscription { price, .. } => Some(*price),
        PricingModel::PayPerUse { rate, metric } => {
            match metric {
                UsageMeter::PerCall => rate.checked_mul(rows_in.ceil() as i64),
                UsageMeter::PerThousandCalls => {
                    rate.mul_div_floor(rows_in.ceil() as i128, 1000)
                }
                UsageMeter::PerMegabyte => rate.mul_div_floor(bytes_in.ceil() as i128, 1_000_000),
                UsageMeter::PerHour => {
                    let micro_s = (runtime_s * 1e6).ceil() as i128;
                    rate.mul_div_floor(micro_s, 3_600_000_000i128)
                }
            }
        }
    }
}

struct Choice {
    variant: ImplementationVariant,
    node_id: String,
    runtime_s: f64,
    price: Money,
}

/// Picks the runtime-minimal certificate-legal assignment within budget.
pub fn select_variants(
    plan: &SitePlan,
    variants: &[ImplementationVariant],
    nodes: &[NodeExecutorInfo],
    budget: Option<Money>,
    est: &Estimator,
    authorities: &AuthorityRegistry,
    now: u64,
) -> Result<ExecutionPlan, SelectError> {
    let ops = operators(plan);
    let mut choices_per_op: Vec<Vec<Choice>> = Vec::with_capacity(ops.len());
    for op in &ops {
        let category = operator_category(op);
        let rows_in = op.rows_in(est)?;
        let bytes_in = input_bytes(op, est)?;
        let mut choices = Vec::new();
        for variant in variants {
            if variant.implements.goal != category {
                continue;
            }
            for node in nodes {
                if node.region != op.region() || !node.capabilities.contains("relational") {
                    continue;
                }
                if !verify_certificates(node, &variant.required_certificates, now, authorities)? {
                    continue;
                }
                let runtime_s = rows_in * variant.runtime_factor / node.speed_factor;
                let variant_price = usage_price(&variant.price, rows_in, bytes_in, runtime_s);
                let node_price = usage_price(&node.price, rows_in, bytes_in, runtime_s);
                let price = variant_price
                    .zip(node_price)
                    .and_then(|(a, b)| a.checked_add(b))
                    .ok_or_else(|| SelectError::PriceOverflow { operator: op.label() })?;
                choices.push(Choice {
                    variant: variant.clone(),
                    node_id: node.node_id.clone(),
                    runtime_s,
                    price,
                });
            }
        }
        if choices.is_empty() {
            return Err(SelectError::NoEligibleNode { operator: op.label() });
        }
        choices.sort_by(|a, b| {
            (&a.variant.asset, &a.node_id).cmp(&(&b.variant.asset, &b.node_id))
        });
        choices_per_op.push(choices);
    }

    // Cheapest possible assignment: budget feasibility reference (prices are
    // independent across operators).
    let mut min_price = Money::ZERO;
    for choices in &choices_per_op {
        let cheapest = choices.iter().map(|c| c.price).min().expect("non-empty");
        min_price = min_price
            .checked_add(cheapest)
            .ok_or_else(|| SelectError::PriceOverflow { operator: "total".into() })?;
    }
    if let Some(b) = budget {
        if min_price > b {
            return Err(SelectError::BudgetInfeasible { min_price });
        }
    }

    // Exhaustive search with monotone pruning on runtime and price.
    struct Best {
        runtime_s: f64,
        price: Money,
        picks: Vec<usize>,
    }
    fn descend(
        choices_per_op: &[Vec<Choice>],
        budget: Option<Money>,
        depth: usize,
        runtime_s: f64,
        price: Money,
        picks: &mut Vec<usize>,
        best: &mut Option<Best>,
    ) {
        if let Some(b) = budget {
            if price > b {
                return;
            }
        }
        if let Some(best) = best.as_ref() {
            if runtime_s > best.runtime_s {
                return;
            }
        }
        if depth == choices_per_op.len() {
            let candidate_key = |picks: &[usize]| -> Vec<(AssetId, String)> {
                picks
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let ch = &choices_per_op[i][c];
                        (ch.variant.asset.clone(), ch.node_id.clone())
                    })
                    .collect()
            };
            let replace = match best.as_ref() {
                None => true,
                Some(b) => match runtime_s.total_cmp(&b.runtime_s) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => match price.cmp(&b.price) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => candidate_key(picks) < candidate_key(&b.picks),
                    },
                },
            };
            if replace {
                *best = Some(Best { runtime_s, price, picks: picks.clone() });
            }
            return;
        }
        for (i, choice) in choices_per_op[depth].iter().enumerate() {
            let Some(price2) = price.checked_add(choice.price) else { continue };
            picks.push(i);
            descend(
                choices_per_op,
                budget,
                depth + 1,
                runtime_s + choice.runtime_s,
                price2,
                picks,
                best,
            );
            picks.pop();
        }
    }

    let mut best = None;
    descend(&choices_per_op, budget, 0, 0.0, Money::ZERO, &mut Vec::new(), &mut best);
    let best = best.ok_or(SelectError::BudgetInfeasible { min_price })?;

    let bindings = best
        .picks
        .iter()
        .enumerate()
        .map(|(op_index, &c)| {
            let choice = &choices_per_op[op_index][c];
            OperatorBinding {
                op_index,
                label: ops[op_index].label(),
                variant: choice.variant.clone(),
                node_id: choice.node_id.clone(),
            }
        })
        .collect();
    Ok(ExecutionPlan {
        site: plan.clone(),
        bindings,
        estimated_runtime_s: best.runtime_s,
        estimated_price: best.price,
    })
}

fn input_bytes(op: &SiteNode, est: &Estimator) -> Result<f64, StatsError> {
    match op {
        SiteNode::Scan { .. } => op.bytes(est),
        SiteNode::Join { left, right, .. } => Ok(left.bytes(est)? + right.bytes(est)?),
        SiteNode::Filter { child, .. }
        | SiteNode::Project { child, .. }
        | SiteNode::Aggregate { child, .. }
        | SiteNode::Ship { child, .. } => child.bytes(est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::SigType;
    use crate::region::Region;
    use crate::sql::{parse_program, split_program, TableRegistry};

    fn registry() -> TableRegistry {
        split_program(
            parse_program("REGISTER TABLE t AT EU CARD 1000 ROWBYTES 8 COLS (k INT DISTINCT 10);")
                .unwrap(),
        )
        .unwrap()
        .0
    }

    fn scan_plan() -> SitePlan {
        SitePlan { root: SiteNode::Scan { table: "t".into(), region: Region::EU } }
    }

    pub(crate) fn variant(asset: &str, category: &str, factor: f64, rate_micro: i64) -> ImplementationVariant {
        ImplementationVariant {
            asset: AssetId::new(asset).unwrap(),
            implements: LogicalSignature {
                goal: category.to_string(),
                input_types: vec![SigType::category("rows")],
                output_type: SigType::category("rows"),
            },
            runtime_factor: factor,
            price: PricingModel::PayPerUse {
                rate: Money::from_micro(rate_micro),
                metric: UsageMeter::PerThousandCalls,
            },
            required_certificates: vec![],
        }
    }

    pub(crate) fn free_node(id: &str, region: Region, speed: f64) -> NodeExecutorInfo {
        NodeExecutorInfo {
            node_id: id.into(),
            region,
            capabilities: ["relational".to_string()].into(),
            certificates: vec![],
            price: PricingModel::PayOnce { price: Money::ZERO },
            speed_factor: speed,
        }
    }

    #[test]
    fn single_choice_is_trivially_optimal() {
        let reg = registry();
        let est = Estimator::new(&reg, 0.1);
        let auth = AuthorityRegistry::new();
        let plan = scan_plan();
        let variants = [variant("v1", "scan", 1.0, 0)];
        let nodes = [free_node("n1", Region::EU, 2.0)];
        let ep = select_variants(&plan, &variants, &nodes, None, &est, &auth, 0).unwrap();
        assert_eq!(ep.bindings.len(), 1);
        assert_eq!(ep.bindings[0].node_id, "n1");
        assert_eq!(ep.estimated_runtime_s, 500.0);
        assert_eq!(ep.estimated_price, Money::ZERO);
    }

    #[test]
    fn budget_flips_the_chosen_equivalent() {
        // Slow-and-cheap vs fast-and-pricey implementations of the same
        // category: a tight budget keeps the cheap one, a loose budget buys
        // the fast one.
        let reg = registry();
        let est = Estimator::new(&reg, 0.1);
        let auth = AuthorityRegistry::new();
        let plan = scan_plan();
        let variants = [
            variant("linreg", "scan", 4.0, 1_000),   // $0.001 per 1000 rows
            variant("neural", "scan", 1.0, 100_000), // $0.1 per 1000 rows
        ];
        let nodes = [free_node("n1", Region::EU, 1.0)];

        let tight = select_variants(
            &plan, &variants, &nodes, Some(Money::from_micro(10_000)), &est, &auth, 0,
        )
        .unwrap();
        assert_eq!(tight.bindings[0].variant.asset.as_str(), "linreg");
        assert_eq!(tight.estimated_runtime_s, 4000.0);

        let loose = select_variants(
            &plan, &variants, &nodes, Some(Money::from_micro(200_000)), &est, &auth, 0,
        )
        .unwrap();
        assert_eq!(loose.bindings[0].variant.asset.as_str(), "neural");
        assert_eq!(loose.estimated_runtime_s, 1000.0);
    }

    #[test]
    fn infeasible_budget_reports_the_true_minimum() {
        let reg = registry();
        let est = Estimator::new(&reg, 0.1);
        let auth = AuthorityRegistry::new();
        let plan = scan_plan();
        let variants = [variant("v1", "scan", 1.0, 5_000)];
        let nodes = [free_node("n1", Region::EU, 1.0)];
        let err =
            select_variants(&plan, &variants, &nodes, Some(Money::from_micro(1)), &est, &auth, 0)
                .unwrap_err();
        match err {
            SelectError::BudgetInfeasible { min_price } => {
                assert_eq!(min_price, Money::from_micro(5_000));
            }
            other => panic!("expected budget infeasible, got {other}"),
        }
    }

    #[test]
    fn wrong_region_nodes_are_ineligible() {
        let reg = registry();
        let est = Estimator::new(&reg, 0.1);
        let auth = AuthorityRegistry::new();
        let plan = scan_plan();
        let variants = [variant("v1", "scan", 1.0, 0)];
        let nodes = [free_node("n1", Region::NA, 1.0)];
        let err = select_variants(&plan, &variants, &nodes, None, &est, &auth, 0).unwrap_err();
        assert!(matches!(err, SelectError::NoEligibleNode { .. }));
    }

    #[test]
    fn certificate_requirements_gate_placement() {
        let reg = registry();
        let est = Estimator::new(&reg, 0.1);
        let mut auth = AuthorityRegistry::new();
        auth.register("eu-authority", "key");
        let plan = scan_plan();
        let mut v = variant("v1", "scan", 1.0, 0);
        v.required_certificates.push(CertRequirement {
            property: "tee".into(),
            trusted_authorities: ["eu-authority".to_string()].into(),
        });
        let mut plain = free_node("plain", Region::EU, 1.0);
        plain.node_id = "plain".into();
        let mut tee = free_node("tee-node", Region::EU, 1.0);
        tee.certificates.push(auth.issue("eu-authority", "tee", "tee-node", 1_000).unwrap());

        let ep = select_variants(
            &plan,
            std::slice::from_ref(&v),
            &[plain.clone(), tee.clone()],
            None,
            &est,
            &auth,
            0,
        )
        .unwrap();
        assert_eq!(ep.bindings[0].node_id, "tee-node");

        let err = select_variants(&plan, &[v], &[plain], None, &est, &auth, 0).unwrap_err();
        assert!(matches!(err, SelectError::NoEligibleNode { .. }));
    }
}
