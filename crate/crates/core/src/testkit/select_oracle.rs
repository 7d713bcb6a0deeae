//! Plain-product oracle for variant/node selection: every assignment is
//! enumerated with index counters and scored, no pruning anywhere.

use crate::asset::AssetId;
use crate::exec::{
    operator_category, operators, usage_price, verify_certificates, AuthorityRegistry,
    ImplementationVariant, NodeExecutorInfo,
};
use crate::money::Money;
use crate::plan::{Estimator, SiteNode, SitePlan};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSelection {
    Best { runtime_s: f64, price: Money, picks: Vec<(AssetId, String)> },
    BudgetInfeasible { min_price: Money },
    NoEligible { operator: String },
}

fn input_bytes(op: &SiteNode, est: &Estimator) -> f64 {
    match op {
        SiteNode::Scan { .. } => op.bytes(est).expect("stats registered"),
        SiteNode::Join { left, right, .. } => {
            left.bytes(est).expect("stats") + right.bytes(est).expect("stats")
        }
        SiteNode::Filter { child, .. }
        | SiteNode::Project { child, .. }
        | SiteNode::Aggregate { child, .. }
        | SiteNode::Ship { child, .. } => child.bytes(est).expect("stats"),
    }
}

pub fn enumerate_selection(
    plan: &SitePlan,
    variants: &[ImplementationVariant],
    nodes: &[NodeExecutorInfo],
    budget: Option<Money>,
    est: &Estimator,
    authorities: &AuthorityRegistry,
    now: u64,
) -> OracleSelection {
    let ops = operators(plan);
    let mut table: Vec<Vec<(f64, Money, (AssetId, String))>> = Vec::new();
    for op in &ops {
        let rows_in = op.rows_in(est).expect("stats registered");
        let bytes_in = input_bytes(op, est);
        let mut options = Vec::new();
        for v in variants {
            if v.implements.goal != operator_category(op) {
                continue;
            }
            for n in nodes {
                if n.region != op.region() || !n.capabilities.contains("relational") {
                    continue;
                }
                if !verify_certificates(n, &v.required_certificates, now, authorities)
                    .expect("authorities registered")
                {
                    continue;
                }
                let runtime = rows_in * v.runtime_factor / n.speed_factor;
                let price = usage_price(&v.price, rows_in, bytes_in, runtime)
                    .zip(usage_price(&n.price, rows_in, bytes_in, runtime))
                    .and_then(|(a, b)| a.checked_add(b))
                    .expect("oracle instances avoid overflow");
                options.push((runtime, price, (v.asset.clone(), n.node_id.clone())));
            }
        }
        if options.is_empty() {
            return OracleSelection::NoEligible { operator: op.label() };
        }
        options.sort_by(|a, b| a.2.cmp(&b.2));
        table.push(options);
    }

    let mut best: Option<(f64, Money, Vec<(AssetId, String)>)> = None;
    let mut cheapest: Option<Money> = None;
    let mut counter = vec![0usize; table.len()];
    loop {
        let mut runtime = 0.0f64;
        let mut price = Money::ZERO;
        let mut picks = Vec::with_capacity(table.len());
        for (op, &c) in counter.iter().enumerate() {
            let (r, p, key) = &table[op][c];
            runtime += *r;
            price = price.checked_add(*p).expect("no overflow");
            picks.push(key.clone());
        }
        cheapest = Some(match cheapest {
            None => price,
            Some(c) if price < c => price,
            Some(c) => c,
        });
        if budget.is_none_or(|b| price <= b) {
            let replace = match &best {
                None => true,
                Some((br, bp, bk)) => match runtime.total_cmp(br) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => match price.cmp(bp) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => picks < *bk,
                    },
                },
            };
            if replace {
                best = Some((runtime, price, picks));
            }
        }
        // Advance the counter.
        let mut i = 0;
        loop {
            if i == counter.len() {
                break;
            }
            counter[i] += 1;
            if counter[i] < table[i].len() {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        if i == counter.len() {
            break;
        }
    }

    match best {
        Some((runtime_s, price, picks)) => OracleSelection::Best { runtime_s, price, picks },
        None => OracleSelection::BudgetInfeasible { min_price: cheapest.expect("options exist") },
    }
}
