//! Revenue share trees and exact payment splitting.
//!
//! Shares are exact rationals. Splitting materializes micro-unit amounts with
//! largest-remainder apportionment inside every sibling group, so the sum of
//! all payouts equals the gross amount with integer equality.

use crate::money::Money;
use num_rational::Ratio;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

pub type Share = Ratio<i128>;

pub const MAX_SHARE_DEPTH: usize = 8;

/// One node of a revenue share tree. Leaves receive money; internal nodes
/// pass their whole amount on to their children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevenueShareTree {
    pub beneficiary: String,
    /// Fraction of the parent amount routed through this node.
    pub share: Share,
    #[serde(default)]
    pub children: Vec<RevenueShareTree>,
}

impl RevenueShareTree {
    pub fn leaf(beneficiary: impl Into<String>, share: Share) -> Self {
        RevenueShareTree { beneficiary: beneficiary.into(), share, children: Vec::new() }
    }

    pub fn node(
        beneficiary: impl Into<String>,
        share: Share,
        children: Vec<RevenueShareTree>,
    ) -> Self {
        RevenueShareTree { beneficiary: beneficiary.into(), share, children }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Checks the structural rules: the root routes the full amount, every
    /// sibling group sums to exactly one, shares lie in [0, 1], and the tree
    /// is at most [`MAX_SHARE_DEPTH`] deep. Returns human-readable rule
    /// violations.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.share.is_one() {
            out.push(format!("root share {} ≠ 1", self.share));
        }
        if self.depth() > MAX_SHARE_DEPTH {
            out.push(format!("depth {} exceeds {MAX_SHARE_DEPTH}", self.depth()));
        }
        self.check_inner(&mut out);
        out
    }

    fn check_inner(&self, out: &mut Vec<String>) {
        if self.share.is_negative() || self.share > Share::one() {
            out.push(format!("share {} outside [0, 1] at `{}`", self.share, self.beneficiary));
        }
        if !self.children.is_empty() {
            let sum: Share = self.children.iter().map(|c| c.share).sum();
            if !sum.is_one() {
                out.push(format!("shares sum {sum} ≠ 1"));
            }
        }
        for c in &self.children {
            c.check_inner(out);
        }
    }
}

/// Splits `total` micro-units by `shares` (largest remainder, ties to the
/// earliest sibling). The returned amounts always sum to `total`.
pub fn apportion(total: i64, shares: &[Share]) -> Vec<i64> {
    let mut floors = Vec::with_capacity(shares.len());
    let mut remainders = Vec::with_capacity(shares.len());
    let mut assigned: i128 = 0;
    for share in shares {
        let exact = Share::from_integer(i128::from(total)) * share;
        let floor = exact.floor().to_integer();
        assigned += floor;
        remainders.push(exact - Ratio::from_integer(floor));
        floors.push(floor);
    }
    let mut leftover = i128::from(total) - assigned;
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for idx in order {
        if leftover <= 0 {
            break;
        }
        floors[idx] += 1;
        leftover -= 1;
    }
    floors.iter().map(|&v| v as i64).collect()
}

/// Distributes `gross` through the tree, returning one payout per leaf in
/// depth-first order. The payouts conserve `gross` exactly.
pub fn split_payment(gross: Money, tree: &RevenueShareTree) -> Vec<(String, Money)> {
    let mut out = Vec::new();
    distribute(gross.micro_units, tree, &mut out);
    out
}

fn distribute(amount: i64, node: &RevenueShareTree, out: &mut Vec<(String, Money)>) {
    if node.children.is_empty() {
        out.push((node.beneficiary.clone(), Money::from_micro(amount)));
        return;
    }
    let shares: Vec<Share> = node.children.iter().map(|c| c.share).collect();
    let parts = apportion(amount, &shares);
    for (child, part) in node.children.iter().zip(parts) {
        distribute(part, child, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Share {
        Share::new(n, d)
    }

    #[test]
    fn manager_and_pipeline_split() {
        // $1.00 gross: manager 40%, pipeline 60% split evenly between two assets.
        let tree = RevenueShareTree::node(
            "gross",
            Share::one(),
            vec![
                RevenueShareTree::leaf("manager", r(2, 5)),
                RevenueShareTree::node(
                    "pipeline",
                    r(3, 5),
                    vec![
                        RevenueShareTree::leaf("asset-a", r(1, 2)),
                        RevenueShareTree::leaf("asset-b", r(1, 2)),
                    ],
                ),
            ],
        );
        assert!(tree.check().is_empty());
        let parts = split_payment(Money::from_units(1), &tree);
        assert_eq!(
            parts,
            vec![
                ("manager".to_string(), Money::from_micro(400_000)),
                ("asset-a".to_string(), Money::from_micro(300_000)),
                ("asset-b".to_string(), Money::from_micro(300_000)),
            ]
        );
    }

    #[test]
    fn one_micro_unit_goes_to_first_third() {
        let tree = RevenueShareTree::node(
            "gross",
            Share::one(),
            vec![
                RevenueShareTree::leaf("a", r(1, 3)),
                RevenueShareTree::leaf("b", r(1, 3)),
                RevenueShareTree::leaf("c", r(1, 3)),
            ],
        );
        let parts = split_payment(Money::from_micro(1), &tree);
        let amounts: Vec<i64> = parts.iter().map(|(_, m)| m.micro_units).collect();
        assert_eq!(amounts, vec![1, 0, 0]);
    }

    #[test]
    fn bad_sums_are_reported() {
        let tree = RevenueShareTree::node(
            "gross",
            Share::one(),
            vec![RevenueShareTree::leaf("a", r(1, 2)), RevenueShareTree::leaf("b", r(1, 3))],
        );
        let problems = tree.check();
        assert_eq!(problems, vec!["shares sum 5/6 ≠ 1".to_string()]);
    }

    #[test]
    fn depth_limit_enforced() {
        let mut tree = RevenueShareTree::leaf("leaf", Share::one());
        for i in 0..9 {
            tree = RevenueShareTree::node(format!("n{i}"), Share::one(), vec![tree]);
        }
        assert!(tree.check().iter().any(|v| v.contains("depth")));
    }

    #[test]
    fn apportion_conserves() {
        let shares = [r(1, 7), r(2, 7), r(4, 7)];
        for total in [0i64, 1, 6, 7, 1_000_001, 999_999_999] {
            let parts = apportion(total, &shares);
            assert_eq!(parts.iter().sum::<i64>(), total);
        }
    }
}
