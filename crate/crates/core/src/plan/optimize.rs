//! Compliant plan search: dynamic programming over (table subset, region)
//! keys, exploring all bushy join orders without cross products and every
//! per-operator region assignment over the regions the query touches.
//!
//! The search space is:
//! - scans (with their filters) run at their table's home region;
//! - each join runs at any region of the universe (table homes plus the
//!   delivery target), children shipped in directly when they live
//!   elsewhere, and only splits connected by an equi-join predicate are
//!   considered;
//! - a projection root runs where the join root ran; an aggregate root may
//!   run at any region (shipping the raw join result there first);
//! - a delivery ship moves the final result to the target region.
//!
//! Every inserted ship must be lineage-legal under the session policies;
//! ships never change data, so a partial plan's future legality depends only
//! on its table subset, which makes cheapest-per-(subset, region) pruning
//! sound. Ties break by fewer ships, then by the rendered plan text.

use super::check::{check_plan, ship_violates};
use super::cost::CostModel;
use super::site::{LineageTag, SiteNode, SitePlan};
use super::stats::{pred_key, StatsError, SubtreeContent};
use crate::policy::CompliancePolicy;
use crate::region::Region;
use crate::sql::{LogicalNode, LogicalPlan, OutItem, ResolvedCol, ResolvedFilter, TableRegistry};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const MAX_TABLES: usize = 12;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("enumeration limit exceeded: {0} tables (at most {MAX_TABLES})")]
    EnumerationLimitExceeded(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("plan shape not canonical: {0}")]
    Shape(String),
}

#[derive(Debug, Clone)]
pub struct BestPlan {
    pub plan: SitePlan,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub enum Optimized {
    Best(BestPlan),
    NoCompliantPlan,
}

impl Optimized {
    pub fn best(self) -> Option<BestPlan> {
        match self {
            Optimized::Best(b) => Some(b),
            Optimized::NoCompliantPlan => None,
        }
    }
}

/// The pieces of a canonical logical plan the search recombines.
#[derive(Debug, Clone)]
pub struct QueryShape {
    pub tables: Vec<ShapeTable>,
    pub preds: Vec<ShapePred>,
    pub root: RootKind,
}

#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub name: String,
    pub region: Region,
    pub filters: Vec<ResolvedFilter>,
}

#[derive(Debug, Clone)]
pub struct ShapePred {
    pub left_table: usize,
    pub right_table: usize,
    pub left: ResolvedCol,
    pub right: ResolvedCol,
}

#[derive(Debug, Clone)]
pub enum RootKind {
    Project(Vec<ResolvedCol>),
    Aggregate { group: Vec<ResolvedCol>, items: Vec<OutItem> },
}

/// Decomposes the canonical logical tree (root, joins, filter chains over
/// scans) for recombination.
pub fn extract_shape(lp: &LogicalPlan, registry: &TableRegistry) -> Result<QueryShape, OptimizeError> {
    let (root, join_tree) = match &lp.root {
        LogicalNode::Project { cols, child } => (RootKind::Project(cols.clone()), child.as_ref()),
        LogicalNode::Aggregate { group, items, child } => {
            (RootKind::Aggregate { group: group.clone(), items: items.clone() }, child.as_ref())
        }
        other => {
            return Err(OptimizeError::Shape(format!(
                "expected a projection or aggregate root, found {other:?}"
            )))
        }
    };
    let mut tables = Vec::new();
    let mut raw_preds = Vec::new();
    collect_join_tree(join_tree, registry, &mut tables, &mut raw_preds)?;
    let index_of = |name: &str| -> Result<usize, OptimizeError> {
        tables
            .iter()
            .position(|t: &ShapeTable| t.name == name)
            .ok_or_else(|| OptimizeError::Shape(format!("predicate references `{name}`")))
    };
    let mut preds = Vec::new();
    for (l, r) in raw_preds {
        preds.push(ShapePred {
            left_table: index_of(&l.table)?,
            right_table: index_of(&r.table)?,
            left: l,
            right: r,
        });
    }
    Ok(QueryShape { tables, preds, root })
}

fn collect_join_tree(
    node: &LogicalNode,
    registry: &TableRegistry,
    tables: &mut Vec<ShapeTable>,
    preds: &mut Vec<(ResolvedCol, ResolvedCol)>,
) -> Result<(), OptimizeError> {
    match node {
        LogicalNode::Join { preds: p, left, right } => {
            collect_join_tree(left, registry, tables, preds)?;
            collect_join_tree(right, registry, tables, preds)?;
            preds.extend(p.iter().cloned());
            Ok(())
        }
        LogicalNode::Filter { .. } | LogicalNode::Scan { .. } => {
            let mut filters = Vec::new();
            let mut cur = node;
            while let LogicalNode::Filter { pred, child } = cur {
                filters.push(pred.clone());
                cur = child;
            }
            // Filters were collected top-down; store them bottom-up (source
            // order) like the chain applies them.
            filters.reverse();
            let LogicalNode::Scan { table } = cur else {
                return Err(OptimizeError::Shape("filter chain does not end in a scan".into()));
            };
            let def = registry
                .get(table)
                .ok_or_else(|| StatsError::MissingStats(table.clone()))?;
            tables.push(ShapeTable { name: table.clone(), region: def.region, filters });
            Ok(())
        }
        other => Err(OptimizeError::Shape(format!("unexpected node under joins: {other:?}"))),
    }
}

#[derive(Clone)]
struct Entry {
    node: SiteNode,
    cost: f64,
    ships: usize,
}

fn better(a: &Entry, b: &Entry) -> bool {
    match a.cost.total_cmp(&b.cost) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => match a.ships.cmp(&b.ships) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                SitePlan { root: a.node.clone() }.render(None)
                    < SitePlan { root: b.node.clone() }.render(None)
            }
        },
    }
}

fn consider(slot: &mut Option<Entry>, candidate: Entry) {
    match slot {
        Some(existing) if !better(&candidate, existing) => {}
        _ => *slot = Some(candidate),
    }
}

struct Search<'a> {
    shape: &'a QueryShape,
    policies: &'a [CompliancePolicy],
    cm: &'a CostModel,
    regions: Vec<Region>,
    rows_mask: Vec<f64>,
    width_mask: Vec<u64>,
}

impl<'a> Search<'a> {
    fn content_of(&self, mask: u32) -> SubtreeContent {
        let mut content = SubtreeContent::default();
        for (i, t) in self.shape.tables.iter().enumerate() {
            if mask & (1 << i) != 0 {
                content.tables.insert(t.name.clone(), t.filters.clone());
            }
        }
        for p in &self.shape.preds {
            if mask & (1 << p.left_table) != 0 && mask & (1 << p.right_table) != 0 {
                content.preds.push((p.left.clone(), p.right.clone()));
            }
        }
        content
    }

    fn lineage_of(&self, mask: u32, aggregated: bool) -> BTreeSet<LineageTag> {
        self.shape
            .tables
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| LineageTag {
                source_table: t.name.clone(),
                origin_region: t.region,
                aggregated,
            })
            .collect()
    }

    fn ship_ok(&self, from: Region, to: Region, lineage: &BTreeSet<LineageTag>) -> bool {
        !self.policies.iter().any(|p| ship_violates(from, to, lineage, p))
    }

    /// Wraps `entry` (rooted at `at`) in a direct ship to `to` when needed,
    /// charging bytes·rate exactly like the cost walker does.
    fn shipped(&self, entry: &Entry, at: Region, to: Region, mask: u32) -> Option<Entry> {
        if at == to {
            return Some(entry.clone());
        }
        if !self.ship_ok(at, to, &self.lineage_of(mask, false)) {
            return None;
        }
        let bytes = self.rows_mask[mask as usize] * self.width_mask[mask as usize] as f64;
        Some(Entry {
            node: SiteNode::Ship { from: at, to, child: Box::new(entry.node.clone()) },
            cost: entry.cost + bytes * self.cm.ship.rate(at, to),
            ships: entry.ships + 1,
        })
    }

    fn crossing_preds(&self, left: u32, right: u32) -> Vec<(ResolvedCol, ResolvedCol)> {
        let mut preds: Vec<(String, (ResolvedCol, ResolvedCol))> = self
            .shape
            .preds
            .iter()
            .filter(|p| {
                let (lb, rb) = (1u32 << p.left_table, 1u32 << p.right_table);
                (left & lb != 0 && right & rb != 0) || (left & rb != 0 && right & lb != 0)
            })
            .map(|p| (pred_key(&p.left, &p.right), (p.left.clone(), p.right.clone())))
            .collect();
        preds.sort_by(|a, b| a.0.cmp(&b.0));
        preds.into_iter().map(|(_, p)| p).collect()
    }
}

/// Runs the search. Returns the minimum-cost compliant plan, or
/// `NoCompliantPlan` when the space holds none.
pub fn optimize(
    lp: &LogicalPlan,
    policies: &[CompliancePolicy],
    cm: &CostModel,
    registry: &TableRegistry,
    target: Option<Region>,
) -> Result<Optimized, OptimizeError> {
    let shape = extract_shape(lp, registry)?;
    optimize_shape(&shape, policies, cm, registry, target)
}

pub fn optimize_shape(
    shape: &QueryShape,
    policies: &[CompliancePolicy],
    cm: &CostModel,
    registry: &TableRegistry,
    target: Option<Region>,
) -> Result<Optimized, OptimizeError> {
    let n = shape.tables.len();
    if n == 0 {
        return Err(OptimizeError::Shape("query has no tables".into()));
    }
    if n > MAX_TABLES {
        return Err(OptimizeError::EnumerationLimitExceeded(n));
    }

    let mut region_set: BTreeSet<Region> = shape.tables.iter().map(|t| t.region).collect();
    if let Some(t) = target {
        region_set.insert(t);
    }
    let est = cm.estimator(registry);

    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut search = Search {
        shape,
        policies,
        cm,
        regions: region_set.into_iter().collect(),
        rows_mask: vec![0.0; (full as usize) + 1],
        width_mask: vec![0; (full as usize) + 1],
    };
    for mask in 1..=full {
        let content = search.content_of(mask);
        search.rows_mask[mask as usize] = est.content_rows(&content)?;
        search.width_mask[mask as usize] = est.content_width(&content, None)?;
    }

    // Base: filter chains over scans, at the table's home region.
    let mut memo: Vec<BTreeMap<Region, Entry>> = vec![BTreeMap::new(); (full as usize) + 1];
    for (i, t) in shape.tables.iter().enumerate() {
        let mut node = SiteNode::Scan { table: t.name.clone(), region: t.region };
        let mut cost = node.rows_in(&est)? * cm.cpu_cost_per_row;
        for f in &t.filters {
            let child_rows = node.rows(&est)?;
            node = SiteNode::Filter { pred: f.clone(), region: t.region, child: Box::new(node) };
            cost += child_rows * cm.cpu_cost_per_row;
        }
        memo[1 << i].insert(t.region, Entry { node, cost, ships: 0 });
    }

    // Combine subsets bottom-up.
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let mut best_here: BTreeMap<Region, Option<Entry>> =
            search.regions.iter().map(|r| (*r, None)).collect();
        let mut left = (mask - 1) & mask;
        while left > 0 {
            let right = mask ^ left;
            let preds = search.crossing_preds(left, right);
            if !preds.is_empty() {
                let rows_in = search.rows_mask[left as usize] + search.rows_mask[right as usize];
                for &r in &search.regions {
                    for (lr, le) in &memo[left as usize] {
                        let Some(lc) = search.shipped(le, *lr, r, left) else { continue };
                        for (rr, re) in &memo[right as usize] {
                            let Some(rc) = search.shipped(re, *rr, r, right) else { continue };
                            let cost = lc.cost + rc.cost + rows_in * cm.cpu_cost_per_row;
                            let entry = Entry {
                                node: SiteNode::Join {
                                    preds: preds.clone(),
                                    region: r,
                                    left: Box::new(lc.node.clone()),
                                    right: Box::new(rc.node),
                                },
                                cost,
                                ships: lc.ships + rc.ships,
                            };
                            consider(best_here.get_mut(&r).expect("region slot"), entry);
                        }
                    }
                }
            }
            left = (left - 1) & mask;
        }
        memo[mask as usize] =
            best_here.into_iter().filter_map(|(r, e)| e.map(|e| (r, e))).collect();
    }

    // Root operator, then delivery.
    let rows_full = search.rows_mask[full as usize];
    let mut best: Option<Entry> = None;
    let full_entries: Vec<(Region, Entry)> =
        memo[full as usize].iter().map(|(r, e)| (*r, e.clone())).collect();
    for (r_join, entry) in &full_entries {
        match &shape.root {
            RootKind::Project(cols) => {
                let node = SiteNode::Project {
                    cols: cols.clone(),
                    region: *r_join,
                    child: Box::new(entry.node.clone()),
                };
                let rooted = Entry {
                    node,
                    cost: entry.cost + rows_full * cm.cpu_cost_per_row,
                    ships: entry.ships,
                };
                let width_out = est.content_width(&search.content_of(full), Some(cols))?;
                finalize_delivery(
                    &search, &mut best, rooted, *r_join, rows_full, width_out, false, target,
                )?;
            }
            RootKind::Aggregate { group, items } => {
                for &r_agg in &search.regions {
                    let Some(moved) = search.shipped(entry, *r_join, r_agg, full) else {
                        continue;
                    };
                    let node = SiteNode::Aggregate {
                        group: group.clone(),
                        items: items.clone(),
                        region: r_agg,
                        child: Box::new(moved.node.clone()),
                    };
                    let rooted = Entry {
                        node,
                        cost: moved.cost + rows_full * cm.cpu_cost_per_row,
                        ships: moved.ships,
                    };
                    let mut content = search.content_of(full);
                    let n_aggs = items.iter().filter(|i| matches!(i, OutItem::Agg(_))).count();
                    content.agg = Some((group.clone(), n_aggs));
                    let rows_out = est.content_rows(&content)?;
                    let width_out = est.content_width(&content, None)?;
                    finalize_delivery(
                        &search, &mut best, rooted, r_agg, rows_out, width_out, true, target,
                    )?;
                }
            }
        }
    }

    match best {
        Some(entry) => {
            let plan = SitePlan { root: entry.node };
            debug_assert!(plan.validate().is_ok(), "optimizer built an ill-formed plan");
            debug_assert!(
                check_plan(&plan, policies).is_compliant(),
                "optimizer returned a non-compliant plan"
            );
            Ok(Optimized::Best(BestPlan { plan, cost: entry.cost }))
        }
        None => Ok(Optimized::NoCompliantPlan),
    }
}

#[allow(clippy::too_many_arguments)]
fn finalize_delivery(
    search: &Search,
    best: &mut Option<Entry>,
    rooted: Entry,
    at: Region,
    rows_out: f64,
    width_out: u64,
    aggregated: bool,
    target: Option<Region>,
) -> Result<(), OptimizeError> {
    let candidate = match target {
        Some(t) if t != at => {
            let full_mask = (1u32 << search.shape.tables.len()) - 1;
            if !search.ship_ok(at, t, &search.lineage_of(full_mask, aggregated)) {
                return Ok(());
            }
            let bytes = rows_out * width_out as f64;
            Entry {
                node: SiteNode::Ship { from: at, to: t, child: Box::new(rooted.node) },
                cost: rooted.cost + bytes * search.cm.ship.rate(at, t),
                ships: rooted.ships + 1,
            }
        }
        _ => rooted,
    };
    consider_opt(best, candidate);
    Ok(())
}

fn consider_opt(slot: &mut Option<Entry>, candidate: Entry) {
    match slot {
        Some(existing) if !better(&candidate, existing) => {}
        _ => *slot = Some(candidate),
    }
}
