//! Brute-force plan oracle: exhaustively enumerates the optimizer's search
//! space (bushy connected join trees × per-join regions × aggregate region ×
//! delivery), judging compliance and cost with its own walkers rather than
//! the planner's.

use crate::plan::{CostModel, QueryShape, RootKind, SiteNode, SitePlan};
use crate::policy::CompliancePolicy;
use crate::region::Region;
use crate::sql::{CmpOp, OutItem, ResolvedCol, TableRegistry};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

fn submask_tables(mask: u32, shape: &QueryShape) -> Vec<usize> {
    (0..shape.tables.len()).filter(|i| mask & (1 << i) != 0).collect()
}

fn crossing(shape: &QueryShape, a: u32, b: u32) -> Vec<(ResolvedCol, ResolvedCol)> {
    let mut preds: Vec<(String, (ResolvedCol, ResolvedCol))> = shape
        .preds
        .iter()
        .filter(|p| {
            let (lb, rb) = (1u32 << p.left_table, 1u32 << p.right_table);
            (a & lb != 0 && b & rb != 0) || (a & rb != 0 && b & lb != 0)
        })
        .map(|p| (crate::plan::pred_key(&p.left, &p.right), (p.left.clone(), p.right.clone())))
        .collect();
    preds.sort_by(|x, y| x.0.cmp(&y.0));
    preds.into_iter().map(|(_, p)| p).collect()
}

fn all_trees(mask: u32, shape: &QueryShape) -> Vec<Tree> {
    let tables = submask_tables(mask, shape);
    if tables.len() == 1 {
        return vec![Tree::Leaf(tables[0])];
    }
    let mut out = Vec::new();
    let mut left = (mask - 1) & mask;
    while left > 0 {
        let right = mask ^ left;
        if right != 0 && !crossing(shape, left, right).is_empty() {
            for lt in all_trees(left, shape) {
                for rt in all_trees(right, shape) {
                    out.push(Tree::Node(Box::new(lt.clone()), Box::new(rt)));
                }
            }
        }
        left = (left - 1) & mask;
    }
    out
}

fn count_joins(tree: &Tree) -> usize {
    match tree {
        Tree::Leaf(_) => 0,
        Tree::Node(l, r) => 1 + count_joins(l) + count_joins(r),
    }
}

fn tree_mask(tree: &Tree) -> u32 {
    match tree {
        Tree::Leaf(i) => 1 << i,
        Tree::Node(l, r) => tree_mask(l) | tree_mask(r),
    }
}

/// Builds the site plan for a join-region assignment (one region per join,
/// in preorder); children are shipped in when they live elsewhere.
fn build(tree: &Tree, shape: &QueryShape, joins: &[Region], cursor: &mut usize) -> SiteNode {
    match tree {
        Tree::Leaf(i) => {
            let t = &shape.tables[*i];
            let mut node = SiteNode::Scan { table: t.name.clone(), region: t.region };
            for f in &t.filters {
                node = SiteNode::Filter { pred: f.clone(), region: t.region, child: Box::new(node) };
            }
            node
        }
        Tree::Node(l, r) => {
            let region = joins[*cursor];
            *cursor += 1;
            let preds = crossing(shape, tree_mask(l), tree_mask(r));
            let left = shipped_to(build(l, shape, joins, cursor), region);
            let right = shipped_to(build(r, shape, joins, cursor), region);
            SiteNode::Join { preds, region, left: Box::new(left), right: Box::new(right) }
        }
    }
}

fn shipped_to(node: SiteNode, region: Region) -> SiteNode {
    if node.region() == region {
        node
    } else {
        SiteNode::Ship { from: node.region(), to: region, child: Box::new(node) }
    }
}

// ---------------------------------------------------------------------------
// Independent compliance walker
// ---------------------------------------------------------------------------

fn oracle_lineage(node: &SiteNode) -> Vec<(String, Region, bool)> {
    match node {
        SiteNode::Scan { table, region } => vec![(table.clone(), *region, false)],
        SiteNode::Filter { child, .. }
        | SiteNode::Project { child, .. }
        | SiteNode::Ship { child, .. } => oracle_lineage(child),
        SiteNode::Join { left, right, .. } => {
            let mut tags = oracle_lineage(left);
            tags.extend(oracle_lineage(right));
            tags
        }
        SiteNode::Aggregate { child, .. } => oracle_lineage(child)
            .into_iter()
            .map(|(t, r, _)| (t, r, true))
            .collect(),
    }
}

/// Re-derives every ship's legality from scratch.
pub fn oracle_compliant(plan: &SitePlan, policies: &[CompliancePolicy]) -> bool {
    fn walk(node: &SiteNode, policies: &[CompliancePolicy]) -> bool {
        if let SiteNode::Ship { from, to, child } = node {
            let lineage = oracle_lineage(child);
            for p in policies {
                let hit = match p {
                    CompliancePolicy::DenyShip { from: f, to: t } => {
                        from == f
                            && (t.is_none() || *t == Some(*to))
                            && lineage.iter().any(|(_, r, agg)| r == f && !agg)
                    }
                    CompliancePolicy::AggregatedOnly { from: f } => {
                        from == f && lineage.iter().any(|(_, r, agg)| r == f && !agg)
                    }
                };
                if hit {
                    return false;
                }
            }
        }
        node.children().iter().all(|c| walk(c, policies))
    }
    walk(&plan.root, policies)
}

// ---------------------------------------------------------------------------
// Independent cost walker (same canonical fold order, separate code)
// ---------------------------------------------------------------------------

struct Content {
    tables: Vec<(String, Vec<String>, Vec<f64>)>, // name, filter keys, selectivities
    pred_factors: Vec<(String, f64)>,
    agg: Option<(Vec<ResolvedCol>, usize)>,
    project: Option<Vec<ResolvedCol>>,
}

fn oracle_distinct(registry: &TableRegistry, col: &ResolvedCol) -> f64 {
    let def = &registry[&col.table];
    let d = def
        .column(&col.column)
        .and_then(|(_, c)| c.distinct)
        .unwrap_or(def.row_count)
        .max(1);
    d as f64
}

fn oracle_col_width(registry: &TableRegistry, col: &ResolvedCol) -> u64 {
    let def = &registry[&col.table];
    let (idx, _) = def.column(&col.column).expect("column registered");
    let n = def.columns.len() as u64;
    def.row_bytes / n + u64::from((idx as u64) < def.row_bytes % n)
}

fn oracle_content(node: &SiteNode, registry: &TableRegistry, cm: &CostModel) -> Content {
    fn collect(
        node: &SiteNode,
        registry: &TableRegistry,
        cm: &CostModel,
        tables: &mut Vec<(String, Vec<String>, Vec<f64>)>,
        preds: &mut Vec<(String, f64)>,
        agg: &mut Option<(Vec<ResolvedCol>, usize)>,
    ) {
        match node {
            SiteNode::Scan { table, .. } => {
                if !tables.iter().any(|(t, _, _)| t == table) {
                    tables.push((table.clone(), Vec::new(), Vec::new()));
                }
            }
            SiteNode::Filter { pred, child, .. } => {
                collect(child, registry, cm, tables, preds, agg);
                let sel = if pred.op == CmpOp::Eq {
                    1.0 / oracle_distinct(registry, &pred.col)
                } else {
                    cm.filter_selectivity_default
                };
                let entry = tables
                    .iter_mut()
                    .find(|(t, _, _)| *t == pred.col.table)
                    .expect("filter table scanned");
                entry.1.push(pred.to_string());
                entry.2.push(sel);
            }
            SiteNode::Project { child, .. } | SiteNode::Ship { child, .. } => {
                collect(child, registry, cm, tables, preds, agg)
            }
            SiteNode::Join { preds: p, left, right, .. } => {
                collect(left, registry, cm, tables, preds, agg);
                collect(right, registry, cm, tables, preds, agg);
                for (l, r) in p {
                    let d = oracle_distinct(registry, l).max(oracle_distinct(registry, r));
                    preds.push((crate::plan::pred_key(l, r), d));
                }
            }
            SiteNode::Aggregate { group, items, child, .. } => {
                collect(child, registry, cm, tables, preds, agg);
                let n_aggs = items.iter().filter(|i| matches!(i, OutItem::Agg(_))).count();
                *agg = Some((group.clone(), n_aggs));
            }
        }
    }
    let mut tables = Vec::new();
    let mut preds = Vec::new();
    let mut agg = None;
    collect(node, registry, cm, &mut tables, &mut preds, &mut agg);
    let project = match node {
        SiteNode::Project { cols, .. } => Some(cols.clone()),
        SiteNode::Ship { child, .. } => match child.as_ref() {
            SiteNode::Project { cols, .. } => Some(cols.clone()),
            _ => None,
        },
        _ => None,
    };
    Content { tables, pred_factors: preds, agg, project }
}

fn oracle_rows(node: &SiteNode, registry: &TableRegistry, cm: &CostModel) -> f64 {
    let mut content = oracle_content(node, registry, cm);
    content.tables.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rows = 1.0f64;
    for (name, keys, sels) in &content.tables {
        let mut keyed: Vec<(&String, f64)> = keys.iter().zip(sels.iter().copied()).collect();
        keyed.sort_by(|a, b| a.0.cmp(b.0));
        let mut t_rows = registry[name].row_count as f64;
        for (_, sel) in keyed {
            t_rows *= sel;
        }
        rows *= t_rows;
    }
    content.pred_factors.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, d) in &content.pred_factors {
        rows /= d;
    }
    if let Some((group, _)) = &content.agg {
        let mut cap = 1.0f64;
        for g in group {
            cap *= oracle_distinct(registry, g);
        }
        rows = rows.min(cap);
    }
    rows
}

fn oracle_width(node: &SiteNode, registry: &TableRegistry, cm: &CostModel) -> u64 {
    let content = oracle_content(node, registry, cm);
    if let Some((group, n_aggs)) = &content.agg {
        let mut w = 0;
        for g in group {
            w += oracle_col_width(registry, g);
        }
        return w + 8 * *n_aggs as u64;
    }
    if let Some(cols) = &content.project {
        return cols.iter().map(|c| oracle_col_width(registry, c)).sum();
    }
    content.tables.iter().map(|(t, _, _)| registry[t].row_bytes).sum()
}

fn oracle_rows_in(node: &SiteNode, registry: &TableRegistry, cm: &CostModel) -> f64 {
    match node {
        SiteNode::Scan { .. } => oracle_rows(node, registry, cm),
        SiteNode::Filter { child, .. }
        | SiteNode::Project { child, .. }
        | SiteNode::Aggregate { child, .. }
        | SiteNode::Ship { child, .. } => oracle_rows(child, registry, cm),
        SiteNode::Join { left, right, .. } => {
            oracle_rows(left, registry, cm) + oracle_rows(right, registry, cm)
        }
    }
}

/// Independent recomputation of a plan's cost.
pub fn oracle_cost(plan: &SitePlan, cm: &CostModel, registry: &TableRegistry) -> f64 {
    fn walk(node: &SiteNode, cm: &CostModel, registry: &TableRegistry) -> f64 {
        match node {
            SiteNode::Scan { .. } => oracle_rows_in(node, registry, cm) * cm.cpu_cost_per_row,
            SiteNode::Filter { child, .. }
            | SiteNode::Project { child, .. }
            | SiteNode::Aggregate { child, .. } => {
                walk(child, cm, registry) + oracle_rows_in(node, registry, cm) * cm.cpu_cost_per_row
            }
            SiteNode::Join { left, right, .. } => {
                walk(left, cm, registry)
                    + walk(right, cm, registry)
                    + oracle_rows_in(node, registry, cm) * cm.cpu_cost_per_row
            }
            SiteNode::Ship { from, to, child } => {
                let bytes =
                    oracle_rows(child, registry, cm) * oracle_width(child, registry, cm) as f64;
                walk(child, cm, registry) + bytes * cm.ship.rate(*from, *to)
            }
        }
    }
    walk(&plan.root, cm, registry)
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// Minimum-cost compliant plan by sheer enumeration; `None` when the space
/// holds no compliant plan.
pub fn best_compliant_by_enumeration(
    shape: &QueryShape,
    policies: &[CompliancePolicy],
    cm: &CostModel,
    registry: &TableRegistry,
    target: Option<Region>,
) -> Option<(f64, SitePlan)> {
    let n = shape.tables.len();
    let full: u32 = (1 << n) - 1;
    let mut regions: BTreeSet<Region> = shape.tables.iter().map(|t| t.region).collect();
    if let Some(t) = target {
        regions.insert(t);
    }
    let regions: Vec<Region> = regions.into_iter().collect();

    let mut best: Option<(f64, usize, String, SitePlan)> = None;
    let mut consider = |plan: SitePlan, cm: &CostModel, registry: &TableRegistry| {
        if !oracle_compliant(&plan, policies) {
            return;
        }
        let cost = oracle_cost(&plan, cm, registry);
        let ships = plan.root.count_ships();
        let render = plan.render(None);
        let replace = match &best {
            None => true,
            Some((bc, bs, br, _)) => match cost.total_cmp(bc) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => match ships.cmp(bs) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => render < *br,
                },
            },
        };
        if replace {
            best = Some((cost, ships, render, plan));
        }
    };

    for tree in all_trees(full, shape) {
        let joins = count_joins(&tree);
        let mut assignment = vec![0usize; joins];
        loop {
            let chosen: Vec<Region> = assignment.iter().map(|&i| regions[i]).collect();
            let mut cursor = 0;
            let join_root = build(&tree, shape, &chosen, &mut cursor);
            match &shape.root {
                RootKind::Project(cols) => {
                    let region = join_root.region();
                    let rooted = SiteNode::Project {
                        cols: cols.clone(),
                        region,
                        child: Box::new(join_root.clone()),
                    };
                    let delivered = match target {
                        Some(t) if t != region => {
                            SiteNode::Ship { from: region, to: t, child: Box::new(rooted) }
                        }
                        _ => rooted,
                    };
                    consider(SitePlan { root: delivered }, cm, registry);
                }
                RootKind::Aggregate { group, items } => {
                    for &r_agg in &regions {
                        let child = shipped_to(join_root.clone(), r_agg);
                        let rooted = SiteNode::Aggregate {
                            group: group.clone(),
                            items: items.clone(),
                            region: r_agg,
                            child: Box::new(child),
                        };
                        let delivered = match target {
                            Some(t) if t != r_agg => {
                                SiteNode::Ship { from: r_agg, to: t, child: Box::new(rooted) }
                            }
                            _ => rooted,
                        };
                        consider(SitePlan { root: delivered }, cm, registry);
                    }
                }
            }
            // Advance the mixed-radix assignment counter.
            let mut i = 0;
            loop {
                if i == joins {
                    break;
                }
                assignment[i] += 1;
                if assignment[i] < regions.len() {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == joins {
                break;
            }
        }
    }
    best.map(|(cost, _, _, plan)| (cost, plan))
}
