//! Site-annotated physical plans: logical operators pinned to execution
//! regions, with explicit SHIP nodes wherever an intermediate crosses a
//! region border. Every node derives a lineage tag set; SHIP legality is
//! judged on those tags.

use super::stats::{Estimator, StatsError, SubtreeContent};
use crate::region::Region;
use crate::sql::{OutItem, ResolvedCol, ResolvedFilter};
use std::collections::BTreeSet;
use std::fmt;

/// Provenance of one base table inside an intermediate result.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LineageTag {
    pub source_table: String,
    pub origin_region: Region,
    pub aggregated: bool,
}

impl fmt::Display for LineageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}{}",
            self.source_table,
            self.origin_region,
            if self.aggregated { "+agg" } else { "" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SiteNode {
    Scan {
        table: String,
        region: Region,
    },
    Filter {
        pred: ResolvedFilter,
        region: Region,
        child: Box<SiteNode>,
    },
    Project {
        cols: Vec<ResolvedCol>,
        region: Region,
        child: Box<SiteNode>,
    },
    Join {
        preds: Vec<(ResolvedCol, ResolvedCol)>,
        region: Region,
        left: Box<SiteNode>,
        right: Box<SiteNode>,
    },
    Aggregate {
        group: Vec<ResolvedCol>,
        items: Vec<OutItem>,
        region: Region,
        child: Box<SiteNode>,
    },
    Ship {
        from: Region,
        to: Region,
        child: Box<SiteNode>,
    },
}

impl SiteNode {
    /// Region the node's output lives in (a ship's destination).
    pub fn region(&self) -> Region {
        match self {
            SiteNode::Scan { region, .. }
            | SiteNode::Filter { region, .. }
            | SiteNode::Project { region, .. }
            | SiteNode::Join { region, .. }
            | SiteNode::Aggregate { region, .. } => *region,
            SiteNode::Ship { to, .. } => *to,
        }
    }

    pub fn children(&self) -> Vec<&SiteNode> {
        match self {
            SiteNode::Scan { .. } => vec![],
            SiteNode::Filter { child, .. }
            | SiteNode::Project { child, .. }
            | SiteNode::Aggregate { child, .. }
            | SiteNode::Ship { child, .. } => vec![child],
            SiteNode::Join { left, right, .. } => vec![left, right],
        }
    }

    pub fn is_operator(&self) -> bool {
        !matches!(self, SiteNode::Ship { .. })
    }

    pub fn count_ships(&self) -> usize {
        let own = usize::from(matches!(self, SiteNode::Ship { .. }));
        own + self.children().iter().map(|c| c.count_ships()).sum::<usize>()
    }

    /// Lineage rules: scans start a tag, joins union their inputs, and an
    /// aggregate marks every tag aggregated (sticky upward).
    pub fn lineage_tags(&self) -> BTreeSet<LineageTag> {
        match self {
            SiteNode::Scan { table, region } => [LineageTag {
                source_table: table.clone(),
                origin_region: *region,
                aggregated: false,
            }]
            .into(),
            SiteNode::Filter { child, .. }
            | SiteNode::Project { child, .. }
            | SiteNode::Ship { child, .. } => child.lineage_tags(),
            SiteNode::Join { left, right, .. } => {
                let mut tags = left.lineage_tags();
                tags.extend(right.lineage_tags());
                tags
            }
            SiteNode::Aggregate { child, .. } => child
                .lineage_tags()
                .into_iter()
                .map(|mut t| {
                    t.aggregated = true;
                    t
                })
                .collect(),
        }
    }

    /// Logical content of the subtree, for estimation.
    pub fn content(&self) -> SubtreeContent {
        let mut content = SubtreeContent::default();
        self.collect_content(&mut content);
        content
    }

    fn collect_content(&self, content: &mut SubtreeContent) {
        match self {
            SiteNode::Scan { table, .. } => {
                content.tables.entry(table.clone()).or_default();
            }
            SiteNode::Filter { pred, child, .. } => {
                child.collect_content(content);
                content.tables.entry(pred.col.table.clone()).or_default().push(pred.clone());
            }
            SiteNode::Project { child, .. } | SiteNode::Ship { child, .. } => {
                child.collect_content(content)
            }
            SiteNode::Join { preds, left, right, .. } => {
                left.collect_content(content);
                right.collect_content(content);
                content.preds.extend(preds.iter().cloned());
            }
            SiteNode::Aggregate { group, items, child, .. } => {
                child.collect_content(content);
                let n_aggs = items.iter().filter(|i| matches!(i, OutItem::Agg(_))).count();
                content.agg = Some((group.clone(), n_aggs));
            }
        }
    }

    /// Projection columns at or above the subtree root, if any (used for
    /// width estimation of projected intermediates).
    fn projected_cols(&self) -> Option<&[ResolvedCol]> {
        match self {
            SiteNode::Project { cols, .. } => Some(cols),
            SiteNode::Ship { child, .. } => child.projected_cols(),
            _ => None,
        }
    }

    /// Estimated output rows.
    pub fn rows(&self, est: &Estimator) -> Result<f64, StatsError> {
        est.content_rows(&self.content())
    }

    /// Estimated output row width, bytes.
    pub fn width(&self, est: &Estimator) -> Result<u64, StatsError> {
        est.content_width(&self.content(), self.projected_cols())
    }

    /// Estimated output bytes.
    pub fn bytes(&self, est: &Estimator) -> Result<f64, StatsError> {
        Ok(self.rows(est)? * self.width(est)? as f64)
    }

    /// Rows the operator consumes (inputs summed); what CPU cost, runtime and
    /// usage metering are charged on.
    pub fn rows_in(&self, est: &Estimator) -> Result<f64, StatsError> {
        match self {
            SiteNode::Scan { .. } => self.rows(est),
            SiteNode::Filter { child, .. }
            | SiteNode::Project { child, .. }
            | SiteNode::Aggregate { child, .. }
            | SiteNode::Ship { child, .. } => child.rows(est),
            SiteNode::Join { left, right, .. } => Ok(left.rows(est)? + right.rows(est)?),
        }
    }

    /// One-line description, also the rendering of the node.
    pub fn label(&self) -> String {
        match self {
            SiteNode::Scan { table, region } => format!("SCAN@{region} {table}"),
            SiteNode::Filter { pred, region, .. } => format!("FILTER@{region} ({pred})"),
            SiteNode::Project { cols, region, .. } => {
                let cols: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                format!("PROJECT@{region} [{}]", cols.join(", "))
            }
            SiteNode::Join { preds, region, .. } => {
                if preds.is_empty() {
                    format!("JOIN@{region} (cross)")
                } else {
                    let preds: Vec<String> =
                        preds.iter().map(|(l, r)| format!("{l} = {r}")).collect();
                    format!("JOIN@{region} ({})", preds.join(" AND "))
                }
            }
            SiteNode::Aggregate { group, items, region, .. } => {
                let items: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                let group: Vec<String> = group.iter().map(|c| c.to_string()).collect();
                format!("AGG@{region} [{}] group=[{}]", items.join(", "), group.join(", "))
            }
            SiteNode::Ship { from, to, .. } => format!("SHIP {from}->{to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SitePlan {
    pub root: SiteNode,
}

impl SitePlan {
    /// Indented one-node-per-line rendering; with `explain`, each line gets
    /// its (rows, bytes) estimates appended.
    pub fn render(&self, explain: Option<&Estimator>) -> String {
        let mut out = String::new();
        render_node(&self.root, 0, explain, &mut out);
        out
    }

    /// Structural invariants: a ship sits exactly where regions change, and
    /// never ships to its own source region.
    pub fn validate(&self) -> Result<(), String> {
        validate_node(&self.root)
    }
}

fn render_node(node: &SiteNode, depth: usize, explain: Option<&Estimator>, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(&node.label());
    if let Some(est) = explain {
        match (node.rows(est), node.bytes(est)) {
            (Ok(rows), Ok(bytes)) => {
                out.push_str(&format!(" [rows={rows:.1} bytes={bytes:.1}]"));
            }
            _ => out.push_str(" [rows=? bytes=?]"),
        }
    }
    out.push('\n');
    for child in node.children() {
        render_node(child, depth + 1, explain, out);
    }
}

fn validate_node(node: &SiteNode) -> Result<(), String> {
    if let SiteNode::Ship { from, to, child } = node {
        if from == to {
            return Err(format!("ship {from}->{to} does not move"));
        }
        if child.region() != *from {
            return Err(format!(
                "ship {from}->{to} over a child at {}",
                child.region()
            ));
        }
    }
    for child in node.children() {
        if node.is_operator() && child.region() != node.region() {
            return Err(format!(
                "{} consumes an input at {} without a ship",
                node.label(),
                child.region()
            ));
        }
        validate_node(child)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ColumnType;

    fn rc(table: &str, column: &str) -> ResolvedCol {
        ResolvedCol { table: table.into(), column: column.into(), ty: ColumnType::Int64 }
    }

    fn scan(table: &str, region: Region) -> SiteNode {
        SiteNode::Scan { table: table.into(), region }
    }

    #[test]
    fn scan_lineage_is_its_own_table() {
        let tags = scan("lineitem", Region::NA).lineage_tags();
        assert_eq!(tags.len(), 1);
        let tag = tags.first().unwrap();
        assert_eq!((tag.source_table.as_str(), tag.origin_region, tag.aggregated), ("lineitem", Region::NA, false));
    }

    #[test]
    fn aggregate_marks_all_tags_sticky() {
        let join = SiteNode::Join {
            preds: vec![(rc("customer", "k"), rc("orders", "k"))],
            region: Region::EU,
            left: Box::new(scan("customer", Region::EU)),
            right: Box::new(scan("orders", Region::EU)),
        };
        let agg = SiteNode::Aggregate {
            group: vec![rc("customer", "k")],
            items: vec![OutItem::Group(rc("customer", "k"))],
            region: Region::EU,
            child: Box::new(join),
        };
        let tags = agg.lineage_tags();
        assert_eq!(tags.len(), 2);
        assert!(tags.iter().all(|t| t.aggregated));
    }

    #[test]
    fn four_region_join_lineage() {
        // Top join over nation(ME), customer(EU), orders(EU), lineitem(NA):
        // four tags, none aggregated.
        let j_oc = SiteNode::Join {
            preds: vec![(rc("customer", "k"), rc("orders", "k"))],
            region: Region::NA,
            left: Box::new(SiteNode::Ship {
                from: Region::EU,
                to: Region::NA,
                child: Box::new(scan("customer", Region::EU)),
            }),
            right: Box::new(SiteNode::Ship {
                from: Region::EU,
                to: Region::NA,
                child: Box::new(scan("orders", Region::EU)),
            }),
        };
        let j_l = SiteNode::Join {
            preds: vec![(rc("orders", "ok"), rc("lineitem", "ok"))],
            region: Region::NA,
            left: Box::new(j_oc),
            right: Box::new(scan("lineitem", Region::NA)),
        };
        let top = SiteNode::Join {
            preds: vec![(rc("customer", "nk"), rc("nation", "nk"))],
            region: Region::NA,
            left: Box::new(j_l),
            right: Box::new(SiteNode::Ship {
                from: Region::ME,
                to: Region::NA,
                child: Box::new(scan("nation", Region::ME)),
            }),
        };
        let tags = top.lineage_tags();
        assert_eq!(tags.len(), 4);
        assert!(tags.iter().all(|t| !t.aggregated));
        let regions: BTreeSet<Region> = tags.iter().map(|t| t.origin_region).collect();
        assert_eq!(regions, [Region::EU, Region::ME, Region::NA].into());
    }

    #[test]
    fn validate_catches_missing_ship() {
        let bad = SiteNode::Join {
            preds: vec![],
            region: Region::NA,
            left: Box::new(scan("a", Region::EU)),
            right: Box::new(scan("b", Region::NA)),
        };
        assert!(SitePlan { root: bad }.validate().is_err());
    }

    #[test]
    fn render_shape() {
        let plan = SitePlan {
            root: SiteNode::Ship {
                from: Region::EU,
                to: Region::NA,
                child: Box::new(scan("orders", Region::EU)),
            },
        };
        assert_eq!(plan.render(None), "SHIP EU->NA\n  SCAN@EU orders\n");
    }
}
