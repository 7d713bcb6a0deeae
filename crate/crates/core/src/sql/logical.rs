//! Region-agnostic logical relational algebra.

use super::ast::{AggFunc, CmpOp};
use crate::value::{ColumnType, Value};
use std::fmt;

/// A column reference resolved to its table and type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResolvedCol {
    pub table: String,
    pub column: String,
    pub ty: ColumnType,
}

impl fmt::Display for ResolvedCol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// A filter comparing a column against a literal already coerced to the
/// column's type.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedFilter {
    pub col: ResolvedCol,
    pub op: CmpOp,
    pub value: Value,
}

impl fmt::Display for ResolvedFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.col, self.op, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAgg {
    pub func: AggFunc,
    /// `None` is `COUNT(*)`.
    pub arg: Option<ResolvedCol>,
}

impl fmt::Display for ResolvedAgg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            Some(c) => write!(f, "{}({c})", self.func.name()),
            None => write!(f, "{}(*)", self.func.name()),
        }
    }
}

/// Output column of an aggregate, in SELECT order.
#[derive(Debug, Clone, PartialEq)]
pub enum OutItem {
    Group(ResolvedCol),
    Agg(ResolvedAgg),
}

impl fmt::Display for OutItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutItem::Group(c) => write!(f, "{c}"),
            OutItem::Agg(a) => write!(f, "{a}"),
        }
    }
}

/// Logical operators. Lowering produces the canonical shape: an optional
/// aggregate or a projection at the root, joins below it, filters pushed onto
/// the scans.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalNode {
    Scan { table: String },
    Filter { pred: ResolvedFilter, child: Box<LogicalNode> },
    Project { cols: Vec<ResolvedCol>, child: Box<LogicalNode> },
    Join { preds: Vec<(ResolvedCol, ResolvedCol)>, left: Box<LogicalNode>, right: Box<LogicalNode> },
    Aggregate { group: Vec<ResolvedCol>, items: Vec<OutItem>, child: Box<LogicalNode> },
}

impl LogicalNode {
    pub fn children(&self) -> Vec<&LogicalNode> {
        match self {
            LogicalNode::Scan { .. } => vec![],
            LogicalNode::Filter { child, .. }
            | LogicalNode::Project { child, .. }
            | LogicalNode::Aggregate { child, .. } => vec![child],
            LogicalNode::Join { left, right, .. } => vec![left, right],
        }
    }

    pub fn count_joins(&self) -> usize {
        let own = usize::from(matches!(self, LogicalNode::Join { .. }));
        own + self.children().iter().map(|c| c.count_joins()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalPlan {
    pub root: LogicalNode,
}
