//! Lowering from parsed SELECTs to the canonical logical tree: scans, filters
//! pushed onto scans, left-deep joins in source order, then the aggregate or
//! projection. Semantics are bag semantics throughout.

use super::ast::*;
use super::logical::*;
use crate::value::{parse_date, ColumnType, Value};
use std::collections::BTreeMap;
use thiserror::Error;

pub type TableRegistry = BTreeMap<String, TableDef>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}` (qualify it with a table)")]
    AmbiguousColumn(String),
    #[error("join graph over the FROM tables is not connected")]
    DisconnectedJoinGraph,
    #[error("literal {found} does not fit column `{column}` of type {expected}")]
    TypeMismatch { column: String, expected: ColumnType, found: String },
    #[error("column `{0}` appears outside GROUP BY in an aggregate query")]
    NonGroupedColumn(String),
    #[error("equi-join endpoints must come from different tables: `{0}`")]
    SameTableJoin(String),
    #[error("aggregate {0} needs a numeric argument")]
    NonNumericAggregate(String),
    #[error("duplicate registration of table `{0}`")]
    DuplicateTable(String),
}

/// Splits a parsed program into the registry, session policies and queries,
/// in source order.
pub fn split_program(
    stmts: Vec<Statement>,
) -> Result<(TableRegistry, Vec<crate::policy::CompliancePolicy>, Vec<SelectSpec>), LowerError> {
    let mut registry = TableRegistry::new();
    let mut policies = Vec::new();
    let mut queries = Vec::new();
    for stmt in stmts {
        match stmt {
            Statement::Register(def) => {
                if registry.contains_key(&def.name) {
                    return Err(LowerError::DuplicateTable(def.name));
                }
                registry.insert(def.name.clone(), def);
            }
            Statement::Policy(p) => policies.push(p),
            Statement::Query(q) => queries.push(q),
        }
    }
    Ok((registry, policies, queries))
}

fn resolve(col: &ColRef, tables: &[String], registry: &TableRegistry) -> Result<ResolvedCol, LowerError> {
    match &col.table {
        Some(t) => {
            if !tables.contains(t) {
                return Err(LowerError::UnknownTable(t.clone()));
            }
            let def = registry.get(t).ok_or_else(|| LowerError::UnknownTable(t.clone()))?;
            let (_, c) = def
                .column(&col.column)
                .ok_or_else(|| LowerError::UnknownColumn(col.to_string()))?;
            Ok(ResolvedCol { table: t.clone(), column: c.name.clone(), ty: c.ty })
        }
        None => {
            let mut found: Option<ResolvedCol> = None;
            for t in tables {
                let def = registry.get(t).ok_or_else(|| LowerError::UnknownTable(t.clone()))?;
                if let Some((_, c)) = def.column(&col.column) {
                    if found.is_some() {
                        return Err(LowerError::AmbiguousColumn(col.column.clone()));
                    }
                    found = Some(ResolvedCol { table: t.clone(), column: c.name.clone(), ty: c.ty });
                }
            }
            found.ok_or_else(|| LowerError::UnknownColumn(col.column.clone()))
        }
    }
}

fn coerce_literal(lit: &Literal, col: &ResolvedCol) -> Result<Value, LowerError> {
    let mismatch = || LowerError::TypeMismatch {
        column: col.to_string(),
        expected: col.ty,
        found: lit.to_string(),
    };
    match (col.ty, lit) {
        (ColumnType::Int64, Literal::Int(v)) => Ok(Value::Int(*v)),
        (ColumnType::Float64, Literal::Float(v)) => Ok(Value::Float(*v)),
        (ColumnType::Float64, Literal::Int(v)) => Ok(Value::Float(*v as f64)),
        (ColumnType::Text, Literal::Str(s)) => Ok(Value::Text(s.clone())),
        (ColumnType::Bool, Literal::Bool(b)) => Ok(Value::Bool(*b)),
        (ColumnType::Date, Literal::Str(s)) => parse_date(s).map(Value::Date).ok_or_else(mismatch),
        (ColumnType::Date, Literal::Int(v)) => Ok(Value::Date(*v)),
        _ => Err(mismatch()),
    }
}

/// Checks that the equi-join graph spans all tables (single-table queries are
/// trivially connected).
fn check_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|i| find(&mut parent, i) == root)
}

/// Lowers a SELECT to the canonical logical tree.
pub fn to_logical_plan(q: &SelectSpec, registry: &TableRegistry) -> Result<LogicalPlan, LowerError> {
    for t in &q.tables {
        if !registry.contains_key(t) {
            return Err(LowerError::UnknownTable(t.clone()));
        }
    }

    let table_pos =
        |name: &str| q.tables.iter().position(|t| t == name).expect("resolved table in FROM");

    // Split predicates: filters pushed per table, joins assigned to the step
    // where both sides are available in the left-deep source-order tree.
    let mut filters: Vec<Vec<ResolvedFilter>> = vec![Vec::new(); q.tables.len()];
    let mut join_edges: Vec<(usize, usize)> = Vec::new();
    let mut joins_at: Vec<Vec<(ResolvedCol, ResolvedCol)>> = vec![Vec::new(); q.tables.len()];
    for pred in &q.predicates {
        match pred {
            Predicate::Filter(col, op, lit) => {
                let col = resolve(col, &q.tables, registry)?;
                let value = coerce_literal(lit, &col)?;
                filters[table_pos(&col.table)].push(ResolvedFilter { col, op: *op, value });
            }
            Predicate::Join(l, r) => {
                let l = resolve(l, &q.tables, registry)?;
                let r = resolve(r, &q.tables, registry)?;
                if l.table == r.table {
                    return Err(LowerError::SameTableJoin(format!("{l} = {r}")));
                }
                if l.ty != r.ty {
                    return Err(LowerError::TypeMismatch {
                        column: r.to_string(),
                        expected: l.ty,
                        found: r.ty.to_string(),
                    });
                }
                let (lp, rp) = (table_pos(&l.table), table_pos(&r.table));
                join_edges.push((lp, rp));
                // Normalize so the earlier table is on the left.
                let (l, r) = if lp <= rp { (l, r) } else { (r, l) };
                joins_at[lp.max(rp)].push((l, r));
            }
        }
    }

    if !check_connected(q.tables.len(), &join_edges) {
        return Err(LowerError::DisconnectedJoinGraph);
    }

    let chain = |pos: usize| -> LogicalNode {
        let mut node = LogicalNode::Scan { table: q.tables[pos].clone() };
        for f in &filters[pos] {
            node = LogicalNode::Filter { pred: f.clone(), child: Box::new(node) };
        }
        node
    };

    let mut tree = chain(0);
    for (pos, preds) in joins_at.iter().enumerate().skip(1) {
        tree = LogicalNode::Join {
            preds: preds.clone(),
            left: Box::new(tree),
            right: Box::new(chain(pos)),
        };
    }

    // Expand `*` to every column of the FROM tables, in order.
    let expand_star = || -> Vec<SelectItem> {
        q.tables
            .iter()
            .flat_map(|t| {
                registry[t].columns.iter().map(move |c| {
                    SelectItem::Col(ColRef { table: Some(t.clone()), column: c.name.clone() })
                })
            })
            .collect()
    };
    let items: Vec<SelectItem> = match &q.items {
        SelectItems::Star => expand_star(),
        SelectItems::List(list) => list.clone(),
    };

    let is_aggregate =
        !q.group_by.is_empty() || items.iter().any(|i| matches!(i, SelectItem::Agg(_)));

    let root = if is_aggregate {
        let group: Vec<ResolvedCol> = q
            .group_by
            .iter()
            .map(|c| resolve(c, &q.tables, registry))
            .collect::<Result<_, _>>()?;
        let mut out_items = Vec::with_capacity(items.len());
        for item in &items {
            match item {
                SelectItem::Col(c) => {
                    let col = resolve(c, &q.tables, registry)?;
                    if !group.contains(&col) {
                        return Err(LowerError::NonGroupedColumn(col.to_string()));
                    }
                    out_items.push(OutItem::Group(col));
                }
                SelectItem::Agg(call) => {
                    let arg = match &call.arg {
                        Some(c) => {
                            let col = resolve(c, &q.tables, registry)?;
                            if matches!(call.func, AggFunc::Sum | AggFunc::Avg)
                                && !matches!(col.ty, ColumnType::Int64 | ColumnType::Float64)
                            {
                                return Err(LowerError::NonNumericAggregate(format!(
                                    "{}({col})",
                                    call.func.name()
                                )));
                            }
                            Some(col)
                        }
                        None => None,
                    };
                    out_items.push(OutItem::Agg(ResolvedAgg { func: call.func, arg }));
                }
            }
        }
        LogicalNode::Aggregate { group, items: out_items, child: Box::new(tree) }
    } else {
        let cols: Vec<ResolvedCol> = items
            .iter()
            .map(|i| match i {
                SelectItem::Col(c) => resolve(c, &q.tables, registry),
                SelectItem::Agg(_) => unreachable!("aggregate queries handled above"),
            })
            .collect::<Result<_, _>>()?;
        LogicalNode::Project { cols, child: Box::new(tree) }
    };

    Ok(LogicalPlan { root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parser::parse_program;

    pub(crate) fn q10_like_program() -> &'static str {
        "REGISTER TABLE nation AT ME CARD 25 ROWBYTES 32 COLS (n_nationkey INT DISTINCT 25, n_name TEXT DISTINCT 25);\n\
         REGISTER TABLE customer AT EU CARD 1500 ROWBYTES 180 COLS (c_custkey INT DISTINCT 1500, c_nationkey INT DISTINCT 25, c_name TEXT DISTINCT 1500);\n\
         REGISTER TABLE orders AT EU CARD 15000 ROWBYTES 120 COLS (o_orderkey INT DISTINCT 15000, o_custkey INT DISTINCT 1500, o_date INT DISTINCT 2400);\n\
         REGISTER TABLE lineitem AT NA CARD 60000 ROWBYTES 8 COLS (l_orderkey INT DISTINCT 15000, l_revenue FLOAT);\n\
         SELECT c.c_name, SUM(l.l_revenue) FROM lineitem, orders, customer, nation \
          WHERE lineitem.l_orderkey = orders.o_orderkey AND orders.o_custkey = customer.c_custkey \
          AND customer.c_nationkey = nation.n_nationkey GROUP BY c.c_name;"
    }

    fn lower(text: &str) -> Result<LogicalPlan, LowerError> {
        let stmts = parse_program(text).unwrap();
        let (registry, _, queries) = split_program(stmts)?;
        to_logical_plan(&queries[0], &registry)
    }

    #[test]
    fn four_table_select_has_three_joins() {
        // `c.` and `l.` prefixes do not resolve as tables; use full names.
        let text = q10_like_program()
            .replace("c.c_name", "customer.c_name")
            .replace("l.l_revenue", "lineitem.l_revenue");
        let plan = lower(&text).unwrap();
        assert_eq!(plan.root.count_joins(), 3);
        assert!(matches!(plan.root, LogicalNode::Aggregate { .. }));
    }

    #[test]
    fn single_table_filter_sits_over_scan() {
        let plan = lower(
            "REGISTER TABLE t AT EU CARD 100 ROWBYTES 16 COLS (a INT DISTINCT 10, b FLOAT);\n\
             SELECT t.a FROM t WHERE t.a = 3;",
        )
        .unwrap();
        match plan.root {
            LogicalNode::Project { child, .. } => {
                assert!(matches!(*child, LogicalNode::Filter { .. }));
            }
            other => panic!("expected project root, got {other:?}"),
        }
    }

    #[test]
    fn unknown_and_ambiguous_columns_are_reported() {
        let base = "REGISTER TABLE t AT EU CARD 10 ROWBYTES 8 COLS (a INT);\n\
                    REGISTER TABLE u AT EU CARD 10 ROWBYTES 8 COLS (a INT);\n";
        let err = lower(&format!("{base}SELECT t.zzz FROM t, u WHERE t.a = u.a;")).unwrap_err();
        assert!(matches!(err, LowerError::UnknownColumn(_)));
        let err = lower(&format!("{base}SELECT a FROM t, u WHERE t.a = u.a;")).unwrap_err();
        assert!(matches!(err, LowerError::AmbiguousColumn(_)));
        let err = lower("SELECT x.a FROM x;").unwrap_err();
        assert!(matches!(err, LowerError::UnknownTable(_)));
    }

    #[test]
    fn disconnected_join_graph_is_rejected() {
        let err = lower(
            "REGISTER TABLE t AT EU CARD 10 ROWBYTES 8 COLS (a INT);\n\
             REGISTER TABLE u AT EU CARD 10 ROWBYTES 8 COLS (b INT);\n\
             SELECT t.a FROM t, u;",
        )
        .unwrap_err();
        assert_eq!(err, LowerError::DisconnectedJoinGraph);
    }

    #[test]
    fn literal_coercion_rules() {
        let base = "REGISTER TABLE t AT EU CARD 10 ROWBYTES 24 COLS (a INT, f FLOAT, d DATE);\n";
        assert!(lower(&format!("{base}SELECT t.a FROM t WHERE t.f > 3;")).is_ok());
        assert!(lower(&format!("{base}SELECT t.a FROM t WHERE t.d >= '2020-05-01';")).is_ok());
        let err = lower(&format!("{base}SELECT t.a FROM t WHERE t.a = 'x';")).unwrap_err();
        assert!(matches!(err, LowerError::TypeMismatch { .. }));
    }

    #[test]
    fn non_grouped_column_is_rejected() {
        let err = lower(
            "REGISTER TABLE t AT EU CARD 10 ROWBYTES 16 COLS (a INT, b INT);\n\
             SELECT t.b, COUNT(*) FROM t GROUP BY t.a;",
        )
        .unwrap_err();
        assert!(matches!(err, LowerError::NonGroupedColumn(_)));
    }
}
