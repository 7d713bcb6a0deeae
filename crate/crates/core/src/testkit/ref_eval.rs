//! Nested-loop reference evaluator.
//!
//! Evaluates a SELECT straight off its parsed form: tables nested in FROM
//! order, every predicate applied as soon as its inputs are bound, grouping
//! by linear scan. It shares nothing with the plan-based executor, which is
//! exactly the point.

use crate::exec::Database;
use crate::sql::{
    AggFunc, CmpOp, ColRef, Literal, Predicate, SelectItem, SelectItems, SelectSpec, TableRegistry,
};
use crate::value::{parse_date, ColumnType, Value};

type Pos = (usize, usize); // (table index in FROM, column index)

fn resolve(col: &ColRef, spec: &SelectSpec, registry: &TableRegistry) -> Result<Pos, String> {
    let mut found = None;
    for (ti, tname) in spec.tables.iter().enumerate() {
        if let Some(wanted) = &col.table {
            if wanted != tname {
                continue;
            }
        }
        let def = registry.get(tname).ok_or_else(|| format!("no table {tname}"))?;
        if let Some((ci, _)) = def.column(&col.column) {
            if found.is_some() && col.table.is_none() {
                return Err(format!("ambiguous column {col}"));
            }
            found = Some((ti, ci));
            if col.table.is_some() {
                break;
            }
        }
    }
    found.ok_or_else(|| format!("unresolved column {col}"))
}

fn literal_value(lit: &Literal, ty: ColumnType) -> Result<Value, String> {
    Ok(match (ty, lit) {
        (ColumnType::Int64, Literal::Int(v)) => Value::Int(*v),
        (ColumnType::Float64, Literal::Float(v)) => Value::Float(*v),
        (ColumnType::Float64, Literal::Int(v)) => Value::Float(*v as f64),
        (ColumnType::Text, Literal::Str(s)) => Value::Text(s.clone()),
        (ColumnType::Bool, Literal::Bool(b)) => Value::Bool(*b),
        (ColumnType::Date, Literal::Str(s)) => {
            Value::Date(parse_date(s).ok_or_else(|| format!("bad date {s}"))?)
        }
        (ColumnType::Date, Literal::Int(v)) => Value::Date(*v),
        _ => return Err(format!("literal {lit} does not fit {ty}")),
    })
}

fn passes(op: CmpOp, left: &Value, right: &Value) -> bool {
    let ord = left.cmp(right);
    match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    }
}

enum Check {
    Join(Pos, Pos),
    Filter(Pos, CmpOp, Value),
}

impl Check {
    fn ready_at(&self) -> usize {
        match self {
            Check::Join(a, b) => a.0.max(b.0),
            Check::Filter(c, _, _) => c.0,
        }
    }

    fn holds(&self, tuple: &[&Vec<Value>]) -> bool {
        match self {
            Check::Join(a, b) => tuple[a.0][a.1] == tuple[b.0][b.1],
            Check::Filter(c, op, v) => passes(*op, &tuple[c.0][c.1], v),
        }
    }
}

/// Evaluates the query under bag semantics, returning output rows in no
/// particular order (compare as multisets).
pub fn nested_loop_eval(
    spec: &SelectSpec,
    registry: &TableRegistry,
    db: &Database,
) -> Result<Vec<Vec<Value>>, String> {
    let mut checks = Vec::new();
    for pred in &spec.predicates {
        match pred {
            Predicate::Join(a, b) => {
                checks.push(Check::Join(resolve(a, spec, registry)?, resolve(b, spec, registry)?))
            }
            Predicate::Filter(c, op, lit) => {
                let pos = resolve(c, spec, registry)?;
                let ty = registry[&spec.tables[pos.0]].columns[pos.1].ty;
                checks.push(Check::Filter(pos, *op, literal_value(lit, ty)?));
            }
        }
    }

    let tables: Vec<&Vec<Vec<Value>>> = spec
        .tables
        .iter()
        .map(|t| db.tables.get(t).map(|t| &t.rows).ok_or_else(|| format!("no data for {t}")))
        .collect::<Result<_, _>>()?;

    // Progressive nested loops with early predicate application.
    let mut joined: Vec<Vec<&Vec<Value>>> = Vec::new();
    let mut stack: Vec<&Vec<Value>> = Vec::new();
    descend(&tables, &checks, 0, &mut stack, &mut joined);

    let items: Vec<SelectItem> = match &spec.items {
        SelectItems::Star => spec
            .tables
            .iter()
            .flat_map(|t| {
                registry[t].columns.iter().map(move |c| {
                    SelectItem::Col(ColRef { table: Some(t.clone()), column: c.name.clone() })
                })
            })
            .collect(),
        SelectItems::List(list) => list.clone(),
    };
    let is_aggregate =
        !spec.group_by.is_empty() || items.iter().any(|i| matches!(i, SelectItem::Agg(_)));

    if !is_aggregate {
        let cols: Vec<Pos> = items
            .iter()
            .map(|i| match i {
                SelectItem::Col(c) => resolve(c, spec, registry),
                SelectItem::Agg(_) => unreachable!(),
            })
            .collect::<Result<_, _>>()?;
        return Ok(joined
            .iter()
            .map(|tuple| cols.iter().map(|p| tuple[p.0][p.1].clone()).collect())
            .collect());
    }

    let group_pos: Vec<Pos> =
        spec.group_by.iter().map(|c| resolve(c, spec, registry)).collect::<Result<_, _>>()?;
    // Linear-scan grouping: no hash tables anywhere in the oracle.
    let mut groups: Vec<(Vec<Value>, Vec<Vec<&Vec<Value>>>)> = Vec::new();
    for tuple in &joined {
        let key: Vec<Value> = group_pos.iter().map(|p| tuple[p.0][p.1].clone()).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(tuple.clone()),
            None => groups.push((key, vec![tuple.clone()])),
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (key, members) in &groups {
        let mut row = Vec::with_capacity(items.len());
        for item in &items {
            match item {
                SelectItem::Col(c) => {
                    let p = resolve(c, spec, registry)?;
                    let gi = group_pos
                        .iter()
                        .position(|g| *g == p)
                        .ok_or_else(|| format!("{c} not grouped"))?;
                    row.push(key[gi].clone());
                }
                SelectItem::Agg(call) => {
                    row.push(eval_agg(call.func, call.arg.as_ref(), members, spec, registry)?)
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

fn descend<'a>(
    tables: &[&'a Vec<Vec<Value>>],
    checks: &[Check],
    depth: usize,
    stack: &mut Vec<&'a Vec<Value>>,
    out: &mut Vec<Vec<&'a Vec<Value>>>,
) {
    if depth == tables.len() {
        out.push(stack.clone());
        return;
    }
    'rows: for row in tables[depth] {
        stack.push(row);
        for check in checks.iter().filter(|c| c.ready_at() == depth) {
            if !check.holds(stack) {
                stack.pop();
                continue 'rows;
            }
        }
        descend(tables, checks, depth + 1, stack, out);
        stack.pop();
    }
}

fn eval_agg(
    func: AggFunc,
    arg: Option<&ColRef>,
    members: &[Vec<&Vec<Value>>],
    spec: &SelectSpec,
    registry: &TableRegistry,
) -> Result<Value, String> {
    let pos = match arg {
        Some(c) => Some(resolve(c, spec, registry)?),
        None => None,
    };
    match func {
        AggFunc::Count => Ok(Value::Int(members.len() as i64)),
        AggFunc::Sum => {
            let p = pos.ok_or("SUM needs an argument")?;
            let ty = registry[&spec.tables[p.0]].columns[p.1].ty;
            if ty == ColumnType::Int64 {
                let mut acc: i64 = 0;
                for t in members {
                    let Value::Int(v) = &t[p.0][p.1] else { return Err("SUM type".into()) };
                    acc = acc.checked_add(*v).ok_or("SUM overflow")?;
                }
                Ok(Value::Int(acc))
            } else {
                let mut acc = 0.0;
                for t in members {
                    acc += match &t[p.0][p.1] {
                        Value::Float(v) => *v,
                        Value::Int(v) => *v as f64,
                        _ => return Err("SUM type".into()),
                    };
                }
                Ok(Value::Float(acc))
            }
        }
        AggFunc::Avg => {
            let p = pos.ok_or("AVG needs an argument")?;
            let mut acc = 0.0;
            for t in members {
                acc += match &t[p.0][p.1] {
                    Value::Float(v) => *v,
                    Value::Int(v) => *v as f64,
                    _ => return Err("AVG type".into()),
                };
            }
            Ok(Value::Float(acc / members.len() as f64))
        }
        AggFunc::Min | AggFunc::Max => {
            let p = pos.ok_or("MIN/MAX needs an argument")?;
            let mut best: Option<Value> = None;
            for t in members {
                let v = t[p.0][p.1].clone();
                let keep = match (&best, func) {
                    (None, _) => true,
                    (Some(b), AggFunc::Min) => v < *b,
                    (Some(b), AggFunc::Max) => v > *b,
                    _ => unreachable!(),
                };
                if keep {
                    best = Some(v);
                }
            }
            best.ok_or_else(|| "empty group".into())
        }
    }
}

/// Sorts rows canonically so two results can be compared as multisets.
pub fn sorted_rows(mut rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    rows.sort();
    rows
}
