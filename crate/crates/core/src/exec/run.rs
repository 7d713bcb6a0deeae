//! In-process execution of bound site plans over in-memory tables.
//!
//! Equi-joins run as hash joins (build left, probe right), aggregation as
//! hash aggregation with deterministic group order. Every operator emits one
//! rows-processed usage event against its bound variant and node; every ship
//! emits one bytes-shipped event attributed to the data-transfer asset,
//! reported by the sending operator's node. Events are merged in plan
//! preorder, so output is deterministic no matter how subtrees interleave.

use super::table::Database;
use super::variant::{ExecutionPlan, OperatorBinding};
use crate::asset::AssetId;
use crate::billing::{UsageEvent, UsageMetric};
use crate::plan::{Estimator, SiteNode, StatsError};
use crate::sql::{AggFunc, CmpOp, OutItem, ResolvedCol};
use crate::value::Value;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Asset id carrying shipped-bytes usage (network transfer is metered like
/// any other asset).
pub fn transfer_asset_id() -> AssetId {
    AssetId::new("data-transfer").expect("static id is valid")
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("missing table `{0}`")]
    MissingTable(String),
    #[error("integer overflow in {0}")]
    ArithmeticOverflow(String),
    #[error("column `{0}` not produced by the input")]
    MissingColumn(String),
    #[error("operator `{0}` has no binding")]
    MissingBinding(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone)]
pub struct ExecOutput {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub events: Vec<UsageEvent>,
}

struct Frame {
    headers: Vec<String>,
    cols: Vec<Option<ResolvedCol>>,
    rows: Vec<Vec<Value>>,
}

impl Frame {
    fn position(&self, col: &ResolvedCol) -> Result<usize, ExecError> {
        self.cols
            .iter()
            .position(|c| c.as_ref().is_some_and(|c| c.table == col.table && c.column == col.column))
            .ok_or_else(|| ExecError::MissingColumn(col.to_string()))
    }
}

struct Executor<'a> {
    db: &'a Database,
    est: &'a Estimator<'a>,
    bindings: &'a [OperatorBinding],
    at: u64,
    op_cursor: usize,
    events: Vec<(usize, UsageEvent)>,
    walk_cursor: usize,
}

/// Runs a bound plan against the database. `at` stamps the usage events.
pub fn execute_plan(ep: &ExecutionPlan, db: &Database, est: &Estimator, at: u64) -> Result<ExecOutput, ExecError> {
    let mut executor =
        Executor { db, est, bindings: &ep.bindings, at, op_cursor: 0, events: Vec::new(), walk_cursor: 0 };
    let frame = executor.eval(&ep.site.root)?;
    executor.events.sort_by_key(|(walk_idx, _)| *walk_idx);
    Ok(ExecOutput {
        columns: frame.headers,
        rows: frame.rows,
        events: executor.events.into_iter().map(|(_, e)| e).collect(),
    })
}

fn compare(op: CmpOp, left: &Value, right: &Value) -> bool {
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

impl Executor<'_> {
    fn next_binding(&mut self, node: &SiteNode) -> Result<OperatorBinding, ExecError> {
        let binding = self
            .bindings
            .get(self.op_cursor)
            .ok_or_else(|| ExecError::MissingBinding(node.label()))?
            .clone();
        self.op_cursor += 1;
        Ok(binding)
    }

    fn push_event(&mut self, walk_idx: usize, asset: AssetId, metric: UsageMetric, amount: u64, node: String) {
        self.events.push((
            walk_idx,
            UsageEvent { asset, metric, amount, at: self.at, node, event_id: None },
        ));
    }

    /// The node id of the subtree's root operator (ship events are reported
    /// from the sending side).
    fn sender_node(&self, bindings_before: usize) -> String {
        self.bindings
            .get(bindings_before)
            .map(|b| b.node_id.clone())
            .unwrap_or_else(|| "driver".to_string())
    }

    fn eval(&mut self, node: &SiteNode) -> Result<Frame, ExecError> {
        let walk_idx = self.walk_cursor;
        self.walk_cursor += 1;
        match node {
            SiteNode::Scan { table, .. } => {
                let binding = self.next_binding(node)?;
                let t = self
                    .db
                    .tables
                    .get(table)
                    .ok_or_else(|| ExecError::MissingTable(table.clone()))?;
                let cols: Vec<Option<ResolvedCol>> = t
                    .def
                    .columns
                    .iter()
                    .map(|c| {
                        Some(ResolvedCol { table: table.clone(), column: c.name.clone(), ty: c.ty })
                    })
                    .collect();
                let headers =
                    cols.iter().map(|c| c.as_ref().unwrap().to_string()).collect();
                self.push_event(
                    walk_idx,
                    binding.variant.asset.clone(),
                    UsageMetric::Rows,
                    t.rows.len() as u64,
                    binding.node_id,
                );
                Ok(Frame { headers, cols, rows: t.rows.clone() })
            }
            SiteNode::Filter { pred, child, .. } => {
                let binding = self.next_binding(node)?;
                let frame = self.eval(child)?;
                let pos = frame.position(&pred.col)?;
                self.push_event(
                    walk_idx,
                    binding.variant.asset.clone(),
                    UsageMetric::Rows,
                    frame.rows.len() as u64,
                    binding.node_id,
                );
                let rows =
                    frame.rows.into_iter().filter(|r| compare(pred.op, &r[pos], &pred.value)).collect();
                Ok(Frame { headers: frame.headers, cols: frame.cols, rows })
            }
            SiteNode::Project { cols, child, .. } => {
                let binding = self.next_binding(node)?;
                let frame = self.eval(child)?;
                let positions: Vec<usize> =
                    cols.iter().map(|c| frame.position(c)).collect::<Result<_, _>>()?;
                self.push_event(
                    walk_idx,
                    binding.variant.asset.clone(),
                    UsageMetric::Rows,
                    frame.rows.len() as u64,
                    binding.node_id,
                );
                let rows: Vec<Vec<Value>> = frame
                    .rows
                    .iter()
                    .map(|r| positions.iter().map(|&p| r[p].clone()).collect())
                    .collect();
                Ok(Frame {
                    headers: cols.iter().map(|c| c.to_string()).collect(),
                    cols: cols.iter().cloned().map(Some).collect(),
                    rows,
                })
            }
            SiteNode::Join { preds, left, right, .. } => {
                let binding = self.next_binding(node)?;
                let lf = self.eval(left)?;
                let rf = self.eval(right)?;
                // Orient each predicate to (left frame, right frame).
                let mut lpos = Vec::with_capacity(preds.len());
                let mut rpos = Vec::with_capacity(preds.len());
                for (a, b) in preds {
                    match (lf.position(a), rf.position(b)) {
                        (Ok(la), Ok(rb)) => {
                            lpos.push(la);
                            rpos.push(rb);
                        }
                        _ => {
                            lpos.push(lf.position(b)?);
                            rpos.push(rf.position(a)?);
                        }
                    }
                }
                self.push_event(
                    walk_idx,
                    binding.variant.asset.clone(),
                    UsageMetric::Rows,
                    (lf.rows.len() + rf.rows.len()) as u64,
                    binding.node_id,
                );
                let mut built: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
                for (i, row) in lf.rows.iter().enumerate() {
                    let key: Vec<Value> = lpos.iter().map(|&p| row[p].clone()).collect();
                    built.entry(key).or_default().push(i);
                }
                let mut rows = Vec::new();
                for rrow in &rf.rows {
                    let key: Vec<Value> = rpos.iter().map(|&p| rrow[p].clone()).collect();
                    if let Some(matches) = built.get(&key) {
                        for &li in matches {
                            let mut row = lf.rows[li].clone();
                            row.extend(rrow.iter().cloned());
                            rows.push(row);
                        }
                    }
                }
                let mut headers = lf.headers;
                headers.extend(rf.headers);
                let mut cols = lf.cols;
                cols.extend(rf.cols);
                Ok(Frame { headers, cols, rows })
            }
            SiteNode::Aggregate { group, items, child, .. } => {
                let binding = self.next_binding(node)?;
                let frame = self.eval(child)?;
                self.push_event(
                    walk_idx,
                    binding.variant.asset.clone(),
                    UsageMetric::Rows,
                    frame.rows.len() as u64,
                    binding.node_id,
                );
                aggregate(&frame, group, items)
            }
            SiteNode::Ship { child, .. } => {
                let bindings_before = self.op_cursor;
                let frame = self.eval(child)?;
                let width = child.width(self.est)?;
                let bytes = frame.rows.len() as u64 * width;
                let sender = self.sender_node(bindings_before);
                self.push_event(walk_idx, transfer_asset_id(), UsageMetric::Bytes, bytes, sender);
                Ok(frame)
            }
        }
    }
}

enum AggState {
    Count(u64),
    SumInt(i64),
    SumFloat(f64),
    Avg { sum: f64, n: u64 },
    MinMax(Option<Value>),
}

fn aggregate(frame: &Frame, group: &[ResolvedCol], items: &[OutItem]) -> Result<Frame, ExecError> {
    let group_pos: Vec<usize> =
        group.iter().map(|c| frame.position(c)).collect::<Result<_, _>>()?;
    let agg_specs: Vec<(&crate::sql::ResolvedAgg, Option<usize>)> = items
        .iter()
        .filter_map(|i| match i {
            OutItem::Agg(a) => Some(a),
            OutItem::Group(_) => None,
        })
        .map(|a| {
            let pos = match &a.arg {
                Some(c) => Some(frame.position(c)?),
                None => None,
            };
            Ok((a, pos))
        })
        .collect::<Result<_, ExecError>>()?;

    let fresh_states = || -> Vec<AggState> {
        agg_specs
            .iter()
            .map(|(a, pos)| match a.func {
                AggFunc::Count => AggState::Count(0),
                AggFunc::Sum => {
                    let is_int = pos
                        .map(|p| {
                            matches!(
                                frame.cols[p].as_ref().map(|c| c.ty),
                                Some(crate::value::ColumnType::Int64)
                            )
                        })
                        .unwrap_or(false);
                    if is_int {
                        AggState::SumInt(0)
                    } else {
                        AggState::SumFloat(0.0)
                    }
                }
                AggFunc::Avg => AggState::Avg { sum: 0.0, n: 0 },
                AggFunc::Min | AggFunc::Max => AggState::MinMax(None),
            })
            .collect()
    };

    let mut groups: BTreeMap<Vec<Value>, Vec<AggState>> = BTreeMap::new();
    for row in &frame.rows {
        let key: Vec<Value> = group_pos.iter().map(|&p| row[p].clone()).collect();
        let states = groups.entry(key).or_insert_with(fresh_states);
        for ((a, pos), state) in agg_specs.iter().zip(states.iter_mut()) {
            match state {
                AggState::Count(n) => *n += 1,
                AggState::SumInt(acc) => {
                    let Value::Int(v) = &row[pos.expect("sum has an argument")] else {
                        return Err(ExecError::ArithmeticOverflow("SUM over non-integer".into()));
                    };
                    *acc = acc
                        .checked_add(*v)
                        .ok_or_else(|| ExecError::ArithmeticOverflow(format!("sum({})", a)))?;
                }
                AggState::SumFloat(acc) => {
                    let v = match &row[pos.expect("sum has an argument")] {
                        Value::Float(v) => *v,
                        Value::Int(v) => *v as f64,
                        _ => return Err(ExecError::ArithmeticOverflow("SUM over non-numeric".into())),
                    };
                    *acc += v;
                }
                AggState::Avg { sum, n } => {
                    let v = match &row[pos.expect("avg has an argument")] {
                        Value::Float(v) => *v,
                        Value::Int(v) => *v as f64,
                        _ => return Err(ExecError::ArithmeticOverflow("AVG over non-numeric".into())),
                    };
                    *sum += v;
                    *n += 1;
                }
                AggState::MinMax(best) => {
                    let v = row[pos.expect("min/max has an argument")].clone();
                    let keep = match (a.func, best.as_ref()) {
                        (_, None) => true,
                        (AggFunc::Min, Some(b)) => v < *b,
                        (AggFunc::Max, Some(b)) => v > *b,
                        _ => unreachable!(),
                    };
                    if keep {
                        *best = Some(v);
                    }
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for (key, states) in groups {
        let mut out_row = Vec::with_capacity(items.len());
        let mut agg_i = 0;
        for item in items {
            match item {
                OutItem::Group(c) => {
                    let gi = group.iter().position(|g| g == c).expect("validated at lowering");
                    out_row.push(key[gi].clone());
                }
                OutItem::Agg(_) => {
                    let v = match &states[agg_i] {
                        AggState::Count(n) => Value::Int(*n as i64),
                        AggState::SumInt(v) => Value::Int(*v),
                        AggState::SumFloat(v) => Value::Float(*v),
                        AggState::Avg { sum, n } => Value::Float(sum / *n as f64),
                        AggState::MinMax(v) => v.clone().expect("group has rows"),
                    };
                    agg_i += 1;
                    out_row.push(v);
                }
            }
        }
        rows.push(out_row);
    }

    Ok(Frame {
        headers: items.iter().map(|i| i.to_string()).collect(),
        cols: items
            .iter()
            .map(|i| match i {
                OutItem::Group(c) => Some(c.clone()),
                OutItem::Agg(_) => None,
            })
            .collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::table::Database;
    use crate::exec::variant::{operators, ImplementationVariant, OperatorBinding};
    use crate::money::Money;
    use crate::plan::SitePlan;
    use crate::region::Region;
    use crate::sql::{parse_program, split_program, ResolvedAgg, TableRegistry};
    use crate::value::ColumnType;

    fn registry() -> TableRegistry {
        split_program(
            parse_program(
                "REGISTER TABLE customers AT EU CARD 150 ROWBYTES 8 COLS (custkey INT DISTINCT 150);\n\
                 REGISTER TABLE orders AT EU CARD 1500 ROWBYTES 16 COLS (custkey INT DISTINCT 150, total INT DISTINCT 100);",
            )
            .unwrap(),
        )
        .unwrap()
        .0
    }

    fn rc(table: &str, column: &str) -> ResolvedCol {
        ResolvedCol { table: table.into(), column: column.into(), ty: ColumnType::Int64 }
    }

    fn bind_all(plan: &SitePlan) -> ExecutionPlan {
        let bindings = operators(plan)
            .iter()
            .enumerate()
            .map(|(op_index, op)| OperatorBinding {
                op_index,
                label: op.label(),
                variant: ImplementationVariant {
                    asset: AssetId::new(format!("builtin-op{op_index}")).unwrap(),
                    implements: crate::asset::LogicalSignature {
                        goal: crate::exec::variant::operator_category(op).to_string(),
                        input_types: vec![],
                        output_type: crate::asset::SigType::category("rows"),
                    },
                    runtime_factor: 1.0,
                    price: crate::asset::PricingModel::PayOnce { price: Money::ZERO },
                    required_certificates: vec![],
                },
                node_id: "n1".into(),
            })
            .collect();
        ExecutionPlan {
            site: plan.clone(),
            bindings,
            estimated_runtime_s: 0.0,
            estimated_price: Money::ZERO,
        }
    }

    fn join_plan() -> SitePlan {
        SitePlan {
            root: SiteNode::Aggregate {
                group: vec![rc("customers", "custkey")],
                items: vec![
                    OutItem::Group(rc("customers", "custkey")),
                    OutItem::Agg(ResolvedAgg {
                        func: AggFunc::Sum,
                        arg: Some(rc("orders", "total")),
                    }),
                ],
                region: Region::EU,
                child: Box::new(SiteNode::Join {
                    preds: vec![(rc("customers", "custkey"), rc("orders", "custkey"))],
                    region: Region::EU,
                    left: Box::new(SiteNode::Scan { table: "customers".into(), region: Region::EU }),
                    right: Box::new(SiteNode::Scan { table: "orders".into(), region: Region::EU }),
                }),
            },
        }
    }

    #[test]
    fn join_aggregate_matches_hand_rollup() {
        let reg = registry();
        let db = Database::generate(&reg, 11);
        let est = Estimator::new(&reg, 0.1);
        let ep = bind_all(&join_plan());
        let out = execute_plan(&ep, &db, &est, 100).unwrap();
        assert_eq!(out.columns, vec!["customers.custkey", "sum(orders.total)"]);

        // Hand rollup straight off the generated orders table.
        let mut expect: BTreeMap<i64, i64> = BTreeMap::new();
        for row in &db.tables["orders"].rows {
            let (Value::Int(k), Value::Int(t)) = (&row[0], &row[1]) else { panic!() };
            *expect.entry(*k).or_insert(0) += *t;
        }
        let got: BTreeMap<i64, i64> = out
            .rows
            .iter()
            .map(|r| match (&r[0], &r[1]) {
                (Value::Int(k), Value::Int(t)) => (*k, *t),
                other => panic!("unexpected row {other:?}"),
            })
            .collect();
        assert_eq!(got, expect);

        // One event per operator, rows processed as defined.
        assert_eq!(out.events.len(), 4);
        assert_eq!(out.events[1].amount, 150 + 1500); // join consumes both sides
    }

    #[test]
    fn empty_tables_give_empty_results_and_zero_amount_events() {
        let reg = split_program(
            parse_program("REGISTER TABLE empty AT EU CARD 0 ROWBYTES 8 COLS (k INT);").unwrap(),
        )
        .unwrap()
        .0;
        let db = Database::generate(&reg, 1);
        let est = Estimator::new(&reg, 0.1);
        let plan = SitePlan { root: SiteNode::Scan { table: "empty".into(), region: Region::EU } };
        let out = execute_plan(&bind_all(&plan), &db, &est, 0).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].amount, 0);
    }

    #[test]
    fn shipped_bytes_are_rows_times_width() {
        let reg = registry();
        let db = Database::generate(&reg, 3);
        let est = Estimator::new(&reg, 0.1);
        let plan = SitePlan {
            root: SiteNode::Ship {
                from: Region::EU,
                to: Region::NA,
                child: Box::new(SiteNode::Scan { table: "orders".into(), region: Region::EU }),
            },
        };
        let out = execute_plan(&bind_all(&plan), &db, &est, 0).unwrap();
        let ship_event =
            out.events.iter().find(|e| e.metric == UsageMetric::Bytes).expect("ship event");
        assert_eq!(ship_event.amount, 1500 * 16);
        assert_eq!(ship_event.asset, transfer_asset_id());
    }

    #[test]
    fn sum_overflow_is_reported() {
        let reg = split_program(
            parse_program("REGISTER TABLE t AT EU CARD 2 ROWBYTES 8 COLS (v INT);").unwrap(),
        )
        .unwrap()
        .0;
        let mut db = Database::default();
        let mut table = crate::exec::table::generate_table(reg.get("t").unwrap(), 0);
        table.rows = vec![vec![Value::Int(i64::MAX)], vec![Value::Int(1)]];
        db.insert(table);
        let est = Estimator::new(&reg, 0.1);
        let plan = SitePlan {
            root: SiteNode::Aggregate {
                group: vec![],
                items: vec![OutItem::Agg(ResolvedAgg {
                    func: AggFunc::Sum,
                    arg: Some(rc("t", "v")),
                })],
                region: Region::EU,
                child: Box::new(SiteNode::Scan { table: "t".into(), region: Region::EU }),
            },
        };
        let err = execute_plan(&bind_all(&plan), &db, &est, 0).unwrap_err();
        assert!(matches!(err, ExecError::ArithmeticOverflow(_)));
    }

    #[test]
    fn missing_table_is_reported() {
        let reg = registry();
        let db = Database::default();
        let est = Estimator::new(&reg, 0.1);
        let plan = SitePlan { root: SiteNode::Scan { table: "customers".into(), region: Region::EU } };
        let err = execute_plan(&bind_all(&plan), &db, &est, 0).unwrap_err();
        assert!(matches!(err, ExecError::MissingTable(_)));
    }
}
