//! Cardinality and byte-size estimation from registered table statistics.
//!
//! Estimates are functions of the *logical content* of a subtree (its tables,
//! applied filters, applied join predicates and aggregation), evaluated in a
//! canonical fold order. Two plans computing the same table subset therefore
//! report bit-identical row estimates regardless of tree shape, which keeps
//! plan-cost comparison order-independent.

use crate::sql::{CmpOp, ResolvedCol, ResolvedFilter, TableDef, TableRegistry};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("missing statistics for `{0}`")]
    MissingStats(String),
}

/// Distinct count of a column; defaults to the table's row count (at least 1)
/// when no DISTINCT was registered.
pub fn distinct_of(def: &TableDef, column: &str) -> Result<u64, StatsError> {
    let (_, col) = def
        .column(column)
        .ok_or_else(|| StatsError::MissingStats(format!("{}.{column}", def.name)))?;
    Ok(col.distinct.unwrap_or(def.row_count).max(1))
}

/// Integer per-column widths that sum exactly to the registered row bytes:
/// earlier columns absorb the remainder.
pub fn column_width(def: &TableDef, column: &str) -> Result<u64, StatsError> {
    let (idx, _) = def
        .column(column)
        .ok_or_else(|| StatsError::MissingStats(format!("{}.{column}", def.name)))?;
    let n = def.columns.len() as u64;
    let base = def.row_bytes / n;
    let extra = u64::from((idx as u64) < def.row_bytes % n);
    Ok(base + extra)
}

/// Bytes per aggregate output column.
pub const AGG_OUTPUT_WIDTH: u64 = 8;

/// The logical content of a subtree, from which all estimates derive.
#[derive(Debug, Clone, Default)]
pub struct SubtreeContent {
    /// Table name → filters applied to it anywhere in the subtree.
    pub tables: BTreeMap<String, Vec<ResolvedFilter>>,
    /// Join predicates applied in the subtree.
    pub preds: Vec<(ResolvedCol, ResolvedCol)>,
    /// Group columns and aggregate-output count, when an aggregate applies.
    pub agg: Option<(Vec<ResolvedCol>, usize)>,
}

pub struct Estimator<'a> {
    pub registry: &'a TableRegistry,
    pub default_selectivity: f64,
}

impl<'a> Estimator<'a> {
    pub fn new(registry: &'a TableRegistry, default_selectivity: f64) -> Self {
        Estimator { registry, default_selectivity }
    }

    fn table(&self, name: &str) -> Result<&TableDef, StatsError> {
        self.registry.get(name).ok_or_else(|| StatsError::MissingStats(name.to_string()))
    }

    fn selectivity(&self, f: &ResolvedFilter) -> Result<f64, StatsError> {
        if f.op == CmpOp::Eq {
            let def = self.table(&f.col.table)?;
            Ok(1.0 / distinct_of(def, &f.col.column)? as f64)
        } else {
            Ok(self.default_selectivity)
        }
    }

    /// Row estimate for a subtree's content, folded canonically: tables in
    /// name order (filters sorted within each table), then predicate factors
    /// in canonical key order, then the aggregation cap.
    pub fn content_rows(&self, content: &SubtreeContent) -> Result<f64, StatsError> {
        let mut rows = 1.0f64;
        for (name, filters) in &content.tables {
            let def = self.table(name)?;
            let mut keyed: Vec<(String, f64)> = filters
                .iter()
                .map(|f| Ok((f.to_string(), self.selectivity(f)?)))
                .collect::<Result<_, StatsError>>()?;
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            let mut t_rows = def.row_count as f64;
            for (_, sel) in keyed {
                t_rows *= sel;
            }
            rows *= t_rows;
        }
        let mut factors: Vec<(String, f64)> = Vec::with_capacity(content.preds.len());
        for (l, r) in &content.preds {
            let dl = distinct_of(self.table(&l.table)?, &l.column)?;
            let dr = distinct_of(self.table(&r.table)?, &r.column)?;
            let key = pred_key(l, r);
            factors.push((key, dl.max(dr) as f64));
        }
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, d) in factors {
            rows /= d;
        }
        if let Some((group, _)) = &content.agg {
            let mut cap = 1.0f64;
            for g in group {
                cap *= distinct_of(self.table(&g.table)?, &g.column)? as f64;
            }
            rows = rows.min(cap);
        }
        Ok(rows)
    }

    /// Width in bytes of one row of the content (whole base rows survive
    /// until an aggregate or projection reduces them).
    pub fn content_width(
        &self,
        content: &SubtreeContent,
        project: Option<&[ResolvedCol]>,
    ) -> Result<u64, StatsError> {
        if let Some((group, n_aggs)) = &content.agg {
            let mut w = 0;
            for g in group {
                w += column_width(self.table(&g.table)?, &g.column)?;
            }
            return Ok(w + AGG_OUTPUT_WIDTH * *n_aggs as u64);
        }
        if let Some(cols) = project {
            let mut w = 0;
            for c in cols {
                w += column_width(self.table(&c.table)?, &c.column)?;
            }
            return Ok(w);
        }
        let mut w = 0;
        for name in content.tables.keys() {
            w += self.table(name)?.row_bytes;
        }
        Ok(w)
    }
}

/// Canonical key for an equi-join predicate (orientation-independent).
pub fn pred_key(l: &ResolvedCol, r: &ResolvedCol) -> String {
    let a = l.to_string();
    let b = r.to_string();
    if a <= b {
        format!("{a}={b}")
    } else {
        format!("{b}={a}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse_program, split_program};
    use crate::value::ColumnType;

    fn registry(text: &str) -> TableRegistry {
        let stmts = parse_program(text).unwrap();
        let (reg, _, _) = split_program(stmts).unwrap();
        reg
    }

    fn col(table: &str, column: &str, ty: ColumnType) -> ResolvedCol {
        ResolvedCol { table: table.into(), column: column.into(), ty }
    }

    #[test]
    fn scan_rows_equal_registered_card() {
        let reg = registry("REGISTER TABLE orders AT EU CARD 1500 ROWBYTES 120 COLS (o INT);");
        let est = Estimator::new(&reg, 0.1);
        let mut content = SubtreeContent::default();
        content.tables.insert("orders".into(), vec![]);
        assert_eq!(est.content_rows(&content).unwrap(), 1500.0);
    }

    #[test]
    fn equality_filter_uses_inverse_distinct() {
        // 1000 rows, DISTINCT 10 → equality filter keeps 100.
        let reg =
            registry("REGISTER TABLE t AT EU CARD 1000 ROWBYTES 8 COLS (a INT DISTINCT 10);");
        let est = Estimator::new(&reg, 0.1);
        let mut content = SubtreeContent::default();
        content.tables.insert(
            "t".into(),
            vec![ResolvedFilter {
                col: col("t", "a", ColumnType::Int64),
                op: CmpOp::Eq,
                value: crate::value::Value::Int(3),
            }],
        );
        assert_eq!(est.content_rows(&content).unwrap(), 100.0);
    }

    #[test]
    fn key_foreign_key_join_keeps_child_count() {
        // customers(150) ⋈ orders(1500) on custkey, both sides DISTINCT 150.
        let reg = registry(
            "REGISTER TABLE customers AT EU CARD 150 ROWBYTES 40 COLS (custkey INT DISTINCT 150);\n\
             REGISTER TABLE orders AT EU CARD 1500 ROWBYTES 80 COLS (custkey INT DISTINCT 150);",
        );
        let est = Estimator::new(&reg, 0.1);
        let mut content = SubtreeContent::default();
        content.tables.insert("customers".into(), vec![]);
        content.tables.insert("orders".into(), vec![]);
        content.preds.push((
            col("customers", "custkey", ColumnType::Int64),
            col("orders", "custkey", ColumnType::Int64),
        ));
        assert_eq!(est.content_rows(&content).unwrap(), 1500.0);
    }

    #[test]
    fn widths_apportion_row_bytes_exactly() {
        let reg = registry("REGISTER TABLE t AT EU CARD 10 ROWBYTES 100 COLS (a INT, b INT, c INT);");
        let def = reg.get("t").unwrap();
        let widths: Vec<u64> =
            ["a", "b", "c"].iter().map(|c| column_width(def, c).unwrap()).collect();
        assert_eq!(widths, vec![34, 33, 33]);
        assert_eq!(widths.iter().sum::<u64>(), 100);
    }

    #[test]
    fn missing_table_is_reported() {
        let reg = TableRegistry::new();
        let est = Estimator::new(&reg, 0.1);
        let mut content = SubtreeContent::default();
        content.tables.insert("ghost".into(), vec![]);
        assert!(matches!(est.content_rows(&content), Err(StatsError::MissingStats(_))));
    }
}
