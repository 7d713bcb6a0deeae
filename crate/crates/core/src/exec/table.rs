//! In-memory tables and deterministic data generation from registered
//! statistics.
//!
//! Generation honors the stats the optimizer plans with: a column whose
//! distinct count equals the row count becomes a unique key 0..n, anything
//! else draws uniformly from its distinct domain, so key–foreign-key joins
//! behave the way the estimates predict.

use crate::sql::{ColumnDef, TableDef, TableRegistry};
use crate::value::{ColumnType, Value};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Table {
    pub def: TableDef,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Default)]
pub struct Database {
    pub tables: BTreeMap<String, Table>,
}

impl Database {
    pub fn generate(registry: &TableRegistry, seed: u64) -> Database {
        let mut db = Database::default();
        for def in registry.values() {
            db.tables.insert(def.name.clone(), generate_table(def, seed));
        }
        db
    }

    pub fn insert(&mut self, table: Table) {
        self.tables.insert(table.def.name.clone(), table);
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn make_value(col: &ColumnDef, n: u64) -> Value {
    match col.ty {
        ColumnType::Int64 => Value::Int(n as i64),
        ColumnType::Float64 => Value::Float(n as f64 + 0.25),
        ColumnType::Text => Value::Text(format!("{}_{n}", col.name)),
        ColumnType::Bool => Value::Bool(n % 2 == 1),
        ColumnType::Date => Value::Date(10_957 + n as i64), // counting from 2000-01-01
    }
}

/// Deterministic for a (definition, seed) pair.
pub fn generate_table(def: &TableDef, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&def.name));
    let mut rows = Vec::with_capacity(def.row_count as usize);
    for i in 0..def.row_count {
        let mut row = Vec::with_capacity(def.columns.len());
        for col in &def.columns {
            let d = col.distinct.unwrap_or(def.row_count).max(1);
            let n = if d == def.row_count { i } else { rng.random_range(0..d) };
            row.push(make_value(col, n));
        }
        rows.push(row);
    }
    Table { def: def.clone(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse_program, split_program};

    fn registry(text: &str) -> TableRegistry {
        split_program(parse_program(text).unwrap()).unwrap().0
    }

    #[test]
    fn generation_is_deterministic_and_sized() {
        let reg = registry(
            "REGISTER TABLE t AT EU CARD 100 ROWBYTES 24 COLS (k INT DISTINCT 100, v INT DISTINCT 7, s TEXT DISTINCT 3);",
        );
        let a = Database::generate(&reg, 42);
        let b = Database::generate(&reg, 42);
        let t = &a.tables["t"];
        assert_eq!(t.rows.len(), 100);
        assert_eq!(t.rows, b.tables["t"].rows);
        // Key column is unique; low-cardinality columns stay in domain.
        let keys: std::collections::BTreeSet<_> = t.rows.iter().map(|r| r[0].clone()).collect();
        assert_eq!(keys.len(), 100);
        assert!(t.rows.iter().all(|r| matches!(&r[1], Value::Int(v) if (0..7).contains(v))));
    }

    #[test]
    fn key_foreign_key_join_counts_match_estimates() {
        // customers(150) with unique custkey; orders(1500) with custkey drawn
        // from the same 150-value domain: every order matches exactly one
        // customer, so the join yields 1500 rows like the estimate.
        let reg = registry(
            "REGISTER TABLE customers AT EU CARD 150 ROWBYTES 8 COLS (custkey INT DISTINCT 150);\n\
             REGISTER TABLE orders AT EU CARD 1500 ROWBYTES 8 COLS (custkey INT DISTINCT 150);",
        );
        let db = Database::generate(&reg, 7);
        let keys: std::collections::BTreeSet<Value> =
            db.tables["customers"].rows.iter().map(|r| r[0].clone()).collect();
        let matches: usize = db.tables["orders"]
            .rows
            .iter()
            .filter(|r| keys.contains(&r[0]))
            .count();
        assert_eq!(matches, 1500);
    }
}
