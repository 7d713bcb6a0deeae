//! Random schema/query/policy generator for randomized comparisons against
//! the oracles. Emits extended-SQL program text so generated cases exercise
//! the parser as well.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct GenConfig {
    pub max_tables: usize,
    pub max_rows: u64,
    pub regions: Vec<&'static str>,
    pub policy_count: std::ops::RangeInclusive<usize>,
    pub aggregate_probability: f64,
    pub filter_probability: f64,
    pub target_probability: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_tables: 4,
            max_rows: 60,
            regions: vec!["EU", "NA", "AS"],
            policy_count: 0..=3,
            aggregate_probability: 0.4,
            filter_probability: 0.6,
            target_probability: 0.3,
        }
    }
}

/// One random program: registrations, zero or more policies, one SELECT.
pub fn random_program(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> String {
    let n_tables = rng.random_range(1..=cfg.max_tables);
    let mut text = String::new();

    // Every table gets a joinable `j` column over a shared small domain, a
    // filterable `v` column, and a couple of payload columns.
    let mut rows_of = Vec::new();
    for i in 0..n_tables {
        let rows = rng.random_range(1..=cfg.max_rows);
        rows_of.push(rows);
        let region = cfg.regions[rng.random_range(0..cfg.regions.len())];
        let row_bytes = rng.random_range(8..=64);
        let dj = rng.random_range(1..=rows);
        let dv = rng.random_range(1..=rows);
        text.push_str(&format!(
            "REGISTER TABLE t{i} AT {region} CARD {rows} ROWBYTES {row_bytes} \
             COLS (k INT DISTINCT {rows}, j INT DISTINCT {dj}, v INT DISTINCT {dv}, f FLOAT);\n"
        ));
    }

    for _ in 0..rng.random_range(cfg.policy_count.clone()) {
        let from = cfg.regions[rng.random_range(0..cfg.regions.len())];
        if rng.random_bool(0.5) {
            let to = loop {
                let candidate = if rng.random_bool(0.25) {
                    "ANY"
                } else {
                    cfg.regions[rng.random_range(0..cfg.regions.len())]
                };
                if candidate != from {
                    break candidate;
                }
            };
            text.push_str(&format!("CONSTRAINT DENY SHIP FROM {from} TO {to};\n"));
        } else {
            text.push_str(&format!("CONSTRAINT ALLOW ONLY AGGREGATED FROM {from};\n"));
        }
    }

    // Spanning-tree join predicates keep the join graph connected.
    let mut preds = Vec::new();
    for i in 1..n_tables {
        let j = rng.random_range(0..i);
        preds.push(format!("t{i}.j = t{j}.j"));
    }
    let mut filters = Vec::new();
    for i in 0..n_tables {
        if rng.random_bool(cfg.filter_probability) {
            let lit = rng.random_range(0..=cfg.max_rows);
            let op = ["=", "<", ">", "<=", ">=", "!="][rng.random_range(0..6)];
            filters.push(format!("t{i}.v {op} {lit}"));
        }
    }

    let mut group_col = None;
    let items = if rng.random_bool(cfg.aggregate_probability) {
        let g = rng.random_range(0..n_tables);
        let s = rng.random_range(0..n_tables);
        group_col = Some(format!("t{g}.j"));
        format!("t{g}.j, COUNT(*), SUM(t{s}.v), MIN(t{s}.k)")
    } else {
        let a = rng.random_range(0..n_tables);
        let b = rng.random_range(0..n_tables);
        format!("t{a}.k, t{b}.v")
    };

    text.push_str(&format!("SELECT {items} FROM "));
    text.push_str(&(0..n_tables).map(|i| format!("t{i}")).collect::<Vec<_>>().join(", "));
    let conjuncts: Vec<String> = preds.into_iter().chain(filters).collect();
    if !conjuncts.is_empty() {
        text.push_str(" WHERE ");
        text.push_str(&conjuncts.join(" AND "));
    }
    if let Some(g) = group_col {
        text.push_str(&format!(" GROUP BY {g}"));
    }
    if rng.random_bool(cfg.target_probability) {
        let t = cfg.regions[rng.random_range(0..cfg.regions.len())];
        text.push_str(&format!(" AT {t}"));
    }
    text.push_str(";\n");
    text
}
