//! `run`: plan a program, pick variants and nodes under a budget, execute
//! over generated data and report results plus usage.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::billing::render_usage_log;
use bazaar_core::exec::{
    execute_plan, parse_node_registry, select_variants, AuthorityRegistry, Database,
    ImplementationVariant, NodeExecutorInfo,
};
use bazaar_core::money::Money;
use bazaar_core::plan::{optimize, Optimized};
use bazaar_core::sql::{parse_program, split_program, to_logical_plan};
use clap::Args;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Extended-SQL program; the first SELECT is executed.
    #[arg(long)]
    plan: PathBuf,
    /// Node registry (newline-delimited node documents).
    #[arg(long)]
    nodes: PathBuf,
    /// Budget for the estimated execution price.
    #[arg(long)]
    budget: Option<String>,
    /// Implementation variants (newline-delimited documents). Without it,
    /// every operator gets a free built-in variant.
    #[arg(long)]
    variants: Option<PathBuf>,
    /// Authority registry (JSON map authority -> key).
    #[arg(long)]
    authorities: Option<PathBuf>,
    /// Write the emitted usage events to this file (newline-delimited).
    #[arg(long)]
    emit_usage: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_variants(text: &str) -> Result<Vec<ImplementationVariant>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: ImplementationVariant = serde_json::from_str(line)
            .map_err(|e| Failure::domain(format!("variant line {}: {e}", i + 1)))?;
        v.check().map_err(Failure::domain)?;
        out.push(v);
    }
    Ok(out)
}

/// One free, uncertified variant per operator category.
pub fn builtin_variants() -> Vec<ImplementationVariant> {
    ["scan", "filter", "project", "join", "aggregate"]
        .iter()
        .map(|category| ImplementationVariant {
            asset: bazaar_core::asset::AssetId::new(format!("builtin-{category}")).unwrap(),
            implements: bazaar_core::asset::LogicalSignature {
                goal: category.to_string(),
                input_types: vec![],
                output_type: bazaar_core::asset::SigType::category("rows"),
            },
            runtime_factor: 1.0,
            price: bazaar_core::asset::PricingModel::PayOnce { price: Money::ZERO },
            required_certificates: vec![],
        })
        .collect()
}

pub fn run(ctx: &Ctx, args: RunArgs) -> Result<Outcome, Failure> {
    let stmts = parse_program(&read(&args.plan)?).map_err(|e| Failure::usage(e.to_string()))?;
    let (registry, policies, queries) =
        split_program(stmts).map_err(|e| Failure::usage(e.to_string()))?;
    let Some(query) = queries.first() else {
        return Err(Failure::usage("the program contains no SELECT statement"));
    };

    let nodes: Vec<NodeExecutorInfo> =
        parse_node_registry(&read(&args.nodes)?).map_err(|e| Failure::domain(e.to_string()))?;
    let variants = match &args.variants {
        Some(path) => parse_variants(&read(path)?)?,
        None => builtin_variants(),
    };
    let authorities: AuthorityRegistry = match args
        .authorities
        .as_ref()
        .or(ctx.config.authority_registry.as_ref())
    {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::domain(format!("authority registry: {e}")))?,
        None => AuthorityRegistry::new(),
    };
    let budget = match &args.budget {
        Some(text) => {
            Some(text.parse::<Money>().map_err(|e| Failure::usage(e.to_string()))?)
        }
        None => None,
    };

    let cm = &ctx.config.cost;
    let lp = to_logical_plan(query, &registry).map_err(|e| Failure::usage(e.to_string()))?;
    let best = match optimize(&lp, &policies, cm, &registry, query.target_region)
        .map_err(|e| Failure::domain(e.to_string()))?
    {
        Optimized::Best(best) => best,
        Optimized::NoCompliantPlan => {
            return Ok(Outcome {
                output: "compliant=NC-impossible\n".to_string(),
                failure: Some("no compliant plan exists".to_string()),
            })
        }
    };

    let est = cm.estimator(&registry);
    let ep = select_variants(&best.plan, &variants, &nodes, budget, &est, &authorities, 0)
        .map_err(|e| Failure::domain(e.to_string()))?;

    let db = Database::generate(&registry, ctx.seed);
    let result = execute_plan(&ep, &db, &est, 0).map_err(|e| Failure::domain(e.to_string()))?;

    let mut out = String::new();
    out.push_str(&best.plan.render(None));
    let _ = writeln!(out, "cost={:.4} compliant=C", best.cost);
    out.push_str("bindings:\n");
    for b in &ep.bindings {
        let _ = writeln!(out, "  {}: variant={} node={}", b.label, b.variant.asset, b.node_id);
    }
    let _ = writeln!(
        out,
        "estimated runtime={:.3}s price={}",
        ep.estimated_runtime_s, ep.estimated_price
    );
    let _ = writeln!(out, "rows ({}):", result.rows.len());
    let _ = writeln!(out, "  {}", result.columns.join("\t"));
    for row in &result.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "  {}", cells.join("\t"));
    }
    let _ = writeln!(out, "usage events: {}", result.events.len());
    if let Some(path) = &args.emit_usage {
        std::fs::write(path, render_usage_log(&result.events))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        let _ = writeln!(out, "usage log written to {}", path.display());
    }
    Outcome::ok(out)
}
