//! `plan`: parse a program, optimize every SELECT under the session
//! policies, print the plan trees with their cost lines.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::plan::{optimize, Optimized};
use bazaar_core::sql::{parse_program, split_program, to_logical_plan};
use std::fmt::Write as _;
use std::path::Path;

pub fn run(ctx: &Ctx, sql: &Path, explain: bool) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(sql)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", sql.display())))?;
    let stmts = parse_program(&text).map_err(|e| Failure::usage(e.to_string()))?;
    let (registry, policies, queries) =
        split_program(stmts).map_err(|e| Failure::usage(e.to_string()))?;
    if queries.is_empty() {
        return Err(Failure::usage("the program contains no SELECT statement"));
    }
    if ctx.verbose {
        for p in &policies {
            eprintln!("policy: {p}");
        }
    }

    let cm = &ctx.config.cost;
    let est = cm.estimator(&registry);
    let mut out = String::new();
    let mut blocked = 0;
    for (i, q) in queries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let lp = to_logical_plan(q, &registry).map_err(|e| Failure::usage(e.to_string()))?;
        match optimize(&lp, &policies, cm, &registry, q.target_region)
            .map_err(|e| Failure::domain(e.to_string()))?
        {
            Optimized::Best(best) => {
                let tree = best.plan.render(if explain { Some(&est) } else { None });
                out.push_str(&tree);
                let _ = writeln!(out, "cost={:.4} compliant=C", best.cost);
            }
            Optimized::NoCompliantPlan => {
                out.push_str("compliant=NC-impossible\n");
                blocked += 1;
            }
        }
    }
    Ok(Outcome {
        output: out,
        failure: (blocked > 0)
            .then(|| format!("{blocked} quer{} without a compliant plan", if blocked == 1 { "y" } else { "ies" })),
    })
}
