//! `demo bob|alice|charlie`: scripted walkthroughs of the three flows
//! (compose-and-publish, discover-and-improve, match-execute-settle) over a deterministic in-memory world.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::asset::{
    compose_pipeline, validate_descriptor, AssetDescriptor, AssetId, AssetKind, LogicalSignature,
    PricingModel, QualityMetric, SigType, UsageMeter,
};
use bazaar_core::billing::{
    make_invoice, settle, InMemoryLedger, PaymentTxn, TrackerConfig, UsageTracker,
};
use bazaar_core::catalog::{aggregate, MatchWeights, Marketplace, QualityBound, Request};
use bazaar_core::exec::{
    execute_plan, select_variants, AuthorityRegistry, Database, ImplementationVariant,
    NodeExecutorInfo,
};
use bazaar_core::money::Money;
use bazaar_core::plan::{optimize, Optimized};
use bazaar_core::region::Region;
use bazaar_core::share::{split_payment, RevenueShareTree, Share};
use bazaar_core::sql::{parse_program, split_program, to_logical_plan};
use clap::Subcommand;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Persona {
    /// Compose a dataset with market algorithms and publish the result.
    Bob,
    /// Discover Bob's asset, improve it, contribute the improvement back.
    Alice,
    /// Match under a quality bound, execute under a budget, settle payments.
    Charlie,
}

fn money(units: i64, cents: i64) -> Money {
    Money::from_micro(units * 1_000_000 + cents * 10_000)
}

fn descriptor(
    id: &str,
    kind: AssetKind,
    provider: &str,
    goal: &str,
    inputs: Vec<SigType>,
    output: SigType,
    pricing: PricingModel,
) -> AssetDescriptor {
    AssetDescriptor {
        id: AssetId::new(id).expect("demo ids are valid"),
        kind,
        name: id.replace('-', " "),
        provider: provider.to_string(),
        version: "1.0.0".to_string(),
        signature: LogicalSignature { goal: goal.to_string(), input_types: inputs, output_type: output },
        quality: vec![],
        pricing,
        usage_constraints: vec![],
        required_certificates: vec![],
        region: None,
        revenue_share: None,
        graph: None,
    }
}

fn with_mae(mut d: AssetDescriptor, mae: f64) -> AssetDescriptor {
    d.quality.push(QualityMetric { name: "mae".into(), value: mae, unit: "eur".into() });
    d
}

/// The public marketplace Bob browses.
fn berlin_market() -> Marketplace {
    let mut market = Marketplace::new("berlin-data");
    let mut crime = descriptor(
        "crime-rate-berlin",
        AssetKind::DataSource,
        "statsberlin",
        "join-augment",
        vec![],
        SigType::category("crime-table"),
        PricingModel::PayPerUse { rate: money(1, 0), metric: UsageMeter::PerMegabyte },
    );
    crime.region = Some(Region::EU);
    market.publish(crime).unwrap();
    market
        .publish(descriptor(
            "join-augment",
            AssetKind::Algorithm,
            "datasmiths",
            "join-augment",
            vec![SigType::category("feature-table"), SigType::category("crime-table")],
            SigType::category("feature-table"),
            PricingModel::PayOnce { price: money(1, 0) },
        ))
        .unwrap();
    market
        .publish(with_mae(
            descriptor(
                "elastic-net",
                AssetKind::Algorithm,
                "mlworks",
                "regression",
                vec![SigType::category("feature-table")],
                SigType::category("price-predictor"),
                PricingModel::PayOnce { price: money(3, 0) },
            ),
            4800.0,
        ))
        .unwrap();
    market
        .publish(with_mae(
            descriptor(
                "bargain-regressor",
                AssetKind::Algorithm,
                "cutcorners",
                "regression",
                vec![SigType::category("feature-table")],
                SigType::category("price-predictor"),
                PricingModel::PayOnce { price: money(0, 50) },
            ),
            7800.0,
        ))
        .unwrap();
    market
}

fn bob_dataset() -> AssetDescriptor {
    let mut d = descriptor(
        "real-estate-berlin",
        AssetKind::DataSource,
        "bob",
        "join-augment",
        vec![],
        SigType::category("feature-table"),
        PricingModel::PayPerUse { rate: money(0, 50), metric: UsageMeter::PerMegabyte },
    );
    d.region = Some(Region::EU);
    d
}

fn bob_shares() -> RevenueShareTree {
    RevenueShareTree::node(
        "gross",
        Share::new(1, 1),
        vec![
            RevenueShareTree::leaf("bob", Share::new(2, 5)),
            RevenueShareTree::node(
                "components",
                Share::new(3, 5),
                vec![
                    RevenueShareTree::leaf("statsberlin", Share::new(1, 3)),
                    RevenueShareTree::leaf("datasmiths", Share::new(1, 3)),
                    RevenueShareTree::leaf("mlworks", Share::new(1, 3)),
                ],
            ),
        ],
    )
}

/// Bob's composed pipeline asset, built through the real composition path.
fn bob_model(market: &Marketplace) -> Result<AssetDescriptor, Failure> {
    let parts: Vec<AssetDescriptor> = ["crime-rate-berlin", "join-augment", "elastic-net"]
        .iter()
        .map(|id| market.get(&AssetId::new(*id).unwrap()).expect("seeded asset").clone())
        .chain([bob_dataset()])
        .collect();
    let edges = vec![
        ("real-estate-berlin".to_string(), 0, "join-augment".to_string(), 0),
        ("crime-rate-berlin".to_string(), 0, "join-augment".to_string(), 1),
        ("join-augment".to_string(), 0, "elastic-net".to_string(), 0),
    ];
    let graph = compose_pipeline(&parts, &edges, Some("bob"))
        .map_err(|e| Failure::domain(e.to_string()))?;
    let mut model = with_mae(
        descriptor(
            "bob-price-model",
            AssetKind::Pipeline,
            "bob",
            "regression",
            vec![],
            SigType::category("price-predictor"),
            PricingModel::PayOnce { price: money(20, 0) },
        ),
        4800.0,
    );
    model.graph = Some(graph);
    model.revenue_share = Some(bob_shares());
    Ok(model)
}

fn alice_model() -> AssetDescriptor {
    let mut model = with_mae(
        descriptor(
            "alice-price-model",
            AssetKind::Pipeline,
            "alice",
            "regression",
            vec![],
            SigType::category("price-predictor"),
            PricingModel::PayOnce { price: money(18, 0) },
        ),
        4400.0,
    );
    let scaling = descriptor(
        "feature-scaling",
        AssetKind::Algorithm,
        "alice",
        "feature-scaling",
        vec![SigType::category("feature-table")],
        SigType::category("feature-table"),
        PricingModel::PayOnce { price: Money::ZERO },
    );
    let linreg = with_mae(
        descriptor(
            "linear-regression",
            AssetKind::Algorithm,
            "mlworks",
            "regression",
            vec![SigType::category("feature-table")],
            SigType::category("price-predictor"),
            PricingModel::PayOnce { price: money(2, 0) },
        ),
        4400.0,
    );
    let edges = vec![
        ("real-estate-berlin".to_string(), 0, "feature-scaling".to_string(), 0),
        ("feature-scaling".to_string(), 0, "linear-regression".to_string(), 0),
    ];
    let graph = compose_pipeline(&[bob_dataset(), scaling, linreg], &edges, Some("alice"))
        .expect("alice's chain is well-typed");
    model.graph = Some(graph);
    model.revenue_share = Some(RevenueShareTree::node(
        "gross",
        Share::new(1, 1),
        vec![
            RevenueShareTree::leaf("alice", Share::new(2, 5)),
            RevenueShareTree::node(
                "components",
                Share::new(3, 5),
                vec![
                    RevenueShareTree::leaf("mlworks", Share::new(1, 2)),
                    RevenueShareTree::leaf("bob", Share::new(1, 2)),
                ],
            ),
        ],
    ));
    model
}

/// Alice's lab market: her improved model plus the algorithm she used.
fn alice_market() -> Marketplace {
    let mut market = Marketplace::new("alice-lab");
    market
        .publish(with_mae(
            descriptor(
                "linear-regression",
                AssetKind::Algorithm,
                "mlworks",
                "regression",
                vec![SigType::category("feature-table")],
                SigType::category("price-predictor"),
                PricingModel::PayOnce { price: money(2, 0) },
            ),
            4400.0,
        ))
        .unwrap();
    market.publish(alice_model()).unwrap();
    market
}

pub fn run(ctx: &Ctx, persona: Persona) -> Result<Outcome, Failure> {
    match persona {
        Persona::Bob => bob(ctx),
        Persona::Alice => alice(ctx),
        Persona::Charlie => charlie(ctx),
    }
}

fn bob(_ctx: &Ctx) -> Result<Outcome, Failure> {
    let mut out = String::new();
    let mut market = berlin_market();
    let _ = writeln!(out, "[bob] browsing marketplace `{}` ({} assets)", market.name(), market.len());

    let idx = market.to_index();
    let hits = idx.search(&["crime".to_string()]);
    for id in &hits {
        let e = idx.get(id).unwrap();
        let _ = writeln!(out, "[bob] search \"crime\": {id} by {} ({})", e.descriptor.provider, e.descriptor.pricing);
    }

    let _ = writeln!(out, "[bob] composing real-estate-berlin + crime-rate-berlin -> join-augment -> elastic-net");
    let model = bob_model(&market)?;
    let graph = model.graph.as_ref().unwrap();
    let _ = writeln!(out, "[bob] composition ok: {} nodes, {} edges", graph.nodes.len(), graph.edges.len());

    let report = validate_descriptor(&model);
    let _ = writeln!(out, "[bob] validation: {}", if report.is_ok() { "ok" } else { "failed" });
    let payout_preview = split_payment(money(20, 0), model.revenue_share.as_ref().unwrap());
    for (who, amount) in payout_preview {
        let _ = writeln!(out, "[bob]   share per $20.00 sale: {who} gets {amount}");
    }

    let id = market.publish(model).map_err(|e| Failure::domain(e.to_string()))?;
    let _ = writeln!(out, "[bob] published `{id}` to `{}`", market.name());
    let idx = market.to_index();
    let findable = idx.search(&["price".to_string(), "model".to_string()]);
    let _ = writeln!(out, "[bob] now findable by keyword: {}", findable.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", "));
    Outcome::ok(out)
}

fn alice(_ctx: &Ctx) -> Result<Outcome, Failure> {
    let mut out = String::new();
    let mut berlin = berlin_market();
    let bob_id = berlin.publish(bob_model(&berlin)?).map_err(|e| Failure::domain(e.to_string()))?;
    let _ = writeln!(out, "[alice] markets online: `{}` (with `{bob_id}`)", berlin.name());

    let idx = berlin.to_index();
    let request = Request {
        goal: "regression".to_string(),
        required_output: SigType::category("price-predictor"),
        quality_bounds: vec![],
        budget: None,
        keywords: vec!["pipeline".to_string()],
    };
    let found = idx.match_request(&request, MatchWeights::default());
    for e in &found.entries {
        let _ = writeln!(out, "[alice] found composed asset: {} (score {:.4})", e.candidate.key(), e.score);
    }

    let _ = writeln!(out, "[alice] improving it: feature-scaling + linear-regression (mae 4400 < 4800)");
    let improved = alice_model();
    let report = validate_descriptor(&improved);
    let _ = writeln!(out, "[alice] validation: {}", if report.is_ok() { "ok" } else { "failed" });

    let lab = alice_market();
    let _ = writeln!(out, "[alice] published `alice-price-model` and `linear-regression` to `{}`", lab.name());

    let combined = aggregate(&[&berlin, &lab]).map_err(|e| Failure::domain(e.to_string()))?;
    let _ = writeln!(out, "[alice] aggregated index covers {} assets across 2 markets", combined.len());
    let class = combined
        .equivalents(&AssetId::new("linear-regression").unwrap())
        .map_err(|e| Failure::domain(e.to_string()))?;
    let names: Vec<String> = class.iter().map(|id| id.to_string()).collect();
    let _ = writeln!(out, "[alice] logically equivalent regressors: [{}]", names.join(", "));
    let class = combined.equivalents(&AssetId::new("alice-price-model").unwrap()).unwrap();
    let names: Vec<String> = class.iter().map(|id| id.to_string()).collect();
    let _ = writeln!(out, "[alice] logically equivalent pipelines: [{}]", names.join(", "));
    Outcome::ok(out)
}

const CHARLIE_SQL: &str = "\
REGISTER TABLE listings AT EU CARD 1200 ROWBYTES 96 COLS (l_id INT DISTINCT 1200, l_district INT DISTINCT 12, l_price INT DISTINCT 400, l_rooms INT DISTINCT 6);\n\
REGISTER TABLE crime AT EU CARD 240 ROWBYTES 24 COLS (c_district INT DISTINCT 12, c_rate INT DISTINCT 40, c_year INT DISTINCT 20);\n\
CONSTRAINT ALLOW ONLY AGGREGATED FROM EU;\n\
SELECT listings.l_district, COUNT(*), AVG(listings.l_price) FROM listings, crime \
 WHERE listings.l_district = crime.c_district AND crime.c_year >= 15 \
 GROUP BY listings.l_district AT NA;\n";

fn charlie_nodes(authorities: &AuthorityRegistry) -> Vec<NodeExecutorInfo> {
    let cert = |node: &str| authorities.issue("metering-guild", "usage-tracking", node, 1_000_000).unwrap();
    vec![
        NodeExecutorInfo {
            node_id: "eu-fast".into(),
            region: Region::EU,
            capabilities: ["relational".to_string()].into(),
            certificates: vec![cert("eu-fast")],
            price: PricingModel::PayPerUse { rate: money(2, 0), metric: UsageMeter::PerHour },
            speed_factor: 2.0,
        },
        NodeExecutorInfo {
            node_id: "eu-cheap".into(),
            region: Region::EU,
            capabilities: ["relational".to_string()].into(),
            certificates: vec![cert("eu-cheap")],
            price: PricingModel::PayPerUse { rate: money(1, 0), metric: UsageMeter::PerHour },
            speed_factor: 1.0,
        },
    ]
}

fn trainer_variants() -> Vec<ImplementationVariant> {
    let mut variants = crate::commands::run::builtin_variants();
    variants.retain(|v| v.implements.goal != "aggregate");
    let sig = LogicalSignature {
        goal: "aggregate".to_string(),
        input_types: vec![SigType::category("rows")],
        output_type: SigType::category("rows"),
    };
    variants.push(ImplementationVariant {
        asset: AssetId::new("linreg-trainer").unwrap(),
        implements: sig.clone(),
        runtime_factor: 4.0,
        price: PricingModel::PayPerUse {
            rate: Money::from_micro(2_000),
            metric: UsageMeter::PerThousandCalls,
        },
        required_certificates: vec![],
    });
    variants.push(ImplementationVariant {
        asset: AssetId::new("neural-trainer").unwrap(),
        implements: sig,
        runtime_factor: 1.0,
        price: PricingModel::PayPerUse {
            rate: money(2, 0),
            metric: UsageMeter::PerThousandCalls,
        },
        required_certificates: vec![],
    });
    variants
}

fn charlie(ctx: &Ctx) -> Result<Outcome, Failure> {
    let mut out = String::new();

    // Discovery: predictors with average error below 5000, within budget.
    let mut berlin = berlin_market();
    berlin.publish(bob_model(&berlin)?).map_err(|e| Failure::domain(e.to_string()))?;
    let lab = alice_market();
    let idx = aggregate(&[&berlin, &lab]).map_err(|e| Failure::domain(e.to_string()))?;
    let request = Request {
        goal: "regression".to_string(),
        required_output: SigType::category("price-predictor"),
        quality_bounds: vec![QualityBound::max("mae", 5000.0)],
        budget: Some(money(50, 0)),
        keywords: vec![],
    };
    let _ = writeln!(out, "[charlie] request: regression -> price-predictor, mae <= 5000, budget $50.00");
    let matches = idx.match_request(&request, ctx.config.match_weights);
    for (rank, e) in matches.entries.iter().enumerate() {
        let eq: Vec<String> = e.equivalents.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "[charlie] {}. {} score={:.4} equivalents=[{}]", rank + 1, e.candidate.key(), e.score, eq.join(", "));
    }

    // Planning: the training feature query, compliant with the EU rule.
    let stmts = parse_program(CHARLIE_SQL).expect("demo program parses");
    let (registry, policies, queries) = split_program(stmts).expect("demo program splits");
    let query = &queries[0];
    let lp = to_logical_plan(query, &registry).expect("demo program lowers");
    let best = match optimize(&lp, &policies, &ctx.config.cost, &registry, query.target_region)
        .map_err(|e| Failure::domain(e.to_string()))?
    {
        Optimized::Best(best) => best,
        Optimized::NoCompliantPlan => return Err(Failure::domain("demo query has no compliant plan")),
    };
    let _ = writeln!(out, "[charlie] compliant training plan (aggregates before leaving the EU):");
    for line in best.plan.render(None).lines() {
        let _ = writeln!(out, "[charlie]   {line}");
    }
    let _ = writeln!(out, "[charlie]   cost={:.4} compliant=C", best.cost);

    // Placement: equivalent trainers under two budgets.
    let mut authorities = AuthorityRegistry::new();
    authorities.register("metering-guild", "mg-key");
    let nodes = charlie_nodes(&authorities);
    let variants = trainer_variants();
    let est = ctx.config.cost.estimator(&registry);

    let tight = select_variants(&best.plan, &variants, &nodes, Some(money(4, 0)), &est, &authorities, 0)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let tight_pick = tight.bindings.iter().find(|b| b.label.starts_with("AGG")).expect("agg bound");
    let _ = writeln!(
        out,
        "[charlie] budget $4.00 -> {} (runtime {:.1}s, price {})",
        tight_pick.variant.asset, tight.estimated_runtime_s, tight.estimated_price
    );
    let loose = select_variants(&best.plan, &variants, &nodes, Some(money(20, 0)), &est, &authorities, 0)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let loose_pick = loose.bindings.iter().find(|b| b.label.starts_with("AGG")).expect("agg bound");
    let _ = writeln!(
        out,
        "[charlie] budget $20.00 -> {} (runtime {:.1}s, price {})",
        loose_pick.variant.asset, loose.estimated_runtime_s, loose.estimated_price
    );
    let _ = writeln!(out, "[charlie] the faster equivalent fits the real budget; running it");

    // Execution over generated data, with metering.
    let db = Database::generate(&registry, ctx.seed);
    let result = execute_plan(&loose, &db, &est, 30).map_err(|e| Failure::domain(e.to_string()))?;
    let _ = writeln!(out, "[charlie] execution: {} result rows, {} usage events", result.rows.len(), result.events.len());
    for row in result.rows.iter().take(3) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "[charlie]   {}", cells.join("\t"));
    }

    // Metering: only certified nodes may report usage.
    let trusted = nodes
        .iter()
        .filter(|n| {
            bazaar_core::exec::verify_certificates(
                n,
                &[bazaar_core::asset::CertRequirement {
                    property: "usage-tracking".into(),
                    trusted_authorities: ["metering-guild".to_string()].into(),
                }],
                0,
                &authorities,
            )
            .unwrap_or(false)
        })
        .map(|n| n.node_id.clone())
        .collect();
    let tracker = UsageTracker::new(TrackerConfig { window_s: ctx.config.metering_window_s, trusted_nodes: Some(trusted) });
    for e in &result.events {
        tracker.track(e).map_err(|e| Failure::domain(e.to_string()))?;
    }
    let counters = tracker.flush_window(3_600);
    let _ = writeln!(out, "[charlie] windowed counters: {}", counters.len());

    // Billing: invoice the metered usage.
    let mut pricing: BTreeMap<AssetId, PricingModel> = BTreeMap::new();
    for v in &variants {
        pricing.insert(v.asset.clone(), v.price.clone());
    }
    pricing.insert(
        bazaar_core::exec::transfer_asset_id(),
        PricingModel::PayPerUse { rate: money(1, 0), metric: UsageMeter::PerMegabyte },
    );
    let invoice = make_invoice(&counters, &pricing, (0, 3_600)).map_err(|e| Failure::domain(e.to_string()))?;
    for line in invoice.render_text().lines() {
        let _ = writeln!(out, "[charlie]   {line}");
    }

    // Settlement: split through Alice's share tree and settle on the ledger.
    let alice_tree = alice_model().revenue_share.expect("alice's model carries shares");
    let payouts = split_payment(invoice.total, &alice_tree);
    let conserved: Money = payouts.iter().map(|(_, m)| *m).sum();
    let _ = writeln!(out, "[charlie] split of {} (conserved: {}):", invoice.total, conserved);
    let mut ledger = InMemoryLedger::new();
    let mut txns = Vec::new();
    for (i, (who, amount)) in payouts.iter().enumerate() {
        let _ = writeln!(out, "[charlie]   {who}: {amount}");
        if *amount > Money::ZERO {
            txns.push(
                PaymentTxn::new(format!("pay-{i}"), "charlie", who.clone(), *amount)
                    .expect("positive amounts"),
            );
        }
    }
    let receipts = settle(&mut txns, &mut ledger);
    for r in &receipts {
        let _ = writeln!(out, "[charlie] settled {}: {:?} after {} attempt(s)", r.txn_id, r.status, r.attempts);
    }
    let _ = writeln!(out, "[charlie] ledger: alice={} bob={} mlworks={} charlie={}",
        ledger.balance("alice"), ledger.balance("bob"), ledger.balance("mlworks"), ledger.balance("charlie"));
    Outcome::ok(out)
}
