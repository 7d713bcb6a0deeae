//! `bill`: tumbling-window aggregation of a usage log into an invoice,
//! optionally split through a revenue share tree.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::asset::{AssetId, PricingModel};
use bazaar_core::billing::{
    make_invoice, parse_usage_log, split_payment, TrackerConfig, UsageTracker,
};
use bazaar_core::share::RevenueShareTree;
use clap::Args;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct BillArgs {
    /// Usage log (newline-delimited usage events).
    #[arg(long)]
    usage: PathBuf,
    /// Pricing map (JSON object: asset id -> pricing model).
    #[arg(long)]
    pricing: PathBuf,
    /// Billing period as `<start>..<end>` in seconds.
    #[arg(long)]
    period: String,
    /// Emit the machine-readable invoice document instead of the table.
    #[arg(long)]
    json: bool,
    /// Revenue share tree (JSON) to split the invoice total through.
    #[arg(long)]
    split: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_period(text: &str) -> Result<(u64, u64), Failure> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Failure::usage(format!("period `{text}` must be <start>..<end>")))?;
    let start: u64 =
        a.parse().map_err(|_| Failure::usage(format!("bad period start `{a}`")))?;
    let end: u64 = b.parse().map_err(|_| Failure::usage(format!("bad period end `{b}`")))?;
    if end <= start {
        return Err(Failure::usage(format!("period `{text}` is empty")));
    }
    Ok((start, end))
}

pub fn run(ctx: &Ctx, args: BillArgs) -> Result<Outcome, Failure> {
    let events =
        parse_usage_log(&read(&args.usage)?).map_err(|e| Failure::domain(e.to_string()))?;
    let pricing: BTreeMap<AssetId, PricingModel> = serde_json::from_str(&read(&args.pricing)?)
        .map_err(|e| Failure::domain(format!("pricing map: {e}")))?;
    let period = parse_period(&args.period)?;

    let tracker = UsageTracker::new(TrackerConfig {
        window_s: ctx.config.metering_window_s,
        trusted_nodes: None,
    });
    let mut rejected = 0;
    for e in &events {
        if tracker.track(e).is_err() {
            rejected += 1;
        }
    }
    if rejected > 0 {
        eprintln!("warning: {rejected} events rejected (late or overflowing)");
    }
    let last = events.iter().map(|e| e.at).max().unwrap_or(period.1);
    let counters = tracker.flush_window(last.max(period.1) + ctx.config.metering_window_s);

    let invoice =
        make_invoice(&counters, &pricing, period).map_err(|e| Failure::domain(e.to_string()))?;

    let mut out = String::new();
    if args.json {
        out.push_str(&serde_json::to_string_pretty(&invoice).expect("invoice serializes"));
        out.push('\n');
    } else {
        out.push_str(&invoice.render_text());
    }
    if let Some(path) = &args.split {
        let tree: RevenueShareTree = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::domain(format!("share tree: {e}")))?;
        let problems = tree.check();
        if !problems.is_empty() {
            return Err(Failure::domain(format!("share tree: {}", problems.join("; "))));
        }
        out.push_str("split:\n");
        for (beneficiary, amount) in split_payment(invoice.total, &tree) {
            let _ = writeln!(out, "  {beneficiary}  {amount}");
        }
    }
    Outcome::ok(out)
}
