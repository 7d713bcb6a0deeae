//! `catalog publish|search|match` over newline-delimited marketplace files.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::asset::{parse_descriptor, serialize_descriptor, AssetDescriptor, SigType};
use bazaar_core::catalog::{aggregate, MarketIndex, Marketplace, QualityBound, Request};
use bazaar_core::money::Money;
use clap::{Args, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Validate and add descriptors to a marketplace file.
    Publish {
        /// Marketplace store (newline-delimited descriptor documents).
        #[arg(long)]
        market: PathBuf,
        /// Descriptor documents: single JSON objects or newline-delimited
        /// bulk files.
        files: Vec<PathBuf>,
    },
    /// Keyword search across marketplaces.
    Search {
        #[arg(long = "market")]
        markets: Vec<PathBuf>,
        keywords: Vec<String>,
    },
    /// Declarative matchmaking across marketplaces.
    Match(MatchArgs),
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long = "market")]
    markets: Vec<PathBuf>,
    /// Goal category, e.g. `regression`.
    #[arg(long)]
    goal: String,
    /// Required output category.
    #[arg(long)]
    output: String,
    /// Quality bounds like `mae<=5000` or `accuracy>=0.9`.
    #[arg(long = "bound")]
    bounds: Vec<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long = "keyword")]
    keywords: Vec<String>,
}

fn load_market(path: &Path) -> Result<Marketplace, Failure> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "market".to_string());
    let mut market = Marketplace::new(name);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let d = parse_descriptor(line.as_bytes()).map_err(|e| {
                Failure::domain(format!("{} line {}: {e}", path.display(), i + 1))
            })?;
            market.publish(d).map_err(|e| {
                Failure::domain(format!("{} line {}: {e}", path.display(), i + 1))
            })?;
        }
    }
    Ok(market)
}

fn store_market(path: &Path, market: &Marketplace) -> Result<(), Failure> {
    let mut text = String::new();
    for d in market.descriptors() {
        let doc = serialize_descriptor(d);
        let compact: serde_json::Value = serde_json::from_slice(&doc).expect("own output");
        text.push_str(&serde_json::to_string(&compact).expect("re-serializes"));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn read_descriptors(path: &Path) -> Result<Vec<AssetDescriptor>, Failure> {
    let text = std::fs::read(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    // A single JSON object, or one object per line.
    if let Ok(d) = parse_descriptor(&text) {
        return Ok(vec![d]);
    }
    let text = String::from_utf8(text)
        .map_err(|_| Failure::usage(format!("{} is not UTF-8", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let d = parse_descriptor(line.as_bytes())
            .map_err(|e| Failure::domain(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(d);
    }
    if out.is_empty() {
        return Err(Failure::usage(format!("{} contains no descriptors", path.display())));
    }
    Ok(out)
}

fn build_index(ctx: &Ctx, flags: &[PathBuf]) -> Result<MarketIndex, Failure> {
    let paths: Vec<PathBuf> =
        if flags.is_empty() { ctx.config.marketplaces.clone() } else { flags.to_vec() };
    if paths.is_empty() {
        return Err(Failure::usage(
            "no marketplaces: pass --market or list them in the config",
        ));
    }
    let markets: Vec<Marketplace> =
        paths.iter().map(|p| load_market(p)).collect::<Result<_, _>>()?;
    let refs: Vec<&Marketplace> = markets.iter().collect();
    aggregate(&refs).map_err(|e| Failure::domain(e.to_string()))
}

fn parse_bound(text: &str) -> Result<QualityBound, Failure> {
    let (metric, bound) = if let Some((m, v)) = text.split_once("<=") {
        (m, v.parse::<f64>().map(|v| QualityBound::max(m.trim(), v)))
    } else if let Some((m, v)) = text.split_once(">=") {
        (m, v.parse::<f64>().map(|v| QualityBound::min(m.trim(), v)))
    } else {
        return Err(Failure::usage(format!("bound `{text}` must look like metric<=value")));
    };
    bound.map_err(|_| Failure::usage(format!("bad bound value in `{text}` for {metric}")))
}

pub fn run(ctx: &Ctx, action: CatalogAction) -> Result<Outcome, Failure> {
    match action {
        CatalogAction::Publish { market, files } => {
            if files.is_empty() {
                return Err(Failure::usage("nothing to publish"));
            }
            let mut store = load_market(&market)?;
            let mut out = String::new();
            for file in &files {
                for d in read_descriptors(file)? {
                    let id = store.publish(d).map_err(|e| Failure::domain(e.to_string()))?;
                    let _ = writeln!(out, "published {id}");
                }
            }
            store_market(&market, &store)?;
            let _ = writeln!(out, "{} assets in {}", store.len(), market.display());
            Outcome::ok(out)
        }
        CatalogAction::Search { markets, keywords } => {
            let idx = build_index(ctx, &markets)?;
            let mut out = String::new();
            for id in idx.search(&keywords) {
                let entry = idx.get(&id).expect("searched id");
                let _ = writeln!(
                    out,
                    "{id}  [{}]  {}  {}",
                    entry.market, entry.descriptor.name, entry.descriptor.pricing
                );
            }
            Outcome::ok(out)
        }
        CatalogAction::Match(args) => {
            let idx = build_index(ctx, &args.markets)?;
            let budget = match &args.budget {
                Some(text) => Some(
                    text.parse::<Money>().map_err(|e| Failure::usage(e.to_string()))?,
                ),
                None => None,
            };
            let request = Request {
                goal: args.goal.clone(),
                required_output: SigType::category(&args.output),
                quality_bounds: args
                    .bounds
                    .iter()
                    .map(|b| parse_bound(b))
                    .collect::<Result<_, _>>()?,
                budget,
                keywords: args.keywords.clone(),
            };
            let result = idx.match_request(&request, ctx.config.match_weights);
            let mut out = String::new();
            for (rank, entry) in result.entries.iter().enumerate() {
                let equivalents: Vec<String> =
                    entry.equivalents.iter().map(|id| id.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{}. {} score={:.4} equivalents=[{}]",
                    rank + 1,
                    entry.candidate.key(),
                    entry.score,
                    equivalents.join(", ")
                );
            }
            if result.entries.is_empty() {
                out.push_str("no matching assets\n");
            }
            Outcome::ok(out)
        }
    }
}

