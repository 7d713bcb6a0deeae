//! Linear-scan matchmaking oracle: the same candidate predicate and scoring,
//! evaluated by brute force over all descriptors without any index.

use crate::asset::{
    canonical_signature, compose_pipeline, AssetDescriptor, AssetKind, LogicalSignature, SigType,
};
use crate::catalog::{tokenize, BoundKind, MatchWeights, Request};
use crate::money::Money;

fn out_key(t: &SigType) -> String {
    canonical_signature(&LogicalSignature {
        goal: String::new(),
        input_types: vec![],
        output_type: t.clone(),
    })
}

fn bounds_ok(d: &AssetDescriptor, r: &Request) -> bool {
    r.quality_bounds.iter().all(|b| match d.quality_metric(&b.metric) {
        Some(m) => match b.bound {
            BoundKind::Max(v) => m.value <= v,
            BoundKind::Min(v) => m.value >= v,
        },
        None => false,
    })
}

fn slack(d: &AssetDescriptor, r: &Request) -> f64 {
    if r.quality_bounds.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for b in &r.quality_bounds {
        let v = d.quality_metric(&b.metric).map(|m| m.value).unwrap_or(f64::NAN);
        let s = match b.bound {
            BoundKind::Max(bound) => {
                if bound == 0.0 {
                    if v == 0.0 { 1.0 } else { 0.0 }
                } else {
                    (bound - v) / bound.abs()
                }
            }
            BoundKind::Min(bound) => {
                if bound == 0.0 {
                    if v >= 0.0 { 1.0 } else { 0.0 }
                } else {
                    (v - bound) / bound.abs()
                }
            }
        };
        total += s.clamp(0.0, 1.0);
    }
    total / r.quality_bounds.len() as f64
}

fn keywords_ok(tokens: &std::collections::BTreeSet<String>, r: &Request) -> bool {
    r.keywords.iter().all(|k| tokens.contains(&k.to_lowercase()))
}

/// Ranked (candidate key, score) pairs computed by scanning everything.
pub fn linear_scan_match(
    descriptors: &[AssetDescriptor],
    r: &Request,
    weights: MatchWeights,
) -> Vec<(String, f64)> {
    let want = out_key(&r.required_output);
    let mut raw: Vec<(String, f64, Money)> = Vec::new();

    for d in descriptors {
        if d.signature.goal != r.goal
            || out_key(&d.signature.output_type) != want
            || !bounds_ok(d, r)
            || !keywords_ok(&tokenize(d), r)
        {
            continue;
        }
        let price = d.pricing.price_proxy();
        if r.budget.is_some_and(|b| price > b) {
            continue;
        }
        raw.push((d.id.to_string(), slack(d, r), price));
    }

    for data in descriptors {
        if data.kind != AssetKind::DataSource {
            continue;
        }
        for algo in descriptors {
            if algo.kind != AssetKind::Algorithm
                || algo.signature.goal != r.goal
                || out_key(&algo.signature.output_type) != want
                || algo.signature.input_types.len() != 1
                || out_key(&algo.signature.input_types[0]) != out_key(&data.signature.output_type)
                || !bounds_ok(algo, r)
            {
                continue;
            }
            let mut tokens = tokenize(data);
            tokens.extend(tokenize(algo));
            if !keywords_ok(&tokens, r) {
                continue;
            }
            let price = data.pricing.price_proxy() + algo.pricing.price_proxy();
            if r.budget.is_some_and(|b| price > b) {
                continue;
            }
            let edges = vec![(data.id.to_string(), 0, algo.id.to_string(), 0)];
            if compose_pipeline(&[data.clone(), algo.clone()], &edges, None).is_err() {
                continue;
            }
            raw.push((format!("{}+{}", data.id, algo.id), slack(algo, r), price));
        }
    }

    let max_price = raw.iter().map(|(_, _, p)| p.micro_units.max(0)).max().unwrap_or(0);
    let mut scored: Vec<(String, f64)> = raw
        .into_iter()
        .map(|(key, slack, price)| {
            let cheapness = if max_price == 0 {
                1.0
            } else {
                1.0 - price.micro_units.max(0) as f64 / max_price as f64
            };
            (key, weights.quality * slack + weights.price * cheapness)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}
