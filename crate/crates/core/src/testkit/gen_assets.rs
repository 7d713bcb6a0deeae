//! Random (but always valid) asset descriptors for corpus tests.

use crate::asset::{
    AssetDescriptor, AssetId, AssetKind, LogicalSignature, PricingModel, QualityMetric, SigType,
    UsageMeter,
};
use crate::money::Money;
use crate::region::Region;
use crate::share::{RevenueShareTree, Share};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const GOALS: [&str; 5] = ["regression", "classification", "join", "aggregate", "clustering"];
const CATS: [&str; 4] = ["feature-table", "price-predictor", "label-stream", "report"];

fn random_sig_type(rng: &mut ChaCha8Rng) -> SigType {
    SigType::category(CATS[rng.random_range(0..CATS.len())])
}

fn random_pricing(rng: &mut ChaCha8Rng) -> PricingModel {
    match rng.random_range(0..3) {
        0 => PricingModel::PayOnce { price: Money::from_micro(rng.random_range(0..20_000_000)) },
        1 => PricingModel::Subscription {
            price: Money::from_micro(rng.random_range(0..5_000_000)),
            period_s: rng.random_range(1..=2_592_000),
        },
        _ => PricingModel::PayPerUse {
            rate: Money::from_micro(rng.random_range(0..2_000_000)),
            metric: match rng.random_range(0..4) {
                0 => UsageMeter::PerCall,
                1 => UsageMeter::PerThousandCalls,
                2 => UsageMeter::PerMegabyte,
                _ => UsageMeter::PerHour,
            },
        },
    }
}

/// A valid descriptor with randomized contents.
pub fn random_descriptor(rng: &mut ChaCha8Rng, idx: usize) -> AssetDescriptor {
    let kind = match rng.random_range(0..6) {
        0 => AssetKind::DataSource,
        1 | 2 => AssetKind::Algorithm,
        3 => AssetKind::System,
        4 => AssetKind::ComputeNode,
        _ => AssetKind::Application,
    };
    let goal = GOALS[rng.random_range(0..GOALS.len())];
    let inputs = if kind == AssetKind::DataSource {
        vec![]
    } else {
        vec![random_sig_type(rng)]
    };
    let mut quality = Vec::new();
    if rng.random_bool(0.7) {
        quality.push(QualityMetric {
            name: "mae".into(),
            value: rng.random_range(100.0..10_000.0),
            unit: "eur".into(),
        });
    }
    if rng.random_bool(0.3) {
        quality.push(QualityMetric {
            name: "accuracy".into(),
            value: rng.random_range(0.5..1.0),
            unit: "ratio".into(),
        });
    }
    let needs_region =
        matches!(kind, AssetKind::DataSource | AssetKind::ComputeNode | AssetKind::StorageNode);
    let region = if needs_region || rng.random_bool(0.3) {
        Some(Region::ALL[rng.random_range(0..Region::ALL.len())])
    } else {
        None
    };
    let revenue_share = if rng.random_bool(0.25) {
        Some(RevenueShareTree::node(
            "gross",
            Share::new(1, 1),
            vec![
                RevenueShareTree::leaf(format!("owner-{idx}"), Share::new(2, 5)),
                RevenueShareTree::leaf("platform", Share::new(3, 5)),
            ],
        ))
    } else {
        None
    };
    AssetDescriptor {
        id: AssetId::new(format!("asset-{idx:04}")).unwrap(),
        kind,
        name: format!("{goal} tool {idx}"),
        provider: format!("provider-{}", rng.random_range(0..9)),
        version: format!("1.{}.0", rng.random_range(0..10)),
        signature: LogicalSignature {
            goal: goal.to_string(),
            input_types: inputs,
            output_type: random_sig_type(rng),
        },
        quality,
        pricing: random_pricing(rng),
        usage_constraints: vec![],
        required_certificates: vec![],
        region,
        revenue_share,
        graph: None,
    }
}
