//! The unified asset specification shared by every other module.

use crate::money::Money;
use crate::policy::UsageConstraint;
use crate::region::Region;
use crate::share::RevenueShareTree;
use crate::value::ColumnType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Opaque unique identifier: non-empty, at most 128 characters, URL-safe
/// charset (`A-Z a-z 0-9 . _ ~ -`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AssetId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid asset id `{0}`: must be 1..=128 URL-safe characters")]
pub struct InvalidAssetId(pub String);

impl AssetId {
    pub fn new(s: impl Into<String>) -> Result<Self, InvalidAssetId> {
        let s = s.into();
        let ok = !s.is_empty()
            && s.len() <= 128
            && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'~' | b'-'));
        if ok {
            Ok(AssetId(s))
        } else {
            Err(InvalidAssetId(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AssetId {
    type Error = InvalidAssetId;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        AssetId::new(s)
    }
}

impl From<AssetId> for String {
    fn from(id: AssetId) -> String {
        id.0
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    DataSource,
    Algorithm,
    Pipeline,
    System,
    ComputeNode,
    StorageNode,
    Application,
}

impl AssetKind {
    pub fn name(&self) -> &'static str {
        match self {
            AssetKind::DataSource => "data_source",
            AssetKind::Algorithm => "algorithm",
            AssetKind::Pipeline => "pipeline",
            AssetKind::System => "system",
            AssetKind::ComputeNode => "compute_node",
            AssetKind::StorageNode => "storage_node",
            AssetKind::Application => "application",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

/// Ordered, named, typed columns of a relational payload.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<(&str, ColumnType)>) -> Self {
        Schema {
            columns: columns
                .into_iter()
                .map(|(name, ty)| Column { name: name.to_string(), ty })
                .collect(),
        }
    }
}

/// Either a concrete relational schema or a named category from the goal
/// taxonomy (used for non-relational payloads like trained models).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigType {
    Schema(Schema),
    Category(String),
}

impl SigType {
    pub fn category(s: impl Into<String>) -> Self {
        SigType::Category(s.into())
    }
}

/// What an asset logically does: two assets with byte-identical canonical
/// signatures are equivalence candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalSignature {
    pub goal: String,
    pub input_types: Vec<SigType>,
    pub output_type: SigType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityMetric {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageMeter {
    PerCall,
    PerThousandCalls,
    PerMegabyte,
    PerHour,
}

impl fmt::Display for UsageMeter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UsageMeter::PerCall => "per call",
            UsageMeter::PerThousandCalls => "per 1000 calls",
            UsageMeter::PerMegabyte => "per MB",
            UsageMeter::PerHour => "per hour",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingModel {
    PayOnce { price: Money },
    Subscription { price: Money, period_s: u64 },
    PayPerUse { rate: Money, metric: UsageMeter },
}

impl PricingModel {
    /// Flat price for one-off models, rate for pay-per-use; used as the price
    /// proxy when ranking and budget-filtering candidates.
    pub fn price_proxy(&self) -> Money {
        match self {
            PricingModel::PayOnce { price } | PricingModel::Subscription { price, .. } => *price,
            PricingModel::PayPerUse { rate, .. } => *rate,
        }
    }
}

impl fmt::Display for PricingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PricingModel::PayOnce { price } => write!(f, "{price} once"),
            PricingModel::Subscription { price, period_s } => {
                write!(f, "{price} per {period_s}s")
            }
            PricingModel::PayPerUse { rate, metric } => write!(f, "{rate} {metric}"),
        }
    }
}

/// A certificate requirement: the named property must be certified by one of
/// the trusted authorities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertRequirement {
    pub property: String,
    pub trusted_authorities: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineNode {
    pub node_id: String,
    pub asset_ref: AssetId,
    pub role_category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineEdge {
    pub from_node: String,
    pub from_output_index: u32,
    pub to_node: String,
    pub to_input_index: u32,
}

/// A DAG of assets wired output-to-input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub nodes: Vec<PipelineNode>,
    pub edges: Vec<PipelineEdge>,
}

/// The unified record describing any asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetDescriptor {
    pub id: AssetId,
    pub kind: AssetKind,
    pub name: String,
    pub provider: String,
    pub version: String,
    pub signature: LogicalSignature,
    #[serde(default)]
    pub quality: Vec<QualityMetric>,
    pub pricing: PricingModel,
    #[serde(default)]
    pub usage_constraints: Vec<UsageConstraint>,
    #[serde(default)]
    pub required_certificates: Vec<CertRequirement>,
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub revenue_share: Option<RevenueShareTree>,
    #[serde(default)]
    pub graph: Option<PipelineGraph>,
}

impl AssetDescriptor {
    pub fn quality_metric(&self, name: &str) -> Option<&QualityMetric> {
        self.quality.iter().find(|m| m.name == name)
    }
}
