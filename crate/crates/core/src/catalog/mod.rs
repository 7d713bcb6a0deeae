//! Asset marketplaces and the market aggregator: publication, indexing,
//! signature-equivalence grouping and declarative matchmaking.

mod matching;

pub use matching::{
    BoundKind, Candidate, MatchEntry, MatchResult, MatchWeights, QualityBound, Request,
};

use crate::asset::{canonical_signature, validate_descriptor, AssetDescriptor, AssetId};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("duplicate asset id `{0}`")]
    DuplicateId(AssetId),
    #[error("descriptor `{id}` fails validation: {report}")]
    InvalidDescriptor { id: AssetId, report: String },
    #[error("asset id `{id}` published by both `{first}` and `{second}`")]
    IdCollisionAcrossMarkets { id: AssetId, first: String, second: String },
    #[error("unknown asset `{0}`")]
    UnknownAsset(AssetId),
}

/// Inverted indexes over one or more marketplaces. Signature groups are
/// exactly the equality classes of the canonical signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexCore {
    pub by_signature: BTreeMap<String, BTreeSet<AssetId>>,
    pub by_keyword: BTreeMap<String, BTreeSet<AssetId>>,
}

impl IndexCore {
    fn insert(&mut self, d: &AssetDescriptor) {
        let sig = canonical_signature(&d.signature);
        self.by_signature.entry(sig).or_default().insert(d.id.clone());
        for token in tokenize(d) {
            self.by_keyword.entry(token).or_default().insert(d.id.clone());
        }
    }

    fn remove(&mut self, d: &AssetDescriptor) {
        let sig = canonical_signature(&d.signature);
        if let Some(set) = self.by_signature.get_mut(&sig) {
            set.remove(&d.id);
            if set.is_empty() {
                self.by_signature.remove(&sig);
            }
        }
        for token in tokenize(d) {
            if let Some(set) = self.by_keyword.get_mut(&token) {
                set.remove(&d.id);
                if set.is_empty() {
                    self.by_keyword.remove(&token);
                }
            }
        }
    }
}

/// Lowercased alphanumeric tokens drawn from the fields a user would search.
pub fn tokenize(d: &AssetDescriptor) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for text in [d.name.as_str(), d.provider.as_str(), d.signature.goal.as_str(), d.kind.name()] {
        for token in text.to_lowercase().split(|c: char| !c.is_ascii_alphanumeric()) {
            if !token.is_empty() {
                out.insert(token.to_string());
            }
        }
    }
    out
}

/// A single marketplace: the asset store plus its always-current index.
/// Mutations take `&mut self`, so readers never observe a half-indexed asset;
/// wrap in an `RwLock` to share across threads.
#[derive(Debug, Clone, Default)]
pub struct Marketplace {
    name: String,
    assets: BTreeMap<AssetId, AssetDescriptor>,
    index: IndexCore,
}

impl Marketplace {
    pub fn new(name: impl Into<String>) -> Self {
        Marketplace { name: name.into(), ..Default::default() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, id: &AssetId) -> Option<&AssetDescriptor> {
        self.assets.get(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &AssetDescriptor> {
        self.assets.values()
    }

    pub fn index(&self) -> &IndexCore {
        &self.index
    }

    /// Validates and stores a descriptor, updating the index atomically with
    /// the store.
    pub fn publish(&mut self, d: AssetDescriptor) -> Result<AssetId, CatalogError> {
        let report = validate_descriptor(&d);
        if !report.is_ok() {
            return Err(CatalogError::InvalidDescriptor { id: d.id.clone(), report: report.to_string() });
        }
        if self.assets.contains_key(&d.id) {
            return Err(CatalogError::DuplicateId(d.id.clone()));
        }
        let id = d.id.clone();
        self.index.insert(&d);
        self.assets.insert(id.clone(), d);
        Ok(id)
    }

    pub fn retract(&mut self, id: &AssetId) -> Result<AssetDescriptor, CatalogError> {
        let d = self.assets.remove(id).ok_or_else(|| CatalogError::UnknownAsset(id.clone()))?;
        self.index.remove(&d);
        Ok(d)
    }

    /// The index of this marketplace alone.
    pub fn to_index(&self) -> MarketIndex {
        aggregate(&[self]).expect("a single marketplace cannot collide with itself")
    }
}

#[derive(Debug, Clone)]
pub struct IndexedAsset {
    pub descriptor: AssetDescriptor,
    /// Name of the marketplace the asset came from.
    pub market: String,
}

/// The market aggregator's view: union of the marketplaces with provenance
/// and cross-market signature classes.
#[derive(Debug, Clone, Default)]
pub struct MarketIndex {
    entries: BTreeMap<AssetId, IndexedAsset>,
    core: IndexCore,
}

/// Builds the aggregated index across marketplaces.
pub fn aggregate(markets: &[&Marketplace]) -> Result<MarketIndex, CatalogError> {
    let mut idx = MarketIndex::default();
    for market in markets {
        for d in market.descriptors() {
            if let Some(existing) = idx.entries.get(&d.id) {
                return Err(CatalogError::IdCollisionAcrossMarkets {
                    id: d.id.clone(),
                    first: existing.market.clone(),
                    second: market.name().to_string(),
                });
            }
            idx.core.insert(d);
            idx.entries.insert(
                d.id.clone(),
                IndexedAsset { descriptor: d.clone(), market: market.name().to_string() },
            );
        }
    }
    Ok(idx)
}

impl MarketIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &AssetId) -> Option<&IndexedAsset> {
        self.entries.get(id)
    }

    pub fn provenance(&self, id: &AssetId) -> Option<&str> {
        self.entries.get(id).map(|e| e.market.as_str())
    }

    pub fn core(&self) -> &IndexCore {
        &self.core
    }

    pub fn entries(&self) -> impl Iterator<Item = (&AssetId, &IndexedAsset)> {
        self.entries.iter()
    }

    /// The signature-equality class of `id`, including `id` itself.
    pub fn equivalents(&self, id: &AssetId) -> Result<BTreeSet<AssetId>, CatalogError> {
        let entry = self.entries.get(id).ok_or_else(|| CatalogError::UnknownAsset(id.clone()))?;
        let sig = canonical_signature(&entry.descriptor.signature);
        Ok(self.core.by_signature.get(&sig).cloned().unwrap_or_default())
    }

    /// Ids whose token sets contain every keyword.
    pub fn search(&self, keywords: &[String]) -> Vec<AssetId> {
        self.entries
            .iter()
            .filter(|(_, e)| {
                let tokens = tokenize(&e.descriptor);
                keywords.iter().all(|k| tokens.contains(&k.to_lowercase()))
            })
            .map(|(id, _)| id.clone())
            .collect()
    }
}
