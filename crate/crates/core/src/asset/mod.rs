//! Unified asset model: descriptors, validation, canonical signatures,
//! document round-trip and pipeline composition.

mod compose;
mod document;
mod signature;
mod types;
mod validate;

pub use compose::{compose_pipeline, ComposeError};
pub use document::{parse_descriptor, serialize_descriptor, DocumentError};
pub use signature::{canonical_signature, logical_signature};
pub use types::{
    AssetDescriptor, AssetId, AssetKind, CertRequirement, Column, InvalidAssetId,
    LogicalSignature, PipelineEdge, PipelineGraph, PipelineNode, PricingModel, QualityMetric,
    Schema, SigType, UsageMeter,
};
pub use validate::{goal_is_known, validate_descriptor, ValidationReport, Violation, GOAL_TAXONOMY};
