//! Desk-scale kernel of an open data-asset market: a unified asset model and
//! catalog with matchmaking, a compliance-aware geo-distributed query
//! optimizer, a simulated execution layer with budget-constrained variant
//! selection and certificate-gated placement, usage metering with
//! micro-payment splitting, and an escrow-based secure transfer protocol.
//!
//! Everything runs in-process over small generated data; the crate is the
//! library behind the `bazaar` command-line tool.

pub mod asset;
pub mod billing;
pub mod catalog;
pub mod escrow;
pub mod exec;
pub mod money;
pub mod plan;
pub mod policy;
pub mod region;
pub mod share;
pub mod sql;
pub mod testkit;
pub mod value;

pub use asset::AssetId;
pub use money::Money;
pub use region::Region;
