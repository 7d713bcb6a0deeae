//! Usage tracking with windowed pre-aggregation, invoicing, exact payment
//! splitting and settlement through a pluggable payment backend.

mod events;
mod invoice;
mod settle;
mod tracker;

pub use crate::share::{apportion, split_payment, RevenueShareTree, Share};
pub use events::{parse_usage_log, render_usage_log, UsageEvent, UsageLogError, UsageMetric};
pub use invoice::{make_invoice, BillingError, Invoice, InvoiceLine};
pub use settle::{
    settle, BackendError, InMemoryLedger, LedgerEntry, NonPositiveAmount, PaymentBackend,
    PaymentTxn, Receipt, TxnLookup, TxnStatus, MAX_ATTEMPTS,
};
pub use tracker::{AggregatedCounter, TrackAck, TrackError, TrackerConfig, UsageTracker};
