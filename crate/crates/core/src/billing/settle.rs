//! Settlement through a pluggable payment backend.
//!
//! The backend contract is two calls: execute a payment, and take a
//! completion notification. Settlement drives every pending transaction to
//! Confirmed or Failed with capped retries; final statuses land in the
//! backend's ledger log and never change again.

use crate::money::Money;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxnStatus {
    Pending,
    Confirmed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentTxn {
    pub txn_id: String,
    pub payer: String,
    pub payee: String,
    pub amount: Money,
    pub status: TxnStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("payment transaction must move a positive amount, got {0}")]
pub struct NonPositiveAmount(pub Money);

impl PaymentTxn {
    pub fn new(
        txn_id: impl Into<String>,
        payer: impl Into<String>,
        payee: impl Into<String>,
        amount: Money,
    ) -> Result<Self, NonPositiveAmount> {
        if amount <= Money::ZERO {
            return Err(NonPositiveAmount(amount));
        }
        Ok(PaymentTxn {
            txn_id: txn_id.into(),
            payer: payer.into(),
            payee: payee.into(),
            amount,
            status: TxnStatus::Pending,
        })
    }
}

#[derive(Debug, Clone, Error)]
#[error("payment backend unavailable: {message}")]
pub struct BackendError {
    pub message: String,
}

/// What a payment integration implements: execute a transfer and be told
/// about completion. `backoff` is the retry-wait hook; the in-memory
/// reference backend just records it.
pub trait PaymentBackend {
    fn execute(&mut self, txn: &PaymentTxn, attempt: u32) -> Result<(), BackendError>;
    fn notify(&mut self, txn: &PaymentTxn, attempts: u32);
    fn backoff(&mut self, _delay_ms: u64) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub txn_id: String,
    pub status: TxnStatus,
    pub attempts: u32,
}

pub const MAX_ATTEMPTS: u32 = 3;
const BASE_BACKOFF_MS: u64 = 100;

/// Drives pending transactions to a terminal status with capped exponential
/// backoff. Transactions already terminal are left untouched.
pub fn settle(txns: &mut [PaymentTxn], backend: &mut dyn PaymentBackend) -> Vec<Receipt> {
    let mut receipts = Vec::with_capacity(txns.len());
    for txn in txns.iter_mut() {
        if txn.status != TxnStatus::Pending {
            receipts.push(Receipt { txn_id: txn.txn_id.clone(), status: txn.status, attempts: 0 });
            continue;
        }
        let mut attempts = 0;
        let status = loop {
            attempts += 1;
            match backend.execute(txn, attempts) {
                Ok(()) => break TxnStatus::Confirmed,
                Err(_) if attempts < MAX_ATTEMPTS => {
                    backend.backoff(BASE_BACKOFF_MS << (attempts - 1));
                }
                Err(_) => break TxnStatus::Failed,
            }
        };
        txn.status = status;
        backend.notify(txn, attempts);
        receipts.push(Receipt { txn_id: txn.txn_id.clone(), status, attempts });
    }
    receipts
}

/// Read access to settled transactions, for parties (like an escrow
/// mediator) that must verify a payment they did not make.
pub trait TxnLookup {
    fn lookup_txn(&self, txn_id: &str) -> Option<LedgerEntry>;
}

/// A ledger entry: the durable record of a transaction's final status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub txn_id: String,
    pub payer: String,
    pub payee: String,
    pub amount: Money,
    pub status: TxnStatus,
    pub attempts: u32,
}

/// The fee-free in-memory reference backend: account balances plus an
/// append-only log. Balances may go negative (accounts are external).
#[derive(Debug, Clone, Default)]
pub struct InMemoryLedger {
    balances: BTreeMap<String, Money>,
    log: Vec<LedgerEntry>,
    backoffs_ms: Vec<u64>,
}

impl InMemoryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn balance(&self, account: &str) -> Money {
        self.balances.get(account).copied().unwrap_or(Money::ZERO)
    }

    pub fn log(&self) -> &[LedgerEntry] {
        &self.log
    }

    pub fn entry(&self, txn_id: &str) -> Option<&LedgerEntry> {
        self.log.iter().rev().find(|e| e.txn_id == txn_id)
    }

    pub fn backoffs_ms(&self) -> &[u64] {
        &self.backoffs_ms
    }
}

impl TxnLookup for InMemoryLedger {
    fn lookup_txn(&self, txn_id: &str) -> Option<LedgerEntry> {
        self.entry(txn_id).cloned()
    }
}

impl PaymentBackend for InMemoryLedger {
    fn execute(&mut self, txn: &PaymentTxn, _attempt: u32) -> Result<(), BackendError> {
        *self.balances.entry(txn.payer.clone()).or_insert(Money::ZERO) -= txn.amount;
        *self.balances.entry(txn.payee.clone()).or_insert(Money::ZERO) += txn.amount;
        Ok(())
    }

    fn notify(&mut self, txn: &PaymentTxn, attempts: u32) {
        self.log.push(LedgerEntry {
            txn_id: txn.txn_id.clone(),
            payer: txn.payer.clone(),
            payee: txn.payee.clone(),
            amount: txn.amount,
            status: txn.status,
            attempts,
        });
    }

    fn backoff(&mut self, delay_ms: u64) {
        self.backoffs_ms.push(delay_ms);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flaky<'a> {
        failures_left: u32,
        inner: &'a mut InMemoryLedger,
    }

    impl PaymentBackend for Flaky<'_> {
        fn execute(&mut self, txn: &PaymentTxn, attempt: u32) -> Result<(), BackendError> {
            if self.failures_left > 0 {
                self.failures_left -= 1;
                return Err(BackendError { message: "synthetic outage".into() });
            }
            self.inner.execute(txn, attempt)
        }

        fn notify(&mut self, txn: &PaymentTxn, attempts: u32) {
            self.inner.notify(txn, attempts);
        }

        fn backoff(&mut self, delay_ms: u64) {
            self.inner.backoff(delay_ms);
        }
    }

    fn txn(id: &str, amount: i64) -> PaymentTxn {
        PaymentTxn::new(id, "alice", "bob", Money::from_micro(amount)).unwrap()
    }

    #[test]
    fn reference_backend_confirms_and_balances_match() {
        let mut ledger = InMemoryLedger::new();
        let mut txns = vec![txn("t1", 100), txn("t2", 250), txn("t3", 50)];
        let receipts = settle(&mut txns, &mut ledger);
        assert!(receipts.iter().all(|r| r.status == TxnStatus::Confirmed));
        assert_eq!(ledger.balance("alice"), Money::from_micro(-400));
        assert_eq!(ledger.balance("bob"), Money::from_micro(400));
        assert_eq!(ledger.log().len(), 3);
    }

    #[test]
    fn one_failure_then_success_confirms_with_two_attempts() {
        let mut inner = InMemoryLedger::new();
        let mut backend = Flaky { failures_left: 1, inner: &mut inner };
        let mut txns = vec![txn("t1", 100)];
        let receipts = settle(&mut txns, &mut backend);
        assert_eq!(receipts[0].status, TxnStatus::Confirmed);
        assert_eq!(receipts[0].attempts, 2);
        assert_eq!(inner.backoffs_ms(), &[100]);
    }

    #[test]
    fn persistent_failure_fails_after_exactly_three_attempts() {
        let mut inner = InMemoryLedger::new();
        let mut backend = Flaky { failures_left: u32::MAX, inner: &mut inner };
        let mut txns = vec![txn("t1", 100)];
        let receipts = settle(&mut txns, &mut backend);
        assert_eq!(receipts[0].status, TxnStatus::Failed);
        assert_eq!(receipts[0].attempts, 3);
        // Failed but never dropped: the ledger log holds the outcome.
        assert_eq!(inner.entry("t1").unwrap().status, TxnStatus::Failed);
        assert_eq!(inner.balance("alice"), Money::ZERO);
        assert_eq!(inner.backoffs_ms(), &[100, 200]);
    }

    #[test]
    fn terminal_transactions_are_not_rerun() {
        let mut ledger = InMemoryLedger::new();
        let mut txns = vec![txn("t1", 100)];
        settle(&mut txns, &mut ledger);
        let receipts = settle(&mut txns, &mut ledger);
        assert_eq!(receipts[0].attempts, 0);
        assert_eq!(ledger.balance("bob"), Money::from_micro(100));
    }

    #[test]
    fn zero_amount_transactions_are_rejected() {
        assert!(PaymentTxn::new("t", "a", "b", Money::ZERO).is_err());
    }
}
