//! Deterministic simulated network driving a whole escrow session.
//!
//! Messages may be dropped, duplicated or delayed under a seeded RNG; roles
//! retransmit after a timeout up to a retry cap. The transcript records every
//! delivered message, every state transition and every payment, in order;
//! identical configurations produce byte-identical transcripts.

use super::protocol::{
    sender_prepare, Effect, Mediator, Payload, Receiver, Role, Sender,
};
use crate::billing::{settle, PaymentBackend, PaymentTxn, TxnLookup, TxnStatus};
use crate::money::Money;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct SimNetConfig {
    pub seed: u64,
    pub drop_rate: f64,
    pub dup_rate: f64,
    pub max_delay_steps: u32,
    pub max_retries: u32,
    /// Test hook: corrupt one byte of every delivery of this chunk's
    /// ciphertext (an on-path tamperer).
    pub tamper_chunk: Option<u32>,
}

impl Default for SimNetConfig {
    fn default() -> Self {
        SimNetConfig {
            seed: 0,
            drop_rate: 0.0,
            dup_rate: 0.0,
            max_delay_steps: 1,
            max_retries: 10,
            tamper_chunk: None,
        }
    }
}

impl SimNetConfig {
    pub fn check(&self) -> Result<(), String> {
        for (name, rate) in [("drop_rate", self.drop_rate), ("dup_rate", self.dup_rate)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(format!("{name} {rate} must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordKind {
    Deliver { from: Role, to: Role, kind: String, chunk: Option<u32>, detail: String },
    State { role: Role, chunk: Option<u32>, state: String },
    Payment { chunk: u32, txn_id: String, status: TxnStatus, amount: Money },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub step: u64,
    pub kind: RecordKind,
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RecordKind::Deliver { from, to, kind, chunk, detail } => {
                write!(f, "step={} from={from} to={to} type={kind}", self.step)?;
                if let Some(c) = chunk {
                    write!(f, " chunk={c}")?;
                }
                if !detail.is_empty() {
                    write!(f, " {detail}")?;
                }
                Ok(())
            }
            RecordKind::State { role, chunk, state } => {
                write!(f, "step={} from={role} to={role} type=state", self.step)?;
                if let Some(c) = chunk {
                    write!(f, " chunk={c}")?;
                }
                write!(f, " detail={state}")
            }
            RecordKind::Payment { chunk, txn_id, status, amount } => {
                let status = match status {
                    TxnStatus::Pending => "pending",
                    TxnStatus::Confirmed => "confirmed",
                    TxnStatus::Failed => "failed",
                };
                write!(
                    f,
                    "step={} from=receiver to=receiver type=payment chunk={chunk} detail=txn={txn_id} status={status} amount={amount}",
                    self.step
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionOutcome {
    Completed,
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub records: Vec<Record>,
    pub outcome: SessionOutcome,
    pub chunks: u32,
    /// Receiver-side reassembled plaintext, when the session completed.
    pub recovered: Option<Vec<u8>>,
}

impl Transcript {
    pub fn completed(&self) -> bool {
        matches!(self.outcome, SessionOutcome::Completed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        match &self.outcome {
            SessionOutcome::Completed => {
                out.push_str(&format!("outcome=completed chunks={}\n", self.chunks))
            }
            SessionOutcome::Aborted(reason) => {
                out.push_str(&format!("outcome=aborted chunks={} reason={reason}\n", self.chunks))
            }
        }
        out
    }
}

struct Envelope {
    from: Role,
    to: Role,
    payload: Payload,
}

const HARD_STEP_CAP: u64 = 100_000;

/// Runs one whole session over the simulated network.
pub fn run_session<B: PaymentBackend + TxnLookup>(
    data: &[u8],
    chunk_bytes: usize,
    price_per_chunk: Money,
    net: &SimNetConfig,
    backend: &mut B,
) -> Transcript {
    let mut rng = ChaCha8Rng::seed_from_u64(net.seed);
    let session_id = format!("sess-{:08x}", net.seed);
    let init = sender_prepare(data, chunk_bytes, price_per_chunk, &session_id, &mut rng);
    let chunks = init.ciphertexts.len() as u32;

    let mut sender = Sender::new(init);
    let mut receiver = Receiver::new();
    let mut mediator = Mediator::new();

    let mut queue: BTreeMap<(u64, u64), Envelope> = BTreeMap::new();
    let mut seq: u64 = 0;
    let mut records: Vec<Record> = Vec::new();
    let mut aborted: Option<String> = None;
    let resend_interval = 2 * net.max_delay_steps as u64 + 4;

    let mut step: u64 = 0;
    let mut effects: Vec<Effect> = Vec::new();
    sender.start(step, &mut effects);

    loop {
        // Apply role effects until quiescent for this step.
        while !effects.is_empty() {
            for effect in std::mem::take(&mut effects) {
                match effect {
                    Effect::Send { to, payload } => {
                        let from = match (&payload, to) {
                            // Senders of each payload kind are fixed by the protocol.
                            (Payload::RegisterChunk { .. }, _) | (Payload::Ciphertext { .. }, _) => Role::Sender,
                            (Payload::RegisterAck { .. }, _)
                            | (Payload::ManifestAdvert { .. }, _)
                            | (Payload::KeyRelease { .. }, _)
                            | (Payload::Complete, _) => Role::Mediator,
                            (Payload::CiphertextAck { .. }, _)
                            | (Payload::IntegrityReport { .. }, _)
                            | (Payload::PaymentNotice { .. }, _)
                            | (Payload::DecryptAck { .. }, _) => Role::Receiver,
                            (Payload::Abort { .. }, _) => Role::Mediator,
                        };
                        transmit(
                            &mut queue, &mut seq, &mut rng, net, step, Envelope { from, to, payload },
                        );
                    }
                    Effect::Pay { chunk, amount } => {
                        let txn_id = format!("{session_id}-c{chunk}");
                        let mut txns = vec![
                            PaymentTxn::new(&txn_id, "receiver", "sender", amount)
                                .expect("chunk prices are positive"),
                        ];
                        let receipts = settle(&mut txns, backend);
                        let status = receipts[0].status;
                        records.push(Record {
                            step,
                            kind: RecordKind::Payment { chunk, txn_id: txn_id.clone(), status, amount },
                        });
                        receiver.payment_settled(chunk, &txn_id, status, step, &mut effects);
                    }
                    Effect::VerifyPayment { chunk, txn_id } => {
                        let txn = backend.lookup_txn(&txn_id).map(|entry| PaymentTxn {
                            txn_id: entry.txn_id,
                            payer: entry.payer,
                            payee: entry.payee,
                            amount: entry.amount,
                            status: entry.status,
                        });
                        mediator.payment_checked(chunk, txn, step, &mut effects);
                    }
                    Effect::Note { role, chunk, state } => {
                        records.push(Record { step, kind: RecordKind::State { role, chunk, state } });
                    }
                    Effect::AbortSession { reason } => {
                        if aborted.is_none() {
                            aborted = Some(reason.clone());
                        }
                        // Tell everyone; terminal either way.
                        transmit(
                            &mut queue, &mut seq, &mut rng, net, step,
                            Envelope { from: Role::Mediator, to: Role::Sender, payload: Payload::Abort { reason: reason.clone() } },
                        );
                        transmit(
                            &mut queue, &mut seq, &mut rng, net, step,
                            Envelope { from: Role::Mediator, to: Role::Receiver, payload: Payload::Abort { reason } },
                        );
                    }
                }
            }
        }

        if mediator.completed || aborted.is_some() || step >= HARD_STEP_CAP {
            break;
        }

        step += 1;

        // Deliver everything due this step, in sequence order.
        let due: Vec<(u64, u64)> =
            queue.range((step, 0)..=(step, u64::MAX)).map(|(k, _)| *k).collect();
        for key in due {
            let mut envelope = queue.remove(&key).expect("due message present");
            if let (Some(tampered), Payload::Ciphertext { chunk, bytes }) =
                (net.tamper_chunk, &mut envelope.payload)
            {
                if *chunk == tampered && !bytes.is_empty() {
                    bytes[0] ^= 0x01;
                }
            }
            records.push(Record {
                step,
                kind: RecordKind::Deliver {
                    from: envelope.from,
                    to: envelope.to,
                    kind: envelope.payload.kind().to_string(),
                    chunk: envelope.payload.chunk(),
                    detail: envelope.payload.detail(),
                },
            });
            match envelope.to {
                Role::Sender => sender.handle(envelope.from, &envelope.payload, step, &mut effects),
                Role::Receiver => {
                    receiver.handle(envelope.from, &envelope.payload, step, &mut effects)
                }
                Role::Mediator => {
                    mediator.handle(envelope.from, &envelope.payload, step, &mut effects)
                }
            }
            if let Payload::Abort { reason } = &envelope.payload {
                if aborted.is_none() {
                    aborted = Some(reason.clone());
                }
            }
        }

        sender.tick(step, resend_interval, net.max_retries, &mut effects);
        receiver.tick(step, resend_interval, net.max_retries, &mut effects);
        mediator.tick(step, resend_interval, net.max_retries, &mut effects);
    }

    let outcome = if mediator.completed {
        SessionOutcome::Completed
    } else {
        SessionOutcome::Aborted(
            aborted.unwrap_or_else(|| "step cap exhausted".to_string()),
        )
    };
    let recovered = if matches!(outcome, SessionOutcome::Completed) {
        receiver.recovered()
    } else {
        None
    };
    Transcript { records, outcome, chunks, recovered }
}

fn transmit(
    queue: &mut BTreeMap<(u64, u64), Envelope>,
    seq: &mut u64,
    rng: &mut ChaCha8Rng,
    net: &SimNetConfig,
    step: u64,
    envelope: Envelope,
) {
    // Fixed draw order keeps replays identical: drop, delay, dup, dup-delay.
    let dropped = rng.random::<f64>() < net.drop_rate;
    let delay = rng.random_range(0..=net.max_delay_steps) as u64;
    let duplicated = rng.random::<f64>() < net.dup_rate;
    let dup_delay = if duplicated { rng.random_range(0..=net.max_delay_steps) as u64 } else { 0 };

    if !dropped {
        let dup = if duplicated {
            Some(Envelope { from: envelope.from, to: envelope.to, payload: envelope.payload.clone() })
        } else {
            None
        };
        queue.insert((step + 1 + delay, *seq), envelope);
        *seq += 1;
        if let Some(d) = dup {
            queue.insert((step + 1 + dup_delay, *seq), d);
            *seq += 1;
        }
    } else if duplicated {
        // The duplicate survives the drop of the original.
        queue.insert((step + 1 + dup_delay, *seq), envelope);
        *seq += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billing::InMemoryLedger;

    fn data(len: usize) -> Vec<u8> {
        (0..len).map(|i| (i * 31 % 251) as u8).collect()
    }

    #[test]
    fn clean_network_completes_in_order() {
        let mut ledger = InMemoryLedger::new();
        let net = SimNetConfig::default();
        let t = run_session(&data(10_000), 4_000, Money::from_micro(50_000), &net, &mut ledger);
        assert!(t.completed(), "{}", t.to_text());
        assert_eq!(t.chunks, 3);
        assert_eq!(t.recovered.as_deref(), Some(&data(10_000)[..]));
        // Payment confirmed strictly before the key message, per chunk.
        for chunk in 0..3u32 {
            let pay = t
                .records
                .iter()
                .position(|r| matches!(&r.kind, RecordKind::Payment { chunk: c, status: TxnStatus::Confirmed, .. } if *c == chunk))
                .expect("payment record");
            let key = t
                .records
                .iter()
                .position(|r| matches!(&r.kind, RecordKind::Deliver { kind, chunk: Some(c), .. } if kind == "key_release" && *c == chunk))
                .expect("key release record");
            assert!(pay < key, "chunk {chunk}: payment at {pay}, key at {key}");
        }
        // Three confirmed chunk payments land in the ledger.
        assert_eq!(ledger.balance("sender"), Money::from_micro(150_000));
    }

    #[test]
    fn transcripts_replay_byte_identically() {
        let net = SimNetConfig { seed: 99, drop_rate: 0.15, dup_rate: 0.1, ..Default::default() };
        let mut l1 = InMemoryLedger::new();
        let mut l2 = InMemoryLedger::new();
        let t1 = run_session(&data(5_000), 1_000, Money::from_micro(10_000), &net, &mut l1);
        let t2 = run_session(&data(5_000), 1_000, Money::from_micro(10_000), &net, &mut l2);
        assert_eq!(t1.to_text(), t2.to_text());
    }

    #[test]
    fn lossy_network_still_completes() {
        let net = SimNetConfig { seed: 42, drop_rate: 0.2, max_retries: 10, ..Default::default() };
        let mut ledger = InMemoryLedger::new();
        let t = run_session(&data(8_000), 1_000, Money::from_micro(1_000), &net, &mut ledger);
        assert!(t.completed(), "{}", t.to_text());
    }

    #[test]
    fn tampered_chunk_aborts_without_payment_or_key() {
        let net = SimNetConfig { seed: 7, tamper_chunk: Some(1), ..Default::default() };
        let mut ledger = InMemoryLedger::new();
        let t = run_session(&data(6_000), 2_000, Money::from_micro(1_000), &net, &mut ledger);
        assert!(!t.completed());
        let paid_tampered = t.records.iter().any(
            |r| matches!(&r.kind, RecordKind::Payment { chunk: 1, .. }),
        );
        let key_tampered = t.records.iter().any(
            |r| matches!(&r.kind, RecordKind::Deliver { kind, chunk: Some(1), .. } if kind == "key_release"),
        );
        assert!(!paid_tampered, "tampered chunk was paid:\n{}", t.to_text());
        assert!(!key_tampered, "tampered chunk key released:\n{}", t.to_text());
    }

    #[test]
    fn mediator_never_receives_payload_bytes() {
        let net = SimNetConfig { seed: 3, dup_rate: 0.2, ..Default::default() };
        let mut ledger = InMemoryLedger::new();
        let t = run_session(&data(4_000), 1_000, Money::from_micro(1_000), &net, &mut ledger);
        for r in &t.records {
            if let RecordKind::Deliver { to: Role::Mediator, kind, .. } = &r.kind {
                assert_ne!(kind, "ciphertext", "payload reached the mediator:\n{}", t.to_text());
            }
        }
        assert!(t.completed());
    }
}
