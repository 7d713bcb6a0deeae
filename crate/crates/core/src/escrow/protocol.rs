//! The escrow roles and their state machines.
//!
//! The sender encrypts each chunk under a fresh key and ships ciphertext
//! directly to the receiver; keys and manifests go to the mediator only. The
//! receiver verifies integrity against the manifest digest, pays, and only
//! then does the mediator release the chunk key. The mediator never sees
//! payload bytes. The manifest travels ahead of the ciphertext so a chunk can
//! be verified the moment it lands.

use super::crypto::{digest, hex_prefix, ChunkCipher, Digest32, Key, StreamCipher};
use crate::billing::{PaymentTxn, TxnStatus};
use crate::money::Money;
use rand_chacha::rand_core::RngCore;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Sender,
    Receiver,
    Mediator,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Sender => "sender",
            Role::Receiver => "receiver",
            Role::Mediator => "mediator",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkManifest {
    pub session_id: String,
    pub chunk_index: u32,
    /// Digest over the ciphertext, never the plaintext.
    pub ciphertext_digest: Digest32,
    pub ciphertext_len: u64,
    pub price: Money,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// sender → mediator: escrow one chunk's manifest and key.
    RegisterChunk { manifest: ChunkManifest, key: Key, total_chunks: u32 },
    /// mediator → sender
    RegisterAck { chunk: u32 },
    /// mediator → receiver: manifest first, so the chunk verifies on arrival.
    ManifestAdvert { manifest: ChunkManifest, total_chunks: u32 },
    /// sender → receiver: the only payload-bearing message, never mediated.
    Ciphertext { chunk: u32, bytes: Vec<u8> },
    /// receiver → sender
    CiphertextAck { chunk: u32 },
    /// receiver → mediator
    IntegrityReport { chunk: u32, ok: bool },
    /// receiver → mediator: the payment was issued and settled.
    PaymentNotice { chunk: u32, txn_id: String },
    /// mediator → receiver
    KeyRelease { chunk: u32, key: Key },
    /// receiver → mediator
    DecryptAck { chunk: u32 },
    /// mediator → both
    Complete,
    Abort { reason: String },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::RegisterChunk { .. } => "register_chunk",
            Payload::RegisterAck { .. } => "register_ack",
            Payload::ManifestAdvert { .. } => "manifest_advert",
            Payload::Ciphertext { .. } => "ciphertext",
            Payload::CiphertextAck { .. } => "ciphertext_ack",
            Payload::IntegrityReport { .. } => "integrity_report",
            Payload::PaymentNotice { .. } => "payment_notice",
            Payload::KeyRelease { .. } => "key_release",
            Payload::DecryptAck { .. } => "decrypt_ack",
            Payload::Complete => "complete",
            Payload::Abort { .. } => "abort",
        }
    }

    pub fn chunk(&self) -> Option<u32> {
        match self {
            Payload::RegisterChunk { manifest, .. } | Payload::ManifestAdvert { manifest, .. } => {
                Some(manifest.chunk_index)
            }
            Payload::RegisterAck { chunk }
            | Payload::Ciphertext { chunk, .. }
            | Payload::CiphertextAck { chunk }
            | Payload::IntegrityReport { chunk, .. }
            | Payload::PaymentNotice { chunk, .. }
            | Payload::KeyRelease { chunk, .. }
            | Payload::DecryptAck { chunk } => Some(*chunk),
            Payload::Complete | Payload::Abort { .. } => None,
        }
    }

    /// Short transcript detail; payload bytes never appear.
    pub fn detail(&self) -> String {
        match self {
            Payload::RegisterChunk { manifest, .. } => {
                format!("digest={} len={}", hex_prefix(&manifest.ciphertext_digest), manifest.ciphertext_len)
            }
            Payload::ManifestAdvert { manifest, .. } => {
                format!("digest={} price={}", hex_prefix(&manifest.ciphertext_digest), manifest.price)
            }
            Payload::Ciphertext { bytes, .. } => format!("len={}", bytes.len()),
            Payload::IntegrityReport { ok, .. } => format!("ok={ok}"),
            Payload::PaymentNotice { txn_id, .. } => format!("txn={txn_id}"),
            Payload::Abort { reason } => format!("reason={reason}"),
            _ => String::new(),
        }
    }
}

/// What a role asks the harness to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Send { to: Role, payload: Payload },
    /// Receiver-side: issue the payment for a verified chunk.
    Pay { chunk: u32, amount: Money },
    /// Mediator-side: look a transaction up in the ledger.
    VerifyPayment { chunk: u32, txn_id: String },
    /// Local state transition, for the transcript.
    Note { role: Role, chunk: Option<u32>, state: String },
    AbortSession { reason: String },
}

#[derive(Debug, Error)]
#[error("unknown chunk {0}")]
pub struct UnknownChunk(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyOutcome {
    Verified,
    DigestMismatch,
}

/// Integrity check a receiver runs on an arrived ciphertext.
pub fn receiver_verify_chunk(ciphertext: &[u8], manifest: &ChunkManifest) -> VerifyOutcome {
    if ciphertext.len() as u64 != manifest.ciphertext_len
        || digest(ciphertext) != manifest.ciphertext_digest
    {
        VerifyOutcome::DigestMismatch
    } else {
        VerifyOutcome::Verified
    }
}

#[derive(Debug, Clone)]
pub struct SenderInit {
    pub session_id: String,
    pub ciphertexts: Vec<Vec<u8>>,
    pub manifests: Vec<ChunkManifest>,
    pub keys: Vec<Key>,
}

/// Splits the payload into chunks, encrypts each under a fresh key and
/// builds the manifests. Keys are returned for escrow registration only.
pub fn sender_prepare(
    data: &[u8],
    chunk_bytes: usize,
    price_per_chunk: Money,
    session_id: &str,
    rng: &mut dyn RngCore,
) -> SenderInit {
    assert!(!data.is_empty(), "escrow transfer needs data");
    assert!(chunk_bytes > 0, "chunk size must be positive");
    let cipher = StreamCipher;
    let mut ciphertexts = Vec::new();
    let mut manifests = Vec::new();
    let mut keys = Vec::new();
    for (index, plain) in data.chunks(chunk_bytes).enumerate() {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        let ct = cipher.seal(&key, index as u32, plain);
        manifests.push(ChunkManifest {
            session_id: session_id.to_string(),
            chunk_index: index as u32,
            ciphertext_digest: digest(&ct),
            ciphertext_len: ct.len() as u64,
            price: price_per_chunk,
        });
        ciphertexts.push(ct);
        keys.push(key);
    }
    SenderInit { session_id: session_id.to_string(), ciphertexts, manifests, keys }
}

#[derive(Debug, Clone, Default)]
struct Outstanding {
    last_sent: u64,
    resends: u32,
    done: bool,
}

impl Outstanding {
    fn needs_resend(&self, step: u64, interval: u64) -> bool {
        !self.done && step >= self.last_sent + interval
    }
}

// ---------------------------------------------------------------------------
// Sender
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct Sender {
    init: SenderInit,
    register: Vec<Outstanding>,
    ciphertext: Vec<Outstanding>,
    pub finished: bool,
}

impl Sender {
    pub fn new(init: SenderInit) -> Self {
        let n = init.ciphertexts.len();
        Sender {
            init,
            register: vec![Outstanding::default(); n],
            ciphertext: vec![Outstanding::default(); n],
            finished: false,
        }
    }

    fn register_payload(&self, chunk: usize) -> Payload {
        Payload::RegisterChunk {
            manifest: self.init.manifests[chunk].clone(),
            key: self.init.keys[chunk],
            total_chunks: self.init.ciphertexts.len() as u32,
        }
    }

    fn ciphertext_payload(&self, chunk: usize) -> Payload {
        Payload::Ciphertext { chunk: chunk as u32, bytes: self.init.ciphertexts[chunk].clone() }
    }

    pub fn start(&mut self, step: u64, out: &mut Vec<Effect>) {
        for chunk in 0..self.init.ciphertexts.len() {
            self.register[chunk].last_sent = step;
            out.push(Effect::Send { to: Role::Mediator, payload: self.register_payload(chunk) });
            self.ciphertext[chunk].last_sent = step;
            out.push(Effect::Send { to: Role::Receiver, payload: self.ciphertext_payload(chunk) });
        }
    }

    pub fn handle(&mut self, _from: Role, payload: &Payload, _step: u64, _out: &mut Vec<Effect>) {
        match payload {
            Payload::RegisterAck { chunk } => {
                if let Some(o) = self.register.get_mut(*chunk as usize) {
                    o.done = true;
                }
            }
            Payload::CiphertextAck { chunk } => {
                if let Some(o) = self.ciphertext.get_mut(*chunk as usize) {
                    o.done = true;
                }
            }
            Payload::Complete => self.finished = true,
            Payload::Abort { .. } => self.finished = true,
            _ => {}
        }
    }

    pub fn tick(&mut self, step: u64, interval: u64, max_retries: u32, out: &mut Vec<Effect>) {
        if self.finished {
            return;
        }
        for chunk in 0..self.register.len() {
            for which in 0..2 {
                let (payload, to) = if which == 0 {
                    (self.register_payload(chunk), Role::Mediator)
                } else {
                    (self.ciphertext_payload(chunk), Role::Receiver)
                };
                let o = if which == 0 { &mut self.register[chunk] } else { &mut self.ciphertext[chunk] };
                if o.needs_resend(step, interval) {
                    if o.resends >= max_retries {
                        out.push(Effect::AbortSession {
                            reason: format!("timeout resending {}", payload.kind()),
                        });
                        return;
                    }
                    o.resends += 1;
                    o.last_sent = step;
                    out.push(Effect::Send { to, payload });
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct ReceiverChunk {
    manifest: Option<ChunkManifest>,
    ciphertext: Option<Vec<u8>>,
    verified: bool,
    txn_id: Option<String>,
    paid: bool,
    plaintext: Option<Vec<u8>>,
    report: Outstanding,
    ack: Outstanding,
}

#[derive(Debug, Default)]
pub struct Receiver {
    chunks: BTreeMap<u32, ReceiverChunk>,
    total: Option<u32>,
    pub finished: bool,
    pub aborted: bool,
}

impl Receiver {
    pub fn new() -> Self {
        Receiver::default()
    }

    /// Assembled plaintext once every chunk decrypted.
    pub fn recovered(&self) -> Option<Vec<u8>> {
        let total = self.total? as usize;
        if self.chunks.len() < total {
            return None;
        }
        let mut out = Vec::new();
        for i in 0..total as u32 {
            out.extend_from_slice(self.chunks.get(&i)?.plaintext.as_deref()?);
        }
        Some(out)
    }

    fn try_verify(&mut self, chunk: u32, step: u64, out: &mut Vec<Effect>) {
        let slot = self.chunks.entry(chunk).or_default();
        if slot.verified || slot.ciphertext.is_none() || slot.manifest.is_none() {
            return;
        }
        let (ct, manifest) = (slot.ciphertext.as_ref().unwrap(), slot.manifest.as_ref().unwrap());
        match receiver_verify_chunk(ct, manifest) {
            VerifyOutcome::Verified => {
                slot.verified = true;
                slot.report.last_sent = step;
                let price = manifest.price;
                out.push(Effect::Note {
                    role: Role::Receiver,
                    chunk: Some(chunk),
                    state: "verified".into(),
                });
                out.push(Effect::Send {
                    to: Role::Mediator,
                    payload: Payload::IntegrityReport { chunk, ok: true },
                });
                out.push(Effect::Pay { chunk, amount: price });
            }
            VerifyOutcome::DigestMismatch => {
                out.push(Effect::Note {
                    role: Role::Receiver,
                    chunk: Some(chunk),
                    state: "digest_mismatch".into(),
                });
                out.push(Effect::Send {
                    to: Role::Mediator,
                    payload: Payload::IntegrityReport { chunk, ok: false },
                });
                out.push(Effect::AbortSession { reason: format!("chunk {chunk} digest mismatch") });
            }
        }
    }

    pub fn payment_settled(
        &mut self,
        chunk: u32,
        txn_id: &str,
        status: TxnStatus,
        step: u64,
        out: &mut Vec<Effect>,
    ) {
        let slot = self.chunks.entry(chunk).or_default();
        if status == TxnStatus::Confirmed {
            slot.paid = true;
            slot.txn_id = Some(txn_id.to_string());
            slot.report.last_sent = step;
            out.push(Effect::Send {
                to: Role::Mediator,
                payload: Payload::PaymentNotice { chunk, txn_id: txn_id.to_string() },
            });
        } else {
            out.push(Effect::AbortSession { reason: format!("payment for chunk {chunk} failed") });
        }
    }

    pub fn handle(&mut self, _from: Role, payload: &Payload, step: u64, out: &mut Vec<Effect>) {
        match payload {
            Payload::ManifestAdvert { manifest, total_chunks } => {
                self.total = Some(*total_chunks);
                let chunk = manifest.chunk_index;
                let slot = self.chunks.entry(chunk).or_default();
                if slot.manifest.is_none() {
                    slot.manifest = Some(manifest.clone());
                }
                self.try_verify(chunk, step, out);
            }
            Payload::Ciphertext { chunk, bytes } => {
                out.push(Effect::Send {
                    to: Role::Sender,
                    payload: Payload::CiphertextAck { chunk: *chunk },
                });
                let slot = self.chunks.entry(*chunk).or_default();
                if slot.ciphertext.is_none() {
                    slot.ciphertext = Some(bytes.clone());
                }
                self.try_verify(*chunk, step, out);
            }
            Payload::KeyRelease { chunk, key } => {
                let slot = self.chunks.entry(*chunk).or_default();
                slot.report.done = true;
                if slot.plaintext.is_none() {
                    let Some(ct) = slot.ciphertext.as_ref() else { return };
                    match StreamCipher.open(key, *chunk, ct) {
                        Some(plain) => {
                            slot.plaintext = Some(plain);
                            slot.ack.last_sent = step;
                            out.push(Effect::Note {
                                role: Role::Receiver,
                                chunk: Some(*chunk),
                                state: "decrypted".into(),
                            });
                            out.push(Effect::Send {
                                to: Role::Mediator,
                                payload: Payload::DecryptAck { chunk: *chunk },
                            });
                        }
                        None => out.push(Effect::AbortSession {
                            reason: format!("released key fails to open chunk {chunk}"),
                        }),
                    }
                } else {
                    // Duplicate key release: just re-ack.
                    out.push(Effect::Send {
                        to: Role::Mediator,
                        payload: Payload::DecryptAck { chunk: *chunk },
                    });
                }
            }
            Payload::Complete => {
                self.finished = true;
                for slot in self.chunks.values_mut() {
                    slot.ack.done = true;
                }
            }
            Payload::Abort { .. } => {
                self.finished = true;
                self.aborted = true;
            }
            _ => {}
        }
    }

    pub fn tick(&mut self, step: u64, interval: u64, max_retries: u32, out: &mut Vec<Effect>) {
        if self.finished {
            return;
        }
        for (&chunk, slot) in self.chunks.iter_mut() {
            // Re-raise integrity + payment until the key arrives.
            if slot.paid && slot.report.needs_resend(step, interval) {
                if slot.report.resends >= max_retries {
                    out.push(Effect::AbortSession {
                        reason: format!("timeout waiting for key of chunk {chunk}"),
                    });
                    return;
                }
                slot.report.resends += 1;
                slot.report.last_sent = step;
                out.push(Effect::Send {
                    to: Role::Mediator,
                    payload: Payload::IntegrityReport { chunk, ok: true },
                });
                out.push(Effect::Send {
                    to: Role::Mediator,
                    payload: Payload::PaymentNotice {
                        chunk,
                        txn_id: slot.txn_id.clone().expect("paid chunks carry a txn"),
                    },
                });
            }
            // Re-ack decryption until Complete arrives.
            if slot.plaintext.is_some() && slot.ack.needs_resend(step, interval) {
                if slot.ack.resends >= max_retries {
                    out.push(Effect::AbortSession {
                        reason: format!("timeout waiting for completion after chunk {chunk}"),
                    });
                    return;
                }
                slot.ack.resends += 1;
                slot.ack.last_sent = step;
                out.push(Effect::Send {
                    to: Role::Mediator,
                    payload: Payload::DecryptAck { chunk },
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Mediator
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct MediatorChunk {
    manifest: ChunkManifest,
    key: Key,
    integrity_ok: bool,
    payment: Option<PaymentTxn>,
    released: bool,
    decrypted: bool,
    advert: Outstanding,
    release: Outstanding,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KeyReleaseOutcome {
    Released(Key),
    Refusal(String),
}

#[derive(Debug, Default)]
pub struct Mediator {
    chunks: BTreeMap<u32, MediatorChunk>,
    total: Option<u32>,
    pub completed: bool,
    pub aborted: Option<String>,
}

impl Mediator {
    pub fn new() -> Self {
        Mediator::default()
    }

    pub fn is_terminal(&self) -> bool {
        self.completed || self.aborted.is_some()
    }

    pub fn payments(&self) -> BTreeMap<u32, PaymentTxn> {
        self.chunks
            .iter()
            .filter_map(|(&i, c)| c.payment.clone().map(|p| (i, p)))
            .collect()
    }

    /// The escrow rule: the key leaves the mediator iff a confirmed payment
    /// over the exact manifest price is presented. Re-requests are answered
    /// with the same key.
    pub fn release_key(
        &mut self,
        chunk: u32,
        payment: &PaymentTxn,
    ) -> Result<KeyReleaseOutcome, UnknownChunk> {
        let slot = self.chunks.get_mut(&chunk).ok_or(UnknownChunk(chunk))?;
        if payment.status != TxnStatus::Confirmed {
            return Ok(KeyReleaseOutcome::Refusal(format!(
                "payment {} is not confirmed",
                payment.txn_id
            )));
        }
        if payment.amount != slot.manifest.price {
            return Ok(KeyReleaseOutcome::Refusal(format!(
                "payment {} over {} does not match price {}",
                payment.txn_id, payment.amount, slot.manifest.price
            )));
        }
        slot.payment = Some(payment.clone());
        slot.released = true;
        Ok(KeyReleaseOutcome::Released(slot.key))
    }

    fn maybe_complete(&mut self, out: &mut Vec<Effect>) {
        let Some(total) = self.total else { return };
        if self.completed || self.chunks.len() != total as usize {
            return;
        }
        if self.chunks.values().all(|c| c.released && c.decrypted) {
            self.completed = true;
            out.push(Effect::Note { role: Role::Mediator, chunk: None, state: "completed".into() });
            out.push(Effect::Send { to: Role::Sender, payload: Payload::Complete });
            out.push(Effect::Send { to: Role::Receiver, payload: Payload::Complete });
        }
    }

    pub fn handle(&mut self, _from: Role, payload: &Payload, step: u64, out: &mut Vec<Effect>) {
        match payload {
            Payload::RegisterChunk { manifest, key, total_chunks } => {
                self.total = Some(*total_chunks);
                let chunk = manifest.chunk_index;
                let slot = self.chunks.entry(chunk).or_insert_with(|| MediatorChunk {
                    manifest: manifest.clone(),
                    key: *key,
                    integrity_ok: false,
                    payment: None,
                    released: false,
                    decrypted: false,
                    advert: Outstanding { last_sent: step, ..Default::default() },
                    release: Outstanding::default(),
                });
                slot.advert.last_sent = step;
                out.push(Effect::Send {
                    to: Role::Sender,
                    payload: Payload::RegisterAck { chunk },
                });
                out.push(Effect::Send {
                    to: Role::Receiver,
                    payload: Payload::ManifestAdvert {
                        manifest: manifest.clone(),
                        total_chunks: *total_chunks,
                    },
                });
            }
            Payload::IntegrityReport { chunk, ok } => {
                if !ok {
                    out.push(Effect::Note {
                        role: Role::Mediator,
                        chunk: Some(*chunk),
                        state: "integrity_failed".into(),
                    });
                    out.push(Effect::AbortSession {
                        reason: format!("receiver reported digest mismatch on chunk {chunk}"),
                    });
                    return;
                }
                if let Some(slot) = self.chunks.get_mut(chunk) {
                    slot.integrity_ok = true;
                    slot.advert.done = true;
                }
            }
            Payload::PaymentNotice { chunk, txn_id } => {
                if let Some(slot) = self.chunks.get_mut(chunk) {
                    slot.advert.done = true;
                    out.push(Effect::VerifyPayment { chunk: *chunk, txn_id: txn_id.clone() });
                }
            }
            Payload::DecryptAck { chunk } => {
                if let Some(slot) = self.chunks.get_mut(chunk) {
                    slot.decrypted = true;
                    slot.release.done = true;
                }
                if self.completed {
                    out.push(Effect::Send { to: Role::Receiver, payload: Payload::Complete });
                } else {
                    self.maybe_complete(out);
                }
            }
            Payload::Abort { reason } if self.aborted.is_none() && !self.completed => {
                self.aborted = Some(reason.clone());
            }
            _ => {}
        }
    }

    /// Ledger lookup result for a payment notice.
    pub fn payment_checked(
        &mut self,
        chunk: u32,
        txn: Option<PaymentTxn>,
        step: u64,
        out: &mut Vec<Effect>,
    ) {
        let Some(txn) = txn else {
            out.push(Effect::AbortSession {
                reason: format!("payment for chunk {chunk} not found in ledger"),
            });
            return;
        };
        match self.release_key(chunk, &txn) {
            Ok(KeyReleaseOutcome::Released(key)) => {
                let slot = self.chunks.get_mut(&chunk).expect("released chunk exists");
                if !slot.release.done {
                    slot.release.last_sent = step;
                    out.push(Effect::Note {
                        role: Role::Mediator,
                        chunk: Some(chunk),
                        state: "key_released".into(),
                    });
                    out.push(Effect::Send {
                        to: Role::Receiver,
                        payload: Payload::KeyRelease { chunk, key },
                    });
                }
            }
            Ok(KeyReleaseOutcome::Refusal(reason)) => {
                out.push(Effect::AbortSession { reason });
            }
            Err(UnknownChunk(c)) => {
                out.push(Effect::AbortSession { reason: format!("payment for unknown chunk {c}") });
            }
        }
    }

    pub fn tick(&mut self, step: u64, interval: u64, max_retries: u32, out: &mut Vec<Effect>) {
        if self.is_terminal() {
            return;
        }
        for (&chunk, slot) in self.chunks.iter_mut() {
            if slot.advert.needs_resend(step, interval) {
                if slot.advert.resends >= max_retries {
                    out.push(Effect::AbortSession {
                        reason: format!("timeout advertising manifest of chunk {chunk}"),
                    });
                    return;
                }
                slot.advert.resends += 1;
                slot.advert.last_sent = step;
                out.push(Effect::Send {
                    to: Role::Receiver,
                    payload: Payload::ManifestAdvert {
                        manifest: slot.manifest.clone(),
                        total_chunks: self.total.expect("total set with first register"),
                    },
                });
            }
            if slot.released && slot.release.needs_resend(step, interval) {
                if slot.release.resends >= max_retries {
                    out.push(Effect::AbortSession {
                        reason: format!("timeout re-releasing key of chunk {chunk}"),
                    });
                    return;
                }
                slot.release.resends += 1;
                slot.release.last_sent = step;
                out.push(Effect::Send {
                    to: Role::Receiver,
                    payload: Payload::KeyRelease { chunk, key: slot.key },
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prepared(len: usize, chunk_bytes: usize) -> SenderInit {
        let data: Vec<u8> = (0..len).map(|i| (i % 251) as u8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        sender_prepare(&data, chunk_bytes, Money::from_micro(100_000), "s", &mut rng)
    }

    #[test]
    fn chunking_boundaries() {
        // 10 KiB in 4 KiB chunks: three chunks, indices 0..2, last short.
        let init = prepared(10 * 1024, 4 * 1024);
        assert_eq!(init.ciphertexts.len(), 3);
        let idx: Vec<u32> = init.manifests.iter().map(|m| m.chunk_index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert!(init.ciphertexts[2].len() < init.ciphertexts[0].len());

        let one = prepared(1, 4096);
        assert_eq!(one.ciphertexts.len(), 1);
    }

    #[test]
    fn manifests_match_an_independent_hasher() {
        use sha2::{Digest as _, Sha256};
        let init = prepared(10_000, 3_000);
        for (ct, m) in init.ciphertexts.iter().zip(&init.manifests) {
            let mut h = Sha256::new();
            h.update(ct);
            let expect: [u8; 32] = h.finalize().into();
            assert_eq!(m.ciphertext_digest, expect);
            assert_eq!(m.ciphertext_len, ct.len() as u64);
        }
    }

    #[test]
    fn verify_chunk_outcomes() {
        let init = prepared(5_000, 2_000);
        let m = &init.manifests[0];
        let ct = &init.ciphertexts[0];
        assert_eq!(receiver_verify_chunk(ct, m), VerifyOutcome::Verified);
        let mut bad = ct.clone();
        bad[10] ^= 1;
        assert_eq!(receiver_verify_chunk(&bad, m), VerifyOutcome::DigestMismatch);
        assert_eq!(receiver_verify_chunk(&ct[..ct.len() - 1], m), VerifyOutcome::DigestMismatch);
    }

    #[test]
    fn release_rules_are_exact() {
        let init = prepared(1_000, 1_000);
        let mut mediator = Mediator::new();
        let mut out = Vec::new();
        mediator.handle(
            Role::Sender,
            &Payload::RegisterChunk {
                manifest: init.manifests[0].clone(),
                key: init.keys[0],
                total_chunks: 1,
            },
            0,
            &mut out,
        );

        let mut txn =
            PaymentTxn::new("t1", "receiver", "sender", Money::from_micro(100_000)).unwrap();
        // Pending payments are refused.
        assert!(matches!(
            mediator.release_key(0, &txn).unwrap(),
            KeyReleaseOutcome::Refusal(_)
        ));
        // Underpayment by one micro-unit is refused.
        let mut under =
            PaymentTxn::new("t2", "receiver", "sender", Money::from_micro(99_999)).unwrap();
        under.status = TxnStatus::Confirmed;
        assert!(matches!(
            mediator.release_key(0, &under).unwrap(),
            KeyReleaseOutcome::Refusal(_)
        ));
        // Exact confirmed payment releases, idempotently.
        txn.status = TxnStatus::Confirmed;
        let KeyReleaseOutcome::Released(k1) = mediator.release_key(0, &txn).unwrap() else {
            panic!("expected release");
        };
        let KeyReleaseOutcome::Released(k2) = mediator.release_key(0, &txn).unwrap() else {
            panic!("expected idempotent re-release");
        };
        assert_eq!(k1, k2);
        assert_eq!(k1, init.keys[0]);
        // Unknown chunks are errors.
        assert!(mediator.release_key(9, &txn).is_err());
    }
}
