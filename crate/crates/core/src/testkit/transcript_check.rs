//! Safety walkers over escrow transcripts.

use crate::billing::TxnStatus;
use crate::escrow::{Record, RecordKind, Role, Transcript};
use std::collections::BTreeMap;

#[derive(Debug, Default, Clone)]
struct ChunkTimeline {
    verified: Option<usize>,
    confirmed: Option<usize>,
    key_released: Option<usize>,
}

fn timelines(t: &Transcript) -> BTreeMap<u32, ChunkTimeline> {
    let mut out: BTreeMap<u32, ChunkTimeline> = BTreeMap::new();
    for (pos, Record { kind, .. }) in t.records.iter().enumerate() {
        match kind {
            RecordKind::State { role: Role::Receiver, chunk: Some(c), state }
                if state == "verified" =>
            {
                out.entry(*c).or_default().verified.get_or_insert(pos);
            }
            RecordKind::Payment { chunk, status: TxnStatus::Confirmed, .. } => {
                out.entry(*chunk).or_default().confirmed.get_or_insert(pos);
            }
            RecordKind::State { role: Role::Mediator, chunk: Some(c), state }
                if state == "key_released" =>
            {
                out.entry(*c).or_default().key_released.get_or_insert(pos);
            }
            _ => {}
        }
    }
    out
}

/// Per chunk, in transcript order: a key release requires an earlier
/// confirmed payment, and a confirmed payment requires an earlier verified
/// integrity check.
pub fn check_atomicity(t: &Transcript) -> Result<(), String> {
    for (chunk, tl) in timelines(t) {
        if let Some(key) = tl.key_released {
            match tl.confirmed {
                Some(pay) if pay < key => {}
                _ => {
                    return Err(format!(
                        "chunk {chunk}: key released at {key} without a prior confirmed payment"
                    ))
                }
            }
        }
        if let Some(pay) = tl.confirmed {
            match tl.verified {
                Some(v) if v < pay => {}
                _ => {
                    return Err(format!(
                        "chunk {chunk}: payment confirmed at {pay} without a prior verification"
                    ))
                }
            }
        }
    }
    Ok(())
}

/// No payload-bearing message is ever delivered to the mediator.
pub fn check_mediator_blindness(t: &Transcript) -> Result<(), String> {
    for r in &t.records {
        if let RecordKind::Deliver { to: Role::Mediator, kind, chunk, .. } = &r.kind {
            if kind == "ciphertext" {
                return Err(format!("ciphertext of chunk {chunk:?} delivered to the mediator"));
            }
        }
    }
    Ok(())
}

/// Whether the chunk was ever paid and whether its key was ever released.
pub fn chunk_paid_and_released(t: &Transcript, chunk: u32) -> (bool, bool) {
    let tl = timelines(t).get(&chunk).cloned().unwrap_or_default();
    (tl.confirmed.is_some(), tl.key_released.is_some())
}
