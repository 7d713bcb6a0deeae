//! Escrow-based secure data transfer: the sender ships ciphertext directly
//! to the receiver while the mediator escrows digests and keys, releasing a
//! chunk's key only against a confirmed exact payment.

mod crypto;
mod protocol;
mod simnet;

pub use crypto::{digest, hex_prefix, ChunkCipher, Digest32, Key, StreamCipher, TAG_LEN};
pub use protocol::{
    receiver_verify_chunk, sender_prepare, ChunkManifest, Effect, KeyReleaseOutcome, Mediator,
    Payload, Receiver, Role, Sender, SenderInit, UnknownChunk, VerifyOutcome,
};
pub use simnet::{run_session, Record, RecordKind, SessionOutcome, SimNetConfig, Transcript};
