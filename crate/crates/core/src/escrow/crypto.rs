//! Cipher and digest contracts for the transfer protocol.
//!
//! The reference profile is a 256-bit-key stream cipher with an appended
//! 256-bit keyed tag, and SHA-256 as the collision-resistant digest. The
//! cipher sits behind a trait so another authenticated-encryption profile
//! can be swapped in without touching the protocol.

use sha2::{Digest as _, Sha256};

pub type Key = [u8; 32];
pub type Digest32 = [u8; 32];

pub const TAG_LEN: usize = 32;

pub fn digest(data: &[u8]) -> Digest32 {
    let mut hasher = Sha256::new();
    hasher.update(data);
    hasher.finalize().into()
}

pub fn hex_prefix(d: &Digest32) -> String {
    d[..4].iter().map(|b| format!("{b:02x}")).collect()
}

pub trait ChunkCipher {
    /// Encrypts and authenticates one chunk under a fresh key.
    fn seal(&self, key: &Key, chunk_index: u32, plaintext: &[u8]) -> Vec<u8>;
    /// Decrypts and verifies; `None` on authentication failure.
    fn open(&self, key: &Key, chunk_index: u32, ciphertext: &[u8]) -> Option<Vec<u8>>;
}

/// SHA-256 in counter mode as the keystream, SHA-256 keyed tag appended.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamCipher;

impl StreamCipher {
    fn keystream_block(key: &Key, chunk_index: u32, counter: u64) -> Digest32 {
        let mut hasher = Sha256::new();
        hasher.update(key);
        hasher.update(b"ks");
        hasher.update(chunk_index.to_be_bytes());
        hasher.update(counter.to_be_bytes());
        hasher.finalize().into()
    }

    fn tag(key: &Key, chunk_index: u32, ciphertext: &[u8]) -> Digest32 {
        let mut hasher = Sha256::new();
        hasher.update(key);
        hasher.update(b"tag");
        hasher.update(chunk_index.to_be_bytes());
        hasher.update(ciphertext);
        hasher.finalize().into()
    }

    fn xor_keystream(key: &Key, chunk_index: u32, data: &mut [u8]) {
        for (block_idx, block) in data.chunks_mut(32).enumerate() {
            let ks = Self::keystream_block(key, chunk_index, block_idx as u64);
            for (b, k) in block.iter_mut().zip(ks.iter()) {
                *b ^= k;
            }
        }
    }
}

impl ChunkCipher for StreamCipher {
    fn seal(&self, key: &Key, chunk_index: u32, plaintext: &[u8]) -> Vec<u8> {
        let mut body = plaintext.to_vec();
        Self::xor_keystream(key, chunk_index, &mut body);
        let tag = Self::tag(key, chunk_index, &body);
        body.extend_from_slice(&tag);
        body
    }

    fn open(&self, key: &Key, chunk_index: u32, ciphertext: &[u8]) -> Option<Vec<u8>> {
        if ciphertext.len() < TAG_LEN {
            return None;
        }
        let (body, tag) = ciphertext.split_at(ciphertext.len() - TAG_LEN);
        if Self::tag(key, chunk_index, body)[..] != *tag {
            return None;
        }
        let mut plain = body.to_vec();
        Self::xor_keystream(key, chunk_index, &mut plain);
        Some(plain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_open_round_trip() {
        let key = [7u8; 32];
        let cipher = StreamCipher;
        for len in [1usize, 31, 32, 33, 4096] {
            let plain: Vec<u8> = (0..len).map(|i| (i % 251) as u8).collect();
            let ct = cipher.seal(&key, 3, &plain);
            assert_eq!(ct.len(), len + TAG_LEN);
            assert_eq!(cipher.open(&key, 3, &ct).unwrap(), plain);
        }
    }

    #[test]
    fn tampering_or_wrong_context_fails_open() {
        let key = [7u8; 32];
        let cipher = StreamCipher;
        let mut ct = cipher.seal(&key, 0, b"payload");
        assert!(cipher.open(&key, 1, &ct).is_none(), "chunk index is bound");
        assert!(cipher.open(&[8u8; 32], 0, &ct).is_none(), "key is bound");
        ct[0] ^= 1;
        assert!(cipher.open(&key, 0, &ct).is_none(), "ciphertext is bound");
    }

    #[test]
    fn ciphertext_differs_from_plaintext() {
        let key = [9u8; 32];
        let ct = StreamCipher.seal(&key, 0, b"secret bytes");
        assert_ne!(&ct[..12], b"secret bytes");
    }
}
