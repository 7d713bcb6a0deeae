//! Node executors and democratized certificates.
//!
//! Anyone can run a certification authority; consumers choose which
//! authorities to trust per required property. Certificate tokens are keyed
//! tags verified against a local authority registry (no real signature
//! chains at desk scale).

use crate::asset::CertRequirement;
use crate::asset::PricingModel;
use crate::region::Region;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub authority: String,
    /// e.g. "region=EU", "tee", "usage-tracking"
    pub property: String,
    /// The node id this certificate speaks for.
    pub subject: String,
    /// Seconds since the epoch; expired certificates satisfy nothing.
    pub expires_at: u64,
    /// Keyed tag over (authority, property, subject, expires_at), hex.
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExecutorInfo {
    pub node_id: String,
    pub region: Region,
    pub capabilities: BTreeSet<String>,
    #[serde(default)]
    pub certificates: Vec<Certificate>,
    pub price: PricingModel,
    /// Relative processing rate; > 0.
    pub speed_factor: f64,
}

impl NodeExecutorInfo {
    pub fn check(&self) -> Result<(), String> {
        if !(self.speed_factor > 0.0 && self.speed_factor.is_finite()) {
            return Err(format!(
                "node `{}` speed factor {} must be finite and > 0",
                self.node_id, self.speed_factor
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("trusted set names unregistered authority `{0}`")]
    UnknownAuthority(String),
}

/// Authority name → verification key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuthorityRegistry {
    keys: BTreeMap<String, String>,
}

fn tag(key: &str, authority: &str, property: &str, subject: &str, expires_at: u64) -> String {
    let mut hasher = Sha256::new();
    for part in [key, authority, property, subject] {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hasher.update(expires_at.to_be_bytes());
    hex(&hasher.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl AuthorityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, authority: impl Into<String>, key: impl Into<String>) {
        self.keys.insert(authority.into(), key.into());
    }

    pub fn contains(&self, authority: &str) -> bool {
        self.keys.contains_key(authority)
    }

    /// Mints a certificate for `subject` with a valid token.
    pub fn issue(
        &self,
        authority: &str,
        property: impl Into<String>,
        subject: impl Into<String>,
        expires_at: u64,
    ) -> Result<Certificate, CertError> {
        let key = self
            .keys
            .get(authority)
            .ok_or_else(|| CertError::UnknownAuthority(authority.to_string()))?;
        let property = property.into();
        let subject = subject.into();
        let token = tag(key, authority, &property, &subject, expires_at);
        Ok(Certificate { authority: authority.to_string(), property, subject, expires_at, token })
    }

    /// Token check against the issuing authority's key; unknown authorities
    /// verify nothing.
    pub fn verify(&self, cert: &Certificate) -> bool {
        match self.keys.get(&cert.authority) {
            Some(key) => {
                cert.token
                    == tag(key, &cert.authority, &cert.property, &cert.subject, cert.expires_at)
            }
            None => false,
        }
    }
}

/// True iff every requirement is met by an unexpired certificate on the node
/// whose property matches, whose authority is in the requirement's trusted
/// set, and whose token verifies. A trusted set naming an authority the
/// registry does not know is an error, not a silent false.
pub fn verify_certificates(
    node: &NodeExecutorInfo,
    requirements: &[CertRequirement],
    now: u64,
    registry: &AuthorityRegistry,
) -> Result<bool, CertError> {
    for req in requirements {
        for authority in &req.trusted_authorities {
            if !registry.contains(authority) {
                return Err(CertError::UnknownAuthority(authority.clone()));
            }
        }
        let satisfied = node.certificates.iter().any(|cert| {
            cert.subject == node.node_id
                && cert.property == req.property
                && req.trusted_authorities.contains(&cert.authority)
                && cert.expires_at > now
                && registry.verify(cert)
        });
        if !satisfied {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Error)]
#[error("bad node registry line {line}: {message}")]
pub struct NodeRegistryError {
    pub line: usize,
    pub message: String,
}

/// Parses a newline-delimited node registry.
pub fn parse_node_registry(text: &str) -> Result<Vec<NodeExecutorInfo>, NodeRegistryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let node: NodeExecutorInfo = serde_json::from_str(line)
            .map_err(|e| NodeRegistryError { line: i + 1, message: e.to_string() })?;
        node.check().map_err(|message| NodeRegistryError { line: i + 1, message })?;
        out.push(node);
    }
    Ok(out)
}
