//! Usage events, the raw material of metering.

use crate::asset::AssetId;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageMetric {
    Calls,
    Rows,
    Bytes,
    Seconds,
}

impl UsageMetric {
    pub fn name(&self) -> &'static str {
        match self {
            UsageMetric::Calls => "calls",
            UsageMetric::Rows => "rows",
            UsageMetric::Bytes => "bytes",
            UsageMetric::Seconds => "seconds",
        }
    }
}

impl fmt::Display for UsageMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One metered observation from an executor node. `at` is seconds since the
/// epoch; per (asset, node) stream timestamps never decrease.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub asset: AssetId,
    pub metric: UsageMetric,
    pub amount: u64,
    pub at: u64,
    pub node: String,
    /// Optional delivery id making tracking idempotent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("bad usage log line {line}: {message}")]
pub struct UsageLogError {
    pub line: usize,
    pub message: String,
}

/// Parses a newline-delimited usage log.
pub fn parse_usage_log(text: &str) -> Result<Vec<UsageEvent>, UsageLogError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let event: UsageEvent = serde_json::from_str(line)
            .map_err(|e| UsageLogError { line: i + 1, message: e.to_string() })?;
        out.push(event);
    }
    Ok(out)
}

/// Renders events as a newline-delimited log.
pub fn render_usage_log(events: &[UsageEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events always serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trips() {
        let events = vec![UsageEvent {
            asset: AssetId::new("model").unwrap(),
            metric: UsageMetric::Calls,
            amount: 42,
            at: 1000,
            node: "node-1".into(),
            event_id: Some("e1".into()),
        }];
        let text = render_usage_log(&events);
        assert_eq!(parse_usage_log(&text).unwrap(), events);
    }

    #[test]
    fn bad_lines_are_located() {
        let err = parse_usage_log("{}\n").unwrap_err();
        assert_eq!(err.line, 1);
    }
}
