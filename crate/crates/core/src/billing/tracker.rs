//! Tumbling-window usage tracking.
//!
//! Events accumulate into epoch-aligned windows of a configured length;
//! flushing emits each closed window's counters exactly once and advances a
//! watermark behind which late events are rejected (counted, not dropped
//! silently). Tracking is idempotent under an optional event id, and may be
//! restricted to events from trusted (usage-tracking-certified) nodes.

use super::events::{UsageEvent, UsageMetric};
use crate::asset::AssetId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;
use thiserror::Error;

/// One window's total for one (asset, metric).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedCounter {
    pub window_start: u64,
    pub window_end: u64,
    pub asset: AssetId,
    pub metric: UsageMetric,
    pub total: u64,
}

#[derive(Debug, Clone)]
pub struct TrackerConfig {
    /// Window length, seconds.
    pub window_s: u64,
    /// When set, only events from these nodes are accepted.
    pub trusted_nodes: Option<BTreeSet<String>>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { window_s: 60, trusted_nodes: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackAck {
    Accepted,
    /// The event id was seen before; nothing changed.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackError {
    #[error("late event at {at}: windows before {watermark} are closed")]
    LateEvent { at: u64, watermark: u64 },
    #[error("node `{0}` holds no valid usage-tracking certificate")]
    UntrustedNode(String),
    #[error("counter overflow for asset `{0}`")]
    CounterOverflow(AssetId),
}

#[derive(Debug, Default)]
struct TrackerState {
    watermark: u64,
    open: BTreeMap<u64, BTreeMap<(AssetId, UsageMetric), u64>>,
    seen: BTreeSet<String>,
    late: u64,
}

/// Thread-safe tracker: accumulation is atomic per (asset, metric, window)
/// and flushing serializes with accumulation.
#[derive(Debug)]
pub struct UsageTracker {
    config: TrackerConfig,
    state: Mutex<TrackerState>,
}

impl UsageTracker {
    pub fn new(config: TrackerConfig) -> Self {
        assert!(config.window_s > 0, "window length must be positive");
        UsageTracker { config, state: Mutex::new(TrackerState::default()) }
    }

    pub fn window_s(&self) -> u64 {
        self.config.window_s
    }

    pub fn track(&self, e: &UsageEvent) -> Result<TrackAck, TrackError> {
        if let Some(trusted) = &self.config.trusted_nodes {
            if !trusted.contains(&e.node) {
                return Err(TrackError::UntrustedNode(e.node.clone()));
            }
        }
        let mut state = self.state.lock().expect("tracker poisoned");
        if e.at < state.watermark {
            state.late += 1;
            return Err(TrackError::LateEvent { at: e.at, watermark: state.watermark });
        }
        if let Some(id) = &e.event_id {
            if !state.seen.insert(id.clone()) {
                return Ok(TrackAck::Duplicate);
            }
        }
        let start = e.at / self.config.window_s * self.config.window_s;
        let slot = state
            .open
            .entry(start)
            .or_default()
            .entry((e.asset.clone(), e.metric))
            .or_insert(0);
        *slot = slot.checked_add(e.amount).ok_or_else(|| TrackError::CounterOverflow(e.asset.clone()))?;
        Ok(TrackAck::Accepted)
    }

    /// Emits counters for every window fully closed at `now`, exactly once.
    pub fn flush_window(&self, now: u64) -> Vec<AggregatedCounter> {
        let w = self.config.window_s;
        let mut state = self.state.lock().expect("tracker poisoned");
        let boundary = now / w * w; // windows with end ≤ now start below this
        let mut out = Vec::new();
        let closed: Vec<u64> =
            state.open.range(..boundary).map(|(start, _)| *start).collect();
        for start in closed {
            if let Some(counters) = state.open.remove(&start) {
                for ((asset, metric), total) in counters {
                    out.push(AggregatedCounter {
                        window_start: start,
                        window_end: start + w,
                        asset,
                        metric,
                        total,
                    });
                }
            }
        }
        state.watermark = state.watermark.max(boundary);
        out
    }

    /// Late events rejected so far.
    pub fn late_events(&self) -> u64 {
        self.state.lock().expect("tracker poisoned").late
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(at: u64, amount: u64) -> UsageEvent {
        UsageEvent {
            asset: AssetId::new("model").unwrap(),
            metric: UsageMetric::Calls,
            amount,
            at,
            node: "n1".into(),
            event_id: None,
        }
    }

    #[test]
    fn thousand_calls_one_window() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        for i in 0..1000 {
            tracker.track(&event(i % 60, 1)).unwrap();
        }
        let counters = tracker.flush_window(60);
        assert_eq!(counters.len(), 1);
        assert_eq!(counters[0].total, 1000);
        assert_eq!((counters[0].window_start, counters[0].window_end), (0, 60));
    }

    #[test]
    fn no_events_no_counters() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        assert!(tracker.flush_window(600).is_empty());
    }

    #[test]
    fn straddling_events_split_by_window() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        for _ in 0..3 {
            tracker.track(&event(10, 1)).unwrap();
        }
        for _ in 0..5 {
            tracker.track(&event(70, 1)).unwrap();
        }
        let counters = tracker.flush_window(120);
        let totals: Vec<u64> = counters.iter().map(|c| c.total).collect();
        assert_eq!(totals, vec![3, 5]);
    }

    #[test]
    fn flush_is_exactly_once() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        tracker.track(&event(5, 7)).unwrap();
        assert_eq!(tracker.flush_window(60).len(), 1);
        assert!(tracker.flush_window(60).is_empty());
    }

    #[test]
    fn late_events_are_rejected_and_counted() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        tracker.track(&event(5, 1)).unwrap();
        tracker.flush_window(60);
        let err = tracker.track(&event(30, 1)).unwrap_err();
        assert!(matches!(err, TrackError::LateEvent { watermark: 60, .. }));
        assert_eq!(tracker.late_events(), 1);
        // The open window is still writable.
        tracker.track(&event(65, 1)).unwrap();
    }

    #[test]
    fn tracking_is_idempotent_under_event_ids() {
        let tracker = UsageTracker::new(TrackerConfig::default());
        let mut e = event(5, 10);
        e.event_id = Some("once".into());
        assert_eq!(tracker.track(&e).unwrap(), TrackAck::Accepted);
        assert_eq!(tracker.track(&e).unwrap(), TrackAck::Duplicate);
        let counters = tracker.flush_window(60);
        assert_eq!(counters[0].total, 10);
    }

    #[test]
    fn untrusted_nodes_are_refused() {
        let tracker = UsageTracker::new(TrackerConfig {
            window_s: 60,
            trusted_nodes: Some(["good".to_string()].into()),
        });
        let mut e = event(5, 1);
        e.node = "evil".into();
        assert!(matches!(tracker.track(&e), Err(TrackError::UntrustedNode(_))));
    }

    #[test]
    fn concurrent_tracking_loses_nothing() {
        use std::sync::Arc;
        let tracker = Arc::new(UsageTracker::new(TrackerConfig::default()));
        let mut handles = Vec::new();
        for t in 0..8 {
            let tracker = Arc::clone(&tracker);
            handles.push(std::thread::spawn(move || {
                for i in 0..1000 {
                    tracker.track(&event((t * 1000 + i) % 60, 1)).unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let total: u64 = tracker.flush_window(60).iter().map(|c| c.total).sum();
        assert_eq!(total, 8000);
    }
}
