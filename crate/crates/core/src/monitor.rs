//! Precise per-flow monitoring with a leaky bucket.

use serde::{Deserialize, Serialize};

use crate::model::{FlowId, FlowSpec, PacketRecord, NANOS_PER_SEC};

/// Bytes of floating-point slack allowed above the burst before a packet
/// counts as a violation.
pub const VIOLATION_SLACK_BYTES: f64 = 1e-6;

/// Leaky bucket drained at the flow's permitted rate; a packet that lifts the
/// level above the burst size is a violation of the flow spec.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakyBucket {
    pub flow: FlowId,
    pub spec: FlowSpec,
    level: f64,
    last_update_ns: u64,
    violated: bool,
}

impl LeakyBucket {
    /// An empty bucket whose draining starts at `start_ns`.
    pub fn new(flow: FlowId, spec: FlowSpec, start_ns: u64) -> Self {
        LeakyBucket {
            flow,
            spec,
            level: 0.0,
            last_update_ns: start_ns,
            violated: false,
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Level the bucket would have at `now_ns` without further packets.
    pub fn level_at(&self, now_ns: u64) -> f64 {
        let dt = now_ns.saturating_sub(self.last_update_ns) as f64 / NANOS_PER_SEC as f64;
        (self.level - self.spec.gamma_bytes_per_s * dt).max(0.0)
    }

    pub fn violated(&self) -> bool {
        self.violated
    }

    /// Feeds one packet; returns whether this packet violates the spec.
    #[inline]
    pub fn monitor(&mut self, pkt: &PacketRecord) -> bool {
        debug_assert_eq!(pkt.flow_id, self.flow);
        self.offer(pkt.timestamp_ns, pkt.size_bytes)
    }

    #[inline]
    pub fn offer(&mut self, timestamp_ns: u64, size_bytes: u32) -> bool {
        debug_assert!(timestamp_ns >= self.last_update_ns);
        self.level = self.level_at(timestamp_ns) + f64::from(size_bytes);
        self.last_update_ns = self.last_update_ns.max(timestamp_ns);
        let v = self.level > self.spec.beta_bytes + VIOLATION_SLACK_BYTES;
        self.violated |= v;
        v
    }

    /// Policing variant: accepts the packet only if it keeps the level within
    /// the burst; a refused packet leaves the bucket untouched.
    pub fn admit(&mut self, timestamp_ns: u64, size_bytes: u32) -> bool {
        let level = self.level_at(timestamp_ns) + f64::from(size_bytes);
        if level > self.spec.beta_bytes + VIOLATION_SLACK_BYTES {
            return false;
        }
        self.level = level;
        self.last_update_ns = self.last_update_ns.max(timestamp_ns);
        true
    }
}

/// A flow caught by a detector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub flow: FlowId,
    /// First violation according to ground truth, when the flow truly violated.
    pub first_violation_ns: Option<u64>,
    pub detected_ns: u64,
    pub detector: String,
    pub seed: u64,
}

impl DetectionEvent {
    /// Detection delay in seconds, for flows that truly violated.
    pub fn delay_s(&self) -> Option<f64> {
        self.first_violation_ns
            .map(|v| self.detected_ns.saturating_sub(v) as f64 / NANOS_PER_SEC as f64)
    }
}
