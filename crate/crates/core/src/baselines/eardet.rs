//! EARDet-style detector: a byte-weighted Misra-Gries summary whose counters
//! also leak at the low rate γ_l.
//!
//! Both "decrement every counter" and the leak are a shift of one global
//! offset; a counter holds `raw` and its value is `raw - offset`. Amounts are
//! kept in nanobytes so the leak is exact integer arithmetic.
//!
//! Guarantees, with β_TH = β_l and packets of at most α bytes on a link that
//! carries at most ρτ + α bytes in any τ seconds:
//! - a flow conforming to (γ_l, β_l) is never flagged: its counter never
//!   exceeds its own leaky-bucket level;
//! - a flow sending more than γ_h τ + β_h in some τ is flagged, with
//!   γ_h = ρ/(n+1) + γ_l and β_h = β_TH + (n β_TH + α)/(n+1).

use std::collections::BTreeSet;

use crate::baselines::top_k;
use crate::error::{LoftError, Result};
use crate::hash::{FlowMap, FlowSet};
use crate::model::{FlowId, PacketRecord, NANOS_PER_SEC};
use crate::pipeline::CandidateSource;

const NANO: u128 = NANOS_PER_SEC as u128;

/// Counters needed so that a link of `link_rate` yields the high rate `gamma_h`:
/// `ceil(link_rate / gamma_h) - 1`.
pub fn eardet_counter_budget(link_rate: f64, gamma_h: f64) -> u64 {
    assert!(link_rate > 0.0 && gamma_h > 0.0);
    ((link_rate / gamma_h).ceil() as u64).saturating_sub(1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarDetConfig {
    /// n.
    pub counters: usize,
    /// ρ, bytes/s.
    pub link_rate: f64,
    /// γ_l, whole bytes/s.
    pub gamma_low: u64,
    /// β_TH (= β_l), bytes.
    pub beta_threshold: u64,
    /// α: largest packet, bytes.
    pub max_packet: u64,
}

impl EarDetConfig {
    /// (γ_h, β_h): flows above this spec are always caught.
    pub fn high_spec(&self) -> (f64, f64) {
        let n = self.counters as f64;
        let beta = self.beta_threshold as f64;
        (
            self.link_rate / (n + 1.0) + self.gamma_low as f64,
            beta + (n * beta + self.max_packet as f64) / (n + 1.0),
        )
    }
}

#[derive(Debug, Clone)]
pub struct EarDet {
    config: EarDetConfig,
    monitors: usize,
    offset: u128,
    last_ns: u64,
    counters: FlowMap<u128>,
    order: BTreeSet<(u128, FlowId)>,
    flagged: FlowSet,
    flag_order: Vec<FlowId>,
}

impl EarDet {
    pub fn new(config: EarDetConfig, monitors: usize) -> Result<Self> {
        if config.counters == 0 || config.gamma_low == 0 || !(config.link_rate > 0.0) {
            return Err(LoftError::Config(
                "EARDet needs at least one counter and positive rates".into(),
            ));
        }
        Ok(EarDet {
            config,
            monitors,
            offset: 0,
            last_ns: 0,
            counters: FlowMap::default(),
            order: BTreeSet::new(),
            flagged: FlowSet::default(),
            flag_order: Vec::new(),
        })
    }

    pub fn config(&self) -> &EarDetConfig {
        &self.config
    }

    /// Current counter value of a flow, in bytes (rounded down).
    pub fn count(&self, flow: FlowId) -> u64 {
        self.counters
            .get(&flow)
            .map_or(0, |&raw| (raw.saturating_sub(self.offset) / NANO) as u64)
    }

    pub fn is_flagged(&self, flow: FlowId) -> bool {
        self.flagged.contains(&flow)
    }

    fn drop_empty(&mut self) {
        while let Some(&(raw, f)) = self.order.first() {
            if raw > self.offset {
                break;
            }
            self.order.pop_first();
            self.counters.remove(&f);
        }
    }

    fn set(&mut self, flow: FlowId, old: Option<u128>, raw: u128) {
        if let Some(o) = old {
            self.order.remove(&(o, flow));
        }
        self.order.insert((raw, flow));
        self.counters.insert(flow, raw);
    }

    /// Counts the packet; returns true when it gets its flow flagged.
    pub fn process(&mut self, pkt: &PacketRecord) -> bool {
        let f = pkt.flow_id;
        let ts = pkt.timestamp_ns.max(self.last_ns);
        self.offset += u128::from(self.config.gamma_low) * u128::from(ts - self.last_ns);
        self.last_ns = ts;
        self.drop_empty();
        if self.flagged.contains(&f) {
            return false;
        }
        let s = u128::from(pkt.size_bytes) * NANO;
        let raw = match self.counters.get(&f).copied() {
            Some(old) => {
                self.set(f, Some(old), old + s);
                old + s
            }
            None if self.counters.len() < self.config.counters => {
                self.set(f, None, self.offset + s);
                self.offset + s
            }
            None => {
                let min = self.order.first().expect("counters are full").0 - self.offset;
                let d = min.min(s);
                self.offset += d;
                self.drop_empty();
                if d == s {
                    return false;
                }
                self.set(f, None, self.offset + s - d);
                self.offset + s - d
            }
        };
        if raw - self.offset > u128::from(self.config.beta_threshold) * NANO {
            self.order.remove(&(raw, f));
            self.counters.remove(&f);
            self.flagged.insert(f);
            self.flag_order.push(f);
            return true;
        }
        false
    }
}

impl CandidateSource for EarDet {
    fn name(&self) -> &'static str {
        "eardet"
    }

    fn observe(&mut self, pkt: &PacketRecord) {
        self.process(pkt);
    }

    /// Flags of the cycle, earliest first; flagged flows are counted again afterwards.
    fn end_major(&mut self, _major: u64) -> Result<Vec<FlowId>> {
        let n = self.flag_order.len();
        let scored = self
            .flag_order
            .drain(..)
            .enumerate()
            .map(|(i, f)| (f, (n - i) as u64))
            .collect();
        self.flagged.clear();
        Ok(top_k(scored, self.monitors))
    }

    fn fast_memory_counters(&self) -> usize {
        self.config.counters
    }
}
