use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calendar::Calendar;
use super::imix::Imix;
use super::truth::GroundTruth;
use crate::error::{LoftError, Result};
use crate::hash::FlowMap;
use crate::model::{FlowId, FlowSpec, PacketRecord, NANOS_PER_SEC};
use crate::monitor::LeakyBucket;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Every benign flow sends at its permitted rate.
    FullUtilization,
    /// Half the benign flows send at the permitted rate, the rest 25 times slower.
    HalfUtilization,
    /// Packets come from a trace file; nothing to generate.
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PacketSizing {
    Fixed(u32),
    Imix(Imix),
}

impl PacketSizing {
    fn max_size(&self) -> u32 {
        match self {
            PacketSizing::Fixed(s) => *s,
            PacketSizing::Imix(m) => m.max_size(),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            PacketSizing::Fixed(s) => f64::from(*s),
            PacketSizing::Imix(m) => m.mean(),
        }
    }
}

/// Rate divisor of the slow half in [`ScenarioKind::HalfUtilization`].
pub const HALF_UTILIZATION_SLOWDOWN: f64 = 25.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Benign flows, with ids `0..flows`. The overuse flow, if any, has id `flows`.
    pub flows: u64,
    pub spec: FlowSpec,
    pub duration_s: f64,
    /// ℓ: the overuse flow sends at ℓγ; 0 disables it.
    pub overuse_ratio: f64,
    /// Earliest start of the overuse flow.
    pub overuse_start_s: f64,
    pub sizing: PacketSizing,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.kind == ScenarioKind::External {
            return Err(LoftError::Config(
                "external scenarios are read from a trace file".into(),
            ));
        }
        if self.flows == 0 {
            return Err(LoftError::Config(
                "a scenario needs at least one flow".into(),
            ));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(LoftError::Config(format!(
                "bad duration {}",
                self.duration_s
            )));
        }
        if !(self.overuse_ratio == 0.0 || self.overuse_ratio > 1.0)
            || !self.overuse_ratio.is_finite()
        {
            return Err(LoftError::Config(format!(
                "overuse ratio must be 0 or greater than 1, got {}",
                self.overuse_ratio
            )));
        }
        if !(self.overuse_start_s >= 0.0) {
            return Err(LoftError::Config(
                "overuse start must be non-negative".into(),
            ));
        }
        let max = self.sizing.max_size();
        if max == 0 || max > PacketRecord::MAX_SIZE {
            return Err(LoftError::Config(format!("bad packet size {max}")));
        }
        if f64::from(max) > self.spec.beta_bytes {
            return Err(LoftError::Config(format!(
                "packets of {max} B exceed the burst of {} B; benign flows would violate",
                self.spec.beta_bytes
            )));
        }
        Ok(())
    }

    pub fn overuse_flow(&self) -> Option<FlowId> {
        (self.overuse_ratio > 0.0).then_some(FlowId(self.flows))
    }

    /// Sending rate of flow `i` in bytes/s.
    pub fn rate_of(&self, flow: u64) -> f64 {
        let gamma = self.spec.gamma_bytes_per_s;
        if flow == self.flows {
            return self.overuse_ratio * gamma;
        }
        match self.kind {
            ScenarioKind::HalfUtilization if flow >= self.flows.div_ceil(2) => {
                gamma / HALF_UTILIZATION_SLOWDOWN
            }
            _ => gamma,
        }
    }

    /// Offered load in bytes/s, all flows together.
    pub fn aggregate_rate(&self) -> f64 {
        let gamma = self.spec.gamma_bytes_per_s;
        let fast = match self.kind {
            ScenarioKind::HalfUtilization => self.flows.div_ceil(2),
            _ => self.flows,
        };
        let slow = self.flows - fast;
        fast as f64 * gamma
            + slow as f64 * gamma / HALF_UTILIZATION_SLOWDOWN
            + self.overuse_ratio * gamma
    }

    pub fn packet_rate(&self) -> f64 {
        self.aggregate_rate() / self.sizing.mean()
    }

    pub fn generate(&self) -> Result<TraceGenerator> {
        TraceGenerator::new(self.clone())
    }
}

#[derive(Debug)]
struct FlowState {
    rate: f64,
    bucket: LeakyBucket,
}

/// Lazy, timestamp-sorted packet stream of a scenario. Each flow sends at a
/// constant rate: after a packet of `s` bytes the next one follows
/// `ceil(s / rate)` nanoseconds later, from a random phase.
#[derive(Debug)]
pub struct TraceGenerator {
    config: ScenarioConfig,
    end_ns: u64,
    queue: Calendar,
    flows: Vec<FlowState>,
    rng: ChaCha8Rng,
    truth: GroundTruth,
    emitted: u64,
}

#[inline]
fn gap_ns(size: u32, rate: f64) -> u64 {
    (f64::from(size) * NANOS_PER_SEC as f64 / rate).ceil() as u64
}

impl TraceGenerator {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let total = config.flows + u64::from(config.overuse_ratio > 0.0);
        // About 256 packets per calendar bucket.
        let mut queue = Calendar::new((256.0 * NANOS_PER_SEC as f64 / config.packet_rate()) as u64);
        let mut flows = Vec::with_capacity(total as usize);
        let mean = config.sizing.mean().round().max(1.0) as u32;
        for f in 0..total {
            let rate = config.rate_of(f);
            let base = if f == config.flows {
                (config.overuse_start_s * NANOS_PER_SEC as f64).round() as u64
            } else {
                0
            };
            let start = base + rng.gen_range(0..gap_ns(mean, rate));
            queue.push(start, f);
            flows.push(FlowState {
                rate,
                bucket: LeakyBucket::new(FlowId(f), config.spec, start),
            });
        }
        Ok(TraceGenerator {
            end_ns: (config.duration_s * NANOS_PER_SEC as f64).round() as u64,
            config,
            queue,
            flows,
            rng,
            truth: GroundTruth::default(),
            emitted: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Violations among the packets emitted so far.
    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn into_ground_truth(self) -> GroundTruth {
        self.truth
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Emits the rest of the stream and returns the complete ground truth.
    pub fn run_to_end(mut self) -> (Vec<PacketRecord>, GroundTruth) {
        let pkts: Vec<_> = self.by_ref().collect();
        (pkts, self.truth)
    }
}

impl Iterator for TraceGenerator {
    type Item = PacketRecord;

    fn next(&mut self) -> Option<PacketRecord> {
        let (ts, f) = self.queue.peek()?;
        if ts >= self.end_ns {
            return None;
        }
        self.queue.pop();
        let size = match &self.config.sizing {
            PacketSizing::Fixed(s) => *s,
            PacketSizing::Imix(m) => m.draw(&mut self.rng),
        };
        let state = &mut self.flows[f as usize];
        self.queue.push(ts + gap_ns(size, state.rate), f);
        if state.bucket.offer(ts, size) {
            self.truth.record(FlowId(f), ts);
        }
        self.emitted += 1;
        Some(PacketRecord::new(ts, f, size))
    }
}

/// Drops every packet that would push its flow beyond the spec, so the output
/// is conformant; other packets pass unchanged.
pub fn regulate<I>(packets: I, spec: FlowSpec) -> impl Iterator<Item = PacketRecord>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut buckets: FlowMap<LeakyBucket> = FlowMap::default();
    packets.into_iter().filter(move |p| {
        buckets
            .entry(p.flow_id)
            .or_insert_with(|| LeakyBucket::new(p.flow_id, spec, p.timestamp_ns))
            .admit(p.timestamp_ns, p.size_bytes)
    })
}
