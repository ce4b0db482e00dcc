//! Shared domain types: packets, flow specifications, and the virtual clock
//! that maps packet timestamps onto (major, minor) accounting cycles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LoftError, Result};

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// Opaque 64-bit flow identifier.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FlowId(pub u64);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for FlowId {
    fn from(v: u64) -> Self {
        FlowId(v)
    }
}

/// One simulated packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PacketRecord {
    pub timestamp_ns: u64,
    pub flow_id: FlowId,
    pub size_bytes: u32,
}

impl PacketRecord {
    pub const MAX_SIZE: u32 = 65_535;

    pub fn new(timestamp_ns: u64, flow_id: impl Into<FlowId>, size_bytes: u32) -> Self {
        PacketRecord {
            timestamp_ns,
            flow_id: flow_id.into(),
            size_bytes,
        }
    }

    pub fn is_valid(&self) -> bool {
        (1..=Self::MAX_SIZE).contains(&self.size_bytes)
    }
}

/// Permitted rate and burst of a flow: a flow overuses iff it sends more than
/// `gamma * t + beta` bytes in some interval of length `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub gamma_bytes_per_s: f64,
    pub beta_bytes: f64,
}

impl FlowSpec {
    pub fn new(gamma_bytes_per_s: f64, beta_bytes: f64) -> Result<Self> {
        let spec = FlowSpec {
            gamma_bytes_per_s,
            beta_bytes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_bytes_per_s.is_finite() && self.gamma_bytes_per_s > 0.0) {
            return Err(LoftError::Config(format!(
                "flow spec rate must be positive, got {}",
                self.gamma_bytes_per_s
            )));
        }
        if !(self.beta_bytes.is_finite() && self.beta_bytes >= 0.0) {
            return Err(LoftError::Config(format!(
                "flow spec burst must be non-negative, got {}",
                self.beta_bytes
            )));
        }
        Ok(())
    }

    /// Maximum number of bytes a conforming flow may send in `t_s` seconds.
    pub fn limit(&self, t_s: f64) -> f64 {
        flow_spec_limit(self, t_s)
    }

    /// The same spec with its rate multiplied by `ratio`.
    pub fn scaled(&self, ratio: f64) -> FlowSpec {
        FlowSpec {
            gamma_bytes_per_s: self.gamma_bytes_per_s * ratio,
            beta_bytes: self.beta_bytes,
        }
    }
}

pub fn flow_spec_limit(spec: &FlowSpec, t_s: f64) -> f64 {
    debug_assert!(t_s >= 0.0);
    spec.gamma_bytes_per_s * t_s + spec.beta_bytes
}

/// Cycle structure of the virtual clock.
///
/// `minor_per_second` is ω, `minors_per_major` is Z and `reset_minors` is the
/// reset period in minor cycles (a multiple of Z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub minor_per_second: u32,
    pub minors_per_major: u32,
    pub reset_minors: u64,
}

/// Position of a timestamp on the virtual clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CycleIndex {
    /// Global minor-cycle number since trace start.
    pub minor_global: u64,
    pub major: u64,
    pub minor: u32,
    /// Minor cycles elapsed in the current reset period, counting the current one.
    pub theta: u64,
}

impl ClockConfig {
    pub fn new(minor_per_second: u32, minors_per_major: u32, reset_minors: u64) -> Result<Self> {
        let clock = ClockConfig {
            minor_per_second,
            minors_per_major,
            reset_minors,
        };
        clock.validate()?;
        Ok(clock)
    }

    pub fn validate(&self) -> Result<()> {
        if self.minor_per_second == 0 || self.minors_per_major == 0 || self.reset_minors == 0 {
            return Err(LoftError::Config(
                "clock parameters must all be positive".into(),
            ));
        }
        if !self
            .reset_minors
            .is_multiple_of(u64::from(self.minors_per_major))
        {
            return Err(LoftError::Config(format!(
                "reset period {} is not a multiple of the major cycle length {}",
                self.reset_minors, self.minors_per_major
            )));
        }
        Ok(())
    }

    pub fn minor_duration_s(&self) -> f64 {
        1.0 / f64::from(self.minor_per_second)
    }

    pub fn major_duration_s(&self) -> f64 {
        f64::from(self.minors_per_major) / f64::from(self.minor_per_second)
    }

    pub fn reset_duration_s(&self) -> f64 {
        self.reset_minors as f64 / f64::from(self.minor_per_second)
    }

    /// Global minor-cycle number containing `timestamp_ns`.
    #[inline]
    pub fn minor_global(&self, timestamp_ns: u64) -> u64 {
        ((u128::from(timestamp_ns) * u128::from(self.minor_per_second)) / u128::from(NANOS_PER_SEC))
            as u64
    }

    /// First nanosecond belonging to global minor cycle `m`.
    #[inline]
    pub fn minor_start_ns(&self, m: u64) -> u64 {
        let num = u128::from(m) * u128::from(NANOS_PER_SEC);
        let den = u128::from(self.minor_per_second);
        num.div_ceil(den) as u64
    }

    pub fn cycle_index(&self, timestamp_ns: u64) -> CycleIndex {
        cycle_index(timestamp_ns, self)
    }
}

pub fn cycle_index(timestamp_ns: u64, clock: &ClockConfig) -> CycleIndex {
    let m = clock.minor_global(timestamp_ns);
    let z = u64::from(clock.minors_per_major);
    CycleIndex {
        minor_global: m,
        major: m / z,
        minor: (m % z) as u32,
        theta: (m % clock.reset_minors) + 1,
    }
}

/// How the estimator normalizes a flow's volume sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EstimateMode {
    /// Divide by the reconstructed cardinality sum.
    #[default]
    Counting,
    /// Ablation: divide by `Z * numJ`, ignoring how many flows shared a counter.
    NoCounting,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub enum SamplerMode {
    /// Exponentially distributed gaps with mean `1 / sample_rate`.
    #[default]
    Exponential,
    /// Every packet registers its flow; separates sampler noise from the estimator.
    Exact,
}

/// All tunables of one detector instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// W: counters per minor-cycle array.
    pub counters: usize,
    /// W_fm: precise flow monitors (watchlist size).
    pub monitors: usize,
    pub clock: ClockConfig,
    /// λ in samples per second of virtual time.
    pub sample_rate: f64,
    pub sampler_mode: SamplerMode,
    pub hash_seed: u64,
    /// Seed for the sampler's and the miss-rate knob's random draws.
    pub rng_seed: u64,
    pub timeout_s: f64,
    pub estimate_mode: EstimateMode,
    /// Probability that a sampled flow is dropped from the active-flow list.
    pub miss_rate: f64,
    pub table_capacity: usize,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.clock.validate()?;
        if self.counters == 0 {
            return Err(LoftError::Config(
                "counter array width must be positive".into(),
            ));
        }
        if self.monitors == 0 || self.monitors > self.counters {
            return Err(LoftError::Config(format!(
                "monitor count must lie in 1..={}, got {}",
                self.counters, self.monitors
            )));
        }
        if self.sampler_mode == SamplerMode::Exponential
            && !(self.sample_rate.is_finite() && self.sample_rate > 0.0)
        {
            return Err(LoftError::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !(0.0..1.0).contains(&self.miss_rate) {
            return Err(LoftError::MissRate(self.miss_rate));
        }
        if self.table_capacity == 0 {
            return Err(LoftError::Config(
                "flow table capacity must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            counters: 16_384,
            monitors: 64,
            clock: ClockConfig {
                minor_per_second: 64,
                minors_per_major: 16,
                reset_minors: 64 * 30,
            },
            sample_rate: 2.1e6,
            sampler_mode: SamplerMode::Exponential,
            hash_seed: 0x5eed_1f7b_0c4a_9d21,
            rng_seed: 1,
            timeout_s: 300.0,
            estimate_mode: EstimateMode::Counting,
            miss_rate: 0.0,
            table_capacity: 1 << 22,
        }
    }
}
