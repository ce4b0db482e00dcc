//! Packet sampler building the per-major-cycle active-flow list.
//!
//! Sampling instants are separated by Exponential(λ) gaps in virtual time; the
//! first packet at or after the next instant registers its flow.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LoftError, Result};
use crate::hash::FlowSet;
use crate::model::{FlowId, PacketRecord, SamplerMode, NANOS_PER_SEC};

#[derive(Debug, Clone)]
pub struct Sampler {
    mode: SamplerMode,
    rate: f64,
    next_sample_ns: f64,
    active: FlowSet,
    rng: ChaCha8Rng,
    samples: u64,
}

/// Uniform draw from (0, 1].
pub fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

impl Sampler {
    pub fn new(mode: SamplerMode, rate: f64, seed: u64) -> Self {
        Sampler {
            mode,
            rate,
            next_sample_ns: 0.0,
            active: FlowSet::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            samples: 0,
        }
    }

    pub fn exponential(rate: f64, seed: u64) -> Self {
        Self::new(SamplerMode::Exponential, rate, seed)
    }

    pub fn exact() -> Self {
        Self::new(SamplerMode::Exact, f64::INFINITY, 0)
    }

    pub fn next_sample_ns(&self) -> f64 {
        self.next_sample_ns
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    /// Registers the packet's flow if the packet falls on a sampling instant.
    #[inline]
    pub fn observe(&mut self, pkt: &PacketRecord) -> bool {
        match self.mode {
            SamplerMode::Exact => {
                self.active.insert(pkt.flow_id);
                self.samples += 1;
                true
            }
            SamplerMode::Exponential => {
                if (pkt.timestamp_ns as f64) < self.next_sample_ns {
                    return false;
                }
                let u = unit_open_closed(&mut self.rng);
                self.take_sample(pkt.flow_id, u);
                true
            }
        }
    }

    /// Like [`Sampler::observe`] with the uniform draw supplied by the caller.
    pub fn observe_with(&mut self, pkt: &PacketRecord, u: f64) -> bool {
        assert!(u > 0.0 && u <= 1.0, "u must lie in (0, 1]");
        if (pkt.timestamp_ns as f64) < self.next_sample_ns {
            return false;
        }
        self.take_sample(pkt.flow_id, u);
        true
    }

    fn take_sample(&mut self, flow: FlowId, u: f64) {
        self.active.insert(flow);
        self.samples += 1;
        self.next_sample_ns += -u.ln() / self.rate * NANOS_PER_SEC as f64;
    }

    /// Returns the flows sampled since the previous drain, sorted, and empties the set.
    pub fn drain_active_flows(&mut self) -> Vec<FlowId> {
        let mut flows: Vec<FlowId> = self.active.drain().collect();
        flows.sort_unstable();
        flows
    }

    pub fn clear(&mut self) {
        self.active.clear();
    }
}

/// Removes each flow independently with probability `miss_rate`.
pub fn degrade<R: Rng + ?Sized>(
    mut active: Vec<FlowId>,
    miss_rate: f64,
    rng: &mut R,
) -> Result<Vec<FlowId>> {
    if !(0.0..1.0).contains(&miss_rate) {
        return Err(LoftError::MissRate(miss_rate));
    }
    if miss_rate > 0.0 {
        active.retain(|_| rng.gen::<f64>() >= miss_rate);
    }
    Ok(active)
}
