use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::top_k;
use crate::error::{LoftError, Result};
use crate::hash::{hash_flow, FlowMap, HashSeed, MinorSeed};
use crate::model::{FlowId, PacketRecord};
use crate::pipeline::CandidateSource;

/// Bytes per decay step: counts enter the decay exponent in units of one
/// full-size packet.
pub const DECAY_QUANTUM_BYTES: f64 = 1500.0;

/// HeavyKeeper with byte counts: d rows of buckets holding (flow, count).
/// A colliding packet decays the incumbent by its size with probability
/// `b^(-count / quantum)`; an emptied bucket is taken over.
#[derive(Debug, Clone)]
pub struct HeavyKeeper {
    width: usize,
    seeds: Vec<MinorSeed>,
    buckets: Vec<(FlowId, u64)>,
    base: f64,
    monitors: usize,
    rng: ChaCha8Rng,
}

impl HeavyKeeper {
    pub fn new(budget: usize, rows: usize, base: f64, monitors: usize, seed: u64) -> Result<Self> {
        if rows == 0 || budget == 0 || !budget.is_multiple_of(rows) {
            return Err(LoftError::Config(format!(
                "{budget} buckets do not split evenly into {rows} rows"
            )));
        }
        if !(base > 1.0) {
            return Err(LoftError::Config(format!(
                "decay base must exceed 1, got {base}"
            )));
        }
        let hs = HashSeed::new(seed ^ 0x686b_6565);
        Ok(HeavyKeeper {
            width: budget / rows,
            seeds: (0..rows as u64).map(|i| hs.for_minor(i)).collect(),
            buckets: vec![(FlowId(0), 0); budget],
            base,
            monitors,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Probability that a colliding packet decays a bucket holding `count` bytes.
    pub fn decay_probability(&self, count: u64) -> f64 {
        self.base.powf(-(count as f64) / DECAY_QUANTUM_BYTES)
    }

    pub fn process(&mut self, pkt: &PacketRecord) {
        let size = u64::from(pkt.size_bytes);
        for r in 0..self.seeds.len() {
            let x = r * self.width + hash_flow(self.seeds[r], pkt.flow_id, self.width);
            let (f, c) = self.buckets[x];
            if c == 0 {
                self.buckets[x] = (pkt.flow_id, size);
            } else if f == pkt.flow_id {
                self.buckets[x].1 = c + size;
            } else if self.rng.gen::<f64>() < self.decay_probability(c) {
                let left = c.saturating_sub(size);
                self.buckets[x] = if left == 0 {
                    (pkt.flow_id, size)
                } else {
                    (f, left)
                };
            }
        }
    }

    /// Estimate of a flow: its largest bucket count, 0 when untracked.
    pub fn estimate(&self, flow: FlowId) -> u64 {
        (0..self.seeds.len())
            .map(|r| self.buckets[r * self.width + hash_flow(self.seeds[r], flow, self.width)])
            .filter(|&(f, c)| f == flow && c > 0)
            .map(|(_, c)| c)
            .max()
            .unwrap_or(0)
    }

    pub fn tracked(&self) -> FlowMap<u64> {
        let mut m: FlowMap<u64> = FlowMap::default();
        for &(f, c) in &self.buckets {
            if c > 0 {
                let e = m.entry(f).or_default();
                *e = (*e).max(c);
            }
        }
        m
    }
}

impl CandidateSource for HeavyKeeper {
    fn name(&self) -> &'static str {
        "heavykeeper"
    }

    fn observe(&mut self, pkt: &PacketRecord) {
        self.process(pkt);
    }

    fn end_major(&mut self, _major: u64) -> Result<Vec<FlowId>> {
        let out = top_k(self.tracked().into_iter().collect(), self.monitors);
        self.buckets.fill((FlowId(0), 0));
        Ok(out)
    }

    fn fast_memory_counters(&self) -> usize {
        self.buckets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_flow_is_exact() {
        let mut h = HeavyKeeper::new(16, 2, 1.08, 4, 1).unwrap();
        for i in 0..9 {
            h.process(&PacketRecord::new(i, 4, 1500));
        }
        assert_eq!(h.estimate(FlowId(4)), 13_500);
    }

    #[test]
    fn empty_bucket_always_replaced() {
        let h = HeavyKeeper::new(16, 2, 1.08, 4, 1).unwrap();
        assert_eq!(h.decay_probability(0), 1.0);
    }

    #[test]
    fn mouse_rarely_displaces_elephant() {
        // Width-1 rows force the collision. The elephant holds 20 full-size
        // packets; a mouse sends 20 full-size packets against it.
        let trials = 100_000;
        let mut displaced = 0;
        let mut h = HeavyKeeper::new(1, 1, 1.08, 1, 77).unwrap();
        for _ in 0..trials {
            h.buckets[0] = (FlowId(1), 20 * 1500);
            for t in 0..20 {
                h.process(&PacketRecord::new(t, 2, 1500));
            }
            if h.buckets[0].0 == FlowId(2) {
                displaced += 1;
            }
        }
        assert!((displaced as f64) / (trials as f64) < 1e-3, "{displaced}");
    }

    #[test]
    fn counts_never_negative_and_reported() {
        let mut h = HeavyKeeper::new(8, 2, 1.08, 2, 5).unwrap();
        for i in 0..2000u64 {
            h.process(&PacketRecord::new(
                i,
                if i % 3 == 0 { 1 } else { i % 50 },
                300,
            ));
        }
        assert_eq!(h.end_major(0).unwrap()[0], FlowId(1));
        assert!(h.tracked().is_empty());
    }
}
