use crate::baselines::top_k;
use crate::error::{LoftError, Result};
use crate::hash::{hash_flow, FlowMap, HashSeed, MinorSeed};
use crate::model::{FlowId, PacketRecord};
use crate::pipeline::CandidateSource;

/// Stages needed for failure probability `delta`: `ceil(ln(1/delta))`.
pub fn cm_stages(delta: f64) -> usize {
    assert!(delta > 0.0 && delta < 1.0);
    (1.0 / delta).ln().ceil() as usize
}

/// Serial multistage filter with conservative update. Counters are cleared
/// at every major-cycle boundary; a flow is flagged once the minimum of its
/// counters reaches the threshold.
#[derive(Debug, Clone)]
pub struct MultistageFilter {
    width: usize,
    seeds: Vec<MinorSeed>,
    counters: Vec<u64>,
    threshold: u64,
    monitors: usize,
    flagged: FlowMap<u64>,
    idx: Vec<usize>,
}

impl MultistageFilter {
    /// `budget` counters split evenly over `stages`.
    pub fn new(
        budget: usize,
        stages: usize,
        threshold: u64,
        monitors: usize,
        seed: u64,
    ) -> Result<Self> {
        if stages == 0 || budget == 0 || !budget.is_multiple_of(stages) {
            return Err(LoftError::Config(format!(
                "{budget} counters do not split evenly into {stages} stages"
            )));
        }
        let seed = HashSeed::new(seed ^ 0x6d73_6600);
        Ok(MultistageFilter {
            width: budget / stages,
            seeds: (0..stages as u64).map(|i| seed.for_minor(i)).collect(),
            counters: vec![0; budget],
            threshold,
            monitors,
            flagged: FlowMap::default(),
            idx: vec![0; stages],
        })
    }

    pub fn stages(&self) -> usize {
        self.seeds.len()
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// Minimum over the flow's counters: never below the flow's true bytes
    /// in the current window.
    pub fn estimate(&self, flow: FlowId) -> u64 {
        self.seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| self.counters[i * self.width + hash_flow(s, flow, self.width)])
            .min()
            .expect("at least one stage")
    }

    /// Counts the packet; returns whether its flow is flagged.
    #[inline]
    pub fn process(&mut self, pkt: &PacketRecord) -> bool {
        let mut min = u64::MAX;
        for (i, &s) in self.seeds.iter().enumerate() {
            let x = i * self.width + hash_flow(s, pkt.flow_id, self.width);
            self.idx[i] = x;
            min = min.min(self.counters[x]);
        }
        let target = min + u64::from(pkt.size_bytes);
        for &x in &self.idx {
            let c = &mut self.counters[x];
            *c = (*c).max(target);
        }
        let flagged = target >= self.threshold;
        if flagged {
            self.flagged.insert(pkt.flow_id, target);
        }
        flagged
    }

    pub fn clear(&mut self) {
        self.counters.fill(0);
        self.flagged.clear();
    }
}

impl CandidateSource for MultistageFilter {
    fn name(&self) -> &'static str {
        "msf"
    }

    fn observe(&mut self, pkt: &PacketRecord) {
        self.process(pkt);
    }

    fn end_major(&mut self, _major: u64) -> Result<Vec<FlowId>> {
        let scored = self.flagged.drain().collect();
        let out = top_k(scored, self.monitors);
        self.counters.fill(0);
        Ok(out)
    }

    fn fast_memory_counters(&self) -> usize {
        self.counters.len()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn lone_flow_is_exact() {
        let mut m = MultistageFilter::new(64, 2, u64::MAX, 4, 1).unwrap();
        for i in 0..10 {
            m.process(&PacketRecord::new(i, 5, 100));
        }
        assert_eq!(m.estimate(FlowId(5)), 1000);
    }

    #[test]
    fn stage_count_formula() {
        assert_eq!(cm_stages(0.01), 5);
        assert_eq!(cm_stages(0.5), 1);
    }

    #[test]
    fn budget_must_split() {
        assert!(MultistageFilter::new(10, 4, 1, 1, 0).is_err());
        assert_eq!(
            MultistageFilter::new(2048, 4, 1, 1, 0)
                .unwrap()
                .fast_memory_counters(),
            2048
        );
    }

    #[test]
    fn never_underestimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = MultistageFilter::new(32, 4, u64::MAX, 4, 3).unwrap();
        let mut truth: HashMap<u64, u64> = HashMap::new();
        for i in 0..1000 {
            let f = rng.gen_range(0..200u64);
            let s = rng.gen_range(40..1500u32);
            m.process(&PacketRecord::new(i, f, s));
            *truth.entry(f).or_default() += u64::from(s);
        }
        for (f, t) in truth {
            assert!(m.estimate(FlowId(f)) >= t);
        }
    }

    #[test]
    fn flags_at_threshold_and_nominates_top() {
        let mut m = MultistageFilter::new(64, 2, 1000, 1, 1).unwrap();
        assert!(!m.process(&PacketRecord::new(0, 1, 999)));
        assert!(m.process(&PacketRecord::new(1, 1, 1)));
        m.process(&PacketRecord::new(2, 2, 1500));
        assert_eq!(m.end_major(0).unwrap(), vec![FlowId(2)]);
        assert_eq!(m.estimate(FlowId(2)), 0);
        assert!(m.end_major(1).unwrap().is_empty());
    }
}
