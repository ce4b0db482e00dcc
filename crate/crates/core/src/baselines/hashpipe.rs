use crate::baselines::top_k;
use crate::error::{LoftError, Result};
use crate::hash::{hash_flow, FlowMap, HashSeed, MinorSeed};
use crate::model::{FlowId, PacketRecord};
use crate::pipeline::CandidateSource;

/// HashPipe: a pipeline of hash-table stages. The first stage always admits
/// the arriving flow; the evicted entry moves down the pipeline, displacing
/// smaller entries, until it lands in an empty slot or falls off the end.
/// Tables are reported and cleared at every major-cycle boundary.
#[derive(Debug, Clone)]
pub struct HashPipe {
    width: usize,
    seeds: Vec<MinorSeed>,
    slots: Vec<Option<(FlowId, u64)>>,
    monitors: usize,
}

impl HashPipe {
    pub fn new(budget: usize, stages: usize, monitors: usize, seed: u64) -> Result<Self> {
        if stages == 0 || budget == 0 || !budget.is_multiple_of(stages) {
            return Err(LoftError::Config(format!(
                "{budget} slots do not split evenly into {stages} stages"
            )));
        }
        let seed = HashSeed::new(seed ^ 0x6870_6970);
        Ok(HashPipe {
            width: budget / stages,
            seeds: (0..stages as u64).map(|i| seed.for_minor(i)).collect(),
            slots: vec![None; budget],
            monitors,
        })
    }

    fn slot(&self, stage: usize, flow: FlowId) -> usize {
        stage * self.width + hash_flow(self.seeds[stage], flow, self.width)
    }

    pub fn process(&mut self, pkt: &PacketRecord) {
        let size = u64::from(pkt.size_bytes);
        let x = self.slot(0, pkt.flow_id);
        let mut carry = match self.slots[x] {
            None => {
                self.slots[x] = Some((pkt.flow_id, size));
                return;
            }
            Some((f, c)) if f == pkt.flow_id => {
                self.slots[x] = Some((f, c + size));
                return;
            }
            Some(old) => {
                self.slots[x] = Some((pkt.flow_id, size));
                old
            }
        };
        for stage in 1..self.seeds.len() {
            let x = self.slot(stage, carry.0);
            match self.slots[x] {
                None => {
                    self.slots[x] = Some(carry);
                    return;
                }
                Some((f, c)) if f == carry.0 => {
                    self.slots[x] = Some((f, c + carry.1));
                    return;
                }
                Some(old) if old.1 < carry.1 => {
                    self.slots[x] = Some(carry);
                    carry = old;
                }
                Some(_) => {}
            }
        }
    }

    /// Tracked flows with their counts summed over stages.
    pub fn tracked(&self) -> FlowMap<u64> {
        let mut m = FlowMap::default();
        for &(f, c) in self.slots.iter().flatten() {
            *m.entry(f).or_default() += c;
        }
        m
    }

    pub fn top(&self, k: usize) -> Vec<FlowId> {
        top_k(self.tracked().into_iter().collect(), k)
    }
}

impl CandidateSource for HashPipe {
    fn name(&self) -> &'static str {
        "hashpipe"
    }

    fn observe(&mut self, pkt: &PacketRecord) {
        self.process(pkt);
    }

    fn end_major(&mut self, _major: u64) -> Result<Vec<FlowId>> {
        let out = self.top(self.monitors);
        self.slots.fill(None);
        Ok(out)
    }

    fn fast_memory_counters(&self) -> usize {
        self.slots.len()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Zipf};

    use super::*;

    #[test]
    fn lone_flow_is_exact() {
        let mut h = HashPipe::new(16, 4, 4, 0).unwrap();
        for i in 0..7 {
            h.process(&PacketRecord::new(i, 3, 100));
        }
        assert_eq!(h.tracked().get(&FlowId(3)), Some(&700));
    }

    #[test]
    fn tracked_total_bounded_by_bytes() {
        let mut h = HashPipe::new(32, 4, 4, 1).unwrap();
        let mut total = 0;
        for i in 0..5000u64 {
            let s = 40 + (i % 1000) as u32;
            h.process(&PacketRecord::new(i, (i * 7919) % 300, s));
            total += u64::from(s);
            assert!(h.tracked().values().sum::<u64>() <= total);
        }
    }

    #[test]
    fn zipf_top_k_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zipf = Zipf::new(100_000, 1.1).unwrap();
        let mut h = HashPipe::new(16_384, 4, 64, 9).unwrap();
        let mut truth: HashMap<u64, u64> = HashMap::new();
        for i in 0..1_000_000u64 {
            let f = zipf.sample(&mut rng) as u64;
            h.process(&PacketRecord::new(i, f, 100));
            *truth.entry(f).or_default() += 100;
        }
        let mut exact: Vec<_> = truth.into_iter().collect();
        exact.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let true_top: std::collections::HashSet<_> =
            exact[..64].iter().map(|e| FlowId(e.0)).collect();
        let hits = h
            .top(64)
            .into_iter()
            .filter(|f| true_top.contains(f))
            .count();
        assert!(hits as f64 / 64.0 >= 0.9, "recall {hits}/64");
    }
}
