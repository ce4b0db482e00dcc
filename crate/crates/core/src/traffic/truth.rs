use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{LoftError, Result};
use crate::hash::FlowMap;
use crate::model::{FlowId, FlowSpec, PacketRecord};
use crate::monitor::LeakyBucket;

/// Flows that truly violated their spec, with the time of the first
/// violating packet. Computed from the whole trace, never shown to detectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    first_violation: BTreeMap<FlowId, u64>,
}

impl GroundTruth {
    pub fn first_violation(&self, flow: FlowId) -> Option<u64> {
        self.first_violation.get(&flow).copied()
    }

    pub fn violators(&self) -> impl Iterator<Item = (FlowId, u64)> + '_ {
        self.first_violation.iter().map(|(&f, &t)| (f, t))
    }

    pub fn len(&self) -> usize {
        self.first_violation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_violation.is_empty()
    }

    pub(crate) fn record(&mut self, flow: FlowId, ts: u64) {
        self.first_violation.entry(flow).or_insert(ts);
    }

    /// Runs one leaky bucket per flow over a whole packet stream.
    pub fn from_packets<'a>(
        spec: FlowSpec,
        pkts: impl IntoIterator<Item = &'a PacketRecord>,
    ) -> Self {
        let mut b = GroundTruthBuilder::new(spec);
        for p in pkts {
            b.observe(p);
        }
        b.finish()
    }
}

/// Incremental ground-truth computation over an arbitrary flow-id space.
#[derive(Debug)]
pub struct GroundTruthBuilder {
    spec: FlowSpec,
    buckets: FlowMap<LeakyBucket>,
    truth: GroundTruth,
}

impl GroundTruthBuilder {
    pub fn new(spec: FlowSpec) -> Self {
        GroundTruthBuilder {
            spec,
            buckets: FlowMap::default(),
            truth: GroundTruth::default(),
        }
    }

    pub fn observe(&mut self, pkt: &PacketRecord) {
        let spec = self.spec;
        let b = self
            .buckets
            .entry(pkt.flow_id)
            .or_insert_with(|| LeakyBucket::new(pkt.flow_id, spec, pkt.timestamp_ns));
        if b.monitor(pkt) {
            self.truth.record(pkt.flow_id, pkt.timestamp_ns);
        }
    }

    pub fn finish(self) -> GroundTruth {
        self.truth
    }
}

/// Writes the sidecar CSV `flow_id,first_violation_ns`.
pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "flow_id,first_violation_ns")?;
    for (f, t) in truth.violators() {
        writeln!(w, "{},{}", f.0, t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let bad = |reason: String| LoftError::Trace {
        path: path.to_path_buf(),
        reason,
    };
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut truth = GroundTruth::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "flow_id,first_violation_ns" {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (f, t) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {}: expected two fields", i + 1)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| bad(format!("line {}: {e}", i + 1)))
        };
        truth.record(FlowId(parse(f)?), parse(t)?);
    }
    Ok(truth)
}
