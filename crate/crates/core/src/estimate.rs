//! Estimate path: per major cycle, rebuild each counter's cardinality from the
//! active-flow list, accumulate per-flow volume and cardinality sums into the
//! flow table, and rank flows by their adjusted estimate.

use std::cmp::Ordering;

use crate::error::{LoftError, Result};
use crate::hash::{hash_flow, FlowMap, FlowSet, MinorSeed};
use crate::model::{EstimateMode, FlowId};
use crate::update::CounterArray;

/// Per-flow accumulators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowTableEntry {
    /// Volume sum: bytes of every counter the flow mapped to.
    pub volume: u64,
    /// Cardinality sum: flow counts of those same counters.
    pub cardinality: u64,
    /// Major cycles since the last reset in which the flow was active.
    pub active_majors: u32,
}

/// Contribution of one major cycle to a flow's accumulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowDelta {
    pub flow: FlowId,
    pub volume: u64,
    pub cardinality: u64,
}

/// `numFlow` of one minor cycle: how many active flows hash to each counter.
pub fn reconstruct_cardinalities(active: &[FlowId], seed: MinorSeed, width: usize) -> Vec<u32> {
    let mut num_flow = vec![0u32; width];
    for &f in active {
        num_flow[hash_flow(seed, f, width)] += 1;
    }
    num_flow
}

/// Reusable buffers for [`accumulate_major_cycle_into`].
#[derive(Debug, Default)]
pub struct Scratch {
    num_flow: Vec<u32>,
    index: Vec<u32>,
}

pub fn accumulate_major_cycle(arrays: &[CounterArray], active: &[FlowId]) -> Vec<FlowDelta> {
    let mut out = Vec::new();
    accumulate_major_cycle_into(arrays, active, &mut Scratch::default(), &mut out);
    out
}

/// For each active flow, sums the counters it mapped to over the major
/// cycle's arrays and the cardinalities of those counters. Cardinalities are
/// rebuilt for each minor cycle separately.
pub fn accumulate_major_cycle_into(
    arrays: &[CounterArray],
    active: &[FlowId],
    scratch: &mut Scratch,
    out: &mut Vec<FlowDelta>,
) {
    out.clear();
    out.extend(active.iter().map(|&flow| FlowDelta {
        flow,
        volume: 0,
        cardinality: 0,
    }));
    for array in arrays {
        let w = array.width();
        scratch.num_flow.clear();
        scratch.num_flow.resize(w, 0);
        scratch.index.clear();
        for &f in active {
            let x = hash_flow(array.seed, f, w);
            scratch.index.push(x as u32);
            scratch.num_flow[x] += 1;
        }
        for (delta, &x) in out.iter_mut().zip(&scratch.index) {
            delta.volume += array.counters[x as usize];
            delta.cardinality += u64::from(scratch.num_flow[x as usize]);
        }
    }
}

/// Flow table with a fixed capacity.
#[derive(Debug)]
pub struct FlowTable {
    entries: FlowMap<FlowTableEntry>,
    capacity: usize,
}

impl FlowTable {
    pub fn with_capacity(capacity: usize) -> Self {
        FlowTable {
            entries: FlowMap::default(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, flow: FlowId) -> Option<&FlowTableEntry> {
        self.entries.get(&flow)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FlowId, &FlowTableEntry)> {
        self.entries.iter().map(|(f, e)| (*f, e))
    }

    /// Adds one major cycle's deltas. Flows absent from `deltas` are untouched.
    pub fn update(&mut self, deltas: &[FlowDelta]) -> Result<()> {
        for d in deltas {
            let len = self.entries.len();
            match self.entries.get_mut(&d.flow) {
                Some(e) => {
                    e.volume += d.volume;
                    e.cardinality += d.cardinality;
                    e.active_majors += 1;
                }
                None if len >= self.capacity => {
                    return Err(LoftError::TableFull {
                        capacity: self.capacity,
                        flow: d.flow,
                    })
                }
                None => {
                    self.entries.insert(
                        d.flow,
                        FlowTableEntry {
                            volume: d.volume,
                            cardinality: d.cardinality,
                            active_majors: 1,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn remove(&mut self, flow: FlowId) -> Option<FlowTableEntry> {
        self.entries.remove(&flow)
    }
}

/// Adjusted estimate `U = (numJ / j) * (A / C)` after `majors` major cycles
/// since the last reset.
///
/// In [`EstimateMode::NoCounting`] the cardinality sum is replaced by
/// `Z * numJ`, i.e. the number of minor cycles the flow was accounted in.
pub fn compute_estimate(
    entry: &FlowTableEntry,
    majors: u64,
    mode: EstimateMode,
    minors_per_major: u32,
) -> f64 {
    debug_assert!(entry.active_majors >= 1 && majors >= u64::from(entry.active_majors));
    let num_j = f64::from(entry.active_majors);
    let denom = match mode {
        EstimateMode::Counting => {
            assert!(
                entry.cardinality > 0,
                "tabled flow with zero cardinality sum"
            );
            entry.cardinality as f64
        }
        EstimateMode::NoCounting => f64::from(minors_per_major) * num_j,
    };
    (num_j / majors as f64) * (entry.volume as f64 / denom)
}

/// Flows selected for precise monitoring, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Watchlist {
    pub entries: Vec<(FlowId, f64)>,
}

impl Watchlist {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flows(&self) -> impl Iterator<Item = FlowId> + '_ {
        self.entries.iter().map(|(f, _)| *f)
    }

    pub fn contains(&self, flow: FlowId) -> bool {
        self.entries.iter().any(|(f, _)| *f == flow)
    }

    pub fn from_flows(flows: impl IntoIterator<Item = FlowId>) -> Self {
        Watchlist {
            entries: flows.into_iter().map(|f| (f, 0.0)).collect(),
        }
    }
}

/// Larger estimate first; equal estimates by smaller flow id.
fn rank(a: &(FlowId, f64), b: &(FlowId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

pub fn select_watchlist(
    table: &FlowTable,
    majors: u64,
    monitors: usize,
    mode: EstimateMode,
    minors_per_major: u32,
) -> Watchlist {
    let mut scored: Vec<(FlowId, f64)> = table
        .iter()
        .map(|(f, e)| (f, compute_estimate(e, majors, mode, minors_per_major)))
        .collect();
    if scored.len() > monitors && monitors > 0 {
        scored.select_nth_unstable_by(monitors - 1, rank);
        scored.truncate(monitors);
    }
    scored.truncate(monitors);
    scored.sort_unstable_by(rank);
    Watchlist { entries: scored }
}

/// Estimate-path state of one detector: flow table plus the count of major
/// cycles analysed since the last reset.
#[derive(Debug)]
pub struct EstimatePath {
    table: FlowTable,
    majors_since_reset: u64,
    monitors: usize,
    minors_per_major: u32,
    mode: EstimateMode,
    scratch: Scratch,
    deltas: Vec<FlowDelta>,
    excluded: FlowSet,
}

impl EstimatePath {
    pub fn new(
        monitors: usize,
        minors_per_major: u32,
        mode: EstimateMode,
        table_capacity: usize,
    ) -> Self {
        EstimatePath {
            table: FlowTable::with_capacity(table_capacity),
            majors_since_reset: 0,
            monitors,
            minors_per_major,
            mode,
            scratch: Scratch::default(),
            deltas: Vec::new(),
            excluded: FlowSet::default(),
        }
    }

    pub fn table(&self) -> &FlowTable {
        &self.table
    }

    pub fn majors_since_reset(&self) -> u64 {
        self.majors_since_reset
    }

    /// Folds one completed major cycle into the table and returns the new watchlist.
    pub fn run_major(&mut self, arrays: &[CounterArray], active: &[FlowId]) -> Result<Watchlist> {
        accumulate_major_cycle_into(arrays, active, &mut self.scratch, &mut self.deltas);
        if !self.excluded.is_empty() {
            let excluded = &self.excluded;
            self.deltas.retain(|d| !excluded.contains(&d.flow));
        }
        self.table.update(&self.deltas)?;
        self.majors_since_reset += 1;
        Ok(select_watchlist(
            &self.table,
            self.majors_since_reset,
            self.monitors,
            self.mode,
            self.minors_per_major,
        ))
    }

    pub fn estimate(&self, flow: FlowId) -> Option<f64> {
        self.table
            .get(flow)
            .map(|e| compute_estimate(e, self.majors_since_reset, self.mode, self.minors_per_major))
    }

    pub fn mode(&self) -> EstimateMode {
        self.mode
    }

    /// Drops a flow from the table for good, e.g. once it is blacklisted. It
    /// still counts towards the cardinality of the counters it shares.
    pub fn forget(&mut self, flow: FlowId) {
        self.table.remove(flow);
        self.excluded.insert(flow);
    }

    pub fn reset(&mut self) {
        self.table.clear();
        self.majors_since_reset = 0;
    }
}
