//! The policing pipeline: blacklist filter, precise monitors for watchlisted
//! flows, then the detector's own per-packet work. Cycle boundaries fire
//! lazily from packet timestamps before the packet is handled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LoftError, Result};
use crate::estimate::EstimatePath;
use crate::hash::{FlowMap, HashSeed};
use crate::model::{ClockConfig, DetectorConfig, EstimateMode, FlowId, FlowSpec, PacketRecord};
use crate::monitor::{DetectionEvent, LeakyBucket};
use crate::sampler::{degrade, Sampler};
use crate::traffic::GroundTruth;
use crate::update::UpdatePath;

/// A detector that nominates flows for precise monitoring.
pub trait CandidateSource {
    fn name(&self) -> &'static str;

    /// Sees every packet that was not dropped by the blacklist.
    fn observe(&mut self, pkt: &PacketRecord);

    /// Major cycle `major` is over; returns the flows to monitor during the
    /// next one, most suspicious first.
    fn end_major(&mut self, major: u64) -> Result<Vec<FlowId>>;

    /// The reset period ended with major cycle `major`.
    fn reset(&mut self) {}

    /// The flow was blacklisted and will not be seen again.
    fn forget(&mut self, _flow: FlowId) {}

    /// Counters held in fast memory, precise monitors excluded.
    fn fast_memory_counters(&self) -> usize;
}

/// The LOFT detector: update path, sampler and estimate path.
#[derive(Debug)]
pub struct Loft {
    clock: ClockConfig,
    update: UpdatePath,
    sampler: Sampler,
    estimate: EstimatePath,
    miss_rate: f64,
    miss_rng: ChaCha8Rng,
}

impl Loft {
    pub fn new(config: &DetectorConfig) -> Result<Self> {
        config.validate()?;
        let z = config.clock.minors_per_major;
        Ok(Loft {
            clock: config.clock,
            update: UpdatePath::new(config.counters, z, HashSeed::new(config.hash_seed)),
            sampler: Sampler::new(config.sampler_mode, config.sample_rate, config.rng_seed),
            estimate: EstimatePath::new(
                config.monitors,
                z,
                config.estimate_mode,
                config.table_capacity,
            ),
            miss_rate: config.miss_rate,
            miss_rng: ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0x6d69_7373),
        })
    }

    pub fn update_path(&self) -> &UpdatePath {
        &self.update
    }

    pub fn estimate_path(&self) -> &EstimatePath {
        &self.estimate
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    fn mode(&self) -> EstimateMode {
        self.estimate.mode()
    }
}

impl CandidateSource for Loft {
    fn name(&self) -> &'static str {
        match self.mode() {
            EstimateMode::Counting => "loft",
            EstimateMode::NoCounting => "loft-nocount",
        }
    }

    #[inline]
    fn observe(&mut self, pkt: &PacketRecord) {
        let m = self.clock.minor_global(pkt.timestamp_ns);
        if m != self.update.current().minor_global {
            self.update.advance_to(m);
        }
        self.sampler.observe(pkt);
        self.update.update(pkt);
    }

    fn end_major(&mut self, major: u64) -> Result<Vec<FlowId>> {
        let z = u64::from(self.clock.minors_per_major);
        self.update.advance_to((major + 1) * z);
        let arrays = self.update.take_major(major)?;
        let active = degrade(
            self.sampler.drain_active_flows(),
            self.miss_rate,
            &mut self.miss_rng,
        )?;
        let watchlist = self.estimate.run_major(&arrays, &active)?;
        Ok(watchlist.flows().collect())
    }

    fn reset(&mut self) {
        self.estimate.reset();
        self.update.clear_archive();
    }

    fn forget(&mut self, flow: FlowId) {
        self.estimate.forget(flow);
    }

    fn fast_memory_counters(&self) -> usize {
        self.update.width()
    }
}

/// What happened to one packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disposition {
    DroppedBlacklisted,
    /// Checked by a precise monitor, then passed on.
    Monitored,
    Passed,
}

#[derive(Clone, Debug)]
enum Slot {
    Monitor(LeakyBucket),
    Blacklisted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub packets: u64,
    pub dropped: u64,
    pub monitored: u64,
    pub majors: u64,
    pub resets: u64,
}

/// Blacklist, monitors and boundary handling around a [`CandidateSource`].
pub struct Pipeline {
    source: Box<dyn CandidateSource + Send>,
    clock: ClockConfig,
    spec: FlowSpec,
    monitors: usize,
    seed: u64,
    slots: FlowMap<Slot>,
    blacklist: Vec<(FlowId, u64)>,
    current_major: u64,
    last_ns: u64,
    stats: PipelineStats,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("detector", &self.source.name())
            .field("current_major", &self.current_major)
            .field("blacklist", &self.blacklist)
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    pub fn new(
        source: Box<dyn CandidateSource + Send>,
        clock: ClockConfig,
        spec: FlowSpec,
        monitors: usize,
        seed: u64,
    ) -> Result<Self> {
        clock.validate()?;
        spec.validate()?;
        if monitors == 0 {
            return Err(LoftError::Config(
                "at least one flow monitor is required".into(),
            ));
        }
        Ok(Pipeline {
            source,
            clock,
            spec,
            monitors,
            seed,
            slots: FlowMap::default(),
            blacklist: Vec::new(),
            current_major: 0,
            last_ns: 0,
            stats: PipelineStats::default(),
        })
    }

    /// LOFT (or its no-counting ablation, per `config.estimate_mode`).
    pub fn loft(config: &DetectorConfig, spec: FlowSpec) -> Result<Self> {
        Self::new(
            Box::new(Loft::new(config)?),
            config.clock,
            spec,
            config.monitors,
            config.rng_seed,
        )
    }

    pub fn detector_name(&self) -> &'static str {
        self.source.name()
    }

    /// Fast-memory counters including the precise monitors.
    pub fn fast_memory_counters(&self) -> usize {
        self.source.fast_memory_counters() + self.monitors
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    /// Blacklisted flows with their detection times, in detection order.
    pub fn blacklist(&self) -> &[(FlowId, u64)] {
        &self.blacklist
    }

    pub fn is_blacklisted(&self, flow: FlowId) -> bool {
        matches!(self.slots.get(&flow), Some(Slot::Blacklisted))
    }

    /// Flows currently under precise monitoring, sorted.
    pub fn monitored_flows(&self) -> Vec<FlowId> {
        let mut v: Vec<_> = self
            .slots
            .iter()
            .filter(|(_, s)| matches!(s, Slot::Monitor(_)))
            .map(|(f, _)| *f)
            .collect();
        v.sort_unstable();
        v
    }

    pub fn source(&self) -> &dyn CandidateSource {
        self.source.as_ref()
    }

    /// Replaces all monitors with fresh, empty buckets for `flows` (at most
    /// W_fm of them, blacklisted flows skipped), draining from `start_ns`.
    pub fn install_watchlist(&mut self, flows: &[FlowId], start_ns: u64) {
        self.slots.retain(|_, s| matches!(s, Slot::Blacklisted));
        let mut installed = 0;
        for &f in flows {
            if installed == self.monitors {
                break;
            }
            if self.slots.contains_key(&f) {
                continue;
            }
            self.slots
                .insert(f, Slot::Monitor(LeakyBucket::new(f, self.spec, start_ns)));
            installed += 1;
        }
    }

    fn fire_boundaries(&mut self, ts: u64) -> Result<()> {
        let z = u64::from(self.clock.minors_per_major);
        let major = self.clock.minor_global(ts) / z;
        while self.current_major < major {
            let j = self.current_major;
            let candidates = self.source.end_major(j)?;
            let next_minor = (j + 1) * z;
            self.install_watchlist(&candidates, self.clock.minor_start_ns(next_minor));
            self.stats.majors += 1;
            if next_minor.is_multiple_of(self.clock.reset_minors) {
                self.source.reset();
                self.stats.resets += 1;
            }
            self.current_major += 1;
        }
        Ok(())
    }

    /// Handles one packet. Packets must come in timestamp order.
    #[inline]
    pub fn process(&mut self, pkt: &PacketRecord) -> Result<Disposition> {
        let ts = pkt.timestamp_ns;
        if ts < self.last_ns {
            return Err(LoftError::OutOfOrder {
                prev_ns: self.last_ns,
                got_ns: ts,
            });
        }
        self.last_ns = ts;
        self.fire_boundaries(ts)?;
        self.stats.packets += 1;
        let mut disposition = Disposition::Passed;
        if !self.slots.is_empty() {
            match self.slots.get_mut(&pkt.flow_id) {
                Some(Slot::Blacklisted) => {
                    self.stats.dropped += 1;
                    return Ok(Disposition::DroppedBlacklisted);
                }
                Some(Slot::Monitor(bucket)) => {
                    disposition = Disposition::Monitored;
                    self.stats.monitored += 1;
                    if bucket.monitor(pkt) {
                        self.slots.insert(pkt.flow_id, Slot::Blacklisted);
                        self.blacklist.push((pkt.flow_id, ts));
                        self.source.forget(pkt.flow_id);
                    }
                }
                None => {}
            }
        }
        self.source.observe(pkt);
        Ok(disposition)
    }

    /// Advances the clock to `ts` without a packet, firing due boundaries.
    pub fn advance_to(&mut self, ts: u64) -> Result<()> {
        if ts < self.last_ns {
            return Err(LoftError::OutOfOrder {
                prev_ns: self.last_ns,
                got_ns: ts,
            });
        }
        self.last_ns = ts;
        self.fire_boundaries(ts)
    }

    /// One event per blacklisted flow, judged against ground truth.
    pub fn detection_report(&self, truth: &GroundTruth, timeout_s: f64) -> DetectionReport {
        let events: Vec<DetectionEvent> = self
            .blacklist
            .iter()
            .map(|&(flow, detected_ns)| DetectionEvent {
                flow,
                first_violation_ns: truth.first_violation(flow),
                detected_ns,
                detector: self.source.name().to_string(),
                seed: self.seed,
            })
            .collect();
        DetectionReport::new(events, truth, timeout_s)
    }
}

/// Outcome of a run, judged against ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionReport {
    pub events: Vec<DetectionEvent>,
    /// Blacklisted flows that had not violated their spec by detection time.
    pub fp_count: usize,
    /// Violating flows not blacklisted within the timeout.
    pub false_negatives: Vec<FlowId>,
}

impl DetectionReport {
    pub fn new(events: Vec<DetectionEvent>, truth: &GroundTruth, timeout_s: f64) -> Self {
        let fp_count = events
            .iter()
            .filter(|e| e.first_violation_ns.is_none_or(|v| v > e.detected_ns))
            .count();
        let false_negatives = truth
            .violators()
            .filter(|&(f, _)| {
                !events
                    .iter()
                    .any(|e| e.flow == f && e.delay_s().is_some_and(|d| d <= timeout_s))
            })
            .map(|(f, _)| f)
            .collect();
        DetectionReport {
            events,
            fp_count,
            false_negatives,
        }
    }

    pub fn event(&self, flow: FlowId) -> Option<&DetectionEvent> {
        self.events.iter().find(|e| e.flow == flow)
    }
}
