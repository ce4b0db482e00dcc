//! Experiment harness: profiles, detector construction, seeded runs,
//! parameter sweeps, bound tables and the update-path benchmark.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{EarDet, EarDetConfig, HashPipe, HeavyKeeper, MultistageFilter};
use crate::bound::{solve_reset_cycle, BoundParams, ResetCycle, ResetSolution};
use crate::error::{LoftError, Result};
use crate::hash::{splitmix64, HashSeed};
use crate::model::{
    ClockConfig, DetectorConfig, EstimateMode, FlowId, FlowSpec, PacketRecord, SamplerMode,
    NANOS_PER_SEC,
};
use crate::pipeline::{CandidateSource, Loft, Pipeline};
use crate::sampler::Sampler;
use crate::traffic::{
    GroundTruth, GroundTruthBuilder, Imix, PacketSizing, ScenarioConfig, ScenarioKind,
};
use crate::update::UpdatePath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    Loft,
    LoftNoCount,
    Msf,
    EarDet,
    HashPipe,
    HeavyKeeper,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Loft,
        DetectorKind::LoftNoCount,
        DetectorKind::Msf,
        DetectorKind::EarDet,
        DetectorKind::HashPipe,
        DetectorKind::HeavyKeeper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Loft => "loft",
            DetectorKind::LoftNoCount => "loft-nocount",
            DetectorKind::Msf => "msf",
            DetectorKind::EarDet => "eardet",
            DetectorKind::HashPipe => "hashpipe",
            DetectorKind::HeavyKeeper => "heavykeeper",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = LoftError;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                LoftError::Config(format!(
                    "unknown detector {s:?}; expected one of loft, loft-nocount, msf, eardet, hashpipe, heavykeeper"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// N=16384, W=2048, 60 s: runs in seconds on a laptop.
    Desk,
    /// N=130000, W=16384 plus 64 monitors: full scale, minutes per run.
    Paper,
}

impl FromStr for Profile {
    type Err = LoftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(LoftError::Config(format!(
                "unknown profile {s:?}; expected desk or paper"
            ))),
        }
    }
}

/// How long a reset period lasts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ResetPolicy {
    Fixed {
        minors: u64,
    },
    /// The smallest period whose bound reaches `target` detection
    /// probability for the scenario's overuse ratio (`fallback_ratio` when
    /// the scenario has no overuse flow). Capped at `cap_minors`.
    Solved {
        target: f64,
        fallback_ratio: f64,
        cap_minors: u64,
    },
}

/// Stage and row counts of the baselines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub msf_stages: usize,
    pub hashpipe_stages: usize,
    pub heavykeeper_rows: usize,
    pub heavykeeper_base: f64,
    /// Link rate EARDet is provisioned for; the scenario's offered load when unset.
    pub eardet_link_rate: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            msf_stages: 4,
            hashpipe_stages: 4,
            heavykeeper_rows: 2,
            heavykeeper_base: 1.08,
            eardet_link_rate: None,
        }
    }
}

/// Everything that determines one run, apart from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub detector: DetectorKind,
    /// W.
    pub counters: usize,
    /// W_fm.
    pub monitors: usize,
    /// ω.
    pub minor_per_second: u32,
    /// Z.
    pub minors_per_major: u32,
    pub reset: ResetPolicy,
    /// λ is set to this many samples per flow per major cycle unless
    /// `sample_rate` overrides it.
    pub samples_per_flow_major: f64,
    pub sample_rate: Option<f64>,
    pub miss_rate: f64,
    pub timeout_s: f64,
    pub baselines: BaselineConfig,
    /// Stop as soon as the overuse flow is caught or has timed out.
    pub early_stop: bool,
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (flows, spec, sizing, counters) = match profile {
            Profile::Desk => (
                16_384,
                FlowSpec {
                    gamma_bytes_per_s: 96_000.0,
                    beta_bytes: 1500.0,
                },
                PacketSizing::Fixed(1500),
                2048,
            ),
            Profile::Paper => (
                130_000,
                FlowSpec {
                    gamma_bytes_per_s: 375_000.0,
                    beta_bytes: 1518.0,
                },
                PacketSizing::Imix(Imix::default()),
                16_384,
            ),
        };
        ExperimentConfig {
            scenario: ScenarioConfig {
                kind: ScenarioKind::FullUtilization,
                flows,
                spec,
                duration_s: 60.0,
                overuse_ratio: 1.5,
                overuse_start_s: 0.0,
                sizing,
                seed: 0,
            },
            detector: DetectorKind::Loft,
            counters,
            monitors: 64,
            minor_per_second: 64,
            minors_per_major: 16,
            reset: ResetPolicy::Solved {
                target: 0.95,
                fallback_ratio: 2.0,
                cap_minors: 64 * 3600,
            },
            samples_per_flow_major: 4.0,
            sample_rate: None,
            miss_rate: 0.0,
            timeout_s: 300.0,
            baselines: BaselineConfig::default(),
            early_stop: true,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.scenario.seed = seed;
        c
    }

    pub fn seed(&self) -> u64 {
        self.scenario.seed
    }

    /// Flows on the link, the overuse flow included.
    pub fn total_flows(&self) -> u64 {
        self.scenario.flows + u64::from(self.scenario.overuse_ratio > 0.0)
    }

    /// λ in samples per second.
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate.unwrap_or_else(|| {
            self.samples_per_flow_major
                * self.total_flows() as f64
                * f64::from(self.minor_per_second)
                / f64::from(self.minors_per_major)
        })
    }

    pub fn bound_params(&self, overuse_ratio: f64, cap_minors: u64) -> BoundParams {
        BoundParams {
            flows: self.total_flows(),
            counters: self.counters as u64,
            monitors: self.monitors as u64,
            minor_per_second: self.minor_per_second,
            minors_per_major: self.minors_per_major,
            spec: self.scenario.spec,
            overuse_ratio,
            theta_cap: cap_minors,
        }
    }

    /// Reset period in minor cycles, with the bound solution when one was
    /// computed. An unachievable target falls back to the cap.
    pub fn resolve_reset(&self) -> Result<(u64, Option<ResetSolution>)> {
        match self.reset {
            ResetPolicy::Fixed { minors } => Ok((minors, None)),
            ResetPolicy::Solved {
                target,
                fallback_ratio,
                cap_minors,
            } => {
                let ratio = if self.scenario.overuse_ratio > 1.0 {
                    self.scenario.overuse_ratio
                } else {
                    fallback_ratio
                };
                let s = solve_reset_cycle(target, &self.bound_params(ratio, cap_minors))?;
                let z = u64::from(self.minors_per_major);
                let minors = match s.outcome {
                    ResetCycle::Achieved { theta, .. } => theta,
                    ResetCycle::Unachievable { theta_cap, .. } => (theta_cap / z).max(1) * z,
                };
                Ok((minors, Some(s)))
            }
        }
    }

    /// The same config with the reset period pinned, so repeated runs skip the solver.
    pub fn resolved(&self) -> Result<Self> {
        let (minors, _) = self.resolve_reset()?;
        let mut c = self.clone();
        c.reset = ResetPolicy::Fixed { minors };
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.spec.validate()?;
        if !(self.timeout_s > 0.0) {
            return Err(LoftError::Config("timeout must be positive".into()));
        }
        if !(self.samples_per_flow_major > 0.0) {
            return Err(LoftError::Config(
                "samples per flow must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Detector tunables for the config's current seed.
    pub fn detector_config(&self) -> Result<DetectorConfig> {
        let reset_minors = match self.reset {
            ResetPolicy::Fixed { minors } => minors,
            ResetPolicy::Solved { .. } => self.resolve_reset()?.0,
        };
        let seed = self.seed();
        let cfg = DetectorConfig {
            counters: self.counters,
            monitors: self.monitors,
            clock: ClockConfig::new(self.minor_per_second, self.minors_per_major, reset_minors)?,
            sample_rate: self.sample_rate(),
            sampler_mode: SamplerMode::Exponential,
            hash_seed: splitmix64(seed ^ 0x6861_7368),
            rng_seed: splitmix64(seed ^ 0x726e_6700),
            timeout_s: self.timeout_s,
            estimate_mode: match self.detector {
                DetectorKind::LoftNoCount => EstimateMode::NoCounting,
                _ => EstimateMode::Counting,
            },
            miss_rate: self.miss_rate,
            table_capacity: DetectorConfig::default().table_capacity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds the detector behind the shared blacklist and monitors, and
    /// checks that it holds exactly W + W_fm fast-memory counters.
    pub fn build_pipeline(&self) -> Result<Pipeline> {
        self.validate()?;
        let dc = self.detector_config()?;
        let spec = self.scenario.spec;
        let w = self.counters;
        let wfm = self.monitors;
        let b = &self.baselines;
        let source: Box<dyn CandidateSource + Send> = match self.detector {
            DetectorKind::Loft | DetectorKind::LoftNoCount => Box::new(Loft::new(&dc)?),
            DetectorKind::Msf => {
                let window = dc.clock.major_duration_s();
                let threshold =
                    (spec.gamma_bytes_per_s * window + spec.beta_bytes).floor() as u64 + 1;
                Box::new(MultistageFilter::new(
                    w,
                    b.msf_stages,
                    threshold,
                    wfm,
                    dc.hash_seed,
                )?)
            }
            DetectorKind::EarDet => Box::new(EarDet::new(
                EarDetConfig {
                    counters: w,
                    link_rate: b
                        .eardet_link_rate
                        .unwrap_or_else(|| self.scenario.aggregate_rate()),
                    gamma_low: spec.gamma_bytes_per_s.ceil() as u64,
                    beta_threshold: spec.beta_bytes.ceil() as u64,
                    max_packet: u64::from(PacketRecord::MAX_SIZE),
                },
                wfm,
            )?),
            DetectorKind::HashPipe => {
                Box::new(HashPipe::new(w, b.hashpipe_stages, wfm, dc.hash_seed)?)
            }
            DetectorKind::HeavyKeeper => Box::new(HeavyKeeper::new(
                w,
                b.heavykeeper_rows,
                b.heavykeeper_base,
                wfm,
                dc.hash_seed,
            )?),
        };
        let pipe = Pipeline::new(source, dc.clock, spec, wfm, self.seed())?;
        let used = pipe.fast_memory_counters();
        if used != w + wfm {
            return Err(LoftError::Config(format!(
                "{} holds {used} fast-memory counters, budget is {}",
                self.detector,
                w + wfm
            )));
        }
        Ok(pipe)
    }

    /// First 16 hex digits of SHA-256 over the config with the seed zeroed.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&self.with_seed(0)).expect("config serializes");
        let d = Sha256::digest(&json);
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One detector run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: u64,
    pub detector: String,
    pub seed: u64,
    pub config_digest: String,
    pub overuse_flow: Option<FlowId>,
    pub first_violation_ns: Option<u64>,
    /// None when the flow was not caught within the timeout.
    pub detected_ns: Option<u64>,
    pub delay_s: Option<f64>,
    pub fp_count: usize,
    pub packets: u64,
    pub wall_time_s: f64,
}

impl RunResult {
    pub fn timed_out(&self) -> bool {
        self.detected_ns.is_none()
    }
}

fn finish_run(
    cfg: &ExperimentConfig,
    run_id: u64,
    pipe: &Pipeline,
    truth: &GroundTruth,
    overuse: Option<FlowId>,
    started: Instant,
) -> RunResult {
    let report = pipe.detection_report(truth, cfg.timeout_s);
    let first_violation_ns = overuse.and_then(|f| truth.first_violation(f));
    let event = overuse.and_then(|f| report.event(f));
    let delay_s = event
        .and_then(|e| e.delay_s())
        .filter(|&d| d <= cfg.timeout_s);
    RunResult {
        run_id,
        detector: cfg.detector.name().to_string(),
        seed: cfg.seed(),
        config_digest: cfg.digest(),
        overuse_flow: overuse,
        first_violation_ns,
        detected_ns: delay_s.and(event.map(|e| e.detected_ns)),
        delay_s,
        fp_count: report.fp_count,
        packets: pipe.stats().packets,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

/// Generates the scenario for the config's seed and runs the detector on it.
pub fn run_once(cfg: &ExperimentConfig, run_id: u64) -> Result<RunResult> {
    let started = Instant::now();
    let mut pipe = cfg.build_pipeline()?;
    let mut gen = cfg.scenario.generate()?;
    let overuse = cfg.scenario.overuse_flow();
    let timeout_ns = (cfg.timeout_s * NANOS_PER_SEC as f64).ceil() as u64;
    let mut caught = 0;
    while let Some(pkt) = gen.next() {
        pipe.process(&pkt)?;
        if !cfg.early_stop {
            continue;
        }
        if let Some(f) = overuse {
            let n = pipe.blacklist().len();
            if n != caught {
                caught = n;
                if pipe.is_blacklisted(f) {
                    break;
                }
            }
            if gen
                .ground_truth()
                .first_violation(f)
                .is_some_and(|v| pkt.timestamp_ns > v.saturating_add(timeout_ns))
            {
                break;
            }
        }
    }
    Ok(finish_run(
        cfg,
        run_id,
        &pipe,
        gen.ground_truth(),
        overuse,
        started,
    ))
}

/// Runs the detector over packets from a trace. Ground truth is computed
/// alongside from the same packets; the reported flow is `overuse`, or the
/// earliest violator when unset.
pub fn run_trace<I>(
    cfg: &ExperimentConfig,
    run_id: u64,
    packets: I,
    overuse: Option<FlowId>,
) -> Result<RunResult>
where
    I: IntoIterator<Item = Result<PacketRecord>>,
{
    let started = Instant::now();
    let mut pipe = cfg.build_pipeline()?;
    let mut truth = GroundTruthBuilder::new(cfg.scenario.spec);
    for pkt in packets {
        let pkt = pkt?;
        truth.observe(&pkt);
        pipe.process(&pkt)?;
    }
    let truth = truth.finish();
    let target = overuse.or_else(|| {
        truth
            .violators()
            .min_by_key(|&(f, t)| (t, f))
            .map(|(f, _)| f)
    });
    Ok(finish_run(cfg, run_id, &pipe, &truth, target, started))
}

/// Summary of detection delays; timeouts count as infinitely late.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayStats {
    pub runs: usize,
    pub detected: usize,
    pub min: f64,
    pub median: f64,
    /// Over detected runs only; NaN when none was detected.
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

/// Nearest-rank percentile of sorted values.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl DelayStats {
    pub fn from_results(results: &[RunResult]) -> Option<Self> {
        if results.is_empty() {
            return None;
        }
        let mut delays: Vec<f64> = results
            .iter()
            .map(|r| r.delay_s.unwrap_or(f64::INFINITY))
            .collect();
        delays.sort_by(f64::total_cmp);
        let finite: Vec<f64> = delays.iter().copied().filter(|d| d.is_finite()).collect();
        let mean = if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        Some(DelayStats {
            runs: delays.len(),
            detected: finite.len(),
            min: delays[0],
            median: percentile(&delays, 0.5),
            mean,
            p95: percentile(&delays, 0.95),
            max: *delays.last().unwrap(),
        })
    }

    pub fn timeouts(&self) -> usize {
        self.runs - self.detected
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Ratio,
    Counters,
    Flows,
    MissRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Ratio => "ratio",
            SweepAxis::Counters => "counters",
            SweepAxis::Flows => "flows",
            SweepAxis::MissRate => "missrate",
        }
    }

    /// The config with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = base.clone();
        let whole = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(LoftError::Config(format!(
                    "{} must be a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweepAxis::Ratio => c.scenario.overuse_ratio = value,
            SweepAxis::Counters => c.counters = whole(value)? as usize,
            SweepAxis::Flows => c.scenario.flows = whole(value)?,
            SweepAxis::MissRate => c.miss_rate = value,
        }
        Ok(c)
    }
}

impl FromStr for SweepAxis {
    type Err = LoftError;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::Ratio,
            SweepAxis::Counters,
            SweepAxis::Flows,
            SweepAxis::MissRate,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| LoftError::Config(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub config_digest: String,
    pub reset_minors: u64,
    pub stats: DelayStats,
    pub fp_total: usize,
}

/// Runs `repeats` seeds (`base_seed + i`) at each point of the axis. Runs go
/// to the rayon pool; results come back in (point, seed) order.
pub fn sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    repeats: u64,
    base_seed: u64,
) -> Result<(Vec<SweepPoint>, Vec<RunResult>)> {
    if values.is_empty() {
        return Err(LoftError::Config("sweep needs at least one point".into()));
    }
    if repeats == 0 {
        return Err(LoftError::Config("sweep needs at least one repeat".into()));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| axis.apply(base, v)?.resolved())
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| (0..repeats).map(move |i| (p, i)))
        .collect();
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(p, i)| run_once(&configs[p].with_seed(base_seed + i), p as u64 * repeats + i))
        .collect::<Result<_>>()?;
    let points = configs
        .iter()
        .zip(values)
        .zip(runs.chunks(repeats as usize))
        .map(|((c, &value), chunk)| SweepPoint {
            axis,
            value,
            config_digest: c.digest(),
            reset_minors: match c.reset {
                ResetPolicy::Fixed { minors } => minors,
                ResetPolicy::Solved { .. } => unreachable!("resolved above"),
            },
            stats: DelayStats::from_results(chunk).expect("repeats >= 1"),
            fp_total: chunk.iter().map(|r| r.fp_count).sum(),
        })
        .collect();
    Ok((points, runs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub counters: u64,
    pub solution: ResetSolution,
}

/// Reset-cycle bound for each counter count, in order.
pub fn bound_table(base: &BoundParams, counters: &[u64], target: f64) -> Result<Vec<BoundRow>> {
    counters
        .iter()
        .map(|&w| {
            let p = BoundParams {
                counters: w,
                ..*base
            };
            Ok(BoundRow {
                counters: w,
                solution: solve_reset_cycle(target, &p)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchResult {
    pub counters: usize,
    pub packets: u64,
    pub seconds: f64,
    pub ops_per_s: f64,
    pub ns_per_op: f64,
}

/// Times the per-packet work of LOFT (counter update plus sampler) over
/// `packets` synthetic packets of `flows` flows on one thread. None for zero
/// packets.
pub fn bench(counters: usize, packets: u64, flows: u64, seed: u64) -> Option<BenchResult> {
    if packets == 0 || counters == 0 || flows == 0 {
        return None;
    }
    const RING: usize = 1 << 20;
    const GAP_NS: u64 = 100;
    let clock = ClockConfig::new(64, 16, 64 * 30).expect("valid clock");
    let z = u64::from(clock.minors_per_major);
    let mut x = seed;
    let ring: Vec<(u64, u32)> = (0..RING)
        .map(|_| {
            x = splitmix64(x);
            (x % flows, 64 + (x >> 40) as u32 % 1455)
        })
        .collect();
    let mut update = UpdatePath::new(counters, clock.minors_per_major, HashSeed::new(seed));
    let pkt_rate = NANOS_PER_SEC as f64 / GAP_NS as f64;
    let mut sampler = Sampler::exponential(pkt_rate / 4.0, seed);
    let mut ts = 0u64;
    let mut minor = 0u64;
    let started = Instant::now();
    for i in 0..packets {
        let (flow, size) = ring[i as usize % RING];
        let pkt = PacketRecord {
            timestamp_ns: ts,
            flow_id: FlowId(flow),
            size_bytes: size,
        };
        let m = clock.minor_global(ts);
        if m != minor {
            update.advance_to(m);
            if m / z != minor / z {
                sampler.clear();
            }
            minor = m;
        }
        sampler.observe(&pkt);
        update.update(&pkt);
        ts += GAP_NS;
    }
    let seconds = started.elapsed().as_secs_f64();
    std::hint::black_box(update.stats());
    Some(BenchResult {
        counters,
        packets,
        seconds,
        ops_per_s: packets as f64 / seconds,
        ns_per_op: seconds * 1e9 / packets as f64,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> LoftError {
    LoftError::Io(std::io::Error::other(e))
}

pub const RUN_HEADER: [&str; 10] = [
    "run_id",
    "detector",
    "seed",
    "config_digest",
    "overuse_flow",
    "first_violation_ns",
    "detected_ns",
    "delay_s",
    "fp_count",
    "packets",
];

/// Writes run rows; `wall_time_s` is appended only when `timing` is set,
/// since it is the one non-deterministic column.
pub fn write_runs<W: Write>(out: W, runs: &[RunResult], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = RUN_HEADER.to_vec();
    if timing {
        header.push("wall_time_s");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in runs {
        let mut row = vec![
            r.run_id.to_string(),
            r.detector.clone(),
            r.seed.to_string(),
            r.config_digest.clone(),
            opt(r.overuse_flow),
            opt(r.first_violation_ns),
            r.detected_ns
                .map_or_else(|| "TIMEOUT".to_string(), |d| d.to_string()),
            opt(r.delay_s.map(|d| format!("{d:.9}"))),
            r.fp_count.to_string(),
            r.packets.to_string(),
        ];
        if timing {
            row.push(format!("{:.3}", r.wall_time_s));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_delay(d: f64) -> String {
    if d.is_nan() {
        String::new()
    } else if d.is_infinite() {
        "inf".into()
    } else {
        format!("{d:.6}")
    }
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis",
        "value",
        "config_digest",
        "reset_minors",
        "runs",
        "detected",
        "timeouts",
        "min_s",
        "median_s",
        "mean_s",
        "p95_s",
        "max_s",
        "fp_total",
    ])
    .map_err(csv_err)?;
    for p in points {
        let s = &p.stats;
        w.write_record([
            p.axis.name().to_string(),
            p.value.to_string(),
            p.config_digest.clone(),
            p.reset_minors.to_string(),
            s.runs.to_string(),
            s.detected.to_string(),
            s.timeouts().to_string(),
            fmt_delay(s.min),
            fmt_delay(s.median),
            fmt_delay(s.mean),
            fmt_delay(s.p95),
            fmt_delay(s.max),
            p.fp_total.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bound<W: Write>(out: W, rows: &[BoundRow], minor_per_second: u32) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["counters", "status", "theta_minors", "t_reset_s", "p_mon"])
        .map_err(csv_err)?;
    for r in rows {
        let row = match r.solution.outcome {
            ResetCycle::Achieved {
                theta,
                t_reset_s,
                p_mon,
            } => [
                r.counters.to_string(),
                "ok".into(),
                theta.to_string(),
                format!("{t_reset_s}"),
                format!("{p_mon:.6e}"),
            ],
            ResetCycle::Unachievable {
                theta_cap,
                best_p_mon,
            } => [
                r.counters.to_string(),
                "unachievable".into(),
                theta_cap.to_string(),
                format!(">{}", theta_cap as f64 / f64::from(minor_per_second)),
                format!("{best_p_mon:.6e}"),
            ],
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bench<W: Write>(out: W, results: &[Option<BenchResult>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["counters", "packets", "seconds", "ops_per_s", "ns_per_op"])
        .map_err(csv_err)?;
    for r in results {
        match r {
            Some(b) => w.write_record([
                b.counters.to_string(),
                b.packets.to_string(),
                format!("{:.3}", b.seconds),
                format!("{:.0}", b.ops_per_s),
                format!("{:.2}", b.ns_per_op),
            ]),
            None => w.write_record(["", "0", "", "no data", ""]),
        }
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
