//! loft-lab: generate traces, run detectors, sweep parameters, solve the
//! reset-cycle bound and time the update path. Every result is CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use loft_core::experiment::{
    bench, bound_table, run_once, run_trace, sweep, write_bench, write_bound, write_runs,
    write_sweep, DetectorKind, ExperimentConfig, Profile, ResetPolicy, SweepAxis,
};
use loft_core::model::{FlowId, FlowSpec, PacketRecord};
use loft_core::traffic::{
    read_csv, read_trace, regulate, write_ground_truth, write_trace, PacketSizing, ScenarioKind,
};

#[derive(Parser)]
#[command(
    name = "loft-lab",
    version,
    about = "Experiment harness for the LOFT overuse-flow detector"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a trace file and its ground-truth sidecar.
    Gen(GenArgs),
    /// Run a detector on generated traffic or on a trace file.
    Run(RunArgs),
    /// Repeat runs along one parameter axis and summarize the delays.
    Sweep(SweepArgs),
    /// Solve the reset-cycle bound for a list of counter widths.
    Bound(BoundArgs),
    /// Time the per-packet update path.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Full,
    Half,
}

fn parse_with<T: std::str::FromStr<Err = loft_core::LoftError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: loft_core::LoftError| e.to_string())
}

/// Experiment knobs; anything left unset comes from the profile.
#[derive(Args)]
struct Knobs {
    #[arg(long, default_value = "desk", value_parser = parse_with::<Profile>)]
    profile: Profile,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Benign flows (N); the overuse flow comes on top.
    #[arg(long)]
    flows: Option<u64>,
    /// γ in bytes/s.
    #[arg(long)]
    gamma: Option<f64>,
    /// β in bytes.
    #[arg(long)]
    beta: Option<f64>,
    /// Fixed packet size in bytes, instead of the profile's sizing.
    #[arg(long)]
    packet_size: Option<u32>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// ℓ; 0 means no overuse flow.
    #[arg(long)]
    overuse_ratio: Option<f64>,
    #[arg(long)]
    overuse_start: Option<f64>,
    /// Base seed; run i uses seed + i.
    #[arg(long, env = "LOFT_LAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_with::<DetectorKind>)]
    detector: Option<DetectorKind>,
    /// W.
    #[arg(long)]
    counters: Option<usize>,
    /// W_fm.
    #[arg(long)]
    monitors: Option<usize>,
    /// ω.
    #[arg(long)]
    minor_per_second: Option<u32>,
    /// Z.
    #[arg(long)]
    minors_per_major: Option<u32>,
    /// Fixed reset period in minor cycles.
    #[arg(long, conflicts_with = "target")]
    reset_minors: Option<u64>,
    /// Detection probability the solved reset period must reach.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    miss_rate: Option<f64>,
    /// Seconds after the first violation before a run counts as a timeout.
    #[arg(long)]
    timeout: Option<f64>,
    /// Samples per flow per major cycle, used to derive λ.
    #[arg(long)]
    samples_per_flow: Option<f64>,
    /// λ in samples/s; overrides --samples-per-flow.
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Keep simulating after the overuse flow is caught.
    #[arg(long)]
    no_early_stop: bool,
    /// Multistage filter stages.
    #[arg(long)]
    msf_stages: Option<usize>,
    /// HashPipe stages.
    #[arg(long)]
    hashpipe_stages: Option<usize>,
    /// HeavyKeeper rows.
    #[arg(long)]
    heavykeeper_rows: Option<usize>,
    /// HeavyKeeper decay base.
    #[arg(long)]
    heavykeeper_base: Option<f64>,
    /// Link rate EARDet is sized for, bytes/s; the offered load by default.
    #[arg(long)]
    eardet_link_rate: Option<f64>,
}

impl Knobs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::profile(self.profile);
        let s = &mut c.scenario;
        if let Some(k) = self.scenario {
            s.kind = match k {
                ScenarioArg::Full => ScenarioKind::FullUtilization,
                ScenarioArg::Half => ScenarioKind::HalfUtilization,
            };
        }
        set(&mut s.flows, self.flows);
        set(&mut s.spec.gamma_bytes_per_s, self.gamma);
        set(&mut s.spec.beta_bytes, self.beta);
        if let Some(size) = self.packet_size {
            s.sizing = PacketSizing::Fixed(size);
        }
        set(&mut s.duration_s, self.duration);
        set(&mut s.overuse_ratio, self.overuse_ratio);
        set(&mut s.overuse_start_s, self.overuse_start);
        s.seed = self.seed;
        set(&mut c.detector, self.detector);
        set(&mut c.counters, self.counters);
        set(&mut c.monitors, self.monitors);
        set(&mut c.minor_per_second, self.minor_per_second);
        set(&mut c.minors_per_major, self.minors_per_major);
        if let Some(minors) = self.reset_minors {
            c.reset = ResetPolicy::Fixed { minors };
        }
        if let (Some(t), ResetPolicy::Solved { target, .. }) = (self.target, &mut c.reset) {
            *target = t;
        }
        set(&mut c.miss_rate, self.miss_rate);
        set(&mut c.timeout_s, self.timeout);
        set(&mut c.samples_per_flow_major, self.samples_per_flow);
        if self.sample_rate.is_some() {
            c.sample_rate = self.sample_rate;
        }
        c.early_stop = !self.no_early_stop;
        let b = &mut c.baselines;
        set(&mut b.msf_stages, self.msf_stages);
        set(&mut b.hashpipe_stages, self.hashpipe_stages);
        set(&mut b.heavykeeper_rows, self.heavykeeper_rows);
        set(&mut b.heavykeeper_base, self.heavykeeper_base);
        if self.eardet_link_rate.is_some() {
            b.eardet_link_rate = self.eardet_link_rate;
        }
        c.validate()?;
        c.scenario.validate()?;
        Ok(c)
    }
}

fn set<T>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

#[derive(Args)]
struct Output {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn open(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    knobs: Knobs,
    /// Trace file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth sidecar; defaults to `<out>.truth.csv`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    knobs: Knobs,
    /// Read packets from this trace instead of generating them. Files
    /// ending in `.csv` are read as `ts_ns,flow_id,size`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Drop the trace packets that exceed the flow spec before running.
    #[arg(long, requires = "trace")]
    regulate: bool,
    /// Flow whose delay is reported for a trace; the earliest violator by default.
    #[arg(long, requires = "trace")]
    overuse_flow: Option<u64>,
    /// Number of runs, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Add the wall_time_s column.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    knobs: Knobs,
    #[arg(long, value_parser = parse_with::<SweepAxis>)]
    axis: SweepAxis,
    /// Comma-separated points of the axis.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    repeats: u64,
    /// Also write the individual runs here.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    /// Add the wall_time_s column to --runs-out.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    knobs: Knobs,
    /// Counter widths W, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1024,2048,4096,8192,16384"
    )]
    widths: Vec<u64>,
    /// Largest reset period tried, in minor cycles.
    #[arg(long, default_value_t = 64 * 3600)]
    cap_minors: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    /// Counter widths W, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "16384,1024")]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 100_000_000)]
    packets: u64,
    #[arg(long, default_value_t = 130_000)]
    flows: u64,
    #[arg(long, env = "LOFT_LAB_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

fn truth_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".truth.csv");
    PathBuf::from(s)
}

fn gen(args: GenArgs) -> Result<()> {
    let cfg = args.knobs.config()?;
    let mut g = cfg.scenario.generate()?;
    let n = write_trace(&args.out, g.by_ref())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let truth = args.truth.unwrap_or_else(|| truth_path(&args.out));
    write_ground_truth(&truth, g.ground_truth())?;
    eprintln!(
        "wrote {n} packets to {}, {} violators to {}",
        args.out.display(),
        g.ground_truth().len(),
        truth.display()
    );
    Ok(())
}

fn load_trace(path: &Path, regulate_to: Option<FlowSpec>) -> Result<Vec<PacketRecord>> {
    let ctx = || format!("reading {}", path.display());
    let pkts = if path.extension().is_some_and(|e| e == "csv") {
        read_csv(path).with_context(ctx)?
    } else {
        read_trace(path)
            .with_context(ctx)?
            .collect::<loft_core::Result<_>>()
            .with_context(ctx)?
    };
    Ok(match regulate_to {
        Some(spec) => regulate(pkts, spec).collect(),
        None => pkts,
    })
}

fn run(args: RunArgs) -> Result<()> {
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let cfg = args.knobs.config()?.resolved()?;
    let base = cfg.seed();
    let results = (0..args.runs)
        .map(|i| {
            let c = cfg.with_seed(base + i);
            match &args.trace {
                Some(path) => {
                    let pkts = load_trace(path, args.regulate.then_some(c.scenario.spec))?;
                    run_trace(
                        &c,
                        i,
                        pkts.into_iter().map(Ok),
                        args.overuse_flow.map(FlowId),
                    )
                    .with_context(|| format!("running on {}", path.display()))
                }
                None => Ok(run_once(&c, i)?),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    write_runs(args.output.open()?, &results, args.timing)?;
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let cfg = args.knobs.config()?;
    let (points, runs) = sweep(&cfg, args.axis, &args.values, args.repeats, cfg.seed())?;
    write_sweep(args.output.open()?, &points)?;
    if let Some(p) = &args.runs_out {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_runs(BufWriter::new(f), &runs, args.timing)?;
    }
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let cfg = args.knobs.config()?;
    let target = match cfg.reset {
        ResetPolicy::Solved { target, .. } => target,
        ResetPolicy::Fixed { .. } => bail!("bound solves the reset period; drop --reset-minors"),
    };
    let ratio = match cfg.scenario.overuse_ratio {
        r if r > 1.0 => r,
        _ => bail!("bound needs an overuse ratio above 1"),
    };
    let params = cfg.bound_params(ratio, args.cap_minors);
    params.validate()?;
    let rows = bound_table(&params, &args.widths, target)?;
    write_bound(args.output.open()?, &rows, cfg.minor_per_second)?;
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let results: Vec<_> = args
        .widths
        .iter()
        .map(|&w| bench(w, args.packets, args.flows, args.seed))
        .collect();
    write_bench(args.output.open()?, &results)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Run(a) => run(a),
        Cmd::Sweep(a) => sweep_cmd(a),
        Cmd::Bound(a) => bound(a),
        Cmd::Bench(a) => bench_cmd(a),
    }
}
