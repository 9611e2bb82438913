//! `bwlat`: command-line front end for the Barnes-Wall toolkit.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

mod io;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use bw_core::constellation::{self, ConstellationConfig, Message, SerPoint};
use bw_core::decoders::{
    list_rec, list_rec_bounded, list_rec_bounded_counted, rec_bdd, rec_bdd_counted, CandidateList,
    ListSchedule, OpCounter,
};
use bw_core::lattice::{params, sample_point, squared_distance, Dimension, LatticeParams};
use bw_core::oracle::{enumerate_ball, exact_cvp, minimal_vectors};
use bw_core::sim::{
    self, add_noise, crossing_db, read_rows, substream_seed, write_rows, CsvRow, PointResult,
    SimConfig, DEFAULT_SEED,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{
    join, open_input, open_output, parse_list, point_line, read_messages, read_to_string,
    read_vectors,
};

#[derive(Parser)]
#[command(
    name = "bwlat",
    version,
    about = "Barnes-Wall lattice decoders, AWGN campaigns and Voronoi constellations"
)]
struct Cli {
    /// Seed for every random draw; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the constants of BW_{2^t} as JSON.
    Params {
        #[arg(long)]
        t: u32,
    },
    /// Decode real vectors read one per line.
    Decode(DecodeArgs),
    /// Exact enumeration (n <= 16).
    Oracle(OracleArgs),
    /// Run an error-rate campaign described by a JSON config.
    Simulate(SimulateArgs),
    /// Voronoi constellation encoder, decoder and SER campaign.
    Constellation(ConstellationArgs),
    /// Operation tallies and wall time for fixed workloads.
    Bench(BenchArgs),
    /// Read back a CSV or JSON written by this tool.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeAlgo {
    /// Bounded-distance decoder.
    Bdd,
    /// Complete list decoder, pruned by radius.
    List,
    /// List decoder keeping the aleph closest per level.
    Bounded,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Relative squared list radius.
    #[arg(long, default_value_t = 0.375)]
    delta: f64,
    /// Truncation sizes for delta, 2delta/3, ... (comma separated).
    #[arg(long, default_value = "20")]
    aleph: String,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<ListSchedule> {
        let truncations = parse_list(&self.aleph).map_err(usage)?;
        ListSchedule::new(self.delta, truncations).map_err(usage)
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "bdd")]
    algo: DecodeAlgo,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Input file, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every candidate as `index coords… dist2` instead of the closest.
    #[arg(long)]
    all: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    /// Closest lattice point.
    Cvp,
    /// Every lattice point within squared distance r2.
    Ball,
    /// Vectors of minimal norm.
    Minvecs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    mode: OracleMode,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstellationAction {
    Encode,
    Decode,
    Simulate,
}

#[derive(Args)]
struct ConstellationArgs {
    #[arg(value_enum)]
    action: ConstellationAction,
    #[arg(long)]
    eta: u32,
    #[arg(long)]
    t: u32,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// SNR points in dB for `simulate` (comma separated).
    #[arg(long, default_value = "16,17,18,19,20")]
    snr: String,
    /// Messages per SNR point for `simulate`.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BenchAlgo {
    Bdd,
    Bounded,
}

#[derive(Args)]
struct BenchArgs {
    /// Dimensions (comma separated).
    #[arg(long, default_value = "64")]
    n: String,
    #[arg(long, value_enum, default_value = "bounded")]
    algo: BenchAlgo,
    #[arg(long, default_value_t = 0.375)]
    delta: f64,
    /// Truncation sizes to sweep; the same size is used at every level.
    #[arg(long, default_value = "1,5,10,20,40")]
    aleph_sweep: String,
    /// Noisy targets per (n, aleph).
    #[arg(long, default_value_t = 100)]
    targets: u64,
    /// Noise level of the targets, in dB from the Poltyrev limit.
    #[arg(long, default_value_t = 2.3)]
    vnr_db: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// File written by `simulate`, `constellation simulate`, `bench` or
    /// `params`.
    file: PathBuf,
    /// Error rate whose dB crossing is reported for simulation CSVs.
    #[arg(long, default_value_t = 1e-3)]
    target: f64,
}

/// An error caused by the arguments rather than by the computation.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn dimension(n: usize) -> Result<Dimension> {
    Dimension::from_n(n).map_err(usage)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            eprintln!("see `bwlat --help`");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Params { t } => {
            let p = params(t).map_err(usage)?;
            println!("{}", serde_json::to_string_pretty(&p)?);
            Ok(())
        }
        Cmd::Decode(a) => decode_cmd(a),
        Cmd::Oracle(a) => oracle_cmd(a),
        Cmd::Simulate(a) => simulate_cmd(a, seed),
        Cmd::Constellation(a) => constellation_cmd(a, seed.unwrap_or(DEFAULT_SEED)),
        Cmd::Bench(a) => bench_cmd(a, seed.unwrap_or(DEFAULT_SEED)),
        Cmd::Report(a) => report_cmd(a),
    }
}

fn write_list(out: &mut dyn Write, index: usize, list: &CandidateList) -> Result<()> {
    if list.is_empty() {
        writeln!(out, "{index} -")?;
    }
    for c in &list.items {
        writeln!(out, "{index} {}", point_line(&c.point, c.dist2))?;
    }
    Ok(())
}

fn decode_cmd(a: DecodeArgs) -> Result<()> {
    let dim = dimension(a.n)?;
    let t = dim.t();
    let schedule = match a.algo {
        DecodeAlgo::Bdd => None,
        DecodeAlgo::List => {
            ListSchedule::unbounded(a.schedule.delta).map_err(usage)?;
            None
        }
        DecodeAlgo::Bounded => Some(a.schedule.schedule()?),
    };
    let targets = read_vectors(open_input(&a.input)?, a.n)?;
    let mut out = open_output(a.out.as_deref())?;
    for (i, y) in targets.iter().enumerate() {
        let list = match a.algo {
            DecodeAlgo::Bdd => {
                let x = rec_bdd(y, t)?;
                let mut l = CandidateList::new(y.clone());
                l.push_point(x);
                l
            }
            DecodeAlgo::List => list_rec(y, t, a.schedule.delta)?,
            DecodeAlgo::Bounded => list_rec_bounded(y, t, schedule.as_ref().expect("set above"))?,
        };
        if a.all {
            write_list(&mut out, i, &list)?;
        } else {
            match list.closest() {
                Some(c) => writeln!(out, "{}", point_line(&c.point, c.dist2))?,
                None => writeln!(out, "-")?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn oracle_cmd(a: OracleArgs) -> Result<()> {
    let t = dimension(a.n)?.t();
    let mut out = open_output(a.out.as_deref())?;
    match a.mode {
        OracleMode::Minvecs => {
            for v in minimal_vectors(t).map_err(usage)? {
                writeln!(out, "{}", join(&v, " "))?;
            }
        }
        OracleMode::Cvp => {
            for y in read_vectors(open_input(&a.input)?, a.n)? {
                let x = exact_cvp(&y, t).map_err(usage)?;
                writeln!(out, "{}", point_line(&x, squared_distance(&y, &x)))?;
            }
        }
        OracleMode::Ball => {
            let r2 = a.r2.ok_or_else(|| usage("ball needs --r2"))?;
            for (i, y) in read_vectors(open_input(&a.input)?, a.n)?.iter().enumerate() {
                let list = enumerate_ball(y, t, r2).map_err(usage)?;
                write_list(&mut out, i, &list)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PointTiming {
    vnr_db: f64,
    trials: u64,
    point_errors: u64,
    wall_seconds: f64,
}

fn simulate_cmd(a: SimulateArgs, seed: Option<u64>) -> Result<()> {
    let text = read_to_string(&a.config)?;
    let mut cfg: SimConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(usage)?;
    let result = sim::run_campaign(&cfg)?;
    let mut out = open_output(a.out.as_deref())?;
    result.write_csv(&mut out)?;
    out.flush()?;
    let timing: Vec<PointTiming> = result
        .points
        .iter()
        .map(|p| PointTiming {
            vnr_db: p.vnr_db,
            trials: p.trials,
            point_errors: p.point_errors,
            wall_seconds: p.wall_seconds,
        })
        .collect();
    eprintln!(
        "{}",
        serde_json::json!({ "t": result.t, "n": result.n, "algo": result.algo,
            "seed": cfg.seed, "generator": result.generator, "points": timing })
    );
    Ok(())
}

fn constellation_cmd(a: ConstellationArgs, seed: u64) -> Result<()> {
    let cfg = ConstellationConfig::new(a.t, a.eta, a.schedule.schedule()?).map_err(usage)?;
    let n = cfg.n();
    let mut out = open_output(a.out.as_deref())?;
    match a.action {
        ConstellationAction::Encode => {
            let mut incomplete = 0;
            for symbols in read_messages(open_input(&a.input)?, n)? {
                let enc = constellation::encode(&Message { symbols }, &cfg).map_err(usage)?;
                incomplete += usize::from(enc.incomplete);
                writeln!(out, "{}", join(&enc.point, " "))?;
            }
            if incomplete > 0 {
                eprintln!("warning: {incomplete} incomplete encoding(s)");
            }
        }
        ConstellationAction::Decode => {
            for y in read_vectors(open_input(&a.input)?, n)? {
                let msg = constellation::decode(&y, &cfg)?;
                writeln!(out, "{}", join(&msg.symbols, ","))?;
            }
        }
        ConstellationAction::Simulate => {
            let snr: Vec<f64> = parse_list(&a.snr).map_err(usage)?;
            let r = constellation::run_ser_campaign(&cfg, &snr, a.trials, seed).map_err(usage)?;
            r.write_csv(&mut out)?;
            eprintln!(
                "{}",
                serde_json::json!({ "t": r.t, "eta": r.eta, "seed": seed,
                    "energy_per_dim": r.energy_per_dim, "wall_seconds": r.wall_seconds })
            );
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BenchRow {
    n: usize,
    algo: BenchAlgo,
    /// Empty for the BDD.
    aleph: Option<usize>,
    targets: u64,
    calls: u64,
    bdd_leaves: u64,
    enum_leaves: u64,
    vector_ops: u64,
    distance_terms: u64,
    comparisons: u64,
    candidates: u64,
    total_ops: u64,
    wall_seconds: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn bench_cmd(a: BenchArgs, seed: u64) -> Result<()> {
    let ns: Vec<usize> = parse_list(&a.n).map_err(usage)?;
    let alephs: Vec<Option<usize>> = match a.algo {
        BenchAlgo::Bdd => vec![None],
        BenchAlgo::Bounded => parse_list(&a.aleph_sweep)
            .map_err(usage)?
            .into_iter()
            .map(Some)
            .collect(),
    };
    if a.targets == 0 {
        return Err(usage("--targets must be >= 1"));
    }
    let mut rows = Vec::new();
    for &n in &ns {
        let t = dimension(n)?.t();
        let p = params(t)?;
        let sigma = (p.sigma2_max / 10f64.powf(a.vnr_db / 10.0)).sqrt();
        let targets: Vec<Vec<f64>> = (0..a.targets)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, n as u64, i));
                let x = sample_point(t, 4, &mut rng)?;
                Ok(add_noise(&x, sigma, &mut rng))
            })
            .collect::<bw_core::Result<_>>()?;
        for &aleph in &alephs {
            let schedule = match aleph {
                Some(k) => {
                    let len = ListSchedule::chain_len(a.delta);
                    Some(ListSchedule::new(a.delta, vec![k; len]).map_err(usage)?)
                }
                None => None,
            };
            let mut ops = OpCounter::default();
            let start = Instant::now();
            for y in &targets {
                match &schedule {
                    Some(s) => {
                        list_rec_bounded_counted(y, t, s, &mut ops)?;
                    }
                    None => {
                        rec_bdd_counted(y, t, &mut ops)?;
                    }
                }
            }
            rows.push(BenchRow {
                n,
                algo: a.algo,
                aleph,
                targets: a.targets,
                calls: ops.calls,
                bdd_leaves: ops.bdd_leaves,
                enum_leaves: ops.enum_leaves,
                vector_ops: ops.vector_ops,
                distance_terms: ops.distance_terms,
                comparisons: ops.comparisons,
                candidates: ops.candidates,
                total_ops: ops.total(),
                wall_seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    let mut out = open_output(a.out.as_deref())?;
    write_rows(&rows, &mut out)?;
    out.flush()?;

    // Growth exponents, for a quick look at the scaling.
    if ns.len() > 1 && a.algo == BenchAlgo::Bdd {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.n as f64, r.total_ops as f64))
            .collect();
        eprintln!("ops ~ n^{:.3}", log_slope(&pts));
    }
    if alephs.len() > 1 {
        for &n in &ns {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| Some((r.aleph? as f64, r.total_ops as f64)))
                .collect();
            eprintln!("n={n}: ops ~ aleph^{:.3}", log_slope(&pts));
        }
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Report {
    Simulate {
        rows: Vec<CsvRow>,
        target: f64,
        crossing_db: Option<f64>,
    },
    Constellation {
        rows: Vec<SerPoint>,
    },
    Bench {
        rows: Vec<BenchRow>,
    },
    Params {
        params: LatticeParams,
    },
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let text = read_to_string(&a.file)?;
    let header = text.lines().next().unwrap_or("");
    let report = if header.trim_start().starts_with('{') {
        let params: LatticeParams =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.file.display())))?;
        Report::Params { params }
    } else if header.starts_with("vnr_db,") {
        let rows: Vec<CsvRow> = read_rows(text.as_bytes())?;
        let pts: Vec<PointResult> = rows.iter().map(point_of_row).collect();
        Report::Simulate {
            crossing_db: crossing_db(&pts, a.target),
            target: a.target,
            rows,
        }
    } else if header.starts_with("snr_db,") {
        Report::Constellation {
            rows: read_rows(text.as_bytes())?,
        }
    } else if header.starts_with("n,algo,") {
        Report::Bench {
            rows: read_rows(text.as_bytes())?,
        }
    } else {
        return Err(usage(format!("{}: unrecognised format", a.file.display())));
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn point_of_row(r: &CsvRow) -> PointResult {
    PointResult {
        vnr_db: r.vnr_db,
        trials: r.trials,
        point_errors: r.point_errors,
        per: r.per,
        nep: r.nep,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        mean_ops: r.mean_ops,
        wall_seconds: 0.0,
    }
}
