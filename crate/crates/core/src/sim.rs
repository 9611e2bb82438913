//! Seeded AWGN Monte-Carlo campaigns.
//!
//! The noise variance of each point is `σ² = σ²_max / 10^(vnr_db / 10)`, so
//! `vnr_db` is the distance to the Poltyrev limit. Trial `i` of point `p`
//! draws everything from its own ChaCha8 stream seeded by
//! `substream_seed(seed, p, i)`, and trials run in fixed-size batches with
//! the early-stop test applied between batches. The result is therefore
//! independent of thread count and scheduling.

use std::io::{Read, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{decode_bounded, rec_bdd_counted, ListSchedule, OpCounter};
use crate::error::{Error, Result};
use crate::lattice::{params, sample_point, union_bound_estimate, Dimension};

/// Description of the pseudo-random generator, recorded in every result.
pub const GENERATOR: &str = "chacha8/splitmix64-substreams/ziggurat-standard-normal";
pub const DEFAULT_SEED: u64 = 0x5eed_b4_2019;
/// Trials per batch; the early-stop rule is evaluated between batches.
pub const BATCH: u64 = 256;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Bdd,
    BoundedList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TxMode {
    ZeroWord,
    RandomPoint { range: i64 },
}

impl Default for TxMode {
    fn default() -> Self {
        TxMode::RandomPoint { range: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t: u32,
    pub algo: Algo,
    /// Required for `bounded-list`.
    #[serde(default)]
    pub schedule: Option<ListSchedule>,
    /// Distances to the Poltyrev limit, in dB.
    pub vnr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_point: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Stop a point once this many errors were seen; 0 disables.
    #[serde(default = "default_max_errors")]
    pub max_errors: u64,
    #[serde(default)]
    pub tx_mode: TxMode,
}

fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_max_errors() -> u64 {
    200
}

impl SimConfig {
    pub fn new(t: u32, algo: Algo, schedule: Option<ListSchedule>, vnr_db: Vec<f64>) -> Self {
        Self {
            t,
            algo,
            schedule,
            vnr_db,
            trials_per_point: default_trials(),
            seed: DEFAULT_SEED,
            max_errors: default_max_errors(),
            tx_mode: TxMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Dimension::new(self.t)?;
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be >= 1".into()));
        }
        if self.vnr_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("vnr_db values must be finite".into()));
        }
        if self.algo == Algo::BoundedList && self.schedule.is_none() {
            return Err(Error::InvalidConfig("bounded-list needs a schedule".into()));
        }
        if let TxMode::RandomPoint { range } = self.tx_mode {
            if range < 0 {
                return Err(Error::InvalidConfig("tx range must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// `lo, lo + step, …` up to `hi` inclusive.
pub fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step + 1e-9).floor() as i64;
    (0..=k.max(0)).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub vnr_db: f64,
    pub trials: u64,
    pub point_errors: u64,
    /// Point error rate.
    pub per: f64,
    /// Normalized error probability, `per / n`.
    pub nep: f64,
    /// Wilson 95% interval on `per`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_ops: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub t: u32,
    pub n: usize,
    pub algo: Algo,
    pub generator: String,
    pub points: Vec<PointResult>,
}

/// Row layout of the campaign CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub vnr_db: f64,
    pub trials: u64,
    pub point_errors: u64,
    pub per: f64,
    pub nep: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_ops: f64,
}

impl From<&PointResult> for CsvRow {
    fn from(p: &PointResult) -> Self {
        Self {
            vnr_db: p.vnr_db,
            trials: p.trials,
            point_errors: p.point_errors,
            per: p.per,
            nep: p.nep,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            mean_ops: p.mean_ops,
        }
    }
}

impl SimResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<CsvRow> = self.points.iter().map(CsvRow::from).collect();
        write_rows(&rows, w)
    }
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Wilson score interval at 95% for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Seed of trial `index` in stream `stream`.
pub fn substream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Adds `N(0, sigma²)` to every coordinate.
pub fn add_noise<R: Rng + ?Sized>(x: &[i64], sigma: f64, rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let g: f64 = rng.sample(StandardNormal);
            v as f64 + sigma * g
        })
        .collect()
}

pub fn run_campaign(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let p = params(cfg.t)?;
    let mut points = Vec::with_capacity(cfg.vnr_db.len());
    for (pi, &db) in cfg.vnr_db.iter().enumerate() {
        let sigma = (p.sigma2_max / 10f64.powf(db / 10.0)).sqrt();
        let start = Instant::now();
        let (mut trials, mut errors) = (0u64, 0u64);
        let mut ops = OpCounter::default();
        while trials < cfg.trials_per_point {
            let end = (trials + BATCH).min(cfg.trials_per_point);
            let batch: Vec<(bool, OpCounter)> = (trials..end)
                .into_par_iter()
                .map(|i| run_trial(cfg, pi as u64, i, sigma))
                .collect::<Result<_>>()?;
            for (err, o) in &batch {
                errors += u64::from(*err);
                ops.merge(o);
            }
            trials = end;
            if cfg.max_errors > 0 && errors >= cfg.max_errors {
                break;
            }
        }
        let per = errors as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        points.push(PointResult {
            vnr_db: db,
            trials,
            point_errors: errors,
            per,
            nep: per / p.n as f64,
            ci_low,
            ci_high,
            mean_ops: ops.total() as f64 / trials as f64,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SimResult {
        t: cfg.t,
        n: p.n,
        algo: cfg.algo,
        generator: GENERATOR.to_string(),
        points,
    })
}

fn run_trial(cfg: &SimConfig, stream: u64, index: u64, sigma: f64) -> Result<(bool, OpCounter)> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.seed, stream, index));
    let x = match cfg.tx_mode {
        TxMode::ZeroWord => vec![0; 1 << cfg.t],
        TxMode::RandomPoint { range } => sample_point(cfg.t, range, &mut rng)?,
    };
    let y = add_noise(&x, sigma, &mut rng);
    let mut ops = OpCounter::default();
    let err = match (cfg.algo, &cfg.schedule) {
        (Algo::Bdd, _) => rec_bdd_counted(&y, cfg.t, &mut ops)? != x,
        (Algo::BoundedList, Some(s)) => match decode_bounded(&y, cfg.t, s, &mut ops)? {
            Some(c) => c.point != x,
            None => true,
        },
        (Algo::BoundedList, None) => unreachable!("validated"),
    };
    Ok((err, ops))
}

/// Union-bound MLD estimate at each dB point, as `(vnr_db, probability)`.
pub fn mld_reference_curve(t: u32, vnr_db: &[f64]) -> Result<Vec<(f64, f64)>> {
    vnr_db
        .iter()
        .map(|&db| Ok((db, union_bound_estimate(t, 10f64.powf(db / 10.0))?)))
        .collect()
}

/// dB value where the point error rate crosses `target`, interpolating
/// `log10(per)` linearly between the two bracketing points. Points must be
/// sorted by dB.
pub fn crossing_db(points: &[PointResult], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.per >= target && b.per <= target && a.per > 0.0 && b.per > 0.0 && a.per != b.per {
            let (la, lb, lt) = (a.per.log10(), b.per.log10(), target.log10());
            Some(a.vnr_db + (la - lt) / (la - lb) * (b.vnr_db - a.vnr_db))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basic() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn grid() {
        assert_eq!(db_grid(1.0, 2.0, 0.25), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn substreams_differ() {
        let a = substream_seed(1, 0, 0);
        assert_ne!(a, substream_seed(1, 0, 1));
        assert_ne!(a, substream_seed(1, 1, 0));
        assert_ne!(a, substream_seed(2, 0, 0));
    }

    #[test]
    fn high_vnr_no_errors() {
        let mut cfg = SimConfig::new(4, Algo::Bdd, None, vec![40.0]);
        cfg.trials_per_point = 1000;
        let r = run_campaign(&cfg).unwrap();
        assert_eq!(r.points[0].point_errors, 0);
        assert_eq!(r.points[0].trials, 1000);
    }

    #[test]
    fn config_validation() {
        let cfg = SimConfig::new(4, Algo::BoundedList, None, vec![1.0]);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(4, Algo::Bdd, None, vec![f64::NAN]);
        assert!(cfg.validate().is_err());
        cfg.vnr_db = vec![1.0];
        cfg.trials_per_point = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let mk = |db: f64, per: f64| PointResult {
            vnr_db: db,
            trials: 1,
            point_errors: 0,
            per,
            nep: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            mean_ops: 0.0,
            wall_seconds: 0.0,
        };
        let pts = [mk(1.0, 1e-2), mk(2.0, 1e-4)];
        assert!((crossing_db(&pts, 1e-3).unwrap() - 1.5).abs() < 1e-12);
        assert!(crossing_db(&pts, 1e-5).is_none());
    }
}
