//! Voronoi constellations over the partition BW_n / M·BW_n, `M = 2^η`.
//!
//! A message `m ∈ [0, M)^n` is mapped to `c = m G` and shaped to
//! `x = c - M·Q(c / M)`, where `Q` is the bounded list decoder used as a
//! quantizer. The receiver decodes `y` to a lattice point, recovers its
//! coefficients `z` by back-substitution, and returns `z mod M`.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{decode_bounded, rec_bdd_counted, ListSchedule, OpCounter};
use crate::error::{Error, Result};
use crate::lattice::{coordinates, from_coordinates, Dimension};
use crate::sim::{add_noise, substream_seed, wilson_interval, write_rows, BATCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub t: u32,
    /// Bits per channel use; the shaping modulus is `2^eta`.
    pub eta: u32,
    pub schedule: ListSchedule,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            t: 6,
            eta: 4,
            schedule: ListSchedule::new(3.0 / 8.0, vec![20]).expect("valid default schedule"),
        }
    }
}

impl ConstellationConfig {
    pub fn new(t: u32, eta: u32, schedule: ListSchedule) -> Result<Self> {
        let cfg = Self { t, eta, schedule };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Dimension::new(self.t)?;
        if !(1..=20).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!(
                "eta must be in 1..=20, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        1 << self.t
    }

    pub fn modulus(&self) -> i64 {
        1 << self.eta
    }

    /// Energy above which an encoded point is flagged incomplete:
    /// `n M² d / 4`.
    pub fn energy_bound(&self) -> f64 {
        let m = self.modulus() as f64;
        self.n() as f64 * m * m * (self.n() / 2) as f64 / 4.0
    }

    pub fn check_message(&self, msg: &Message) -> Result<()> {
        if msg.symbols.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: msg.symbols.len(),
            });
        }
        let m = self.modulus();
        if let Some(s) = msg.symbols.iter().find(|s| !(0..m).contains(*s)) {
            return Err(Error::InvalidConfig(format!("symbol {s} outside [0, {m})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub symbols: Vec<i64>,
}

impl Message {
    pub fn random<R: Rng + ?Sized>(cfg: &ConstellationConfig, rng: &mut R) -> Self {
        let m = cfg.modulus();
        Self {
            symbols: (0..cfg.n()).map(|_| rng.random_range(0..m)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoded {
    pub point: Vec<i64>,
    /// Set when the shaping quantizer returned no candidate or the shaped
    /// point exceeds [`ConstellationConfig::energy_bound`].
    pub incomplete: bool,
}

impl Encoded {
    pub fn energy(&self) -> f64 {
        self.point.iter().map(|&v| (v * v) as f64).sum()
    }
}

pub fn encode(msg: &Message, cfg: &ConstellationConfig) -> Result<Encoded> {
    encode_counted(msg, cfg, &mut OpCounter::default())
}

pub fn encode_counted(
    msg: &Message,
    cfg: &ConstellationConfig,
    ops: &mut OpCounter,
) -> Result<Encoded> {
    cfg.check_message(msg)?;
    let c = from_coordinates(&msg.symbols, cfg.t)?;
    let m = cfg.modulus();
    let scaled: Vec<f64> = c.iter().map(|&v| v as f64 / m as f64).collect();
    let (q, mut incomplete) = quantize(&scaled, cfg, ops)?;
    let point: Vec<i64> = c.iter().zip(&q).map(|(a, b)| a - m * b).collect();
    let enc = Encoded { point, incomplete };
    incomplete |= enc.energy() > cfg.energy_bound();
    Ok(Encoded { incomplete, ..enc })
}

/// Closest candidate of the bounded list decoder, falling back to the BDD
/// when the list is empty. The flag reports the fallback.
fn quantize(y: &[f64], cfg: &ConstellationConfig, ops: &mut OpCounter) -> Result<(Vec<i64>, bool)> {
    match decode_bounded(y, cfg.t, &cfg.schedule, ops)? {
        Some(c) => Ok((c.point, false)),
        None => Ok((rec_bdd_counted(y, cfg.t, ops)?, true)),
    }
}

pub fn decode(y: &[f64], cfg: &ConstellationConfig) -> Result<Message> {
    decode_counted(y, cfg, &mut OpCounter::default())
}

pub fn decode_counted(
    y: &[f64],
    cfg: &ConstellationConfig,
    ops: &mut OpCounter,
) -> Result<Message> {
    cfg.validate()?;
    Dimension::new(cfg.t)?.check_len(y.len())?;
    let (x, _) = quantize(y, cfg, ops)?;
    let z = coordinates(&x, cfg.t)?;
    let m = cfg.modulus();
    Ok(Message {
        symbols: z.into_iter().map(|v| v.rem_euclid(m)).collect(),
    })
}

/// Messages used to estimate the average transmit energy.
pub const PILOT_MESSAGES: u64 = 1000;

/// Mean energy per dimension of shaped points, estimated from
/// [`PILOT_MESSAGES`] random messages drawn from a dedicated substream.
pub fn pilot_energy(cfg: &ConstellationConfig, seed: u64) -> Result<f64> {
    let total: f64 = (0..PILOT_MESSAGES)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, u64::MAX, i));
            let msg = Message::random(cfg, &mut rng);
            Ok(encode(&msg, cfg)?.energy())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(total / (PILOT_MESSAGES as f64 * cfg.n() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    /// Mean energy per dimension over noise variance, in dB.
    pub snr_db: f64,
    pub trials: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// Fraction of messages with at least one symbol error.
    pub wer: f64,
    /// Wilson 95% interval on `ser`, treating symbols as independent.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_ops: f64,
    pub incomplete_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerResult {
    pub t: u32,
    pub eta: u32,
    pub energy_per_dim: f64,
    pub points: Vec<SerPoint>,
    #[serde(skip)]
    pub wall_seconds: Vec<f64>,
}

impl SerResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(&self.points, w)
    }
}

/// Symbol-error-rate sweep. Every trial draws a random message, encodes it,
/// adds AWGN of variance `energy_per_dim / 10^(snr/10)` and decodes. Errors
/// from incomplete encodes are counted like any other.
pub fn run_ser_campaign(
    cfg: &ConstellationConfig,
    snr_db: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SerResult> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if snr_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("snr values must be finite".into()));
    }
    let energy = pilot_energy(cfg, seed)?;
    let n = cfg.n() as u64;
    let mut points = Vec::with_capacity(snr_db.len());
    let mut wall = Vec::with_capacity(snr_db.len());
    for (pi, &snr) in snr_db.iter().enumerate() {
        let start = Instant::now();
        let sigma = (energy / 10f64.powf(snr / 10.0)).sqrt();
        let mut tally = Tally::default();
        let mut done = 0;
        while done < trials {
            let end = (done + BATCH).min(trials);
            let batch: Vec<Tally> = (done..end)
                .into_par_iter()
                .map(|i| ser_trial(cfg, seed, pi as u64, i, sigma))
                .collect::<Result<_>>()?;
            for b in &batch {
                tally.add(b);
            }
            done = end;
        }
        let symbols = trials * n;
        let (ci_low, ci_high) = wilson_interval(tally.symbol_errors, symbols);
        points.push(SerPoint {
            snr_db: snr,
            trials,
            symbol_errors: tally.symbol_errors,
            ser: tally.symbol_errors as f64 / symbols as f64,
            wer: tally.word_errors as f64 / trials as f64,
            ci_low,
            ci_high,
            mean_ops: tally.ops.total() as f64 / trials as f64,
            incomplete_rate: tally.incomplete as f64 / trials as f64,
        });
        wall.push(start.elapsed().as_secs_f64());
    }
    Ok(SerResult {
        t: cfg.t,
        eta: cfg.eta,
        energy_per_dim: energy,
        points,
        wall_seconds: wall,
    })
}

#[derive(Default)]
struct Tally {
    symbol_errors: u64,
    word_errors: u64,
    incomplete: u64,
    ops: OpCounter,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.symbol_errors += o.symbol_errors;
        self.word_errors += o.word_errors;
        self.incomplete += o.incomplete;
        self.ops.merge(&o.ops);
    }
}

fn ser_trial(
    cfg: &ConstellationConfig,
    seed: u64,
    stream: u64,
    index: u64,
    sigma: f64,
) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, stream, index));
    let msg = Message::random(cfg, &mut rng);
    let mut ops = OpCounter::default();
    let enc = encode_counted(&msg, cfg, &mut ops)?;
    let y = add_noise(&enc.point, sigma, &mut rng);
    let got = decode_counted(&y, cfg, &mut ops)?;
    let errs = got
        .symbols
        .iter()
        .zip(&msg.symbols)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok(Tally {
        symbol_errors: errs,
        word_errors: u64::from(errs > 0),
        incomplete: u64::from(enc.incomplete),
        ops,
    })
}
