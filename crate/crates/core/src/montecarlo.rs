//! End-to-end bit error rate simulation.
//!
//! encode → multiplex → interleave → map → channel → max-log demap →
//! deinterleave → demultiplex → Viterbi. Channel model per real dimension:
//! `y = x + z` with `z ~ N(0, 1/(2γ))`, `γ` drawn per symbol on fading
//! channels and known to the receiver.

use crate::bounds::{db_to_linear, Channel, Estimate};
use crate::constellation::{Constellation, ConstellationError};
use crate::convcode::{CodeError, ConvCode, PuncturePattern, Trellis};
use crate::lvalues::maxlog_llr_into;
use crate::mux::{DMuxPattern, Interleaver, MuxError, Multiplexer, StreamProbabilities};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Mux(#[from] MuxError),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// How coded bits reach the bit levels of the constellation.
#[derive(Debug, Clone, PartialEq)]
pub enum MuxScheme {
    /// Periodic D-MUX followed by one interleaver per stream.
    Deterministic(DMuxPattern),
    /// Randomized assignment with fixed probabilities, one interleaver per
    /// stream.
    Randomized(StreamProbabilities),
    /// Optional puncturing, then a single interleaver over all coded bits
    /// read out `q` bits per symbol.
    Single(Option<PuncturePattern>),
}

/// Draws the instantaneous SNR of one symbol.
pub fn sample_snr<R: Rng + ?Sized>(channel: &Channel, rng: &mut R) -> f64 {
    channel.sample_snr(rng)
}

/// Simulation settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub code: ConvCode,
    pub mux: MuxScheme,
    pub constellation: Constellation,
    /// Trellis steps per block, zero tail included.
    pub block_len: usize,
    pub min_errors: u64,
    pub max_blocks: u64,
    /// Blocks simulated between stop-rule checks.
    pub batch: usize,
    pub seed: u64,
    /// Map info bits straight to symbols and decide by L-value sign.
    pub uncoded: bool,
}

impl SimConfig {
    pub fn new(code: ConvCode, mux: MuxScheme, constellation: Constellation) -> Self {
        Self {
            code,
            mux,
            constellation,
            block_len: 24_000,
            min_errors: 100,
            max_blocks: 10_000,
            batch: 16,
            seed: 1,
            uncoded: false,
        }
    }
}

enum Routing {
    Streams {
        mux: Multiplexer,
        interleavers: Vec<Interleaver>,
    },
    Single {
        puncture: Option<PuncturePattern>,
        interleaver: Interleaver,
    },
    Uncoded,
}

/// A configured transmission chain.
pub struct Simulator {
    cfg: SimConfig,
    trellis: Trellis,
    routing: Routing,
    symbols: usize,
    info_len: usize,
}

/// Stream used for the fixed interleavers, kept away from block streams.
const SETUP_STREAM: u64 = u64::MAX;

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let q = cfg.constellation.bits();
        let n = cfg.code.outputs();
        let len = cfg.block_len;
        let trellis = cfg.code.trellis();
        let mut setup = ChaCha8Rng::seed_from_u64(cfg.seed);
        setup.set_stream(SETUP_STREAM);
        if cfg.batch == 0 || cfg.max_blocks == 0 {
            return Err(SimError::Config("batch and max_blocks must be positive".into()));
        }
        if cfg.uncoded {
            if !len.is_multiple_of(q) {
                return Err(SimError::Config(format!(
                    "block length {len} is not a multiple of {q} bits per symbol"
                )));
            }
            return Ok(Self {
                symbols: len / q,
                info_len: len,
                trellis,
                routing: Routing::Uncoded,
                cfg,
            });
        }
        let mem = trellis.memory();
        if len <= mem {
            return Err(SimError::Config(format!("block length {len} leaves no room for data")));
        }
        let (routing, symbols) = match &cfg.mux {
            MuxScheme::Deterministic(p) => {
                check_dims(p.outputs(), p.streams(), n, q)?;
                let mux = p.expand(len)?;
                let ns = mux.stream_len();
                let interleavers = (0..q).map(|_| Interleaver::new(ns, setup.random())).collect();
                (Routing::Streams { mux, interleavers }, ns)
            }
            MuxScheme::Randomized(table) => {
                check_dims(table.outputs(), table.streams(), n, q)?;
                let mux = table.sample(len, &mut setup)?;
                let ns = mux.stream_len();
                let interleavers = (0..q).map(|_| Interleaver::new(ns, setup.random())).collect();
                (Routing::Streams { mux, interleavers }, ns)
            }
            MuxScheme::Single(puncture) => {
                let bits = match puncture {
                    Some(p) => {
                        if p.rows() != n || !len.is_multiple_of(p.period()) {
                            return Err(SimError::Config(
                                "puncturing pattern does not fit the code and block".into(),
                            ));
                        }
                        len / p.period() * p.kept_per_period()
                    }
                    None => n * len,
                };
                if bits % q != 0 {
                    return Err(SimError::Config(format!(
                        "{bits} coded bits do not fill whole {q}-bit symbols"
                    )));
                }
                let interleaver = Interleaver::new(bits, setup.random());
                (
                    Routing::Single {
                        puncture: puncture.clone(),
                        interleaver,
                    },
                    bits / q,
                )
            }
        };
        Ok(Self {
            info_len: (len - mem) * cfg.code.inputs(),
            cfg,
            trellis,
            routing,
            symbols,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Info bits carried per block (tail excluded).
    pub fn info_bits_per_block(&self) -> usize {
        self.info_len
    }

    pub fn symbols_per_block(&self) -> usize {
        self.symbols
    }

    /// Random info bits of one block, `k_c` rows with the zero tail.
    fn draw_info<R: Rng + ?Sized>(&self, rng: &mut R, zero: bool) -> Vec<Vec<u8>> {
        let len = self.cfg.block_len;
        let mem = self.trellis.memory();
        (0..self.cfg.code.inputs())
            .map(|_| {
                (0..len)
                    .map(|t| if zero || t >= len - mem { 0 } else { rng.random::<u8>() & 1 })
                    .collect()
            })
            .collect()
    }

    /// Bit streams (one row per bit level) for a coded block.
    fn to_streams(&self, coded: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, SimError> {
        let q = self.cfg.constellation.bits();
        Ok(match &self.routing {
            Routing::Streams { mux, interleavers } => mux
                .apply(coded)?
                .iter()
                .zip(interleavers)
                .map(|(s, il)| il.interleave(s))
                .collect::<Result<_, _>>()?,
            Routing::Single {
                puncture,
                interleaver,
            } => {
                let flat = match puncture {
                    Some(p) => p.puncture(coded)?,
                    None => column_flatten(coded),
                };
                let mixed = interleaver.interleave(&flat)?;
                (0..q)
                    .map(|k| mixed.iter().skip(k).step_by(q).copied().collect())
                    .collect()
            }
            Routing::Uncoded => {
                let flat = &coded[0];
                (0..q)
                    .map(|k| flat.iter().skip(k).step_by(q).copied().collect())
                    .collect()
            }
        })
    }

    /// L-values at the decoder input from per-level demapper output.
    fn from_streams(&self, llrs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, SimError> {
        let n = self.cfg.code.outputs();
        let len = self.cfg.block_len;
        let q = self.cfg.constellation.bits();
        Ok(match &self.routing {
            Routing::Streams { mux, interleavers } => {
                let streams: Vec<Vec<f64>> = llrs
                    .iter()
                    .zip(interleavers)
                    .map(|(s, il)| il.deinterleave(s))
                    .collect::<Result<_, _>>()?;
                mux.invert(&streams)?
            }
            Routing::Single {
                puncture,
                interleaver,
            } => {
                let mut mixed = vec![0.0; self.symbols * q];
                for (k, row) in llrs.iter().enumerate() {
                    for (t, &l) in row.iter().enumerate() {
                        mixed[t * q + k] = l;
                    }
                }
                let flat = interleaver.deinterleave(&mixed)?;
                match puncture {
                    Some(p) => p.depuncture(&flat, len)?,
                    None => (0..n)
                        .map(|p| flat.iter().skip(p).step_by(n).copied().collect())
                        .collect(),
                }
            }
            Routing::Uncoded => {
                let mut flat = vec![0.0; self.symbols * q];
                for (k, row) in llrs.iter().enumerate() {
                    for (t, &l) in row.iter().enumerate() {
                        flat[t * q + k] = l;
                    }
                }
                vec![flat]
            }
        })
    }

    /// Sends one block through the channel. Returns the info bits and the
    /// L-values at the decoder input (one row per code output).
    pub fn transmit_block<R: Rng + ?Sized>(
        &self,
        channel: &Channel,
        rng: &mut R,
        all_zero: bool,
    ) -> Result<(Vec<Vec<u8>>, Vec<Vec<f64>>), SimError> {
        let c = &self.cfg.constellation;
        let q = c.bits();
        let info = if self.cfg.uncoded {
            vec![(0..self.info_len)
                .map(|_| if all_zero { 0 } else { rng.random::<u8>() & 1 })
                .collect()]
        } else {
            self.draw_info(rng, all_zero)
        };
        let coded = if self.cfg.uncoded {
            info.clone()
        } else {
            self.cfg.code.encode(&info)?
        };
        let streams = self.to_streams(&coded)?;
        let mut llrs = vec![vec![0.0; self.symbols]; q];
        let mut buf = vec![0.0; q];
        for t in 0..self.symbols {
            let label = (0..q).fold(0usize, |acc, k| (acc << 1) | streams[k][t] as usize);
            let x = c.points()[c.point_for_label(label)];
            let gamma = channel.sample_snr(rng);
            let z: f64 = StandardNormal.sample(rng);
            let y = x + z / (2.0 * gamma).sqrt();
            maxlog_llr_into(y, gamma, c, &mut buf);
            for k in 0..q {
                llrs[k][t] = buf[k];
            }
        }
        Ok((info, self.from_streams(llrs)?))
    }

    /// Bit errors in one block.
    pub fn run_block<R: Rng + ?Sized>(
        &self,
        channel: &Channel,
        rng: &mut R,
    ) -> Result<u64, SimError> {
        let (info, llrs) = self.transmit_block(channel, rng, false)?;
        if self.cfg.uncoded {
            return Ok(info[0]
                .iter()
                .zip(&llrs[0])
                .filter(|(&b, &l)| (l < 0.0) as u8 != b)
                .count() as u64);
        }
        let decoded = self.trellis.viterbi_decode(&llrs, true);
        let data = self.cfg.block_len - self.trellis.memory();
        Ok(info
            .iter()
            .zip(&decoded)
            .map(|(a, b)| a[..data].iter().zip(&b[..data]).filter(|(x, y)| x != y).count() as u64)
            .sum())
    }

    /// RNG of block `block` at sweep point `point`, independent of the
    /// order in which blocks are simulated.
    pub fn block_rng(&self, point: usize, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(((point as u64) << 40) | block);
        rng
    }

    /// Simulates one SNR point until `min_errors` bit errors or `max_blocks`
    /// blocks. Blocks run concurrently in fixed-size batches, so the result
    /// does not depend on the number of workers.
    pub fn run_point(&self, channel: &Channel, point: usize) -> Result<BerPoint, SimError> {
        let mut errors = 0u64;
        let mut blocks = 0u64;
        while errors < self.cfg.min_errors && blocks < self.cfg.max_blocks {
            let batch = (self.cfg.batch as u64).min(self.cfg.max_blocks - blocks);
            let found: u64 = (blocks..blocks + batch)
                .into_par_iter()
                .map(|b| self.run_block(channel, &mut self.block_rng(point, b)))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .sum();
            errors += found;
            blocks += batch;
        }
        Ok(BerPoint::new(
            channel.snr_db(),
            errors,
            blocks * self.info_len as u64,
            blocks,
        ))
    }
}

fn check_dims(outputs: usize, streams: usize, n: usize, q: usize) -> Result<(), SimError> {
    if outputs != n || streams != q {
        return Err(SimError::Config(format!(
            "multiplexer maps {outputs} outputs to {streams} streams, \
             chain has {n} code outputs and {q} bit levels"
        )));
    }
    Ok(())
}

/// `n x len` bits read column by column.
fn column_flatten(rows: &[Vec<u8>]) -> Vec<u8> {
    let len = rows.first().map_or(0, Vec::len);
    (0..len).flat_map(|t| rows.iter().map(move |r| r[t])).collect()
}

/// Measured BER at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerPoint {
    pub gamma_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub blocks: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerPoint {
    pub fn new(gamma_db: f64, errors: u64, bits: u64, blocks: u64) -> Self {
        let e = Estimate::from_counts(errors as f64, bits);
        Self {
            gamma_db,
            errors,
            bits,
            blocks,
            ber: e.value,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        }
    }
}

/// BER at every SNR of `grid_db`, using the channel family of `channel`.
pub fn run_ber_sweep(
    sim: &Simulator,
    channel: &Channel,
    grid_db: &[f64],
) -> Result<Vec<BerPoint>, SimError> {
    grid_db
        .iter()
        .enumerate()
        .map(|(i, &db)| sim.run_point(&channel.with_snr(db_to_linear(db)), i))
        .collect()
}

pub const BER_CSV_HEADER: &str = "gamma_dB,ber,ci_low,ci_high,bits,errors,config_hash";

pub fn write_ber_csv<W: Write>(mut out: W, points: &[BerPoint], config_hash: &str) -> io::Result<()> {
    writeln!(out, "{BER_CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{},{},{}",
            p.gamma_db, p.ber, p.ci_low, p.ci_high, p.bits, p.errors, config_hash
        )?;
    }
    Ok(())
}

/// Serializable simulation description (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    /// Octal generators, e.g. `"5,7"`.
    pub code: String,
    /// D-MUX pattern (`"2,2/1,1"`), `"rmux:<table>"`, `"s"` or
    /// `"s-punctured:<pattern>"`.
    pub mux: String,
    pub order: usize,
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// `"awgn"` or `"nakagami"`.
    pub channel: String,
    #[serde(default)]
    pub m: Option<f64>,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub uncoded: bool,
}

fn default_block_len() -> usize {
    24_000
}
fn default_min_errors() -> u64 {
    100
}
fn default_max_blocks() -> u64 {
    10_000
}
fn default_seed() -> u64 {
    1
}

/// Parses the `mux` field of a [`SimSpec`].
pub fn parse_mux_scheme(text: &str, streams: usize) -> Result<MuxScheme, SimError> {
    let text = text.trim();
    if text == "s" {
        return Ok(MuxScheme::Single(None));
    }
    if let Some(p) = text.strip_prefix("s-punctured:") {
        return Ok(MuxScheme::Single(Some(PuncturePattern::parse(p)?)));
    }
    if let Some(t) = text.strip_prefix("rmux:") {
        return Ok(MuxScheme::Randomized(StreamProbabilities::parse(t)?));
    }
    Ok(MuxScheme::Deterministic(DMuxPattern::parse(text, Some(streams))?))
}

impl SimSpec {
    pub fn channel(&self) -> Result<Channel, SimError> {
        let gamma = 1.0;
        match (self.channel.as_str(), self.m) {
            ("awgn", None) => Ok(Channel::Awgn { gamma }),
            ("nakagami", Some(m)) if m > 0.0 => Ok(Channel::Nakagami { m, gamma_bar: gamma }),
            ("nakagami", _) => Err(SimError::Config("nakagami channel needs m > 0".into())),
            ("awgn", Some(_)) => Err(SimError::Config("m given for an awgn channel".into())),
            (other, _) => Err(SimError::Config(format!("unknown channel {other:?}"))),
        }
    }

    pub fn build(&self) -> Result<SimConfig, SimError> {
        let bits = self.order.trailing_zeros() as usize;
        if !self.order.is_power_of_two() || bits == 0 {
            return Err(SimError::Config(format!("order {} is not a power of two >= 2", self.order)));
        }
        let constellation = Constellation::new(&self.alphas, self.order)?;
        let code = ConvCode::from_octal(&self.code)?;
        let mux = if self.uncoded {
            MuxScheme::Single(None)
        } else {
            parse_mux_scheme(&self.mux, bits)?
        };
        if self.snr_db.iter().any(|x| !x.is_finite()) || self.snr_db.is_empty() {
            return Err(SimError::Config("snr_db must be a nonempty list of finite values".into()));
        }
        let mut cfg = SimConfig::new(code, mux, constellation);
        cfg.block_len = self.block_len;
        cfg.min_errors = self.min_errors;
        cfg.max_blocks = self.max_blocks;
        cfg.seed = self.seed;
        cfg.uncoded = self.uncoded;
        Ok(cfg)
    }
}
