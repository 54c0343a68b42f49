//! Saddlepoint pairwise error probabilities and truncated union bounds.
//!
//! The decision variable of a weight-`w` error event sums `w_k` independent
//! L-values of stream `k`. Its cumulant transform has its saddlepoint at
//! `s = 1/2` on both channels, which gives
//!
//! `PEP(w) ≈ 2/√(2π) · [Σ_k w_k Φ_k''/Φ_k]^(-1/2) · Π_k Φ_k^(w_k)`
//!
//! with `Φ_k`, `Φ_k''` the transform of `L_k` and its second derivative at
//! `1/2`. Everything is evaluated in the log domain.

use crate::constellation::{Constellation, ConstellationError};
use crate::lvalues::{LValueModel, TransformError};
use crate::spectrum::WeightSpectrum;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};
use std::io::{self, Write};
use thiserror::Error;

/// Bound values above this are outside the range where the union bound is
/// considered tight.
pub const VALIDITY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("weight vector has no positive entry")]
    ZeroWeight,
    #[error("weight vector has {got} entries, constellation has {levels} bit levels")]
    Dimension { got: usize, levels: usize },
    #[error("SNR must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Gaussian tail function.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Channel seen by each transmitted PAM symbol. SNRs are linear `Es/N0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Channel {
    Awgn { gamma: f64 },
    Nakagami { m: f64, gamma_bar: f64 },
}

impl Channel {
    pub fn awgn_db(db: f64) -> Self {
        Channel::Awgn {
            gamma: db_to_linear(db),
        }
    }

    pub fn nakagami_db(m: f64, db: f64) -> Self {
        Channel::Nakagami {
            m,
            gamma_bar: db_to_linear(db),
        }
    }

    /// Average SNR (linear).
    pub fn snr(&self) -> f64 {
        match *self {
            Channel::Awgn { gamma } => gamma,
            Channel::Nakagami { gamma_bar, .. } => gamma_bar,
        }
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr())
    }

    /// Same channel family at another average SNR (linear).
    pub fn with_snr(&self, snr: f64) -> Self {
        match *self {
            Channel::Awgn { .. } => Channel::Awgn { gamma: snr },
            Channel::Nakagami { m, .. } => Channel::Nakagami { m, gamma_bar: snr },
        }
    }

    pub fn with_snr_db(&self, db: f64) -> Self {
        self.with_snr(db_to_linear(db))
    }

    /// Nakagami parameter, `None` on AWGN.
    pub fn m(&self) -> Option<f64> {
        match *self {
            Channel::Awgn { .. } => None,
            Channel::Nakagami { m, .. } => Some(m),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Awgn { .. } => "awgn",
            Channel::Nakagami { .. } => "nakagami",
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        let snr = self.snr();
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(BoundError::InvalidSnr(snr));
        }
        if let Some(m) = self.m() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(TransformError::InvalidM(m).into());
            }
        }
        Ok(())
    }

    /// Draws the instantaneous SNR of one symbol.
    pub fn sample_snr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Channel::Awgn { gamma } => gamma,
            Channel::Nakagami { m, gamma_bar } => Gamma::new(m, gamma_bar / m)
                .expect("validated channel")
                .sample(rng),
        }
    }
}

/// Per-level transform values at the saddlepoint for one channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleTerms {
    /// `ln Φ_k(1/2)`.
    pub ln_phi: Vec<f64>,
    /// `Φ_k''(1/2) / Φ_k(1/2)`.
    pub ratio: Vec<f64>,
}

/// `ln(1 / (ŝ √(2π)))` with `ŝ = 1/2`.
fn ln_prefactor() -> f64 {
    (2.0 / (2.0 * PI).sqrt()).ln()
}

impl SaddleTerms {
    pub fn new(model: &LValueModel, channel: &Channel) -> Result<Self, BoundError> {
        channel.validate()?;
        let q = model.levels();
        let mut ln_phi = Vec::with_capacity(q);
        let mut ratio = Vec::with_capacity(q);
        for k in 0..q {
            let (phi, d2) = match *channel {
                Channel::Awgn { gamma } => (
                    model.laplace_awgn(k, 0.5, gamma),
                    model.laplace_awgn_d2(k, 0.5, gamma),
                ),
                Channel::Nakagami { m, gamma_bar } => (
                    model.laplace_fading(k, 0.5, gamma_bar, m)?,
                    model.laplace_fading_d2(k, 0.5, gamma_bar, m)?,
                ),
            };
            ln_phi.push(phi.ln());
            ratio.push(d2 / phi);
        }
        Ok(Self { ln_phi, ratio })
    }

    pub fn for_constellation(c: &Constellation, channel: &Channel) -> Result<Self, BoundError> {
        Self::new(&LValueModel::new(c), channel)
    }

    /// Saddlepoint PEP without clipping. A weight vector touching only
    /// levels that carry no distance gives a coin flip, 1/2.
    pub fn pep_raw(&self, w: &[u32]) -> f64 {
        let mut curv = 0.0;
        let mut ln_prod = 0.0;
        for ((&wk, &lp), &r) in w.iter().zip(&self.ln_phi).zip(&self.ratio) {
            if wk > 0 {
                let wk = wk as f64;
                curv += wk * r;
                ln_prod += wk * lp;
            }
        }
        if curv <= 0.0 {
            return 0.5;
        }
        (ln_prefactor() - 0.5 * curv.ln() + ln_prod).exp()
    }

    /// Saddlepoint PEP clipped to `[0, 1]`.
    pub fn pep(&self, w: &[u32]) -> Result<f64, BoundError> {
        if w.len() != self.ln_phi.len() {
            return Err(BoundError::Dimension {
                got: w.len(),
                levels: self.ln_phi.len(),
            });
        }
        if w.iter().all(|&x| x == 0) {
            return Err(BoundError::ZeroWeight);
        }
        Ok(self.pep_raw(w).clamp(0.0, 1.0))
    }
}

pub fn pep_awgn(w: &[u32], gamma: f64, c: &Constellation) -> Result<f64, BoundError> {
    SaddleTerms::for_constellation(c, &Channel::Awgn { gamma })?.pep(w)
}

pub fn pep_fading(w: &[u32], gamma_bar: f64, m: f64, c: &Constellation) -> Result<f64, BoundError> {
    SaddleTerms::for_constellation(c, &Channel::Nakagami { m, gamma_bar })?.pep(w)
}

/// Spectrum in floating point, ready for repeated bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub wmax: u32,
    pub entries: Vec<(Vec<u32>, f64)>,
}

impl SpectrumTable {
    pub fn new(spectrum: &WeightSpectrum) -> Self {
        Self {
            wmax: spectrum.wmax(),
            entries: spectrum.to_f64(),
        }
    }

    pub fn streams(&self) -> usize {
        self.entries.first().map_or(0, |e| e.0.len())
    }
}

/// Union bound value with its truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnionBound {
    pub value: f64,
    /// Contribution of the outermost shell, total weight `wmax`.
    pub last_shell: f64,
}

impl UnionBound {
    /// Whether the value is in the range where the bound is meaningful.
    pub fn valid(&self) -> bool {
        self.value <= VALIDITY_THRESHOLD
    }
}

/// `(1/k_c) Σ β(w) PEP(w)` over the truncated spectrum.
pub fn union_bound_terms(table: &SpectrumTable, terms: &SaddleTerms, k_c: usize) -> UnionBound {
    let mut value = 0.0;
    let mut last_shell = 0.0;
    for (w, beta) in &table.entries {
        let x = beta * terms.pep_raw(w);
        value += x;
        if w.iter().sum::<u32>() == table.wmax {
            last_shell += x;
        }
    }
    let kc = k_c as f64;
    UnionBound {
        value: value / kc,
        last_shell: last_shell / kc,
    }
}

/// Everything needed for one bound evaluation.
#[derive(Debug, Clone)]
pub struct BoundQuery<'a> {
    pub spectrum: &'a WeightSpectrum,
    pub constellation: &'a Constellation,
    pub channel: Channel,
    pub k_c: usize,
}

pub fn union_bound(query: &BoundQuery<'_>) -> Result<UnionBound, BoundError> {
    let levels = query.constellation.bits();
    if !query.spectrum.is_empty() && query.spectrum.streams() != levels {
        return Err(BoundError::Dimension {
            got: query.spectrum.streams(),
            levels,
        });
    }
    let terms = SaddleTerms::for_constellation(query.constellation, &query.channel)?;
    Ok(union_bound_terms(
        &SpectrumTable::new(query.spectrum),
        &terms,
        query.k_c,
    ))
}

/// Monte Carlo estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_counts(hits: f64, samples: u64) -> Self {
        let n = samples as f64;
        let p = hits / n;
        let half = 1.96 * (p * (1.0 - p) / n).sqrt();
        Self {
            value: p,
            ci_low: (p - half).max(0.0),
            ci_high: (p + half).min(1.0),
            samples,
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.value * (1.0 - self.value) / self.samples as f64).sqrt()
    }
}

/// Direct simulation of the decision variable: sums `w_k` model L-values
/// of every level (SNR redrawn per L-value under fading) and counts how
/// often the competing path wins. Ties count one half.
pub fn pep_oracle<R: Rng + ?Sized>(
    w: &[u32],
    channel: &Channel,
    model: &LValueModel,
    samples: u64,
    rng: &mut R,
) -> Result<Estimate, BoundError> {
    channel.validate()?;
    if w.len() != model.levels() {
        return Err(BoundError::Dimension {
            got: w.len(),
            levels: model.levels(),
        });
    }
    if w.iter().all(|&x| x == 0) {
        return Err(BoundError::ZeroWeight);
    }
    let mut hits = 0.0;
    for _ in 0..samples {
        let mut d = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            for _ in 0..wk {
                let g = channel.sample_snr(rng);
                d -= model.sample(k, g, rng);
            }
        }
        if d > 0.0 {
            hits += 1.0;
        } else if d == 0.0 {
            hits += 0.5;
        }
    }
    Ok(Estimate::from_counts(hits, samples))
}

/// One row of a bound sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub gamma_db: f64,
    pub ub: f64,
    pub last_shell: f64,
    pub channel: String,
    pub m: Option<f64>,
    pub alphas: Vec<f64>,
    pub mux_id: String,
}

/// Bound over an SNR grid (dB) for a fixed design.
pub fn bound_sweep(
    table: &SpectrumTable,
    constellation: &Constellation,
    channel: &Channel,
    k_c: usize,
    grid_db: &[f64],
    mux_id: &str,
) -> Result<Vec<BoundPoint>, BoundError> {
    let model = LValueModel::new(constellation);
    grid_db
        .iter()
        .map(|&db| {
            let ch = channel.with_snr_db(db);
            let terms = SaddleTerms::new(&model, &ch)?;
            let ub = union_bound_terms(table, &terms, k_c);
            Ok(BoundPoint {
                gamma_db: db,
                ub: ub.value,
                last_shell: ub.last_shell,
                channel: ch.name().to_string(),
                m: ch.m(),
                alphas: constellation.alphas().to_vec(),
                mux_id: mux_id.to_string(),
            })
        })
        .collect()
}

/// Bound at one SNR for each constellation in `alphas`.
pub fn alpha_sweep(
    table: &SpectrumTable,
    order: usize,
    channel: &Channel,
    k_c: usize,
    alphas: &[Vec<f64>],
    mux_id: &str,
) -> Result<Vec<BoundPoint>, BoundError> {
    alphas
        .par_iter()
        .map(|a| {
            let c = Constellation::new_unchecked(a, order)?;
            let terms = SaddleTerms::for_constellation(&c, channel)?;
            let ub = union_bound_terms(table, &terms, k_c);
            Ok(BoundPoint {
                gamma_db: channel.snr_db(),
                ub: ub.value,
                last_shell: ub.last_shell,
                channel: channel.name().to_string(),
                m: channel.m(),
                alphas: a.clone(),
                mux_id: mux_id.to_string(),
            })
        })
        .collect()
}

pub const BOUND_CSV_HEADER: &str = "gamma_dB,ub,last_shell,channel,m,alphas,mux_id";

pub fn write_bound_csv<W: Write>(mut out: W, points: &[BoundPoint]) -> io::Result<()> {
    writeln!(out, "{BOUND_CSV_HEADER}")?;
    for p in points {
        let alphas: Vec<String> = p.alphas.iter().map(|a| format!("{a}")).collect();
        writeln!(
            out,
            "{},{:.6e},{:.6e},{},{},{},{}",
            p.gamma_db,
            p.ub,
            p.last_shell,
            p.channel,
            p.m.map_or(String::new(), |m| format!("{m}")),
            alphas.join(";"),
            csv_field(&p.mux_id)
        )?;
    }
    Ok(())
}

/// Quotes a CSV field when it contains a separator.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// SNR (dB) at which a decreasing curve sampled on `grid_db` crosses
/// `target`, interpolating linearly in `log10(value)`.
pub fn crossing_db(grid_db: &[f64], values: &[f64], target: f64) -> Option<f64> {
    let lt = target.log10();
    for i in 1..grid_db.len().min(values.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a >= target && b <= target && a > 0.0 && b > 0.0 {
            let (la, lb) = (a.log10(), b.log10());
            if la == lb {
                return Some(grid_db[i - 1]);
            }
            let t = (la - lt) / (la - lb);
            return Some(grid_db[i - 1] + t * (grid_db[i] - grid_db[i - 1]));
        }
    }
    None
}
