//! Exhaustive joint search over multiplexer patterns and constellation
//! parameters minimizing the union bound.

use crate::bounds::{union_bound_terms, BoundError, Channel, SaddleTerms, SpectrumTable, UnionBound};
use crate::constellation::{in_region, Constellation, ConstellationError};
use crate::convcode::Trellis;
use crate::lvalues::LValueModel;
use crate::mux::DMuxPattern;
use crate::spectrum::{compute_ewds, SpectrumError};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("no in-region constellation parameters on the grid")]
    EmptyGrid,
    #[error("no candidate patterns")]
    NoCandidates,
    #[error("grid step must be in (0, 1], got {0}")]
    InvalidStep(f64),
    #[error("target {target:e} not reached between {lo_db} and {hi_db} dB")]
    TargetUnreachable { target: f64, lo_db: f64, hi_db: f64 },
    #[error("pattern has {got} streams, constellation has {bits} bit levels")]
    Dimension { got: usize, bits: usize },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
}

/// Grid of in-region `α` vectors (length `bits - 1`) at multiples of `step`,
/// in lexicographic order.
pub fn alpha_grid(bits: usize, step: f64) -> Result<Vec<Vec<f64>>, OptimizeError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(OptimizeError::InvalidStep(step));
    }
    let n = bits.saturating_sub(1);
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    let top = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let alphas: Vec<f64> = idx.iter().map(|&i| round_grid(i as f64 * step)).collect();
        if in_region(&alphas) {
            out.push(alphas);
        }
        // odometer, last coordinate fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return if out.is_empty() {
                    Err(OptimizeError::EmptyGrid)
                } else {
                    Ok(out)
                };
            }
            pos -= 1;
            if idx[pos] < top {
                idx[pos] += 1;
                for x in &mut idx[pos + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// A pattern with its spectrum prepared for fast bound evaluation.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: usize,
    pub pattern: DMuxPattern,
    pub table: SpectrumTable,
    weights: Vec<f64>,
    ln_beta: Vec<f64>,
}

impl Candidate {
    pub fn new(id: usize, pattern: DMuxPattern, table: SpectrumTable) -> Self {
        let q = pattern.streams();
        let mut weights = Vec::with_capacity(table.entries.len() * q);
        let mut ln_beta = Vec::with_capacity(table.entries.len());
        for (w, b) in &table.entries {
            weights.extend(w.iter().map(|&x| x as f64));
            ln_beta.push(b.ln());
        }
        Self {
            id,
            pattern,
            table,
            weights,
            ln_beta,
        }
    }

    pub fn streams(&self) -> usize {
        self.pattern.streams()
    }

    /// Union bound for the given saddlepoint terms (`k_c = 1` scaling left
    /// to the caller).
    pub fn bound(&self, terms: &SaddleTerms) -> f64 {
        let q = self.streams();
        let c0 = (2.0 / (2.0 * PI).sqrt()).ln();
        let mut total = 0.0;
        for (w, &lb) in self.weights.chunks_exact(q).zip(&self.ln_beta) {
            let mut curv = 0.0;
            let mut lp = 0.0;
            for k in 0..q {
                curv += w[k] * terms.ratio[k];
                lp += w[k] * terms.ln_phi[k];
            }
            total += if curv > 0.0 {
                (lb + c0 - 0.5 * curv.ln() + lp).exp()
            } else {
                0.5 * lb.exp()
            };
        }
        total
    }
}

/// Spectra of every pattern, computed concurrently. Ids follow the order
/// of `patterns`.
pub fn prepare_candidates(
    trellis: &Trellis,
    patterns: &[DMuxPattern],
    wmax: u32,
) -> Result<Vec<Candidate>, OptimizeError> {
    patterns
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            let s = compute_ewds(trellis, p, wmax)?;
            Ok(Candidate::new(id, p.clone(), SpectrumTable::new(&s)))
        })
        .collect()
}

/// Best constellation found for one pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub pattern_id: usize,
    pub mux: String,
    pub alphas: Vec<f64>,
    pub ub: f64,
}

/// Outcome of a search at one channel state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub channel: String,
    pub m: Option<f64>,
    #[serde(rename = "gamma_dB")]
    pub gamma_db: f64,
    pub pattern_id: usize,
    pub mux: String,
    pub alphas: Vec<f64>,
    pub ub: f64,
    pub wmax: u32,
    pub grid_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranked: Option<Vec<RankedEntry>>,
}

/// Search settings shared across channel states.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub order: usize,
    pub grid_step: f64,
    pub k_c: usize,
    pub keep_ranked: bool,
}

impl SearchSpace {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            grid_step: 0.01,
            k_c: 1,
            keep_ranked: false,
        }
    }
}

struct GridPoint {
    index: usize,
    terms: SaddleTerms,
}

fn grid_terms(
    grid: &[Vec<f64>],
    order: usize,
    channel: &Channel,
) -> Result<Vec<GridPoint>, OptimizeError> {
    grid.par_iter()
        .enumerate()
        .map(|(index, a)| {
            let c = Constellation::new_unchecked(a, order)?;
            let terms = SaddleTerms::new(&LValueModel::new(&c), channel)?;
            Ok(GridPoint { index, terms })
        })
        .collect()
}

/// Best constellation on `grid` for a fixed spectrum. Ties go to the
/// earliest grid entry.
pub fn optimize_alphas(
    table: &SpectrumTable,
    order: usize,
    channel: &Channel,
    grid: &[Vec<f64>],
    k_c: usize,
) -> Result<(Vec<f64>, UnionBound), OptimizeError> {
    let scored = grid
        .par_iter()
        .map(|a| {
            let c = Constellation::new_unchecked(a, order)?;
            let terms = SaddleTerms::for_constellation(&c, channel)?;
            Ok(union_bound_terms(table, &terms, k_c))
        })
        .collect::<Result<Vec<_>, OptimizeError>>()?;
    let (best, ub) = scored
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, UnionBound)>, (i, u)| match acc {
            Some((_, ref b)) if b.value <= u.value => acc,
            _ => Some((i, u)),
        })
        .ok_or(OptimizeError::EmptyGrid)?;
    Ok((grid[best].clone(), ub))
}

/// Exhaustive search at one channel state. Ties go to the smallest
/// `(pattern id, alphas)`.
pub fn optimize(
    candidates: &[Candidate],
    channel: &Channel,
    space: &SearchSpace,
) -> Result<DesignResult, OptimizeError> {
    if candidates.is_empty() {
        return Err(OptimizeError::NoCandidates);
    }
    let bits = space.order.trailing_zeros() as usize;
    for c in candidates {
        if c.streams() != bits {
            return Err(OptimizeError::Dimension {
                got: c.streams(),
                bits,
            });
        }
    }
    let grid = alpha_grid(bits, space.grid_step)?;
    let points = grid_terms(&grid, space.order, channel)?;
    let kc = space.k_c as f64;
    // best grid index per candidate
    let per_pattern: Vec<(f64, usize)> = candidates
        .par_iter()
        .map(|cand| {
            points
                .iter()
                .map(|p| (cand.bound(&p.terms) / kc, p.index))
                .fold((f64::INFINITY, usize::MAX), |best, x| {
                    if x.0 < best.0 || (x.0 == best.0 && x.1 < best.1) {
                        x
                    } else {
                        best
                    }
                })
        })
        .collect();
    let mut best = 0usize;
    for (i, x) in per_pattern.iter().enumerate() {
        let b = per_pattern[best];
        let better = x.0 < b.0
            || (x.0 == b.0 && (candidates[i].id, x.1) < (candidates[best].id, b.1));
        if better {
            best = i;
        }
    }
    let (ub, gi) = per_pattern[best];
    let ranked = space.keep_ranked.then(|| {
        let mut r: Vec<RankedEntry> = per_pattern
            .iter()
            .zip(candidates)
            .map(|(&(ub, gi), c)| RankedEntry {
                pattern_id: c.id,
                mux: c.pattern.text(),
                alphas: grid[gi].clone(),
                ub,
            })
            .collect();
        r.sort_by(|a, b| a.ub.total_cmp(&b.ub).then(a.pattern_id.cmp(&b.pattern_id)));
        r
    });
    Ok(DesignResult {
        channel: channel.name().to_string(),
        m: channel.m(),
        gamma_db: channel.snr_db(),
        pattern_id: candidates[best].id,
        mux: candidates[best].pattern.text(),
        alphas: grid[gi].clone(),
        ub,
        wmax: candidates[best].table.wmax,
        grid_step: space.grid_step,
        ranked,
    })
}

/// Finds the mean SNR (dB, within `tol_db`) at which the optimized bound
/// reaches `target` on a Nakagami-m channel by bisection inside
/// `[lo_db, hi_db]`, and returns the design found there.
pub fn optimize_fading_fixed(
    candidates: &[Candidate],
    m: f64,
    target: f64,
    space: &SearchSpace,
    (lo_db, hi_db): (f64, f64),
    tol_db: f64,
) -> Result<DesignResult, OptimizeError> {
    let eval = |db: f64| optimize(candidates, &Channel::nakagami_db(m, db), space);
    let unreachable = OptimizeError::TargetUnreachable { target, lo_db, hi_db };
    let hi = eval(hi_db)?;
    if hi.ub > target {
        return Err(unreachable);
    }
    let lo = eval(lo_db)?;
    if lo.ub < target {
        return Err(unreachable);
    }
    let (mut a, mut b) = (lo_db, hi_db);
    let mut best = hi;
    while b - a > tol_db {
        let mid = 0.5 * (a + b);
        let r = eval(mid)?;
        if r.ub > target {
            a = mid;
        } else {
            b = mid;
            best = r;
        }
    }
    Ok(best)
}
