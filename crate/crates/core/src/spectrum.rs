//! Equivalent weight distribution spectra of an encoder followed by a bit
//! multiplexer.
//!
//! A remerging path leaves the zero state and returns to it. Its coded bits
//! are routed to streams by the multiplexer, so each path has a per-stream
//! weight vector `w`. The spectrum `beta(w)` sums the input weights of all
//! such paths, averaged over the `J` phases at which a path may start
//! inside the multiplexer period.
//!
//! The search is breadth-first over `(state, accumulated weights)` with
//! paths merged when they agree on both, and pruned once their total weight
//! exceeds the truncation `wmax`. Multiplicities are exact rationals.

use crate::convcode::{PuncturePattern, Trellis};
use crate::mux::{DMuxPattern, StreamProbabilities};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use thiserror::Error;

/// Packing limit: weights live in 8-bit lanes of a `u64`.
const MAX_DIMS: usize = 7;
const MAX_WMAX: u32 = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("truncation {wmax} is below the smallest path weight {free}")]
    BelowFreeDistance { wmax: u32, free: u32 },
    #[error("no remerging path with total weight <= {0}")]
    Empty(u32),
    #[error("truncation {0} exceeds the supported maximum of 255")]
    WmaxTooLarge(u32),
    #[error("{0} weight dimensions exceed the supported maximum of 7")]
    TooManyDimensions(usize),
    #[error("multiplexer has {mux} rows but the code has {code} outputs")]
    OutputMismatch { mux: usize, code: usize },
    #[error("search frontier exceeded {0} entries")]
    FrontierOverflow(usize),
    #[error("search did not terminate within {0} trellis steps (catastrophic code?)")]
    StepLimit(usize),
    #[error("path count overflow")]
    Overflow,
}

/// Guards for the breadth-first search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_frontier: usize,
    pub max_steps: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_frontier: 20_000_000,
            max_steps: 100_000,
        }
    }
}

/// Per-stream weight vector with exact multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpectrum {
    streams: usize,
    wmax: u32,
    phases: usize,
    entries: BTreeMap<Vec<u32>, BigRational>,
}

impl WeightSpectrum {
    pub fn new(streams: usize, wmax: u32, phases: usize) -> Self {
        Self {
            streams,
            wmax,
            phases,
            entries: BTreeMap::new(),
        }
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn wmax(&self) -> u32 {
        self.wmax
    }

    /// Number of divergence phases averaged over.
    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, w: &[u32]) -> Option<&BigRational> {
        self.entries.get(w)
    }

    /// Adds `beta` to the entry at `w`. Zero contributions are dropped.
    pub fn add(&mut self, w: Vec<u32>, beta: BigRational) {
        if beta.is_zero() {
            return;
        }
        debug_assert_eq!(w.len(), self.streams);
        *self.entries.entry(w).or_insert_with(BigRational::zero) += beta;
    }

    /// Entries sorted by total weight, then lexicographically.
    pub fn sorted_entries(&self) -> Vec<(&Vec<u32>, &BigRational)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| total(a.0).cmp(&total(b.0)).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Smallest total weight present.
    pub fn min_weight(&self) -> Option<u32> {
        self.entries.keys().map(|w| total(w)).min()
    }

    /// Sum of multiplicities over vectors of the given total weight.
    pub fn marginal(&self, weight: u32) -> BigRational {
        self.entries
            .iter()
            .filter(|(w, _)| total(w) == weight)
            .map(|(_, b)| b.clone())
            .sum()
    }

    /// Entries flattened to floating point for bound evaluation.
    pub fn to_f64(&self) -> Vec<(Vec<u32>, f64)> {
        self.sorted_entries()
            .into_iter()
            .map(|(w, b)| (w.clone(), b.to_f64().unwrap_or(f64::INFINITY)))
            .collect()
    }

    /// CSV dump: `w_1..w_q,beta_numerator,beta_denominator`, sorted by total
    /// weight then lexicographic `w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.streams).map(|k| format!("w_{k}")).collect();
        writeln!(out, "{},beta_numerator,beta_denominator", header.join(","))?;
        for (w, b) in self.sorted_entries() {
            let ws: Vec<String> = w.iter().map(u32::to_string).collect();
            writeln!(out, "{},{},{}", ws.join(","), b.numer(), b.denom())?;
        }
        Ok(())
    }
}

fn total(w: &[u32]) -> u32 {
    w.iter().sum()
}

#[derive(Debug, Clone, Copy, Default)]
struct PathAcc {
    paths: u128,
    input_weight: u128,
}

#[inline]
fn lane(packed: u64, dim: usize) -> u32 {
    ((packed >> (8 * dim)) & 0xff) as u32
}

fn unpack(packed: u64, dims: usize) -> Vec<u32> {
    (0..dims).map(|d| lane(packed, d)).collect()
}

/// Breadth-first enumeration of remerging paths for one starting phase.
/// `slot(p, c)` says which weight lane the coded bit of output `p` at period
/// column `c` counts towards (`None` drops it). Returns input-weight sums
/// per packed weight vector.
fn search_phase(
    trellis: &Trellis,
    period: usize,
    phase: usize,
    slot: &(dyn Fn(usize, usize) -> Option<usize> + Sync),
    wmax: u32,
    limits: SearchLimits,
) -> Result<HashMap<u64, u128>, SpectrumError> {
    let n = trellis.outputs();
    // increment for each branch output pattern at each column
    let patterns = 1usize << n;
    let incr: Vec<Vec<(u64, u32)>> = (0..period)
        .map(|c| {
            (0..patterns)
                .map(|bits| {
                    let mut add = 0u64;
                    let mut tot = 0u32;
                    for p in 0..n {
                        if (bits >> p) & 1 == 1 {
                            if let Some(d) = slot(p, c) {
                                add += 1u64 << (8 * d);
                                tot += 1;
                            }
                        }
                    }
                    (add, tot)
                })
                .collect()
        })
        .collect();
    let mut results: HashMap<u64, u128> = HashMap::new();
    let mut frontier: HashMap<(u32, u64), PathAcc> = HashMap::new();
    let mut totals: HashMap<(u32, u64), u32> = HashMap::new();
    let num_inputs = trellis.num_inputs();

    let mut extend = |state: usize,
                      w: u64,
                      tot: u32,
                      acc: PathAcc,
                      col: usize,
                      first: bool,
                      next: &mut HashMap<(u32, u64), PathAcc>,
                      next_tot: &mut HashMap<(u32, u64), u32>|
     -> Result<(), SpectrumError> {
        for u in (first as usize)..num_inputs {
            let bits = trellis.output(state, u) as usize;
            let (add, inc) = incr[col][bits];
            let nt = tot + inc;
            if nt > wmax {
                continue;
            }
            let nw = w + add;
            let uw = u.count_ones() as u128;
            let input_weight = acc
                .paths
                .checked_mul(uw)
                .and_then(|x| x.checked_add(acc.input_weight))
                .ok_or(SpectrumError::Overflow)?;
            let ns = trellis.next_state(state, u);
            if ns == 0 {
                let e = results.entry(nw).or_insert(0);
                *e = e.checked_add(input_weight).ok_or(SpectrumError::Overflow)?;
            } else {
                let e = next.entry((ns as u32, nw)).or_default();
                e.paths = e.paths.checked_add(acc.paths).ok_or(SpectrumError::Overflow)?;
                e.input_weight = e
                    .input_weight
                    .checked_add(input_weight)
                    .ok_or(SpectrumError::Overflow)?;
                next_tot.insert((ns as u32, nw), nt);
            }
        }
        Ok(())
    };

    extend(
        0,
        0,
        0,
        PathAcc {
            paths: 1,
            input_weight: 0,
        },
        phase % period,
        true,
        &mut frontier,
        &mut totals,
    )?;
    let mut step = 1usize;
    while !frontier.is_empty() {
        if step > limits.max_steps {
            return Err(SpectrumError::StepLimit(limits.max_steps));
        }
        if frontier.len() > limits.max_frontier {
            return Err(SpectrumError::FrontierOverflow(limits.max_frontier));
        }
        let col = (phase + step) % period;
        let mut next = HashMap::with_capacity(frontier.len());
        let mut next_tot = HashMap::with_capacity(frontier.len());
        for (&(state, w), &acc) in &frontier {
            let tot = totals[&(state, w)];
            extend(state as usize, w, tot, acc, col, false, &mut next, &mut next_tot)?;
        }
        frontier = next;
        totals = next_tot;
        step += 1;
    }
    Ok(results)
}

fn check_dims(dims: usize, wmax: u32) -> Result<(), SpectrumError> {
    if dims > MAX_DIMS {
        return Err(SpectrumError::TooManyDimensions(dims));
    }
    if wmax > MAX_WMAX {
        return Err(SpectrumError::WmaxTooLarge(wmax));
    }
    Ok(())
}

/// Runs every phase (concurrently) and returns the phase-summed input
/// weights per weight vector.
fn search_all_phases(
    trellis: &Trellis,
    period: usize,
    slot: &(dyn Fn(usize, usize) -> Option<usize> + Sync),
    wmax: u32,
    limits: SearchLimits,
) -> Result<HashMap<u64, BigInt>, SpectrumError> {
    let per_phase: Vec<HashMap<u64, u128>> = (0..period)
        .into_par_iter()
        .map(|phase| search_phase(trellis, period, phase, slot, wmax, limits))
        .collect::<Result<_, _>>()?;
    let mut sum: HashMap<u64, BigInt> = HashMap::new();
    for map in per_phase {
        for (w, x) in map {
            *sum.entry(w).or_insert_with(BigInt::zero) += BigInt::from(x);
        }
    }
    Ok(sum)
}

/// Spectrum of the code followed by a periodic D-MUX, truncated at total
/// weight `wmax`.
pub fn compute_ewds(
    trellis: &Trellis,
    pattern: &DMuxPattern,
    wmax: u32,
) -> Result<WeightSpectrum, SpectrumError> {
    compute_ewds_with_limits(trellis, pattern, wmax, SearchLimits::default())
}

pub fn compute_ewds_with_limits(
    trellis: &Trellis,
    pattern: &DMuxPattern,
    wmax: u32,
    limits: SearchLimits,
) -> Result<WeightSpectrum, SpectrumError> {
    let q = pattern.streams();
    check_dims(q, wmax)?;
    if pattern.outputs() != trellis.outputs() {
        return Err(SpectrumError::OutputMismatch {
            mux: pattern.outputs(),
            code: trellis.outputs(),
        });
    }
    if let Some(free) = trellis.free_distance(wmax.max(1) * 4) {
        if wmax < free {
            return Err(SpectrumError::BelowFreeDistance { wmax, free });
        }
    }
    let period = pattern.period();
    let slot = |p: usize, c: usize| Some(pattern.stream(p, c));
    let sums = search_all_phases(trellis, period, &slot, wmax, limits)?;
    let denom = BigInt::from(period);
    let mut spectrum = WeightSpectrum::new(q, wmax, period);
    for (w, x) in sums {
        spectrum.add(unpack(w, q), BigRational::new(x, denom.clone()));
    }
    if spectrum.is_empty() {
        return Err(SpectrumError::Empty(wmax));
    }
    Ok(spectrum)
}

/// A randomized multiplexer seen by the spectrum: each (output, period
/// column) cell either is punctured or sends its bit to a stream drawn
/// from one of a few probability rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedMux {
    streams: usize,
    cells: Vec<Vec<Option<usize>>>,
    rows: Vec<Vec<BigRational>>,
}

impl RandomizedMux {
    /// R-MUX: output `p` uses row `p` of the table, every step.
    pub fn from_probabilities(table: &StreamProbabilities) -> Self {
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        let cells = table
            .rows()
            .iter()
            .map(|r| {
                let idx = rows.iter().position(|x| x == r).unwrap_or_else(|| {
                    rows.push(r.clone());
                    rows.len() - 1
                });
                vec![Some(idx)]
            })
            .collect();
        Self {
            streams: table.streams(),
            cells,
            rows,
        }
    }

    /// Single interleaver over `n` outputs and `q` streams.
    pub fn uniform(n: usize, q: usize) -> Self {
        Self::from_probabilities(&StreamProbabilities::uniform(n, q))
    }

    /// Applies a puncturing pattern on top, extending the period to the
    /// least common multiple of both periods.
    pub fn punctured(&self, pattern: &PuncturePattern) -> Self {
        let a = self.cells[0].len();
        let b = pattern.period();
        let period = a / gcd(a, b) * b;
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(p, row)| {
                (0..period)
                    .map(|c| if pattern.keeps(p, c) { row[c % a] } else { None })
                    .collect()
            })
            .collect();
        Self {
            streams: self.streams,
            cells,
            rows: self.rows.clone(),
        }
    }

    pub fn period(&self) -> usize {
        self.cells[0].len()
    }

    pub fn outputs(&self) -> usize {
        self.cells.len()
    }

    pub fn streams(&self) -> usize {
        self.streams
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Multinomial split of `count` bits over streams with probabilities `row`:
/// every stream weight vector with its exact probability.
fn multinomial_splits(row: &[BigRational], count: u32) -> Vec<(Vec<u32>, BigRational)> {
    let q = row.len();
    let mut out = Vec::new();
    let mut current = vec![0u32; q];
    // factorials up to count
    let fact: Vec<BigInt> = (0..=count)
        .scan(BigInt::one(), |acc, i| {
            if i > 0 {
                *acc *= BigInt::from(i);
            }
            Some(acc.clone())
        })
        .collect();
    fn rec(
        k: usize,
        left: u32,
        row: &[BigRational],
        fact: &[BigInt],
        current: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, BigRational)>,
    ) {
        let q = row.len();
        if k == q - 1 {
            if left > 0 && row[k].is_zero() {
                return;
            }
            current[k] = left;
            let count: u32 = current.iter().sum();
            let mut prob = BigRational::from_integer(fact[count as usize].clone());
            for (j, &c) in current.iter().enumerate() {
                prob /= BigRational::from_integer(fact[c as usize].clone());
                if c > 0 {
                    prob *= num_traits::pow(row[j].clone(), c as usize);
                }
            }
            out.push((current.clone(), prob));
            return;
        }
        let top = if row[k].is_zero() { 0 } else { left };
        for c in 0..=top {
            current[k] = c;
            rec(k + 1, left - c, row, fact, current, out);
        }
        current[k] = 0;
    }
    rec(0, count, row, &fact, &mut current, &mut out);
    out
}

/// Expected spectrum of a randomized multiplexer: every path contributes
/// its input weight times the multinomial probability of each way its
/// coded bits can land on the streams.
pub fn expected_ewds(
    trellis: &Trellis,
    mux: &RandomizedMux,
    wmax: u32,
) -> Result<WeightSpectrum, SpectrumError> {
    expected_ewds_with_limits(trellis, mux, wmax, SearchLimits::default())
}

pub fn expected_ewds_with_limits(
    trellis: &Trellis,
    mux: &RandomizedMux,
    wmax: u32,
    limits: SearchLimits,
) -> Result<WeightSpectrum, SpectrumError> {
    let q = mux.streams();
    let groups = mux.rows.len();
    check_dims(q, wmax)?;
    check_dims(groups, wmax)?;
    if mux.outputs() != trellis.outputs() {
        return Err(SpectrumError::OutputMismatch {
            mux: mux.outputs(),
            code: trellis.outputs(),
        });
    }
    let period = mux.period();
    let slot = |p: usize, c: usize| mux.cells[p][c];
    let sums = search_all_phases(trellis, period, &slot, wmax, limits)?;
    let denom = BigRational::from_integer(BigInt::from(period));
    let mut cache: HashMap<(usize, u32), Vec<(Vec<u32>, BigRational)>> = HashMap::new();
    let mut spectrum = WeightSpectrum::new(q, wmax, period);
    let mut keys: Vec<_> = sums.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let beta = BigRational::from_integer(sums[&key].clone()) / denom.clone();
        let v = unpack(key, groups);
        // convolve the per-group splits
        let mut acc: Vec<(Vec<u32>, BigRational)> = vec![(vec![0; q], BigRational::one())];
        for (g, &count) in v.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let splits = cache
                .entry((g, count))
                .or_insert_with(|| multinomial_splits(&mux.rows[g], count));
            let mut merged: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
            for (w, pw) in &acc {
                for (s, ps) in splits.iter() {
                    let nw: Vec<u32> = w.iter().zip(s).map(|(a, b)| a + b).collect();
                    *merged.entry(nw).or_insert_with(BigRational::zero) += pw * ps;
                }
            }
            acc = merged.into_iter().collect();
        }
        for (w, p) in acc {
            spectrum.add(w, p * beta.clone());
        }
    }
    if spectrum.is_empty() {
        return Err(SpectrumError::Empty(wmax));
    }
    Ok(spectrum)
}
