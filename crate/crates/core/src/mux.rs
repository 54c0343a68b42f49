//! Bit-level multiplexing between encoder outputs and modulator bit levels.
//!
//! A periodic D-MUX is an `n x J` matrix whose cell `(p, c)` names the
//! stream (bit level) receiving coded bit `c_{p, c + tau J}`, together with
//! the slot it takes inside the stream's period of `nJ/q` bits. Streams are
//! 1-based in the text format and 0-based in memory.
//!
//! The randomized baselines (R-MUX with a probability table, and the single
//! interleaver, which is the R-MUX with uniform probabilities) are realized
//! as exact-load random assignments, so every multiplexer ends up as a
//! [`Multiplexer`]: a bijection from coded-bit positions to stream slots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MuxError {
    #[error("n*J = {cells} is not divisible by q = {streams}")]
    Indivisible { cells: usize, streams: usize },
    #[error("block length {len} is not a multiple of the period {period}")]
    BlockLength { len: usize, period: usize },
    #[error("stream {stream} appears {got} times per period, expected {expected}")]
    Unbalanced {
        stream: usize,
        got: usize,
        expected: usize,
    },
    #[error("stream index {0} out of range")]
    StreamRange(usize),
    #[error("time slots of stream {0} are not a permutation of 1..=nJ/q")]
    TimeSlots(usize),
    #[error("invalid pattern text '{0}'")]
    Parse(String),
    #[error("expected {expected} rows, got {got}")]
    Rows { expected: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("probability row {0} does not sum to one")]
    RowSum(usize),
    #[error("probability table cannot give every stream exactly {0} bits")]
    Infeasible(usize),
}

/// A periodic deterministic multiplexer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DMuxPattern {
    streams: usize,
    /// `assign[p][c]`, 0-based stream.
    assign: Vec<Vec<u8>>,
    /// `slot[p][c]`, 0-based position inside the stream's period.
    slot: Vec<Vec<usize>>,
}

impl DMuxPattern {
    /// Pattern with time slots filled in column-major scan order.
    pub fn new(assign: Vec<Vec<u8>>, streams: usize) -> Result<Self, MuxError> {
        let slot = column_major_slots(&assign, streams);
        Self::with_slots(assign, slot, streams)
    }

    /// Pattern with explicit time slots (0-based).
    pub fn with_slots(
        assign: Vec<Vec<u8>>,
        slot: Vec<Vec<usize>>,
        streams: usize,
    ) -> Result<Self, MuxError> {
        if assign.is_empty() || assign[0].is_empty() || streams == 0 {
            return Err(MuxError::Parse("empty pattern".into()));
        }
        let period = assign[0].len();
        if assign.iter().any(|r| r.len() != period)
            || slot.len() != assign.len()
            || slot.iter().any(|r| r.len() != period)
        {
            return Err(MuxError::Parse("ragged pattern".into()));
        }
        let cells = assign.len() * period;
        if !cells.is_multiple_of(streams) {
            return Err(MuxError::Indivisible { cells, streams });
        }
        let per_stream = cells / streams;
        let mut counts = vec![0usize; streams];
        for &k in assign.iter().flatten() {
            let k = k as usize;
            if k >= streams {
                return Err(MuxError::StreamRange(k + 1));
            }
            counts[k] += 1;
        }
        if let Some((k, &got)) = counts.iter().enumerate().find(|(_, &c)| c != per_stream) {
            return Err(MuxError::Unbalanced {
                stream: k + 1,
                got,
                expected: per_stream,
            });
        }
        let mut seen = vec![vec![false; per_stream]; streams];
        for (arow, srow) in assign.iter().zip(&slot) {
            for (&k, &t) in arow.iter().zip(srow) {
                let k = k as usize;
                if t >= per_stream || seen[k][t] {
                    return Err(MuxError::TimeSlots(k + 1));
                }
                seen[k][t] = true;
            }
        }
        Ok(Self {
            streams,
            assign,
            slot,
        })
    }

    /// `n = q`, `J = 1`, output `p` to stream `p`.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|p| vec![p as u8]).collect(), n).expect("balanced")
    }

    /// Parses rows separated by `/`, cells by `,`. A cell is a 1-based stream
    /// index, optionally with a 1-based slot: `"2,2/1,1"` or
    /// `"1:1,2:2,2:1/1:2,3:2,3:1"`. Without `streams`, `q` is the largest
    /// index used.
    pub fn parse(text: &str, streams: Option<usize>) -> Result<Self, MuxError> {
        let err = || MuxError::Parse(text.to_string());
        let mut assign = Vec::new();
        let mut slot = Vec::new();
        let mut explicit = None;
        for row in text.trim().split('/') {
            let mut arow = Vec::new();
            let mut srow = Vec::new();
            for cell in row.split(',') {
                let cell = cell.trim();
                let (k, t) = match cell.split_once(':') {
                    Some((k, t)) => (k, Some(t)),
                    None => (cell, None),
                };
                if *explicit.get_or_insert(t.is_some()) != t.is_some() {
                    return Err(err());
                }
                let k: usize = k.parse().map_err(|_| err())?;
                if k == 0 || k > u8::MAX as usize {
                    return Err(err());
                }
                arow.push((k - 1) as u8);
                if let Some(t) = t {
                    let t: usize = t.parse().map_err(|_| err())?;
                    if t == 0 {
                        return Err(err());
                    }
                    srow.push(t - 1);
                }
            }
            assign.push(arow);
            slot.push(srow);
        }
        let streams = streams.unwrap_or_else(|| {
            assign.iter().flatten().map(|&k| k as usize + 1).max().unwrap_or(1)
        });
        if explicit == Some(true) {
            Self::with_slots(assign, slot, streams)
        } else {
            Self::new(assign, streams)
        }
    }

    /// Encoder outputs `n`.
    pub fn outputs(&self) -> usize {
        self.assign.len()
    }

    /// Period `J`.
    pub fn period(&self) -> usize {
        self.assign[0].len()
    }

    /// Streams `q`.
    pub fn streams(&self) -> usize {
        self.streams
    }

    /// Bits each stream receives per period, `nJ/q`.
    pub fn per_stream(&self) -> usize {
        self.outputs() * self.period() / self.streams
    }

    #[inline]
    pub fn stream(&self, output: usize, column: usize) -> usize {
        self.assign[output][column % self.period()] as usize
    }

    pub fn assignment(&self) -> &[Vec<u8>] {
        &self.assign
    }

    /// Pattern with columns cyclically shifted left by `shift`.
    pub fn rotated(&self, shift: usize) -> Self {
        let j = self.period();
        let rot = |m: &Vec<Vec<u8>>| -> Vec<Vec<u8>> {
            m.iter()
                .map(|r| (0..j).map(|c| r[(c + shift) % j]).collect())
                .collect()
        };
        Self::new(rot(&self.assign), self.streams).expect("rotation keeps balance")
    }

    /// Smallest row-major flattening over all column rotations. Two patterns
    /// are equivalent iff their keys match.
    pub fn class_key(&self) -> Vec<u8> {
        (0..self.period())
            .map(|r| flatten(&self.rotated(r).assign))
            .min()
            .expect("period >= 1")
    }

    /// Stream assignment in text form, without slots.
    pub fn text(&self) -> String {
        self.assign
            .iter()
            .map(|r| {
                r.iter()
                    .map(|k| (k + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("/")
    }

    /// First-period matrix as 1-based `(k, t)` pairs.
    pub fn first_period(&self) -> Vec<Vec<(usize, usize)>> {
        self.assign
            .iter()
            .zip(&self.slot)
            .map(|(a, s)| {
                a.iter()
                    .zip(s)
                    .map(|(&k, &t)| (k as usize + 1, t + 1))
                    .collect()
            })
            .collect()
    }

    /// Expands the pattern to a block of `len` trellis steps.
    pub fn expand(&self, len: usize) -> Result<Multiplexer, MuxError> {
        let period = self.period();
        if !len.is_multiple_of(period) {
            return Err(MuxError::BlockLength { len, period });
        }
        let n = self.outputs();
        let per = self.per_stream();
        let stream_len = n * len / self.streams;
        let mut target = vec![0u32; n * len];
        for p in 0..n {
            for t in 0..len {
                let c = t % period;
                let tau = t / period;
                let k = self.assign[p][c] as usize;
                let time = self.slot[p][c] + tau * per;
                target[p * len + t] = (k * stream_len + time) as u32;
            }
        }
        Ok(Multiplexer {
            outputs: n,
            streams: self.streams,
            len,
            target,
        })
    }
}

impl fmt::Display for DMuxPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

fn flatten(m: &[Vec<u8>]) -> Vec<u8> {
    m.iter().flatten().copied().collect()
}

fn column_major_slots(assign: &[Vec<u8>], streams: usize) -> Vec<Vec<usize>> {
    let mut next = vec![0usize; streams.max(1)];
    let mut slot = vec![vec![0usize; assign.first().map_or(0, Vec::len)]; assign.len()];
    for c in 0..assign.first().map_or(0, Vec::len) {
        for p in 0..assign.len() {
            let k = assign[p][c] as usize;
            if k < next.len() {
                slot[p][c] = next[k];
                next[k] += 1;
            }
        }
    }
    slot
}

/// One representative per class of balanced `n x J` assignments, two
/// assignments being equivalent when one is a cyclic column rotation of the
/// other. Representatives are the minimal rotations, listed in increasing
/// row-major order; the index in this list is the pattern id.
pub fn enumerate_canonical(
    n: usize,
    period: usize,
    streams: usize,
) -> Result<Vec<DMuxPattern>, MuxError> {
    let cells = n * period;
    if streams == 0 || !cells.is_multiple_of(streams) {
        return Err(MuxError::Indivisible { cells, streams });
    }
    let per = cells / streams;
    let mut out = Vec::new();
    let mut remaining = vec![per; streams];
    let mut current = Vec::with_capacity(cells);
    visit_balanced(&mut current, &mut remaining, cells, &mut |flat| {
        let assign: Vec<Vec<u8>> = flat.chunks(period).map(|c| c.to_vec()).collect();
        let pat = DMuxPattern::new(assign, streams).expect("balanced by construction");
        if pat.class_key() == flat {
            out.push(pat);
        }
    });
    Ok(out)
}

fn visit_balanced(
    current: &mut Vec<u8>,
    remaining: &mut [usize],
    cells: usize,
    f: &mut impl FnMut(&[u8]),
) {
    if current.len() == cells {
        f(current);
        return;
    }
    for k in 0..remaining.len() {
        if remaining[k] > 0 {
            remaining[k] -= 1;
            current.push(k as u8);
            visit_balanced(current, remaining, cells, f);
            current.pop();
            remaining[k] += 1;
        }
    }
}

/// A bijection between an `n x N_c` coded block and a `q x N_s` stream block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multiplexer {
    outputs: usize,
    streams: usize,
    len: usize,
    /// Flat stream position `k * N_s + t` of coded bit `p * N_c + t'`.
    target: Vec<u32>,
}

impl Multiplexer {
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    /// Trellis steps `N_c`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bits per stream `N_s`.
    pub fn stream_len(&self) -> usize {
        self.outputs * self.len / self.streams
    }

    /// Stream and slot of coded bit `(output, time)`.
    pub fn target(&self, output: usize, time: usize) -> (usize, usize) {
        let flat = self.target[output * self.len + time] as usize;
        (flat / self.stream_len(), flat % self.stream_len())
    }

    fn check(&self, rows: usize, expected_rows: usize, len: usize, expected_len: usize) -> Result<(), MuxError> {
        if rows != expected_rows {
            return Err(MuxError::Rows {
                expected: expected_rows,
                got: rows,
            });
        }
        if len != expected_len {
            return Err(MuxError::Length {
                expected: expected_len,
                got: len,
            });
        }
        Ok(())
    }

    /// Routes coded bits (or anything per coded bit) into streams.
    pub fn apply<T: Copy + Default>(&self, coded: &[Vec<T>]) -> Result<Vec<Vec<T>>, MuxError> {
        self.check(
            coded.len(),
            self.outputs,
            coded.first().map_or(0, Vec::len),
            self.len,
        )?;
        let ns = self.stream_len();
        let mut flat = vec![T::default(); self.streams * ns];
        for (p, row) in coded.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                flat[self.target[p * self.len + t] as usize] = v;
            }
        }
        Ok(flat.chunks(ns).map(|c| c.to_vec()).collect())
    }

    /// Inverse of [`Multiplexer::apply`].
    pub fn invert<T: Copy + Default>(&self, streams: &[Vec<T>]) -> Result<Vec<Vec<T>>, MuxError> {
        let ns = self.stream_len();
        self.check(
            streams.len(),
            self.streams,
            streams.first().map_or(0, Vec::len),
            ns,
        )?;
        let mut out = vec![vec![T::default(); self.len]; self.outputs];
        for (p, row) in out.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                let flat = self.target[p * self.len + t] as usize;
                *v = streams[flat / ns][flat % ns];
            }
        }
        Ok(out)
    }
}

/// Probability that a bit of encoder output `p` is sent to stream `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamProbabilities {
    rows: Vec<Vec<BigRational>>,
}

impl StreamProbabilities {
    pub fn new(rows: Vec<Vec<BigRational>>) -> Result<Self, MuxError> {
        let q = rows.first().map_or(0, Vec::len);
        if q == 0 || rows.iter().any(|r| r.len() != q) {
            return Err(MuxError::Parse("ragged probability table".into()));
        }
        for (p, r) in rows.iter().enumerate() {
            if r.iter().any(|x| *x < BigRational::zero())
                || r.iter().cloned().sum::<BigRational>() != BigRational::one()
            {
                return Err(MuxError::RowSum(p + 1));
            }
        }
        Ok(Self { rows })
    }

    /// Uniform `1/q` for every output: the single-interleaver baseline.
    pub fn uniform(n: usize, q: usize) -> Self {
        let p = BigRational::new(BigInt::one(), BigInt::from(q));
        Self {
            rows: vec![vec![p; q]; n],
        }
    }

    /// Each output `p` goes entirely to `streams[p]` (0-based).
    pub fn deterministic(streams: &[usize], q: usize) -> Self {
        let rows = streams
            .iter()
            .map(|&k| {
                (0..q)
                    .map(|j| if j == k { BigRational::one() } else { BigRational::zero() })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    /// Parses rows separated by `/`, entries by `,`, each a rational such as
    /// `2/3` written `2:3`, or a plain integer: `"0,1:3,2:3/2:3,1:3,0"`.
    pub fn parse(text: &str) -> Result<Self, MuxError> {
        let err = || MuxError::Parse(text.to_string());
        let rows = text
            .trim()
            .split('/')
            .map(|row| {
                row.split(',')
                    .map(|e| {
                        let e = e.trim();
                        let (num, den) = e.split_once(':').unwrap_or((e, "1"));
                        let num: i64 = num.trim().parse().map_err(|_| err())?;
                        let den: i64 = den.trim().parse().map_err(|_| err())?;
                        if den <= 0 {
                            return Err(err());
                        }
                        Ok(BigRational::new(num.into(), den.into()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows)
    }

    pub fn outputs(&self) -> usize {
        self.rows.len()
    }

    pub fn streams(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn get_f64(&self, output: usize, stream: usize) -> f64 {
        self.rows[output][stream].to_f64().unwrap_or(0.0)
    }

    /// Exact per-(output, stream) bit counts for a block of `len` steps:
    /// rounded expectations whose row sums are `len` and whose column sums
    /// are `n len / q`.
    pub fn exact_counts(&self, len: usize) -> Result<Vec<Vec<usize>>, MuxError> {
        let n = self.outputs();
        let q = self.streams();
        if !(n * len).is_multiple_of(q) {
            return Err(MuxError::Indivisible {
                cells: n * len,
                streams: q,
            });
        }
        let ns = n * len / q;
        let expected: Vec<Vec<f64>> = (0..n)
            .map(|p| (0..q).map(|k| self.get_f64(p, k) * len as f64).collect())
            .collect();
        for k in 0..q {
            let load: f64 = (0..n).map(|p| expected[p][k]).sum();
            if (load - ns as f64).abs() > n as f64 {
                return Err(MuxError::Infeasible(ns));
            }
        }
        let mut counts: Vec<Vec<usize>> = expected
            .iter()
            .map(|r| r.iter().map(|e| e.floor() as usize).collect())
            .collect();
        let mut row_left: Vec<usize> = counts.iter().map(|r| len - r.iter().sum::<usize>()).collect();
        let mut col_left: Vec<usize> = (0..q)
            .map(|k| ns.saturating_sub((0..n).map(|p| counts[p][k]).sum()))
            .collect();
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for p in 0..n {
                for k in 0..q {
                    if row_left[p] > 0 && col_left[k] > 0 && self.get_f64(p, k) > 0.0 {
                        let frac = expected[p][k] - counts[p][k] as f64;
                        if best.is_none_or(|b| frac > b.0) {
                            best = Some((frac, p, k));
                        }
                    }
                }
            }
            match best {
                Some((_, p, k)) => {
                    counts[p][k] += 1;
                    row_left[p] -= 1;
                    col_left[k] -= 1;
                }
                None => break,
            }
        }
        if row_left.iter().any(|&r| r > 0) || col_left.iter().any(|&c| c > 0) {
            return Err(MuxError::Infeasible(ns));
        }
        Ok(counts)
    }

    /// Random exact-load assignment for a block of `len` steps. Each output
    /// row receives its exact per-stream counts in random positions; slots
    /// inside each stream follow column-major scan order.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<Multiplexer, MuxError> {
        let counts = self.exact_counts(len)?;
        let n = self.outputs();
        let q = self.streams();
        let mut stream_of = vec![vec![0u8; len]; n];
        for (p, row) in stream_of.iter_mut().enumerate() {
            let mut labels: Vec<u8> = counts[p]
                .iter()
                .enumerate()
                .flat_map(|(k, &c)| std::iter::repeat_n(k as u8, c))
                .collect();
            labels.shuffle(rng);
            *row = labels;
        }
        let ns = n * len / q;
        let mut next = vec![0usize; q];
        let mut target = vec![0u32; n * len];
        for t in 0..len {
            for p in 0..n {
                let k = stream_of[p][t] as usize;
                target[p * len + t] = (k * ns + next[k]) as u32;
                next[k] += 1;
            }
        }
        Ok(Multiplexer {
            outputs: n,
            streams: q,
            len,
            target,
        })
    }
}

/// Randomized multiplexing baselines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomMux {
    /// Per-output stream probabilities.
    RMux(StreamProbabilities),
    /// Single interleaver over all coded bits: uniform probabilities.
    SInterleaver,
}

impl RandomMux {
    pub fn probabilities(&self, n: usize, q: usize) -> StreamProbabilities {
        match self {
            RandomMux::RMux(p) => p.clone(),
            RandomMux::SInterleaver => StreamProbabilities::uniform(n, q),
        }
    }
}

/// Per-bit stream assignment for a randomized baseline, reproducible from
/// `seed`.
pub fn random_mux_baseline(
    kind: &RandomMux,
    n: usize,
    q: usize,
    len: usize,
    seed: u64,
) -> Result<Multiplexer, MuxError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kind.probabilities(n, q).sample(len, &mut rng)
}

/// A seeded uniform random permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
    seed: u64,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<u32> = (0..len as u32).collect();
        perm.shuffle(&mut rng);
        Self { perm, seed }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Output position `i` takes input position `perm[i]`.
    pub fn permutation(&self) -> &[u32] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>, MuxError> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&i| input[i as usize]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>, MuxError> {
        self.check(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (&i, &v) in self.perm.iter().zip(input) {
            out[i as usize] = v;
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<(), MuxError> {
        if len != self.perm.len() {
            return Err(MuxError::Length {
                expected: self.perm.len(),
                got: len,
            });
        }
        Ok(())
    }
}

/// JSON view of a pattern, with the first-period `(k, t)` matrix.
#[derive(Debug, Clone, Serialize)]
pub struct PatternDump {
    pub id: Option<usize>,
    pub mux: String,
    pub n: usize,
    #[serde(rename = "J")]
    pub period: usize,
    pub q: usize,
    pub k0: Vec<Vec<(usize, usize)>>,
}

impl PatternDump {
    pub fn new(pattern: &DMuxPattern, id: Option<usize>) -> Self {
        Self {
            id,
            mux: pattern.text(),
            n: pattern.outputs(),
            period: pattern.period(),
            q: pattern.streams(),
            k0: pattern.first_period(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_one() -> DMuxPattern {
        DMuxPattern::parse("1:1,2:2,2:1/1:2,3:2,3:1", None).unwrap()
    }

    #[test]
    fn example_one_mapping() {
        let pat = example_one();
        assert_eq!(pat.per_stream(), 2);
        let m = pat.expand(6).unwrap();
        // c_{p,t} encoded as 10 p + t, 1-based
        let c: Vec<Vec<u32>> = (1..=2)
            .map(|p| (1..=6).map(|t| 10 * p + t).collect())
            .collect();
        let o = m.apply(&c).unwrap();
        assert_eq!(o[0], vec![11, 21, 14, 24]);
        assert_eq!(o[1], vec![13, 12, 16, 15]);
        assert_eq!(o[2], vec![23, 22, 26, 25]);
        assert_eq!(m.invert(&o).unwrap(), c);
    }

    #[test]
    fn identity_pattern() {
        let m = DMuxPattern::identity(3).expand(5).unwrap();
        let c = vec![vec![1u8, 0, 1, 1, 0], vec![0, 0, 1, 0, 1], vec![1, 1, 1, 0, 0]];
        assert_eq!(m.apply(&c).unwrap(), c);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            DMuxPattern::parse("1,1/1,2", Some(2)),
            Err(MuxError::Unbalanced { .. })
        ));
        assert!(matches!(
            DMuxPattern::parse("1,2,2/1,3,3", Some(4)),
            Err(MuxError::Indivisible { .. })
        ));
        assert!(DMuxPattern::parse("1,x", None).is_err());
        assert!(DMuxPattern::parse("1:1,2/2,1", None).is_err());
        assert!(matches!(
            DMuxPattern::parse("1:1,1:1/2:1,2:2", None),
            Err(MuxError::TimeSlots(1))
        ));
        assert!(matches!(
            DMuxPattern::parse("2,2/1,1", None).unwrap().expand(3),
            Err(MuxError::BlockLength { .. })
        ));
    }

    #[test]
    fn canonical_counts() {
        let k222 = enumerate_canonical(2, 2, 2).unwrap();
        let texts: Vec<_> = k222.iter().map(|p| p.text()).collect();
        assert_eq!(texts, ["1,1/2,2", "1,2/1,2", "1,2/2,1", "2,2/1,1"]);
        assert_eq!(enumerate_canonical(2, 3, 3).unwrap().len(), 30);
        assert_eq!(enumerate_canonical(1, 1, 1).unwrap().len(), 1);
        assert!(enumerate_canonical(2, 2, 3).is_err());
    }

    #[test]
    fn rotations_share_class() {
        for pat in enumerate_canonical(2, 3, 3).unwrap() {
            for r in 0..3 {
                assert_eq!(pat.rotated(r).class_key(), pat.class_key());
            }
        }
        // paper's K^(3) is a rotation of the canonical [[1,2],[2,1]]
        let k3 = DMuxPattern::parse("2,1/1,2", None).unwrap();
        assert_eq!(k3.class_key(), vec![0, 1, 1, 0]);
    }

    #[test]
    fn interleaver_roundtrip_and_seeds() {
        let x: Vec<u16> = (0..100).collect();
        let a = Interleaver::new(100, 1);
        let b = Interleaver::new(100, 2);
        let ya = a.interleave(&x).unwrap();
        assert_ne!(ya, b.interleave(&x).unwrap());
        assert_ne!(ya, x);
        assert_eq!(a.deinterleave(&ya).unwrap(), x);
        assert_eq!(Interleaver::new(100, 1), a);
        assert!(a.interleave(&x[..10]).is_err());
    }

    #[test]
    fn interleaver_position_uniformity() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let len = 16;
        let seeds = 10_000;
        let mut hist = vec![0usize; len];
        for seed in 0..seeds {
            let perm = Interleaver::new(len, seed as u64);
            let pos = perm.permutation().iter().position(|&i| i == 0).unwrap();
            hist[pos] += 1;
        }
        let expected = seeds as f64 / len as f64;
        let chi2: f64 = hist
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        let crit = ChiSquared::new((len - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < crit, "chi2 = {chi2}, critical = {crit}");
    }

    #[test]
    fn s_interleaver_exact_loads() {
        let m = random_mux_baseline(&RandomMux::SInterleaver, 2, 2, 1000, 3).unwrap();
        let mut per_output = [[0usize; 2]; 2];
        for p in 0..2 {
            for t in 0..1000 {
                per_output[p][m.target(p, t).0] += 1;
            }
        }
        assert_eq!(per_output[0][0] + per_output[1][0], 1000);
        assert_eq!(per_output[0][1] + per_output[1][1], 1000);
        assert_eq!(per_output[0][0], 500);
    }

    #[test]
    fn rmux_footnote_table() {
        let probs = StreamProbabilities::parse("0,1:3,2:3/2:3,1:3,0").unwrap();
        let counts = probs.exact_counts(24000).unwrap();
        assert_eq!(counts, vec![vec![0, 8000, 16000], vec![16000, 8000, 0]]);
        let counts = probs.exact_counts(3001 * 3).unwrap();
        let ns = 2 * 3001 * 3 / 3;
        for k in 0..3 {
            assert_eq!(counts[0][k] + counts[1][k], ns);
        }
        let m = probs.sample(300, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for t in 0..300 {
            assert_ne!(m.target(0, t).0, 0);
            assert_ne!(m.target(1, t).0, 2);
        }
        assert!(StreamProbabilities::parse("1:2,1:3/1,0").is_err());
        let bad = StreamProbabilities::parse("1,0,0/1,0,0").unwrap();
        assert!(matches!(bad.exact_counts(30), Err(MuxError::Infeasible(_))));
    }

    #[test]
    fn deterministic_table_is_a_fixed_split() {
        let probs = StreamProbabilities::deterministic(&[1, 0], 2);
        let m = probs.sample(10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for t in 0..10 {
            assert_eq!(m.target(0, t), (1, t));
            assert_eq!(m.target(1, t), (0, t));
        }
    }

    proptest! {
        #[test]
        fn mux_and_interleave_roundtrip(
            case in 0usize..3,
            blocks in 1usize..6,
            seed in any::<u64>(),
        ) {
            let (n, j, q) = [(2, 2, 2), (2, 3, 3), (1, 2, 2)][case];
            let pats = enumerate_canonical(n, j, q).unwrap();
            let pat = &pats[(seed as usize) % pats.len()];
            let len = j * blocks;
            let c: Vec<Vec<u32>> = (0..n).map(|p| (0..len).map(|t| (p * 1000 + t) as u32).collect()).collect();
            let m = pat.expand(len).unwrap();
            let o = m.apply(&c).unwrap();
            let ils: Vec<_> = (0..q).map(|k| Interleaver::new(o[k].len(), seed ^ k as u64)).collect();
            let u: Vec<Vec<u32>> = o.iter().zip(&ils).map(|(r, il)| il.interleave(r).unwrap()).collect();
            let back: Vec<Vec<u32>> = u.iter().zip(&ils).map(|(r, il)| il.deinterleave(r).unwrap()).collect();
            prop_assert_eq!(&back, &o);
            prop_assert_eq!(m.invert(&back).unwrap(), c);
        }
    }
}
