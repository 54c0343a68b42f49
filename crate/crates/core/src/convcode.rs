//! Feedforward convolutional codes: encoding, trellis, soft-input Viterbi
//! decoding and puncturing.
//!
//! Generators are given in octal with the most significant tap (bit `K-1`)
//! applied to the current input bit, so `(5,7)_8` is the usual 4-state code.
//! L-values follow `log P(b=0)/P(b=1)` everywhere: positive favours 0.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("invalid generator specification '{0}'")]
    Parse(String),
    #[error("generator matrix must be non-empty and rectangular")]
    Shape,
    #[error("expected {expected} rows, got {got}")]
    RowCount { expected: usize, got: usize },
    #[error("rows have unequal lengths")]
    Ragged,
    #[error("sequence length {len} is not a multiple of the puncturing period {period}")]
    PeriodMismatch { len: usize, period: usize },
    #[error("puncturing pattern must keep at least one bit per period")]
    EmptyPattern,
    #[error("puncturing pattern has {got} rows but the code has {expected} outputs")]
    PatternRows { expected: usize, got: usize },
    #[error("expected {expected} surviving values, got {got}")]
    SurvivorCount { expected: usize, got: usize },
}

/// A feedforward convolutional encoder with `k_c` inputs and `n` outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    inputs: usize,
    outputs: usize,
    constraint_length: usize,
    /// `generators[l][p]`: taps from input `l` into output `p`.
    generators: Vec<Vec<u64>>,
}

impl ConvCode {
    /// Builds a code from a `k_c x n` matrix of tap masks. The constraint
    /// length is the bit length of the widest generator.
    pub fn new(generators: Vec<Vec<u64>>) -> Result<Self, CodeError> {
        if generators.is_empty() || generators[0].is_empty() {
            return Err(CodeError::Shape);
        }
        let outputs = generators[0].len();
        if generators.iter().any(|row| row.len() != outputs) {
            return Err(CodeError::Shape);
        }
        let constraint_length = generators
            .iter()
            .flatten()
            .map(|g| 64 - g.leading_zeros() as usize)
            .max()
            .unwrap_or(0)
            .max(1);
        if constraint_length > 16 {
            return Err(CodeError::Parse("constraint length above 16".into()));
        }
        Ok(Self {
            inputs: generators.len(),
            outputs,
            constraint_length,
            generators,
        })
    }

    /// Parses octal generators: outputs separated by `,`, inputs by `;`,
    /// e.g. `"5,7"` or `"23,35,0;5,13,33"`.
    pub fn from_octal(spec: &str) -> Result<Self, CodeError> {
        let generators = spec
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|g| {
                        u64::from_str_radix(g.trim(), 8)
                            .map_err(|_| CodeError::Parse(spec.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(generators)
    }

    /// The rate-1/2, 4-state `(5,7)_8` code.
    pub fn k3_5_7() -> Self {
        Self::new(vec![vec![0o5, 0o7]]).expect("valid generators")
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn generators(&self) -> &[Vec<u64>] {
        &self.generators
    }

    pub fn rate(&self) -> f64 {
        self.inputs as f64 / self.outputs as f64
    }

    /// Octal rendering, inverse of [`ConvCode::from_octal`].
    pub fn octal(&self) -> String {
        self.generators
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| format!("{g:o}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn trellis(&self) -> Trellis {
        Trellis::new(self)
    }

    /// Encodes `k_c` rows of info bits starting from the zero state. No tail
    /// is appended.
    pub fn encode(&self, info: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, CodeError> {
        if info.len() != self.inputs {
            return Err(CodeError::RowCount {
                expected: self.inputs,
                got: info.len(),
            });
        }
        let len = info[0].len();
        if info.iter().any(|row| row.len() != len) {
            return Err(CodeError::Ragged);
        }
        let trellis = self.trellis();
        let mut out = vec![vec![0u8; len]; self.outputs];
        let mut state = 0usize;
        for t in 0..len {
            let input = info
                .iter()
                .enumerate()
                .fold(0usize, |acc, (l, row)| acc | (((row[t] & 1) as usize) << l));
            let bits = trellis.output(state, input);
            for (p, row) in out.iter_mut().enumerate() {
                row[t] = ((bits >> p) & 1) as u8;
            }
            state = trellis.next_state(state, input);
        }
        Ok(out)
    }

    /// Minimum output weight over paths that leave and re-enter the zero
    /// state, or `None` if it exceeds `cap`.
    pub fn free_distance(&self, cap: u32) -> Option<u32> {
        self.trellis().free_distance(cap)
    }
}

/// State-transition tables of a code.
///
/// State layout: for input `l` the bits `l(K-1)..(l+1)(K-1)` hold the last
/// `K-1` inputs on that line, most recent in the highest position.
#[derive(Debug, Clone)]
pub struct Trellis {
    inputs: usize,
    outputs: usize,
    memory: usize,
    num_states: usize,
    next: Vec<u32>,
    out: Vec<u32>,
    // predecessors of each state as (prev state, input), sorted by prev state
    preds: Vec<Vec<(u32, u32)>>,
}

impl Trellis {
    pub fn new(code: &ConvCode) -> Self {
        let memory = code.constraint_length - 1;
        let num_states = 1usize << (code.inputs * memory);
        let num_inputs = 1usize << code.inputs;
        let mut next = vec![0u32; num_states * num_inputs];
        let mut out = vec![0u32; num_states * num_inputs];
        let reg_mask = (1usize << memory) - 1;
        for s in 0..num_states {
            for u in 0..num_inputs {
                let mut ns = 0usize;
                let mut bits = 0u32;
                for l in 0..code.inputs {
                    let sl = (s >> (l * memory)) & reg_mask;
                    let reg = (((u >> l) & 1) << memory) | sl;
                    for (p, g) in code.generators[l].iter().enumerate() {
                        let parity = (*g as usize & reg).count_ones() & 1;
                        bits ^= parity << p;
                    }
                    ns |= (reg >> 1) << (l * memory);
                }
                next[s * num_inputs + u] = ns as u32;
                out[s * num_inputs + u] = bits;
            }
        }
        let mut preds = vec![Vec::new(); num_states];
        for s in 0..num_states {
            for u in 0..num_inputs {
                preds[next[s * num_inputs + u] as usize].push((s as u32, u as u32));
            }
        }
        Self {
            inputs: code.inputs,
            outputs: code.outputs,
            memory,
            num_states,
            next,
            out,
            preds,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Input bits per trellis step.
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Output bits per trellis step.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Number of zero steps that drive any state back to zero.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.inputs
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[(state << self.inputs) | input] as usize
    }

    /// Output bits of a branch, bit `p` for output `p`.
    #[inline]
    pub fn output(&self, state: usize, input: usize) -> u32 {
        self.out[(state << self.inputs) | input]
    }

    pub fn predecessors(&self, state: usize) -> &[(u32, u32)] {
        &self.preds[state]
    }

    /// Dijkstra over output weight from the first diverging branch.
    pub fn free_distance(&self, cap: u32) -> Option<u32> {
        if self.num_states == 1 {
            return (1..self.num_inputs())
                .map(|u| self.output(0, u).count_ones())
                .filter(|&w| w > 0)
                .min()
                .filter(|&w| w <= cap);
        }
        let mut dist = vec![u32::MAX; self.num_states];
        let mut heap = BinaryHeap::new();
        let mut best = u32::MAX;
        for u in 1..self.num_inputs() {
            let ns = self.next_state(0, u);
            let w = self.output(0, u).count_ones();
            if ns == 0 {
                best = best.min(w);
            } else if w < dist[ns] {
                dist[ns] = w;
                heap.push(Reverse((w, ns)));
            }
        }
        while let Some(Reverse((w, s))) = heap.pop() {
            if w > dist[s] || w >= best || w > cap {
                continue;
            }
            for u in 0..self.num_inputs() {
                let ns = self.next_state(s, u);
                let nw = w + self.output(s, u).count_ones();
                if ns == 0 {
                    best = best.min(nw);
                } else if nw < dist[ns] {
                    dist[ns] = nw;
                    heap.push(Reverse((nw, ns)));
                }
            }
        }
        (best <= cap).then_some(best)
    }

    /// Soft-input Viterbi decoding over the whole block with full traceback.
    ///
    /// `llrs` has one row per code output. With `terminated` the path is
    /// forced to end in the zero state. Among equal metrics the smaller
    /// predecessor state wins, and the smallest final state is taken, so all
    /// zero L-values decode to all zeros.
    pub fn viterbi_decode(&self, llrs: &[Vec<f64>], terminated: bool) -> Vec<Vec<u8>> {
        assert_eq!(llrs.len(), self.outputs, "one L-value row per code output");
        let len = llrs[0].len();
        let ns = self.num_states;
        let num_patterns = 1usize << self.outputs;
        let mut metric = vec![f64::NEG_INFINITY; ns];
        metric[0] = 0.0;
        let mut next_metric = vec![0.0; ns];
        let mut survivors = vec![0u32; len * ns];
        let mut branch = vec![0.0; num_patterns];
        for t in 0..len {
            for (pat, b) in branch.iter_mut().enumerate() {
                *b = (0..self.outputs)
                    .map(|p| {
                        let l = llrs[p][t];
                        if (pat >> p) & 1 == 0 {
                            l
                        } else {
                            -l
                        }
                    })
                    .sum();
            }
            let surv = &mut survivors[t * ns..(t + 1) * ns];
            for s in 0..ns {
                let mut best = f64::NEG_INFINITY;
                let mut arg = u32::MAX;
                for &(prev, input) in &self.preds[s] {
                    let m = metric[prev as usize]
                        + branch[self.output(prev as usize, input as usize) as usize];
                    if m > best || arg == u32::MAX {
                        best = m;
                        arg = (prev << self.inputs) | input;
                    }
                }
                next_metric[s] = best;
                surv[s] = arg;
            }
            std::mem::swap(&mut metric, &mut next_metric);
        }
        let mut state = if terminated {
            0
        } else {
            let mut arg = 0;
            for s in 1..ns {
                if metric[s] > metric[arg] {
                    arg = s;
                }
            }
            arg
        };
        let mut decoded = vec![vec![0u8; len]; self.inputs];
        let in_mask = (1u32 << self.inputs) - 1;
        for t in (0..len).rev() {
            let entry = survivors[t * ns + state];
            let input = entry & in_mask;
            for (l, row) in decoded.iter_mut().enumerate() {
                row[t] = ((input >> l) & 1) as u8;
            }
            state = (entry >> self.inputs) as usize;
        }
        decoded
    }
}

/// Puncturing pattern: `n` rows, one column per trellis step of the period.
/// `true` keeps the bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    columns: Vec<Vec<bool>>,
    kept: usize,
}

impl PuncturePattern {
    pub fn new(columns: Vec<Vec<bool>>) -> Result<Self, CodeError> {
        if columns.is_empty() || columns[0].is_empty() {
            return Err(CodeError::Shape);
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(CodeError::Ragged);
        }
        let kept = columns.iter().flatten().filter(|&&b| b).count();
        if kept == 0 {
            return Err(CodeError::EmptyPattern);
        }
        Ok(Self { columns, kept })
    }

    /// Parses column-major 0/1 strings, columns separated by commas:
    /// `"10,11,01"`.
    pub fn parse(spec: &str) -> Result<Self, CodeError> {
        let columns = spec
            .split(',')
            .map(|col| {
                col.trim()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(CodeError::Parse(spec.to_string())),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(columns)
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn period(&self) -> usize {
        self.columns.len()
    }

    pub fn kept_per_period(&self) -> usize {
        self.kept
    }

    #[inline]
    pub fn keeps(&self, output: usize, column: usize) -> bool {
        self.columns[column % self.columns.len()][output]
    }

    /// Rate of the punctured code given the mother code's `k_c`.
    pub fn punctured_rate(&self, inputs: usize) -> f64 {
        (inputs * self.period()) as f64 / self.kept as f64
    }

    fn check(&self, rows: usize, len: usize) -> Result<(), CodeError> {
        if rows != self.rows() {
            return Err(CodeError::PatternRows {
                expected: rows,
                got: self.rows(),
            });
        }
        if !len.is_multiple_of(self.period()) {
            return Err(CodeError::PeriodMismatch {
                len,
                period: self.period(),
            });
        }
        Ok(())
    }

    /// Serializes the surviving bits column by column.
    pub fn puncture<T: Copy>(&self, bits: &[Vec<T>]) -> Result<Vec<T>, CodeError> {
        let len = bits.first().map_or(0, Vec::len);
        self.check(bits.len(), len)?;
        let mut out = Vec::with_capacity(len / self.period() * self.kept);
        for t in 0..len {
            for (p, row) in bits.iter().enumerate() {
                if self.keeps(p, t) {
                    out.push(row[t]);
                }
            }
        }
        Ok(out)
    }

    /// Re-inserts erasures (L-value 0) at punctured positions.
    pub fn depuncture(&self, survivors: &[f64], len: usize) -> Result<Vec<Vec<f64>>, CodeError> {
        let rows = self.rows();
        self.check(rows, len)?;
        let expected = len / self.period() * self.kept;
        if survivors.len() != expected {
            return Err(CodeError::SurvivorCount {
                expected,
                got: survivors.len(),
            });
        }
        let mut out = vec![vec![0.0; len]; rows];
        let mut it = survivors.iter();
        for t in 0..len {
            for (p, row) in out.iter_mut().enumerate() {
                if self.keeps(p, t) {
                    row[t] = *it.next().expect("length checked");
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_llrs(bits: &[Vec<u8>], amp: f64) -> Vec<Vec<f64>> {
        bits.iter()
            .map(|r| r.iter().map(|&b| if b == 0 { amp } else { -amp }).collect())
            .collect()
    }

    #[test]
    fn parse_and_render() {
        let c = ConvCode::from_octal("5,7").unwrap();
        assert_eq!(c, ConvCode::k3_5_7());
        assert_eq!(c.constraint_length(), 3);
        assert_eq!(c.octal(), "5,7");
        assert!(ConvCode::from_octal("5,9").is_err());
        assert!(ConvCode::from_octal("5,7;1").is_err());
        let c = ConvCode::from_octal("133,171").unwrap();
        assert_eq!(c.constraint_length(), 7);
        assert_eq!(c.trellis().num_states(), 64);
    }

    #[test]
    fn impulse_response() {
        let code = ConvCode::k3_5_7();
        let zeros = code.encode(&[vec![0; 8]]).unwrap();
        assert!(zeros.iter().flatten().all(|&b| b == 0));
        let mut info = vec![0u8; 6];
        info[1] = 1;
        let c = code.encode(&[info]).unwrap();
        assert_eq!(c[0], vec![0, 1, 0, 1, 0, 0]);
        assert_eq!(c[1], vec![0, 1, 1, 1, 0, 0]);
        assert_eq!(c.iter().flatten().filter(|&&b| b == 1).count(), 5);
    }

    #[test]
    fn shifted_impulses_add() {
        let code = ConvCode::k3_5_7();
        let c = code.encode(&[vec![1, 1, 0, 0, 0, 0]]).unwrap();
        // [11,01,11] xor [00,11,01,11]
        assert_eq!(c[0], vec![1, 1, 1, 1, 0, 0]);
        assert_eq!(c[1], vec![1, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn free_distances() {
        assert_eq!(ConvCode::k3_5_7().free_distance(64), Some(5));
        assert_eq!(ConvCode::k3_5_7().free_distance(4), None);
        assert_eq!(ConvCode::from_octal("1").unwrap().free_distance(8), Some(1));
        assert_eq!(
            ConvCode::from_octal("133,171").unwrap().free_distance(64),
            Some(10)
        );
    }

    #[test]
    fn free_distance_matches_enumeration() {
        // all inputs up to length 12 starting with a one, zero tail appended
        let code = ConvCode::from_octal("133,171").unwrap();
        let mem = code.constraint_length() - 1;
        let mut best = u32::MAX;
        for len in 1..=12 {
            for body in 0u32..(1 << (len - 1)) {
                let mut info: Vec<u8> = (0..len)
                    .map(|i| if i == 0 { 1 } else { ((body >> (i - 1)) & 1) as u8 })
                    .collect();
                info.extend(std::iter::repeat_n(0, mem));
                let c = code.encode(&[info]).unwrap();
                best = best.min(c.iter().flatten().map(|&b| b as u32).sum());
            }
        }
        assert_eq!(best, 10);
    }

    #[test]
    fn weight_five_events_of_5_7() {
        // exhaustive: inputs up to length 12 whose encoded path first returns
        // to zero at the end
        let code = ConvCode::k3_5_7();
        let tr = code.trellis();
        let mut events = Vec::new();
        for len in 1..=12usize {
            for body in 0u32..(1 << (len - 1)) {
                let info: Vec<usize> = (0..len)
                    .map(|i| if i == 0 { 1 } else { ((body >> (i - 1)) & 1) as usize })
                    .collect();
                let mut s = 0;
                let mut w = 0;
                let mut remerged_early = false;
                for (i, &u) in info.iter().chain([0, 0].iter()).enumerate() {
                    w += tr.output(s, u).count_ones();
                    s = tr.next_state(s, u);
                    if s == 0 && i + 1 < len + 2 {
                        remerged_early = true;
                        break;
                    }
                }
                if !remerged_early && s == 0 {
                    events.push((w, info.iter().sum::<usize>()));
                }
            }
        }
        let five: Vec<_> = events.iter().filter(|e| e.0 == 5).collect();
        assert_eq!(five, vec![&(5, 1)]);
    }

    #[test]
    fn noiseless_decoding() {
        let code = ConvCode::k3_5_7();
        let tr = code.trellis();
        let mut info = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0];
        info.extend([0, 0]);
        let c = code.encode(&[info.clone()]).unwrap();
        let dec = tr.viterbi_decode(&to_llrs(&c, 2.5), true);
        assert_eq!(dec[0], info);
    }

    #[test]
    fn zero_llrs_decode_to_zero() {
        let tr = ConvCode::k3_5_7().trellis();
        let dec = tr.viterbi_decode(&[vec![0.0; 20], vec![0.0; 20]], true);
        assert!(dec[0].iter().all(|&b| b == 0));
        let dec = tr.viterbi_decode(&[vec![0.0; 20], vec![0.0; 20]], false);
        assert!(dec[0].iter().all(|&b| b == 0));
    }

    /// Exhaustive maximum-metric search over all 2^8 inputs with a 2-step
    /// zero tail.
    fn brute_force(code: &ConvCode, llrs: &[Vec<f64>]) -> Vec<u8> {
        let len = llrs[0].len();
        let body = len - 2;
        let mut best = (f64::NEG_INFINITY, vec![]);
        for x in 0u32..(1 << body) {
            let mut info: Vec<u8> = (0..body).map(|i| ((x >> i) & 1) as u8).collect();
            info.extend([0, 0]);
            let c = code.encode(&[info.clone()]).unwrap();
            let m: f64 = (0..len)
                .map(|t| {
                    (0..2)
                        .map(|p| if c[p][t] == 0 { llrs[p][t] } else { -llrs[p][t] })
                        .sum::<f64>()
                })
                .sum();
            if m > best.0 {
                best = (m, info);
            }
        }
        best.1
    }

    #[test]
    fn flipped_llr_matches_exhaustive_search() {
        let code = ConvCode::k3_5_7();
        let info = vec![1, 1, 0, 1, 0, 0, 1, 0, 0, 0];
        let c = code.encode(std::slice::from_ref(&info)).unwrap();
        let mut llrs = to_llrs(&c, 2.0);
        llrs[1][3] = -llrs[1][3] * 0.3;
        let dec = code.trellis().viterbi_decode(&llrs, true);
        assert_eq!(dec[0], brute_force(&code, &llrs));
        assert_eq!(dec[0], info);
    }

    #[test]
    fn noisy_llrs_match_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let code = ConvCode::k3_5_7();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let llrs: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..10).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect();
            let dec = code.trellis().viterbi_decode(&llrs, true);
            assert_eq!(dec[0], brute_force(&code, &llrs));
        }
    }

    #[test]
    fn puncturing() {
        let p = PuncturePattern::parse("10,11,01").unwrap();
        assert_eq!(p.period(), 3);
        assert_eq!(p.kept_per_period(), 4);
        assert!((p.punctured_rate(1) - 0.75).abs() < 1e-15);
        let bits = vec![vec![1, 2, 3, 4, 5, 6], vec![7, 8, 9, 10, 11, 12]];
        let s = p.puncture(&bits).unwrap();
        assert_eq!(s, vec![1, 2, 8, 9, 4, 5, 11, 12]);
        let llrs: Vec<f64> = s.iter().map(|&v| v as f64).collect();
        let d = p.depuncture(&llrs, 6).unwrap();
        assert_eq!(d[0], vec![1.0, 2.0, 0.0, 4.0, 5.0, 0.0]);
        assert_eq!(d[1], vec![0.0, 8.0, 9.0, 0.0, 11.0, 12.0]);
        assert!(matches!(
            p.puncture(&[vec![0; 4], vec![0; 4]]),
            Err(CodeError::PeriodMismatch { .. })
        ));
        assert!(PuncturePattern::parse("00,00").is_err());
        let id = PuncturePattern::parse("11").unwrap();
        assert_eq!(id.puncture(&bits).unwrap().len(), 12);
    }

    proptest! {
        #[test]
        fn linearity(a in proptest::collection::vec(0u8..2, 1..40), seed in any::<u64>()) {
            let code = ConvCode::k3_5_7();
            let b: Vec<u8> = a.iter().enumerate().map(|(i, _)| ((seed >> (i % 64)) & 1) as u8).collect();
            let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
            let ca = code.encode(std::slice::from_ref(&a)).unwrap();
            let cb = code.encode(&[b]).unwrap();
            let cx = code.encode(&[x]).unwrap();
            for p in 0..2 {
                for t in 0..a.len() {
                    prop_assert_eq!(cx[p][t], ca[p][t] ^ cb[p][t]);
                }
            }
        }

        #[test]
        fn noiseless_roundtrip(mut info in proptest::collection::vec(0u8..2, 1..60), amp in 0.01f64..10.0) {
            let code = ConvCode::k3_5_7();
            info.extend([0, 0]);
            let c = code.encode(&[info.clone()]).unwrap();
            let dec = code.trellis().viterbi_decode(&to_llrs(&c, amp), true);
            prop_assert_eq!(&dec[0], &info);
        }

        #[test]
        fn depuncture_inverts_puncture(vals in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let p = PuncturePattern::parse("10,11,01").unwrap();
            let rows = vec![vals[..6].to_vec(), vals[6..].to_vec()];
            let d = p.depuncture(&p.puncture(&rows).unwrap(), 6).unwrap();
            for r in 0..2 {
                for t in 0..6 {
                    let expect = if p.keeps(r, t) { rows[r][t] } else { 0.0 };
                    prop_assert_eq!(d[r][t], expect);
                }
            }
        }
    }

    #[test]
    fn two_input_code() {
        let code = ConvCode::from_octal("7,5,0;0,2,3").unwrap();
        assert_eq!(code.inputs(), 2);
        assert_eq!(code.trellis().num_states(), 16);
        let mut info = vec![vec![1, 0, 1, 1, 0, 0, 0], vec![0, 1, 1, 0, 1, 0, 0]];
        info[0].extend([0, 0]);
        info[1].extend([0, 0]);
        let c = code.encode(&info).unwrap();
        let dec = code.trellis().viterbi_decode(&to_llrs(&c, 1.0), true);
        assert_eq!(dec, info);
    }
}
