//! Hierarchical M-PAM constellations labeled with the binary reflected Gray
//! code (BRGC).
//!
//! A constellation of order `M = 2^q` is described by `q` half-distances
//! `d_1 > d_2 > ... > d_q >= 0`. Symbol `j` sits at
//!
//! ```text
//! x_j = sum_k (-1)^(b_k(j) - 1) d_k
//! ```
//!
//! where `b_1(j)` is the most significant bit of `j`, and carries the label
//! `g(j) = j ^ (j >> 1)`. The free parameters are the ratios
//! `alpha_k = d_{k+1} / d_1`; `d_1` is fixed by unit average energy.
//!
//! Bit levels are 0-based in this API: level 0 is the leftmost (most
//! significant) label bit, level `q - 1` the rightmost.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Slack used when checking the region inequalities, so that grid points lying
/// on a boundary (e.g. `0.43 + 0.57`) are not rejected by rounding.
pub const REGION_TOLERANCE: f64 = 1e-12;

/// Which of the BRGC-region inequalities failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RegionViolation {
    /// `alpha_k < sum_{j > k} alpha_j` for the given 1-based `k`.
    Ordering { k: usize, alpha: f64, tail_sum: f64 },
    /// `sum_k alpha_k > 1`.
    SumExceedsOne { sum: f64 },
    /// `alpha_{q-1} < 0`.
    Negative { alpha: f64 },
}

impl fmt::Display for RegionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RegionViolation::Ordering { k, alpha, tail_sum } => write!(
                f,
                "alpha_{k} >= sum of alpha_j for j > {k} violated ({alpha} < {tail_sum})"
            ),
            RegionViolation::SumExceedsOne { sum } => {
                write!(f, "sum of alphas <= 1 violated (sum = {sum})")
            }
            RegionViolation::Negative { alpha } => {
                write!(f, "last alpha >= 0 violated (alpha = {alpha})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstellationError {
    #[error("constellation order {0} is not a power of two >= 2")]
    InvalidOrder(usize),
    #[error("expected {expected} alphas for M = {order}, got {got}")]
    DimensionMismatch {
        order: usize,
        expected: usize,
        got: usize,
    },
    #[error("alphas outside the BRGC region: {0}")]
    Region(RegionViolation),
    #[error("non-finite alpha")]
    NonFinite,
}

/// Checks the BRGC-region inequalities. Returns the first violated one.
pub fn validate_region(alphas: &[f64]) -> Result<(), RegionViolation> {
    let q1 = alphas.len();
    if let Some(&last) = alphas.last() {
        if last < -REGION_TOLERANCE {
            return Err(RegionViolation::Negative { alpha: last });
        }
    }
    for k in 0..q1 {
        let tail_sum: f64 = alphas[k + 1..].iter().sum();
        if alphas[k] < tail_sum - REGION_TOLERANCE {
            return Err(RegionViolation::Ordering {
                k: k + 1,
                alpha: alphas[k],
                tail_sum,
            });
        }
    }
    let sum: f64 = alphas.iter().sum();
    if sum > 1.0 + REGION_TOLERANCE {
        return Err(RegionViolation::SumExceedsOne { sum });
    }
    Ok(())
}

/// Predicate form of [`validate_region`].
pub fn in_region(alphas: &[f64]) -> bool {
    validate_region(alphas).is_ok()
}

/// Binary reflected Gray code of `j`.
#[inline]
pub fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

/// Inverse of [`gray`].
pub fn gray_inverse(mut g: usize) -> usize {
    let mut j = g;
    while g > 1 {
        g >>= 1;
        j ^= g;
    }
    j
}

/// A unit-energy hierarchical PAM constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits: usize,
    alphas: Vec<f64>,
    distances: Vec<f64>,
    points: Vec<f64>,
    labels: Vec<usize>,
    // symbol index for every label value
    by_label: Vec<usize>,
}

impl Constellation {
    /// Builds a constellation, rejecting alphas outside the BRGC region.
    pub fn new(alphas: &[f64], order: usize) -> Result<Self, ConstellationError> {
        let c = Self::new_unchecked(alphas, order)?;
        validate_region(alphas).map_err(ConstellationError::Region)?;
        Ok(c)
    }

    /// Builds a constellation without the region check. Points may cross, in
    /// which case the labeling is no longer Gray.
    pub fn new_unchecked(alphas: &[f64], order: usize) -> Result<Self, ConstellationError> {
        if order < 2 || !order.is_power_of_two() {
            return Err(ConstellationError::InvalidOrder(order));
        }
        let bits = order.trailing_zeros() as usize;
        if alphas.len() != bits - 1 {
            return Err(ConstellationError::DimensionMismatch {
                order,
                expected: bits - 1,
                got: alphas.len(),
            });
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(ConstellationError::NonFinite);
        }
        let d1 = (1.0 + alphas.iter().map(|a| a * a).sum::<f64>()).powf(-0.5);
        let distances: Vec<f64> = std::iter::once(d1)
            .chain(alphas.iter().map(|a| a * d1))
            .collect();
        let points = (0..order)
            .map(|j| {
                distances
                    .iter()
                    .enumerate()
                    .map(|(k, d)| {
                        if (j >> (bits - 1 - k)) & 1 == 1 {
                            *d
                        } else {
                            -*d
                        }
                    })
                    .sum()
            })
            .collect();
        let labels: Vec<usize> = (0..order).map(gray).collect();
        let mut by_label = vec![0; order];
        for (j, &l) in labels.iter().enumerate() {
            by_label[l] = j;
        }
        Ok(Self {
            order,
            bits,
            alphas: alphas.to_vec(),
            distances,
            points,
            labels,
            by_label,
        })
    }

    /// Equally spaced `M`-PAM (`alpha_k = 2^-k`).
    pub fn equally_spaced(order: usize) -> Result<Self, ConstellationError> {
        if order < 2 || !order.is_power_of_two() {
            return Err(ConstellationError::InvalidOrder(order));
        }
        let bits = order.trailing_zeros() as i32;
        let alphas: Vec<f64> = (1..bits).map(|k| 0.5f64.powi(k)).collect();
        Self::new(&alphas, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of label bits `q = log2 M`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Half-distances `d_1..d_q`.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Gray labels of the points, as integers whose MSB is level 0.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Label bit of point `j` at bit level `level`.
    #[inline]
    pub fn label_bit(&self, j: usize, level: usize) -> u8 {
        ((self.labels[j] >> (self.bits - 1 - level)) & 1) as u8
    }

    /// Index of the point carrying `label`.
    #[inline]
    pub fn point_for_label(&self, label: usize) -> usize {
        self.by_label[label]
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|x| x * x).sum::<f64>() / self.order as f64
    }

    /// Label of point `j` as a bit string, level 0 first.
    pub fn label_string(&self, j: usize) -> String {
        (0..self.bits)
            .map(|k| if self.label_bit(j, k) == 1 { '1' } else { '0' })
            .collect()
    }

    /// Closest point to `j` whose label bit at `level` differs. Ties go to
    /// the smaller index.
    pub fn nearest_competitor(&self, level: usize, j: usize) -> usize {
        let bit = self.label_bit(j, level);
        let x = self.points[j];
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for i in 0..self.order {
            if self.label_bit(i, level) == bit {
                continue;
            }
            let dist = (self.points[i] - x).abs();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    /// Signed L-value mean table together with the closed-form positive
    /// means used by the mixture model.
    pub fn mu_table(&self) -> MuTable {
        let q = self.bits;
        let mu = (0..q)
            .map(|k| {
                (0..self.order)
                    .map(|j| {
                        let i = self.nearest_competitor(k, j);
                        let sq = (self.points[i] - self.points[j]).powi(2);
                        if self.label_bit(j, k) == 0 {
                            sq
                        } else {
                            -sq
                        }
                    })
                    .collect()
            })
            .collect();
        let positive_mu = (0..q)
            .map(|k| {
                let mk = self.order >> (k + 1);
                (0..mk).map(|j| self.closed_form_mu(k, j)).collect()
            })
            .collect();
        MuTable { mu, positive_mu }
    }

    /// `4 (d_k - sum_{k' > k} b_{k'-k}(j) d_{k'})^2`, with `b_1(j)` the least
    /// significant bit of `j`. Valid for `j < M / 2^(k+1)` (0-based level).
    fn closed_form_mu(&self, level: usize, j: usize) -> f64 {
        let d = &self.distances;
        let inner: f64 = (level + 1..self.bits)
            .map(|kp| {
                let b = (j >> (kp - level - 1)) & 1;
                b as f64 * d[kp]
            })
            .sum();
        4.0 * (d[level] - inner).powi(2)
    }
}

/// L-value mean scales of a constellation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuTable {
    /// `mu[level][j]`, signed: positive iff bit `level` of point `j` is 0.
    pub mu: Vec<Vec<f64>>,
    /// `positive_mu[level][j]` for `j < M_k = M / 2^(level+1)`, from the
    /// closed form. These are the virtual-channel means.
    pub positive_mu: Vec<Vec<f64>>,
}

impl MuTable {
    pub fn levels(&self) -> usize {
        self.mu.len()
    }

    /// Mixture weight `xi = 1 / M_k` of the virtual channels at `level`.
    pub fn weight(&self, level: usize) -> f64 {
        1.0 / self.positive_mu[level].len() as f64
    }

    /// Largest deviation between the closed-form positive means and the
    /// geometric ones (first `M_k` points), compared as sorted multisets.
    pub fn closed_form_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (row, closed) in self.mu.iter().zip(&self.positive_mu) {
            let mut geo: Vec<f64> = row[..closed.len()].iter().map(|m| m.abs()).collect();
            let mut cf = closed.clone();
            geo.sort_by(f64::total_cmp);
            cf.sort_by(f64::total_cmp);
            for (a, b) in geo.iter().zip(&cf) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// Serializable view of a constellation.
#[derive(Debug, Clone, Serialize)]
pub struct ConstellationDump {
    #[serde(rename = "M")]
    pub order: usize,
    pub alphas: Vec<f64>,
    pub d: Vec<f64>,
    pub points: Vec<f64>,
    pub labels: Vec<String>,
    /// Signed means, row-major by level then point.
    pub mu: Vec<f64>,
    pub in_region: bool,
    pub energy: f64,
}

impl From<&Constellation> for ConstellationDump {
    fn from(c: &Constellation) -> Self {
        let table = c.mu_table();
        Self {
            order: c.order,
            alphas: c.alphas.clone(),
            d: c.distances.clone(),
            points: c.points.clone(),
            labels: (0..c.order).map(|j| c.label_string(j)).collect(),
            mu: table.mu.into_iter().flatten().collect(),
            in_region: in_region(&c.alphas),
            energy: c.average_energy(),
        }
    }
}
