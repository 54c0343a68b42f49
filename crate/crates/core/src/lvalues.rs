//! Max-log L-values and their Gaussian-mixture model.
//!
//! For an all-zero transmission the L-value of bit level `k` is modelled as
//! a mixture of `M_k = M / 2^(k+1)` consistent Gaussians `N(γμ, 2γμ)` with
//! equal weights, one per positive mean `μ_{k,j}` of the constellation.

use crate::constellation::{Constellation, MuTable};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TransformError {
    #[error("s = {s} lies beyond the pole of the fading transform (m = {m})")]
    Pole { s: f64, m: f64 },
    #[error("Nakagami parameter must be positive, got {0}")]
    InvalidM(f64),
}

/// Max-log L-values of all bit levels for received sample `y`, written into
/// `out` (length `q`). Positive values favour bit 0.
pub fn maxlog_llr_into(y: f64, gamma: f64, c: &Constellation, out: &mut [f64]) {
    let q = c.bits();
    let mut best = [[f64::INFINITY; 2]; 16];
    debug_assert!(q <= 16 && out.len() == q);
    for (j, &x) in c.points().iter().enumerate() {
        let e = (y - x) * (y - x);
        let label = c.labels()[j];
        for (k, slot) in best.iter_mut().enumerate().take(q) {
            let b = (label >> (q - 1 - k)) & 1;
            if e < slot[b] {
                slot[b] = e;
            }
        }
    }
    for k in 0..q {
        out[k] = gamma * (best[k][1] - best[k][0]);
    }
}

/// Allocating form of [`maxlog_llr_into`].
pub fn maxlog_llr(y: f64, gamma: f64, c: &Constellation) -> Vec<f64> {
    let mut out = vec![0.0; c.bits()];
    maxlog_llr_into(y, gamma, c, &mut out);
    out
}

/// Normal density with mean `m` and variance `v`.
#[inline]
fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
    (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

#[inline]
fn normal_cdf(x: f64, m: f64, v: f64) -> f64 {
    0.5 * erfc(-(x - m) / (2.0 * v).sqrt())
}

/// Mixture model of the L-values of every bit level.
#[derive(Debug, Clone, PartialEq)]
pub struct LValueModel {
    mu: Vec<Vec<f64>>,
}

impl LValueModel {
    pub fn new(c: &Constellation) -> Self {
        Self::from_table(&c.mu_table())
    }

    pub fn from_table(table: &MuTable) -> Self {
        Self {
            mu: table.positive_mu.clone(),
        }
    }

    /// Builds a model directly from per-level means.
    pub fn from_means(mu: Vec<Vec<f64>>) -> Self {
        Self { mu }
    }

    pub fn levels(&self) -> usize {
        self.mu.len()
    }

    /// Component means `μ_{k,j}` (before scaling by the SNR).
    pub fn means(&self, k: usize) -> &[f64] {
        &self.mu[k]
    }

    pub fn weight(&self, k: usize) -> f64 {
        1.0 / self.mu[k].len() as f64
    }

    /// Probability mass sitting at zero (components with `μ = 0`).
    pub fn point_mass(&self, k: usize) -> f64 {
        self.weight(k) * self.mu[k].iter().filter(|&&m| m <= 0.0).count() as f64
    }

    /// Density of the continuous part of `L_k` at `lambda`.
    pub fn mixture_pdf(&self, k: usize, lambda: f64, gamma: f64) -> f64 {
        let xi = self.weight(k);
        self.mu[k]
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| xi * normal_pdf(lambda, gamma * m, 2.0 * gamma * m))
            .sum()
    }

    /// Distribution function of `L_k`, including the mass at zero.
    pub fn mixture_cdf(&self, k: usize, lambda: f64, gamma: f64) -> f64 {
        let xi = self.weight(k);
        self.mu[k]
            .iter()
            .map(|&m| {
                if m > 0.0 {
                    xi * normal_cdf(lambda, gamma * m, 2.0 * gamma * m)
                } else if lambda >= 0.0 {
                    xi
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Draws one L-value of level `k` at SNR `gamma`.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, gamma: f64, rng: &mut R) -> f64 {
        let j = rng.random_range(0..self.mu[k].len());
        let m = self.mu[k][j] * gamma;
        let z: f64 = StandardNormal.sample(rng);
        m + (2.0 * m).sqrt() * z
    }

    /// `Φ_{L_k}(s)` on the AWGN channel.
    pub fn laplace_awgn(&self, k: usize, s: f64, gamma: f64) -> f64 {
        let xi = self.weight(k);
        let t = s * s - s;
        self.mu[k].iter().map(|&m| xi * (m * gamma * t).exp()).sum()
    }

    /// First derivative of [`laplace_awgn`](Self::laplace_awgn) in `s`.
    pub fn laplace_awgn_d1(&self, k: usize, s: f64, gamma: f64) -> f64 {
        let xi = self.weight(k);
        let t = s * s - s;
        self.mu[k]
            .iter()
            .map(|&m| {
                let a = m * gamma;
                xi * a * (2.0 * s - 1.0) * (a * t).exp()
            })
            .sum()
    }

    /// Second derivative of [`laplace_awgn`](Self::laplace_awgn) in `s`.
    pub fn laplace_awgn_d2(&self, k: usize, s: f64, gamma: f64) -> f64 {
        let xi = self.weight(k);
        let t = s * s - s;
        self.mu[k]
            .iter()
            .map(|&m| {
                let a = m * gamma;
                let d = a * (2.0 * s - 1.0);
                xi * (2.0 * a + d * d) * (a * t).exp()
            })
            .sum()
    }

    fn fading_terms(
        &self,
        k: usize,
        s: f64,
        gamma_bar: f64,
        m: f64,
    ) -> Result<Vec<(f64, f64, f64)>, TransformError> {
        if !(m > 0.0) {
            return Err(TransformError::InvalidM(m));
        }
        let t = s * s - s;
        self.mu[k]
            .iter()
            .map(|&mu| {
                let a = gamma_bar * mu;
                let base = 1.0 - a * t / m;
                if base <= 0.0 {
                    return Err(TransformError::Pole { s, m });
                }
                Ok((a, base, a * (2.0 * s - 1.0)))
            })
            .collect()
    }

    /// `Φ_{L_k}(s)` averaged over Nakagami-m fading with mean SNR `gamma_bar`.
    pub fn laplace_fading(
        &self,
        k: usize,
        s: f64,
        gamma_bar: f64,
        m: f64,
    ) -> Result<f64, TransformError> {
        let xi = self.weight(k);
        Ok(self
            .fading_terms(k, s, gamma_bar, m)?
            .into_iter()
            .map(|(_, base, _)| xi * base.powf(-m))
            .sum())
    }

    pub fn laplace_fading_d1(
        &self,
        k: usize,
        s: f64,
        gamma_bar: f64,
        m: f64,
    ) -> Result<f64, TransformError> {
        let xi = self.weight(k);
        Ok(self
            .fading_terms(k, s, gamma_bar, m)?
            .into_iter()
            .map(|(_, base, da)| xi * base.powf(-m - 1.0) * da)
            .sum())
    }

    pub fn laplace_fading_d2(
        &self,
        k: usize,
        s: f64,
        gamma_bar: f64,
        m: f64,
    ) -> Result<f64, TransformError> {
        let xi = self.weight(k);
        Ok(self
            .fading_terms(k, s, gamma_bar, m)?
            .into_iter()
            .map(|(a, base, da)| {
                xi * ((m + 1.0) / m * base.powf(-m - 2.0) * da * da
                    + base.powf(-m - 1.0) * 2.0 * a)
            })
            .sum())
    }
}
