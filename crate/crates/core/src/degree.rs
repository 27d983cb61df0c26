//! Finite degree distributions over check-node degrees `1..=B`.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack below which weights are treated as already normalized and kept
/// bit-for-bit.
const NORMALIZED_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegreeError {
    #[error("degree distribution has no positive mass")]
    AllZero,
    #[error("negative weight {weight} at degree {degree}")]
    NegativeWeight { degree: usize, weight: f64 },
    #[error("non-finite weight at degree {degree}")]
    NonFinite { degree: usize },
    #[error("degree 0 is not a valid check degree")]
    ZeroDegree,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Probability mass over degrees `1..=B`, stored densely.
///
/// `B` is the largest degree carrying mass; zero-mass degrees below it are
/// kept as explicit zeros.
#[derive(Clone, PartialEq)]
pub struct DegreeDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    /// Builds a distribution from weights for degrees `1, 2, ...`.
    ///
    /// Weights are divided by their sum unless they already sum to one
    /// within `1e-12`, in which case they are kept unchanged so that a
    /// serialized distribution reloads bit-exactly.
    pub fn new(weights: &[f64]) -> Result<Self, DegreeError> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(DegreeError::NonFinite { degree: i + 1 });
            }
            if w < 0.0 {
                return Err(DegreeError::NegativeWeight { degree: i + 1, weight: w });
            }
        }
        let last = weights.iter().rposition(|&w| w > 0.0).ok_or(DegreeError::AllZero)?;
        let mut probs = weights[..=last].to_vec();
        let sum: f64 = probs.iter().sum();
        if !sum.is_finite() {
            return Err(DegreeError::NonFinite { degree: last + 1 });
        }
        if (sum - 1.0).abs() > NORMALIZED_SLACK {
            for p in &mut probs {
                *p /= sum;
            }
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Guard the inverse-CDF lookup against a sum that rounds below one.
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { probs, cdf })
    }

    /// Builds a distribution from a sparse `degree -> weight` map.
    pub fn from_map(map: &BTreeMap<usize, f64>) -> Result<Self, DegreeError> {
        if map.contains_key(&0) {
            return Err(DegreeError::ZeroDegree);
        }
        let max = map.keys().next_back().copied().ok_or(DegreeError::AllZero)?;
        let mut dense = vec![0.0; max];
        for (&d, &w) in map {
            dense[d - 1] = w;
        }
        Self::new(&dense)
    }

    /// Point mass at `degree`.
    pub fn single(degree: usize) -> Result<Self, DegreeError> {
        if degree == 0 {
            return Err(DegreeError::ZeroDegree);
        }
        let mut dense = vec![0.0; degree];
        dense[degree - 1] = 1.0;
        Self::new(&dense)
    }

    /// Probabilities for degrees `1..=max_degree()`; index 0 is degree 1.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `degree` (zero outside the support).
    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 {
            0.0
        } else {
            self.probs.get(degree - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn max_degree(&self) -> usize {
        self.probs.len()
    }

    /// Nonzero `(degree, probability)` pairs in increasing degree order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, &p)| (i + 1, p))
    }

    /// Average degree `Ω'(1) = Σ i·Ω_i`.
    pub fn mean_degree(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, &p)| (i + 1) as f64 * p).sum()
    }

    /// Edge-perspective coefficients `β_i = (i+1)·Ω_{i+1} / Ω'(1)` for
    /// `i = 0..B-1`: the probability that a uniformly chosen edge ends in a
    /// check node with `i` other neighbors.
    pub fn edge_perspective(&self) -> Vec<f64> {
        let mean = self.mean_degree();
        self.probs.iter().enumerate().map(|(i, &p)| (i + 1) as f64 * p / mean).collect()
    }

    /// Distribution of the sum of independent draws from `self` and
    /// `other`, i.e. the coefficients of the product of the two generator
    /// polynomials.
    pub fn convolve(&self, other: &Self) -> Self {
        // Degrees of the product start at 2; slot 0 (degree 1) stays empty.
        let mut dense = vec![0.0; self.max_degree() + other.max_degree()];
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                // degree (i+1)+(j+1) lives at index i+j+1
                dense[i + j + 1] += a * b;
            }
        }
        Self::new(&dense).expect("product of two distributions has positive mass")
    }

    /// Draws a degree by inverse-CDF lookup.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) + 1
    }

    /// Robust soliton distribution for a block of `k` symbols.
    ///
    /// `R = c·ln(k/δ)·√k`; the spike sits at degree `⌊k/R⌋` clamped into
    /// `1..=k`.
    pub fn robust_soliton(k: usize, c: f64, delta: f64) -> Result<Self, DegreeError> {
        if k < 2 {
            return Err(DegreeError::InvalidParameter(format!("k = {k} must be at least 2")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(DegreeError::InvalidParameter(format!("c = {c} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(DegreeError::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
        }
        let kf = k as f64;
        let r = c * (kf / delta).ln() * kf.sqrt();
        let spike = ((kf / r).floor() as usize).clamp(1, k);
        let weights: Vec<f64> = (1..=k)
            .map(|d| {
                let ideal = if d == 1 { 1.0 / kf } else { 1.0 / (d * (d - 1)) as f64 };
                let tau = if d < spike {
                    r / (d as f64 * kf)
                } else if d == spike {
                    r * (r / delta).ln() / kf
                } else {
                    0.0
                };
                ideal + tau.max(0.0)
            })
            .collect();
        Self::new(&weights)
    }
}

impl fmt::Debug for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.support()).finish()
    }
}

impl Serialize for DegreeDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        for (d, p) in self.support() {
            map.serialize_entry(&d, &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DegreeDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<usize, f64>::deserialize(deserializer)?;
        Self::from_map(&map).map_err(de::Error::custom)
    }
}
