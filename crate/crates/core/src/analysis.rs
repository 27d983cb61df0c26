//! Asymptotic residual error rates via two-type And-Or tree evaluation.
//!
//! Source-1 and source-2 input symbols are the two OR-node types; checks
//! forwarded from source 1, from source 2, and combined checks are the
//! three AND-node types. With `x1 = 1 - y1`, `x2 = 1 - y2` the recursion is
//!
//! ```text
//! y1' = exp(-α1 · S1(x1) · (p'1 + p'3 · T2(x2)))
//! y2' = exp(-α2 · S2(x2) · (p'2 + p'4 · T1(x1)))
//! ```
//!
//! where `S` are the edge-perspective polynomials of each source's degree
//! distribution and `T` are the node-perspective polynomials. The product
//! `S1·T2` is the Cauchy product that appears as a double sum over total
//! degree; evaluating it as a product is exact.

use std::io::Write;

use serde::Serialize;

use crate::codec::{CodeEnsemble, CodecError};

/// Precomputed coefficients of the two coupled recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct AndOrCoefficients {
    /// `β_{i,1} = (i+1)Ω_{i+1}/Ω'(1)`, `i = 0..B1-1`.
    pub beta1: Vec<f64>,
    /// `β_{i,2} = (i+1)φ_{i+1}/φ'(1)`, `i = 0..B2-1`.
    pub beta2: Vec<f64>,
    /// `β_{i,3} = φ_i`, indexed by degree `i = 0..=B2` (entry 0 is zero).
    pub beta3: Vec<f64>,
    /// `β_{i,4} = Ω_i`, indexed by degree `i = 0..=B1` (entry 0 is zero).
    pub beta4: Vec<f64>,
    /// Poisson exponent of source-1 variable degrees, `(1-p2)μ1γ(1+ρ)/ρ`.
    pub alpha1: f64,
    /// Poisson exponent of source-2 variable degrees, `(1-p1)μ2γ(1+ρ)`.
    pub alpha2: f64,
    pub pp1: f64,
    pub pp2: f64,
    pub pp3: f64,
    pub pp4: f64,
}

/// `num / den`, or zero when the denominator vanishes. A vanishing
/// denominator means no check touches that source, and its exponent is
/// zero as well, so the weight never matters.
fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl AndOrCoefficients {
    pub fn new(ensemble: &CodeEnsemble) -> Self {
        let omega = ensemble.omega();
        let phi = ensemble.phi();
        let (p1, p2, p3) = (ensemble.p1(), ensemble.p2(), ensemble.p3());
        let rho = ensemble.rho();
        let gamma = ensemble.gamma();

        let with_zero = |probs: &[f64]| {
            let mut v = Vec::with_capacity(probs.len() + 1);
            v.push(0.0);
            v.extend_from_slice(probs);
            v
        };

        Self {
            beta1: omega.edge_perspective(),
            beta2: phi.edge_perspective(),
            beta3: with_zero(phi.probs()),
            beta4: with_zero(omega.probs()),
            alpha1: (1.0 - p2) * omega.mean_degree() * gamma * (1.0 + rho) / rho,
            alpha2: (1.0 - p1) * phi.mean_degree() * gamma * (1.0 + rho),
            pp1: ratio_or_zero(p1, 1.0 - p2),
            pp3: ratio_or_zero(p3, 1.0 - p2),
            pp2: ratio_or_zero(p2, 1.0 - p1),
            pp4: ratio_or_zero(p3, 1.0 - p1),
        }
    }

    /// One step of the recursion.
    pub fn iterate_once(&self, state: &FixedPointState) -> FixedPointState {
        let x1 = 1.0 - state.y1;
        let x2 = 1.0 - state.y2;
        let s1 = horner(&self.beta1, x1);
        let s2 = horner(&self.beta2, x2);
        let t1 = horner(&self.beta4, x1);
        let t2 = horner(&self.beta3, x2);
        FixedPointState {
            y1: (-self.alpha1 * s1 * (self.pp1 + self.pp3 * t2)).exp(),
            y2: (-self.alpha2 * s2 * (self.pp2 + self.pp4 * t1)).exp(),
            iterations: state.iterations + 1,
            converged: false,
        }
    }

    /// The source-1 cross term `p'3 · S1(x1) · T2(x2)`.
    pub fn cross_term1(&self, y1: f64, y2: f64) -> f64 {
        self.pp3 * horner(&self.beta1, 1.0 - y1) * horner(&self.beta3, 1.0 - y2)
    }

    /// The source-2 cross term `p'4 · S2(x2) · T1(x1)`.
    pub fn cross_term2(&self, y1: f64, y2: f64) -> f64 {
        self.pp4 * horner(&self.beta2, 1.0 - y2) * horner(&self.beta4, 1.0 - y1)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Iterate pair: probabilities that a source-1 / source-2 symbol is still
/// unrecovered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointState {
    pub y1: f64,
    pub y2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FixedPointState {
    /// Nothing recovered yet.
    pub fn start() -> Self {
        Self { y1: 1.0, y2: 1.0, iterations: 0, converged: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

/// Residual error rates of an ensemble. When `converged` is false the
/// values are the last iterate, which upper-bounds the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub ber1: f64,
    pub ber2: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fixed_point(ensemble: &CodeEnsemble, opts: &FixedPointOptions) -> FixedPoint {
    let coeffs = AndOrCoefficients::new(ensemble);
    let mut state = FixedPointState::start();
    while state.iterations < opts.max_iter {
        let next = coeffs.iterate_once(&state);
        let delta = (next.y1 - state.y1).abs().max((next.y2 - state.y2).abs());
        state = next;
        if delta < opts.tol {
            state.converged = true;
            break;
        }
    }
    FixedPoint { ber1: state.y1, ber2: state.y2, iterations: state.iterations, converged: state.converged }
}

/// One row of a BER-vs-overhead curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerPoint {
    pub gamma: f64,
    pub ber1: f64,
    pub ber2: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed points over a grid of overheads, in grid order.
pub fn ber_curve(
    ensemble: &CodeEnsemble,
    gamma_grid: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<BerPoint>, CodecError> {
    gamma_grid
        .iter()
        .map(|&gamma| {
            let fp = fixed_point(&ensemble.with_gamma(gamma)?, opts);
            Ok(BerPoint { gamma, ber1: fp.ber1, ber2: fp.ber2, iterations: fp.iterations, converged: fp.converged })
        })
        .collect()
}

/// CSV with header `gamma,ber1,ber2,iterations,converged`.
pub fn write_ber_curve_csv<W: Write>(rows: &[BerPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
