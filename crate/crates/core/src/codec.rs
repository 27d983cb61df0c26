//! Source encoding, the combining relay, and the peeling decoder.
//!
//! Variable nodes come in two blocks: `n1 = round(ρk)` input symbols of
//! source 1 and `n2 = k` input symbols of source 2. Every received check
//! node lists its neighbors in each block separately, so its kind
//! (forwarded from source 1, forwarded from source 2, or combined) is
//! implied by which lists are nonempty.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::io::Write;
use std::ops::BitXor;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degree::DegreeDistribution;

/// Tolerance on `p1 + p2 + p3 = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("degree {degree} exceeds block length {block_len}")]
    DegreeExceedsBlock { degree: usize, block_len: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("payload block {block} has length {got}, expected {expected}")]
    PayloadLength { block: u8, got: usize, expected: usize },
}

/// Payload carried by one input symbol.
pub trait Symbol: Copy + Default + PartialEq + Debug + BitXor<Output = Self> + Send + Sync {}

impl<T> Symbol for T where T: Copy + Default + PartialEq + Debug + BitXor<Output = T> + Send + Sync {}

/// Full parameter set `(ρk, k, Ω, φ, p1, p2, p3, γ)` of a DU-rateless code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeEnsemble {
    rho: f64,
    k: usize,
    omega: DegreeDistribution,
    phi: DegreeDistribution,
    p1: f64,
    p2: f64,
    p3: f64,
    gamma: f64,
}

impl CodeEnsemble {
    /// Validates and builds an ensemble; `p3` is `1 - p1 - p2`.
    ///
    /// The check that each distribution fits its block is deferred to
    /// [`CodeEnsemble::check_block_lengths`], since the asymptotic analysis
    /// never looks at `k`.
    pub fn new(
        rho: f64,
        k: usize,
        omega: DegreeDistribution,
        phi: DegreeDistribution,
        p1: f64,
        p2: f64,
        gamma: f64,
    ) -> Result<Self, CodecError> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(CodecError::InvalidEnsemble(format!("rho = {rho} must lie in (0, 1]")));
        }
        if k == 0 {
            return Err(CodecError::InvalidEnsemble("k must be positive".into()));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(CodecError::InvalidEnsemble(format!("gamma = {gamma} must be finite and >= 0")));
        }
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CodecError::InvalidEnsemble(format!("{name} = {p} must lie in [0, 1]")));
            }
        }
        if p1 + p2 > 1.0 + PROB_SUM_TOL {
            return Err(CodecError::InvalidEnsemble(format!("p1 + p2 = {} exceeds 1", p1 + p2)));
        }
        let p3 = (1.0 - p1 - p2).max(0.0);
        let ens = Self { rho, k, omega, phi, p1, p2, p3, gamma };
        if ens.source1_len() == 0 {
            return Err(CodecError::InvalidEnsemble(format!(
                "rho * k = {} rounds to an empty source-1 block",
                rho * k as f64
            )));
        }
        Ok(ens)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn omega(&self) -> &DegreeDistribution {
        &self.omega
    }
    pub fn phi(&self) -> &DegreeDistribution {
        &self.phi
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }
    pub fn p2(&self) -> f64 {
        self.p2
    }
    pub fn p3(&self) -> f64 {
        self.p3
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, CodecError> {
        Self::new(self.rho, self.k, self.omega.clone(), self.phi.clone(), self.p1, self.p2, gamma)
    }

    pub fn with_k(&self, k: usize) -> Result<Self, CodecError> {
        Self::new(self.rho, k, self.omega.clone(), self.phi.clone(), self.p1, self.p2, self.gamma)
    }

    /// Source-1 block length `round(ρk)`.
    pub fn source1_len(&self) -> usize {
        round_half_up(self.rho * self.k as f64)
    }

    /// Source-2 block length `k`.
    pub fn source2_len(&self) -> usize {
        self.k
    }

    /// Number of check nodes collected at the destination, `round((1+ρ)γk)`.
    pub fn received_count(&self) -> usize {
        round_half_up((1.0 + self.rho) * self.gamma * self.k as f64)
    }

    /// Fails if either distribution has a degree larger than its block.
    pub fn check_block_lengths(&self) -> Result<(), CodecError> {
        let n1 = self.source1_len();
        if self.omega.max_degree() > n1 {
            return Err(CodecError::DegreeExceedsBlock { degree: self.omega.max_degree(), block_len: n1 });
        }
        if self.phi.max_degree() > self.k {
            return Err(CodecError::DegreeExceedsBlock { degree: self.phi.max_degree(), block_len: self.k });
        }
        Ok(())
    }
}

fn round_half_up(x: f64) -> usize {
    // Absorb representation error such as 2.0 * 1.05 * 1000 = 2100.0000000000005
    // or 0.3 * 5 = 1.4999999999999998 before rounding.
    let snapped = (x * 1e9).round() / 1e9;
    (snapped + 0.5).floor().max(0.0) as usize
}

/// Draws a degree from `dist` and a uniform subset of that many distinct
/// indices from `0..block_len`, returned in increasing order.
pub fn encode_symbol<R: Rng + ?Sized>(
    block_len: usize,
    dist: &DegreeDistribution,
    rng: &mut R,
) -> Result<Vec<usize>, CodecError> {
    if dist.max_degree() > block_len {
        return Err(CodecError::DegreeExceedsBlock { degree: dist.max_degree(), block_len });
    }
    let d = dist.sample(rng);
    let mut picked = index::sample(rng, block_len, d).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Forwarded1,
    Forwarded2,
    Combined,
}

/// A received output symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckNode<S = u8> {
    pub source1: Vec<usize>,
    pub source2: Vec<usize>,
    pub value: S,
}

impl<S> CheckNode<S> {
    pub fn kind(&self) -> Option<CheckKind> {
        match (self.source1.is_empty(), self.source2.is_empty()) {
            (false, true) => Some(CheckKind::Forwarded1),
            (true, false) => Some(CheckKind::Forwarded2),
            (false, false) => Some(CheckKind::Combined),
            (true, true) => None,
        }
    }

    pub fn degree(&self) -> usize {
        self.source1.len() + self.source2.len()
    }
}

impl CheckNode<()> {
    /// Fills in the check value as the XOR of the neighbor payloads.
    pub fn with_payloads<S: Symbol>(self, payloads1: &[S], payloads2: &[S]) -> CheckNode<S> {
        let value = self
            .source1
            .iter()
            .map(|&i| payloads1[i])
            .chain(self.source2.iter().map(|&j| payloads2[j]))
            .fold(S::default(), |acc, v| acc ^ v);
        CheckNode { source1: self.source1, source2: self.source2, value }
    }
}

/// One relay output: forward a fresh source-1 symbol with probability `p1`,
/// a fresh source-2 symbol with probability `p2`, otherwise the XOR of one
/// fresh symbol from each source.
pub fn relay_step<R: Rng + ?Sized>(ensemble: &CodeEnsemble, rng: &mut R) -> Result<CheckNode<()>, CodecError> {
    let n1 = ensemble.source1_len();
    let n2 = ensemble.source2_len();
    let u: f64 = rng.gen();
    let (source1, source2) = if u < ensemble.p1 {
        (encode_symbol(n1, &ensemble.omega, rng)?, Vec::new())
    } else if u < ensemble.p1 + ensemble.p2 {
        (Vec::new(), encode_symbol(n2, &ensemble.phi, rng)?)
    } else {
        let s1 = encode_symbol(n1, &ensemble.omega, rng)?;
        (s1, encode_symbol(n2, &ensemble.phi, rng)?)
    };
    Ok(CheckNode { source1, source2, value: () })
}

/// Received bipartite graph at the destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph<S>", bound(deserialize = "S: Deserialize<'de> + Symbol"))]
pub struct DecoderGraph<S = u8> {
    n1: usize,
    n2: usize,
    checks: Vec<CheckNode<S>>,
}

#[derive(Deserialize)]
struct RawGraph<S> {
    n1: usize,
    n2: usize,
    checks: Vec<CheckNode<S>>,
}

impl<S: Symbol> TryFrom<RawGraph<S>> for DecoderGraph<S> {
    type Error = CodecError;
    fn try_from(raw: RawGraph<S>) -> Result<Self, CodecError> {
        DecoderGraph::new(raw.n1, raw.n2, raw.checks)
    }
}

impl<S: Symbol> DecoderGraph<S> {
    /// Validates neighbor indices and uniqueness.
    pub fn new(n1: usize, n2: usize, checks: Vec<CheckNode<S>>) -> Result<Self, CodecError> {
        for (c, check) in checks.iter().enumerate() {
            if check.kind().is_none() {
                return Err(CodecError::InvalidGraph(format!("check {c} has no neighbors")));
            }
            for (block, list, n) in [(1, &check.source1, n1), (2, &check.source2, n2)] {
                let mut sorted = list.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(CodecError::InvalidGraph(format!("check {c} lists a source-{block} neighbor twice")));
                }
                if let Some(&bad) = sorted.last().filter(|&&i| i >= n) {
                    return Err(CodecError::InvalidGraph(format!(
                        "check {c} references source-{block} symbol {bad} but the block has {n}"
                    )));
                }
            }
        }
        Ok(Self { n1, n2, checks })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn checks(&self) -> &[CheckNode<S>] {
        &self.checks
    }

    pub fn push(&mut self, check: CheckNode<S>) -> Result<(), CodecError> {
        let probe = DecoderGraph::new(self.n1, self.n2, vec![check])?;
        self.checks.extend(probe.checks);
        Ok(())
    }

    /// Peels with a FIFO ripple.
    pub fn peel(&self) -> Decoded<S> {
        self.peel_with(PeelOrder::Fifo, None)
    }

    /// Peels, processing releasable checks in an order chosen by `rng`.
    /// The recovered set does not depend on the order.
    pub fn peel_shuffled<R: Rng>(&self, rng: &mut R) -> Decoded<S> {
        self.peel_with(PeelOrder::Random(rng), None)
    }

    /// Peels and records every resolution step.
    pub fn peel_traced(&self) -> (Decoded<S>, Vec<PeelStep>) {
        let mut trace = Vec::new();
        let decoded = self.peel_with(PeelOrder::Fifo, Some(&mut trace));
        (decoded, trace)
    }

    fn peel_with(&self, mut order: PeelOrder<'_>, mut trace: Option<&mut Vec<PeelStep>>) -> Decoded<S> {
        let n1 = self.n1;
        let nvars = n1 + self.n2;
        let var_of = |check: &CheckNode<S>| {
            check.source1.iter().copied().chain(check.source2.iter().map(move |&j| n1 + j)).collect::<Vec<_>>()
        };

        // CSR adjacency from variables to checks.
        let mut offsets = vec![0usize; nvars + 1];
        for check in &self.checks {
            for v in var_of(check) {
                offsets[v + 1] += 1;
            }
        }
        for v in 0..nvars {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0usize; offsets[nvars]];
        for (c, check) in self.checks.iter().enumerate() {
            for v in var_of(check) {
                adj[fill[v]] = c;
                fill[v] += 1;
            }
        }

        let mut unknown: Vec<usize> = self.checks.iter().map(|c| c.degree()).collect();
        let mut acc: Vec<S> = self.checks.iter().map(|c| c.value).collect();
        let mut known = vec![false; nvars];
        let mut values = vec![S::default(); nvars];

        let mut ripple: VecDeque<usize> = (0..self.checks.len()).filter(|&c| unknown[c] == 1).collect();
        while let Some(c) = order.next(&mut ripple) {
            if unknown[c] != 1 {
                continue;
            }
            let check = &self.checks[c];
            let v = var_of(check).into_iter().find(|&v| !known[v]).expect("check with one unknown neighbor");
            let value = acc[c];
            known[v] = true;
            values[v] = value;
            if let Some(t) = trace.as_deref_mut() {
                let (block, symbol) = if v < n1 { (1, v) } else { (2, v - n1) };
                t.push(PeelStep { check: c, block, symbol });
            }
            for &c2 in &adj[offsets[v]..offsets[v + 1]] {
                acc[c2] = acc[c2] ^ value;
                unknown[c2] -= 1;
                if unknown[c2] == 1 {
                    ripple.push_back(c2);
                }
            }
        }

        let values2 = values.split_off(n1);
        let recovered2 = known.split_off(n1);
        Decoded { recovered1: known, recovered2, values1: values, values2 }
    }
}

enum PeelOrder<'a> {
    Fifo,
    Random(&'a mut dyn rand::RngCore),
}

impl PeelOrder<'_> {
    fn next(&mut self, ripple: &mut VecDeque<usize>) -> Option<usize> {
        match self {
            PeelOrder::Fifo => ripple.pop_front(),
            PeelOrder::Random(rng) => {
                if ripple.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..ripple.len());
                    ripple.swap_remove_back(i)
                }
            }
        }
    }
}

/// Outcome of peeling: recovery flags and recovered payloads per block.
/// Payload entries for unrecovered symbols are `S::default()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded<S = u8> {
    pub recovered1: Vec<bool>,
    pub recovered2: Vec<bool>,
    pub values1: Vec<S>,
    pub values2: Vec<S>,
}

impl<S> Decoded<S> {
    /// Fraction of unrecovered symbols in each block.
    pub fn empirical_ber(&self) -> (f64, f64) {
        (unrecovered_fraction(&self.recovered1), unrecovered_fraction(&self.recovered2))
    }
}

fn unrecovered_fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&r| !r).count() as f64 / flags.len() as f64
}

/// One peeling resolution: `check` released `symbol` of source `block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelStep {
    pub check: usize,
    pub block: u8,
    pub symbol: usize,
}

/// Writes a peeling trace as CSV with header `check,block,symbol`.
pub fn write_trace_csv<W: Write>(steps: &[PeelStep], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for step in steps {
        w.serialize(step)?;
    }
    w.flush()?;
    Ok(())
}

/// Produces the `round((1+ρ)γk)` checks collected at the destination, with
/// values XORed from the given payload blocks.
pub fn generate_received<S: Symbol, R: Rng + ?Sized>(
    ensemble: &CodeEnsemble,
    payloads1: &[S],
    payloads2: &[S],
    rng: &mut R,
) -> Result<DecoderGraph<S>, CodecError> {
    let n1 = ensemble.source1_len();
    let n2 = ensemble.source2_len();
    if payloads1.len() != n1 {
        return Err(CodecError::PayloadLength { block: 1, got: payloads1.len(), expected: n1 });
    }
    if payloads2.len() != n2 {
        return Err(CodecError::PayloadLength { block: 2, got: payloads2.len(), expected: n2 });
    }
    ensemble.check_block_lengths()?;
    let count = ensemble.received_count();
    let mut checks = Vec::with_capacity(count);
    for _ in 0..count {
        checks.push(relay_step(ensemble, rng)?.with_payloads(payloads1, payloads2));
    }
    Ok(DecoderGraph { n1, n2, checks })
}
