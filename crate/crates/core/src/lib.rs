//! Distributed rateless codes with unequal error protection (DU-rateless).
//!
//! Two sources with block lengths `ρk` and `k` LT-encode their data with
//! their own degree distributions and forward the encoded symbols to a relay.
//! The relay forwards a symbol from source 1 with probability `p1`, from
//! source 2 with probability `p2`, and otherwise XORs one symbol from each
//! source together. The destination runs a peeling decoder over the
//! resulting two-block bipartite graph.
//!
//! The crate is organized as:
//!
//! * [`degree`]: degree distributions, edge-perspective coefficients,
//!   convolution and sampling.
//! * [`codec`]: per-source encoding, the relay and the peeling decoder.
//! * [`analysis`]: asymptotic residual error rates from the two-type And-Or
//!   tree recursion.
//! * [`optimize`]: NSGA-II design of `(Ω, φ, p1, p2)` against the two
//!   residual error rates, Pareto fronts and η-targeted selection.
//! * [`sim`]: Monte Carlo trials and analysis-vs-simulation comparison.
//! * [`spec`]: the JSON file form of an ensemble shared by the tools.

pub mod analysis;
pub mod codec;
pub mod degree;
pub mod optimize;
pub mod seed;
pub mod sim;
pub mod spec;

pub use analysis::{AndOrCoefficients, BerPoint, FixedPoint, FixedPointOptions, FixedPointState};
pub use codec::{CheckKind, CheckNode, CodeEnsemble, CodecError, Decoded, DecoderGraph, Symbol};
pub use degree::{DegreeDistribution, DegreeError};
pub use optimize::{DesignPoint, GaConfig, Genome, OptimizeError, ParetoFront, Problem};
pub use sim::{ComparisonRow, TrialBatchResult};
pub use spec::{EnsembleSpec, SpecError};

/// Version tag written into every file format this crate produces.
pub const FORMAT_VERSION: u32 = 1;
