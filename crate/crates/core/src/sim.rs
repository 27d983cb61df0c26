//! Monte Carlo evaluation of finite-length codes.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, FixedPointOptions};
use crate::codec::{self, CodeEnsemble, CodecError};
use crate::seed;

/// Analytical rates at or below this are reported but not judged.
pub const JUDGED_BER_FLOOR: f64 = 1e-3;
/// Relative slack allowed between simulation and analysis.
pub const RELATIVE_SLACK: f64 = 0.25;
/// Standard errors allowed between simulation and analysis.
pub const STDERR_SLACK: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatchResult {
    pub ensemble: CodeEnsemble,
    pub k: usize,
    pub trials: usize,
    pub ber1_mean: f64,
    pub ber1_stderr: f64,
    pub ber2_mean: f64,
    pub ber2_stderr: f64,
    pub seed: u64,
}

/// Empirical error rates of one encode/relay/decode trial.
pub fn run_trial<R: Rng>(ensemble: &CodeEnsemble, rng: &mut R) -> Result<(f64, f64), CodecError> {
    let payloads1: Vec<u8> = (0..ensemble.source1_len()).map(|_| rng.gen()).collect();
    let payloads2: Vec<u8> = (0..ensemble.source2_len()).map(|_| rng.gen()).collect();
    let graph = codec::generate_received(ensemble, &payloads1, &payloads2, rng)?;
    let decoded = graph.peel();
    debug_assert!(decoded
        .recovered1
        .iter()
        .zip(decoded.values1.iter().zip(&payloads1))
        .all(|(&r, (v, p))| !r || v == p));
    debug_assert!(decoded
        .recovered2
        .iter()
        .zip(decoded.values2.iter().zip(&payloads2))
        .all(|(&r, (v, p))| !r || v == p));
    Ok(decoded.empirical_ber())
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent trials at block length `k`. Trial `t` draws
/// from the stream `(seed, t)`, so results are reproducible and a larger
/// batch extends a smaller one.
pub fn run_trials(ensemble: &CodeEnsemble, k: usize, trials: usize, seed: u64) -> Result<TrialBatchResult, CodecError> {
    if trials == 0 {
        return Err(CodecError::InvalidEnsemble("at least one trial is required".into()));
    }
    let ensemble = ensemble.with_k(k)?;
    ensemble.check_block_lengths()?;
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(&ensemble, &mut seed::stream(seed, &[t as u64])))
        .collect::<Result<_, _>>()?;
    let (b1, b2): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    let (ber1_mean, ber1_stderr) = mean_and_stderr(&b1);
    let (ber2_mean, ber2_stderr) = mean_and_stderr(&b2);
    Ok(TrialBatchResult { ensemble, k, trials, ber1_mean, ber1_stderr, ber2_mean, ber2_stderr, seed })
}

/// Seed used for overhead `gamma` under base seed `seed`.
pub fn gamma_seed(seed: u64, gamma: f64) -> u64 {
    seed::derive_seed(seed, &[gamma.to_bits()])
}

/// Runs a batch per overhead, rows sorted by `γ`. Each point's seed
/// depends only on the base seed and its `γ`.
pub fn sweep_gamma(
    ensemble: &CodeEnsemble,
    k: usize,
    gamma_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialBatchResult>, CodecError> {
    let mut grid = gamma_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.iter().map(|&g| run_trials(&ensemble.with_gamma(g)?, k, trials, gamma_seed(seed, g))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Analytical rate too small to judge.
    Na,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub gamma: f64,
    pub k: usize,
    pub trials: usize,
    pub ber1_mean: f64,
    pub ber1_stderr: f64,
    pub ber2_mean: f64,
    pub ber2_stderr: f64,
    pub analytical_ber1: f64,
    pub analytical_ber2: f64,
    #[serde(skip)]
    pub z1: f64,
    #[serde(skip)]
    pub z2: f64,
    pub pass1: Verdict,
    pub pass2: Verdict,
}

fn z_score(empirical: f64, analytical: f64, stderr: f64) -> f64 {
    let diff = empirical - analytical;
    if diff == 0.0 {
        0.0
    } else if stderr > 0.0 {
        diff / stderr
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn verdict(empirical: f64, analytical: f64, stderr: f64) -> Verdict {
    if analytical <= JUDGED_BER_FLOOR {
        return Verdict::Na;
    }
    let allowed = (STDERR_SLACK * stderr).max(RELATIVE_SLACK * analytical);
    if (empirical - analytical).abs() <= allowed {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Compares a batch with the fixed point of the ensemble it simulated.
pub fn compare_with_analysis(batch: &TrialBatchResult) -> ComparisonRow {
    compare_against(batch, &batch.ensemble)
}

/// Compares a batch with the fixed point of `reference`, which need not be
/// the simulated ensemble.
pub fn compare_against(batch: &TrialBatchResult, reference: &CodeEnsemble) -> ComparisonRow {
    let fp = analysis::fixed_point(reference, &FixedPointOptions::default());
    ComparisonRow {
        gamma: batch.ensemble.gamma(),
        k: batch.k,
        trials: batch.trials,
        ber1_mean: batch.ber1_mean,
        ber1_stderr: batch.ber1_stderr,
        ber2_mean: batch.ber2_mean,
        ber2_stderr: batch.ber2_stderr,
        analytical_ber1: fp.ber1,
        analytical_ber2: fp.ber2,
        z1: z_score(batch.ber1_mean, fp.ber1, batch.ber1_stderr),
        z2: z_score(batch.ber2_mean, fp.ber2, batch.ber2_stderr),
        pass1: verdict(batch.ber1_mean, fp.ber1, batch.ber1_stderr),
        pass2: verdict(batch.ber2_mean, fp.ber2, batch.ber2_stderr),
    }
}

/// CSV with header
/// `gamma,k,trials,ber1_mean,ber1_stderr,ber2_mean,ber2_stderr,analytical_ber1,analytical_ber2,pass1,pass2`.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
