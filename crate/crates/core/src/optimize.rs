//! NSGA-II design of `(Ω, φ, p1, p2)` against the two residual error rates.
//!
//! A genome holds `B1 + B2 + 2` genes in `[0, 1]`: unnormalized weights for
//! the two degree distributions followed by the raw relay probabilities.
//! Every genome is repaired into a valid ensemble before evaluation, so all
//! objective values are genuine fixed-point error rates.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, FixedPointOptions};
use crate::codec::{CodeEnsemble, CodecError, PROB_SUM_TOL};
use crate::degree::{DegreeDistribution, DegreeError};
use crate::seed;
use crate::spec::EnsembleSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("{block} weight block has no positive mass")]
    AllZeroBlock { block: &'static str },
    #[error("genome has {got} genes, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("front is empty")]
    EmptyFront,
    #[error("invalid target eta {0}")]
    InvalidEta(f64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Problem constants of one design run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub rho: f64,
    /// Block length attached to decoded ensembles; the asymptotic objective
    /// does not depend on it.
    pub k: usize,
    pub gamma: f64,
    pub b1: usize,
    pub b2: usize,
}

impl Problem {
    pub fn dimension(&self) -> usize {
        self.b1 + self.b2 + 2
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(OptimizeError::InvalidProblem(format!("rho = {} must lie in (0, 1]", self.rho)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(OptimizeError::InvalidProblem(format!("gamma = {} must be positive", self.gamma)));
        }
        if self.b1 == 0 || self.b2 == 0 {
            return Err(OptimizeError::InvalidProblem("B1 and B2 must be positive".into()));
        }
        if self.k == 0 || (self.rho * self.k as f64).round() < 1.0 {
            return Err(OptimizeError::InvalidProblem(format!("rho * k must be at least 1 (k = {})", self.k)));
        }
        Ok(())
    }
}

/// Genetic-algorithm settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Distribution index of simulated binary crossover.
    pub sbx_eta: f64,
    /// Distribution index of polynomial mutation.
    pub mutation_eta: f64,
    /// Per-gene mutation probability; `None` means `1 / dimension`.
    pub mutation_prob: Option<f64>,
    /// Measure crowding on `ln BER` instead of `BER`.
    pub log_crowding: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 200,
            crossover_prob: 0.9,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            mutation_prob: None,
            log_crowding: false,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.population < 2 {
            return Err(OptimizeError::InvalidConfig("population must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(OptimizeError::InvalidConfig("crossover probability must lie in [0, 1]".into()));
        }
        if !(self.sbx_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err(OptimizeError::InvalidConfig("distribution indices must be non-negative".into()));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(OptimizeError::InvalidConfig("mutation probability must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub omega_weights: Vec<f64>,
    pub phi_weights: Vec<f64>,
    pub p1_raw: f64,
    pub p2_raw: f64,
}

impl Genome {
    /// Splits a flat gene vector laid out as `[Ω weights, φ weights, p1, p2]`.
    pub fn from_genes(genes: &[f64], b1: usize, b2: usize) -> Result<Self, OptimizeError> {
        if genes.len() != b1 + b2 + 2 {
            return Err(OptimizeError::Dimension { got: genes.len(), expected: b1 + b2 + 2 });
        }
        Ok(Self {
            omega_weights: genes[..b1].to_vec(),
            phi_weights: genes[b1..b1 + b2].to_vec(),
            p1_raw: genes[b1 + b2],
            p2_raw: genes[b1 + b2 + 1],
        })
    }

    pub fn genes(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.dimension());
        g.extend_from_slice(&self.omega_weights);
        g.extend_from_slice(&self.phi_weights);
        g.push(self.p1_raw);
        g.push(self.p2_raw);
        g
    }

    pub fn dimension(&self) -> usize {
        self.omega_weights.len() + self.phi_weights.len() + 2
    }

    /// Clips negative genes to zero, normalizes each weight block, and
    /// scales `(p1, p2)` down onto the simplex when their sum exceeds one.
    pub fn repair(&self) -> Result<Genome, OptimizeError> {
        Ok(Genome {
            omega_weights: repair_block(&self.omega_weights, "omega")?,
            phi_weights: repair_block(&self.phi_weights, "phi")?,
            p1_raw: 0.0,
            p2_raw: 0.0,
        }
        .with_relay(self.p1_raw, self.p2_raw))
    }

    fn with_relay(mut self, p1: f64, p2: f64) -> Self {
        let (p1, p2) = (p1.max(0.0), p2.max(0.0));
        let s = p1 + p2;
        // Rescaled sums can land an ulp above one; the slack keeps repair
        // idempotent.
        (self.p1_raw, self.p2_raw) = if s > 1.0 + PROB_SUM_TOL { (p1 / s, p2 / s) } else { (p1, p2) };
        self
    }

    /// Repairs and converts into a code ensemble.
    pub fn decode(&self, rho: f64, k: usize, gamma: f64) -> Result<CodeEnsemble, OptimizeError> {
        let g = self.repair()?;
        let omega = DegreeDistribution::new(&g.omega_weights)?;
        let phi = DegreeDistribution::new(&g.phi_weights)?;
        Ok(CodeEnsemble::new(rho, k, omega, phi, g.p1_raw, g.p2_raw, gamma)?)
    }

    /// Genome whose decoded ensemble reproduces `ensemble`.
    pub fn from_ensemble(ensemble: &CodeEnsemble, b1: usize, b2: usize) -> Result<Self, OptimizeError> {
        let pad = |probs: &[f64], b: usize| -> Result<Vec<f64>, OptimizeError> {
            if probs.len() > b {
                return Err(OptimizeError::InvalidProblem(format!(
                    "distribution of max degree {} does not fit B = {b}",
                    probs.len()
                )));
            }
            let mut v = probs.to_vec();
            v.resize(b, 0.0);
            Ok(v)
        };
        Ok(Self {
            omega_weights: pad(ensemble.omega().probs(), b1)?,
            phi_weights: pad(ensemble.phi().probs(), b2)?,
            p1_raw: ensemble.p1(),
            p2_raw: ensemble.p2(),
        })
    }
}

fn repair_block(weights: &[f64], block: &'static str) -> Result<Vec<f64>, OptimizeError> {
    let clipped: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w } else { 0.0 }).collect();
    let sum: f64 = clipped.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(OptimizeError::AllZeroBlock { block });
    }
    if (sum - 1.0).abs() <= 1e-12 {
        return Ok(clipped);
    }
    Ok(clipped.into_iter().map(|w| w / sum).collect())
}

/// An evaluated genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub genome: Genome,
    pub ber1: f64,
    pub ber2: f64,
    /// `ber2 / ber1`; infinite when `ber1` is zero.
    pub eta: f64,
    pub converged: bool,
}

impl DesignPoint {
    /// False for placeholders standing in for genomes that failed repair.
    pub fn feasible(&self) -> bool {
        self.genome.repair().is_ok()
    }

    pub fn objectives(&self) -> [f64; 2] {
        [self.ber1, self.ber2]
    }
}

pub fn eta_of(ber1: f64, ber2: f64) -> f64 {
    if ber1 > 0.0 {
        ber2 / ber1
    } else {
        f64::INFINITY
    }
}

/// Evaluates the asymptotic error rates of a genome.
pub fn evaluate(genome: &Genome, problem: &Problem) -> Result<DesignPoint, OptimizeError> {
    let ensemble = genome.decode(problem.rho, problem.k, problem.gamma)?;
    let fp = analysis::fixed_point(&ensemble, &FixedPointOptions::default());
    Ok(DesignPoint {
        genome: genome.repair()?,
        ber1: fp.ber1,
        ber2: fp.ber2,
        eta: eta_of(fp.ber1, fp.ber2),
        converged: fp.converged,
    })
}

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Fast non-dominated sort. Returns fronts as index lists, best first;
/// indices within a front are increasing.
pub fn nondominated_sort(objs: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objs[i], &objs[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if dominates(&objs[j], &objs[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of a front. Boundary points of each
/// objective get infinity; interior points accumulate the normalized gap
/// between their neighbors.
pub fn crowding_distance(front: &[[f64; 2]]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in [0, 1] {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]).then(a.cmp(&b)));
        let lo = front[order[0]][m];
        let hi = front[order[n - 1]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            dist[w[1]] += (front[w[2]][m] - front[w[0]][m]) / span;
        }
    }
    dist
}

/// Area dominated by a set of points and bounded by `reference`.
pub fn hypervolume(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> =
        points.iter().copied().filter(|p| p[0] < reference[0] && p[1] < reference[1]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Mutually non-dominated design points, sorted by `ber1` ascending (and
/// therefore `ber2` descending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    points: Vec<DesignPoint>,
}

impl ParetoFront {
    /// Keeps the non-dominated subset of `points`, dropping repeated
    /// objective vectors.
    pub fn from_points(mut points: Vec<DesignPoint>) -> Self {
        // Sweep in (ber1, ber2) order: a point survives iff its ber2 is
        // strictly below every ber2 seen so far.
        points.sort_by(|a, b| a.ber1.total_cmp(&b.ber1).then(a.ber2.total_cmp(&b.ber2)));
        let mut best_ber2 = f64::INFINITY;
        points.retain(|p| {
            let keep = p.ber2 < best_ber2;
            if keep {
                best_ber2 = p.ber2;
            }
            keep
        });
        Self { points }
    }

    /// Adds points, keeping only the non-dominated set. Points already in
    /// the front win ties with new points of equal objectives.
    pub fn merge(&mut self, points: impl IntoIterator<Item = DesignPoint>) {
        let mut all = std::mem::take(&mut self.points);
        all.extend(points);
        *self = Self::from_points(all);
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(DesignPoint::objectives).collect()
    }

    pub fn hypervolume(&self) -> f64 {
        hypervolume(&self.objectives(), [1.0, 1.0])
    }

    /// Point whose η is closest to `target_eta` in log space.
    pub fn select_by_eta(&self, target_eta: f64) -> Result<&DesignPoint, OptimizeError> {
        let idx = select_by_eta(&self.objectives(), target_eta)?;
        Ok(&self.points[idx])
    }
}

/// Index minimizing `|ln(ber2/ber1) - ln(target)|`; ties (within 1e-12)
/// go to the smaller `ber1`.
pub fn select_by_eta(objs: &[[f64; 2]], target_eta: f64) -> Result<usize, OptimizeError> {
    if !(target_eta > 0.0 && target_eta.is_finite()) {
        return Err(OptimizeError::InvalidEta(target_eta));
    }
    let target = target_eta.ln();
    let score = |o: &[f64; 2]| {
        let d = (eta_of(o[0], o[1]).ln() - target).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, o) in objs.iter().enumerate() {
        let s = score(o);
        best = match best {
            None => Some((i, s)),
            Some((b, bs)) => {
                let tie = (s - bs).abs() <= 1e-12 || (s.is_infinite() && bs.is_infinite());
                if (!tie && s < bs) || (tie && o[0] < objs[b][0]) {
                    Some((i, s))
                } else {
                    Some((b, bs))
                }
            }
        };
    }
    best.map(|(i, _)| i).ok_or(OptimizeError::EmptyFront)
}

/// Per-generation progress of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Size of the elite archive.
    pub front_size: usize,
    /// Hypervolume of the elite archive, reference point `(1, 1)`.
    pub hypervolume: f64,
    /// Size of the current population's first front.
    pub population_front_size: usize,
    pub population_hypervolume: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub front: ParetoFront,
    pub history: Vec<GenerationStats>,
}

struct Ranked {
    rank: usize,
    crowding: f64,
}

/// Objective vector in the space where crowding is measured.
fn crowding_space(o: [f64; 2], log: bool) -> [f64; 2] {
    if log {
        o.map(|v| v.max(f64::MIN_POSITIVE).ln())
    } else {
        o
    }
}

fn rank_population(objs: &[[f64; 2]], log: bool) -> Vec<Ranked> {
    let mut out: Vec<Ranked> = (0..objs.len()).map(|_| Ranked { rank: 0, crowding: 0.0 }).collect();
    for (r, front) in nondominated_sort(objs).into_iter().enumerate() {
        let sub: Vec<[f64; 2]> = front.iter().map(|&i| crowding_space(objs[i], log)).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&sub)) {
            out[i] = Ranked { rank: r, crowding: d };
        }
    }
    out
}

fn evaluate_or_worst(genes: &[f64], problem: &Problem) -> DesignPoint {
    let genome = Genome::from_genes(genes, problem.b1, problem.b2).expect("gene vector of problem dimension");
    evaluate(&genome, problem).unwrap_or(DesignPoint { genome, ber1: 1.0, ber2: 1.0, eta: 1.0, converged: true })
}

fn tournament<R: Rng>(ranks: &[Ranked], rng: &mut R) -> usize {
    let a = rng.gen_range(0..ranks.len());
    let b = rng.gen_range(0..ranks.len());
    let (ra, rb) = (&ranks[a], &ranks[b]);
    if ra.rank < rb.rank || (ra.rank == rb.rank && ra.crowding > rb.crowding) {
        a
    } else if rb.rank < ra.rank || (ra.rank == rb.rank && rb.crowding > ra.crowding) {
        b
    } else if rng.gen::<bool>() {
        a
    } else {
        b
    }
}

/// Simulated binary crossover on genes bounded to `[0, 1]`.
fn sbx<R: Rng>(x1: &mut [f64], x2: &mut [f64], eta: f64, rng: &mut R) {
    const LO: f64 = 0.0;
    const HI: f64 = 1.0;
    for i in 0..x1.len() {
        if rng.gen::<f64>() > 0.5 || (x1[i] - x2[i]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if x1[i] < x2[i] { (x1[i], x2[i]) } else { (x2[i], x1[i]) };
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - LO) / (y2 - y1);
        let c1 = 0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1));
        let beta_hi = 1.0 + 2.0 * (HI - y2) / (y2 - y1);
        let c2 = 0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1));
        let (c1, c2) = (c1.clamp(LO, HI), c2.clamp(LO, HI));
        if rng.gen::<bool>() {
            x1[i] = c2;
            x2[i] = c1;
        } else {
            x1[i] = c1;
            x2[i] = c2;
        }
    }
}

/// Polynomial mutation on genes bounded to `[0, 1]`.
fn polynomial_mutation<R: Rng>(x: &mut [f64], prob: f64, eta: f64, rng: &mut R) {
    for v in x.iter_mut() {
        if rng.gen::<f64>() >= prob {
            continue;
        }
        let y = *v;
        let (d1, d2) = (y, 1.0 - y);
        let u: f64 = rng.gen();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let xy = 1.0 - d1;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = 1.0 - d2;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (y + dq).clamp(0.0, 1.0);
    }
}

/// Runs NSGA-II and returns the elite archive: every non-dominated design
/// evaluated during the run, which contains or dominates the first front
/// of the final population.
///
/// Random streams are addressed by `(seed, generation, pair index)`, so a
/// run is reproducible regardless of thread count.
pub fn evolve(problem: &Problem, config: &GaConfig) -> Result<Evolution, OptimizeError> {
    problem.validate()?;
    config.validate()?;
    let n = config.population;
    let dim = problem.dimension();
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / dim as f64);

    let init: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = seed::stream(config.seed, &[0, i as u64]);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        })
        .collect();
    let mut pop: Vec<DesignPoint> = init.par_iter().map(|g| evaluate_or_worst(g, problem)).collect();
    let mut objs: Vec<[f64; 2]> = pop.iter().map(DesignPoint::objectives).collect();
    let mut ranks = rank_population(&objs, config.log_crowding);

    let mut archive = ParetoFront::from_points(Vec::new());
    archive.merge(pop.iter().filter(|p| p.feasible()).cloned());

    let stats = |gen: usize, objs: &[[f64; 2]], ranks: &[Ranked], archive: &ParetoFront| {
        let first: Vec<[f64; 2]> = objs.iter().zip(ranks).filter(|(_, r)| r.rank == 0).map(|(o, _)| *o).collect();
        GenerationStats {
            generation: gen,
            front_size: archive.len(),
            hypervolume: archive.hypervolume(),
            population_front_size: first.len(),
            population_hypervolume: hypervolume(&first, [1.0, 1.0]),
        }
    };
    let mut history = vec![stats(0, &objs, &ranks, &archive)];

    for gen in 1..=config.generations {
        let pairs = n.div_ceil(2);
        let children: Vec<Vec<f64>> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|p| {
                let mut rng = seed::stream(config.seed, &[gen as u64, p as u64]);
                let a = tournament(&ranks, &mut rng);
                let b = tournament(&ranks, &mut rng);
                let mut c1 = pop[a].genome.genes();
                let mut c2 = pop[b].genome.genes();
                if rng.gen::<f64>() < config.crossover_prob {
                    sbx(&mut c1, &mut c2, config.sbx_eta, &mut rng);
                }
                polynomial_mutation(&mut c1, mutation_prob, config.mutation_eta, &mut rng);
                polynomial_mutation(&mut c2, mutation_prob, config.mutation_eta, &mut rng);
                [c1, c2]
            })
            .collect();
        let offspring: Vec<DesignPoint> = children[..n].par_iter().map(|g| evaluate_or_worst(g, problem)).collect();

        archive.merge(offspring.iter().filter(|p| p.feasible()).cloned());

        let mut combined = std::mem::take(&mut pop);
        combined.extend(offspring);
        let combined_objs: Vec<[f64; 2]> = combined.iter().map(DesignPoint::objectives).collect();

        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        for front in nondominated_sort(&combined_objs) {
            if chosen.len() + front.len() <= n {
                chosen.extend(front);
                if chosen.len() == n {
                    break;
                }
                continue;
            }
            let sub: Vec<[f64; 2]> =
                front.iter().map(|&i| crowding_space(combined_objs[i], config.log_crowding)).collect();
            let crowd = crowding_distance(&sub);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            let room = n - chosen.len();
            chosen.extend(order.into_iter().take(room).map(|i| front[i]));
            break;
        }
        chosen.sort_unstable();

        let mut slots: Vec<Option<DesignPoint>> = combined.into_iter().map(Some).collect();
        pop = chosen.iter().map(|&i| slots[i].take().unwrap()).collect();
        objs = pop.iter().map(DesignPoint::objectives).collect();
        ranks = rank_population(&objs, config.log_crowding);
        history.push(stats(gen, &objs, &ranks, &archive));
    }

    Ok(Evolution { front: archive, history })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct FrontRow {
    ber1: f64,
    ber2: f64,
    eta: f64,
}

/// CSV with header `ber1,ber2,eta`, one row per front point.
pub fn write_front_csv<W: Write>(front: &ParetoFront, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in front.points() {
        w.serialize(FrontRow { ber1: p.ber1, ber2: p.ber2, eta: p.eta })?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with header
/// `generation,front_size,hypervolume,population_front_size,population_hypervolume`.
pub fn write_history_csv<W: Write>(history: &[GenerationStats], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in history {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameter sidecar of an exported front: every point's full ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontParams {
    pub format_version: u32,
    pub problem: Problem,
    pub points: Vec<FrontParamsPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontParamsPoint {
    pub ber1: f64,
    pub ber2: f64,
    /// `None` when `ber1` is zero.
    pub eta: Option<f64>,
    pub ensemble: EnsembleSpec,
}

impl FrontParams {
    pub fn from_front(front: &ParetoFront, problem: &Problem) -> Result<Self, OptimizeError> {
        let points = front
            .points()
            .iter()
            .map(|p| {
                let ensemble = p.genome.decode(problem.rho, problem.k, problem.gamma)?;
                Ok(FrontParamsPoint {
                    ber1: p.ber1,
                    ber2: p.ber2,
                    eta: p.eta.is_finite().then_some(p.eta),
                    ensemble: EnsembleSpec::from_ensemble(&ensemble, false),
                })
            })
            .collect::<Result<Vec<_>, OptimizeError>>()?;
        Ok(Self { format_version: crate::FORMAT_VERSION, problem: *problem, points })
    }

    pub fn objectives(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.ber1, p.ber2]).collect()
    }

    pub fn select_by_eta(&self, target_eta: f64) -> Result<&FrontParamsPoint, OptimizeError> {
        let idx = select_by_eta(&self.objectives(), target_eta)?;
        Ok(&self.points[idx])
    }
}
