#![allow(dead_code)]

use durateless::{CodeEnsemble, EnsembleSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const PUBLISHED: &str = include_str!("../../../../fixtures/published_eta10.json");
pub const DEGREE_ONE: &str = include_str!("../../../../fixtures/eep_degree_one.json");

pub fn load(json: &str) -> CodeEnsemble {
    EnsembleSpec::from_json(json).unwrap().to_ensemble(2000).unwrap()
}

/// Pearson chi-square p-value of `counts` against `probs`. Cells with an
/// expected count below 5 are pooled into one cell.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * n as f64;
        if expected < 5.0 {
            assert!(p > 0.0 || c == 0, "draw in a zero-probability cell");
            pooled_obs += c as f64;
            pooled_exp += expected;
            continue;
        }
        stat += (c as f64 - expected).powi(2) / expected;
        cells += 1;
    }
    if pooled_exp >= 5.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    assert!(cells >= 2, "too few cells for a chi-square test");
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// A random valid ensemble with max degrees up to `max_b`.
pub fn random_ensemble<R: rand::Rng>(rng: &mut R, max_b: usize) -> CodeEnsemble {
    use durateless::DegreeDistribution;
    let weights = |rng: &mut R| {
        let b = rng.gen_range(1..=max_b);
        let mut w: Vec<f64> = (0..b).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() }).collect();
        w[b - 1] += 0.05;
        DegreeDistribution::new(&w).unwrap()
    };
    let omega = weights(rng);
    let phi = weights(rng);
    let p1 = rng.gen::<f64>();
    let p2 = rng.gen::<f64>() * (1.0 - p1);
    let rho = rng.gen_range(0.2..=1.0);
    let gamma = rng.gen_range(0.3..2.0);
    CodeEnsemble::new(rho, 2000, omega, phi, p1, p2, gamma).unwrap()
}
