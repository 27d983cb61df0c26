mod common;

use std::collections::BTreeMap;

use durateless::seed;
use durateless::DegreeDistribution;
use proptest::prelude::*;

fn dist(w: &[f64]) -> DegreeDistribution {
    DegreeDistribution::new(w).unwrap()
}

#[test]
fn sampler_matches_probabilities() {
    let d = dist(&[0.1, 0.45, 0.0, 0.2, 0.05, 0.2]);
    let mut rng = seed::stream(17, &[]);
    let mut counts = vec![0u64; d.max_degree()];
    for _ in 0..1_000_000 {
        counts[d.sample(&mut rng) - 1] += 1;
    }
    assert_eq!(counts[2], 0);
    let p = common::chi_square_p(&counts, d.probs());
    assert!(p > 0.01, "p-value {p}");
}

#[test]
fn published_sampler_matches_probabilities() {
    let e = common::load(common::PUBLISHED);
    let mut rng = seed::stream(18, &[]);
    let phi = e.phi();
    let mut counts = vec![0u64; phi.max_degree()];
    for _ in 0..1_000_000 {
        counts[phi.sample(&mut rng) - 1] += 1;
    }
    let p = common::chi_square_p(&counts, phi.probs());
    assert!(p > 0.01, "p-value {p}");
}

// Sample check degrees, then measure which fraction of all edges lands on
// checks of each degree. The estimate is a ratio of sums; its standard
// error comes from the delta method.
#[test]
fn edge_perspective_matches_monte_carlo() {
    let e = common::load(common::PUBLISHED);
    let phi = e.phi();
    let beta = phi.edge_perspective();
    let n = 1_000_000;
    let mut rng = seed::stream(19, &[]);
    let draws: Vec<usize> = (0..n).map(|_| phi.sample(&mut rng)).collect();
    let total: f64 = draws.iter().map(|&d| d as f64).sum();
    let mean = total / n as f64;
    for (i, &b) in beta.iter().enumerate() {
        let degree = i + 1;
        let edges: f64 = draws.iter().filter(|&&d| d == degree).map(|&d| d as f64).sum();
        let est = edges / total;
        // Var of X - est*Y with X = D·1[D=degree], Y = D.
        let var: f64 = draws
            .iter()
            .map(|&d| {
                let x = if d == degree { d as f64 } else { 0.0 };
                (x - est * d as f64).powi(2)
            })
            .sum::<f64>()
            / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt() / mean;
        assert!((est - b).abs() <= 4.0 * se + 1e-12, "degree {degree}: mc {est} vs {b} (se {se})");
    }
}

#[test]
fn convolve_matches_double_loop() {
    let cases = [
        (vec![0.5, 0.5], vec![1.0]),
        (vec![0.1, 0.0, 0.6, 0.3], vec![0.25, 0.25, 0.0, 0.0, 0.5]),
        (vec![0.0, 0.0, 1.0], vec![0.3, 0.7]),
    ];
    for (a, b) in cases {
        let (da, db) = (dist(&a), dist(&b));
        let mut expected: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, &pa) in a.iter().enumerate() {
            for (j, &pb) in b.iter().enumerate() {
                *expected.entry(i + j + 2).or_default() += pa * pb;
            }
        }
        let got = da.convolve(&db);
        for d in 1..=got.max_degree().max(*expected.keys().last().unwrap()) {
            let want = expected.get(&d).copied().unwrap_or(0.0);
            assert!((got.prob(d) - want).abs() < 1e-12, "degree {d}");
        }
    }
}

/// Standard robust soliton: ideal soliton plus `τ` with `τ(i) = R/(ik)`
/// below the spike `k/R` and `R ln(R/δ)/k` at it, normalized.
fn robust_soliton_oracle(k: usize, c: f64, delta: f64) -> Vec<f64> {
    let kf = k as f64;
    let r = c * (kf / delta).ln() * kf.sqrt();
    let spike = (kf / r) as usize;
    let mut mass = vec![0.0; k + 1];
    mass[1] = 1.0 / kf;
    for (i, m) in mass.iter_mut().enumerate().skip(2) {
        *m = 1.0 / (i as f64 * (i as f64 - 1.0));
    }
    for (i, m) in mass.iter_mut().enumerate().take(spike).skip(1) {
        *m += r / (i as f64 * kf);
    }
    mass[spike] += r * (r / delta).ln() / kf;
    let z: f64 = mass.iter().sum();
    mass[1..].iter().map(|m| m / z).collect()
}

#[test]
fn robust_soliton_matches_second_transcription() {
    for (k, c, delta) in [(1000, 0.05, 0.5), (100, 0.1, 0.5), (5000, 0.03, 0.05)] {
        let got = DegreeDistribution::robust_soliton(k, c, delta).unwrap();
        let want = robust_soliton_oracle(k, c, delta);
        for (d, &w) in want.iter().enumerate() {
            assert!((got.prob(d + 1) - w).abs() < 1e-12, "k={k} degree {}", d + 1);
        }
    }
}

#[test]
fn robust_soliton_small_block() {
    let d = DegreeDistribution::robust_soliton(2, 0.3, 0.1).unwrap();
    assert!(d.max_degree() <= 2);
    assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], 1..40)
        .prop_filter("needs positive mass", |w| w.iter().any(|&x| x > 0.0))
}

proptest! {
    #[test]
    fn normalized_and_edge_perspective_closed(w in weights()) {
        let d = dist(&w);
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((d.edge_perspective().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(d.probs().last().copied().unwrap() > 0.0);
    }

    #[test]
    fn convolution_is_commutative_and_adds_means(a in weights(), b in weights()) {
        let (da, db) = (dist(&a), dist(&b));
        let ab = da.convolve(&db);
        let ba = db.convolve(&da);
        prop_assert_eq!(ab.max_degree(), ba.max_degree());
        for d in 1..=ab.max_degree() {
            prop_assert!((ab.prob(d) - ba.prob(d)).abs() < 1e-12);
        }
        prop_assert!((ab.mean_degree() - da.mean_degree() - db.mean_degree()).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_is_exact(w in weights()) {
        let d = dist(&w);
        let back: DegreeDistribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }
}
