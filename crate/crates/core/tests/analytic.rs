mod common;

use priorconflict::analytic::*;
use priorconflict::rng::InverseGamma;
use priorconflict::special::digamma;
use priorconflict::{McConfig, SeededStream};
use rand::Rng;
use rand_distr::Distribution;

#[test]
fn normal_monte_carlo_matches_closed_form() {
    let mut r = SeededStream::new(1, 0);
    for i in 0..10 {
        let m = NormalLocationModel::new(r.random_range(-2.0..2.0), r.random_range(0.2..3.0), r.random_range(0.2..3.0)).unwrap();
        let y = m.mu0 + r.random_range(-3.0..3.0) * m.predictive_var().sqrt();
        let cfg = McConfig::new(20_000, 100 + i);
        let mc = normal_check(&m, y, &cfg).unwrap().p_value;
        let exact = normal_p_value(&m, y);
        let se = (exact * (1.0 - exact) / 20_000.0).sqrt();
        assert!((mc - exact).abs() <= 3.0 * se + 1.0 / 20_001.0, "config {i}: {mc} vs {exact}");
    }
}

#[test]
fn normal_score_is_log_marginal_derivative() {
    let m = NormalLocationModel::new(0.5, 1.7, 0.8).unwrap();
    for y in [-3.0, -0.2, 0.5, 1.1, 4.0] {
        let h = 1e-5;
        let fd = (m.log_marginal(y, m.tau0_sq + h) - m.log_marginal(y, m.tau0_sq - h)) / (2.0 * h);
        let s = normal_score(&m, y);
        assert!(((fd - s) / s).abs() < 1e-6, "y={y}");
        assert!(((normal_score_posterior(&m, y) - s) / s).abs() < 1e-10);
    }
}

/// Five-point central difference; accurate enough to resolve scores near zero.
fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = 1e-3;
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[test]
fn binomial_fisher_identity_full_enumeration() {
    for (a, b, target) in [(2.0, 2.0, MixtureTarget::Jeffreys), (3.5, 1.2, MixtureTarget::Jeffreys), (4.0, 0.7, MixtureTarget::Uniform)] {
        for n in [1u64, 7, 20, 50] {
            let m = BinomialBetaModel::new(n, a, b, target).unwrap();
            for y in 0..=n {
                let fd = central_difference(|g| m.log_marginal(y, g).unwrap(), 1.0);
                let s = binomial_score_exact(&m, y).unwrap();
                // absolute floor at round-off for scores that vanish exactly
                assert!((fd - s).abs() <= 1e-6 * s.abs() + 1e-11, "a={a} n={n} y={y}: {fd} vs {s}");
            }
        }
    }
}

#[test]
fn asymptotic_gap_shrinks_like_one_over_n() {
    // the leading term omits the y-free prior part of the exact score
    let gap = |n: u64| {
        let m = BinomialBetaModel::new(n, 2.0, 2.0, MixtureTarget::Jeffreys).unwrap();
        let (ca, cb) = m.coefficients();
        let prior = ca * (digamma(m.a + m.b).unwrap() - digamma(m.a).unwrap())
            + cb * (digamma(m.a + m.b).unwrap() - digamma(m.b).unwrap());
        let y = (0.6 * n as f64).round() as u64;
        (binomial_score_asymptotic(&m, y).unwrap() - (binomial_score_exact(&m, y).unwrap() - prior)).abs()
    };
    for n in [100, 1_000] {
        let ratio = gap(10 * n) / gap(n);
        assert!((0.05..=0.2).contains(&ratio), "n={n}: {ratio}");
    }
}

fn random_data(r: &mut SeededStream, n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|_| shift + r.random_range(-1.0..1.0)).collect()
}

#[test]
fn averaged_lambda_score_decreases_in_squared_shift() {
    let m = NigModel::new(0.0, 2.0, 3.0, 2.0, 8).unwrap();
    let mut r = SeededStream::new(3, 0);
    let (a_n, b_n) = m.sigma_sq_posterior(&random_data(&mut r, 8, 0.3)).unwrap();
    let ig = InverseGamma::new(a_n, b_n).unwrap();
    let draws: Vec<f64> = (0..500).map(|_| ig.sample(&mut r)).collect();
    let mut pairs: Vec<(f64, f64)> = (0..100)
        .map(|_| {
            let shift = r.random_range(-3.0..3.0);
            let y = random_data(&mut r, 8, shift);
            let s = draws.iter().map(|s2| nig_lambda_score(&m, &y, *s2)).sum::<f64>() / draws.len() as f64;
            (nig_s1_statistic(&m, &y).unwrap(), s)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert!(pairs.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn nig_check_examples() {
    let m = NigModel::new(1.0, 2.0, 3.0, 2.0, 6).unwrap();
    let centred = vec![0.4, 1.6, 0.9, 1.1, 0.7, 1.3];
    let p = nig_s1_check(&m, &centred, &McConfig::new(10_000, 2)).unwrap().p_value;
    assert!(p >= 0.95, "{p}");
    let shift = 10.0 * (m.b / (m.a * m.lambda0)).sqrt();
    let far: Vec<f64> = centred.iter().map(|v| v + shift).collect();
    let p = nig_s1_check(&m, &far, &McConfig::new(100_000, 2)).unwrap().p_value;
    assert!(p < 0.01, "{p}");
}

#[test]
fn nig_expansions_agree() {
    let m = NigModel::new(0.0, 1.0, 2.5, 1.5, 5).unwrap();
    let mut r = SeededStream::new(4, 0);
    for i in 0..5 {
        let y = random_data(&mut r, 5, 0.6 * i as f64);
        let cfg = McConfig::new(20_000, 40 + i);
        let s1 = nig_s1_check(&m, &y, &cfg).unwrap().p_value;
        let lam = nig_lambda_check(&m, &y, 200, &cfg).unwrap().p_value;
        let mean = nig_mean_shift_check(&m, &y, &cfg).unwrap().p_value;
        // the λ-score is a decreasing function of (ȳ − μ0)² and shares its reference
        assert_eq!(s1, lam);
        let se = (s1 * (1.0 - s1) / 20_000.0).sqrt();
        assert!((s1 - mean).abs() < 4.0 * se + 1e-3, "{s1} vs {mean}");
    }
}

#[test]
fn nig_self_replicated_p_values_are_uniform() {
    let m = NigModel::new(0.0, 1.5, 3.0, 2.0, 4).unwrap();
    let y_obs = vec![0.2, -0.4, 0.9, 0.1];
    let (a_n, b_n) = m.sigma_sq_posterior(&y_obs).unwrap();
    let ig = InverseGamma::new(a_n, b_n).unwrap();
    let cfg = McConfig::new(10_000, 5);
    let reference = priorconflict::reference_distribution(&cfg, 0, |s| {
        let s2 = ig.sample(s);
        let mu = priorconflict::rng::sample_normal(s, 0.0, (s2 / m.lambda0).sqrt());
        let y: Vec<f64> = (0..4).map(|_| priorconflict::rng::sample_normal(s, mu, s2.sqrt())).collect();
        nig_s1_statistic(&m, &y)
    })
    .unwrap();
    let mut s = SeededStream::new(5, 1234);
    let p: Vec<f64> = (0..2000)
        .map(|_| {
            let s2 = ig.sample(&mut s);
            let mu = priorconflict::rng::sample_normal(&mut s, 0.0, (s2 / m.lambda0).sqrt());
            let y: Vec<f64> = (0..4).map(|_| priorconflict::rng::sample_normal(&mut s, mu, s2.sqrt())).collect();
            reference.p_upper(nig_s1_statistic(&m, &y).unwrap())
        })
        .collect();
    assert!(common::ks_uniform_distance(&p) < 0.05);
}
