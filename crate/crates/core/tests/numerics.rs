mod support;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twostage::bayes::{beta_tail, dirichlet_margin_tail, pava_isotonic, BetaPosterior, CellSet, DirichletPosterior};

use support::{beta_tail_quadrature, dirichlet_tail_mc, isotonic_brute_force};

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

#[test]
fn beta_tail_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let a = log_uniform(&mut rng, 0.2, 60.0);
        let b = log_uniform(&mut rng, 0.2, 60.0);
        let t = 0.01 + 0.98 * rng.random::<f64>();
        let got = beta_tail(&BetaPosterior::new(a, b).unwrap(), t).unwrap();
        let want = beta_tail_quadrature(a, b, t);
        assert!((got - want).abs() < 1e-8, "Beta({a}, {b}) tail at {t}: {got} vs {want}");
    }
}

#[test]
fn beta_tail_at_posterior_counts() {
    // Beta(1, 1) prior after 0 of 10, 3 of 10 and 10 of 10 events
    for (x, n) in [(0.0, 10.0), (3.0, 10.0), (10.0, 10.0)] {
        let post = BetaPosterior::from_counts(1.0, 1.0, x, n - x).unwrap();
        let want = beta_tail_quadrature(1.0 + x, 1.0 + n - x, 0.35);
        assert!((beta_tail(&post, 0.35).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn dirichlet_margin_tail_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 200_000;
    for _ in 0..20 {
        let raw: [f64; 4] = std::array::from_fn(|_| 0.05 + rng.random::<f64>());
        let total: f64 = raw.iter().sum();
        let prior = raw.map(|v| v / total);
        let counts: [f64; 4] = std::array::from_fn(|_| rng.random_range(0..12) as f64);
        let post = DirichletPosterior::new(prior, counts).unwrap();
        let mask = rng.random_range(1..15u8);
        let t = 0.05 + 0.9 * rng.random::<f64>();
        let got = dirichlet_margin_tail(&post, CellSet::new(mask).unwrap(), t).unwrap();
        let want = dirichlet_tail_mc(post.params(), mask, t, draws, &mut rng);
        let se = (want * (1.0 - want) / draws as f64).sqrt().max(1.0 / draws as f64);
        assert!(
            (got - want).abs() < 5.0 * se + 1e-6,
            "mask {mask:#06b} at {t}: {got} vs {want}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pava_is_the_least_squares_monotone_fit(
        pairs in prop::collection::vec((0.0f64..1.0, 0.5f64..10.0), 1..9)
    ) {
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let got = pava_isotonic(&values, &weights).unwrap();
        let want = isotonic_brute_force(&values, &weights);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}
