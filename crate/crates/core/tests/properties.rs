use irs_secrecy::channel::generate_scenario;
use irs_secrecy::metrics::power_used;
use irs_secrecy::orchestrator::optimize;
use irs_secrecy::testing::{random_channel, random_feasible, random_point};
use irs_secrecy::{normalize, secrecy_rates, ChannelSet, ScenarioConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Same channel with every coefficient and noise power expressed in a
/// different unit: H scaled by `a`, noise by `a²`.
fn rescaled(ch: &ChannelSet, a: f64, noise: f64) -> ChannelSet {
    ChannelSet::new(
        ch.bs_irs().scale(a),
        (0..ch.num_users()).map(|k| ch.irs_user(k).clone()).collect(),
        ch.irs_eve().clone(),
        noise * a * a,
        noise * a * a * ch.noise_eve() / ch.noise_user(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalization_preserves_rates(seed: u64, k in 1usize..6, n in 1usize..6, m in 1usize..6, log_a in -6.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = rescaled(&random_channel(&mut rng, k, n, m), 10f64.powf(log_a), 1.0);
        let u = random_point(&mut rng, m);
        let sol = random_feasible(&mut rng, k, n, 10.0, true, u.as_vec());
        let (norm, scale) = normalize(&ch);
        prop_assert!((norm.noise_user() - 1.0).abs() < 1e-12);
        prop_assert!((scale.power - scale.amplitude.powi(2)).abs() <= 1e-12 * scale.power);
        let (a, b) = (secrecy_rates(&sol, &ch).unwrap(), secrecy_rates(&sol, &norm).unwrap());
        for (x, y) in a.gamma.iter().zip(&b.gamma) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        prop_assert!((a.sum_secrecy - b.sum_secrecy).abs() <= 1e-9);
    }

    #[test]
    fn breakdown_is_consistent(seed: u64, k in 1usize..6, n in 1usize..6, m in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, k, n, m);
        let u = random_point(&mut rng, m);
        let sol = random_feasible(&mut rng, k, n, 10.0, true, u.as_vec());
        let b = secrecy_rates(&sol, &ch).unwrap();
        prop_assert_eq!(b.rate.len(), k);
        for i in 0..k {
            prop_assert!(b.rate[i] >= 0.0 && b.eve_capacity[i] >= 0.0);
            prop_assert!((b.secrecy[i] - (b.rate[i] - b.eve_capacity[i]).max(0.0)).abs() <= 1e-12);
        }
        prop_assert!(b.sum_secrecy + 1e-12 >= -b.f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn optimizer_output_is_feasible(seed in 0u64..1000, k in 1usize..4, n in 2usize..6, m in 1usize..6, dbm in 0.0f64..40.0) {
        let cfg = ScenarioConfig {
            num_users: k,
            num_bs_antennas: n,
            num_irs_elements: m,
            p_max: irs_secrecy::channel::dbm_to_watts(dbm),
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        let ch = generate_scenario(&cfg).unwrap();
        let (sol, history) = optimize(&ch, &cfg).unwrap();
        prop_assert!(power_used(&sol) <= cfg.p_max * (1.0 + 1e-9));
        prop_assert!(sol.phases.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12));
        prop_assert!(history.is_monotone(1e-6));
        let b = secrecy_rates(&sol, &ch).unwrap();
        prop_assert!(b.sum_secrecy.is_finite() && b.sum_secrecy >= 0.0);
    }
}
