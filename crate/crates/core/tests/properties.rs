use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scramble_core::experiments::validate::random_expansion;
use scramble_core::holevo::{chi_of_density, holevo_exact, holevo_from_probs, normalize_probs};
use scramble_core::mitigation::{mitigate, richardson_scheme};
use scramble_core::pauli::{expand_operator, operator_size, site_density, PauliString};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_index_round_trip(n in 1usize..=8, k in any::<u64>()) {
        let k = k % (1u64 << (2 * n));
        let p = PauliString::from_index(k, n);
        prop_assert_eq!(p.index(), k);
        prop_assert_eq!(p.n_sites(), n);
    }

    #[test]
    fn expansion_round_trip_and_norm(n in 1usize..=4, seed in any::<u64>()) {
        let e = random_expansion(n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((e.norm_sq() - 1.0).abs() < 1e-12);
        let back = expand_operator(&e.reconstruct(), n).unwrap();
        for (a, b) in e.dense().iter().zip(back.dense().iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn densities_sum_to_size(n in 1usize..=4, seed in any::<u64>()) {
        let e = random_expansion(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let total: f64 = (1..=n).map(|s| site_density(&e, s).unwrap().1).sum();
        prop_assert!((total - operator_size(&e)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_chain(n in 2usize..=4, seed in any::<u64>()) {
        let e = random_expansion(n, &mut ChaCha8Rng::seed_from_u64(seed));
        for site in 1..=n {
            let (dist, density) = site_density(&e, site).unwrap();
            let chi = holevo_from_probs(&[1.0, 0.0, 0.0, 0.0], &dist.probs).unwrap();
            prop_assert!((chi - chi_of_density(density).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn holevo_symmetric_and_bounded(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_expansion(n, &mut rng), random_expansion(n, &mut rng));
        for site in 1..=n {
            let ab = holevo_exact(&a, &b, site).unwrap().chi;
            prop_assert_eq!(ab, holevo_exact(&b, &a, site).unwrap().chi);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(holevo_exact(&a, &a, site).unwrap().chi.abs() < 1e-10);
        }
    }

    #[test]
    fn probs_holevo_bounded(raw1 in prop::array::uniform4(0.0f64..1.0), raw2 in prop::array::uniform4(0.0f64..1.0)) {
        prop_assume!(raw1.iter().sum::<f64>() > 1e-3 && raw2.iter().sum::<f64>() > 1e-3);
        let norm = |p: [f64; 4]| { let s: f64 = p.iter().sum(); p.map(|x| x / s) };
        let (p1, p2) = (normalize_probs(&norm(raw1)).unwrap(), normalize_probs(&norm(raw2)).unwrap());
        let chi = holevo_from_probs(&p1, &p2).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&chi));
        prop_assert!((chi - holevo_from_probs(&p2, &p1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(chi_of_density(lo).unwrap() <= chi_of_density(hi).unwrap() + 1e-15);
    }

    #[test]
    fn richardson_recovers_polynomials(order in 1usize..=5, coeffs in prop::collection::vec(-1.0f64..1.0, 6), p in 1e-4f64..1e-2) {
        let scheme = richardson_scheme(order).unwrap();
        prop_assert!(scheme.satisfies_constraints());
        let poly = |x: f64| coeffs[..=order].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let values: Vec<f64> = scheme.scales().iter().map(|c| poly(c * p)).collect();
        prop_assert!((mitigate(&values, &scheme).unwrap() - coeffs[0]).abs() < 1e-10);
    }
}
