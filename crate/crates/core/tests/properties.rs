mod common;

use common::{big_k_oracle, Quadratic};
use netsplit::equilibrium::{equilibrium_prices, find_local_spe, tau_for_delta, ConsistencyMode};
use netsplit::graphs::{scaling_check, LoopyGraph};
use netsplit::verifier::{lipschitz_ratio, trace_local_selection};
use netsplit::{split_calculus, Firm, Outcome, PricePair, Radius};
use proptest::prelude::*;

fn mass() -> impl Strategy<Value = f64> {
    0.2f64..5.0
}

fn weights(g: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, g), g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn example2_slope_ignores_masses(m1 in mass(), m2 in mass(), s1 in 0.05f64..0.95, s2 in 0.05f64..0.95) {
        let game = common::symmetric(&[vec![1.0, 2.0], vec![3.0, 5.0]], &[m1, m2]);
        let calc = split_calculus(&game, &game.profile(vec![s1, s2]).unwrap()).unwrap();
        prop_assert!((calc.k_s + 1.0).abs() <= 1e-12);
        prop_assert!((calc.k[0] * m1 + 3.0).abs() <= 1e-12);
        prop_assert!((calc.k[1] * m2 - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn reaction_vector_solves_the_restricted_system(
        w in weights(4),
        m in prop::collection::vec(mass(), 4),
        mask in 1usize..16,
    ) {
        let game = common::symmetric(&w, &m);
        let sigma: Vec<f64> = (0..4).map(|i| if mask >> i & 1 == 1 { 0.5 } else { 0.0 }).collect();
        let split: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
        let oracle = big_k_oracle(&w, &m, &split);
        if let Ok(calc) = split_calculus(&game, &game.profile(sigma).unwrap()) {
            let jk = calc.jacobian.mul_vec(&calc.k);
            let scale = calc.jacobian.max_abs() * calc.k.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            for x in jk {
                prop_assert!((x - 1.0).abs() <= 1e-9 * scale);
            }
            let oracle = oracle.unwrap();
            prop_assert!((calc.k_s - oracle).abs() <= 1e-8 * oracle.abs().max(1.0) * scale);
        }
    }

    #[test]
    fn doubling_the_adjacency_halves_the_slope(
        code in 0u64..(1 << 15),
        mask in 1usize..32,
        m in prop::collection::vec(mass(), 5),
    ) {
        let graph = LoopyGraph::from_code(5, code);
        let split: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
        if let Ok(s) = scaling_check(&graph, &split, &m) {
            prop_assert!((s.ratio - 0.5).abs() <= 1e-9);
            for (d, single) in s.k_vec_double.iter().zip(&s.k_vec_single) {
                prop_assert!((d - 0.5 * single).abs() <= 1e-9 * single.abs().max(1.0));
            }
        }
    }

    #[test]
    fn enumerated_profiles_are_equilibria(
        a in weights(3),
        b in weights(3),
        m in prop::collection::vec(mass(), 3),
        pa in 0.0f64..4.0,
        pb in 0.0f64..4.0,
    ) {
        let game = common::multilinear(&a, &b, &m);
        let p = PricePair::new(pa, pb).unwrap();
        let found = game.enumerate_second_stage_ne(p).unwrap();
        for profile in &found.profiles {
            prop_assert!(game.check_second_stage_ne(p, profile).holds);
        }
    }

    #[test]
    fn certificates_are_equilibria(a in weights(3), b in weights(3), m in prop::collection::vec(mass(), 3)) {
        let game = common::multilinear(&a, &b, &m);
        for mode in [ConsistencyMode::FocConsistent, ConsistencyMode::AsPrinted] {
            for c in find_local_spe(&game, mode).unwrap().certificates {
                let profile = game.profile(c.sigma.clone()).unwrap();
                prop_assert!(game.check_second_stage_ne(c.prices, &profile).holds);
                prop_assert!(c.prices.p_a > 0.0 && c.prices.p_b > 0.0);
            }
        }
    }

    #[test]
    fn shifts_leave_derivatives_untouched(
        seed in any::<u64>(),
        mask in 1usize..8,
        corners in 0usize..8,
        eps in 0.01f64..1.0,
    ) {
        let mut rng = common::rng(seed);
        let m = common::masses(&mut rng, 3);
        let game = Quadratic::random(&mut rng, 3).game(&m);
        let profile = common::random_profile(&mut rng, 3, mask, corners);
        let before = split_calculus(&game, &profile);
        prop_assume!(before.is_ok());
        let before = before.unwrap();
        let shifted = game.apply_tau_shift(&tau_for_delta(&game, &profile, 0.3), eps).unwrap();
        let after = split_calculus(&shifted, &profile).unwrap();
        prop_assert_eq!(before.k, after.k);
        prop_assert_eq!(before.r, after.r);
        let report = shifted.check_second_stage_ne(PricePair { p_a: 1.3, p_b: 1.0 }, &profile);
        prop_assert!(report.holds, "{:?}", report);
    }

    #[test]
    fn traced_selection_is_lipschitz(w in weights(3), m in prop::collection::vec(mass(), 3)) {
        let game = common::symmetric(&w, &m);
        let profile = game.profile(vec![0.5; 3]).unwrap();
        let calc = split_calculus(&game, &profile);
        prop_assume!(calc.as_ref().is_ok_and(|c| c.k_s < 0.0));
        let calc = calc.unwrap();
        let prices = equilibrium_prices(&game, &profile).unwrap();
        let shifted = game.apply_tau_shift(&tau_for_delta(&game, &profile, prices.delta()), 0.1).unwrap();
        let outcome = Outcome { prices, sigma: vec![0.5; 3] };
        for firm in [Firm::A, Firm::B] {
            let path = trace_local_selection(&shifted, &outcome, firm, Radius::Relative(0.05), 21).unwrap();
            prop_assert!(lipschitz_ratio(&path, &calc.k) <= 1.0 + 1e-9);
        }
    }
}
