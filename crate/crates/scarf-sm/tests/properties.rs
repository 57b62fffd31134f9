//! Property tests over randomly drawn instances: serialization round trips,
//! solver guarantees, matrix consistency, and the symbolic ordering.

use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scarf_sm::io;
use scarf_sm::marriage::{
    basis_graph, build_ordinal_matrix, build_system, default_max_iterations, random_instance,
    solve_with, SolveOptions,
};
use scarf_sm::oracle::{
    check_consistency, first_blocking_pair, gale_shapley, ProposingSide,
};
use scarf_sm::perturb::EpsilonValue;
use scarf_sm::polytope::{self, BasisError};
use scarf_sm::Rational;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn instance_serialization_round_trips(k in 1usize..9, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        let back = io::parse_instance(&io::serialize_instance(&inst)).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn trace_serialization_round_trips(k in 1usize..6, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        let out = solve_with(&inst, &SolveOptions::default()).unwrap();
        let back = io::parse_trace(&io::serialize_trace(&out.trace)).unwrap();
        prop_assert_eq!(back, out.trace);
    }

    #[test]
    fn solve_is_stable_bounded_and_monotone(k in 1usize..10, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        let out = solve_with(&inst, &SolveOptions::default()).unwrap();
        prop_assert!(out.matching.is_perfect());
        prop_assert_eq!(first_blocking_pair(&inst, &out.matching), None);
        prop_assert!(out.trace.iteration_count() <= default_max_iterations(k));
        let mut prev: Option<(usize, i64)> = None;
        for it in &out.trace.iterations {
            let cur = it.potential(k).unwrap();
            if let Some(prev) = prev {
                prop_assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && cur != prev);
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn ordinal_matrix_is_consistent(k in 1usize..8, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        let c = build_ordinal_matrix(&inst);
        prop_assert_eq!(c.validate(), Ok(()));
        prop_assert!(check_consistency(&inst, &c).is_ok());
    }

    #[test]
    fn gale_shapley_is_stable_from_both_sides(k in 1usize..8, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        for side in [ProposingSide::Men, ProposingSide::Women] {
            let mu = gale_shapley(&inst, side);
            prop_assert!(mu.is_perfect());
            prop_assert_eq!(first_blocking_pair(&inst, &mu), None);
        }
    }

    #[test]
    fn basis_predicate_matches_invertibility(k in 2usize..5, seed in 0u64..1000) {
        let inst = random_instance(k, seed);
        let sys = build_system(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(k as u64));
        let all: Vec<usize> = (0..inst.num_columns()).collect();
        for _ in 0..20 {
            let cols: Vec<usize> = all.choose_multiple(&mut rng, inst.n()).copied().collect();
            let invertible = !matches!(
                polytope::basic_solution(&sys, &cols),
                Err(BasisError::SingularBasis)
            );
            prop_assert_eq!(invertible, basis_graph(&inst, &cols).is_ok());
        }
    }

    #[test]
    fn epsilon_order_matches_small_evaluations(
        a in proptest::collection::vec(-1i64..=1, 0..12),
        b in proptest::collection::vec(-1i64..=1, 0..12),
    ) {
        let build = |coeffs: Vec<i64>| {
            let mut v = EpsilonValue::constant(0);
            for (d, c) in coeffs.into_iter().enumerate() {
                let term = EpsilonValue::epsilon_power(d);
                match c {
                    1 => v = v.add(&term),
                    -1 => v = v.sub(&term),
                    _ => {}
                }
            }
            v
        };
        let (x, y) = (build(a), build(b));
        let eps = Rational::new(BigInt::one(), BigInt::from(100));
        prop_assert_eq!(x.cmp(&y), x.eval(&eps).cmp(&y.eval(&eps)));
    }
}
