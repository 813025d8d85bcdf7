use pmax_core::datum::{datum_coefficients, evaluate_solution, perturbation_budget, RationalPoint};
use pmax_core::decomp::{error_term_spectral, fold, fold_separable, main_error_split, spectrum};
use pmax_core::numtheory::{lattice_pair_count, lattice_pair_count_brute, primes_in_band};
use pmax_core::poly::IntPolynomial;
use pmax_core::weyl::{good_set, parseval_defect, weyl_sum_direct, weyl_table, weyl_table_with, BuildMethod};
use pmax_core::DEFAULT_RHO;
use proptest::prelude::*;

fn poly_1d() -> impl Strategy<Value = IntPolynomial> {
    prop::collection::vec((1u32..=5, -4i64..=4), 1..4)
        .prop_filter_map("zero polynomial", |terms| {
            let p = IntPolynomial::from_terms(1, terms.into_iter().map(|(e, c)| (vec![e], c))).ok()?;
            (!p.is_zero()).then_some(p)
        })
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(primes_in_band(3, 114).unwrap().primes().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_holds_for_random_symbols(p in poly_1d(), q in prime()) {
        let t = weyl_table(&p, q).unwrap();
        prop_assert!(parseval_defect(&t) < 1e-9);
    }

    #[test]
    fn dft_table_matches_direct_sums(p in poly_1d(), q in prime(), b in 0u64..1000) {
        let t = weyl_table_with(&p, q, BuildMethod::Dft).unwrap();
        let direct = weyl_sum_direct(&p, q, &[b % q]).unwrap();
        prop_assert!((t.get(&[(b % q) as i64]) - direct).norm() < 1e-9 * q as f64);
    }

    #[test]
    fn good_set_is_exactly_the_threshold(p in poly_1d(), q in prime(), c in 0.05f64..0.95) {
        let t = weyl_table(&p, q).unwrap();
        let g = good_set(&t, c, p.degree().max(2)).unwrap();
        let cut = c * (q as f64).sqrt();
        for (b, z) in t.values().iter().enumerate() {
            prop_assert_eq!(g.contains(&[b as u64]), z.norm() >= cut);
        }
    }

    #[test]
    fn decomposition_reproduces_direct_evaluation(
        p in poly_1d(),
        q in prime(),
        n in 64u64..2048,
        b in 0i64..10_000,
        t in -1.0f64..1.0,
    ) {
        let f = datum_coefficients(n, 1).unwrap();
        let delta = vec![t * perturbation_budget(DEFAULT_RHO, 1, n)];
        let pt = RationalPoint::new(&[b], q, delta.clone()).unwrap();
        let table = weyl_table(&p, q).unwrap();
        let me = main_error_split(&p, &f, &pt, &table).unwrap();
        let e = error_term_spectral(&spectrum(&fold(&f, q, &delta).unwrap()), &table, pt.b()).unwrap();
        let u = evaluate_solution(&p, &f, &pt).unwrap();
        let scale = u.norm().max(1.0);
        prop_assert!((me.main + me.error - u).norm() / scale < 1e-9);
        prop_assert!((me.main + e - u).norm() / scale < 1e-9);
    }

    #[test]
    fn separable_fold_equals_direct_fold(q in prime(), n in 32u64..160, t in -1.0f64..1.0, s in -1.0f64..1.0) {
        let f = datum_coefficients(n, 2).unwrap();
        let beta = perturbation_budget(DEFAULT_RHO, 2, n);
        let delta = vec![t * beta, s * beta];
        let a = fold(&f, q, &delta).unwrap();
        let b = fold_separable(&f, q, &delta).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn lattice_fast_count_agrees_with_brute(q in 1u64..200, qp in 1u64..200, a in 0.01f64..20.0) {
        let fast = lattice_pair_count(q, qp, a).unwrap();
        let brute = lattice_pair_count_brute(q, qp, a).unwrap();
        prop_assert_eq!(fast, brute);
        prop_assert!(brute as f64 <= 2.0 * a);
    }
}
