use pmax_core::datum::{datum_coefficients, RationalPoint};
use pmax_core::decomp::main_error_split;
use pmax_core::divset::build_divergence_set;
use pmax_core::experiment::{fit_exponent, ratio_experiment, ExperimentConfig, Sequential};
use pmax_core::poly::IntPolynomial;
use pmax_core::weyl::weyl_table;
use pmax_core::{DEFAULT_C, DEFAULT_RHO};

fn worst_error_ratio(n: u64) -> f64 {
    let p = IntPolynomial::from_terms(1, [(vec![2], 1)]).unwrap();
    let f = datum_coefficients(n, 1).unwrap();
    let set = build_divergence_set(&p, n, DEFAULT_C, DEFAULT_RHO).unwrap();
    let mut worst = 0.0f64;
    for g in set.groups() {
        let t = weyl_table(&p, g.q()).unwrap();
        for b in g.good.members() {
            let pt = RationalPoint::new(&[b[0] as i64], g.q(), vec![0.0]).unwrap();
            worst = worst.max(main_error_split(&p, &f, &pt, &t).unwrap().ratio());
        }
    }
    worst
}

#[test]
fn error_term_shrinks_along_the_ladder() {
    let ratios: Vec<f64> = [1u64 << 10, 1 << 12, 1 << 14].iter().map(|&n| worst_error_ratio(n)).collect();
    println!("max |E|/|M|: {ratios:?}");
    assert!(ratios[0] < 0.5);
    assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "{ratios:?}");
}

#[test]
fn two_dimensional_ratio_grows() {
    let p = IntPolynomial::family_power_laplacian(2, 2).unwrap();
    let cfg = ExperimentConfig { mc_samples: 200_000, sample_budget: 4000, ..Default::default() };
    let rows = ratio_experiment(&Sequential, &p, 0.0, &[256, 512, 1024], &cfg).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.as_ref().unwrap().ratio).collect();
    println!("d = 2 ratios: {ratios:?}");
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert!(fit_exponent(&rows).unwrap().slope > 0.0);
}
