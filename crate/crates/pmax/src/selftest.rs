//! Quick internal checks: small worked examples with known answers, run by
//! the `selftest` subcommand before any long job.

use pmax_core::datum::{
    bump, datum_coefficients, evaluate_solution, sobolev_norm_sq, RationalPoint,
};
use pmax_core::decomp::{
    discrete_laplacian, fold, laplacian_symbol, main_error_split, sbp_residual, spectrum,
    Axis, CycleEvaluator, FoldedZ,
};
use pmax_core::divset::{measure, overlap_pair_count, DivergenceSet, MeasureMethod, PrimeGroup};
use pmax_core::experiment::{fit_points, solution_scan};
use pmax_core::grid::ResidueGrid;
use pmax_core::numtheory::{eval_poly_mod, lattice_pair_count, primes_in_band};
use pmax_core::poly::IntPolynomial;
use pmax_core::weyl::{good_set, parseval_defect, weyl_sum_direct, weyl_table, GoodSet};
use pmax_core::{Complex64, Result};

use crate::polyjson::parse_polynomial;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

fn poly(d: usize, terms: &[(&[u32], i64)]) -> IntPolynomial {
    IntPolynomial::from_terms(d, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
}

fn singleton_set(centers: &[(u64, u32)], n: u64, rho: f64) -> Result<DivergenceSet> {
    let groups = centers
        .iter()
        .map(|&(q, b)| {
            Ok(PrimeGroup {
                good: GoodSet::from_members(q, 1, 0.5, 2, vec![b])?,
                deligne: None,
                parseval_defect: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DivergenceSet::from_groups(n, 1, rho, groups, vec![])
}

type CheckFn = fn() -> Result<bool>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("primes in [10, 21)", || {
        Ok(primes_in_band(10, 21)?.primes() == [11, 13, 17, 19])
    }),
    ("primes in [2, 3)", || Ok(primes_in_band(2, 3)?.primes() == [2])),
    ("X^2 at 7 mod 5", || Ok(eval_poly_mod(&poly(1, &[(&[2], 1)]), &[7], 5)? == 4)),
    ("X1^3 + X2^3 at (2,3) mod 7", || {
        Ok(eval_poly_mod(&IntPolynomial::family_diagonal(2, 3)?, &[2, 3], 7)? == 0)
    }),
    ("(X1^2 + X2^2)^2 at (1,2) mod 11", || {
        Ok(eval_poly_mod(&IntPolynomial::family_power_laplacian(2, 2)?, &[1, 2], 11)? == 3)
    }),
    ("lattice count with A = 0", || {
        Ok([(3, 5), (7, 7), (11, 13)]
            .iter()
            .all(|&(q, qp)| lattice_pair_count(q, qp, 0.0) == Ok(0)))
    }),
    ("degrees", || {
        Ok(IntPolynomial::family_diagonal(2, 3)?.degree() == 3
            && IntPolynomial::family_power_laplacian(2, 2)?.degree() == 4
            && IntPolynomial::zero(1)?.degree() == 0)
    }),
    ("homogeneous parts", || {
        let p = poly(1, &[(&[2], 1), (&[1], 3), (&[0], 1)]);
        let q = poly(2, &[(&[3, 0], 1), (&[0, 3], 1), (&[1, 1], 1)]);
        let h = q.homogeneous_part()?;
        Ok(p.homogeneous_part()? == poly(1, &[(&[2], 1)])
            && h == IntPolynomial::family_diagonal(2, 3)?
            && h.homogeneous_part()? == h)
    }),
    ("power-Laplacian family", || {
        Ok(IntPolynomial::family_power_laplacian(1, 1)? == poly(1, &[(&[2], 1)])
            && IntPolynomial::family_power_laplacian(2, 2)?
                == poly(2, &[(&[4, 0], 1), (&[2, 2], 2), (&[0, 4], 1)])
            && IntPolynomial::family_power_laplacian(2, 3)?
                == poly(2, &[(&[6, 0], 1), (&[4, 2], 3), (&[2, 4], 3), (&[0, 6], 1)]))
    }),
    ("diagonal family", || {
        Ok(IntPolynomial::family_diagonal(1, 2)? == poly(1, &[(&[2], 1)])
            && IntPolynomial::family_diagonal(3, 2)?
                == poly(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], 1), (&[0, 0, 2], 1)]))
    }),
    ("polynomial JSON", || {
        let p = parse_polynomial(r#"{"d":2,"terms":[{"e":[3,0],"c":1},{"e":[0,3],"c":1}]}"#);
        let e = parse_polynomial(r#"{"d":1,"terms":[]}"#);
        let z = parse_polynomial(r#"{"d":1,"terms":[{"e":[3],"c":0},{"e":[2],"c":1}]}"#);
        Ok(matches!(p, Ok(p) if p == IntPolynomial::family_diagonal(2, 3).unwrap())
            && matches!(e, Ok(e) if e.degree() == 0)
            && matches!(z, Ok(z) if z.num_terms() == 1))
    }),
    ("constant term rotates the Gauss sum", || {
        let s = weyl_sum_direct(&poly(1, &[(&[2], 1), (&[0], 1)]), 5, &[0])?;
        let g = weyl_sum_direct(&poly(1, &[(&[2], 1)]), 5, &[0])?;
        let turn = Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI / 5.0);
        Ok((s - g * turn).norm() < 1e-12 && (s.norm() - 5f64.sqrt()).abs() < 1e-12)
    }),
    ("X^3 table matches direct sums mod 7", || {
        let p = poly(1, &[(&[3], 1)]);
        let t = weyl_table(&p, 7)?;
        let mut ok = true;
        for b in 0..7u64 {
            ok &= (t.get(&[b as i64]) - weyl_sum_direct(&p, 7, &[b])?).norm() < 1e-12;
        }
        Ok(ok)
    }),
    ("Parseval on small tables", || {
        Ok(parseval_defect(&weyl_table(&poly(1, &[(&[2], 1)]), 5)?) < 1e-12
            && parseval_defect(&weyl_table(&poly(1, &[(&[3], 1)]), 7)?) < 1e-12
            && parseval_defect(&weyl_table(&IntPolynomial::family_diagonal(2, 3)?, 11)?) < 1e-10)
    }),
    ("good sets grow as c falls", || {
        let t = weyl_table(&poly(1, &[(&[3], 1)]), 13)?;
        let small = good_set(&t, 1e-9, 3)?;
        let half = good_set(&t, 0.5, 3)?;
        let nonzero = t.values().iter().filter(|z| z.norm() > 1e-9).count();
        Ok(half.flat_members().iter().all(|&m| small.contains_flat(m as usize))
            && small.len() == nonzero
            && small.density() >= small.guaranteed_density())
    }),
    ("bump midpoint", || Ok((bump(0.375) - 0.5).abs() < 1e-15)),
    ("datum support", || {
        let f = datum_coefficients(8, 1)?;
        let g = datum_coefficients(64, 2)?;
        Ok(f.lo() == 3
            && f.hi() == 15
            && f.coeff(&[4]) == 1.0
            && f.coeff(&[8]) == 1.0
            && f.coeff(&[16]) == 0.0
            && g.coeff(&[40, 48]) == 1.0)
    }),
    ("L2 norm at least the plateau count", || {
        let f = datum_coefficients(1024, 1)?;
        Ok(sobolev_norm_sq(&f, 0.0) >= 512.0)
    }),
    ("solution depends on b mod q only", || {
        let p = poly(1, &[(&[2], 1)]);
        let f = datum_coefficients(256, 1)?;
        let a = evaluate_solution(&p, &f, &RationalPoint::new(&[3], 17, vec![1e-4])?)?;
        let b = evaluate_solution(&p, &f, &RationalPoint::new(&[20], 17, vec![1e-4])?)?;
        Ok(a == b)
    }),
    ("direct sum equals fold-and-sum", || {
        let p = poly(1, &[(&[2], 1)]);
        let f = datum_coefficients(256, 1)?;
        let z = fold(&f, 17, &[0.0])?;
        let all = CycleEvaluator::new(&p, 17)?.evaluate_all(&z);
        let direct = evaluate_solution(&p, &f, &RationalPoint::new(&[3], 17, vec![0.0])?)?;
        Ok((all.values()[3] - direct).norm() <= 1e-9 * direct.norm())
    }),
    ("folding conserves mass", || {
        let f = datum_coefficients(64, 1)?;
        let z = fold(&f, 5, &[0.0])?;
        let positive = z.values().iter().all(|v| v.re > 0.0 && v.im == 0.0);
        Ok(positive && (z.total().re - f.mass()).abs() < 1e-12 * f.mass())
    }),
    ("spectrum of plane waves", || {
        let ones = ResidueGrid::from_fn(7, 1, |_| Complex64::new(1.0, 0.0))?;
        let ones = spectrum(&FoldedZ::from_grid(ones, 64, vec![0.0])?);
        let mut ok = (ones.zhat0() - Complex64::new(1.0, 0.0)).norm() < 1e-12
            && ones.values()[1..].iter().all(|v| v.norm() < 1e-12);
        let wave = ResidueGrid::from_fn(7, 1, |r| {
            Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * (3 * r[0]) as f64 / 7.0)
        })?;
        let wave = spectrum(&FoldedZ::from_grid(wave, 64, vec![0.0])?);
        for (l, v) in wave.values().iter().enumerate() {
            let want = if l == 3 { 1.0 } else { 0.0 };
            ok &= (v - Complex64::new(want, 0.0)).norm() < 1e-12;
        }
        Ok(ok)
    }),
    ("main plus error reconstructs the solution", || {
        let p = poly(1, &[(&[2], 1)]);
        let f = datum_coefficients(256, 1)?;
        let t = weyl_table(&p, 17)?;
        let me = main_error_split(&p, &f, &RationalPoint::new(&[3], 17, vec![0.0])?, &t)?;
        Ok((me.main + me.error - me.solution).norm() <= 1e-12 * me.solution.norm())
    }),
    ("Laplacian of a constant", || {
        let g = ResidueGrid::from_fn(7, 2, |_| Complex64::new(2.5, -1.0))?;
        let l = discrete_laplacian(&g, Axis::All)?;
        Ok(l.values().iter().all(|v| v.norm() < 1e-12) && laplacian_symbol(&[0, 0], 7) == 0.0)
    }),
    ("summation by parts", || {
        let g = ResidueGrid::from_fn(17, 1, |r| Complex64::new(r[0] as f64, (r[0] * r[0] % 5) as f64))?;
        let h = ResidueGrid::from_fn(17, 1, |r| Complex64::new((r[0] % 3) as f64, -(r[0] as f64)))?;
        let c = ResidueGrid::from_fn(17, 1, |_| Complex64::new(1.0, 1.0))?;
        Ok(sbp_residual(&g, &h)? < 1e-10 && sbp_residual(&g, &g)? == 0.0 && sbp_residual(&c, &c)? == 0.0)
    }),
    ("band centers are distinct", || {
        let set = pmax_core::divset::build_divergence_set(&poly(1, &[(&[3], 1)]), 1024, 0.5, 1.0 / 32.0)?;
        let mut centers: Vec<(u64, u64)> = set.balls().filter(|(_, b)| b[0] != 0).map(|(q, b)| (b[0], q)).collect();
        let n = centers.len();
        centers.sort_unstable();
        centers.dedup();
        Ok(centers.len() == n)
    }),
    ("disjoint singletons", || {
        let set = singleton_set(&[(5, 1), (7, 5)], 1024, 1.0 / 32.0)?;
        let one = singleton_set(&[(5, 1)], 1024, 1.0 / 32.0)?;
        let r = 2.0 / 32.0 / 1024.0;
        let m = measure(&set, MeasureMethod::Exact)?.estimate;
        let m1 = measure(&one, MeasureMethod::Exact)?.estimate;
        Ok(overlap_pair_count(&set)? == 2 && (m - 2.0 * r).abs() < 1e-15 && (m1 - r).abs() < 1e-15)
    }),
    ("full-budget scan equals full scan", || {
        let p = poly(1, &[(&[2], 1)]);
        let f = datum_coefficients(1024, 1)?;
        let set = pmax_core::divset::build_divergence_set(&p, 1024, 0.5, 1.0 / 32.0)?;
        Ok(solution_scan(&p, &f, &set, set.ball_count(), 5)? == solution_scan(&p, &f, &set, u64::MAX, 5)?)
    }),
    ("fits of exact power laws", || {
        let pts: Vec<(f64, f64)> = (10..=15).map(|e| 2f64.powi(e)).map(|n| (n, n.powf(0.25))).collect();
        let logged: Vec<(f64, f64)> = pts.iter().map(|&(n, r)| (n, r / n.ln().sqrt())).collect();
        let a = fit_points(&pts)?;
        let b = fit_points(&logged)?;
        Ok((a.slope - 0.25).abs() < 1e-12
            && (b.log_corrected_slope - 0.25).abs() < 1e-12
            && fit_points(&pts[..1]).is_err())
    }),
    ("lattice count (3, 5, 2)", || Ok(lattice_pair_count(3, 5, 2.0)? == 4)),
];

/// Runs every check; a check that errors counts as failed.
pub fn run() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|&(name, f)| match f() {
            Ok(ok) => Check {
                name,
                ok,
                detail: String::new(),
            },
            Err(e) => Check {
                name,
                ok: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run() {
            assert!(c.ok, "{}: {}", c.name, c.detail);
        }
    }
}
