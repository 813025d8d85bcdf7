//! Integer multivariate polynomial symbols `P in Z[X_1, ..., X_d]`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// A polynomial with integer coefficients in `d` variables.
///
/// Terms are keyed by dense exponent vectors of length `d`; zero
/// coefficients are never stored, so two polynomials are equal exactly when
/// their term maps are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

impl IntPolynomial {
    /// The zero polynomial in `dim` variables.
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("polynomial dimension must be at least 1"));
        }
        Ok(IntPolynomial {
            dim,
            terms: BTreeMap::new(),
        })
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Repeated
    /// exponent vectors are summed and zero coefficients dropped.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut poly = Self::zero(dim)?;
        for (i, (exps, coeff)) in terms.into_iter().enumerate() {
            if exps.len() != dim {
                return Err(Error::input(alloc::format!(
                    "term {i}: exponent vector has length {}, expected {dim}",
                    exps.len()
                )));
            }
            poly.add_term(exps, coeff)?;
        }
        Ok(poly)
    }

    fn add_term(&mut self, exps: Vec<u32>, coeff: i64) -> Result<()> {
        if coeff == 0 {
            return Ok(());
        }
        let slot = self.terms.entry(exps).or_insert(0);
        *slot = slot
            .checked_add(coeff)
            .ok_or_else(|| Error::input("coefficient overflow while merging terms"))?;
        if *slot == 0 {
            // merged terms cancelled
            self.terms.retain(|_, c| *c != 0);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical (lexicographic exponent) order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Maximum total degree of the stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// The terms of top total degree.
    pub fn homogeneous_part(&self) -> Result<IntPolynomial> {
        if self.is_zero() {
            return Err(Error::input("homogeneous part of the zero polynomial"));
        }
        let k = self.degree();
        Ok(IntPolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == k)
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        })
    }

    /// `(X_1^2 + ... + X_d^2)^k`, expanded by the multinomial theorem.
    pub fn family_power_laplacian(d: usize, k: u32) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::input("power-of-Laplacian family needs d >= 1, k >= 1"));
        }
        let mut poly = Self::zero(d)?;
        let mut parts = vec![0u32; d];
        let mut failed = false;
        compositions(k, &mut parts, 0, &mut |a| {
            match multinomial(k, a) {
                Some(c) => {
                    let exps = a.iter().map(|&x| 2 * x).collect();
                    poly.terms.insert(exps, c);
                }
                None => failed = true,
            }
        });
        if failed {
            return Err(Error::input("multinomial coefficient overflows i64"));
        }
        Ok(poly)
    }

    /// `X_1^k + ... + X_d^k`.
    pub fn family_diagonal(d: usize, k: u32) -> Result<Self> {
        if d == 0 || k < 2 {
            return Err(Error::input("diagonal family needs d >= 1, k >= 2"));
        }
        Self::from_terms(
            d,
            (0..d).map(|i| {
                let mut e = vec![0u32; d];
                e[i] = k;
                (e, 1)
            }),
        )
    }

    /// Exact value at an integer point, or `None` on `i128` overflow.
    pub fn eval_exact(&self, n: &[i64]) -> Option<i128> {
        if n.len() != self.dim {
            return None;
        }
        let mut acc: i128 = 0;
        for (exps, &c) in &self.terms {
            let mut term = c as i128;
            for (&x, &e) in n.iter().zip(exps) {
                term = term.checked_mul((x as i128).checked_pow(e)?)?;
            }
            acc = acc.checked_add(term)?;
        }
        Some(acc)
    }
}

fn compositions(total: u32, parts: &mut [u32], at: usize, out: &mut impl FnMut(&[u32])) {
    if at + 1 == parts.len() {
        parts[at] = total;
        out(parts);
        return;
    }
    for x in (0..=total).rev() {
        parts[at] = x;
        compositions(total - x, parts, at + 1, out);
    }
}

fn multinomial(k: u32, parts: &[u32]) -> Option<i64> {
    // product of binomials C(partial sum, part)
    let mut acc: i128 = 1;
    let mut seen = 0u32;
    for &a in parts {
        seen += a;
        let mut binom: i128 = 1;
        for j in 0..a {
            binom = binom * (seen - j) as i128 / (j + 1) as i128;
        }
        acc = acc.checked_mul(binom)?;
    }
    debug_assert_eq!(seen, k);
    i64::try_from(acc).ok()
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (exps, &c)) in self.terms.iter().rev().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            if i == 0 {
                if c < 0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.unsigned_abs();
            let constant = exps.iter().all(|&e| e == 0);
            if mag != 1 || constant {
                write!(f, "{mag}")?;
            }
            for (j, &e) in exps.iter().enumerate() {
                match (e, self.dim) {
                    (0, _) => {}
                    (1, 1) => f.write_str("X")?,
                    (e, 1) => write!(f, "X^{e}")?,
                    (1, _) => write!(f, "X{}", j + 1)?,
                    (e, _) => write!(f, "X{}^{e}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(dim: usize, terms: &[(&[u32], i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(dim, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn degree_examples() {
        assert_eq!(IntPolynomial::family_diagonal(2, 3).unwrap().degree(), 3);
        assert_eq!(IntPolynomial::family_power_laplacian(2, 2).unwrap().degree(), 4);
        assert_eq!(poly(1, &[(&[0], 5)]).degree(), 0);
        assert_eq!(IntPolynomial::zero(3).unwrap().degree(), 0);
    }

    #[test]
    fn homogeneous_part_examples() {
        let p = poly(1, &[(&[2], 1), (&[1], 3), (&[0], 1)]);
        assert_eq!(p.homogeneous_part().unwrap(), poly(1, &[(&[2], 1)]));
        let p = poly(2, &[(&[3, 0], 1), (&[0, 3], 1), (&[1, 1], 1)]);
        assert_eq!(
            p.homogeneous_part().unwrap(),
            IntPolynomial::family_diagonal(2, 3).unwrap()
        );
        let h = IntPolynomial::family_power_laplacian(3, 2).unwrap();
        assert_eq!(h.homogeneous_part().unwrap(), h);
        assert!(IntPolynomial::zero(1).unwrap().homogeneous_part().is_err());
    }

    #[test]
    fn power_laplacian_examples() {
        assert_eq!(
            IntPolynomial::family_power_laplacian(1, 1).unwrap(),
            poly(1, &[(&[2], 1)])
        );
        assert_eq!(
            IntPolynomial::family_power_laplacian(2, 2).unwrap(),
            poly(2, &[(&[4, 0], 1), (&[2, 2], 2), (&[0, 4], 1)])
        );
        assert_eq!(
            IntPolynomial::family_power_laplacian(2, 3).unwrap(),
            poly(2, &[(&[6, 0], 1), (&[4, 2], 3), (&[2, 4], 3), (&[0, 6], 1)])
        );
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(
            IntPolynomial::family_diagonal(2, 3).unwrap(),
            poly(2, &[(&[3, 0], 1), (&[0, 3], 1)])
        );
        assert_eq!(IntPolynomial::family_diagonal(1, 2).unwrap(), poly(1, &[(&[2], 1)]));
        assert_eq!(
            IntPolynomial::family_diagonal(3, 2).unwrap(),
            poly(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], 1), (&[0, 0, 2], 1)])
        );
        assert!(IntPolynomial::family_diagonal(2, 1).is_err());
    }

    #[test]
    fn zero_and_cancelling_terms_dropped() {
        let p = poly(1, &[(&[3], 0), (&[2], 1)]);
        assert_eq!(p.num_terms(), 1);
        let p = poly(1, &[(&[3], 2), (&[3], -2)]);
        assert!(p.is_zero());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = IntPolynomial::from_terms(2, [(vec![1, 0], 1), (vec![1], 1)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("term 1")));
        assert!(IntPolynomial::zero(0).is_err());
    }

    #[test]
    fn family_degrees_over_grid() {
        for d in 1..=4 {
            for k in 1..=8 {
                let lap = IntPolynomial::family_power_laplacian(d, k).unwrap();
                assert_eq!(lap.degree(), 2 * k);
                assert!(lap.terms().all(|(_, c)| c > 0));
                if k >= 2 {
                    assert_eq!(IntPolynomial::family_diagonal(d, k).unwrap().degree(), k);
                }
            }
        }
    }

    #[test]
    fn power_laplacian_matches_direct_power() {
        for d in 1..=3usize {
            for k in 1..=4u32 {
                let p = IntPolynomial::family_power_laplacian(d, k).unwrap();
                let side = 21i64.pow(d as u32);
                for idx in 0..side {
                    let n: Vec<i64> = (0..d)
                        .map(|j| (idx / 21i64.pow(j as u32)) % 21 - 10)
                        .collect();
                    let norm_sq: i128 = n.iter().map(|&x| (x * x) as i128).sum();
                    assert_eq!(p.eval_exact(&n), Some(norm_sq.pow(k)));
                }
            }
        }
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(
            alloc::format!("{}", IntPolynomial::family_power_laplacian(2, 2).unwrap()),
            "X1^4 + 2X1^2X2^2 + X2^4"
        );
        assert_eq!(alloc::format!("{}", poly(1, &[(&[4], 1), (&[1], -1)])), "X^4 - X");
    }

    proptest! {
        #[test]
        fn homogeneous_part_is_a_projection(
            terms in proptest::collection::vec(((0u32..5, 0u32..5), -9i64..9), 1..8)
        ) {
            let p = IntPolynomial::from_terms(2, terms.into_iter().map(|((a, b), c)| (vec![a, b], c))).unwrap();
            prop_assume!(!p.is_zero());
            let h = p.homogeneous_part().unwrap();
            prop_assert_eq!(h.homogeneous_part().unwrap(), h.clone());
            prop_assert_eq!(h.degree(), p.degree());
        }
    }
}
