//! Primes, exact modular evaluation of integer polynomials, and the counter
//! for lattice pairs `(b, b')` with `|b q' - b' q|` small.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::poly::IntPolynomial;
use crate::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` (`m >= 1`), if it exists.
pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quo = old_r / r;
        (old_r, r) = (r, old_r - quo * r);
        (old_s, s) = (s, old_s - quo * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The primes of a half-open band `[lo, hi)`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBand {
    lo: u64,
    hi: u64,
    primes: Vec<u64>,
}

impl PrimeBand {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

const SEGMENT: u64 = 1 << 16;

/// Sieves the primes in `[lo, hi)`.
///
/// Base primes up to `sqrt(hi)` come from a plain sieve; the band itself is
/// crossed off in segments of `2^16`.
pub fn primes_in_band(lo: u64, hi: u64) -> Result<PrimeBand> {
    if lo < 2 || lo >= hi {
        return Err(Error::input(alloc::format!(
            "prime band [{lo}, {hi}) must satisfy 2 <= lo < hi"
        )));
    }
    let root = (hi - 1).isqrt();
    let base = small_primes(root);
    let mut primes = Vec::new();
    let mut seg_lo = lo;
    let mut composite = vec![false; SEGMENT as usize];
    while seg_lo < hi {
        let seg_hi = (seg_lo + SEGMENT).min(hi);
        let width = (seg_hi - seg_lo) as usize;
        composite[..width].fill(false);
        for &p in &base {
            if p * p >= seg_hi {
                break;
            }
            let mut m = (seg_lo.div_ceil(p) * p).max(p * p);
            while m < seg_hi {
                composite[(m - seg_lo) as usize] = true;
                m += p;
            }
        }
        primes.extend(
            (0..width)
                .filter(|&i| !composite[i])
                .map(|i| seg_lo + i as u64),
        );
        seg_lo = seg_hi;
    }
    Ok(PrimeBand { lo, hi, primes })
}

fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Largest integer `r` with `r^den <= n^num`, i.e. `floor(n^(num/den))`,
/// computed without floating-point rounding.
pub fn floor_rational_power(n: u64, num: u32, den: u32) -> u64 {
    let target = (n as u128).checked_pow(num).unwrap_or(u128::MAX);
    let guess = libm::pow(n as f64, num as f64 / den as f64) as u64;
    let fits = |r: u64| (r as u128).checked_pow(den).is_some_and(|v| v <= target);
    let mut r = guess.saturating_sub(2);
    while !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

/// `P(n) mod q`, each monomial reduced with 128-bit intermediates so nothing
/// overflows for any `i64` input.
pub fn eval_poly_mod(poly: &IntPolynomial, n: &[i64], q: u64) -> Result<u64> {
    if n.len() != poly.dim() {
        return Err(Error::input(alloc::format!(
            "point has {} components, polynomial has dimension {}",
            n.len(),
            poly.dim()
        )));
    }
    if q < 2 {
        return Err(Error::input("modulus must be at least 2"));
    }
    let residues: Vec<u64> = n
        .iter()
        .map(|&x| (x as i128).rem_euclid(q as i128) as u64)
        .collect();
    Ok(eval_residues_mod(poly, &residues, q))
}

/// `P(r) mod q` for an already reduced residue vector. No validation.
pub(crate) fn eval_residues_mod(poly: &IntPolynomial, r: &[u64], q: u64) -> u64 {
    let mut acc = 0u64;
    for (exps, coeff) in poly.terms() {
        let mut term = (coeff as i128).rem_euclid(q as i128) as u64;
        for (&x, &e) in r.iter().zip(exps) {
            if e > 0 {
                term = mul_mod(term, pow_mod(x, e as u64, q), q);
            }
        }
        acc = ((acc as u128 + term as u128) % q as u128) as u64;
    }
    acc
}

fn check_pair_args(q: u64, qp: u64, a: f64) -> Result<()> {
    if q == 0 || qp == 0 {
        return Err(Error::input("q and q' must be positive"));
    }
    if !(a >= 0.0) {
        return Err(Error::input("A must be a non-negative real"));
    }
    Ok(())
}

/// Largest `k >= 0` with `k * step <= a`, capped at `cap`.
fn max_multiple(a: f64, step: i128, cap: i128) -> i128 {
    let raw = libm::floor(a / step as f64);
    if raw >= cap as f64 {
        return cap;
    }
    let mut k = raw as i128;
    while k > 0 && (k * step) as f64 > a {
        k -= 1;
    }
    while k < cap && ((k + 1) * step) as f64 <= a {
        k += 1;
    }
    k
}

/// Walks the lattice points of the lines `b q' - b' q = k g` for
/// `g = gcd(q, q')` and `0 < |k g| <= a` (plus `k = 0` if `include_zero`),
/// restricted to `b` in `b_range` and `b'` in `bp_range`.
///
/// For each line the admissible `b` form an arithmetic progression with step
/// `q / g`, so the cost is `O(a / g)` lines plus the points visited.
pub fn for_each_pair_within(
    q: u64,
    qp: u64,
    a: f64,
    b_range: RangeInclusive<i64>,
    bp_range: RangeInclusive<i64>,
    include_zero: bool,
    mut visit: impl FnMut(i64, i64),
) -> Result<()> {
    check_pair_args(q, qp, a)?;
    walk_lines(q, qp, a, b_range, bp_range, include_zero, |first, last, step, line| {
        let mut b = first;
        while b <= last {
            let bp = (b * line.mp - line.k) / line.m;
            visit(b as i64, bp as i64);
            b += step;
        }
    });
    Ok(())
}

/// Counting twin of [`for_each_pair_within`]: `O(1)` per line.
pub fn count_pairs_within(
    q: u64,
    qp: u64,
    a: f64,
    b_range: RangeInclusive<i64>,
    bp_range: RangeInclusive<i64>,
    include_zero: bool,
) -> Result<u64> {
    check_pair_args(q, qp, a)?;
    let mut total = 0u64;
    walk_lines(q, qp, a, b_range, bp_range, include_zero, |first, last, step, _| {
        total += ((last - first) / step + 1) as u64;
    });
    Ok(total)
}

struct Line {
    k: i128,
    m: i128,
    mp: i128,
}

fn walk_lines(
    q: u64,
    qp: u64,
    a: f64,
    b_range: RangeInclusive<i64>,
    bp_range: RangeInclusive<i64>,
    include_zero: bool,
    mut on_line: impl FnMut(i128, i128, i128, &Line),
) {
    let (b_lo, b_hi) = (*b_range.start() as i128, *b_range.end() as i128);
    let (bp_lo, bp_hi) = (*bp_range.start() as i128, *bp_range.end() as i128);
    if b_lo > b_hi || bp_lo > bp_hi {
        return;
    }
    let g = gcd(q, qp) as i128;
    let m = q as i128 / g;
    let mp = qp as i128 / g;
    let inv_mp = mod_inverse(mp, m).expect("q/g and q'/g are coprime");
    // |b m' - b' m| over the box never exceeds this
    let reach = (b_hi * mp - bp_lo * m)
        .abs()
        .max((b_lo * mp - bp_hi * m).abs());
    let kmax = max_multiple(a, g, reach + 1);
    for k in -kmax..=kmax {
        if k == 0 && !include_zero {
            continue;
        }
        // b m' - b' m = k  with b' in [bp_lo, bp_hi]
        let lo = (k + m * bp_lo).div_euclid(mp) + i128::from((k + m * bp_lo).rem_euclid(mp) != 0);
        let hi = (k + m * bp_hi).div_euclid(mp);
        let lo = lo.max(b_lo);
        let hi = hi.min(b_hi);
        if lo > hi {
            continue;
        }
        // b = k * inv(m') mod m
        let residue = (k * inv_mp).rem_euclid(m);
        let first = lo + (residue - lo).rem_euclid(m);
        if first > hi {
            continue;
        }
        let last = first + (hi - first) / m * m;
        on_line(first, last, m, &Line { k, m, mp });
    }
}

/// Number of `(b, b')` with `1 <= b <= q`, `1 <= b' <= q'` and
/// `0 < |b q' - b' q| <= a`, by walking the lines `b q' - b' q = k gcd(q, q')`.
/// Never exceeds `2a`.
pub fn lattice_pair_count(q: u64, qp: u64, a: f64) -> Result<u64> {
    count_pairs_within(q, qp, a, 1..=q as i64, 1..=qp as i64, false)
}

/// Same count as [`lattice_pair_count`] by scanning all `q q'` pairs.
pub fn lattice_pair_count_brute(q: u64, qp: u64, a: f64) -> Result<u64> {
    check_pair_args(q, qp, a)?;
    let mut count = 0u64;
    for b in 1..=q as i128 {
        for bp in 1..=qp as i128 {
            let diff = (b * qp as i128 - bp * q as i128).abs();
            if diff > 0 && diff as f64 <= a {
                count += 1;
            }
        }
    }
    Ok(count)
}
