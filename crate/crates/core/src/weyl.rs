//! Complete exponential sums
//! `S(b) = sum_{r in F_q^d} e^{2 pi i (P(r) + b.r) / q}`
//! and the statistics built on them: the Parseval defect, the empirical
//! Deligne bound `|S(b)| <= (k - 1) q^{d/2}` and the good set
//! `G(q) = { b : |S(b)| >= c q^{d/2} }`.
//!
//! Every phase is reduced mod `q` in integers and looked up in a table of
//! `q`-th roots of unity, so the sums never see a large floating argument.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fft::{transform_axes, Direction};
use crate::grid::{grid_len, unflatten, ResidueGrid};
use crate::numtheory::{eval_residues_mod, is_prime};
use crate::poly::IntPolynomial;
use crate::sum::{CompensatedSum, ComplexSum};
use crate::{Complex64, Error, Result};

/// Tables above this many entries are streamed slab by slab instead of
/// materialized.
pub const STREAM_THRESHOLD: u64 = 1 << 24;

/// Relative slack on the Deligne comparison; `X^2` attains the bound exactly.
pub const DELIGNE_SLACK: f64 = 1e-9;

/// `e^{2 pi i m / q}` for `m = 0..q`, each from an exactly reduced argument.
#[derive(Debug, Clone)]
pub struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Self {
        let roots = (0..q)
            .map(|m| {
                let (s, c) = libm::sincos(2.0 * PI * m as f64 / q as f64);
                Complex64::new(c, s)
            })
            .collect();
        RootTable { q, roots }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// `e^{2 pi i m / q}` for `m` already in `[0, q)`.
    #[inline]
    pub fn get(&self, m: u64) -> Complex64 {
        self.roots[m as usize]
    }

    /// `e^{2 pi i m / q}` for any integer `m`.
    #[inline]
    pub fn get_signed(&self, m: i64) -> Complex64 {
        self.roots[m.rem_euclid(self.q as i64) as usize]
    }
}

/// `P(r) mod q` for every `r in F_q^d`, flat row-major.
pub fn phase_table(poly: &IntPolynomial, q: u64) -> Result<Vec<u32>> {
    if q < 2 || q > u32::MAX as u64 {
        return Err(Error::input("phase tables need 2 <= q < 2^32"));
    }
    let d = poly.dim();
    let len = grid_len(q, d, "phase table")?;
    let mut r = vec![0u64; d];
    Ok((0..len)
        .map(|idx| {
            unflatten(q, idx, &mut r);
            eval_residues_mod(poly, &r, q) as u32
        })
        .collect())
}

fn require_prime(q: u64) -> Result<()> {
    if !is_prime(q) {
        return Err(Error::input(alloc::format!("modulus {q} is not prime")));
    }
    Ok(())
}

/// One complete sum `S(b)`, summed term by term.
pub fn weyl_sum_direct(poly: &IntPolynomial, q: u64, b: &[u64]) -> Result<Complex64> {
    require_prime(q)?;
    let d = poly.dim();
    if b.len() != d {
        return Err(Error::input(alloc::format!(
            "shift has {} components, polynomial has dimension {d}",
            b.len()
        )));
    }
    if b.iter().any(|&x| x >= q) {
        return Err(Error::input("shift components must lie in [0, q)"));
    }
    let len = grid_len(q, d, "direct Weyl sum")?;
    let roots = RootTable::new(q);
    let mut r = vec![0u64; d];
    let mut acc = ComplexSum::new();
    for idx in 0..len {
        unflatten(q, idx, &mut r);
        let linear = r
            .iter()
            .zip(b)
            .fold(0u128, |s, (&x, &y)| (s + x as u128 * y as u128) % q as u128);
        let phase = (eval_residues_mod(poly, &r, q) as u128 + linear) % q as u128;
        acc.add(roots.get(phase as u64));
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildMethod {
    Direct,
    Dft,
}

/// `S(b)` for every `b in F_q^d`.
#[derive(Debug, Clone)]
pub struct WeylTable {
    grid: ResidueGrid,
    method: BuildMethod,
}

impl WeylTable {
    pub fn q(&self) -> u64 {
        self.grid.q()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn method(&self) -> BuildMethod {
        self.method
    }

    pub fn values(&self) -> &[Complex64] {
        self.grid.values()
    }

    pub fn grid(&self) -> &ResidueGrid {
        &self.grid
    }

    /// `S(b)`, components of `b` taken mod `q`.
    pub fn get(&self, b: &[i64]) -> Complex64 {
        self.grid.get(b)
    }

    /// `q^{d/2}`, the square-root-cancellation scale.
    pub fn scale(&self) -> f64 {
        libm::pow(self.q() as f64, self.dim() as f64 / 2.0)
    }
}

/// Builds the table as a `d`-dimensional length-`q` transform of
/// `r -> e^{2 pi i P(r) / q}`.
pub fn weyl_table(poly: &IntPolynomial, q: u64) -> Result<WeylTable> {
    weyl_table_with(poly, q, BuildMethod::Dft)
}

pub fn weyl_table_with(poly: &IntPolynomial, q: u64, method: BuildMethod) -> Result<WeylTable> {
    require_prime(q)?;
    let d = poly.dim();
    grid_len(q, d, "Weyl table")?;
    let grid = match method {
        BuildMethod::Dft => {
            let roots = RootTable::new(q);
            let phases = phase_table(poly, q)?;
            let mut values: Vec<Complex64> = phases.iter().map(|&m| roots.get(m as u64)).collect();
            transform_axes(&mut values, q as usize, d, Direction::Inverse);
            ResidueGrid::from_values(q, d, values)?
        }
        BuildMethod::Direct => {
            let mut failure = None;
            let grid = ResidueGrid::from_fn(q, d, |b| match weyl_sum_direct(poly, q, b) {
                Ok(z) => z,
                Err(e) => {
                    failure = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            grid
        }
    };
    Ok(WeylTable { grid, method })
}

fn defect(sum_sq: f64, q: u64, d: usize) -> f64 {
    let target = libm::pow(q as f64, 2.0 * d as f64);
    libm::fabs(sum_sq - target) / target
}

/// `|sum_b |S(b)|^2 - q^{2d}| / q^{2d}`.
pub fn parseval_defect(table: &WeylTable) -> f64 {
    let sum_sq: CompensatedSum = table.values().iter().map(|z| z.norm_sqr()).collect();
    defect(sum_sq.value(), table.q(), table.dim())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeligneReport {
    pub max_modulus: f64,
    /// `(k - 1) q^{d/2}`.
    pub bound: f64,
    pub ok: bool,
    /// `(k - 1)^d q^{d/2}`, the form Deligne's theorem gives for every `d`.
    /// Diagonal forms reach past `bound` when `d >= 2` since the sum factorises.
    pub product_bound: f64,
    pub within_product_bound: bool,
}

fn deligne_report(max_modulus: f64, q: u64, d: usize, k: u32) -> DeligneReport {
    let root = libm::pow(q as f64, d as f64 / 2.0);
    let bound = (k as f64 - 1.0) * root;
    let product_bound = libm::pow(k as f64 - 1.0, d as f64) * root;
    DeligneReport {
        max_modulus,
        bound,
        ok: max_modulus <= bound * (1.0 + DELIGNE_SLACK),
        product_bound,
        within_product_bound: max_modulus <= product_bound * (1.0 + DELIGNE_SLACK),
    }
}

/// Compares `max_b |S(b)|` with `(k - 1) q^{d/2}`. Reports only; the caller
/// is responsible for excluding primes dividing `k`.
pub fn deligne_check(table: &WeylTable, k: u32) -> DeligneReport {
    let max = table.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    deligne_report(max, table.q(), table.dim(), k)
}

/// The residues `b` with `|S(b)| >= c q^{d/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodSet {
    q: u64,
    d: usize,
    c: f64,
    k: u32,
    /// Flat indices, ascending.
    members: Vec<u32>,
    deligne_ok: bool,
}

impl GoodSet {
    /// Assembles a good set from known members (e.g. read back from disk).
    pub fn from_members(q: u64, d: usize, c: f64, k: u32, mut members: Vec<u32>) -> Result<Self> {
        let len = grid_len(q, d, "good set")? as u64;
        members.sort_unstable();
        members.dedup();
        if members.last().is_some_and(|&m| m as u64 >= len) {
            return Err(Error::input("good-set member outside F_q^d"));
        }
        Ok(GoodSet {
            q,
            d,
            c,
            k,
            members,
            deligne_ok: true,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Flat indices of the members, ascending.
    pub fn flat_members(&self) -> &[u32] {
        &self.members
    }

    /// Members as residue vectors.
    pub fn members(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.members.iter().map(move |&idx| {
            let mut b = vec![0u64; self.d];
            unflatten(self.q, idx as usize, &mut b);
            b
        })
    }

    pub fn contains_flat(&self, idx: usize) -> bool {
        self.members.binary_search(&(idx as u32)).is_ok()
    }

    pub fn contains(&self, b: &[u64]) -> bool {
        b.len() == self.d
            && b.iter().all(|&x| x < self.q)
            && self.contains_flat(b.iter().fold(0usize, |a, &x| a * self.q as usize + x as usize))
    }

    /// `|G(q)| / q^d`.
    pub fn density(&self) -> f64 {
        self.members.len() as f64 / libm::pow(self.q as f64, self.d as f64)
    }

    /// `(1 - c^2) / (k - 1)^2`, the density Parseval forces when the Deligne
    /// bound holds.
    pub fn guaranteed_density(&self) -> f64 {
        guaranteed_density(self.c, self.k)
    }

    /// Whether the Deligne bound held on the table this set came from.
    pub fn deligne_ok(&self) -> bool {
        self.deligne_ok
    }

    /// `Some(density >= guaranteed)` when the Deligne bound held, else `None`.
    pub fn meets_guarantee(&self) -> Option<bool> {
        self.deligne_ok
            .then(|| self.density() >= self.guaranteed_density())
    }
}

pub fn guaranteed_density(c: f64, k: u32) -> f64 {
    let km1 = k as f64 - 1.0;
    (1.0 - c * c) / (km1 * km1)
}

fn check_threshold(c: f64, k: u32) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::input(alloc::format!("good-set threshold c = {c} must lie in (0, 1)")));
    }
    if k < 2 {
        return Err(Error::input("good sets need degree k >= 2"));
    }
    Ok(())
}

/// Thresholds a full table.
pub fn good_set(table: &WeylTable, c: f64, k: u32) -> Result<GoodSet> {
    check_threshold(c, k)?;
    let cut = c * table.scale();
    let members = table
        .values()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= cut)
        .map(|(i, _)| i as u32)
        .collect();
    Ok(GoodSet {
        q: table.q(),
        d: table.dim(),
        c,
        k,
        members,
        deligne_ok: deligne_check(table, k).ok,
    })
}

/// A good set together with the table statistics gathered on the way.
#[derive(Debug, Clone)]
pub struct TableSummary {
    pub good: GoodSet,
    pub deligne: DeligneReport,
    pub parseval_defect: f64,
}

/// Computes the good set one slab `b_1 = const` at a time, holding only
/// `q^{d-1}` sums at once. Each slab first sums the phase grid over `r_1`
/// against `e^{2 pi i b_1 r_1 / q}` and then transforms the remaining axes.
pub fn good_set_streaming(poly: &IntPolynomial, q: u64, c: f64, k: u32) -> Result<TableSummary> {
    check_threshold(c, k)?;
    require_prime(q)?;
    let d = poly.dim();
    if d == 1 {
        return summarize(&weyl_table(poly, q)?, c, k);
    }
    let roots = RootTable::new(q);
    let phases = phase_table(poly, q)?;
    let slab = phases.len() / q as usize;
    let cut = c * libm::pow(q as f64, d as f64 / 2.0);
    let mut members = Vec::new();
    let mut max_modulus = 0.0f64;
    let mut sum_sq = CompensatedSum::new();
    let mut h = vec![Complex64::new(0.0, 0.0); slab];
    for b1 in 0..q {
        h.fill(Complex64::new(0.0, 0.0));
        for r1 in 0..q {
            let shift = (b1 * r1) % q;
            let row = &phases[r1 as usize * slab..(r1 as usize + 1) * slab];
            for (acc, &m) in h.iter_mut().zip(row) {
                *acc += roots.get((m as u64 + shift) % q);
            }
        }
        transform_axes(&mut h, q as usize, d - 1, Direction::Inverse);
        for (j, z) in h.iter().enumerate() {
            let modulus = z.norm();
            sum_sq.add(z.norm_sqr());
            max_modulus = max_modulus.max(modulus);
            if modulus >= cut {
                members.push((b1 as usize * slab + j) as u32);
            }
        }
    }
    let deligne = deligne_report(max_modulus, q, d, k);
    Ok(TableSummary {
        good: GoodSet {
            q,
            d,
            c,
            k,
            members,
            deligne_ok: deligne.ok,
        },
        deligne,
        parseval_defect: defect(sum_sq.value(), q, d),
    })
}

fn summarize(table: &WeylTable, c: f64, k: u32) -> Result<TableSummary> {
    Ok(TableSummary {
        good: good_set(table, c, k)?,
        deligne: deligne_check(table, k),
        parseval_defect: parseval_defect(table),
    })
}

/// Good set plus statistics, materializing the table when it is at most
/// [`STREAM_THRESHOLD`] entries and streaming otherwise.
pub fn good_set_for(poly: &IntPolynomial, q: u64, c: f64, k: u32) -> Result<TableSummary> {
    let len = grid_len(q, poly.dim(), "Weyl table")? as u64;
    if len > STREAM_THRESHOLD {
        good_set_streaming(poly, q, c, k)
    } else {
        summarize(&weyl_table(poly, q)?, c, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::primes_in_band;

    fn x_pow(k: u32) -> IntPolynomial {
        IntPolynomial::from_terms(1, [(vec![k], 1)]).unwrap()
    }

    #[test]
    fn gauss_sum_at_five() {
        let s = weyl_sum_direct(&x_pow(2), 5, &[0]).unwrap();
        assert!((s.re - 5f64.sqrt()).abs() < 1e-12 && s.im.abs() < 1e-12);
    }

    #[test]
    fn cubic_sum_at_seven() {
        // cubes mod 7 are {0, 1, 6}: 1 + 3 e(1/7) + 3 e(6/7) = 1 + 6 cos(2 pi / 7)
        let s = weyl_sum_direct(&x_pow(3), 7, &[0]).unwrap();
        let expect = 1.0 + 6.0 * (2.0 * PI / 7.0).cos();
        assert!((s.re - expect).abs() < 1e-12 && s.im.abs() < 1e-12);
        assert!((expect - 4.740_938_811).abs() < 1e-8);
        assert!(s.norm() <= 2.0 * 7f64.sqrt());
    }

    #[test]
    fn constant_term_rotates_phase() {
        let p = IntPolynomial::from_terms(1, [(vec![2], 1), (vec![0], 1)]).unwrap();
        let s = weyl_sum_direct(&p, 5, &[0]).unwrap();
        let expect = Complex64::from_polar(5f64.sqrt(), 2.0 * PI / 5.0);
        assert!((s - expect).norm() < 1e-12);
    }

    #[test]
    fn direct_sum_rejects_composites_and_bad_shifts() {
        assert!(weyl_sum_direct(&x_pow(2), 9, &[0]).is_err());
        assert!(weyl_sum_direct(&x_pow(2), 7, &[7]).is_err());
        assert!(weyl_sum_direct(&x_pow(2), 7, &[0, 1]).is_err());
    }

    #[test]
    fn quadratic_table_has_constant_modulus() {
        let t = weyl_table(&x_pow(2), 5).unwrap();
        for z in t.values() {
            assert!((z.norm() - 5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn table_paths_agree() {
        let p = x_pow(3);
        let fast = weyl_table(&p, 7).unwrap();
        let slow = weyl_table_with(&p, 7, BuildMethod::Direct).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).norm() < 1e-9 * 7f64.sqrt());
        }
        assert_eq!(slow.method(), BuildMethod::Direct);
    }

    #[test]
    fn parseval_examples() {
        assert!(parseval_defect(&weyl_table(&x_pow(2), 5).unwrap()) < 1e-12);
        assert!(parseval_defect(&weyl_table(&x_pow(3), 7).unwrap()) < 1e-12);
        let cubes = IntPolynomial::family_diagonal(2, 3).unwrap();
        assert!(parseval_defect(&weyl_table(&cubes, 11).unwrap()) < 1e-10);
    }

    #[test]
    fn deligne_examples() {
        let r = deligne_check(&weyl_table(&x_pow(3), 7).unwrap(), 3);
        assert!((r.max_modulus - 4.740_938_811).abs() < 1e-8);
        assert!((r.bound - 2.0 * 7f64.sqrt()).abs() < 1e-12);
        assert!(r.ok);
        for q in [3, 5, 7, 11, 101] {
            let r = deligne_check(&weyl_table(&x_pow(2), q).unwrap(), 2);
            assert!((r.max_modulus - (q as f64).sqrt()).abs() < 1e-9);
            assert!(r.ok, "equality case must pass at q = {q}");
        }
    }

    #[test]
    fn good_set_examples() {
        let g = good_set(&weyl_table(&x_pow(2), 13).unwrap(), 0.5, 2).unwrap();
        assert_eq!(g.density(), 1.0);
        let g = good_set(&weyl_table(&x_pow(3), 7).unwrap(), 0.5, 3).unwrap();
        assert!(g.density() >= 0.1875);
        assert_eq!(g.meets_guarantee(), Some(true));
        let t = weyl_table(&x_pow(3), 7).unwrap();
        assert!(good_set(&t, 0.0, 3).is_err());
        assert!(good_set(&t, 1.0, 3).is_err());
    }

    #[test]
    fn threshold_near_zero_keeps_all_nonvanishing() {
        let t = weyl_table(&x_pow(3), 13).unwrap();
        let g = good_set(&t, 1e-12, 3).unwrap();
        let nonzero = t.values().iter().filter(|z| z.norm() > 1e-9).count();
        assert!(g.len() >= nonzero);
        assert!(g.density() >= g.guaranteed_density());
    }

    #[test]
    fn streaming_matches_materialized() {
        for (p, q) in [
            (IntPolynomial::family_diagonal(2, 3).unwrap(), 13),
            (IntPolynomial::family_power_laplacian(2, 2).unwrap(), 17),
            (IntPolynomial::family_diagonal(3, 3).unwrap(), 7),
        ] {
            let full = summarize(&weyl_table(&p, q).unwrap(), 0.5, p.degree()).unwrap();
            let streamed = good_set_streaming(&p, q, 0.5, p.degree()).unwrap();
            assert_eq!(full.good.flat_members(), streamed.good.flat_members());
            assert!((full.deligne.max_modulus - streamed.deligne.max_modulus).abs() < 1e-9);
            assert!(streamed.parseval_defect < 1e-12);
        }
    }

    #[test]
    fn good_set_membership_queries() {
        let p = IntPolynomial::family_diagonal(2, 3).unwrap();
        let t = weyl_table(&p, 11).unwrap();
        let g = good_set(&t, 0.5, 3).unwrap();
        for b in g.members() {
            assert!(g.contains(&b));
            let bi: Vec<i64> = b.iter().map(|&x| x as i64).collect();
            assert!(t.get(&bi).norm() >= 0.5 * 11.0);
        }
        assert!(!g.contains(&[11, 0]));
    }

    #[test]
    fn gauss_exactness_small_primes() {
        let band = primes_in_band(3, 200).unwrap();
        for &q in band.primes() {
            let t = weyl_table(&x_pow(2), q).unwrap();
            let root = (q as f64).sqrt();
            for z in t.values() {
                assert!((z.norm() - root).abs() < 1e-9 * root, "q = {q}");
            }
        }
    }
}
