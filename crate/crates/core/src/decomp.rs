//! The folded datum `Z(r) = sum_m zeta(m q + r)` with
//! `zeta(n) = phi(n/N) e^{2 pi i delta.n}`, its normalized spectrum
//! `Zhat(l) = q^{-d} sum_r Z(r) e^{-2 pi i r.l / q}`, and the split of the
//! solution at `(b/q + delta, 1/q)` into `M = Zhat(0) S(b)` and the rest.
//!
//! Also home to the cyclic second differences used by the summation-by-parts
//! argument that makes the remainder small.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::datum::{cis_turns, evaluate_initial, evaluate_solution, Datum, RationalPoint};
use crate::fft::{transform_axes, Direction};
use crate::grid::{grid_len, unflatten, ResidueGrid};
use crate::poly::IntPolynomial;
use crate::sum::ComplexSum;
use crate::weyl::{phase_table, RootTable, WeylTable};
use crate::{Complex64, Error, Result};

/// `Z` on `F_q^d` for one datum and perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedZ {
    grid: ResidueGrid,
    n_scale: u64,
    delta: Vec<f64>,
}

impl FoldedZ {
    /// Wraps an arbitrary residue function, e.g. for spectral tests.
    pub fn from_grid(grid: ResidueGrid, n_scale: u64, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != grid.dim() {
            return Err(Error::input("delta dimension does not match grid"));
        }
        Ok(FoldedZ {
            grid,
            n_scale,
            delta,
        })
    }

    pub fn q(&self) -> u64 {
        self.grid.q()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn n_scale(&self) -> u64 {
        self.n_scale
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn grid(&self) -> &ResidueGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        self.grid.values()
    }

    /// `sum_r Z(r)`, which equals `sum_n zeta(n)`.
    pub fn total(&self) -> Complex64 {
        self.values().iter().copied().collect::<ComplexSum>().value()
    }
}

fn check_fold(f: &Datum, q: u64, delta: &[f64]) -> Result<()> {
    if delta.len() != f.dim() {
        return Err(Error::input("delta dimension does not match datum"));
    }
    if q < 2 {
        return Err(Error::input(alloc::format!("folding needs q >= 2, got {q}")));
    }
    Ok(())
}

/// Folds the full coefficient box mod `q`, attaching `e^{2 pi i delta.n}`
/// to each coefficient before it is added to its residue class.
pub fn fold(f: &Datum, q: u64, delta: &[f64]) -> Result<FoldedZ> {
    check_fold(f, q, delta)?;
    let d = f.dim();
    let len = grid_len(q, d, "folded Z")?;
    let mut acc = vec![ComplexSum::new(); len];
    f.for_each(|n, v| {
        if v == 0.0 {
            return;
        }
        let drift: f64 = n.iter().zip(delta).map(|(&x, &dl)| x as f64 * dl).sum();
        let idx = n
            .iter()
            .fold(0usize, |a, &x| a * q as usize + x.rem_euclid(q as i64) as usize);
        acc[idx].add(cis_turns(drift) * v);
    });
    Ok(FoldedZ {
        grid: ResidueGrid::from_values(q, d, acc.iter().map(ComplexSum::value).collect())?,
        n_scale: f.n_scale(),
        delta: delta.to_vec(),
    })
}

/// Per-axis folds `Z_i(r) = sum_{n = r mod q} psi(n/N) e^{2 pi i delta_i n}`.
/// Because `zeta` is a product over axes, `Z(r) = prod_i Z_i(r_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFolds {
    q: u64,
    axes: Vec<Vec<Complex64>>,
}

impl AxisFolds {
    pub fn new(f: &Datum, q: u64, delta: &[f64]) -> Result<Self> {
        check_fold(f, q, delta)?;
        let axes = delta.iter().map(|&dl| fold_axis(f, q, dl)).collect();
        Ok(AxisFolds { q, axes })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn axis(&self, i: usize) -> &[Complex64] {
        &self.axes[i]
    }

    /// Materializes `Z` as a product grid.
    pub fn to_folded(&self, n_scale: u64, delta: &[f64]) -> Result<FoldedZ> {
        let grid = ResidueGrid::from_fn(self.q, self.axes.len(), |r| {
            r.iter()
                .zip(&self.axes)
                .map(|(&ri, ax)| ax[ri as usize])
                .product()
        })?;
        Ok(FoldedZ {
            grid,
            n_scale,
            delta: delta.to_vec(),
        })
    }
}

/// Re-seed interval for the plane-wave recurrence.
const RESEED: usize = 256;

fn fold_axis(f: &Datum, q: u64, delta: f64) -> Vec<Complex64> {
    let mut acc = vec![ComplexSum::new(); q as usize];
    let lo = f.lo();
    let step = cis_turns(delta);
    let mut wave = Complex64::new(1.0, 0.0);
    let mut r = lo.rem_euclid(q as i64) as usize;
    for (i, &v) in f.profile().iter().enumerate() {
        if i % RESEED == 0 {
            wave = cis_turns(delta * (lo + i as i64) as f64);
        }
        if v != 0.0 {
            acc[r].add(wave * v);
        }
        wave *= step;
        r += 1;
        if r == q as usize {
            r = 0;
        }
    }
    acc.iter().map(ComplexSum::value).collect()
}

/// Same as [`fold`] through the per-axis factorization: `O(d N)` instead of
/// `O(N^d)` before the final product.
pub fn fold_separable(f: &Datum, q: u64, delta: &[f64]) -> Result<FoldedZ> {
    AxisFolds::new(f, q, delta)?.to_folded(f.n_scale(), delta)
}

/// `Zhat` on `F_q^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralZ {
    hat: ResidueGrid,
}

impl SpectralZ {
    pub fn q(&self) -> u64 {
        self.hat.q()
    }

    pub fn dim(&self) -> usize {
        self.hat.dim()
    }

    pub fn values(&self) -> &[Complex64] {
        self.hat.values()
    }

    pub fn get(&self, l: &[i64]) -> Complex64 {
        self.hat.get(l)
    }

    pub fn zhat0(&self) -> Complex64 {
        self.hat.values()[0]
    }

    /// `Z(r) = sum_l Zhat(l) e^{2 pi i r.l / q}`.
    pub fn invert(&self) -> ResidueGrid {
        let mut values = self.hat.values().to_vec();
        transform_axes(&mut values, self.q() as usize, self.dim(), Direction::Inverse);
        ResidueGrid::from_values(self.q(), self.dim(), values).expect("same shape")
    }
}

pub fn spectrum(z: &FoldedZ) -> SpectralZ {
    let q = z.q();
    let d = z.dim();
    let mut values = z.values().to_vec();
    transform_axes(&mut values, q as usize, d, Direction::Forward);
    let scale = 1.0 / libm::pow(q as f64, d as f64);
    for v in &mut values {
        *v *= scale;
    }
    SpectralZ {
        hat: ResidueGrid::from_values(q, d, values).expect("same shape"),
    }
}

/// `M = Zhat(0) S(b)` and `E = u - M`, with `u` the directly summed solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainError {
    pub main: Complex64,
    pub error: Complex64,
    pub zhat0: Complex64,
    pub solution: Complex64,
}

impl MainError {
    /// `|E| / |M|`.
    pub fn ratio(&self) -> f64 {
        self.error.norm() / self.main.norm()
    }
}

/// Splits the solution at `pt` (time `1/q`) into main and error terms.
///
/// `Zhat(0) = q^{-d} sum_n zeta(n)` is summed directly from the datum and
/// `E` is the difference between the direct solution and `M`.
pub fn main_error_split(
    poly: &IntPolynomial,
    f: &Datum,
    pt: &RationalPoint,
    table: &WeylTable,
) -> Result<MainError> {
    if pt.q() != table.q() {
        return Err(Error::input(alloc::format!(
            "point denominator {} does not match table modulus {}",
            pt.q(),
            table.q()
        )));
    }
    if table.dim() != pt.dim() {
        return Err(Error::input("table dimension does not match point"));
    }
    let d = pt.dim();
    let zhat0 = evaluate_initial(f, pt.delta())? / libm::pow(pt.q() as f64, d as f64);
    let b: Vec<i64> = pt.b().iter().map(|&x| x as i64).collect();
    let main = zhat0 * table.get(&b);
    let solution = evaluate_solution(poly, f, pt)?;
    Ok(MainError {
        main,
        error: solution - main,
        zhat0,
        solution,
    })
}

/// `sum_{l != 0} Zhat(l) S(b + l)`, the error term in its spectral form.
pub fn error_term_spectral(hat: &SpectralZ, table: &WeylTable, b: &[u64]) -> Result<Complex64> {
    if hat.q() != table.q() || hat.dim() != table.dim() || b.len() != hat.dim() {
        return Err(Error::input("spectrum, table and shift must share q and d"));
    }
    let q = hat.q();
    let mut l = vec![0u64; hat.dim()];
    let mut shifted = vec![0i64; hat.dim()];
    let mut acc = ComplexSum::new();
    for (idx, &zl) in hat.values().iter().enumerate().skip(1) {
        unflatten(q, idx, &mut l);
        for ((s, &li), &bi) in shifted.iter_mut().zip(&l).zip(b) {
            *s = (li + bi) as i64;
        }
        acc.add(zl * table.get(&shifted));
    }
    Ok(acc.value())
}

/// Evaluates `sum_r Z(r) e^{2 pi i (b.r + P(r)) / q}` for one symbol and
/// prime, reusing the residue table `P(r) mod q` across calls.
#[derive(Debug, Clone)]
pub struct CycleEvaluator {
    q: u64,
    d: usize,
    phases: Vec<u32>,
    roots: RootTable,
}

impl CycleEvaluator {
    pub fn new(poly: &IntPolynomial, q: u64) -> Result<Self> {
        Ok(CycleEvaluator {
            q,
            d: poly.dim(),
            phases: phase_table(poly, q)?,
            roots: RootTable::new(q),
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// One shift `b`, with `Z` given by its per-axis factors.
    pub fn evaluate(&self, folds: &AxisFolds, b: &[u64]) -> Complex64 {
        let q = self.q;
        let mut r = vec![0u64; self.d];
        let mut acc = ComplexSum::new();
        for (idx, &p) in self.phases.iter().enumerate() {
            unflatten(q, idx, &mut r);
            let mut weight = Complex64::new(1.0, 0.0);
            let mut linear = p as u64;
            for (i, &ri) in r.iter().enumerate() {
                weight *= folds.axis(i)[ri as usize];
                linear = (linear + b[i] * ri) % q;
            }
            acc.add(weight * self.roots.get(linear));
        }
        acc.value()
    }

    /// Every shift at once: the inverse transform of `Z(r) e^{2 pi i P(r)/q}`.
    pub fn evaluate_all(&self, z: &FoldedZ) -> ResidueGrid {
        let mut values: Vec<Complex64> = z
            .values()
            .iter()
            .zip(&self.phases)
            .map(|(&zr, &p)| zr * self.roots.get(p as u64))
            .collect();
        transform_axes(&mut values, self.q as usize, self.d, Direction::Inverse);
        ResidueGrid::from_values(self.q, self.d, values).expect("same shape")
    }
}

/// Which second difference to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Single(usize),
    All,
}

/// Cyclic second differences `g(r + e_j) - 2 g(r) + g(r - e_j)`, on one axis
/// or summed over all of them.
pub fn discrete_laplacian(g: &ResidueGrid, axis: Axis) -> Result<ResidueGrid> {
    let d = g.dim();
    let axes: Vec<usize> = match axis {
        Axis::Single(j) if j < d => vec![j],
        Axis::Single(j) => {
            return Err(Error::input(alloc::format!("axis {j} out of range for d = {d}")))
        }
        Axis::All => (0..d).collect(),
    };
    let q = g.q() as usize;
    let vals = g.values();
    let mut out = vec![Complex64::new(0.0, 0.0); vals.len()];
    let mut r = vec![0u64; d];
    for (idx, slot) in out.iter_mut().enumerate() {
        unflatten(g.q(), idx, &mut r);
        let mut acc = Complex64::new(0.0, 0.0);
        for &j in &axes {
            let stride = g.stride(j);
            let rj = r[j] as usize;
            let up = if rj + 1 == q { idx + stride - q * stride } else { idx + stride };
            let down = if rj == 0 { idx + (q - 1) * stride } else { idx - stride };
            acc += vals[up] - vals[idx] * 2.0 + vals[down];
        }
        *slot = acc;
    }
    ResidueGrid::from_values(g.q(), d, out)
}

/// `A(l) = -4 sum_j sin^2(pi l_j / q)`, the eigenvalue of the cyclic
/// Laplacian on `r -> e^{-2 pi i r.l / q}`.
pub fn laplacian_symbol(l: &[u64], q: u64) -> f64 {
    -4.0 * l
        .iter()
        .map(|&lj| {
            let s = libm::sin(PI * (lj % q) as f64 / q as f64);
            s * s
        })
        .sum::<f64>()
}

/// `|sum_r (Lap g)(r) h(r) - sum_r g(r) (Lap h)(r)|`.
pub fn sbp_residual(g: &ResidueGrid, h: &ResidueGrid) -> Result<f64> {
    if g.q() != h.q() || g.dim() != h.dim() {
        return Err(Error::input("summation by parts needs matching q and d"));
    }
    let lg = discrete_laplacian(g, Axis::All)?;
    let lh = discrete_laplacian(h, Axis::All)?;
    let left: ComplexSum = lg.values().iter().zip(h.values()).map(|(a, b)| a * b).collect();
    let right: ComplexSum = g.values().iter().zip(lh.values()).map(|(a, b)| a * b).collect();
    Ok((left.value() - right.value()).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::datum_coefficients;
    use crate::weyl::weyl_table;

    fn x_sq() -> IntPolynomial {
        IntPolynomial::from_terms(1, [(vec![2], 1)]).unwrap()
    }

    #[test]
    fn unperturbed_fold_conserves_mass() {
        let f = datum_coefficients(64, 1).unwrap();
        let z = fold(&f, 5, &[0.0]).unwrap();
        for v in z.values() {
            assert!(v.re > 0.0 && v.im == 0.0);
            // at most ceil(1.75 N / q) terms, each at most 1
            assert!(v.re <= (1.75f64 * 64.0 / 5.0).ceil());
        }
        assert!((z.total().re - f.mass()).abs() < 1e-12 * f.mass());
    }

    #[test]
    fn fold_argument_checks() {
        let f = datum_coefficients(64, 1).unwrap();
        assert!(fold(&f, 1, &[0.0]).is_err());
        assert!(fold(&f, 13, &[0.0, 0.0]).is_err());
        // q beyond the box still folds; every class holds at most one term
        let z = fold(&f, 211, &[0.0]).unwrap();
        assert!((z.total().re - f.mass()).abs() < 1e-12 * f.mass());
    }

    #[test]
    fn zhat0_scaling() {
        let (n, q) = (1024u64, 31u64);
        for d in 1..=2 {
            let f = datum_coefficients(n, d).unwrap();
            let hat = spectrum(&fold_separable(&f, q, &vec![0.0; d]).unwrap());
            let scaled = hat.zhat0().re * libm::pow(q as f64 / n as f64, d as f64);
            let target = libm::pow(1.125, d as f64);
            assert!((scaled / target - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn separable_fold_matches_box_fold() {
        for (n, q, delta) in [(64u64, 7u64, vec![3e-3, -1e-3]), (96, 11, vec![0.0, 2e-4])] {
            let f = datum_coefficients(n, 2).unwrap();
            let a = fold(&f, q, &delta).unwrap();
            let b = fold_separable(&f, q, &delta).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_of_constant_and_character() {
        let q = 11;
        let ones = FoldedZ {
            grid: ResidueGrid::from_fn(q, 2, |_| Complex64::new(1.0, 0.0)).unwrap(),
            n_scale: 0,
            delta: vec![0.0, 0.0],
        };
        let hat = spectrum(&ones);
        assert!((hat.zhat0() - 1.0).norm() < 1e-12);
        assert!(hat.values()[1..].iter().all(|z| z.norm() < 1e-12));

        let l0 = [3u64, 7u64];
        let wave = FoldedZ {
            grid: ResidueGrid::from_fn(q, 2, |r| {
                cis_turns(((r[0] * l0[0] + r[1] * l0[1]) % q) as f64 / q as f64)
            })
            .unwrap(),
            n_scale: 0,
            delta: vec![0.0, 0.0],
        };
        let hat = spectrum(&wave);
        for (idx, z) in hat.values().iter().enumerate() {
            let expect = if idx == (3 * 11 + 7) { 1.0 } else { 0.0 };
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn spectrum_inverts() {
        let f = datum_coefficients(256, 1).unwrap();
        let z = fold(&f, 17, &[1e-4]).unwrap();
        let back = spectrum(&z).invert();
        let scale = z.grid().norm_sq().sqrt();
        for (a, b) in back.values().iter().zip(z.values()) {
            assert!((a - b).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn realistic_spectrum_peaks_at_zero() {
        let f = datum_coefficients(256, 1).unwrap();
        let hat = spectrum(&fold(&f, 17, &[0.0]).unwrap());
        let z0 = hat.zhat0().norm();
        let q = 17u64;
        for l in 1..q {
            assert!(hat.values()[l as usize].norm() <= z0);
        }
        // magnitudes fall off as l moves away from 0 mod q
        let near = hat.values()[1].norm();
        let far = hat.values()[(q / 2) as usize].norm();
        assert!(far <= near);
    }

    #[test]
    fn split_reconstructs_solution() {
        let p = x_sq();
        let f = datum_coefficients(256, 1).unwrap();
        let t = weyl_table(&p, 17).unwrap();
        let pt = RationalPoint::new(&[3], 17, vec![0.0]).unwrap();
        let me = main_error_split(&p, &f, &pt, &t).unwrap();
        let u = evaluate_solution(&p, &f, &pt).unwrap();
        assert!(((me.main + me.error) - u).norm() <= 1e-9 * u.norm());
        // the spectral error agrees with the subtraction
        let hat = spectrum(&fold(&f, 17, &[0.0]).unwrap());
        let e = error_term_spectral(&hat, &t, &[3]).unwrap();
        assert!((me.main + e - u).norm() <= 1e-9 * u.norm());
        assert!((hat.zhat0() - me.zhat0).norm() < 1e-9 * me.zhat0.norm());
    }

    #[test]
    fn split_rejects_mismatched_modulus() {
        let p = x_sq();
        let f = datum_coefficients(256, 1).unwrap();
        let t = weyl_table(&p, 13).unwrap();
        let pt = RationalPoint::new(&[3], 17, vec![0.0]).unwrap();
        assert!(main_error_split(&p, &f, &pt, &t).is_err());
    }

    #[test]
    fn fold_path_reproduces_direct_solution() {
        let p = IntPolynomial::family_diagonal(2, 3).unwrap();
        let f = datum_coefficients(96, 2).unwrap();
        let q = 13;
        let delta = [2e-4, -1e-4];
        let eval = CycleEvaluator::new(&p, q).unwrap();
        let folds = AxisFolds::new(&f, q, &delta).unwrap();
        let all = eval.evaluate_all(&folds.to_folded(96, &delta).unwrap());
        for b in [[0u64, 0u64], [5, 9], [12, 1]] {
            let pt = RationalPoint::new(&[b[0] as i64, b[1] as i64], q, delta.to_vec()).unwrap();
            let u = evaluate_solution(&p, &f, &pt).unwrap();
            let v = eval.evaluate(&folds, &b);
            let w = all.get(&[b[0] as i64, b[1] as i64]);
            assert!((u - v).norm() <= 1e-9 * u.norm().max(1.0));
            assert!((u - w).norm() <= 1e-9 * u.norm().max(1.0));
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = ResidueGrid::from_fn(7, 2, |_| Complex64::new(2.5, -1.0)).unwrap();
        let lg = discrete_laplacian(&g, Axis::All).unwrap();
        assert!(lg.values().iter().all(|z| z.norm() < 1e-14));
        assert!(discrete_laplacian(&g, Axis::Single(2)).is_err());
        assert_eq!(laplacian_symbol(&[0, 0], 7), 0.0);
    }

    #[test]
    fn laplacian_eigenrelation() {
        for q in [5u64, 17] {
            for d in 1..=2usize {
                let len = q.pow(d as u32) as usize;
                let mut l = vec![0u64; d];
                for idx in 0..len {
                    unflatten(q, idx, &mut l);
                    let g = ResidueGrid::from_fn(q, d, |r| {
                        let dot: u64 = r.iter().zip(&l).map(|(a, b)| a * b).sum::<u64>() % q;
                        cis_turns(-(dot as f64) / q as f64)
                    })
                    .unwrap();
                    let a = laplacian_symbol(&l, q);
                    let lg = discrete_laplacian(&g, Axis::All).unwrap();
                    for (x, y) in lg.values().iter().zip(g.values()) {
                        assert!((x - y * a).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn single_axis_laplacians_sum_to_full() {
        let g = ResidueGrid::from_fn(5, 3, |r| {
            Complex64::new((r[0] * r[1]) as f64, (r[2] + 2 * r[0]) as f64)
        })
        .unwrap();
        let full = discrete_laplacian(&g, Axis::All).unwrap();
        let mut sum = vec![Complex64::new(0.0, 0.0); g.len()];
        for j in 0..3 {
            let part = discrete_laplacian(&g, Axis::Single(j)).unwrap();
            for (s, v) in sum.iter_mut().zip(part.values()) {
                *s += v;
            }
        }
        for (a, b) in full.values().iter().zip(&sum) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sbp_symmetric_cases() {
        let g = ResidueGrid::from_fn(17, 1, |r| Complex64::new(r[0] as f64, 1.0)).unwrap();
        assert_eq!(sbp_residual(&g, &g).unwrap(), 0.0);
        let c = ResidueGrid::from_fn(17, 1, |_| Complex64::new(3.0, 0.0)).unwrap();
        let h = ResidueGrid::from_fn(17, 1, |r| Complex64::new(0.0, (r[0] * r[0]) as f64)).unwrap();
        assert!(sbp_residual(&c, &h).unwrap() < 1e-10);
        let other = ResidueGrid::from_fn(13, 1, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(sbp_residual(&g, &other).is_err());
    }
}
