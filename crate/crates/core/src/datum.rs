//! The frequency-localized datum
//! `f_N(x) = sum_n phi(n / N) e^{2 pi i n.x}` with `phi(xi) = prod_i psi(xi_i)`,
//! its Sobolev norms, and the solution
//! `sum_n phi(n / N) e^{2 pi i (n.x + P(n) t)}` at rational points
//! `x = b / q + delta`, `t = 1 / q`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::numtheory::eval_residues_mod;
use crate::poly::IntPolynomial;
use crate::sum::{CompensatedSum, ComplexSum};
use crate::weyl::RootTable;
use crate::{Complex64, Error, Result, MAX_ENTRIES};

/// Residue phase grids up to this size are precomputed per evaluation.
const PHASE_GRID_MAX: u64 = 1 << 22;

fn g(t: f64) -> f64 {
    if t > 0.0 {
        libm::exp(-1.0 / t)
    } else {
        0.0
    }
}

/// Smooth step from 0 (t <= 0) to 1 (t >= 1) with `s(t) + s(1 - t) = 1`.
pub fn smoothstep(t: f64) -> f64 {
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

/// The fixed bump profile: 0 outside `(1/4, 2)`, 1 on `[1/2, 1]`, and
/// `exp(-1/t)` smooth steps on the two transition intervals.
/// Its integral is `1/8 + 1/2 + 1/2 = 1.125`.
pub fn bump(x: f64) -> f64 {
    if x <= 0.25 || x >= 2.0 {
        0.0
    } else if x < 0.5 {
        smoothstep(4.0 * (x - 0.25))
    } else if x <= 1.0 {
        1.0
    } else {
        smoothstep(2.0 - x)
    }
}

/// `int psi` for the fixed profile.
pub const BUMP_INTEGRAL: f64 = 1.125;

/// Coefficients `phi(n / N)` on the box `(N/4, 2N)^d`.
///
/// `phi` is a product, so only the one-dimensional profile is stored; the
/// coefficient at `n` is the product of its per-axis values.
#[derive(Debug, Clone, PartialEq)]
pub struct Datum {
    n_scale: u64,
    d: usize,
    lo: i64,
    profile: Vec<f64>,
}

impl Datum {
    pub fn n_scale(&self) -> u64 {
        self.n_scale
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Smallest integer in the per-axis support.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Largest integer in the per-axis support.
    pub fn hi(&self) -> i64 {
        self.lo + self.profile.len() as i64 - 1
    }

    /// `psi(n / N)` for `n = lo..=hi`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Number of lattice points in the support box.
    pub fn box_len(&self) -> u64 {
        (self.profile.len() as u64).pow(self.d as u32)
    }

    /// `phi(n / N)`; zero outside the box.
    pub fn coeff(&self, n: &[i64]) -> f64 {
        if n.len() != self.d {
            return 0.0;
        }
        n.iter()
            .map(|&x| {
                let i = x - self.lo;
                if i < 0 || i >= self.profile.len() as i64 {
                    0.0
                } else {
                    self.profile[i as usize]
                }
            })
            .product()
    }

    /// Visits every point of the support box in lexicographic order with its
    /// coefficient.
    pub fn for_each(&self, mut f: impl FnMut(&[i64], f64)) {
        let side = self.profile.len();
        let mut idx = vec![0usize; self.d];
        let mut n = vec![self.lo; self.d];
        loop {
            let v: f64 = idx.iter().map(|&i| self.profile[i]).product();
            f(&n, v);
            let mut axis = self.d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < side {
                    n[axis] = self.lo + idx[axis] as i64;
                    break;
                }
                idx[axis] = 0;
                n[axis] = self.lo;
            }
        }
    }

    /// `sum_n phi(n/N)^2`, the squared `L^2` norm, which the evolution
    /// preserves coefficient by coefficient.
    pub fn l2_norm_sq(&self) -> f64 {
        let line: f64 = self.profile.iter().map(|v| v * v).sum();
        libm::pow(line, self.d as f64)
    }

    /// `sum_n phi(n/N)`, the value of `f_N` at `x = 0`.
    pub fn mass(&self) -> f64 {
        let line: f64 = self.profile.iter().sum();
        libm::pow(line, self.d as f64)
    }
}

/// Tabulates `phi(n / N)` for the integer box `(N/4, 2N)^d`.
pub fn datum_coefficients(n_scale: u64, d: usize) -> Result<Datum> {
    if n_scale < 8 {
        return Err(Error::input("datum needs N >= 8"));
    }
    if d == 0 {
        return Err(Error::input("datum needs d >= 1"));
    }
    // integers strictly between N/4 and 2N
    let lo = (n_scale / 4 + 1) as i64;
    let hi = (2 * n_scale - 1) as i64;
    let side = (hi - lo + 1) as u64;
    let needed = (side as u128).pow(d as u32);
    if needed > MAX_ENTRIES as u128 {
        return Err(Error::Resource {
            what: "datum support box",
            needed: u64::try_from(needed).unwrap_or(u64::MAX),
            limit: MAX_ENTRIES,
        });
    }
    let profile = (lo..=hi)
        .map(|n| bump(n as f64 / n_scale as f64))
        .collect();
    Ok(Datum {
        n_scale,
        d,
        lo,
        profile,
    })
}

/// `sum_n (1 + |n|^2)^s phi(n/N)^2`.
pub fn sobolev_norm_sq(f: &Datum, s: f64) -> f64 {
    if s == 0.0 {
        return f.l2_norm_sq();
    }
    let mut acc = CompensatedSum::new();
    f.for_each(|n, v| {
        if v != 0.0 {
            let norm_sq: f64 = n.iter().map(|&x| (x as f64) * (x as f64)).sum();
            acc.add(libm::pow(1.0 + norm_sq, s) * v * v);
        }
    });
    acc.value()
}

/// A point `x = b / q + delta` evaluated at time `t = 1 / q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPoint {
    b: Vec<u64>,
    q: u64,
    delta: Vec<f64>,
}

impl RationalPoint {
    /// Numerators are reduced mod `q`.
    pub fn new(b: &[i64], q: u64, delta: Vec<f64>) -> Result<Self> {
        if q < 1 {
            return Err(Error::input("denominator must be positive"));
        }
        if b.len() != delta.len() {
            return Err(Error::input("b and delta must have the same length"));
        }
        if delta.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("delta must be finite"));
        }
        Ok(RationalPoint {
            b: b.iter().map(|&x| x.rem_euclid(q as i64) as u64).collect(),
            q,
            delta,
        })
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `|delta|_inf <= rho / (d N)`.
    pub fn within_budget(&self, rho: f64, n_scale: u64) -> bool {
        let budget = perturbation_budget(rho, self.dim(), n_scale);
        self.delta.iter().all(|x| libm::fabs(*x) <= budget)
    }

    /// The spatial coordinates `b / q + delta` reduced to `[0, 1)`.
    pub fn x(&self) -> Vec<f64> {
        self.b
            .iter()
            .zip(&self.delta)
            .map(|(&b, &dl)| {
                let x = b as f64 / self.q as f64 + dl;
                x - libm::floor(x)
            })
            .collect()
    }
}

/// `rho / (d N)`, the per-coordinate perturbation budget.
pub fn perturbation_budget(rho: f64, d: usize, n_scale: u64) -> f64 {
    rho / (d as f64 * n_scale as f64)
}

/// `e^{2 pi i theta}`.
#[inline]
pub(crate) fn cis_turns(theta: f64) -> Complex64 {
    let (s, c) = libm::sincos(2.0 * PI * theta);
    Complex64::new(c, s)
}

fn check_dims(poly: &IntPolynomial, f: &Datum, d: usize) -> Result<()> {
    if poly.dim() != f.dim() || d != f.dim() {
        return Err(Error::input(alloc::format!(
            "dimension mismatch: polynomial {}, datum {}, point {d}",
            poly.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// Source of `P(n) mod q`: a precomputed residue grid when it is small,
/// otherwise evaluated per point.
pub(crate) struct PolyResidues<'a> {
    poly: &'a IntPolynomial,
    q: u64,
    table: Option<Vec<u32>>,
}

impl<'a> PolyResidues<'a> {
    pub(crate) fn new(poly: &'a IntPolynomial, q: u64) -> Self {
        let fits = (q as u128).pow(poly.dim() as u32) <= PHASE_GRID_MAX as u128;
        let table = if fits {
            crate::weyl::phase_table(poly, q).ok()
        } else {
            None
        };
        PolyResidues { poly, q, table }
    }

    /// `P(r) mod q` for reduced `r`.
    #[inline]
    pub(crate) fn at(&self, r: &[u64]) -> u64 {
        match &self.table {
            Some(t) => {
                let idx = r.iter().fold(0usize, |a, &x| a * self.q as usize + x as usize);
                t[idx] as u64
            }
            None => eval_residues_mod(self.poly, r, self.q),
        }
    }
}

/// The solution at `x = b/q + delta`, `t = 1/q`, summed directly over the
/// support box in lexicographic order.
///
/// Each term's phase is `((b.n + P(n)) mod q) / q + delta.n`; the modular part
/// is an exact integer residue looked up among the `q`-th roots of unity and
/// only the small `delta.n` part goes through floating-point trigonometry.
pub fn evaluate_solution(poly: &IntPolynomial, f: &Datum, pt: &RationalPoint) -> Result<Complex64> {
    check_dims(poly, f, pt.dim())?;
    if pt.q() < 2 {
        return Err(Error::input("evaluation needs q >= 2"));
    }
    let q = pt.q();
    let roots = RootTable::new(q);
    let residues = PolyResidues::new(poly, q);
    let mut r = vec![0u64; f.dim()];
    let mut acc = ComplexSum::new();
    f.for_each(|n, v| {
        if v == 0.0 {
            return;
        }
        let mut linear = 0u64;
        let mut drift = 0.0;
        for (i, &x) in n.iter().enumerate() {
            let ri = x.rem_euclid(q as i64) as u64;
            r[i] = ri;
            linear = (linear + pt.b[i] * ri) % q;
            drift += pt.delta[i] * x as f64;
        }
        let phase = (linear + residues.at(&r)) % q;
        let mut term = roots.get(phase) * v;
        if drift != 0.0 {
            term *= cis_turns(drift);
        }
        acc.add(term);
    });
    Ok(acc.value())
}

/// The datum itself (time zero) at `x = delta`:
/// `sum_n phi(n/N) e^{2 pi i delta.n}`.
pub fn evaluate_initial(f: &Datum, delta: &[f64]) -> Result<Complex64> {
    if delta.len() != f.dim() {
        return Err(Error::input("delta dimension does not match datum"));
    }
    // phi and the plane wave both factor over axes
    let mut out = Complex64::new(1.0, 0.0);
    for &dl in delta {
        let line: ComplexSum = f
            .profile()
            .iter()
            .enumerate()
            .map(|(i, &v)| cis_turns(dl * (f.lo() + i as i64) as f64) * v)
            .collect();
        out *= line.value();
    }
    Ok(out)
}

/// Floating-point evaluation at arbitrary real `(x, t)`, reducing
/// `n.x + P(n) t` mod 1 in `f64`. Loses every digit once `P(n) t` passes
/// `2^53`; only for demonstrating why the exact path exists.
#[cfg(feature = "unsafe-float")]
pub fn evaluate_solution_float(
    poly: &IntPolynomial,
    f: &Datum,
    x: &[f64],
    t: f64,
) -> Result<Complex64> {
    check_dims(poly, f, x.len())?;
    let mut acc = ComplexSum::new();
    let mut overflow = false;
    f.for_each(|n, v| {
        if v == 0.0 {
            return;
        }
        let p = match poly.eval_exact(n) {
            Some(p) => p as f64,
            None => {
                overflow = true;
                return;
            }
        };
        let lin: f64 = n.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        let theta = lin + p * t;
        acc.add(cis_turns(theta - libm::floor(theta)) * v);
    });
    if overflow {
        return Err(Error::input("P(n) overflows i128"));
    }
    Ok(acc.value())
}
