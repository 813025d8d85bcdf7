//! Dense complex functions on `F_q^d`, stored row-major with the last axis
//! varying fastest.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Complex64, Error, Result, MAX_ENTRIES};

/// Number of entries of `F_q^d`, guarded against [`MAX_ENTRIES`].
pub fn grid_len(q: u64, d: usize, what: &'static str) -> Result<usize> {
    let mut len: u64 = 1;
    for _ in 0..d {
        len = len.saturating_mul(q);
    }
    if len > MAX_ENTRIES {
        return Err(Error::Resource {
            what,
            needed: len,
            limit: MAX_ENTRIES,
        });
    }
    Ok(len as usize)
}

/// Flat index of residue vector `r` (each component reduced mod `q`).
#[inline]
pub fn flat_index(q: u64, r: &[i64]) -> usize {
    let qi = q as i64;
    r.iter()
        .fold(0usize, |acc, &x| acc * q as usize + x.rem_euclid(qi) as usize)
}

/// Writes the residue vector of flat index `idx` into `out`.
#[inline]
pub fn unflatten(q: u64, mut idx: usize, out: &mut [u64]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % q as usize) as u64;
        idx /= q as usize;
    }
}

/// Odometer over `F_q^d` in lexicographic order.
pub struct Residues {
    q: u64,
    cur: Vec<u64>,
    done: bool,
}

impl Residues {
    pub fn new(q: u64, d: usize) -> Self {
        Residues {
            q,
            cur: vec![0; d],
            done: q == 0,
        }
    }

    fn step(&mut self) {
        for slot in self.cur.iter_mut().rev() {
            *slot += 1;
            if *slot < self.q {
                return;
            }
            *slot = 0;
        }
        self.done = true;
    }
}

impl Iterator for Residues {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        self.step();
        Some(out)
    }
}

/// A complex-valued function on `F_q^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueGrid {
    q: u64,
    d: usize,
    values: Vec<Complex64>,
}

impl ResidueGrid {
    pub fn zeros(q: u64, d: usize) -> Result<Self> {
        let len = grid_len(q, d, "residue grid")?;
        Ok(ResidueGrid {
            q,
            d,
            values: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn from_values(q: u64, d: usize, values: Vec<Complex64>) -> Result<Self> {
        let len = grid_len(q, d, "residue grid")?;
        if values.len() != len {
            return Err(Error::input(alloc::format!(
                "grid over F_{q}^{d} needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(ResidueGrid { q, d, values })
    }

    /// Tabulates `f` at every residue vector.
    pub fn from_fn(q: u64, d: usize, mut f: impl FnMut(&[u64]) -> Complex64) -> Result<Self> {
        let len = grid_len(q, d, "residue grid")?;
        let mut values = Vec::with_capacity(len);
        let mut r = vec![0u64; d];
        for idx in 0..len {
            unflatten(q, idx, &mut r);
            values.push(f(&r));
        }
        Ok(ResidueGrid { q, d, values })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Value at residue vector `r`, components taken mod `q`.
    pub fn get(&self, r: &[i64]) -> Complex64 {
        self.values[flat_index(self.q, r)]
    }

    /// Squared `l^2` norm.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Stride of axis `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        (axis + 1..self.d).fold(1usize, |s, _| s * self.q as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip() {
        let q = 7;
        let mut r = [0u64; 3];
        for idx in 0..343 {
            unflatten(q, idx, &mut r);
            let ri: Vec<i64> = r.iter().map(|&x| x as i64).collect();
            assert_eq!(flat_index(q, &ri), idx);
        }
    }

    #[test]
    fn negative_components_wrap() {
        assert_eq!(flat_index(5, &[-1]), 4);
        assert_eq!(flat_index(5, &[7, -6]), 2 * 5 + 4);
    }

    #[test]
    fn residues_enumerate_in_order() {
        let all: Vec<Vec<u64>> = Residues::new(3, 2).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], [0, 0]);
        assert_eq!(all[1], [0, 1]);
        assert_eq!(all[8], [2, 2]);
    }

    #[test]
    fn guard_rejects_huge_grids() {
        assert!(matches!(
            grid_len(1 << 15, 2, "t"),
            Err(Error::Resource { .. })
        ));
        assert_eq!(grid_len(1 << 14, 2, "t").unwrap(), 1 << 28);
    }
}
