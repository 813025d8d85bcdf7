//! Compensated accumulation.

use crate::Complex64;

/// Neumaier (improved Kahan) summation for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Component-wise Neumaier summation of complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    /// Merges a partial sum computed elsewhere.
    pub fn merge(&mut self, other: &ComplexSum) {
        self.add(Complex64::new(other.re.sum, other.im.sum));
        self.add(Complex64::new(other.re.carry, other.im.carry));
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl core::iter::FromIterator<Complex64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = ComplexSum::new();
        for z in iter {
            acc.add(z);
        }
        acc
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
