//! Discrete Fourier transforms of arbitrary length, including prime lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform. Every other
//! length above [`DIRECT_MAX`] goes through Bluestein's chirp-z identity
//! `nk = (n^2 + k^2 - (k - n)^2) / 2`, which turns the DFT into a power-of-two
//! convolution. Short lengths are summed directly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::Complex64;

/// Lengths at or below this are transformed by the `O(n^2)` sum.
pub const DIRECT_MAX: usize = 16;

/// Sign of the exponent: `Forward` is `e^{-2 pi i nk/n}`, `Inverse` is
/// `e^{+2 pi i nk/n}`. Neither direction normalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// `e^{sign * 2 pi i num / den}` with `num` already reduced mod `den`.
#[inline]
fn unit(sign: f64, num: u64, den: u64) -> Complex64 {
    let (s, c) = libm::sincos(2.0 * PI * num as f64 / den as f64);
    Complex64::new(c, sign * s)
}

#[derive(Debug, Clone)]
enum Kind {
    Direct { roots: Vec<Complex64> },
    Radix2 { twiddles: Vec<Complex64> },
    Bluestein(Bluestein),
}

#[derive(Debug, Clone)]
struct Bluestein {
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, padded to `inner.len`.
    kernel_hat: Vec<Complex64>,
    inner: Pow2Plan,
}

#[derive(Debug, Clone)]
struct Pow2Plan {
    len: usize,
    forward: Vec<Complex64>,
    inverse: Vec<Complex64>,
}

/// A planned transform of fixed length and direction.
#[derive(Debug, Clone)]
pub struct Dft {
    len: usize,
    kind: Kind,
}

impl Dft {
    pub fn new(len: usize, direction: Direction) -> Self {
        let sign = direction.sign();
        let kind = if len <= DIRECT_MAX {
            Kind::Direct {
                roots: (0..len as u64).map(|m| unit(sign, m, len as u64)).collect(),
            }
        } else if len.is_power_of_two() {
            Kind::Radix2 {
                twiddles: radix2_twiddles(len, sign),
            }
        } else {
            Kind::Bluestein(Bluestein::new(len, sign))
        };
        Dft { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Transforms `buf` in place; `scratch` is resized as needed.
    pub fn process(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            Kind::Direct { roots } => {
                scratch.clear();
                scratch.extend_from_slice(buf);
                let n = self.len;
                for (k, out) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &x) in scratch.iter().enumerate() {
                        acc += x * roots[(j * k) % n];
                    }
                    *out = acc;
                }
            }
            Kind::Radix2 { twiddles } => radix2(buf, twiddles),
            Kind::Bluestein(b) => b.process(buf, scratch),
        }
    }
}

fn radix2_twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n as u64 / 2).map(|k| unit(sign, k, n as u64)).collect()
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let step = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let w = twiddles[k * step];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        half *= 2;
    }
}

impl Bluestein {
    fn new(n: usize, sign: f64) -> Self {
        let two_n = 2 * n as u64;
        // chirp_j = e^{sign * pi i j^2 / n}, with j^2 reduced mod 2n exactly
        let chirp: Vec<Complex64> = (0..n as u64)
            .map(|j| {
                let r = ((j as u128 * j as u128) % two_n as u128) as u64;
                unit(sign, r, two_n)
            })
            .collect();
        let m = (2 * n - 1).next_power_of_two();
        let inner = Pow2Plan {
            len: m,
            forward: radix2_twiddles(m, -1.0),
            inverse: radix2_twiddles(m, 1.0),
        };
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for j in 1..n {
            kernel[j] = chirp[j].conj();
            kernel[m - j] = chirp[j].conj();
        }
        radix2(&mut kernel, &inner.forward);
        Bluestein {
            chirp,
            kernel_hat: kernel,
            inner,
        }
    }

    fn process(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = buf.len();
        let m = self.inner.len;
        scratch.clear();
        scratch.resize(m, Complex64::new(0.0, 0.0));
        for j in 0..n {
            scratch[j] = buf[j] * self.chirp[j];
        }
        radix2(scratch, &self.inner.forward);
        for (x, k) in scratch.iter_mut().zip(&self.kernel_hat) {
            *x *= k;
        }
        radix2(scratch, &self.inner.inverse);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            buf[k] = scratch[k] * self.chirp[k] * scale;
        }
    }
}

/// Applies a length-`q` transform along every axis of a row-major
/// `q^d` array.
pub fn transform_axes(data: &mut [Complex64], q: usize, d: usize, direction: Direction) {
    let plan = Dft::new(q, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); q];
    let mut scratch = Vec::new();
    let total = data.len();
    assert_eq!(total, q.pow(d as u32), "array is not q^d");
    for axis in 0..d {
        let stride = q.pow((d - 1 - axis) as u32);
        let block = stride * q;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                plan.process(&mut line, &mut scratch);
                for (i, &v) in line.iter().enumerate() {
                    data[start + i * stride] = v;
                }
            }
        }
    }
}

/// Reference `O(n^2)` transform with exactly reduced phases.
pub fn dft_naive(input: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let n = input.len() as u64;
    let sign = direction.sign();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(j, &x)| x * unit(sign, (j as u64 * k) % n, n))
                .sum()
        })
        .collect()
}
