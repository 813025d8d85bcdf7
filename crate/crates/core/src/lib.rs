//! Desk-scale construction of the periodic counterexample to the `H^s -> L^2`
//! maximal estimate for dispersive equations `i u_t + P(D) u = 0` on the torus.
//!
//! The crate is `no_std` (with `alloc`). Every phase that enters a sum is
//! reduced exactly in integer arithmetic before it touches the unit circle,
//! so results stay meaningful when `P(n) / q` is far beyond `2^53`.
//!
//! Layout, bottom-up:
//!
//! - [`numtheory`]: prime bands, overflow-safe modular evaluation, the
//!   lattice-pair counter.
//! - [`poly`]: integer multivariate symbols and the built-in families.
//! - [`fft`]: radix-2 and Bluestein transforms for prime-length axes.
//! - [`weyl`]: complete sums `S(b)` over `F_q^d`, Parseval / Deligne checks
//!   and good sets.
//! - [`datum`]: the bump profile, the datum `f_N`, Sobolev norms and the
//!   exact-phase solution evaluator.
//! - [`decomp`]: the folded function `Z`, its spectrum and the main/error
//!   split, plus the cyclic Laplacian toolkit.
//! - [`divset`]: the union of balls `X_N`, overlap counting and measure.
//! - [`experiment`]: the full pipeline over a ladder of `N` and exponent fits.
#![no_std]

extern crate alloc;

pub mod datum;
pub mod decomp;
pub mod divset;
mod error;
pub mod experiment;
pub mod fft;
pub mod grid;
pub mod numtheory;
pub mod poly;
pub mod sum;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Hard cap on the number of entries any single table or support box may hold.
pub const MAX_ENTRIES: u64 = 1 << 28;

/// Default good-set threshold `c`.
pub const DEFAULT_C: f64 = 0.5;

/// Default ball-radius / perturbation constant `rho`.
pub const DEFAULT_RHO: f64 = 1.0 / 32.0;
