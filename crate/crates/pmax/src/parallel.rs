//! Rayon-backed stages for [`pmax_core::experiment::Engine`].
//!
//! Work splits into pieces whose results are combined order-independently
//! (integer hit counts, ball values sorted by index), so output does not
//! depend on the thread count.

use std::time::Instant;

use pmax_core::datum::Datum;
use pmax_core::divset::{
    admissible_primes, build_group, finish_report, hit_fraction, DivergenceSet, MeasureMethod,
    MeasureReport, MembershipIndex, MC_BLOCK, MIN_MC_SAMPLES,
};
use pmax_core::experiment::{scan_group, scan_plan, summarize_scan, Engine, ScanResult};
use pmax_core::poly::IntPolynomial;
use pmax_core::{Error, Result};
use rayon::prelude::*;

/// Balls per scan task.
const SCAN_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct Parallel {
    origin: Instant,
}

impl Parallel {
    pub fn new() -> Self {
        Parallel {
            origin: Instant::now(),
        }
    }
}

impl Default for Parallel {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine for Parallel {
    fn divergence_set(&self, poly: &IntPolynomial, n_scale: u64, c: f64, rho: f64) -> Result<DivergenceSet> {
        if poly.degree() < 2 {
            return Err(Error::InvalidInput("symbol must have degree >= 2".into()));
        }
        let (primes, dropped) = admissible_primes(n_scale, poly.dim(), poly.degree())?;
        let groups = primes
            .par_iter()
            .map(|&q| build_group(poly, q, c))
            .collect::<Result<Vec<_>>>()?;
        DivergenceSet::from_groups(n_scale, poly.dim(), rho, groups, dropped)
    }

    fn scan(
        &self,
        poly: &IntPolynomial,
        f: &Datum,
        set: &DivergenceSet,
        sample_budget: u64,
        seed: u64,
    ) -> Result<ScanResult> {
        let plan = scan_plan(set, sample_budget, seed)?;
        let tasks: Vec<(usize, &[u64])> = plan
            .groups
            .iter()
            .enumerate()
            .flat_map(|(g, idx)| idx.chunks(SCAN_CHUNK).map(move |c| (g, c)))
            .collect();
        let values = tasks
            .par_iter()
            .map(|&(g, idx)| scan_group(poly, f, set, g, idx, seed))
            .collect::<Result<Vec<_>>>()?;
        summarize_scan(values.into_iter().flatten().collect(), plan.total)
    }

    fn measure(&self, set: &DivergenceSet, method: MeasureMethod) -> Result<MeasureReport> {
        match method {
            MeasureMethod::Exact => pmax_core::divset::measure(set, method),
            MeasureMethod::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::InvalidInput("Monte-Carlo needs at least one sample".into()));
                }
                let index = MembershipIndex::new(set);
                let hits: u64 = (0..samples.div_ceil(MC_BLOCK))
                    .into_par_iter()
                    .map(|blk| index.hits(seed, blk, MC_BLOCK.min(samples - blk * MC_BLOCK)))
                    .sum();
                let (p, se) = hit_fraction(hits, samples);
                finish_report(set, method, p, se, samples < MIN_MC_SAMPLES)
            }
        }
    }

    fn now_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pmax_core::datum::datum_coefficients;
    use pmax_core::divset::{build_divergence_set, measure};
    use pmax_core::experiment::{solution_scan, Sequential};

    #[test]
    fn matches_sequential_stages() {
        let p = IntPolynomial::family_diagonal(2, 3).unwrap();
        let par = Parallel::new();
        let a = par.divergence_set(&p, 512, 0.5, 1.0 / 32.0).unwrap();
        let b = build_divergence_set(&p, 512, 0.5, 1.0 / 32.0).unwrap();
        assert!(a.balls().eq(b.balls()));
        let f = datum_coefficients(512, 2).unwrap();
        assert_eq!(
            par.scan(&p, &f, &a, 700, 9).unwrap(),
            solution_scan(&p, &f, &b, 700, 9).unwrap()
        );
        let m = MeasureMethod::MonteCarlo {
            samples: 150_000,
            seed: 4,
        };
        assert_eq!(par.measure(&a, m).unwrap(), measure(&b, m).unwrap());
        assert_eq!(Sequential.now_ms(), 0.0);
    }
}
