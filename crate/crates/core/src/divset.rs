//! The divergence set `X_N`: the union over primes `q in [Q, 2Q)` and good
//! residues `b in G(q)` of the boxes of radius `rho / N` centered at `b / q`
//! on the torus, with `Q = floor(N^{d/(d+1)})`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numtheory::{floor_rational_power, for_each_pair_within, primes_in_band};
use crate::poly::IntPolynomial;
use crate::weyl::{good_set_for, DeligneReport, GoodSet};
use crate::{Error, Result};

/// Monte-Carlo runs with fewer samples than this are flagged.
pub const MIN_MC_SAMPLES: u64 = 10_000;

/// Samples per Monte-Carlo block; each block has its own derived stream.
pub const MC_BLOCK: u64 = 1 << 16;

/// `floor(N^{d/(d+1)})`, exactly.
pub fn coupled_q(n_scale: u64, d: usize) -> u64 {
    floor_rational_power(n_scale, d as u32, d as u32 + 1)
}

/// All balls sharing one denominator.
#[derive(Debug, Clone)]
pub struct PrimeGroup {
    pub good: GoodSet,
    /// Table statistics, when the group was computed rather than read back.
    pub deligne: Option<DeligneReport>,
    pub parseval_defect: Option<f64>,
}

impl PrimeGroup {
    pub fn q(&self) -> u64 {
        self.good.q()
    }
}

/// Good set and table statistics for one prime of the band.
pub fn build_group(poly: &IntPolynomial, q: u64, c: f64) -> Result<PrimeGroup> {
    let summary = good_set_for(poly, q, c, poly.degree())?;
    Ok(PrimeGroup {
        good: summary.good,
        deligne: Some(summary.deligne),
        parseval_defect: Some(summary.parseval_defect),
    })
}

/// The admissible primes of the band `[Q, 2Q)` and those dropped because
/// they divide the degree.
pub fn admissible_primes(n_scale: u64, d: usize, k: u32) -> Result<(Vec<u64>, Vec<u64>)> {
    let q_param = coupled_q(n_scale, d);
    if q_param < 2 {
        return Err(Error::Configuration(alloc::format!(
            "N = {n_scale} gives Q = {q_param}; the band [Q, 2Q) needs Q >= 2"
        )));
    }
    let band = primes_in_band(q_param, 2 * q_param)?;
    let (keep, dropped): (Vec<u64>, Vec<u64>) =
        band.primes().iter().partition(|&&q| k as u64 % q != 0);
    if keep.is_empty() {
        return Err(Error::Configuration(alloc::format!(
            "no prime in [{q_param}, {}) coprime to k = {k}",
            2 * q_param
        )));
    }
    Ok((keep, dropped))
}

#[derive(Debug, Clone)]
pub struct DivergenceSet {
    n_scale: u64,
    d: usize,
    rho: f64,
    q_param: u64,
    groups: Vec<PrimeGroup>,
    dropped: Vec<u64>,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input("rho must be a positive real"));
    }
    Ok(())
}

/// Builds `X_N` for symbol `poly`, threshold `c` and radius constant `rho`.
pub fn build_divergence_set(
    poly: &IntPolynomial,
    n_scale: u64,
    c: f64,
    rho: f64,
) -> Result<DivergenceSet> {
    check_rho(rho)?;
    let k = poly.degree();
    if k < 2 {
        return Err(Error::input("symbol must have degree >= 2"));
    }
    let (primes, dropped) = admissible_primes(n_scale, poly.dim(), k)?;
    let groups = primes
        .iter()
        .map(|&q| build_group(poly, q, c))
        .collect::<Result<Vec<_>>>()?;
    DivergenceSet::from_groups(n_scale, poly.dim(), rho, groups, dropped)
}

impl DivergenceSet {
    /// Assembles a set from per-prime groups (built in parallel, or read
    /// back from a ball list).
    pub fn from_groups(
        n_scale: u64,
        d: usize,
        rho: f64,
        mut groups: Vec<PrimeGroup>,
        dropped: Vec<u64>,
    ) -> Result<Self> {
        check_rho(rho)?;
        if groups.iter().any(|g| g.good.dim() != d) {
            return Err(Error::input("group dimension does not match the set"));
        }
        groups.sort_by_key(PrimeGroup::q);
        if groups.windows(2).any(|w| w[0].q() == w[1].q()) {
            return Err(Error::input("duplicate prime in divergence set"));
        }
        Ok(DivergenceSet {
            n_scale,
            d,
            rho,
            q_param: coupled_q(n_scale, d),
            groups,
            dropped,
        })
    }

    pub fn n_scale(&self) -> u64 {
        self.n_scale
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `Q = floor(N^{d/(d+1)})`.
    pub fn q_param(&self) -> u64 {
        self.q_param
    }

    pub fn groups(&self) -> &[PrimeGroup] {
        &self.groups
    }

    /// Band primes excluded because they divide the degree.
    pub fn dropped_primes(&self) -> &[u64] {
        &self.dropped
    }

    /// Ball radius `rho / N` (sup norm).
    pub fn radius(&self) -> f64 {
        self.rho / self.n_scale as f64
    }

    /// Lebesgue measure of one ball, `(2 rho / N)^d`.
    pub fn ball_measure(&self) -> f64 {
        libm::pow(2.0 * self.radius(), self.d as f64)
    }

    /// Number of balls `J`.
    pub fn ball_count(&self) -> u64 {
        self.groups.iter().map(|g| g.good.len() as u64).sum()
    }

    /// Every ball as `(q, b)`, grouped by ascending `q`.
    pub fn balls(&self) -> impl Iterator<Item = (u64, Vec<u64>)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.good.members().map(move |b| (g.q(), b)))
    }

    /// The `i`-th ball in [`balls`](Self::balls) order.
    pub fn ball(&self, mut i: u64) -> Option<(u64, Vec<u64>)> {
        for g in &self.groups {
            let len = g.good.len() as u64;
            if i < len {
                let mut b = vec![0u64; self.d];
                crate::grid::unflatten(g.q(), g.good.flat_members()[i as usize] as usize, &mut b);
                return Some((g.q(), b));
            }
            i -= len;
        }
        None
    }
}

/// Coordinate pairs `(b, b')` in `[0, q) x [0, q')` whose points `b / q` and
/// `b' / q'` are within `a / (q q')` of each other on the circle.
pub fn torus_coordinate_pairs(q: u64, qp: u64, a: f64) -> Result<Vec<(u32, u32)>> {
    let qq = (q as u128 * qp as u128) as f64;
    let mut out = Vec::new();
    if 2.0 * a >= qq {
        // wide windows: the three shifted copies overlap, scan everything
        for b in 0..q as i128 {
            for bp in 0..qp as i128 {
                let diff = b * qp as i128 - bp * q as i128;
                let wrapped = [diff, diff - (q * qp) as i128, diff + (q * qp) as i128]
                    .iter()
                    .map(|x| x.abs())
                    .min()
                    .unwrap();
                if wrapped as f64 <= a {
                    out.push((b as u32, bp as u32));
                }
            }
        }
        return Ok(out);
    }
    // b' ranging over three periods covers the seam
    let qp_i = qp as i64;
    for_each_pair_within(q, qp, a, 0..=q as i64 - 1, -qp_i..=2 * qp_i - 1, true, |b, bp| {
        out.push((b as u32, bp.rem_euclid(qp_i) as u32));
    })?;
    Ok(out)
}

/// Unordered pairs of balls whose centers are within `2 rho / N` in the sup
/// norm, self-pairs included.
///
/// Each coordinate is handled by the lattice-line walker; candidate vector
/// pairs are the product of the per-coordinate lists, kept when both ends
/// are good residues.
pub fn overlap_pair_count(set: &DivergenceSet) -> Result<u64> {
    let groups = set.groups();
    let d = set.dim();
    let mut total = 0u64;
    for (i, gi) in groups.iter().enumerate() {
        for gj in &groups[i..] {
            let (q, qp) = (gi.q(), gj.q());
            let a = 2.0 * set.rho() * q as f64 * qp as f64 / set.n_scale() as f64;
            let coords = torus_coordinate_pairs(q, qp, a)?;
            let ordered = count_vector_pairs(&coords, d, q, qp, &gi.good, &gj.good);
            if q == qp {
                total += (ordered + gi.good.len() as u64) / 2;
            } else {
                total += ordered;
            }
        }
    }
    Ok(total)
}

fn count_vector_pairs(
    coords: &[(u32, u32)],
    d: usize,
    q: u64,
    qp: u64,
    left: &GoodSet,
    right: &GoodSet,
) -> u64 {
    if coords.is_empty() {
        return 0;
    }
    let mut pick = vec![0usize; d];
    let mut count = 0u64;
    loop {
        let (mut bi, mut bj) = (0usize, 0usize);
        for &p in &pick {
            let (x, y) = coords[p];
            bi = bi * q as usize + x as usize;
            bj = bj * qp as usize + y as usize;
        }
        if left.contains_flat(bi) && right.contains_flat(bj) {
            count += 1;
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return count;
            }
            axis -= 1;
            pick[axis] += 1;
            if pick[axis] < coords.len() {
                break;
            }
            pick[axis] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMethod {
    /// Exact interval union, `d = 1` only.
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureReport {
    pub method: MeasureMethod,
    pub estimate: f64,
    /// Standard error; zero for the exact method.
    pub error: f64,
    /// `J (2 rho / N)^d`.
    pub upper_bound: f64,
    /// `(J |B|)^2 / (P |B|)` with `P` the ordered overlapping pairs.
    pub lower_bound: f64,
    pub ball_count: u64,
    /// Unordered overlapping pairs including self-pairs.
    pub overlap_pairs: u64,
    pub low_samples: bool,
}

/// Measures `X_N` and reports the disjoint-sum and Cauchy-Schwarz bounds
/// alongside.
pub fn measure(set: &DivergenceSet, method: MeasureMethod) -> Result<MeasureReport> {
    let (estimate, error, low_samples) = match method {
        MeasureMethod::Exact => {
            if set.dim() != 1 {
                return Err(Error::Unsupported(alloc::format!(
                    "exact measure needs d = 1, got d = {}",
                    set.dim()
                )));
            }
            (exact_measure_1d(set), 0.0, false)
        }
        MeasureMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::input("Monte-Carlo needs at least one sample"));
            }
            let index = MembershipIndex::new(set);
            let blocks = samples.div_ceil(MC_BLOCK);
            let hits: u64 = (0..blocks)
                .map(|blk| {
                    let n = MC_BLOCK.min(samples - blk * MC_BLOCK);
                    index.hits(seed, blk, n)
                })
                .sum();
            let (p, se) = hit_fraction(hits, samples);
            (p, se, samples < MIN_MC_SAMPLES)
        }
    };
    finish_report(set, method, estimate, error, low_samples)
}

/// Hit fraction and its binomial standard error.
pub fn hit_fraction(hits: u64, samples: u64) -> (f64, f64) {
    let p = hits as f64 / samples as f64;
    (p, libm::sqrt(p * (1.0 - p) / samples as f64))
}

/// Attaches the bounds to an estimate computed elsewhere (e.g. a parallel
/// Monte-Carlo driver).
pub fn finish_report(
    set: &DivergenceSet,
    method: MeasureMethod,
    estimate: f64,
    error: f64,
    low_samples: bool,
) -> Result<MeasureReport> {
    let j = set.ball_count();
    let overlap = overlap_pair_count(set)?;
    let ball = set.ball_measure();
    let ordered = 2 * overlap - j;
    let lower_bound = if ordered == 0 {
        0.0
    } else {
        (j as f64) * (j as f64) * ball / ordered as f64
    };
    Ok(MeasureReport {
        method,
        estimate,
        error,
        upper_bound: j as f64 * ball,
        lower_bound,
        ball_count: j,
        overlap_pairs: overlap,
        low_samples,
    })
}

/// Sort-and-merge union length of the arcs `[b/q - r, b/q + r]` on the
/// circle `R / Z`.
pub fn exact_measure_1d(set: &DivergenceSet) -> f64 {
    let r = set.radius();
    if 2.0 * r >= 1.0 {
        return if set.ball_count() > 0 { 1.0 } else { 0.0 };
    }
    let mut arcs: Vec<(f64, f64)> = Vec::with_capacity(set.ball_count() as usize + 8);
    for (q, b) in set.balls() {
        let center = b[0] as f64 / q as f64;
        let (lo, hi) = (center - r, center + r);
        if lo < 0.0 {
            arcs.push((0.0, hi));
            arcs.push((lo + 1.0, 1.0));
        } else if hi > 1.0 {
            arcs.push((lo, 1.0));
            arcs.push((0.0, hi - 1.0));
        } else {
            arcs.push((lo, hi));
        }
    }
    union_length(&mut arcs)
}

/// Total length of a union of closed intervals.
pub fn union_length(intervals: &mut [(f64, f64)]) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for &(lo, hi) in intervals.iter() {
        match current {
            Some((cl, ch)) if lo <= ch => current = Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += ch - cl;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    if let Some((cl, ch)) = current {
        total += ch - cl;
    }
    total
}

/// Point-in-`X_N` queries: snap each coordinate to the nearest `b_i / q`
/// per prime, so a query costs `O(#primes)` rather than `O(J)`.
pub struct MembershipIndex {
    d: usize,
    radius: f64,
    groups: Vec<(u64, Vec<u64>)>,
}

impl MembershipIndex {
    pub fn new(set: &DivergenceSet) -> Self {
        let groups = set
            .groups()
            .iter()
            .map(|g| {
                let len = libm::pow(g.q() as f64, set.dim() as f64) as usize;
                let mut bits = vec![0u64; len.div_ceil(64)];
                for &m in g.good.flat_members() {
                    bits[m as usize / 64] |= 1 << (m % 64);
                }
                (g.q(), bits)
            })
            .collect();
        MembershipIndex {
            d: set.dim(),
            radius: set.radius(),
            groups,
        }
    }

    /// Whether `x in [0, 1)^d` lies in some ball.
    pub fn contains(&self, x: &[f64]) -> bool {
        let mut lo = vec![0i64; self.d];
        let mut hi = vec![0i64; self.d];
        'group: for (q, bits) in &self.groups {
            let qf = *q as f64;
            for (i, &xi) in x.iter().enumerate() {
                lo[i] = libm::ceil((xi - self.radius) * qf) as i64;
                hi[i] = libm::floor((xi + self.radius) * qf) as i64;
                if lo[i] > hi[i] {
                    continue 'group;
                }
            }
            // almost always a single candidate per axis
            let mut pick = lo.clone();
            loop {
                let idx = pick
                    .iter()
                    .fold(0usize, |acc, &b| acc * *q as usize + b.rem_euclid(*q as i64) as usize);
                if bits[idx / 64] >> (idx % 64) & 1 == 1 {
                    return true;
                }
                let mut axis = self.d;
                loop {
                    if axis == 0 {
                        continue 'group;
                    }
                    axis -= 1;
                    pick[axis] += 1;
                    if pick[axis] <= hi[axis] {
                        break;
                    }
                    pick[axis] = lo[axis];
                }
            }
        }
        false
    }

    /// Hits among `n` uniform samples of block `block` of the stream seeded
    /// by `seed`. Blocks are independent, so they can run in any order.
    pub fn hits(&self, seed: u64, block: u64, n: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let mut x = vec![0.0; self.d];
        let mut hits = 0;
        for _ in 0..n {
            for xi in x.iter_mut() {
                *xi = rng.gen::<f64>();
            }
            if self.contains(&x) {
                hits += 1;
            }
        }
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::lattice_pair_count;
    use crate::weyl::weyl_sum_direct;

    fn x_sq() -> IntPolynomial {
        IntPolynomial::from_terms(1, [(vec![2], 1)]).unwrap()
    }

    fn singleton_set(centers: &[(u64, u32)], n_scale: u64, rho: f64) -> DivergenceSet {
        let groups = centers
            .iter()
            .map(|&(q, b)| PrimeGroup {
                good: GoodSet::from_members(q, 1, 0.5, 2, vec![b]).unwrap(),
                deligne: None,
                parseval_defect: None,
            })
            .collect();
        DivergenceSet::from_groups(n_scale, 1, rho, groups, vec![]).unwrap()
    }

    #[test]
    fn quadratic_set_at_4096() {
        let set = build_divergence_set(&x_sq(), 4096, 0.5, 1.0 / 32.0).unwrap();
        assert_eq!(set.q_param(), 64);
        assert_eq!(set.groups().len(), 13);
        let sum_q: u64 = set.groups().iter().map(|g| g.q()).sum();
        assert_eq!(set.ball_count(), sum_q);
        for g in set.groups() {
            assert_eq!(g.good.density(), 1.0);
        }
        assert!(set.dropped_primes().is_empty());
    }

    #[test]
    fn ball_count_meets_density_guarantee() {
        let p = IntPolynomial::from_terms(1, [(vec![3], 1)]).unwrap();
        let set = build_divergence_set(&p, 4096, 0.5, 1.0 / 32.0).unwrap();
        let floor: f64 = set.groups().iter().map(|g| g.q() as f64).sum::<f64>() * 0.75 / 4.0;
        assert!(set.ball_count() as f64 >= floor);
    }

    #[test]
    fn degree_dividing_primes_are_dropped() {
        // Q = 2 for N = 8, d = 1: band [2, 4) = {2, 3}; k = 2 drops 2
        let set = build_divergence_set(&x_sq(), 8, 0.5, 1.0 / 32.0).unwrap();
        assert_eq!(set.dropped_primes(), [2]);
        assert_eq!(set.groups().len(), 1);
        let p = IntPolynomial::from_terms(1, [(vec![6], 1)]).unwrap();
        assert!(matches!(
            build_divergence_set(&p, 8, 0.5, 1.0 / 32.0),
            Err(Error::Configuration(_))
        ));
        assert!(build_divergence_set(&x_sq(), 3, 0.5, 1.0 / 32.0).is_err());
    }

    #[test]
    fn balls_indexing_matches_iteration() {
        let p = IntPolynomial::family_diagonal(2, 3).unwrap();
        let set = build_divergence_set(&p, 128, 0.5, 1.0 / 32.0).unwrap();
        for (i, ball) in set.balls().enumerate() {
            assert_eq!(set.ball(i as u64), Some(ball));
        }
        assert_eq!(set.ball(set.ball_count()), None);
    }

    #[test]
    fn centers_are_distinct_rationals() {
        let set = build_divergence_set(&x_sq(), 4096, 0.5, 1.0 / 32.0).unwrap();
        let mut reduced: Vec<(u64, u64)> = set
            .balls()
            .map(|(q, b)| {
                let g = crate::numtheory::gcd(b[0], q);
                (b[0] / g, q / g)
            })
            .collect();
        let before = reduced.len();
        reduced.sort_unstable();
        reduced.dedup();
        // only b = 0 collides across primes (0/q == 0/q')
        assert_eq!(before - reduced.len(), set.groups().len() - 1);
    }

    #[test]
    fn quadratic_overlaps_are_self_pairs_and_origin() {
        // the only cross-prime coincidences are the shared center 0
        let set = build_divergence_set(&x_sq(), 4096, 0.5, 1.0 / 32.0).unwrap();
        let g = set.groups().len() as u64;
        assert_eq!(overlap_pair_count(&set).unwrap(), set.ball_count() + g * (g - 1) / 2);
    }

    #[test]
    fn disjoint_singletons() {
        let set = singleton_set(&[(5, 1), (7, 5)], 1024, 1.0 / 32.0);
        assert_eq!(overlap_pair_count(&set).unwrap(), 2);
        let r = 2.0 / 32.0 / 1024.0;
        let m = measure(&set, MeasureMethod::Exact).unwrap();
        assert!((m.estimate - 2.0 * r).abs() < 1e-15);
        assert!((m.upper_bound - 2.0 * r).abs() < 1e-15);
        let single = singleton_set(&[(5, 1)], 1024, 1.0 / 32.0);
        let m = measure(&single, MeasureMethod::Exact).unwrap();
        assert!((m.estimate - r).abs() < 1e-15);
    }

    #[test]
    fn overlapping_and_seam_pairs_counted() {
        // 1/5 vs 1/5 + tiny: use large rho so neighbours touch
        let set = singleton_set(&[(5, 1), (7, 1)], 64, 1.0);
        // |1/5 - 1/7| = 2/35 <= 2 * 1/64? 0.057 > 0.031, no overlap
        assert_eq!(overlap_pair_count(&set).unwrap(), 2);
        let set = singleton_set(&[(5, 1), (7, 1)], 32, 1.0);
        // 2/35 <= 2/32
        assert_eq!(overlap_pair_count(&set).unwrap(), 3);
        // seam: 0/5 and 6/7 are 1/7 apart on the circle
        let set = singleton_set(&[(5, 0), (7, 6)], 14, 1.0);
        assert_eq!(overlap_pair_count(&set).unwrap(), 3);
        let exact = measure(&set, MeasureMethod::Exact).unwrap();
        // arcs [-1/14, 1/14] and [6/7 - 1/14, 6/7 + 1/14] overlap at 13/14 .. 1 - 1/14? they touch
        assert!((exact.estimate - 2.0 / 14.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_pairs_match_brute_force() {
        for (q, qp) in [(5u64, 7u64), (11, 11), (13, 29), (3, 101)] {
            for a in [0.0, 0.4, 1.0, 3.5, 20.0, 200.0] {
                let mut got = torus_coordinate_pairs(q, qp, a).unwrap();
                got.sort_unstable();
                let mut expect = Vec::new();
                for b in 0..q {
                    for bp in 0..qp {
                        let x = b as f64 / q as f64 - bp as f64 / qp as f64;
                        let dist = (x - x.round()).abs();
                        if dist * (q * qp) as f64 <= a + 1e-9 {
                            expect.push((b as u32, bp as u32));
                        }
                    }
                }
                assert_eq!(got, expect, "q = {q}, q' = {qp}, a = {a}");
            }
        }
    }

    #[test]
    fn overlap_count_is_permutation_invariant() {
        let set = singleton_set(&[(5, 1), (7, 1), (11, 2), (13, 3)], 32, 1.0);
        let rev = singleton_set(&[(13, 3), (11, 2), (7, 1), (5, 1)], 32, 1.0);
        assert_eq!(overlap_pair_count(&set).unwrap(), overlap_pair_count(&rev).unwrap());
    }

    #[test]
    fn measure_sandwich_d1() {
        for n in [1024u64, 4096] {
            let set = build_divergence_set(&x_sq(), n, 0.5, 1.0 / 32.0).unwrap();
            let m = measure(&set, MeasureMethod::Exact).unwrap();
            assert!(m.estimate <= m.upper_bound * (1.0 + 1e-12));
            assert!(m.estimate >= m.lower_bound * (1.0 - 1e-12));
        }
        let set = singleton_set(&[(5, 1), (7, 1), (11, 2), (13, 3)], 24, 1.0);
        let m = measure(&set, MeasureMethod::Exact).unwrap();
        assert!(m.estimate <= m.upper_bound && m.estimate >= m.lower_bound);
        assert!(m.lower_bound < m.upper_bound);
    }

    #[test]
    fn exact_rejected_in_two_dimensions() {
        let p = IntPolynomial::family_diagonal(2, 3).unwrap();
        let set = build_divergence_set(&p, 128, 0.5, 1.0 / 32.0).unwrap();
        assert!(matches!(
            measure(&set, MeasureMethod::Exact),
            Err(Error::Unsupported(_))
        ));
        let m = measure(&set, MeasureMethod::MonteCarlo { samples: 5000, seed: 1 }).unwrap();
        assert!(m.low_samples);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let set = singleton_set(&[(5, 1), (7, 1), (11, 2), (13, 3)], 8, 1.0);
        let exact = measure(&set, MeasureMethod::Exact).unwrap().estimate;
        for seed in [1u64, 2, 3] {
            let mc = measure(&set, MeasureMethod::MonteCarlo { samples: 200_000, seed }).unwrap();
            assert!((mc.estimate - exact).abs() <= 4.0 * mc.error, "seed {seed}");
            assert!(!mc.low_samples);
        }
    }

    #[test]
    fn lemma_bound_on_band_pairs() {
        let set = build_divergence_set(&x_sq(), 4096, 0.5, 1.0 / 32.0).unwrap();
        for gi in set.groups() {
            for gj in set.groups() {
                let a = 4.0 * set.rho() * (gi.q() * gj.q()) as f64 / 4096.0;
                let count = lattice_pair_count(gi.q(), gj.q(), a).unwrap();
                assert!(count as f64 <= 2.0 * a);
            }
        }
    }

    #[test]
    fn centers_revalidate_against_fresh_sums() {
        let p = IntPolynomial::from_terms(1, [(vec![3], 1)]).unwrap();
        let set = build_divergence_set(&p, 4096, 0.5, 1.0 / 32.0).unwrap();
        for (i, (q, b)) in set.balls().enumerate() {
            if i % 100 != 0 {
                continue;
            }
            let s = weyl_sum_direct(&p, q, &b).unwrap();
            assert!(s.norm() >= 0.5 * (q as f64).sqrt());
        }
    }
}
