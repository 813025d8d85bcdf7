//! The full pipeline over a ladder of `N`: datum, divergence set, solution
//! scan, measure, and the ratio
//! `sup_lb * |X_N|^{1/2} / ||f_N||_{H^s}`, followed by log-log fits of its
//! growth.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datum::{datum_coefficients, perturbation_budget, sobolev_norm_sq, Datum};
use crate::decomp::{fold_separable, AxisFolds, CycleEvaluator};
use crate::divset::{build_divergence_set, coupled_q, measure, DivergenceSet, MeasureMethod, MeasureReport};
use crate::grid::unflatten;
use crate::poly::IntPolynomial;
use crate::sum::CompensatedSum;
use crate::{Error, Result, DEFAULT_C, DEFAULT_RHO};

/// Smallest `N` a ladder may contain.
pub const MIN_LADDER_N: u64 = 256;

/// Quantile levels reported by [`solution_scan`].
pub const SCAN_QUANTILES: [f64; 5] = [0.01, 0.1, 0.5, 0.9, 0.99];

/// SplitMix64 finalizer, used to derive independent per-row seeds.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The perturbation `delta` drawn for ball `index` under `seed`: uniform in
/// the box `|delta|_inf <= beta`, one ChaCha stream per ball so the draw does
/// not depend on which other balls are sampled.
pub fn ball_delta(seed: u64, index: u64, d: usize, beta: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    (0..d).map(|_| rng.gen_range(-beta..=beta)).collect()
}

/// `|u|` at one ball, at its center and at a random nearby point.
#[derive(Debug, Clone, PartialEq)]
pub struct BallValue {
    /// Position in [`DivergenceSet::balls`] order.
    pub index: u64,
    pub q: u64,
    pub b: Vec<u64>,
    pub delta: Vec<f64>,
    pub at_zero: f64,
    pub at_delta: f64,
}

impl BallValue {
    /// The smaller of the two samples.
    pub fn value(&self) -> f64 {
        self.at_zero.min(self.at_delta)
    }

    fn witness(&self) -> Witness {
        let at_center = self.at_zero <= self.at_delta;
        Witness {
            q: self.q,
            b: self.b.clone(),
            delta: if at_center {
                vec![0.0; self.delta.len()]
            } else {
                self.delta.clone()
            },
            value: self.value(),
        }
    }
}

/// Where a scan value was attained: `x = b/q + delta`, `t = 1/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub q: u64,
    pub b: Vec<u64>,
    pub delta: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Minimum of [`BallValue::value`] over the sampled balls.
    pub sup_lb: f64,
    pub witness: Witness,
    pub max: f64,
    /// `(level, value)` pairs at [`SCAN_QUANTILES`] (nearest rank).
    pub quantiles: Vec<(f64, f64)>,
    pub sampled: u64,
    pub total: u64,
}

/// Which balls a scan visits, bucketed by prime group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    pub groups: Vec<Vec<u64>>,
    pub total: u64,
}

impl ScanPlan {
    pub fn sampled(&self) -> u64 {
        self.groups.iter().map(|g| g.len() as u64).sum()
    }
}

/// All balls when `J <= budget`, otherwise `budget` balls drawn uniformly
/// without replacement.
pub fn scan_plan(set: &DivergenceSet, budget: u64, seed: u64) -> Result<ScanPlan> {
    let total = set.ball_count();
    if total == 0 {
        return Err(Error::input("divergence set has no balls"));
    }
    if budget == 0 {
        return Err(Error::input("sample budget must be positive"));
    }
    let mut picks: Vec<u64> = if budget >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, total as usize, budget as usize)
            .into_iter()
            .map(|i| i as u64)
            .collect()
    };
    picks.sort_unstable();
    let mut groups = Vec::with_capacity(set.groups().len());
    let mut start = 0u64;
    let mut it = picks.into_iter().peekable();
    for g in set.groups() {
        let end = start + g.good.len() as u64;
        let mut bucket = Vec::new();
        while let Some(&i) = it.peek() {
            if i >= end {
                break;
            }
            bucket.push(i);
            it.next();
        }
        groups.push(bucket);
        start = end;
    }
    Ok(ScanPlan { groups, total })
}

fn check_scan_inputs(poly: &IntPolynomial, f: &Datum, set: &DivergenceSet) -> Result<()> {
    if f.n_scale() != set.n_scale() || f.dim() != set.dim() || poly.dim() != set.dim() {
        return Err(Error::input(
            "datum, symbol and divergence set must share N and d",
        ));
    }
    Ok(())
}

/// Evaluates the planned balls of group `group`. Centers come from one
/// inverse transform of `Z(r) e(P(r)/q)`; perturbed points from the per-axis
/// folds at each ball's own `delta`.
pub fn scan_group(
    poly: &IntPolynomial,
    f: &Datum,
    set: &DivergenceSet,
    group: usize,
    indices: &[u64],
    seed: u64,
) -> Result<Vec<BallValue>> {
    check_scan_inputs(poly, f, set)?;
    if indices.is_empty() {
        return Ok(Vec::new());
    }
    let g = set
        .groups()
        .get(group)
        .ok_or_else(|| Error::input("group index out of range"))?;
    let offset: u64 = set.groups()[..group].iter().map(|g| g.good.len() as u64).sum();
    let q = g.q();
    let d = set.dim();
    let beta = perturbation_budget(set.rho(), d, set.n_scale());
    let evaluator = CycleEvaluator::new(poly, q)?;
    let centers = evaluator.evaluate_all(&fold_separable(f, q, &vec![0.0; d])?);
    let mut out = Vec::with_capacity(indices.len());
    let mut b = vec![0u64; d];
    for &index in indices {
        let pos = index
            .checked_sub(offset)
            .filter(|&p| p < g.good.len() as u64)
            .ok_or_else(|| Error::input("ball index outside its group"))?;
        let flat = g.good.flat_members()[pos as usize] as usize;
        unflatten(q, flat, &mut b);
        let delta = ball_delta(seed, index, d, beta);
        let folds = AxisFolds::new(f, q, &delta)?;
        out.push(BallValue {
            index,
            q,
            b: b.clone(),
            at_zero: centers.values()[flat].norm(),
            at_delta: evaluator.evaluate(&folds, &b).norm(),
            delta,
        });
    }
    Ok(out)
}

/// Folds ball values (in any order) into a [`ScanResult`].
pub fn summarize_scan(mut values: Vec<BallValue>, total: u64) -> Result<ScanResult> {
    if values.is_empty() {
        return Err(Error::input("scan visited no balls"));
    }
    values.sort_by_key(|v| v.index);
    let witness_at = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value().total_cmp(&b.1.value()))
        .map(|(i, _)| i)
        .unwrap();
    let mut sorted: Vec<f64> = values.iter().map(BallValue::value).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let quantiles = SCAN_QUANTILES
        .iter()
        .map(|&p| {
            let rank = libm::ceil(p * n as f64) as usize;
            (p, sorted[rank.clamp(1, n) - 1])
        })
        .collect();
    let witness = values[witness_at].witness();
    Ok(ScanResult {
        sup_lb: witness.value,
        witness,
        max: sorted[n - 1],
        quantiles,
        sampled: n as u64,
        total,
    })
}

/// Lower bound for `sup_t |u(x, t)|` over the balls of `set`: each sampled
/// ball is evaluated at `t = 1/q`, at its center and at one seeded random
/// point of the perturbation box, and the smallest value wins.
pub fn solution_scan(
    poly: &IntPolynomial,
    f: &Datum,
    set: &DivergenceSet,
    sample_budget: u64,
    seed: u64,
) -> Result<ScanResult> {
    check_scan_inputs(poly, f, set)?;
    let plan = scan_plan(set, sample_budget, seed)?;
    let mut values = Vec::with_capacity(plan.sampled() as usize);
    for (i, idx) in plan.groups.iter().enumerate() {
        values.extend(scan_group(poly, f, set, i, idx, seed)?);
    }
    summarize_scan(values, plan.total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub c: f64,
    pub rho: f64,
    /// Balls evaluated per row; every ball when `J` is at most this.
    pub sample_budget: u64,
    /// Monte-Carlo samples for `d >= 2`.
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            c: DEFAULT_C,
            rho: DEFAULT_RHO,
            sample_budget: 20_000,
            mc_samples: 1_000_000,
            seed: 42,
        }
    }
}

/// Stage implementations for [`ratio_experiment`]. The defaults run
/// sequentially; a host can override stages with parallel versions and
/// supply a clock.
pub trait Engine {
    fn divergence_set(&self, poly: &IntPolynomial, n_scale: u64, c: f64, rho: f64) -> Result<DivergenceSet> {
        build_divergence_set(poly, n_scale, c, rho)
    }

    fn scan(
        &self,
        poly: &IntPolynomial,
        f: &Datum,
        set: &DivergenceSet,
        sample_budget: u64,
        seed: u64,
    ) -> Result<ScanResult> {
        solution_scan(poly, f, set, sample_budget, seed)
    }

    fn measure(&self, set: &DivergenceSet, method: MeasureMethod) -> Result<MeasureReport> {
        measure(set, method)
    }

    /// Milliseconds from an arbitrary origin.
    fn now_ms(&self) -> f64 {
        0.0
    }
}

/// Sequential stages, no clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Engine for Sequential {}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub n_scale: u64,
    pub q_param: u64,
    pub d: usize,
    pub k: u32,
    pub s: f64,
    pub ball_count: u64,
    pub measure: MeasureReport,
    /// The measure entering the ratio: exact for `d = 1`, the Monte-Carlo
    /// estimate minus two standard errors otherwise.
    pub measure_used: f64,
    pub sup_lb: f64,
    pub witness: Witness,
    pub scan: ScanResult,
    pub hs_norm: f64,
    pub ratio: f64,
    pub wall_ms: f64,
}

/// A ladder entry whose pipeline stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedRow {
    pub n_scale: u64,
    pub q_param: u64,
    pub s: f64,
    pub error: Error,
}

pub type RowOutcome = core::result::Result<ExperimentRow, FailedRow>;

fn check_ladder(ladder: &[u64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::input("N ladder is empty"));
    }
    if let Some(&n) = ladder.iter().find(|&&n| n < MIN_LADDER_N) {
        return Err(Error::input(alloc::format!(
            "ladder entry N = {n} is below {MIN_LADDER_N}"
        )));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("N ladder must be strictly ascending"));
    }
    Ok(())
}

/// One row per `N` of `ladder` at regularity `s`.
pub fn ratio_experiment(
    engine: &impl Engine,
    poly: &IntPolynomial,
    s: f64,
    ladder: &[u64],
    cfg: &ExperimentConfig,
) -> Result<Vec<RowOutcome>> {
    Ok(ratio_experiment_multi(engine, poly, &[s], ladder, cfg)?
        .pop()
        .unwrap())
}

/// Rows for several `s` at once, indexed `[s][N]`. Only the Sobolev norm
/// depends on `s`, so the set, scan and measure are shared.
pub fn ratio_experiment_multi(
    engine: &impl Engine,
    poly: &IntPolynomial,
    s_values: &[f64],
    ladder: &[u64],
    cfg: &ExperimentConfig,
) -> Result<Vec<Vec<RowOutcome>>> {
    check_ladder(ladder)?;
    if s_values.is_empty() || s_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::input("s values must be finite and non-negative"));
    }
    if poly.degree() < 2 {
        return Err(Error::input("symbol must have degree >= 2"));
    }
    let mut out = vec![Vec::with_capacity(ladder.len()); s_values.len()];
    for &n in ladder {
        let rows = run_rung(engine, poly, s_values, n, cfg);
        for (slot, row) in out.iter_mut().zip(rows) {
            slot.push(row);
        }
    }
    Ok(out)
}

fn run_rung(
    engine: &impl Engine,
    poly: &IntPolynomial,
    s_values: &[f64],
    n: u64,
    cfg: &ExperimentConfig,
) -> Vec<RowOutcome> {
    let d = poly.dim();
    let q_param = coupled_q(n, d);
    let fail = |error: Error| {
        s_values
            .iter()
            .map(|&s| {
                Err(FailedRow {
                    n_scale: n,
                    q_param,
                    s,
                    error: error.clone(),
                })
            })
            .collect()
    };
    let start = engine.now_ms();
    let seed = mix_seed(cfg.seed ^ n);
    let shared = (|| {
        let f = datum_coefficients(n, d)?;
        let set = engine.divergence_set(poly, n, cfg.c, cfg.rho)?;
        let scan = engine.scan(poly, &f, &set, cfg.sample_budget, seed)?;
        let method = if d == 1 {
            MeasureMethod::Exact
        } else {
            MeasureMethod::MonteCarlo {
                samples: cfg.mc_samples,
                seed: mix_seed(seed),
            }
        };
        let report = engine.measure(&set, method)?;
        Ok((f, set, scan, report))
    })();
    let (f, set, scan, report) = match shared {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let measure_used = match report.method {
        MeasureMethod::Exact => report.estimate,
        MeasureMethod::MonteCarlo { .. } => (report.estimate - 2.0 * report.error).max(0.0),
    };
    // |u| never exceeds the coefficient mass and |X_N| <= 1
    let ceiling = f.mass() * (1.0 + 1e-9);
    let mut rows = Vec::with_capacity(s_values.len());
    let mut norms = Vec::with_capacity(s_values.len());
    for &s in s_values {
        norms.push(libm::sqrt(sobolev_norm_sq(&f, s)));
    }
    let wall_ms = engine.now_ms() - start;
    for (&s, &hs_norm) in s_values.iter().zip(&norms) {
        let ratio = scan.sup_lb * libm::sqrt(measure_used) / hs_norm;
        let row = if !(ratio > 0.0 && ratio.is_finite()) {
            Err(Error::Invariant(alloc::format!("ratio {ratio} is not positive")))
        } else if scan.sup_lb * libm::sqrt(measure_used) > ceiling {
            Err(Error::Invariant(
                "ratio exceeds the coefficient-mass ceiling".to_string(),
            ))
        } else {
            Ok(ExperimentRow {
                n_scale: n,
                q_param,
                d,
                k: poly.degree(),
                s,
                ball_count: set.ball_count(),
                measure: report,
                measure_used,
                sup_lb: scan.sup_lb,
                witness: scan.witness.clone(),
                scan: scan.clone(),
                hs_norm,
                ratio,
                wall_ms,
            })
        };
        rows.push(row.map_err(|error| FailedRow {
            n_scale: n,
            q_param,
            s,
            error,
        }));
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the plain fit.
    pub residual: f64,
    pub n_points: usize,
    /// Slope after adding `ln(ln N) / 2` to `ln ratio`.
    pub log_corrected_slope: f64,
    pub log_corrected_intercept: f64,
}

/// Least squares `y = a + b x`; returns `(b, a, rms residual)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::input("x and y lengths differ"));
    }
    let n = x.len() as f64;
    let mx = x.iter().copied().collect::<CompensatedSum>().value() / n;
    let my = y.iter().copied().collect::<CompensatedSum>().value() / n;
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (&xi, &yi) in x.iter().zip(y) {
        sxx.add((xi - mx) * (xi - mx));
        sxy.add((xi - mx) * (yi - my));
    }
    if sxx.value() == 0.0 {
        return Err(Error::input("all abscissae coincide"));
    }
    let slope = sxy.value() / sxx.value();
    let intercept = my - slope * mx;
    let rss: CompensatedSum = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .collect();
    Ok((slope, intercept, libm::sqrt(rss.value() / n)))
}

/// Fits `ln ratio` against `ln N` over `(N, ratio)` points.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|&(n, r)| !(n > core::f64::consts::E && n.is_finite() && r > 0.0 && r.is_finite()))
    {
        return Err(Error::input("fit needs N > e and finite positive ratios"));
    }
    let x: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let y: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let yc: Vec<f64> = x.iter().zip(&y).map(|(&lx, &ly)| ly + 0.5 * libm::log(lx)).collect();
    let (slope, intercept, residual) = least_squares(&x, &y)?;
    let (log_corrected_slope, log_corrected_intercept, _) = least_squares(&x, &yc)?;
    Ok(FitResult {
        slope,
        intercept,
        residual,
        n_points: points.len(),
        log_corrected_slope,
        log_corrected_intercept,
    })
}

/// Fits the successful rows of a ladder; failed rows are skipped.
pub fn fit_exponent(rows: &[RowOutcome]) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|r| (r.n_scale as f64, r.ratio))
        .collect();
    fit_points(&points)
}
