//! Sampling of uniform random mappings.
//!
//! Samples are split into blocks of [`BLOCK_SIZE`]. Block `b` of a run with
//! seed `s` draws from ChaCha8 seeded with `s` (via `seed_from_u64`) on
//! stream `b`, so its samples do not depend on how blocks are scheduled.
//! Per-block accumulators are merged in block order.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{harris_params, HarrisParams};
use crate::exact::ZDistribution;
use crate::fungraph::{analyze, period_stats, Analyzer, LogPeriod, Mapping, PrimeSieve};
use crate::special::{chi_square_sf, normal_cdf};
use crate::{Error, Result};

/// Identifier of the generator and stream-splitting scheme.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64-stream_per_block";

/// Samples per block.
pub const BLOCK_SIZE: u64 = 64;

/// Largest supported mapping size.
pub const MAX_N: usize = 10_000_000;

/// Largest supported `n * samples`.
pub const MAX_WORK: u128 = 1_000_000_000_000;

/// Largest `n` for which the cross-check recomputes `T` and `B` exactly.
pub const CROSSCHECK_MAX_N: usize = 1000;

/// Interior histogram bins over `[-HIST_RANGE, HIST_RANGE]`.
pub const HIST_BINS: usize = 41;
pub const HIST_RANGE: f64 = 4.0;

/// Minimum expected count per pooled chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Generator for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Fills `targets` with `n` independent uniform draws from `0..n`.
pub fn fill_mapping<R: Rng>(n: usize, rng: &mut R, targets: &mut Vec<u32>) {
    targets.clear();
    targets.extend((0..n).map(|_| rng.gen_range(0..n as u32)));
}

pub fn sample_mapping<R: Rng>(n: usize, rng: &mut R) -> Result<Mapping> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let mut targets = Vec::with_capacity(n);
    fill_mapping(n, rng, &mut targets);
    Mapping::from_zero_based(targets)
}

/// Streaming mean and variance (Welford), mergeable (Chan et al.).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 +=
            other.m2 + delta * delta * (self.count as f64 * other.count as f64 / total as f64);
        self.count = total;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    /// `T` does not divide `B`.
    pub period_not_dividing_product: u64,
    /// `|O - T| >= n`.
    pub denes: u64,
    /// `log B < log T`.
    pub log_order: u64,
    /// Sieve logs disagree with big-integer logs (cross-check mode only).
    pub crosscheck: u64,
}

impl Violations {
    pub fn total(&self) -> u64 {
        self.period_not_dividing_product + self.denes + self.log_order + self.crosscheck
    }

    fn merge(&mut self, o: &Violations) {
        self.period_not_dividing_product += o.period_not_dividing_product;
        self.denes += o.denes;
        self.log_order += o.log_order;
        self.crosscheck += o.crosscheck;
    }
}

/// Bin index of a standardized value: 0 and `HIST_BINS + 1` are overflow bins.
pub fn hist_bin(x: f64) -> usize {
    if x < -HIST_RANGE {
        0
    } else if x >= HIST_RANGE {
        HIST_BINS + 1
    } else {
        let width = 2.0 * HIST_RANGE / HIST_BINS as f64;
        (((x + HIST_RANGE) / width) as usize).min(HIST_BINS - 1) + 1
    }
}

/// `[low, high)` of histogram bin `i`.
pub fn hist_edges(i: usize) -> (f64, f64) {
    let width = 2.0 * HIST_RANGE / HIST_BINS as f64;
    let edge = |k: usize| -HIST_RANGE + k as f64 * width;
    match i {
        0 => (f64::NEG_INFINITY, -HIST_RANGE),
        i if i == HIST_BINS + 1 => (HIST_RANGE, f64::INFINITY),
        i => (
            edge(i - 1),
            if i == HIST_BINS { HIST_RANGE } else { edge(i) },
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatSummary {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub log_t: Moments,
    pub log_b: Moments,
    pub log_gap: Moments,
    pub z: Moments,
    /// Counts of `(log T - a_n) / b_n` per bin, overflow bins first and last.
    pub histogram: Vec<u64>,
    /// Samples with `(log T - a_n) / b_n <= 0`.
    pub standardized_le_zero: u64,
    /// `Z = m` counts for observed `m`.
    pub z_counts: BTreeMap<usize, u64>,
    pub violations: Violations,
    pub crosscheck: bool,
}

impl StatSummary {
    fn empty(n: usize, seed: u64, crosscheck: bool) -> Self {
        StatSummary {
            n,
            samples: 0,
            seed,
            log_t: Moments::default(),
            log_b: Moments::default(),
            log_gap: Moments::default(),
            z: Moments::default(),
            histogram: vec![0; HIST_BINS + 2],
            standardized_le_zero: 0,
            z_counts: BTreeMap::new(),
            violations: Violations::default(),
            crosscheck,
        }
    }

    fn merge(&mut self, o: &StatSummary) {
        self.samples += o.samples;
        self.log_t.merge(&o.log_t);
        self.log_b.merge(&o.log_b);
        self.log_gap.merge(&o.log_gap);
        self.z.merge(&o.z);
        for (a, b) in self.histogram.iter_mut().zip(&o.histogram) {
            *a += b;
        }
        self.standardized_le_zero += o.standardized_le_zero;
        for (&m, &c) in &o.z_counts {
            *self.z_counts.entry(m).or_insert(0) += c;
        }
        self.violations.merge(&o.violations);
    }

    /// Fraction of samples with standardized `log T <= 0`.
    pub fn fraction_le_zero(&self) -> f64 {
        self.standardized_le_zero as f64 / self.samples as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// Recompute `T` and `B` exactly for every sample (`n <= CROSSCHECK_MAX_N`).
    pub crosscheck: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(n: usize, samples: u64, seed: u64) -> Self {
        ExperimentConfig {
            n,
            samples,
            seed,
            crosscheck: false,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyDomain);
        }
        if self.samples == 0 {
            return Err(Error::Domain("samples must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Domain("workers must be at least 1".into()));
        }
        if self.n > MAX_N {
            return Err(Error::ExperimentTooLarge(format!(
                "n = {} exceeds {MAX_N}",
                self.n
            )));
        }
        if self.n as u128 * self.samples as u128 > MAX_WORK {
            return Err(Error::ExperimentTooLarge(format!(
                "n * samples = {} exceeds {MAX_WORK}",
                self.n as u128 * self.samples as u128
            )));
        }
        if self.crosscheck && self.n > CROSSCHECK_MAX_N {
            return Err(Error::ExperimentTooLarge(format!(
                "cross-check needs n <= {CROSSCHECK_MAX_N}"
            )));
        }
        Ok(())
    }
}

struct Scratch {
    targets: Vec<u32>,
    analyzer: Analyzer,
    log_period: LogPeriod,
}

fn run_block(
    config: &ExperimentConfig,
    sieve: &PrimeSieve,
    harris: Option<HarrisParams>,
    scratch: &mut Scratch,
    block: u64,
) -> StatSummary {
    let n = config.n;
    let mut acc = StatSummary::empty(n, config.seed, config.crosscheck);
    let mut rng = block_rng(config.seed, block);
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(config.samples);
    for _ in start..end {
        fill_mapping(n, &mut rng, &mut scratch.targets);
        let pass = scratch.analyzer.run(&scratch.targets);
        let value = scratch
            .log_period
            .evaluate(sieve, scratch.analyzer.cycle_lengths());
        acc.samples += 1;
        acc.log_t.push(value.log_period);
        acc.log_b.push(value.log_product);
        acc.log_gap.push(value.log_product - value.log_period);
        acc.z.push(pass.num_cyclic as f64);
        *acc.z_counts.entry(pass.num_cyclic).or_insert(0) += 1;
        if !value.divides {
            acc.violations.period_not_dividing_product += 1;
        }
        // O - T = max(h - 1, 0)
        if pass.max_tail_height.saturating_sub(1) as usize >= n {
            acc.violations.denes += 1;
        }
        if value.log_product < value.log_period {
            acc.violations.log_order += 1;
        }
        // n = 1 has no normalization; its samples land in the central bin
        let std = harris.map_or(0.0, |h| h.standardize(value.log_period));
        acc.histogram[hist_bin(std)] += 1;
        if std <= 0.0 {
            acc.standardized_le_zero += 1;
        }
        if config.crosscheck {
            let mapping = Mapping::from_zero_based(scratch.targets.clone()).expect("valid draw");
            let stats = period_stats(&analyze(&mapping));
            let (big_t, big_b) = stats.big_logs();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
            if !close(big_t, value.log_period)
                || !close(big_b, value.log_product)
                || !stats.period_divides_product()
                || !stats.denes_holds()
            {
                acc.violations.crosscheck += 1;
            }
        }
    }
    acc
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<StatSummary> {
    config.validate()?;
    let sieve = PrimeSieve::new(config.n);
    let harris = if config.n >= 2 {
        Some(harris_params(config.n)?)
    } else {
        None
    };
    let blocks = config.samples.div_ceil(BLOCK_SIZE);
    let work = || {
        (0..blocks)
            .into_par_iter()
            .map_init(
                || Scratch {
                    targets: Vec::with_capacity(config.n),
                    analyzer: Analyzer::new(),
                    log_period: LogPeriod::new(config.n),
                },
                |scratch, block| run_block(config, &sieve, harris, scratch, block),
            )
            .collect::<Vec<_>>()
    };
    let parts = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut total = StatSummary::empty(config.n, config.seed, config.crosscheck);
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

/// Pearson chi-square of observed `Z` counts against a pmf.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofResult {
    pub chi2: f64,
    pub dof: usize,
    pub pvalue: f64,
    /// Pooled cells as inclusive `(m_low, m_high)` ranges.
    pub cells: Vec<(usize, usize)>,
}

/// Chi-square test of `z_counts` against `pmf`, pooling adjacent values
/// until every cell expects at least [`MIN_EXPECTED`] samples.
pub fn z_gof(summary: &StatSummary, pmf: &ZDistribution) -> Result<GofResult> {
    z_gof_counts(&summary.z_counts, summary.samples, &pmf.probabilities())
}

/// `probs[m - 1] = P(Z = m)`.
pub fn z_gof_counts(
    counts: &BTreeMap<usize, u64>,
    samples: u64,
    probs: &[f64],
) -> Result<GofResult> {
    if counts.keys().any(|&m| m == 0 || m > probs.len()) {
        return Err(Error::Domain(
            "observed Z outside the support of the pmf".into(),
        ));
    }
    let total = samples as f64;
    // (low, high, expected, observed)
    let mut cells: Vec<(usize, usize, f64, u64)> = Vec::new();
    let mut open: Option<(usize, f64, u64)> = None;
    for (i, &p) in probs.iter().enumerate() {
        let m = i + 1;
        let obs = counts.get(&m).copied().unwrap_or(0);
        let (low, exp, o) = open.take().unwrap_or((m, 0.0, 0));
        let (exp, o) = (exp + p * total, o + obs);
        if exp >= MIN_EXPECTED {
            cells.push((low, m, exp, o));
        } else {
            open = Some((low, exp, o));
        }
    }
    if let Some((low, exp, o)) = open {
        match cells.last_mut() {
            Some(last) => {
                last.1 = probs.len();
                last.2 += exp;
                last.3 += o;
            }
            None => cells.push((low, probs.len(), exp, o)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} pooled cell(s) with expected count >= {MIN_EXPECTED}",
            cells.len()
        )));
    }
    let chi2: f64 = cells
        .iter()
        .map(|&(_, _, e, o)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = cells.len() - 1;
    Ok(GofResult {
        chi2,
        dof,
        pvalue: chi_square_sf(chi2, dof),
        cells: cells.iter().map(|&(l, h, _, _)| (l, h)).collect(),
    })
}

/// Writes one CSV row with every scalar of the summary.
pub fn write_summary_csv<W: Write>(s: &StatSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "samples",
        "seed",
        "rng",
        "mean_log_T",
        "var_log_T",
        "mean_log_B",
        "var_log_B",
        "mean_log_B_minus_log_T",
        "var_log_B_minus_log_T",
        "mean_Z",
        "var_Z",
        "frac_std_log_T_le_0",
        "viol_T_not_div_B",
        "viol_denes",
        "viol_logB_lt_logT",
        "viol_crosscheck",
        "crosscheck",
    ])?;
    w.write_record([
        s.n.to_string(),
        s.samples.to_string(),
        s.seed.to_string(),
        RNG_ALGORITHM.to_string(),
        s.log_t.mean.to_string(),
        s.log_t.variance().to_string(),
        s.log_b.mean.to_string(),
        s.log_b.variance().to_string(),
        s.log_gap.mean.to_string(),
        s.log_gap.variance().to_string(),
        s.z.mean.to_string(),
        s.z.variance().to_string(),
        s.fraction_le_zero().to_string(),
        s.violations.period_not_dividing_product.to_string(),
        s.violations.denes.to_string(),
        s.violations.log_order.to_string(),
        s.violations.crosscheck.to_string(),
        s.crosscheck.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Histogram CSV: `bin_low, bin_high, count, phi_delta`, where `phi_delta`
/// is the standard normal mass of the bin.
pub fn write_histogram_csv<W: Write>(s: &StatSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_low", "bin_high", "count", "phi_delta"])?;
    for (i, &count) in s.histogram.iter().enumerate() {
        let (lo, hi) = hist_edges(i);
        let cdf = |x: f64| {
            if x.is_infinite() {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                normal_cdf(x)
            }
        };
        w.write_record([
            lo.to_string(),
            hi.to_string(),
            count.to_string(),
            (cdf(hi) - cdf(lo)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
