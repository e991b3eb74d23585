//! Mappings `[n] -> [n]` and their functional graphs.
//!
//! Every weak component of the graph `v -> f(v)` carries exactly one
//! directed cycle. [`analyze`] finds the cycles, the distance of every
//! vertex to its cycle and the component sizes in one linear pass;
//! [`period_stats`] turns the cycle lengths into `T`, `B` and `O`.
//!
//! Vertices are 1-based at the text/JSON boundary and 0-based inside.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use crate::scalar::ln_biguint;
use crate::{Error, Natural, Result};

/// A total function on `{1..n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mapping {
    targets: Vec<u32>,
}

impl Mapping {
    /// Builds a mapping from 1-based targets.
    pub fn from_one_based<I>(targets: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<i64>,
    {
        let raw: Vec<i64> = targets.into_iter().map(Into::into).collect();
        let n = raw.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if n > u32::MAX as usize {
            return Err(Error::Domain(format!(
                "n = {n} does not fit 32-bit vertex ids"
            )));
        }
        let targets = raw
            .iter()
            .enumerate()
            .map(|(position, &value)| {
                if (1..=n as i64).contains(&value) {
                    Ok((value - 1) as u32)
                } else {
                    Err(Error::InvalidTarget {
                        position: position + 1,
                        value,
                        n,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mapping { targets })
    }

    /// Builds a mapping from 0-based targets.
    pub fn from_zero_based(targets: Vec<u32>) -> Result<Self> {
        let n = targets.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if let Some(position) = targets.iter().position(|&t| t as usize >= n) {
            return Err(Error::InvalidTarget {
                position: position + 1,
                value: targets[position] as i64 + 1,
                n,
            });
        }
        Ok(Mapping { targets })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_zero_based((0..n as u32).collect())
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// 0-based target table.
    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    /// `f(v)` for a 1-based vertex.
    pub fn apply(&self, v: usize) -> usize {
        self.targets[v - 1] as usize + 1
    }

    pub fn is_permutation(&self) -> bool {
        let mut hit = vec![false; self.n()];
        self.targets
            .iter()
            .all(|&t| !std::mem::replace(&mut hit[t as usize], true))
    }
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_mapping(s.as_bytes())
    }
}

/// Parses `n` followed by `n` whitespace-separated 1-based targets.
pub fn parse_mapping(text: &[u8]) -> Result<Mapping> {
    let text = String::from_utf8_lossy(text);
    let mut tokens = text.split_ascii_whitespace().map(|tok| {
        tok.parse::<i64>()
            .map_err(|_| Error::InvalidToken(tok.to_owned()))
    });
    let n = match tokens.next() {
        None => return Err(Error::EmptyDomain),
        Some(tok) => tok?,
    };
    if n <= 0 {
        return Err(Error::EmptyDomain);
    }
    let targets = tokens.collect::<Result<Vec<i64>>>()?;
    if targets.len() != n as usize {
        return Err(Error::LengthMismatch {
            expected: n as usize,
            found: targets.len(),
        });
    }
    Mapping::from_one_based(targets)
}

/// Cycle structure of a functional graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleStructure {
    n: usize,
    /// 1-based, ascending.
    pub cyclic_vertices: Vec<usize>,
    /// Ascending.
    pub cycle_lengths: Vec<usize>,
    /// Indexed by 0-based vertex.
    pub tail_heights: Vec<u32>,
    /// `component_profile[d]` = number of weak components with `d` vertices.
    pub component_profile: Vec<usize>,
}

impl CycleStructure {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cyclic vertices, `Z`.
    pub fn num_cyclic(&self) -> usize {
        self.cyclic_vertices.len()
    }

    /// Total vertex count `sum_d d * alpha_d`.
    pub fn nu(&self) -> usize {
        self.component_profile
            .iter()
            .enumerate()
            .map(|(d, a)| d * a)
            .sum()
    }

    pub fn max_tail_height(&self) -> u32 {
        self.tail_heights.iter().copied().max().unwrap_or(0)
    }

    pub fn num_components(&self) -> usize {
        self.component_profile.iter().sum()
    }
}

/// Cycle data produced by one pass of [`Analyzer`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PassSummary {
    pub num_cyclic: usize,
    pub max_tail_height: u32,
}

const UNSEEN: u8 = 0;
const ON_PATH: u8 = 1;
const DONE: u8 = 2;

/// Reusable scratch space for decomposing many mappings of one size.
#[derive(Debug, Default)]
pub struct Analyzer {
    state: Vec<u8>,
    position: Vec<u32>,
    height: Vec<u32>,
    component: Vec<u32>,
    path: Vec<u32>,
    cycle_lengths: Vec<usize>,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Decomposes a 0-based target table; cycle lengths are left in
    /// [`Analyzer::cycle_lengths`] in discovery order.
    pub fn run(&mut self, targets: &[u32]) -> PassSummary {
        let n = targets.len();
        self.state.clear();
        self.state.resize(n, UNSEEN);
        self.position.resize(n, 0);
        self.height.resize(n, 0);
        self.component.resize(n, 0);
        self.cycle_lengths.clear();

        let mut num_cyclic = 0;
        let mut max_height = 0;
        for start in 0..n {
            if self.state[start] != UNSEEN {
                continue;
            }
            self.path.clear();
            let mut x = start;
            while self.state[x] == UNSEEN {
                self.state[x] = ON_PATH;
                self.position[x] = self.path.len() as u32;
                self.path.push(x as u32);
                x = targets[x] as usize;
            }
            let (tail_len, base_height, comp) = if self.state[x] == ON_PATH {
                let p = self.position[x] as usize;
                let comp = self.cycle_lengths.len() as u32;
                for &c in &self.path[p..] {
                    let c = c as usize;
                    self.state[c] = DONE;
                    self.height[c] = 0;
                    self.component[c] = comp;
                }
                let len = self.path.len() - p;
                self.cycle_lengths.push(len);
                num_cyclic += len;
                (p, 0, comp)
            } else {
                (self.path.len(), self.height[x], self.component[x])
            };
            for (i, &u) in self.path[..tail_len].iter().rev().enumerate() {
                let u = u as usize;
                let h = base_height + i as u32 + 1;
                self.state[u] = DONE;
                self.height[u] = h;
                self.component[u] = comp;
                max_height = max_height.max(h);
            }
        }
        PassSummary {
            num_cyclic,
            max_tail_height: max_height,
        }
    }

    pub fn cycle_lengths(&self) -> &[usize] {
        &self.cycle_lengths
    }

    /// Tail heights of the last run.
    pub fn heights(&self) -> &[u32] {
        &self.height
    }

    /// Component index (one per cycle) of every vertex in the last run.
    pub fn components(&self) -> &[u32] {
        &self.component
    }
}

/// Full decomposition of `f`.
pub fn analyze(f: &Mapping) -> CycleStructure {
    let mut analyzer = Analyzer::new();
    analyzer.run(f.targets());
    let n = f.n();
    let mut cyclic_vertices: Vec<usize> = analyzer
        .heights()
        .iter()
        .enumerate()
        .filter(|(_, &h)| h == 0)
        .map(|(v, _)| v + 1)
        .collect();
    cyclic_vertices.sort_unstable();
    let mut sizes = vec![0usize; analyzer.cycle_lengths().len()];
    for &c in analyzer.components() {
        sizes[c as usize] += 1;
    }
    let mut component_profile = vec![0usize; n + 1];
    for s in sizes {
        component_profile[s] += 1;
    }
    let mut cycle_lengths = analyzer.cycle_lengths().to_vec();
    cycle_lengths.sort_unstable();
    CycleStructure {
        n,
        cyclic_vertices,
        cycle_lengths,
        tail_heights: analyzer.heights().to_vec(),
        component_profile,
    }
}

/// `T`, `B` and `O` of one mapping.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodStats {
    pub n: usize,
    pub period: Natural,
    pub product: Natural,
    pub distinct_iterates: Natural,
    pub log_period: f64,
    pub log_product: f64,
    /// prime -> largest exponent of that prime in any cycle length.
    pub prime_exponents: BTreeMap<u64, u32>,
    pub cycle_lengths: Vec<usize>,
    pub num_cyclic: usize,
    pub max_tail_height: u32,
}

/// Prime factorisation by trial division, ascending primes.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// Number of distinct iterates `f, f^2, ...` given the period and the
/// longest tail: `T + max(h - 1, 0)`.
pub fn distinct_iterates(period: &Natural, max_tail_height: u32) -> Natural {
    period + BigUint::from(max_tail_height.saturating_sub(1))
}

pub fn period_stats(cs: &CycleStructure) -> PeriodStats {
    let mut prime_exponents = BTreeMap::new();
    let mut product = BigUint::one();
    let mut log_product = 0.0;
    for &len in &cs.cycle_lengths {
        product *= len;
        log_product += (len as f64).ln();
        for (p, e) in factorize(len as u64) {
            let slot = prime_exponents.entry(p).or_insert(0);
            *slot = (*slot).max(e);
        }
    }
    let mut period = BigUint::one();
    let mut log_period = 0.0;
    for (&p, &e) in &prime_exponents {
        period *= BigUint::from(p).pow(e);
        log_period += e as f64 * (p as f64).ln();
    }
    let max_tail_height = cs.max_tail_height();
    PeriodStats {
        n: cs.n(),
        distinct_iterates: distinct_iterates(&period, max_tail_height),
        period,
        product,
        log_period,
        log_product,
        prime_exponents,
        cycle_lengths: cs.cycle_lengths.clone(),
        num_cyclic: cs.num_cyclic(),
        max_tail_height,
    }
}

impl PeriodStats {
    pub fn period_divides_product(&self) -> bool {
        self.product.is_multiple_of(&self.period)
    }

    /// `|O - T| < n`.
    pub fn denes_holds(&self) -> bool {
        let gap = &self.distinct_iterates - &self.period;
        gap < BigUint::from(self.n)
    }

    pub fn report(&self) -> PeriodReport {
        PeriodReport {
            n: self.n,
            period: self.period.to_string(),
            product: self.product.to_string(),
            distinct_iterates: self.distinct_iterates.to_string(),
            log_period: self.log_period,
            log_product: self.log_product,
            cycle_lengths: self.cycle_lengths.clone(),
            num_cyclic: self.num_cyclic,
        }
    }

    /// Logs recomputed from the big integers.
    pub fn big_logs(&self) -> (f64, f64) {
        (ln_biguint(&self.period), ln_biguint(&self.product))
    }
}

/// JSON form of [`PeriodStats`]; big integers as decimal strings.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodReport {
    pub n: usize,
    #[serde(rename = "T")]
    pub period: String,
    #[serde(rename = "B")]
    pub product: String,
    #[serde(rename = "O")]
    pub distinct_iterates: String,
    #[serde(rename = "log_T")]
    pub log_period: f64,
    #[serde(rename = "log_B")]
    pub log_product: f64,
    pub cycle_lengths: Vec<usize>,
    pub num_cyclic: usize,
}

/// Smallest-prime-factor table for fast factorisation of cycle lengths.
#[derive(Clone, Debug)]
pub struct PrimeSieve {
    spf: Vec<u32>,
}

impl PrimeSieve {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        PrimeSieve { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    /// Calls `visit(p, e)` for each prime power `p^e` exactly dividing `m`.
    pub fn for_each_factor(&self, mut m: usize, mut visit: impl FnMut(usize, u32)) {
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            visit(p, e);
        }
    }
}

/// Log-space period statistics for large `n` without big integers.
#[derive(Debug)]
pub struct LogPeriod {
    max_exp: Vec<u8>,
    sum_exp: Vec<u32>,
    touched: Vec<usize>,
}

/// Output of [`LogPeriod::evaluate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPeriodValue {
    pub log_period: f64,
    pub log_product: f64,
    /// false if some prime has a larger exponent in `T` than in `B`.
    pub divides: bool,
}

impl LogPeriod {
    pub fn new(n: usize) -> Self {
        LogPeriod {
            max_exp: vec![0; n + 1],
            sum_exp: vec![0; n + 1],
            touched: Vec::new(),
        }
    }

    pub fn evaluate(&mut self, sieve: &PrimeSieve, cycle_lengths: &[usize]) -> LogPeriodValue {
        for &len in cycle_lengths {
            let (max_exp, sum_exp, touched) =
                (&mut self.max_exp, &mut self.sum_exp, &mut self.touched);
            sieve.for_each_factor(len, |p, e| {
                if sum_exp[p] == 0 {
                    touched.push(p);
                }
                max_exp[p] = max_exp[p].max(e as u8);
                sum_exp[p] += e;
            });
        }
        self.touched.sort_unstable();
        // both logs from the same exponents, so log_period <= log_product exactly
        let (mut log_period, mut log_product) = (0.0, 0.0);
        let mut divides = true;
        for &p in &self.touched {
            let ln_p = (p as f64).ln();
            log_period += self.max_exp[p] as f64 * ln_p;
            log_product += self.sum_exp[p] as f64 * ln_p;
            divides &= self.max_exp[p] as u32 <= self.sum_exp[p];
            self.max_exp[p] = 0;
            self.sum_exp[p] = 0;
        }
        self.touched.clear();
        LogPeriodValue {
            log_period,
            log_product,
            divides,
        }
    }
}
