//! Exact ground truth: brute-force enumeration, the distribution of the
//! number of cyclic vertices `Z`, mean permutation order `M_m`, mean cycle
//! product `b_m`, and `E_n(T)`, `E_n(B)` by conditioning on `Z`.
//!
//! Given `Z = m`, the cyclic vertices carry a uniform random permutation of
//! `m` points, so `E_n(T) = sum_m P(Z = m) M_m`. With
//! `P(Z = m) = n! m / ((n - m)! n^{m+1})` and `M_m = L_m / m!` the sum
//! collapses to the integer `n^{n+1} E_n(T) = sum_m m C(n, m) n^{n-m} L_m`.

use std::io::Write;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::fungraph::Analyzer;
use crate::scalar::rational_from_biguints;
use crate::series::exp_series_egf;
use crate::special::ln_gamma;
use crate::{Error, ExactScalar, Rational, Result};

/// Largest `n` accepted by [`brute_force_expectations`].
pub const ENUMERATION_CEILING: usize = 8;

/// Default ceiling for partition enumeration.
pub const M_MAX: usize = 60;

/// Default ceiling for [`exact_e_b_conditional`].
pub const CONDITIONAL_CEILING: usize = 500;

/// Mappings handled by one enumeration task.
const ENUMERATION_BLOCK: u64 = 1 << 16;

/// Exact `(E_n(T), E_n(B))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expectations {
    pub n: usize,
    pub e_t: ExactScalar,
    pub e_b: ExactScalar,
}

/// Averages `T` and `B` over all `n^n` mappings.
pub fn brute_force_expectations(n: usize) -> Result<Expectations> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if n > ENUMERATION_CEILING {
        return Err(Error::EnumerationTooLarge {
            n,
            ceiling: ENUMERATION_CEILING,
        });
    }
    let total = (n as u64).pow(n as u32);
    let blocks = total.div_ceil(ENUMERATION_BLOCK);
    let (sum_t, sum_b) = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let start = block * ENUMERATION_BLOCK;
            let end = (start + ENUMERATION_BLOCK).min(total);
            enumerate_range(n, start, end)
        })
        .reduce(|| (0u128, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));
    let den = BigUint::from(total);
    Ok(Expectations {
        n,
        e_t: ExactScalar::exact(rational_from_biguints(BigUint::from(sum_t), den.clone())),
        e_b: ExactScalar::exact(rational_from_biguints(BigUint::from(sum_b), den)),
    })
}

/// Sums of `T` and `B` over mappings with base-`n` indices in `start..end`.
fn enumerate_range(n: usize, start: u64, end: u64) -> (u128, u128) {
    let mut digits = vec![0u32; n];
    let mut rest = start;
    for d in digits.iter_mut() {
        *d = (rest % n as u64) as u32;
        rest /= n as u64;
    }
    let mut analyzer = Analyzer::new();
    let (mut sum_t, mut sum_b) = (0u128, 0u128);
    for _ in start..end {
        analyzer.run(&digits);
        let (mut t, mut b) = (1u64, 1u64);
        for &len in analyzer.cycle_lengths() {
            t = t.lcm(&(len as u64));
            b *= len as u64;
        }
        sum_t += t as u128;
        sum_b += b as u128;
        for d in digits.iter_mut() {
            *d += 1;
            if (*d as usize) < n {
                break;
            }
            *d = 0;
        }
    }
    (sum_t, sum_b)
}

/// `P_n(Z = m)` for `m = 1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZDistribution {
    pub n: usize,
    /// `pmf[m - 1] = P(Z = m)`.
    pub pmf: Vec<ExactScalar>,
}

impl ZDistribution {
    pub fn prob(&self, m: usize) -> Option<&ExactScalar> {
        m.checked_sub(1).and_then(|i| self.pmf.get(i))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.pmf.iter().map(ExactScalar::to_f64).collect()
    }

    /// Exact total when every entry is exact.
    pub fn total(&self) -> Option<Rational> {
        self.pmf
            .iter()
            .map(|p| p.as_rational().cloned())
            .try_fold(Rational::zero(), |acc, p| p.map(|p| acc + p))
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p.to_f64())
            .sum()
    }
}

/// Integers `w_m = m n!/(n-m)! n^{n-m}` with `P(Z = m) = w_m / n^{n+1}`.
fn z_weights(n: usize) -> Vec<BigUint> {
    // falling[m] = n!/(n-m)!, computed upward; powers n^{n-m} downward
    let mut falling = Vec::with_capacity(n + 1);
    falling.push(BigUint::one());
    for m in 1..=n {
        let next = &falling[m - 1] * (n - m + 1);
        falling.push(next);
    }
    let mut weights = vec![BigUint::zero(); n];
    let mut power = BigUint::one();
    for m in (1..=n).rev() {
        weights[m - 1] = &falling[m] * &power * m;
        power *= n;
    }
    weights
}

/// Exact pmf of `Z`, checked to sum to one.
pub fn z_pmf(n: usize) -> Result<ZDistribution> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let weights = z_weights(n);
    let den = BigUint::from(n).pow(n as u32 + 1);
    let total: BigUint = weights.iter().sum();
    if total != den {
        return Err(Error::Invariant(format!(
            "P(Z = m) for n = {n} does not sum to 1"
        )));
    }
    // w_m / n^{n+1} = m (n!/(n-m)!) / n^{m+1}; the smaller form is cheaper to reduce
    let pmf = (1..=n)
        .into_par_iter()
        .map(|m| {
            let mut num = BigUint::from(m);
            for k in 0..m {
                num *= n - k;
            }
            ExactScalar::exact(rational_from_biguints(
                num,
                BigUint::from(n).pow(m as u32 + 1),
            ))
        })
        .collect();
    Ok(ZDistribution { n, pmf })
}

/// Float pmf from log-gamma, for `n` beyond comfortable exact sizes.
pub fn z_pmf_f64(n: usize) -> Result<ZDistribution> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let nf = n as f64;
    let ln_nfact = ln_gamma(nf + 1.0);
    let pmf = (1..=n)
        .map(|m| {
            let mf = m as f64;
            let ln_p = ln_nfact - ln_gamma(nf - mf + 1.0) + mf.ln() - (mf + 1.0) * nf.ln();
            ExactScalar::float(ln_p.exp())
        })
        .collect();
    Ok(ZDistribution { n, pmf })
}

/// Totals over all integer partitions of `m`, each weighted by the number
/// of permutations with that cycle type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSums {
    pub m: usize,
    pub partitions: u64,
    /// `m! M_m`.
    pub lcm_total: BigUint,
    /// `m! b_m`.
    pub product_total: BigUint,
}

/// `r! / ((r - d a)! d^a a!)`: ways to pick `a` cycles of length `d` from `r` points.
struct ClassFactors {
    table: Vec<Vec<Vec<BigUint>>>,
}

impl ClassFactors {
    fn new(m: usize) -> Self {
        let table = (0..=m)
            .map(|r| {
                (0..=r)
                    .map(|d| {
                        if d == 0 {
                            return Vec::new();
                        }
                        let mut out = vec![BigUint::one()];
                        let mut acc = BigUint::one();
                        for a in 1..=r / d {
                            // take d more points from the r - d(a-1) left
                            let left = r - d * (a - 1);
                            let mut choose = BigUint::one();
                            for k in 0..d {
                                choose *= left - k;
                            }
                            acc = acc * choose / (d * a);
                            out.push(acc.clone());
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        ClassFactors { table }
    }

    fn get(&self, r: usize, d: usize, a: usize) -> &BigUint {
        &self.table[r][d][a]
    }
}

struct PartitionWalk<'a> {
    factors: &'a ClassFactors,
    partitions: u64,
    lcm_total: BigUint,
    product_total: BigUint,
}

impl PartitionWalk<'_> {
    /// Distributes `r` remaining points over parts of size at most `max_part`.
    fn visit(&mut self, r: usize, max_part: usize, count: &BigUint, lcm: u128, product: &BigUint) {
        if r == 0 {
            self.partitions += 1;
            self.lcm_total += count * BigUint::from(lcm);
            self.product_total += count * product;
            return;
        }
        for d in (1..=max_part.min(r)).rev() {
            let mut part_product = product.clone();
            for a in 1..=r / d {
                part_product *= d;
                let next = count * self.factors.get(r, d, a);
                self.visit(
                    r - d * a,
                    d - 1,
                    &next,
                    lcm.lcm(&(d as u128)),
                    &part_product,
                );
            }
        }
    }
}

/// Enumerates the partitions of `m` by descending parts grouped by multiplicity.
pub fn partition_sums(m: usize, ceiling: usize) -> Result<PartitionSums> {
    if m > ceiling {
        return Err(Error::PartitionTooLarge { m, ceiling });
    }
    let factors = ClassFactors::new(m);
    let mut walk = PartitionWalk {
        factors: &factors,
        partitions: 0,
        lcm_total: BigUint::zero(),
        product_total: BigUint::zero(),
    };
    walk.visit(m, m, &BigUint::one(), 1, &BigUint::one());
    Ok(PartitionSums {
        m,
        partitions: walk.partitions,
        lcm_total: walk.lcm_total,
        product_total: walk.product_total,
    })
}

fn factorial(m: usize) -> BigUint {
    (2..=m).fold(BigUint::one(), |acc, k| acc * k)
}

/// `M_m`, the mean order of a uniform permutation of `m` points.
pub fn perm_order_mean(m: usize) -> Result<ExactScalar> {
    perm_order_mean_with_ceiling(m, M_MAX)
}

pub fn perm_order_mean_with_ceiling(m: usize, ceiling: usize) -> Result<ExactScalar> {
    if m == 0 {
        return Err(Error::Domain("perm_order_mean needs m >= 1".into()));
    }
    let sums = partition_sums(m, ceiling)?;
    Ok(ExactScalar::exact(rational_from_biguints(
        sums.lcm_total,
        factorial(m),
    )))
}

/// `m! b_m` for `m = 0..=max_m`, from `exp(x/(1-x))`.
pub fn perm_b_scaled(max_m: usize) -> Vec<BigUint> {
    let scaled: Vec<BigUint> = (1..=max_m).map(factorial).collect();
    exp_series_egf(&scaled)
}

/// `b_m`, the mean product of cycle lengths of a uniform permutation of `m` points.
pub fn perm_b_mean(m: usize) -> ExactScalar {
    let scaled = perm_b_scaled(m);
    ExactScalar::exact(rational_from_biguints(scaled[m].clone(), factorial(m)))
}

/// `M_m` and `b_m` for `m = 1..=max_m`.
#[derive(Clone, Debug)]
pub struct OrderTable {
    /// `m[i]` is `M_{i+1}`.
    pub m: Vec<ExactScalar>,
    pub b: Vec<ExactScalar>,
    /// Indices `m` where `M_m < M_{m-1}` or `b_m < b_{m-1}`.
    pub monotonicity_flags: Vec<usize>,
}

impl OrderTable {
    pub fn build(max_m: usize) -> Result<Self> {
        Self::build_with_ceiling(max_m, M_MAX)
    }

    pub fn build_with_ceiling(max_m: usize, ceiling: usize) -> Result<Self> {
        if max_m > ceiling {
            return Err(Error::PartitionTooLarge { m: max_m, ceiling });
        }
        let lcm_totals: Vec<BigUint> = (1..=max_m)
            .into_par_iter()
            .map(|m| partition_sums(m, ceiling).map(|s| s.lcm_total))
            .collect::<Result<_>>()?;
        let b_scaled = perm_b_scaled(max_m);
        let mut fact = BigUint::one();
        let mut m_vals = Vec::with_capacity(max_m);
        let mut b_vals = Vec::with_capacity(max_m);
        for (i, lcm_total) in lcm_totals.into_iter().enumerate() {
            fact *= i + 1;
            m_vals.push(rational_from_biguints(lcm_total, fact.clone()));
            b_vals.push(rational_from_biguints(
                b_scaled[i + 1].clone(),
                fact.clone(),
            ));
        }
        for (mm, bb) in m_vals.iter().zip(&b_vals) {
            if mm > bb {
                return Err(Error::Invariant("M_m exceeds b_m".into()));
            }
        }
        let monotonicity_flags = (1..max_m)
            .filter(|&i| m_vals[i] < m_vals[i - 1] || b_vals[i] < b_vals[i - 1])
            .map(|i| i + 1)
            .collect();
        Ok(OrderTable {
            m: m_vals.into_iter().map(ExactScalar::exact).collect(),
            b: b_vals.into_iter().map(ExactScalar::exact).collect(),
            monotonicity_flags,
        })
    }

    pub fn max_m(&self) -> usize {
        self.m.len()
    }

    /// CSV columns `m, M_num, M_den, b_num, b_den`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["m", "M_num", "M_den", "b_num", "b_den"])?;
        for (i, (mm, bb)) in self.m.iter().zip(&self.b).enumerate() {
            let (mm, bb) = (
                mm.as_rational().expect("exact"),
                bb.as_rational().expect("exact"),
            );
            w.write_record([
                (i + 1).to_string(),
                mm.numer().to_string(),
                mm.denom().to_string(),
                bb.numer().to_string(),
                bb.denom().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n^{n+1} E` for the conditional sum with scaled weights `s_m = m! X_m`.
fn conditional_numerator(n: usize, scaled: impl Fn(usize) -> BigUint) -> BigUint {
    let mut binom = BigUint::one(); // C(n, m)
    let mut total = BigUint::zero();
    let powers: Vec<BigUint> = {
        let mut p = vec![BigUint::one(); n + 1];
        for k in 1..=n {
            p[k] = &p[k - 1] * n;
        }
        p
    };
    for m in 1..=n {
        binom = binom * (n - m + 1) / m;
        total += &binom * m * &powers[n - m] * scaled(m);
    }
    total
}

fn conditional(n: usize, scaled: impl Fn(usize) -> BigUint) -> ExactScalar {
    let den = BigUint::from(n).pow(n as u32 + 1);
    ExactScalar::exact(rational_from_biguints(
        conditional_numerator(n, scaled),
        den,
    ))
}

/// `E_n(T) = sum_m P(Z = m) M_m`.
pub fn exact_e_t(n: usize) -> Result<ExactScalar> {
    exact_e_t_with_ceiling(n, M_MAX)
}

pub fn exact_e_t_with_ceiling(n: usize, ceiling: usize) -> Result<ExactScalar> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if n > ceiling {
        return Err(Error::PartitionTooLarge { m: n, ceiling });
    }
    let lcm_totals: Vec<BigUint> = (1..=n)
        .into_par_iter()
        .map(|m| partition_sums(m, ceiling).map(|s| s.lcm_total))
        .collect::<Result<_>>()?;
    Ok(conditional(n, |m| lcm_totals[m - 1].clone()))
}

/// `E_n(B) = sum_m P(Z = m) b_m`.
pub fn exact_e_b_conditional(n: usize) -> Result<ExactScalar> {
    exact_e_b_conditional_with_ceiling(n, CONDITIONAL_CEILING)
}

pub fn exact_e_b_conditional_with_ceiling(n: usize, ceiling: usize) -> Result<ExactScalar> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if n > ceiling {
        return Err(Error::ExactModeTooLarge { n, ceiling });
    }
    let scaled = perm_b_scaled(n);
    Ok(conditional(n, |m| scaled[m].clone()))
}

/// One row of the expectations CSV.
#[derive(Clone, Debug, Serialize)]
pub struct ExpectationRow {
    pub n: usize,
    pub e_t_num: String,
    pub e_t_den: String,
    pub e_b_num: String,
    pub e_b_den: String,
}

impl ExpectationRow {
    pub fn new(n: usize, e_t: &ExactScalar, e_b: &ExactScalar) -> Self {
        let split = |x: &ExactScalar| match x.as_rational() {
            Some(r) => (r.numer().to_string(), r.denom().to_string()),
            None => (x.to_string(), String::new()),
        };
        let (e_t_num, e_t_den) = split(e_t);
        let (e_b_num, e_b_den) = split(e_b);
        ExpectationRow {
            n,
            e_t_num,
            e_t_den,
            e_b_num,
            e_b_den,
        }
    }
}

/// CSV columns `n, E_T_num, E_T_den, E_B_num, E_B_den`.
pub fn write_expectations_csv<W: Write>(rows: &[ExpectationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "E_T_num", "E_T_den", "E_B_num", "E_B_den"])?;
    for r in rows {
        w.write_record([
            &r.n.to_string(),
            &r.e_t_num,
            &r.e_t_den,
            &r.e_b_num,
            &r.e_b_den,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reduced `num/den` parsed from decimal strings.
pub fn parse_rational(num: &str, den: &str) -> Result<Rational> {
    let parse = |s: &str| {
        s.parse::<num_bigint::BigInt>()
            .map_err(|_| Error::InvalidToken(s.to_string()))
    };
    let den = parse(den)?;
    if den.is_zero() {
        return Err(Error::InvalidToken("0".into()));
    }
    Ok(Rational::new(parse(num)?, den))
}

/// Integer partitions of `m`, counted by the standard pentagonal recurrence.
pub fn partition_count(m: usize) -> u64 {
    let mut p = vec![0u64; m + 1];
    p[0] = 1;
    for i in 1..=m {
        let mut acc: i128 = 0;
        for k in 1.. {
            let k = k as i128;
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += sign * p[i - g1] as i128;
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= i {
                acc += sign * p[i - g2] as i128;
            }
        }
        p[i] = acc.to_u64().expect("partition counts are positive");
    }
    p[m]
}
