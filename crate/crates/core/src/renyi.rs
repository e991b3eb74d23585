//! Connected mappings: counts `|U_d|`, mean cycle length `kappa_d`, the
//! Poisson factor `Q(d) = e^{-d} sum_{k<d} d^k/k!` and the coefficients
//! `c_d = (kappa_d - 1) Q(d) / d` of the deconditioned series.
//!
//! Everything reduces to the normalised sum
//! `R(d) = sum_{k>=1} prod_{j<k} (1 - j/d)`: with `t_k` its summands,
//! `|U_d| = d^{d-1} R(d)`, `kappa_d = sum_k k t_k / R(d)` and
//! `Q(d) = (d^d e^{-d} / d!) R(d)`. Exact values use the finite sums on big
//! integers; floats use the ratio recurrence `t_{k+1} = t_k (d - k) / d`
//! for moderate `d` and the asymptotic expansion of `R` beyond.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow};
use rayon::prelude::*;
use serde::Serialize;

use crate::scalar::{rational_from_biguints, rational_to_f64};
use crate::special::ln_poisson_mode;
use crate::{ExactScalar, Rational, Real, Result};

/// Default largest `d` evaluated with big integers.
pub const DEFAULT_EXACT_CEILING: usize = 2000;

/// Above this `d` the float route switches to the asymptotic series for `R(d)`.
pub const ASYMPTOTIC_FROM: usize = 3000;

/// Exact summands `t_k = (d-1)!/(d-k)! * d^{d-k}`, `k = 1..=d`.
fn exact_terms(d: usize) -> Vec<BigUint> {
    let mut terms = Vec::with_capacity(d);
    let mut t = BigUint::from(d).pow(d - 1);
    for k in 1..=d {
        terms.push(t.clone());
        if k < d {
            t = t * (d - k) / d;
        }
    }
    terms
}

/// `|U_d| = sum_k C(d,k) (k-1)! k d^{d-1-k}`.
pub fn connected_count(d: usize) -> BigUint {
    assert!(d >= 1, "connected_count needs d >= 1");
    exact_terms(d).into_iter().sum()
}

/// Numerator of `kappa_d`: `sum_k k C(d,k) (k-1)! k d^{d-1-k}`.
pub fn cycle_length_total(d: usize) -> BigUint {
    exact_terms(d)
        .into_iter()
        .enumerate()
        .map(|(i, t)| t * (i + 1))
        .sum()
}

pub fn kappa_exact(d: usize) -> Rational {
    let terms = exact_terms(d);
    let count: BigUint = terms.iter().sum();
    let total: BigUint = terms
        .into_iter()
        .enumerate()
        .map(|(i, t)| t * (i + 1))
        .sum();
    rational_from_biguints(total, count)
}

/// `S_d = sum_{k<d} d^k / k!`.
pub fn poisson_partial_sum(d: usize) -> Rational {
    // (d-1)! S_d = sum_k d^k (d-1)!/k!, built upward from the k = 0 term
    let m = d - 1;
    let mut fact = BigUint::one();
    for k in 2..=m {
        fact *= k;
    }
    let mut term = fact.clone();
    let mut num = term.clone();
    for k in 0..m {
        term = term * d / (k + 1);
        num += &term;
    }
    rational_from_biguints(num, fact)
}

/// `gamma_d = (kappa_d - 1) S_d / d`, so that `c_d = gamma_d e^{-d}`.
pub fn gamma_exact(d: usize) -> Rational {
    let one = Rational::one();
    (kappa_exact(d) - one) * poisson_partial_sum(d) / Rational::from_integer(BigInt::from(d))
}

/// Float `(R(d), sum_k k t_k)` by the ratio recurrence with Kahan summation,
/// stopping once summands no longer register.
fn direct_sums(d: usize) -> (f64, f64) {
    let df = d as f64;
    let (mut r, mut r_comp) = (0.0f64, 0.0f64);
    let (mut k_sum, mut k_comp) = (0.0f64, 0.0f64);
    let mut t = 1.0f64;
    for k in 1..=d {
        let add = |acc: &mut f64, comp: &mut f64, x: f64| {
            let y = x - *comp;
            let s = *acc + y;
            *comp = (s - *acc) - y;
            *acc = s;
        };
        add(&mut r, &mut r_comp, t);
        add(&mut k_sum, &mut k_comp, k as f64 * t);
        if k as f64 * t < 1e-20 * r {
            break;
        }
        t *= (df - k as f64) / df;
    }
    (r, k_sum)
}

/// Asymptotic expansion of `R(d)` (Ramanujan's Q-function).
fn ramanujan_asymptotic(d: f64) -> f64 {
    let h = (std::f64::consts::PI / (2.0 * d)).sqrt();
    let inv = 1.0 / d;
    (std::f64::consts::PI * d / 2.0).sqrt() - 1.0 / 3.0 + h / 12.0 - 4.0 / 135.0 * inv
        + h * inv / 288.0
        + 8.0 / 2835.0 * inv * inv
        - 139.0 / 51840.0 * h * inv * inv
        - 16.0 / 8505.0 * inv * inv * inv
}

/// `R(d) = |U_d| / d^{d-1}`.
pub fn ramanujan_r(d: usize) -> Real {
    assert!(d >= 1);
    if d <= ASYMPTOTIC_FROM {
        direct_sums(d).0
    } else {
        ramanujan_asymptotic(d as f64)
    }
}

pub fn kappa_f64(d: usize) -> Real {
    assert!(d >= 1);
    if d <= ASYMPTOTIC_FROM {
        let (r, k) = direct_sums(d);
        k / r
    } else {
        // sum_k k t_k = d exactly
        d as f64 / ramanujan_asymptotic(d as f64)
    }
}

/// `kappa_d`, exact up to `exact_ceiling`.
pub fn kappa(d: usize, exact_ceiling: usize) -> ExactScalar {
    if d <= exact_ceiling {
        ExactScalar::Exact(kappa_exact(d))
    } else {
        ExactScalar::float(kappa_f64(d))
    }
}

/// `Q(d) = e^{-d} sum_{k=0}^{d-1} d^k / k!`.
pub fn q_factor(d: usize) -> Real {
    assert!(d >= 1);
    ln_poisson_mode(d as f64).exp() * ramanujan_r(d)
}

/// `c_d = (kappa_d - 1) Q(d) / d`, computed as `(1 - R(d)/d) d^d e^{-d}/d!`.
pub fn c_f64(d: usize) -> Real {
    assert!(d >= 1);
    let r = ramanujan_r(d);
    (1.0 - r / d as f64) * ln_poisson_mode(d as f64).exp()
}

/// `(c_d, gamma_d)`; `gamma_d` is exact when `d <= exact_ceiling`.
pub fn c_coeff(d: usize, exact_ceiling: usize) -> (Real, ExactScalar) {
    if d <= exact_ceiling {
        let g = gamma_exact(d);
        (c_from_gamma(d, &g), ExactScalar::Exact(g))
    } else {
        let c = c_f64(d);
        (c, ExactScalar::float(c * (d as f64).exp()))
    }
}

// e^{d} overflows past d = 709; the float route is as accurate there.
fn c_from_gamma(d: usize, gamma: &Rational) -> Real {
    if d <= 700 {
        rational_to_f64(gamma) * (-(d as f64)).exp()
    } else {
        c_f64(d)
    }
}

/// One row of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct RenyiRow {
    pub d: usize,
    pub connected: Option<BigUint>,
    pub kappa: ExactScalar,
    pub q: Real,
    pub s: Option<Rational>,
    pub c: Real,
    pub gamma: ExactScalar,
}

/// `|U_d|`, `kappa_d`, `Q(d)`, `S_d`, `c_d`, `gamma_d` for `d = 1..=max_d`.
#[derive(Clone, Debug)]
pub struct RenyiTable {
    pub rows: Vec<RenyiRow>,
    pub exact_ceiling: usize,
}

impl RenyiTable {
    pub fn build(max_d: usize, exact_ceiling: usize) -> Self {
        let rows = (1..=max_d)
            .into_par_iter()
            .map(|d| {
                if d <= exact_ceiling {
                    let terms = exact_terms(d);
                    let count: BigUint = terms.iter().sum();
                    let total: BigUint = terms
                        .into_iter()
                        .enumerate()
                        .map(|(i, t)| t * (i + 1))
                        .sum();
                    let kappa = rational_from_biguints(total, count.clone());
                    let s = poisson_partial_sum(d);
                    let gamma = (kappa.clone() - Rational::one()) * s.clone()
                        / Rational::from_integer(BigInt::from(d));
                    let c = c_from_gamma(d, &gamma);
                    RenyiRow {
                        d,
                        connected: Some(count),
                        kappa: ExactScalar::Exact(kappa),
                        q: q_factor(d),
                        s: Some(s),
                        c,
                        gamma: ExactScalar::Exact(gamma),
                    }
                } else {
                    let c = c_f64(d);
                    RenyiRow {
                        d,
                        connected: None,
                        kappa: ExactScalar::float(kappa_f64(d)),
                        q: q_factor(d),
                        s: None,
                        c,
                        gamma: ExactScalar::float(c * (d as f64).exp()),
                    }
                }
            })
            .collect();
        RenyiTable {
            rows,
            exact_ceiling,
        }
    }

    pub fn c_values(&self) -> Vec<Real> {
        self.rows.iter().map(|r| r.c).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Record {
            d: usize,
            #[serde(rename = "U_d")]
            connected: String,
            kappa_num: String,
            kappa_den: String,
            #[serde(rename = "Q_d")]
            q: f64,
            c_d: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            let (kappa_num, kappa_den) = match row.kappa.as_rational() {
                Some(r) => (r.numer().to_string(), r.denom().to_string()),
                None => (format!("{:e}", row.kappa.to_f64()), String::from("1")),
            };
            w.serialize(Record {
                d: row.d,
                connected: row
                    .connected
                    .as_ref()
                    .map(|u| u.to_string())
                    .unwrap_or_default(),
                kappa_num,
                kappa_den,
                q: row.q,
                c_d: row.c,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `gamma_d` numerators on the common denominator `d!`: `d^d - |U_d|`.
///
/// These are the integer inputs of the exponential-generating-function
/// recurrence in [`crate::series`].
pub fn gamma_scaled(d: usize) -> BigUint {
    // (kappa_d - 1) S_d / d * d! = (d^d - |U_d|) since kappa_d |U_d| = d^d
    let total = cycle_length_total(d);
    let count = connected_count(d);
    debug_assert_eq!(total, BigUint::from(d).pow(d));
    total - count
}

/// Float summary used by tests and reports: `|U_d| / (d^d sqrt(pi/(2d)))`.
pub fn connected_ratio(d: usize) -> Real {
    ramanujan_r(d) / d as f64 / (std::f64::consts::PI / (2.0 * d as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fungraph::{analyze, Mapping};

    fn all_mappings(n: usize) -> impl Iterator<Item = Mapping> {
        let total = (n as u64).pow(n as u32);
        (0..total).map(move |mut idx| {
            let mut t = vec![0u32; n];
            for slot in t.iter_mut() {
                *slot = (idx % n as u64) as u32;
                idx /= n as u64;
            }
            Mapping::from_zero_based(t).unwrap()
        })
    }

    fn ratio(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn small_counts_and_kappas() {
        assert_eq!(connected_count(1), BigUint::from(1u32));
        assert_eq!(connected_count(2), BigUint::from(3u32));
        assert_eq!(connected_count(3), BigUint::from(17u32));
        assert_eq!(kappa_exact(1), ratio(1, 1));
        assert_eq!(kappa_exact(2), ratio(4, 3));
        assert_eq!(kappa_exact(3), ratio(27, 17));
    }

    #[test]
    fn brute_force_connected_mappings() {
        for d in 1..=7 {
            let mut count = 0u64;
            let mut cycle_total = 0u64;
            for f in all_mappings(d) {
                let cs = analyze(&f);
                if cs.num_components() == 1 {
                    count += 1;
                    cycle_total += cs.cycle_lengths[0] as u64;
                }
            }
            assert_eq!(connected_count(d), BigUint::from(count), "d = {d}");
            assert_eq!(
                kappa_exact(d),
                Rational::new(cycle_total.into(), count.into()),
                "d = {d}"
            );
        }
    }

    #[test]
    fn q_factor_examples() {
        assert!((q_factor(1) - (-1f64).exp()).abs() < 1e-15);
        assert!((q_factor(2) - 3.0 * (-2f64).exp()).abs() < 1e-15);
        assert!((q_factor(10_000) - 0.5).abs() < 0.01);
        // compare with the exact partial sum
        for d in [3usize, 17, 60, 300] {
            let exact = rational_to_f64(&poisson_partial_sum(d)) * (-(d as f64)).exp();
            assert!((q_factor(d) - exact).abs() < 1e-13 * exact, "d = {d}");
        }
    }

    #[test]
    fn c_coeff_examples() {
        let (c1, g1) = c_coeff(1, DEFAULT_EXACT_CEILING);
        assert_eq!(c1, 0.0);
        assert_eq!(g1, ExactScalar::Exact(ratio(0, 1)));
        let (c2, g2) = c_coeff(2, DEFAULT_EXACT_CEILING);
        assert!((c2 - (-2f64).exp() / 2.0).abs() < 1e-16);
        assert_eq!(g2, ExactScalar::Exact(ratio(1, 2)));
        let d = 10_000;
        let (c, _) = c_coeff(d, DEFAULT_EXACT_CEILING);
        let scaled = c * (2.0 * std::f64::consts::PI * d as f64).sqrt();
        assert!((scaled - 1.0).abs() < 0.02, "{scaled}");
        assert!((c_f64(2) - c2).abs() < 1e-15 * c2);
    }

    #[test]
    fn scaled_gamma_matches_rational() {
        for d in 1..=40 {
            let mut fact = BigUint::one();
            for k in 2..=d {
                fact *= k;
            }
            let scaled = rational_from_biguints(gamma_scaled(d), fact);
            assert_eq!(scaled, gamma_exact(d), "d = {d}");
        }
    }

    #[test]
    fn float_and_exact_kappa_agree() {
        let table = RenyiTable::build(400, 400);
        for row in &table.rows {
            let exact = row.kappa.to_f64();
            let float = kappa_f64(row.d);
            assert!((exact - float).abs() <= 1e-12 * exact, "d = {}", row.d);
            assert!(row.c >= 0.0);
            assert!(row.q > 0.0 && row.q < 1.0);
            assert!(exact >= 1.0 && exact <= row.d as f64);
        }
        for d in [1000usize, 1500, 2000] {
            let exact = rational_to_f64(&kappa_exact(d));
            assert!((exact - kappa_f64(d)).abs() <= 1e-12 * exact, "d = {d}");
        }
    }

    #[test]
    fn asymptotic_route_is_continuous() {
        // direct sums against the expansion where both are valid
        for d in [1000usize, 2000, 2999, 3000] {
            let direct = direct_sums(d).0;
            let asym = ramanujan_asymptotic(d as f64);
            assert!(
                (direct - asym).abs() < 1e-12 * direct,
                "d = {d}: {direct} vs {asym}"
            );
        }
        let (r, k) = direct_sums(2500);
        assert!((k - 2500.0).abs() < 1e-9);
        assert!(r > 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        RenyiTable::build(3, 2).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "d,U_d,kappa_num,kappa_den,Q_d,c_d");
        assert!(lines[2].starts_with("2,3,4,3,"));
        assert!(lines[3].starts_with("3,,"));
    }
}
