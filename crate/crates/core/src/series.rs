//! Power-series machinery for `E_n(B)`.
//!
//! With `c_d` from [`crate::renyi`], the expected cycle-length product is a
//! convolution of the coefficients of `exp(sum_d c_d z^d)` with
//! `h_m = m^m / (m! e^m)`. Because `c_d = gamma_d e^{-d}` with rational
//! `gamma_d`, every factor of `e` cancels and `n^n E_n(B)` is an integer;
//! the exact mode computes it on big integers.
//!
//! The same coefficients, with an extra `1/(1-z)` factor, give `mu(m)`,
//! whose growth is studied through `g(s) = sum_d c_d e^{-ds}`: the Rankin
//! bound `mu(n) <= exp(ns + g(s))` and the saddle point `s*` of
//! `ns + g(s)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::renyi::{c_f64, gamma_scaled};
use crate::scalar::{ln_biguint, rational_from_biguints};
use crate::special::ln_poisson_mode;
use crate::{Coefficient, Error, ExactScalar, Rational, Real, Result};

/// Default largest degree for exact tables.
pub const DEFAULT_EXACT_CEILING: usize = 500;

/// `g` is summed to at least `ceil(TRUNCATION_SCALE / s)` terms.
pub const TRUNCATION_SCALE: f64 = 40.0;

/// Relative accuracy certified for every `g` evaluation.
pub const TAIL_TOLERANCE: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Domain(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

/// Coefficients `e_0..e_N` of `exp(sum_{d=1}^N c_d z^d)`, with
/// `inner[d - 1] = c_d`, via `m e_m = sum_{d=1}^m d c_d e_{m-d}`.
pub fn exp_series<S: Coefficient>(inner: &[S]) -> Result<Vec<S>> {
    for (i, c) in inner.iter().enumerate() {
        // rejects negatives and NaN
        if !matches!(
            c.partial_cmp(&S::zero()),
            Some(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal)
        ) {
            return Err(Error::InvalidSeries {
                index: i + 1,
                value: format!("{c:?}"),
            });
        }
    }
    let weighted: Vec<S> = inner
        .iter()
        .enumerate()
        .map(|(i, c)| S::from_usize(i + 1).expect("degree representable") * c.clone())
        .collect();
    let mut e = Vec::with_capacity(inner.len() + 1);
    e.push(S::one());
    for m in 1..=inner.len() {
        let mut acc = S::zero();
        for d in 1..=m {
            acc = acc + weighted[d - 1].clone() * e[m - d].clone();
        }
        e.push(acc / S::from_usize(m).expect("degree representable"));
    }
    Ok(e)
}

/// Integer form of [`exp_series`] for exponential generating functions.
///
/// With `scaled[d - 1] = d! c_d` the result holds `m! e_m`, computed as
/// `R_m = sum_d C(m-1, d-1) scaled_d R_{m-d}` without any division.
pub fn exp_series_egf(scaled: &[BigUint]) -> Vec<BigUint> {
    let mut out: Vec<BigUint> = Vec::with_capacity(scaled.len() + 1);
    out.push(BigUint::one());
    for m in 1..=scaled.len() {
        let mut binom = BigUint::one(); // C(m-1, d-1)
        let mut acc = BigUint::zero();
        for d in 1..=m {
            if !scaled[d - 1].is_zero() {
                acc += &binom * &scaled[d - 1] * &out[m - d];
            }
            binom = binom * (m - d) / d;
        }
        out.push(acc);
    }
    out
}

/// `h_m = m^m / (m! e^m)`, `h_0 = 1`.
pub fn h_coeff(m: usize) -> Real {
    if m == 0 {
        1.0
    } else {
        ln_poisson_mode(m as f64).exp()
    }
}

fn ln_h(m: usize) -> Real {
    if m == 0 {
        0.0
    } else {
        ln_poisson_mode(m as f64)
    }
}

/// `ln sum_i exp(x_i)`, skipping `-inf` entries.
fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Coefficient table of `exp(sum c_d z^d)` and `mu`.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub degree: usize,
    pub mode: Mode,
    /// `[z^m] exp(sum c_d z^d)`; these are also the increments `mu(m) - mu(m-1)`.
    pub e_coeffs: Vec<Real>,
    /// `mu(m) = [z^m] exp(sum c_d z^d) / (1 - z)`.
    pub mu: Vec<Real>,
    pub h: Vec<Real>,
    ln_e: Vec<Real>,
    /// Exact mode: `m! r_m` where `e_coeff_m = r_m e^{-m}`.
    scaled: Option<Vec<BigUint>>,
}

impl SeriesTable {
    pub fn build(degree: usize, mode: Mode) -> Result<Self> {
        Self::build_with_ceiling(degree, mode, DEFAULT_EXACT_CEILING)
    }

    pub fn build_with_ceiling(degree: usize, mode: Mode, exact_ceiling: usize) -> Result<Self> {
        let (ln_e, scaled) = match mode {
            Mode::Exact => {
                if degree > exact_ceiling {
                    return Err(Error::ExactModeTooLarge {
                        n: degree,
                        ceiling: exact_ceiling,
                    });
                }
                let gammas: Vec<BigUint> = (1..=degree).into_par_iter().map(gamma_scaled).collect();
                let scaled = exp_series_egf(&gammas);
                let mut ln_fact = 0.0;
                let ln_e = scaled
                    .iter()
                    .enumerate()
                    .map(|(m, r)| {
                        if m > 0 {
                            ln_fact += (m as f64).ln();
                        }
                        ln_biguint(r) - ln_fact - m as f64
                    })
                    .collect::<Vec<_>>();
                (ln_e, Some(scaled))
            }
            Mode::Float => {
                let c: Vec<Real> = (1..=degree).into_par_iter().map(c_f64).collect();
                let e = exp_series(&c)?;
                (e.iter().map(|x| x.ln()).collect(), None)
            }
        };
        let e_coeffs: Vec<Real> = ln_e.iter().map(|x| x.exp()).collect();
        let mut running = 0.0;
        let mu = e_coeffs
            .iter()
            .map(|x| {
                running += x;
                running
            })
            .collect();
        let h = (0..=degree).map(h_coeff).collect();
        Ok(SeriesTable {
            degree,
            mode,
            e_coeffs,
            mu,
            h,
            ln_e,
            scaled,
        })
    }

    /// `r_m = e^m [z^m] exp(sum c_d z^d)` as an exact rational (exact mode).
    pub fn r_exact(&self, m: usize) -> Option<Rational> {
        let scaled = self.scaled.as_ref()?;
        let mut fact = BigUint::one();
        for k in 2..=m {
            fact *= k;
        }
        Some(rational_from_biguints(scaled.get(m)?.clone(), fact))
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.degree {
            Err(Error::DegreeTooSmall {
                degree: self.degree,
                n,
            })
        } else {
            Ok(())
        }
    }

    /// `E_n(B)`: exact rational in exact mode, float otherwise.
    pub fn expected_b(&self, n: usize) -> Result<ExactScalar> {
        if n == 0 {
            return Err(Error::Domain("expected_B needs n >= 1".into()));
        }
        self.check_index(n)?;
        match &self.scaled {
            Some(scaled) => {
                // n^n E_n(B) = sum_m C(n, m) R_m (n-m)^{n-m}
                let mut binom = BigUint::one();
                let mut total = BigUint::zero();
                for (m, r) in scaled.iter().enumerate().take(n + 1) {
                    let k = n - m;
                    let power = if k == 0 {
                        BigUint::one()
                    } else {
                        BigUint::from(k).pow(k)
                    };
                    total += &binom * r * power;
                    binom = binom * (n - m) / (m + 1);
                }
                let denom = BigUint::from(n).pow(n);
                Ok(ExactScalar::Exact(rational_from_biguints(total, denom)))
            }
            None => Ok(ExactScalar::float(self.log_expected_b(n)?.exp())),
        }
    }

    /// `ln E_n(B) = ln sum_m e_m h_{n-m} - ln h_n`, in log space.
    pub fn log_expected_b(&self, n: usize) -> Result<Real> {
        if n == 0 {
            return Err(Error::Domain("expected_B needs n >= 1".into()));
        }
        self.check_index(n)?;
        let terms = (0..=n).map(|m| self.ln_e[m] + ln_h(n - m));
        Ok(log_sum_exp(terms) - ln_h(n))
    }

    /// The convolution with `mu(m)` in place of the bare coefficients.
    pub fn log_expected_b_paper_variant(&self, n: usize) -> Result<Real> {
        self.check_index(n)?;
        let terms = (0..=n).map(|m| self.mu[m].ln() + ln_h(n - m));
        Ok(log_sum_exp(terms) - ln_h(n))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            m: usize,
            e_coeff: f64,
            mu: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for m in 0..=self.degree {
            w.serialize(Row {
                m,
                e_coeff: self.e_coeffs[m],
                mu: self.mu[m],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `E_n(B)` with a table built just for `n`.
pub fn expected_b(n: usize, mode: Mode) -> Result<ExactScalar> {
    SeriesTable::build(n, mode)?.expected_b(n)
}

/// `g(s)` or one of its derivatives, with a certified truncation bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GValue {
    pub value: Real,
    pub tail_bound: Real,
    pub terms: usize,
}

/// `g^{(j)}(s) = sum_d (-d)^j c_d e^{-ds}` over a fixed coefficient table.
#[derive(Clone, Debug)]
pub struct GSeries {
    c: Vec<Real>,
}

impl GSeries {
    pub fn with_degree(max_d: usize) -> Self {
        GSeries {
            c: (1..=max_d).into_par_iter().map(c_f64).collect(),
        }
    }

    /// Table large enough to evaluate at every `s >= s_min`.
    pub fn for_min_s(s_min: Real) -> Self {
        Self::with_degree(Self::required_degree(s_min))
    }

    /// Terms to budget for evaluations at `s`; includes room for the
    /// adaptive extension used by the third derivative.
    pub fn required_degree(s: Real) -> usize {
        (1.5 * Self::base_truncation(s) as f64) as usize
    }

    pub fn base_truncation(s: Real) -> usize {
        (TRUNCATION_SCALE / s).ceil() as usize + 64
    }

    pub fn degree(&self) -> usize {
        self.c.len()
    }

    fn check_s(s: Real) -> Result<()> {
        if s > 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("g needs s > 0, got {s}")))
        }
    }

    /// Bound on `sum_{d > terms} d^j c_d e^{-ds}` using `c_d < 1/sqrt(2 pi d)`.
    fn tail_bound(terms: usize, s: Real, j: i32) -> Real {
        let d1 = terms as f64 + 1.0;
        let ratio = ((d1 + 1.0) / d1).powi(j) * (-s).exp();
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        let first = d1.powi(j) * (-d1 * s).exp() / (std::f64::consts::TAU * d1).sqrt();
        first / (1.0 - ratio)
    }

    /// All of `g, g', g'', g'''` at `s`.
    pub fn eval_all(&self, s: Real) -> Result<[GValue; 4]> {
        Self::check_s(s)?;
        let mut terms = Self::base_truncation(s).min(self.c.len());
        let mut sums = [0.0f64; 4];
        let mut comp = [0.0f64; 4];
        let mut done = 0usize;
        loop {
            for d in done + 1..=terms {
                let df = d as f64;
                let mut t = self.c[d - 1] * (-df * s).exp();
                for j in 0..4 {
                    // Kahan
                    let y = t - comp[j];
                    let next = sums[j] + y;
                    comp[j] = (next - sums[j]) - y;
                    sums[j] = next;
                    t *= -df;
                }
            }
            done = terms;
            let ok = (0..4)
                .all(|j| Self::tail_bound(terms, s, j as i32) <= TAIL_TOLERANCE * sums[j].abs());
            if ok {
                break;
            }
            if terms == self.c.len() {
                return Err(Error::DegreeTooSmall {
                    degree: self.c.len(),
                    n: terms + 1,
                });
            }
            terms = (terms + terms / 4).min(self.c.len());
        }
        Ok(std::array::from_fn(|j| GValue {
            value: sums[j],
            tail_bound: Self::tail_bound(terms, s, j as i32),
            terms,
        }))
    }

    pub fn eval(&self, s: Real, j: usize) -> Result<GValue> {
        if j > 3 {
            return Err(Error::Domain(format!("derivative order {j} not in 0..=3")));
        }
        Self::check_s(s)?;
        if j == 0 {
            // the value alone needs no derivative headroom
            return self.eval_value(s);
        }
        Ok(self.eval_all(s)?[j])
    }

    fn eval_value(&self, s: Real) -> Result<GValue> {
        let mut terms = Self::base_truncation(s).min(self.c.len());
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut done = 0;
        loop {
            for d in done + 1..=terms {
                let y = self.c[d - 1] * (-(d as f64) * s).exp() - comp;
                let next = sum + y;
                comp = (next - sum) - y;
                sum = next;
            }
            done = terms;
            let tail = Self::tail_bound(terms, s, 0);
            if tail <= TAIL_TOLERANCE * sum {
                return Ok(GValue {
                    value: sum,
                    tail_bound: tail,
                    terms,
                });
            }
            if terms == self.c.len() {
                return Err(Error::DegreeTooSmall {
                    degree: self.c.len(),
                    n: terms + 1,
                });
            }
            terms = (terms + terms / 4).min(self.c.len());
        }
    }
}

/// `g^{(j)}(s)` with a freshly built coefficient table.
pub fn g_eval(s: Real, j: usize) -> Result<Real> {
    GSeries::check_s(s)?;
    Ok(GSeries::for_min_s(s).eval(s, j)?.value)
}

/// `ln` of the Rankin bound `exp(ns + g(s))` on `mu(n)`.
pub fn rankin_log_bound(n: usize, s: Real, g: &GSeries) -> Result<Real> {
    Ok(n as f64 * s + g.eval(s, 0)?.value)
}

/// `exp(ns + g(s))`.
pub fn rankin_bound(n: usize, s: Real, g: &GSeries) -> Result<Real> {
    Ok(rankin_log_bound(n, s, g)?.exp())
}

/// The standard Rankin point `s = 1/(2 n^{2/3})`.
pub fn rankin_point(n: usize) -> Real {
    0.5 / (n.max(1) as f64).powf(2.0 / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankinCheck {
    pub n: usize,
    pub s: Real,
    pub log_mu: Real,
    pub log_bound: Real,
    pub holds: bool,
}

/// Compares `mu(n)` from `table` with the Rankin bound at `s`.
pub fn rankin_check(table: &SeriesTable, g: &GSeries, n: usize, s: Real) -> Result<RankinCheck> {
    table.check_index(n)?;
    let log_mu = table.mu[n].ln();
    let log_bound = rankin_log_bound(n, s, g)?;
    Ok(RankinCheck {
        n,
        s,
        log_mu,
        log_bound,
        holds: log_mu <= log_bound,
    })
}

/// [`rankin_check`] at the standard point [`rankin_point`] for every `n` in `ns`.
pub fn rankin_sweep(table: &SeriesTable, ns: &[usize]) -> Result<Vec<RankinCheck>> {
    let s_min = ns
        .iter()
        .map(|&n| rankin_point(n))
        .fold(f64::INFINITY, f64::min);
    if !s_min.is_finite() {
        return Ok(Vec::new());
    }
    let g = GSeries::for_min_s(s_min);
    ns.par_iter()
        .map(|&n| rankin_check(table, &g, n, rankin_point(n)))
        .collect()
}

/// Saddle point of `ns + g(s)` and the quantities entering the coefficient
/// lower bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleReport {
    pub n: usize,
    pub s_star: Real,
    /// `g, g', g'', g'''` at `s_star`.
    pub g: [Real; 4],
    /// `g''(s_star)`.
    pub a_n: Real,
    pub rankin_log: Real,
    pub odlyzko_ok: bool,
    /// `s_star * 2 n^{2/3}`.
    pub s_ratio: Real,
    /// `A_n / (3 n^{5/3})`.
    pub a_ratio: Real,
    /// `|g'''(s_star)| / (15 n^{7/3})`.
    pub g3_ratio: Real,
    /// `n s* + g(s*) - 30 s* sqrt(A_n) - 100`; diagnostic only.
    pub lower_log_diagnostic: Real,
}

/// Locates `s*` with `g'(s*) = -n` by bisection on `ln s`.
pub fn saddle_point(n: usize) -> Result<SaddleReport> {
    if n == 0 {
        return Err(Error::Domain("saddle_point needs n >= 1".into()));
    }
    let guess = rankin_point(n);
    let lo_limit = (guess / 16.0).max(1e-12);
    let g = GSeries::for_min_s(lo_limit);
    saddle_point_with(n, &g, lo_limit)
}

/// As [`saddle_point`] over an existing table, searching down to `s_floor`.
pub fn saddle_point_with(n: usize, g: &GSeries, s_floor: Real) -> Result<SaddleReport> {
    let target = n as f64;
    let slope = |s: Real| -> Result<Real> { Ok(g.eval(s, 1)?.value + target) };
    let guess = rankin_point(n);
    let mut lo = guess / 2.0;
    while slope(lo).map_err(|_| Error::SaddleBracket(n))? >= 0.0 {
        lo /= 2.0;
        if lo < s_floor {
            return Err(Error::SaddleBracket(n));
        }
    }
    let mut hi = guess * 2.0;
    while slope(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::SaddleBracket(n));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi || hi / lo - 1.0 < 1e-15 {
            break;
        }
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_star = (lo * hi).sqrt();
    let vals = g.eval_all(s_star)?;
    let gv = [vals[0].value, vals[1].value, vals[2].value, vals[3].value];
    let a_n = gv[2];
    let nf = n as f64;
    Ok(SaddleReport {
        n,
        s_star,
        g: gv,
        a_n,
        rankin_log: nf * s_star + gv[0],
        odlyzko_ok: gv[3].abs() <= a_n.powf(1.5),
        s_ratio: s_star * 2.0 * nf.powf(2.0 / 3.0),
        a_ratio: a_n / (3.0 * nf.powf(5.0 / 3.0)),
        g3_ratio: gv[3].abs() / (15.0 * nf.powf(7.0 / 3.0)),
        lower_log_diagnostic: nf * s_star + gv[0] - 30.0 * s_star * a_n.sqrt() - 100.0,
    })
}

/// One row of the `(n, log_E_B, rankin_log_bound, s_star, A_n)` report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReportRow {
    pub n: usize,
    #[serde(rename = "log_E_B")]
    pub log_expected_b: Real,
    pub rankin_log_bound: Real,
    pub s_star: Real,
    #[serde(rename = "A_n")]
    pub a_n: Real,
    #[serde(
        rename = "log_E_B_paper_variant",
        skip_serializing_if = "Option::is_none"
    )]
    pub paper_variant: Option<Real>,
}

pub fn report_row(table: &SeriesTable, n: usize, paper_variant: bool) -> Result<SeriesReportRow> {
    let saddle = saddle_point(n)?;
    Ok(SeriesReportRow {
        n,
        log_expected_b: table.log_expected_b(n)?,
        rankin_log_bound: saddle.rankin_log,
        s_star: saddle.s_star,
        a_n: saddle.a_n,
        paper_variant: if paper_variant {
            Some(table.log_expected_b_paper_variant(n)?)
        } else {
            None
        },
    })
}

pub fn write_report_csv<W: std::io::Write>(rows: &[SeriesReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn exp_of_zero_and_of_z() {
        let e = exp_series(&[0.0f64; 5]).unwrap();
        assert_eq!(e, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut inner = vec![q(0, 1); 6];
        inner[0] = q(1, 1);
        let e = exp_series(&inner).unwrap();
        let mut fact = 1i64;
        for (m, coeff) in e.iter().enumerate() {
            if m > 0 {
                fact *= m as i64;
            }
            assert_eq!(coeff, &q(1, fact));
        }
        assert!(matches!(
            exp_series(&[1.0f64, -0.5]),
            Err(Error::InvalidSeries { index: 2, .. })
        ));
        assert!(exp_series(&[f64::NAN]).is_err());
    }

    #[test]
    fn exp_of_z_over_one_minus_z() {
        let e = exp_series(&vec![q(1, 1); 4]).unwrap();
        assert_eq!(e, vec![q(1, 1), q(1, 1), q(3, 2), q(13, 6), q(73, 24)]);
        let e32 = exp_series(&[1.0f32; 4]).unwrap();
        assert!((e32[4] - 73.0 / 24.0).abs() < 1e-6);
        // integer route: d! c_d = d!
        let scaled: Vec<BigUint> = (1..=4u32)
            .map(|d| (1..=d).map(BigUint::from).product())
            .collect();
        let r = exp_series_egf(&scaled);
        assert_eq!(r, [1u32, 1, 3, 13, 73].map(BigUint::from).to_vec());
    }

    #[test]
    fn mu_examples() {
        let t = SeriesTable::build(4, Mode::Float).unwrap();
        assert_eq!(t.mu[0], 1.0);
        assert!((t.mu[1] - 1.0).abs() < 1e-15);
        assert!((t.mu[2] - (1.0 + (-2f64).exp() / 2.0)).abs() < 1e-15);
        let exact = SeriesTable::build(4, Mode::Exact).unwrap();
        assert_eq!(exact.r_exact(2), Some(q(1, 2)));
        for m in 0..=4 {
            assert!((exact.mu[m] - t.mu[m]).abs() < 1e-14);
        }
    }

    #[test]
    fn expected_b_small_n() {
        assert_eq!(
            expected_b(1, Mode::Exact).unwrap(),
            ExactScalar::Exact(q(1, 1))
        );
        assert_eq!(
            expected_b(2, Mode::Exact).unwrap(),
            ExactScalar::Exact(q(5, 4))
        );
        assert_eq!(
            expected_b(4, Mode::Exact).unwrap(),
            ExactScalar::Exact(q(437, 256))
        );
        let f = expected_b(2, Mode::Float).unwrap();
        assert!((f.to_f64() - 1.25).abs() < 1e-14);
        assert!(matches!(
            SeriesTable::build_with_ceiling(10, Mode::Exact, 5),
            Err(Error::ExactModeTooLarge { .. })
        ));
    }

    #[test]
    fn paper_variant_disagrees_at_n_one() {
        let t = SeriesTable::build(3, Mode::Float).unwrap();
        let literal = t.log_expected_b_paper_variant(1).unwrap().exp();
        assert!(
            (literal - (1.0 + std::f64::consts::E)).abs() < 1e-12,
            "{literal}"
        );
        assert!((t.log_expected_b(1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn float_mode_tracks_exact_mode() {
        let exact = SeriesTable::build(30, Mode::Exact).unwrap();
        let float = SeriesTable::build(30, Mode::Float).unwrap();
        for n in 1..=30 {
            let a = exact.expected_b(n).unwrap();
            let b = float.expected_b(n).unwrap();
            assert!(a.approx_eq(&b, 1e-9), "n = {n}: {a} vs {b}");
        }
    }

    #[test]
    fn table_invariants() {
        let t = SeriesTable::build(2000, Mode::Float).unwrap();
        assert!(t.e_coeffs.iter().all(|&x| x >= 0.0));
        assert!(t.mu.windows(2).all(|w| w[1] >= w[0]));
        for m in 1..=2000 {
            let mf = m as f64;
            let lo = 1.0 / (8.0 * std::f64::consts::PI * mf).sqrt();
            let hi = 1.0 / (2.0 * std::f64::consts::PI * mf).sqrt();
            assert!(t.h[m] > lo && t.h[m] < hi, "m = {m}");
        }
    }

    #[test]
    fn g_signs_and_leading_term() {
        // g(s) sqrt(2s) -> 1, but c_d = 1/sqrt(2 pi d) - 1/(2d) + ... adds
        // -ln(1/s)/2 to g, so the gap closes only like sqrt(s) ln(1/s)
        let mut gaps = Vec::new();
        for s in [1e-3, 1e-4, 1e-5] {
            let g = GSeries::for_min_s(s);
            let value = g.eval(s, 0).unwrap().value;
            let predicted = 1.0 / (2.0 * s).sqrt() - 0.5 * (1.0 / s).ln();
            assert!(
                (value - predicted).abs() < 1.0,
                "s = {s}: {value} vs {predicted}"
            );
            gaps.push((value * (2.0 * s).sqrt() - 1.0).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[2] < 0.05, "{gaps:?}");
        let s = 1e-4;
        let g = GSeries::for_min_s(s);
        let vals = g.eval_all(s).unwrap();
        for s in [1e-3, 0.01, 0.3, 2.0, 50.0] {
            assert!(g.eval(s, 1).unwrap().value < 0.0);
            assert!(g.eval(s, 2).unwrap().value > 0.0);
            assert!(g.eval(s, 3).unwrap().value < 0.0);
        }
        for v in vals {
            assert!(v.tail_bound <= TAIL_TOLERANCE * v.value.abs());
        }
        assert!(matches!(g_eval(0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(g_eval(-1.0, 1), Err(Error::Domain(_))));
        assert!(g.eval(1e-9, 0).is_err());
    }

    #[test]
    fn g_derivatives_match_finite_differences() {
        let g = GSeries::for_min_s(0.005);
        let s = 0.01;
        let h = 1e-6;
        for j in 0..3 {
            let up = g.eval(s + h, j).unwrap().value;
            let down = g.eval(s - h, j).unwrap().value;
            let fd = (up - down) / (2.0 * h);
            let exact = g.eval(s, j + 1).unwrap().value;
            assert!(
                (fd - exact).abs() < 1e-6 * exact.abs(),
                "j = {j}: {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn rankin_small_examples() {
        let g = GSeries::for_min_s(0.05);
        assert!(rankin_bound(0, 0.3, &g).unwrap() >= 1.0);
        let n = 1000;
        let s = rankin_point(n);
        let g = GSeries::for_min_s(s);
        let log_bound = rankin_log_bound(n, s, &g).unwrap();
        let leading = 1.5 * (n as f64).cbrt();
        assert!(
            (log_bound - leading).abs() < 3.0,
            "{log_bound} vs {leading}"
        );
        let table = SeriesTable::build(n, Mode::Float).unwrap();
        for m in [0usize, 1, 2, 10, 100, 1000] {
            let s = rankin_point(m);
            assert!(rankin_check(&table, &g, m, s.max(0.05)).unwrap().holds);
        }
    }

    #[test]
    fn saddle_point_small_n() {
        for n in [1usize, 10, 1000] {
            let r = saddle_point(n).unwrap();
            let g = GSeries::for_min_s(r.s_star / 2.0);
            let slope = g.eval(r.s_star, 1).unwrap().value;
            assert!((slope + n as f64).abs() < 1e-9 * n as f64, "n = {n}");
            assert!(r.a_n > 0.0 && r.g[3] < 0.0);
        }
    }
}
