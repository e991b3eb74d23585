//! Special functions: log-gamma, digamma, trigamma, the normal CDF and
//! the chi-square upper tail.

use num_traits::{Float, FromPrimitive};

use crate::{Error, Result};

/// Shift threshold for the asymptotic expansions below.
const ASYMPTOTIC_FROM: f64 = 10.0;

/// B_{2k} / (2k (2k-1)) for k = 1..8: Stirling series for ln Gamma.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// B_{2k} / (2k) for k = 1..8: asymptotic series for digamma.
const DIGAMMA_ASYMP: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// B_{2k} for k = 1..8: asymptotic series for trigamma.
const TRIGAMMA_ASYMP: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn c<F: FromPrimitive>(x: f64) -> F {
    F::from_f64(x).expect("constant representable")
}

/// Odd power series `sum_k coeffs[k] * inv^(2k+1)` with `inv = 1/x`.
fn odd_series<F: Float + FromPrimitive>(coeffs: &[f64], x: F) -> F {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut term = inv;
    let mut acc = F::zero();
    for &k in coeffs {
        acc = acc + c::<F>(k) * term;
        term = term * inv2;
    }
    acc
}

/// Stirling remainder `ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2]`,
/// valid for `x >= 10`.
pub fn stirling_correction<F: Float + FromPrimitive>(x: F) -> F {
    odd_series(&STIRLING, x)
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma<F: Float + FromPrimitive>(x: F) -> F {
    assert!(x > F::zero(), "ln_gamma needs a positive argument");
    let threshold = c::<F>(ASYMPTOTIC_FROM);
    let mut shift = F::zero();
    let mut y = x;
    while y < threshold {
        shift = shift + y.ln();
        y = y + F::one();
    }
    let half = c::<F>(0.5);
    let half_ln_2pi = c::<F>(0.918_938_533_204_672_8);
    (y - half) * y.ln() - y + half_ln_2pi + stirling_correction(y) - shift
}

/// `ln(d^d e^{-d} / d!)`, the log of the Poisson(d) mass at its mode,
/// without cancellation between the large terms.
pub fn ln_poisson_mode<F: Float + FromPrimitive>(d: F) -> F {
    let tau = c::<F>(std::f64::consts::TAU);
    if d >= c::<F>(ASYMPTOTIC_FROM) {
        -(tau * d).ln() * c::<F>(0.5) - stirling_correction(d + F::one()) + tail_log(d)
    } else {
        d * d.ln() - d - ln_gamma(d + F::one())
    }
}

// ln Gamma(d+1) = (d+1/2) ln(d+1) - (d+1) + ln(2pi)/2 + corr(d+1); the pieces
// that differ from the closed form at d are collected here.
fn tail_log<F: Float + FromPrimitive>(d: F) -> F {
    let half = c::<F>(0.5);
    // d ln d - d - [(d + 1/2) ln(d+1) - d - 1 + ln(2 pi)/2] + ln(2 pi d)/2
    //   = 1 - (d + 1/2) ln(1 + 1/d)
    F::one() - (d + half) * d.recip().ln_1p()
}

fn check_positive<F: Float>(y: F) -> Result<()> {
    if y > F::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "digamma needs y > 0, got {}",
            y.to_f64().unwrap_or(f64::NAN)
        )))
    }
}

/// Digamma `Psi(y)` (`order = 0`) or trigamma `Psi'(y)` (`order = 1`).
pub fn digamma_order<F: Float + FromPrimitive>(y: F, order: u8) -> Result<F> {
    match order {
        0 => digamma(y),
        1 => trigamma(y),
        _ => Err(Error::Domain(format!(
            "digamma order {order} not supported"
        ))),
    }
}

pub fn digamma<F: Float + FromPrimitive>(y: F) -> Result<F> {
    check_positive(y)?;
    let threshold = c::<F>(ASYMPTOTIC_FROM);
    let mut acc = F::zero();
    let mut x = y;
    while x < threshold {
        acc = acc - x.recip();
        x = x + F::one();
    }
    let inv = x.recip();
    // odd_series gives sum B_2k/(2k) x^{-(2k-1)}; one more factor 1/x
    Ok(acc + x.ln() - c::<F>(0.5) * inv - odd_series(&DIGAMMA_ASYMP, x) * inv)
}

pub fn trigamma<F: Float + FromPrimitive>(y: F) -> Result<F> {
    check_positive(y)?;
    let threshold = c::<F>(ASYMPTOTIC_FROM);
    let mut acc = F::zero();
    let mut x = y;
    while x < threshold {
        acc = acc + (x * x).recip();
        x = x + F::one();
    }
    let inv = x.recip();
    let half = c::<F>(0.5);
    // 1/x + 1/(2x^2) + sum B_2k / x^{2k+1}
    Ok(acc + inv + half * inv * inv + odd_series(&TRIGAMMA_ASYMP, x) * inv * inv)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `P(X > stat)` of a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(dof as f64 / 2.0, stat / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn ln_gamma_small_and_large() {
        assert!((ln_gamma(1.0_f64)).abs() < 1e-14);
        assert!((ln_gamma(0.5_f64) - PI.sqrt().ln()).abs() < 1e-14);
        // ln 20! = ln 2432902008176640000
        assert!((ln_gamma(21.0_f64) - 2_432_902_008_176_640_000f64.ln()).abs() < 1e-12);
        let f32_val = ln_gamma(5.0_f32);
        assert!((f32_val - 24f32.ln()).abs() < 1e-5);
    }

    #[test]
    fn poisson_mode_matches_direct_form() {
        for d in [1.0_f64, 2.0, 5.0, 9.0, 10.0, 11.0, 40.0, 150.0] {
            let direct = d * d.ln() - d - ln_gamma(d + 1.0);
            assert!((ln_poisson_mode(d) - direct).abs() < 1e-12, "d = {d}");
        }
        // large d: leading behaviour -ln(2 pi d)/2 - 1/(12 d)
        let d = 1e8_f64;
        let approx = -(2.0 * PI * d).ln() / 2.0 - 1.0 / (12.0 * d);
        assert!((ln_poisson_mode(d) - approx).abs() < 1e-15);
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0_f64).unwrap() + EULER_GAMMA).abs() < 1e-13);
        let diff = digamma(2.0_f64).unwrap() - digamma(1.0).unwrap();
        assert!((diff - 1.0).abs() < 1e-12);
        let y = 1e6_f64;
        assert!((digamma(y).unwrap() - y.ln()).abs() < 1e-6);
        assert!(digamma(0.0_f64).is_err());
        assert!(digamma(-1.5_f64).is_err());
    }

    #[test]
    fn trigamma_at_one_is_zeta_two() {
        // independent route: partial sum of 1/(1+k)^2 plus integral tail
        let k_max = 200_000usize;
        let partial: f64 = (0..k_max)
            .map(|k| 1.0 / ((1 + k) as f64).powi(2))
            .rev()
            .sum();
        let tail = 1.0 / (k_max as f64 + 0.5);
        let oracle = partial + tail;
        let value = trigamma(1.0_f64).unwrap();
        assert!((value - oracle).abs() < 1e-10);
        assert!((value - PI * PI / 6.0).abs() < 1e-12);
        assert!((digamma_order(0.5_f64, 1).unwrap() - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for x in [0.5, 1.0, 2.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-10);
    }

    #[test]
    fn chi_square_tail() {
        // 2 dof: survival function is exp(-x/2)
        assert!((chi_square_sf(3.0, 2) - (-1.5_f64).exp()).abs() < 1e-14);
        assert_eq!(chi_square_sf(0.0, 4), 1.0);
    }
}
