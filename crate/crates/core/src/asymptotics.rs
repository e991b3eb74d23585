//! Asymptotics of the expected period: the constants `I`, `beta0`, `k0`,
//! `a0`; Stong's approximation of `log M_m`; the maximizer of
//! `G(x) = log[n! / ((n-x)! n^{x-1})] + beta_eps sqrt(x / log x)`; and the
//! central-limit normalization of `log T`.

use std::io::Write;
use std::sync::OnceLock;

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::exact::z_pmf_f64;
use crate::quadrature::integrate;
use crate::special::{digamma, ln_gamma, trigamma};
use crate::{Error, Real, Result};

/// Tolerance of the cached [`constants`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Half-width of the maximizer bracket around `m*`.
pub const BRACKET_DELTA: f64 = 0.25;

/// `eps` used for the upper estimate in [`en_t_estimate`].
pub const UPPER_EPS: f64 = 1e-3;

const MAX_PANELS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constants<F = Real> {
    #[serde(rename = "I")]
    pub i: F,
    pub beta0: F,
    pub k0: F,
    pub a0: F,
    pub quadrature_error: F,
}

/// `log log(e / (1 - e^{-t}))`.
pub fn integrand<F: Float>(t: F) -> F {
    // x = -log(1 - e^{-t}), accurate at both ends
    let x = if t < F::one() {
        -(-(-t).exp_m1()).ln()
    } else {
        -(-(-t).exp()).ln_1p()
    };
    x.ln_1p()
}

/// Computes `I = int_0^inf log log(e / (1 - e^{-t})) dt` and the constants
/// derived from it, with absolute error at most `tolerance` on `I`.
pub fn compute_constants_in<F: Float + FromPrimitive>(tolerance: F) -> Result<Constants<F>> {
    let tol = tolerance.to_f64().unwrap_or(f64::NAN);
    if !(tol > 1e-12 && tol < 1e-3) {
        return Err(Error::Tolerance(tol));
    }
    let k = |x: f64| F::from_f64(x).expect("constant representable");
    let budget = tolerance * k(0.1);

    // (0, 1] with t = e^{-u}; for u >= 1 the integrand is below ln(2 + u),
    // so the tail past U is at most (2 + U) e^{-U}
    let mut u_max = k(10.0);
    while (k(2.0) + u_max) * (-u_max).exp() >= budget {
        u_max = u_max + k(1.0);
    }
    let near = integrate(
        |u: F| integrand((-u).exp()) * (-u).exp(),
        F::zero(),
        u_max,
        tolerance * k(0.4),
        MAX_PANELS,
    );

    // [1, inf): the integrand is below 2 e^{-t}
    let mut t_max = k(10.0);
    while k(2.0) * (-t_max).exp() >= budget {
        t_max = t_max + k(1.0);
    }
    let far = integrate(integrand, F::one(), t_max, tolerance * k(0.4), MAX_PANELS);

    let tails = (k(2.0) + u_max) * (-u_max).exp() + k(2.0) * (-t_max).exp();
    let quadrature_error = near.error + far.error + tails;
    if quadrature_error > tolerance {
        return Err(Error::Invariant(format!(
            "quadrature error {} exceeds the tolerance",
            quadrature_error.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let i = near.value + far.value;
    let a0 = (k(3.0) * i).cbrt();
    Ok(Constants {
        i,
        beta0: (k(8.0) * i).sqrt(),
        k0: k(1.5) * a0 * a0,
        a0,
        quadrature_error,
    })
}

pub fn compute_constants(tolerance: f64) -> Result<Constants> {
    compute_constants_in(tolerance)
}

/// Constants at [`DEFAULT_TOLERANCE`], computed once.
pub fn constants() -> &'static Constants {
    static CACHE: OnceLock<Constants> = OnceLock::new();
    CACHE.get_or_init(|| compute_constants(DEFAULT_TOLERANCE).expect("default tolerance is valid"))
}

impl Constants {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `beta0 sqrt(m / log m)`, Stong's leading term for `log M_m`.
pub fn stong_log_m(m: usize) -> Result<Real> {
    if m < 3 {
        return Err(Error::Domain(format!("stong_logM needs m >= 3, got {m}")));
    }
    let m = m as f64;
    Ok(constants().beta0 * (m / m.ln()).sqrt())
}

/// Center and scale of the central limit law of `log T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarrisParams {
    /// `log^2 n / 8`.
    pub clt_center: Real,
    /// `log^{3/2} n / sqrt(24)`.
    pub clt_scale: Real,
}

impl HarrisParams {
    pub fn standardize(&self, log_t: Real) -> Real {
        (log_t - self.clt_center) / self.clt_scale
    }
}

pub fn harris_params(n: usize) -> Result<HarrisParams> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "harris_params needs n >= 2, got {n}"
        )));
    }
    let l = (n as f64).ln();
    Ok(HarrisParams {
        clt_center: l * l / 8.0,
        clt_scale: l.powf(1.5) / 24f64.sqrt(),
    })
}

pub use crate::special::normal_cdf;

/// `beta^{2/3} (3/8)^{1/3}`: the maximizer scale.
fn m_scale(beta: Real) -> Real {
    beta.powf(2.0 / 3.0) * (3.0f64 / 8.0).cbrt()
}

/// Leading coefficient of `G(x*)` in units of `n^{1/3} / log^{2/3} n`.
pub fn k_of_beta(beta: Real) -> Real {
    let c = m_scale(beta);
    -c * c / 2.0 + beta * (c / (2.0 / 3.0)).sqrt()
}

/// `G_{n,eps}` and its derivatives.
#[derive(Clone, Copy, Debug)]
pub struct GFunction {
    pub n: usize,
    pub beta: Real,
    ln_n: Real,
    ln_nfact: Real,
}

impl GFunction {
    pub fn new(n: usize, eps: Real) -> Self {
        let nf = n as f64;
        GFunction {
            n,
            beta: constants().beta0 + eps,
            ln_n: nf.ln(),
            ln_nfact: ln_gamma(nf + 1.0),
        }
    }

    pub fn value(&self, x: Real) -> Real {
        let y = self.n as f64 + 1.0 - x;
        self.ln_nfact - ln_gamma(y) - (x - 1.0) * self.ln_n + self.beta * (x / x.ln()).sqrt()
    }

    pub fn first(&self, x: Real) -> Real {
        let y = self.n as f64 + 1.0 - x;
        let l = x.ln();
        digamma(y).expect("y > 0 on [6, n]") - self.ln_n
            + self.beta / (2.0 * (x * l).sqrt()) * (1.0 - 1.0 / l)
    }

    pub fn second(&self, x: Real) -> Real {
        let y = self.n as f64 + 1.0 - x;
        let l = x.ln();
        -trigamma(y).expect("y > 0 on [6, n]")
            + self.beta / 4.0 * (3.0 - l * l) / (x.powf(1.5) * l.powf(2.5))
    }
}

/// Maximizer of `G_{n,eps}` and the bracket around it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GProfile {
    pub n: usize,
    pub eps: Real,
    pub beta_eps: Real,
    pub x_star: Real,
    #[serde(rename = "G_at_x_star")]
    pub g_at_x_star: Real,
    pub m_star: Real,
    pub k_eps: Real,
    /// `G'` at `(1 - delta) m*` and `(1 + delta) m*`.
    pub g_prime_low: Real,
    pub g_prime_high: Real,
    pub bracket_ok: bool,
    /// `G'' < 0` at every sampled point of `[6, n]`.
    pub concave: bool,
}

pub fn g_profile(n: usize, eps: Real) -> Result<GProfile> {
    if n < 100 {
        return Err(Error::Domain(format!("g_profile needs n >= 100, got {n}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    let g = GFunction::new(n, eps);
    let (mut lo, mut hi) = (6.0, n as f64 - 1.0);
    if !(g.first(lo) > 0.0 && g.first(hi) < 0.0) {
        return Err(Error::MaximizerBracket { n, eps });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g.first(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_star = 0.5 * (lo + hi);
    let nf = n as f64;
    let m_star = m_scale(g.beta) * nf.powf(2.0 / 3.0) / nf.ln().cbrt();
    let g_prime_low = g.first((1.0 - BRACKET_DELTA) * m_star);
    let g_prime_high = if (1.0 + BRACKET_DELTA) * m_star < nf {
        g.first((1.0 + BRACKET_DELTA) * m_star)
    } else {
        f64::NAN
    };
    let samples = 64;
    let concave = (0..=samples).all(|i| {
        let x = 6.0 + (nf - 6.0) * i as f64 / samples as f64;
        g.second(x) < 0.0
    }) && [10.0, nf / 2.0, nf - 10.0]
        .iter()
        .all(|&x| g.second(x) < 0.0);
    Ok(GProfile {
        n,
        eps,
        beta_eps: g.beta,
        x_star,
        g_at_x_star: g.value(x_star),
        m_star,
        k_eps: k_of_beta(g.beta),
        g_prime_low,
        g_prime_high,
        bracket_ok: g_prime_low > 0.0 && g_prime_high < 0.0,
        concave,
    })
}

/// Bounds on `log E_n(T)` and the leading asymptotic term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnTEstimate {
    pub n: usize,
    /// `k0 (n / log^2 n)^{1/3}`.
    pub leading: Real,
    /// `log P_n(Z = m0) + beta0 sqrt(m0 / log m0)`, without the unquantified error terms.
    pub lower_log: Real,
    /// `G_{n,eps}(x*)` at [`UPPER_EPS`].
    pub upper_log: Real,
    pub m0_star: usize,
    pub x_star: Real,
    pub m_star: Real,
    pub error_terms_omitted: bool,
}

pub fn en_t_estimate(n: usize) -> Result<EnTEstimate> {
    if n < 100 {
        return Err(Error::Domain(format!(
            "en_T_estimate needs n >= 100, got {n}"
        )));
    }
    let c = constants();
    let nf = n as f64;
    let ln_n = nf.ln();
    let leading = c.k0 * (nf / (ln_n * ln_n)).cbrt();
    let m0 = ((c.a0 * (nf * nf / ln_n).cbrt()).round() as usize).clamp(3, n);
    let ln_p = ln_gamma(nf + 1.0) - ln_gamma(nf - m0 as f64 + 1.0) + (m0 as f64).ln()
        - (m0 as f64 + 1.0) * ln_n;
    let lower_log = ln_p + stong_log_m(m0)?;
    let profile = g_profile(n, UPPER_EPS)?;
    let est = EnTEstimate {
        n,
        leading,
        lower_log,
        upper_log: profile.g_at_x_star,
        m0_star: m0,
        x_star: profile.x_star,
        m_star: profile.m_star,
        error_terms_omitted: true,
    };
    if est.lower_log > est.upper_log {
        return Err(Error::Invariant(format!(
            "lower_log exceeds upper_log at n = {n}"
        )));
    }
    Ok(est)
}

/// CSV columns `n, leading, lower_log, upper_log, x_star, m_star`.
pub fn write_estimates_csv<W: Write>(rows: &[EnTEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "leading", "lower_log", "upper_log", "x_star", "m_star"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.12e}", r.leading),
            format!("{:.12e}", r.lower_log),
            format!("{:.12e}", r.upper_log),
            format!("{:.12e}", r.x_star),
            format!("{:.12e}", r.m_star),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `log sum_m P(Z = m) exp(stong_logM(m))`, with `M_m` replaced by Stong's
/// term for `m >= 3` and `M_1 = 1`, `M_2 = 3/2`.
pub fn stong_mixture_log(n: usize) -> Result<Real> {
    let pmf = z_pmf_f64(n)?;
    let mut terms = Vec::with_capacity(n);
    for (i, p) in pmf.probabilities().into_iter().enumerate() {
        let m = i + 1;
        let log_m = match m {
            1 => 0.0,
            2 => 1.5f64.ln(),
            _ => stong_log_m(m)?,
        };
        if p > 0.0 {
            terms.push(p.ln() + log_m);
        }
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}
