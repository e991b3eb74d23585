//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{Float, FromPrimitive};

/// Kronrod abscissae on [0, 1], descending, 15-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

/// Gauss weights for the embedded 7-point rule (odd Kronrod nodes).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<F> {
    pub value: F,
    pub error: F,
    pub evaluations: usize,
}

struct Panel<F> {
    a: F,
    b: F,
    value: F,
    error: F,
}

impl<F: Float> PartialEq for Panel<F> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<F: Float> Eq for Panel<F> {}
impl<F: Float> PartialOrd for Panel<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Float> Ord for Panel<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod<F, G>(f: &G, a: F, b: F) -> (F, F)
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    let k = |x: f64| F::from_f64(x).expect("constant");
    let half = k(0.5);
    let center = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(center);
    let mut kron = fc * k(WGK[7]);
    let mut gauss = fc * k(WG[3]);
    for i in 0..7 {
        let dx = radius * k(XGK[i]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * k(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * k(WG[i / 2]);
        }
    }
    let value = kron * radius;
    let error = ((kron - gauss) * radius).abs();
    (value, error)
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops
/// below `abs_tol` or `max_panels` panels have been used.
pub fn integrate<F, G>(f: G, a: F, b: F, abs_tol: F, max_panels: usize) -> Estimate<F>
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    let (value, error) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_error = error;
    let mut panels = 1;
    let half = F::from_f64(0.5).expect("constant");
    while total_error > abs_tol && panels < max_panels {
        let worst = heap.pop().expect("heap is never empty");
        let mid = (worst.a + worst.b) * half;
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod(&f, worst.a, mid);
        let (rv, re) = kronrod(&f, mid, worst.b);
        total_error = total_error - worst.error + le + re;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        panels += 1;
    }
    // re-sum to shed drift from the running updates
    let (value, error) = heap.iter().fold((F::zero(), F::zero()), |(v, e), p| {
        (v + p.value, e + p.error)
    });
    Estimate {
        value,
        error,
        evaluations: (2 * panels - 1) * 15,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-14, 10);
        assert!((est.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // integral of ln x over (0, 1] is -1
        let est = integrate(|x: f64| x.ln(), 0.0, 1.0, 1e-10, 2000);
        assert!((est.value + 1.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn works_in_single_precision() {
        let est = integrate(|x: f32| x.exp(), 0.0, 1.0, 1e-5, 50);
        assert!((est.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }
}
