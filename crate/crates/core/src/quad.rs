//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{NbrigError, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub n_evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst segment until the summed
/// error estimate meets `tol` or `max_segments` is reached.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral> {
    integrate_breaks(f, &[a, b], tol, max_segments)
}

/// Like [`integrate`], but starts from the panels delimited by `breaks`
/// (sorted, at least two points). Seeding several panels keeps narrow peaks
/// from slipping between the nodes of a single initial rule.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral> {
    if breaks.len() < 2
        || breaks.iter().any(|b| !b.is_finite())
        || breaks.windows(2).any(|w| w[0] > w[1])
    {
        return Err(NbrigError::Domain(format!(
            "integration breakpoints {breaks:?} must be finite and ordered"
        )));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut n_evals = 0;
    for w in breaks.windows(2) {
        if w[0] < w[1] {
            let seg = kronrod(&mut f, w[0], w[1]);
            n_evals += 15;
            value += seg.value;
            error += seg.error;
            heap.push(seg);
        }
    }
    if heap.is_empty() {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            n_evals: 0,
        });
    }

    while error > tol.abs.max(tol.rel * value.abs()) {
        if !value.is_finite() {
            return Err(NbrigError::Numerical(
                "integrand produced a non-finite value".into(),
            ));
        }
        if heap.len() >= max_segments {
            return Err(NbrigError::Numerical(format!(
                "quadrature did not converge in {max_segments} segments (error {error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in f64
            heap.push(worst);
            break;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        n_evals += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // re-sum to shed the drift from incremental updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(NbrigError::Numerical(
            "integrand produced a non-finite value".into(),
        ));
    }
    Ok(Integral {
        value,
        abs_error,
        n_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, Tolerance::default(), 10).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let r = integrate(
            |x| (-0.5 * x * x).exp(),
            -12.0,
            12.0,
            Tolerance {
                abs: 1e-14,
                rel: 1e-14,
            },
            200,
        )
        .unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_converges() {
        let r = integrate(|x| 1.0 / (1e-6 + x * x), -1.0, 1.0, Tolerance::default(), 500).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-3).atan() / 1e-3;
        assert!((r.value - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(integrate(|x| x, 1.0, 0.0, Tolerance::default(), 10).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, Tolerance::default(), 10).is_err());
    }
}
