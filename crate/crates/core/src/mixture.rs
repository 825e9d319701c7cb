//! Quadrature over the mixing variable.
//!
//! `P(X = x) = ∫ NB(x | r, e^-λ) g(λ) dλ` has a positive integrand, so unlike
//! the closed-form alternating sum it cannot cancel. In `s = ln λ` the log
//! integrand
//!
//! ```text
//! phi(s) = ln C(r+x-1, x) - r λ + x ln(1 - e^-λ) + ln g(λ) + s
//! ```
//!
//! is a sum of concave functions of `s`, so it has a single mode that
//! bisection on `phi'` finds, and the mass sits in a window that can be
//! bracketed by walking outwards until `phi` has dropped by [`WINDOW_DROP`].

use statrs::function::beta::beta_reg;

use crate::dist::NbrigParams;
use crate::error::{NbrigError, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::rig::RigParams;
use crate::special::ln_nb_coef;

/// Log-drop from the peak at which the integrand is treated as zero.
const WINDOW_DROP: f64 = 80.0;
const PANELS: usize = 24;
const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 5e-15,
};
const MAX_SEGMENTS: usize = 4000;
/// The regularized incomplete beta carries ~1e-14 relative noise.
const TAIL_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-12,
};

/// `ln g(e^s) + s`: the RIG log density on the log scale, Jacobian included.
fn ln_rig_density_log_scale(mix: &RigParams, s: f64) -> f64 {
    let (a, m) = (mix.alpha(), mix.m());
    let lam = s.exp();
    0.5 * (a / (2.0 * std::f64::consts::PI)).ln() + 0.5 * s
        - 0.5 * a * (lam * m - 1.0).powi(2) / (m * m * lam)
}

fn d_ln_rig_density_log_scale(mix: &RigParams, s: f64) -> (f64, f64) {
    let (a, m) = (mix.alpha(), mix.m());
    let lam = s.exp();
    let d1 = 0.5 - 0.5 * a * lam + 0.5 * a / (m * m * lam);
    let d2 = -0.5 * a * lam - 0.5 * a / (m * m * lam);
    (d1, d2)
}

/// `ln(1 - e^-λ)` without cancellation at either end.
fn ln_one_minus_exp_neg(lam: f64) -> f64 {
    if lam > std::f64::consts::LN_2 {
        (-(-lam).exp()).ln_1p()
    } else {
        (-(-lam).exp_m1()).ln()
    }
}

/// `λ / (e^λ - 1)`.
fn lam_over_expm1(lam: f64) -> f64 {
    if lam < 1e-8 {
        1.0 - 0.5 * lam
    } else {
        lam / lam.exp_m1()
    }
}

struct PmfIntegrand {
    ln_coef: f64,
    r: f64,
    x: f64,
    mix: RigParams,
}

impl PmfIntegrand {
    fn new(p: &NbrigParams, x: u64) -> Self {
        PmfIntegrand {
            ln_coef: ln_nb_coef(p.r(), x),
            r: p.r(),
            x: x as f64,
            mix: *p.mix(),
        }
    }

    fn phi(&self, s: f64) -> f64 {
        let lam = s.exp();
        let nb = if self.x == 0.0 {
            -self.r * lam
        } else {
            -self.r * lam + self.x * ln_one_minus_exp_neg(lam)
        };
        self.ln_coef + nb + ln_rig_density_log_scale(&self.mix, s)
    }

    fn derivatives(&self, s: f64) -> (f64, f64) {
        let lam = s.exp();
        let q = lam_over_expm1(lam);
        let (g1, g2) = d_ln_rig_density_log_scale(&self.mix, s);
        let d1 = -self.r * lam + self.x * q + g1;
        let d2 = -self.r * lam + self.x * q * (1.0 - lam - q) + g2;
        (d1, d2)
    }
}

/// Mode of a concave function given its derivative, by bracketing and bisection.
fn concave_mode<D: Fn(f64) -> f64>(d1: D, start: f64) -> Result<f64> {
    let mut lo = start;
    let mut hi = start;
    let mut step = 1.0;
    while d1(lo) <= 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -1500.0 {
            return Err(NbrigError::Numerical("mixture mode below range".into()));
        }
    }
    step = 1.0;
    while d1(hi) >= 0.0 {
        hi += step;
        step *= 2.0;
        if hi > 1500.0 {
            return Err(NbrigError::Numerical("mixture mode above range".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d1(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Walks from `mode` in direction `dir` until `phi` falls `WINDOW_DROP` below `peak`.
fn window_edge<F: Fn(f64) -> f64>(phi: &F, mode: f64, peak: f64, scale: f64, dir: f64) -> f64 {
    let mut step = scale;
    let mut s = mode + dir * step;
    for _ in 0..400 {
        let v = phi(s);
        if !(v - peak > -WINDOW_DROP) {
            break;
        }
        step *= 1.5;
        s = mode + dir * step;
    }
    s
}

struct Window {
    mode: f64,
    lo: f64,
    hi: f64,
}

fn pmf_window(f: &PmfIntegrand) -> Result<Window> {
    let start = -f.mix.m().ln();
    let mode = concave_mode(|s| f.derivatives(s).0, start)?;
    let (_, d2) = f.derivatives(mode);
    let scale = if d2 < 0.0 && d2.is_finite() {
        (1.0 / (-d2).sqrt()).clamp(1e-12, 10.0)
    } else {
        1e-3
    };
    let phi = |s: f64| f.phi(s);
    let peak = phi(mode);
    if !peak.is_finite() {
        return Err(NbrigError::Numerical(format!(
            "mixture integrand peak is not finite ({peak})"
        )));
    }
    Ok(Window {
        mode,
        lo: window_edge(&phi, mode, peak, scale, -1.0),
        hi: window_edge(&phi, mode, peak, scale, 1.0),
    })
}

fn breakpoints(lo: f64, hi: f64, extra: f64) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / PANELS as f64)
        .collect();
    if extra > lo && extra < hi {
        b.push(extra);
        b.sort_by(f64::total_cmp);
    }
    b
}

/// `ln P(X = x)` by quadrature over the mixing variable, with an estimate of
/// the relative error of `P(X = x)`.
pub(crate) fn log_pmf(p: &NbrigParams, x: u64) -> Result<(f64, f64)> {
    let f = PmfIntegrand::new(p, x);
    let w = pmf_window(&f)?;
    let peak = f.phi(w.mode);
    let integral = integrate_breaks(
        |s| (f.phi(s) - peak).exp(),
        &breakpoints(w.lo, w.hi, w.mode),
        TOL,
        MAX_SEGMENTS,
    )?;
    if !(integral.value > 0.0) {
        return Err(NbrigError::Numerical(format!(
            "mixture integral for x = {x} is not positive"
        )));
    }
    // rounding in phi near the peak shifts the integrand by about eps * |phi|
    let rel_err = integral.abs_error / integral.value + 4.0 * f64::EPSILON * (1.0 + peak.abs());
    Ok((peak + integral.value.ln(), rel_err))
}

/// `P(X > x)` as `∫ I_{1-e^-λ}(x + 1, r) g(λ) dλ`, the mixture of negative
/// binomial upper tails. Nothing is subtracted, so tiny tails keep their
/// relative accuracy.
pub(crate) fn survival(p: &NbrigParams, x: u64) -> Result<f64> {
    let mix = *p.mix();
    let r = p.r();
    let a = x as f64 + 1.0;
    let ln_tail = |lam: f64| -> f64 {
        let q = -(-lam).exp_m1();
        if q >= 1.0 {
            0.0
        } else {
            beta_reg(a, r, q).ln()
        }
    };
    let phi = |s: f64| ln_tail(s.exp()) + ln_rig_density_log_scale(&mix, s);

    // the tail's mass lies between where counts above x become possible and
    // the upper reach of the mixing density
    let next = PmfIntegrand::new(p, x + 1);
    let w_next = pmf_window(&next)?;
    let rig_mode = concave_mode(|s| d_ln_rig_density_log_scale(&mix, s).0, -mix.m().ln())?;
    let rig_phi = |s: f64| ln_rig_density_log_scale(&mix, s);
    let rig_peak = rig_phi(rig_mode);
    let (_, rig_d2) = d_ln_rig_density_log_scale(&mix, rig_mode);
    let rig_scale = (1.0 / (-rig_d2).sqrt()).clamp(1e-12, 10.0);
    let rig_hi = window_edge(&rig_phi, rig_mode, rig_peak, rig_scale, 1.0);
    let lo = w_next.lo;
    let hi = w_next.hi.max(rig_hi);

    let grid: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    let peak = grid
        .iter()
        .map(|&s| phi(s))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Ok(0.0);
    }
    let integral = integrate_breaks(
        |s| {
            let v = phi(s) - peak;
            if v.is_nan() {
                0.0
            } else {
                v.exp()
            }
        },
        &breakpoints(lo, hi, w_next.mode),
        TAIL_TOL,
        MAX_SEGMENTS,
    )?;
    Ok((integral.value.ln() + peak).exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rig_log_density_matches_pdf() {
        let mix = RigParams::new(2.0, 0.5).unwrap();
        for &s in &[-3.0, -0.4, 0.0, 1.2] {
            let lam: f64 = f64::exp(s);
            let direct = (mix.pdf(lam).unwrap() * lam).ln();
            assert!((ln_rig_density_log_scale(&mix, s) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = NbrigParams::new(3.4, 61.4973, 35.8961).unwrap();
        let f = PmfIntegrand::new(&p, 7);
        for &s in &[-4.0, -2.5, -1.0, 0.5] {
            let h = 1e-5;
            let fd1 = (f.phi(s + h) - f.phi(s - h)) / (2.0 * h);
            let fd2 = (f.phi(s + h) - 2.0 * f.phi(s) + f.phi(s - h)) / (h * h);
            let (d1, d2) = f.derivatives(s);
            assert!((d1 - fd1).abs() < 1e-5 * (1.0 + d1.abs()), "{s}: {d1} {fd1}");
            assert!((d2 - fd2).abs() < 1e-3 * (1.0 + d2.abs()), "{s}: {d2} {fd2}");
        }
    }

    #[test]
    fn zero_count_matches_mgf() {
        let p = NbrigParams::new(2.03, 24.87, 17.42).unwrap();
        let closed = p.mix().log_mgf(-2.03).unwrap();
        let (v, err) = log_pmf(&p, 0).unwrap();
        assert!((v - closed).abs() < 1e-12);
        assert!(err < 1e-12);
    }
}
