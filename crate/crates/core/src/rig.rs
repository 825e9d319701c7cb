//! Reciprocal inverse Gaussian (RIG) mixing distribution.
//!
//! Density on `z > 0`:
//!
//! ```text
//! f(z) = sqrt(a / (2 pi z)) * exp(-(a / 2m) (z m - 2 + 1 / (z m)))
//! ```
//!
//! with moment generating function
//!
//! ```text
//! M(t) = sqrt(a / (a - 2t)) * exp((a / m^2) (m - (m / sqrt(a)) sqrt(a - 2t))),   t < a / 2.
//! ```
//!
//! Everything downstream consumes `M` through [`RigParams::log_mgf`], which uses
//! the cancellation-free form
//! `log M(t) = -1/2 log1p(-2t/a) + 2t / (m (1 + sqrt(1 - 2t/a)))`.

use rand_distr::{Distribution, InverseGaussian};
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{check_positive, NbrigError, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigParams {
    alpha: f64,
    m: f64,
}

impl RigParams {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        Ok(RigParams {
            alpha: check_positive("alpha", alpha)?,
            m: check_positive("m", m)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Supremum of the mgf domain, `alpha / 2`.
    pub fn mgf_bound(&self) -> f64 {
        0.5 * self.alpha
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        if !(z.is_finite() && z > 0.0) {
            return Err(NbrigError::Domain(format!(
                "RIG density needs z > 0, got {z}"
            )));
        }
        let zm = z * self.m;
        // (zm - 2 + 1/zm) = (zm - 1)^2 / zm, the right side does not cancel
        let expo = -0.5 * self.alpha / self.m * (zm - 1.0).powi(2) / zm;
        Ok((self.alpha / (2.0 * std::f64::consts::PI * z)).sqrt() * expo.exp())
    }

    fn check_mgf_arg(&self, t: f64) -> Result<()> {
        if t.is_nan() || t >= self.mgf_bound() {
            return Err(NbrigError::Domain(format!(
                "RIG mgf diverges for t = {t} >= alpha/2 = {}",
                self.mgf_bound()
            )));
        }
        Ok(())
    }

    pub fn log_mgf(&self, t: f64) -> Result<f64> {
        self.check_mgf_arg(t)?;
        if t == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let u = -2.0 * t / self.alpha;
        Ok(-0.5 * u.ln_1p() + 2.0 * t / (self.m * (1.0 + (1.0 + u).sqrt())))
    }

    pub fn mgf(&self, t: f64) -> Result<f64> {
        Ok(self.log_mgf(t)?.exp())
    }

    /// `log M(t)` in double-double; the caller guarantees `t < alpha / 2`.
    pub(crate) fn log_mgf_dd(&self, t: Dd) -> Dd {
        debug_assert!(t.hi < self.mgf_bound());
        let w = t * (-2.0) / self.alpha + 1.0;
        w.ln() * (-0.5) + t * 2.0 / ((w.sqrt() + 1.0) * self.m)
    }

    pub(crate) fn mgf_dd(&self, t: Dd) -> Dd {
        self.log_mgf_dd(t).exp()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.sample_with(n, seed, Execution::default())
    }

    /// `Z = 1 / W` with `W ~ IG(mean m, shape alpha)`; the change of variables
    /// turns the IG density into exactly the RIG density above.
    pub fn sample_with(&self, n: usize, seed: u64, exec: Execution) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(NbrigError::Domain("sample size must be at least 1".into()));
        }
        let ig = self.inverse_gaussian()?;
        Ok(par::sample_in_chunks(exec, n, seed, |rng| {
            1.0 / ig.sample(rng)
        }))
    }

    pub(crate) fn inverse_gaussian(&self) -> Result<InverseGaussian<f64>> {
        InverseGaussian::new(self.m, self.alpha)
            .map_err(|e| NbrigError::Numerical(format!("inverse Gaussian sampler: {e}")))
    }
}

pub fn rig_pdf(z: f64, p: &RigParams) -> Result<f64> {
    p.pdf(z)
}

pub fn rig_mgf(t: f64, p: &RigParams) -> Result<f64> {
    p.mgf(t)
}

pub fn rig_log_mgf(t: f64, p: &RigParams) -> Result<f64> {
    p.log_mgf(t)
}

pub fn rig_sample(n: usize, p: &RigParams, seed: u64) -> Result<Vec<f64>> {
    p.sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(RigParams::new(0.0, 1.0).is_err());
        assert!(RigParams::new(1.0, -2.0).is_err());
        assert!(RigParams::new(f64::NAN, 1.0).is_err());
        assert!(RigParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn pdf_at_reciprocal_of_m() {
        for &(a, m) in &[(1.0, 1.0), (0.5, 0.5), (61.4973, 35.8961)] {
            let p = RigParams::new(a, m).unwrap();
            let expected = (a * m / (2.0 * std::f64::consts::PI)).sqrt();
            let got = p.pdf(1.0 / m).unwrap();
            assert!((got - expected).abs() <= 1e-15 * expected);
        }
    }

    #[test]
    fn pdf_direct_transcription() {
        // plain transcription of the density, evaluated where nothing cancels
        let (a, m, z): (f64, f64, f64) = (0.5, 0.5, 0.5);
        let naive = (a / (2.0 * std::f64::consts::PI * z)).sqrt()
            * (-(a / (2.0 * m)) * (z * m - 2.0 + 1.0 / (z * m))).exp();
        let p = RigParams::new(a, m).unwrap();
        assert!((p.pdf(z).unwrap() - naive).abs() < 1e-15);
        assert!((naive - 0.129_517_595_665_891_73).abs() < 1e-12);
        assert!(p.pdf(0.0).is_err());
        assert!(p.pdf(-1.0).is_err());
    }

    #[test]
    fn mgf_at_zero_is_one() {
        let p = RigParams::new(3.0, 0.7).unwrap();
        assert_eq!(p.mgf(0.0).unwrap(), 1.0);
        assert_eq!(p.log_mgf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn mgf_domain_boundary() {
        let p = RigParams::new(1.0, 1.0).unwrap();
        assert!(p.mgf(0.5).is_err());
        assert!(p.mgf(0.6).is_err());
        assert!(p.mgf(0.5 - 1e-9).unwrap() > 1e3);
    }

    #[test]
    fn mgf_matches_printed_formula() {
        let printed = |t: f64, a: f64, m: f64| {
            (a / (a - 2.0 * t)).sqrt()
                * ((a / (m * m)) * (m - (m / a.sqrt()) * (a - 2.0 * t).sqrt())).exp()
        };
        for &(a, m, t) in &[(1.0, 1.0, 0.3), (10.0, 2.0, 1.0), (2.0, 0.5, -1.0), (61.4973, 35.8961, -3.4)] {
            let p = RigParams::new(a, m).unwrap();
            let got = p.mgf(t).unwrap();
            assert!((got - printed(t, a, m)).abs() < 1e-13 * got, "{a} {m} {t}");
        }
    }

    #[test]
    fn negative_arguments_always_in_domain() {
        let p = RigParams::new(0.01, 100.0).unwrap();
        for j in 0..200 {
            assert!(p.log_mgf(-(0.3 + j as f64)).unwrap().is_finite());
        }
    }

    #[test]
    fn huge_alpha_has_no_cancellation() {
        // alpha -> infinity concentrates Z at 1/m, so log M(t) -> t/m
        let p = RigParams::new(1e16, 7.0).unwrap();
        let v = p.log_mgf(-3.0).unwrap();
        assert!((v - (-3.0 / 7.0)).abs() < 1e-14);
    }

    #[test]
    fn dd_log_mgf_agrees_with_f64() {
        let p = RigParams::new(24.87, 17.42).unwrap();
        for &t in &[-40.0, -2.03, 0.0, 1.0, 2.0, 12.0] {
            let d = p.log_mgf_dd(Dd::new(t)).to_f64();
            let f = p.log_mgf(t).unwrap();
            assert!((d - f).abs() <= 1e-15 * (1.0 + f.abs()), "{t}: {d} vs {f}");
        }
    }

    #[test]
    fn sampler_is_seeded() {
        let p = RigParams::new(10.0, 2.0).unwrap();
        let a = p.sample(1000, 42).unwrap();
        let b = p.sample(1000, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&z| z > 0.0 && z.is_finite()));
        assert!(p.sample(0, 1).is_err());
    }
}
