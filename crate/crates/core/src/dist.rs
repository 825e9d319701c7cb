//! The univariate NBRIG distribution: `X | λ ~ NB(r, e^-λ)` with `λ ~ RIG(α, m)`.
//!
//! The closed-form PMF
//!
//! ```text
//! P(X = x) = C(r+x-1, x) * sum_{j=0..x} (-1)^j C(x, j) M(-(r+j))
//! ```
//!
//! and the recursion
//!
//! ```text
//! p(k; r) = ((r+k-1)/k) p(k-1; r) - (r/k) p(k-1; r+1)
//! ```
//!
//! are both linear in the seeds `M(-(r+j))` and equally ill-conditioned: for
//! fitted parameters the condition number passes `1e16` near `x = 15`. Both
//! therefore run in double-double arithmetic with a running forward error
//! bound. Past the point where even that is not enough, [`NbrigParams::evaluate`]
//! switches to quadrature of the mixture integral, whose integrand is positive.

use rand_distr::{Distribution, Gamma, InverseGaussian, Poisson};
use serde::{Deserialize, Serialize};

use crate::baselines::NbParams;
use crate::dd::{Dd, DD_EPS};
use crate::error::{check_positive, NbrigError, Result};
use crate::mixture;
use crate::par::{self, Execution};
use crate::rig::RigParams;
use crate::special::{binomial_row, compensated_sum, ln_nb_coef, ln_rising};

/// Relative error above which the exact algorithms refuse to answer.
pub const PRECISION_LIMIT: f64 = 1e-6;

/// Relative error up to which [`NbrigParams::evaluate`] accepts the closed form.
pub const TRUST_LIMIT: f64 = 1e-13;

/// Probability below which the automatic truncation point may stop.
pub const TRUNCATION_PMF: f64 = 1e-14;

/// Upper bound on the automatic truncation point.
pub const TRUNCATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbrigParams {
    r: f64,
    mix: RigParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Recursive,
    Mixture,
}

/// One PMF value with the algorithm that produced it and a bound on its
/// relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub log_value: f64,
    pub rel_err: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionReport {
    pub mean: f64,
    pub variance: f64,
    pub ratio: f64,
    pub nb_matched_variance: f64,
}

/// `exp(L_j - L_0)` for `L_j = log M(-(r+j))`, in double-double, with their
/// relative error bounds. Scaling by `L_0` keeps large `r` from underflowing.
pub(crate) struct Seeds {
    ln_p0: f64,
    l0: Dd,
    l0_abs: f64,
    pub(crate) scaled: Vec<Dd>,
    pub(crate) rel_err: Vec<f64>,
}

impl Seeds {
    pub(crate) fn new(p: &NbrigParams) -> Self {
        let l0 = p.mix.log_mgf_dd(Dd::new(-p.r));
        Seeds {
            ln_p0: p.ln_p0(),
            l0,
            l0_abs: l0.hi.abs(),
            scaled: vec![Dd::ONE],
            rel_err: vec![DD_EPS],
        }
    }

    pub(crate) fn extend_to(&mut self, p: &NbrigParams, n: u64) {
        while (self.scaled.len() as u64) <= n {
            let j = self.scaled.len() as f64;
            let lj = p.mix.log_mgf_dd(-(Dd::new(p.r) + j));
            self.scaled.push((lj - self.l0).exp());
            self.rel_err
                .push(DD_EPS * (16.0 + 4.0 * (lj.hi.abs() + self.l0_abs)));
        }
    }

    /// Relative error from rounding `ln p(0)` and the coefficient to f64.
    fn f64_floor(&self, ln_coef: f64) -> f64 {
        f64::EPSILON * (2.0 + ln_coef.abs() + self.ln_p0.abs() + self.l0_abs)
    }
}

/// `sum_j (-1)^j C(x, j) s_j` with a forward error bound.
fn alternating_sum(seeds: &Seeds, x: u64) -> (Dd, f64) {
    let row = binomial_row(x);
    let mut sum = Dd::ZERO;
    let mut abs_sum = 0.0;
    let mut err = 0.0;
    for (j, c) in row.iter().enumerate() {
        let term = *c * seeds.scaled[j];
        let t = term.hi.abs();
        abs_sum += t;
        err += t * (seeds.rel_err[j] + DD_EPS * (2.0 * j as f64 + 4.0));
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    err += abs_sum * DD_EPS * (x as f64 + 2.0);
    (sum, err)
}

pub(crate) fn finish(
    seeds: &Seeds,
    ln_coef: f64,
    scaled: Dd,
    abs_err: f64,
    method: Method,
) -> Evaluation {
    if !(scaled.hi > 0.0) || !scaled.is_finite() {
        return Evaluation {
            value: f64::NAN,
            log_value: f64::NAN,
            rel_err: f64::INFINITY,
            method,
        };
    }
    let log_value = seeds.ln_p0 + ln_coef + scaled.ln().to_f64();
    Evaluation {
        value: log_value.exp(),
        log_value,
        rel_err: abs_err / scaled.hi + seeds.f64_floor(ln_coef),
        method,
    }
}

fn precision_error(what: String, rel_err: f64) -> NbrigError {
    NbrigError::Precision {
        what,
        rel_err,
        limit: PRECISION_LIMIT,
    }
}

/// Incremental anti-diagonal fill of the table `p(i; r + j)`.
///
/// After step `k` the diagonal holds `p(i; r + k - i)` for `i = 0..=k`, all
/// scaled by `1 / p(0; r)`, so `diag[k]` is `p(k; r)`.
struct Recursion {
    r: Dd,
    diag: Vec<Dd>,
    err: Vec<f64>,
}

impl Recursion {
    fn new(p: &NbrigParams, seeds: &Seeds) -> Self {
        Recursion {
            r: Dd::new(p.r),
            diag: vec![seeds.scaled[0]],
            err: vec![seeds.scaled[0].hi * seeds.rel_err[0]],
        }
    }

    fn k(&self) -> u64 {
        self.diag.len() as u64 - 1
    }

    /// Advances to the next diagonal; `seeds` must already reach `k + 1`.
    fn step(&mut self, seeds: &Seeds) {
        let k = self.diag.len();
        let mut next = Vec::with_capacity(k + 1);
        let mut next_err = Vec::with_capacity(k + 1);
        next.push(seeds.scaled[k]);
        next_err.push(seeds.scaled[k].hi * seeds.rel_err[k]);
        for i in 1..=k {
            let j = (k - i) as f64;
            let s = self.r + j;
            let a = (s + (i as f64 - 1.0)) / i as f64;
            let b = s / i as f64;
            let av = a * self.diag[i - 1];
            let bv = b * next[i - 1];
            next.push(av - bv);
            let local = DD_EPS * 6.0 * (av.hi.abs() + bv.hi.abs());
            next_err.push(a.hi * self.err[i - 1] + b.hi * next_err[i - 1] + local);
        }
        self.diag = next;
        self.err = next_err;
    }

    fn current(&self, seeds: &Seeds) -> Evaluation {
        let k = self.diag.len() - 1;
        finish(seeds, 0.0, self.diag[k], self.err[k], Method::Recursive)
    }
}

impl NbrigParams {
    pub fn new(r: f64, alpha: f64, m: f64) -> Result<Self> {
        Self::from_parts(r, RigParams::new(alpha, m)?)
    }

    pub fn from_parts(r: f64, mix: RigParams) -> Result<Self> {
        Ok(NbrigParams {
            r: check_positive("r", r)?,
            mix,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mix(&self) -> &RigParams {
        &self.mix
    }

    pub fn alpha(&self) -> f64 {
        self.mix.alpha()
    }

    pub fn m(&self) -> f64 {
        self.mix.m()
    }

    /// `ln P(X = 0) = log M(-r)`; every algorithm returns exactly this at zero.
    pub fn ln_p0(&self) -> f64 {
        self.mix
            .log_mgf(-self.r)
            .expect("negative arguments are inside the mgf domain")
    }

    /// Closed-form alternating sum.
    pub fn direct(&self, x: u64) -> Result<Evaluation> {
        let mut seeds = Seeds::new(self);
        seeds.extend_to(self, x);
        let ev = self.direct_with(&seeds, x);
        if ev.rel_err > PRECISION_LIMIT {
            return Err(precision_error(format!("closed-form pmf at x = {x}"), ev.rel_err));
        }
        Ok(ev)
    }

    fn direct_with(&self, seeds: &Seeds, x: u64) -> Evaluation {
        if x == 0 {
            return finish(seeds, 0.0, Dd::ONE, 0.0, Method::Direct);
        }
        let (sum, err) = alternating_sum(seeds, x);
        finish(seeds, ln_nb_coef(self.r, x), sum, err, Method::Direct)
    }

    /// Recursion in `k`, filling the triangle `{p(i; r + j) : i + j <= k}`.
    pub fn recursive(&self, k: u64) -> Result<Evaluation> {
        let mut seeds = Seeds::new(self);
        seeds.extend_to(self, k);
        let mut rec = Recursion::new(self, &seeds);
        while rec.k() < k {
            rec.step(&seeds);
        }
        let ev = rec.current(&seeds);
        if ev.rel_err > PRECISION_LIMIT {
            return Err(precision_error(format!("recursive pmf at k = {k}"), ev.rel_err));
        }
        Ok(ev)
    }

    /// Quadrature of the mixture integral.
    pub fn mixture(&self, x: u64) -> Result<Evaluation> {
        let (log_value, rel_err) = mixture::log_pmf(self, x)?;
        Ok(Evaluation {
            value: log_value.exp(),
            log_value,
            rel_err,
            method: Method::Mixture,
        })
    }

    /// The closed form when its error bound is below [`TRUST_LIMIT`], the
    /// mixture quadrature otherwise.
    pub fn evaluate(&self, x: u64) -> Result<Evaluation> {
        let mut seeds = Seeds::new(self);
        seeds.extend_to(self, x);
        self.evaluate_with(&seeds, x)
    }

    fn evaluate_with(&self, seeds: &Seeds, x: u64) -> Result<Evaluation> {
        let direct = self.direct_with(seeds, x);
        if direct.rel_err <= TRUST_LIMIT {
            return Ok(direct);
        }
        match self.mixture(x) {
            Ok(m) if m.rel_err < direct.rel_err => Ok(m),
            _ if direct.rel_err <= PRECISION_LIMIT => Ok(direct),
            Ok(m) if m.rel_err <= PRECISION_LIMIT => Ok(m),
            Ok(m) => Err(precision_error(format!("pmf at x = {x}"), m.rel_err)),
            Err(e) => Err(e),
        }
    }

    pub fn pmf(&self, x: u64) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    pub fn log_pmf(&self, x: u64) -> Result<f64> {
        Ok(self.evaluate(x)?.log_value)
    }

    /// `ln P(X = x)` for each entry of `xs`, sharing the mgf seeds.
    pub fn log_pmfs(&self, xs: &[u64]) -> Result<Vec<f64>> {
        let mut seeds = Seeds::new(self);
        if let Some(&max) = xs.iter().max() {
            seeds.extend_to(self, max);
        }
        xs.iter()
            .map(|&x| Ok(self.evaluate_with(&seeds, x)?.log_value))
            .collect()
    }

    /// `P(X <= x)`; zero for negative `x`.
    pub fn cdf(&self, x: i64) -> Result<f64> {
        if x < 0 {
            return Ok(0.0);
        }
        let table = PmfTable::new(*self, x as u64, Execution::default())?;
        Ok(compensated_sum(table.probs.iter().copied()).min(1.0))
    }

    /// `P(X > x)`, computed from whichever side of the distribution is smaller.
    pub fn survival(&self, x: i64) -> Result<f64> {
        if x < 0 {
            return Ok(1.0);
        }
        let cdf = self.cdf(x)?;
        if cdf <= 0.5 {
            Ok(1.0 - cdf)
        } else {
            mixture::survival(self, x as u64)
        }
    }

    fn require_mgf(&self, t: f64, what: &str) -> Result<()> {
        if self.alpha() <= 2.0 * t {
            return Err(NbrigError::Domain(format!(
                "{what} needs alpha > {}, got alpha = {} (mgf of the mixing law diverges at t = {t})",
                2.0 * t,
                self.alpha()
            )));
        }
        Ok(())
    }

    fn mgf_dd(&self, t: u64) -> Dd {
        self.mix.mgf_dd(Dd::new(t as f64))
    }

    /// `E[X (X-1) ... (X-k+1)] = r^(k) sum_j (-1)^j C(k, j) M(k - j)`.
    pub fn factorial_moment(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        self.require_mgf(k as f64, &format!("factorial moment of order {k}"))?;
        let row = binomial_row(k);
        let mut sum = Dd::ZERO;
        for (j, c) in row.iter().enumerate() {
            let term = *c * self.mgf_dd(k - j as u64);
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let mut rising = Dd::ONE;
        if k <= 64 {
            for i in 0..k {
                rising = rising * (Dd::new(self.r) + i as f64);
            }
            Ok((rising * sum).to_f64())
        } else {
            Ok((ln_rising(self.r, k) + sum.ln().to_f64()).exp())
        }
    }

    /// `r (M(1) - 1)`; needs `alpha > 2`.
    pub fn mean(&self) -> Result<f64> {
        self.require_mgf(1.0, "the mean")?;
        Ok(self.r * self.mix.log_mgf(1.0)?.exp_m1())
    }

    /// `(r + r^2) M(2) - (r + 2 r^2) M(1) + r^2`; needs `alpha > 4`.
    pub fn second_moment(&self) -> Result<f64> {
        self.require_mgf(2.0, "the second moment")?;
        let r = Dd::new(self.r);
        let r2 = r.square();
        let v = (r + r2) * self.mgf_dd(2) - (r + r2 * 2.0) * self.mgf_dd(1) + r2;
        Ok(v.to_f64())
    }

    /// `(r + r^2) M(2) - r M(1) - r^2 M(1)^2`; needs `alpha > 4`.
    pub fn variance(&self) -> Result<f64> {
        self.require_mgf(2.0, "the variance")?;
        let (m1, m2) = (self.mgf_dd(1), self.mgf_dd(2));
        let r = Dd::new(self.r);
        // r (M2 - M1) + r^2 (M2 - M1^2), both brackets positive
        let v = r * (m2 - m1) + r.square() * (m2 - m1.square());
        Ok(v.to_f64())
    }

    /// `Var(e^λ) = M(2) - M(1)^2`.
    pub fn mixing_exp_variance(&self) -> Result<f64> {
        self.require_mgf(2.0, "Var(e^lambda)")?;
        Ok((self.mgf_dd(2) - self.mgf_dd(1).square()).to_f64())
    }

    /// Negative binomial with the same `r` and mean, `p = 1 / M(1)`.
    pub fn matched_nb(&self) -> Result<NbParams> {
        self.require_mgf(1.0, "the matched negative binomial")?;
        NbParams::new(self.r, (-self.mix.log_mgf(1.0)?).exp())
    }

    /// Mean, variance and the two overdispersion comparisons. Fails if either
    /// `variance > mean` or `variance > matched-NB variance` does not hold.
    pub fn dispersion_report(&self) -> Result<DispersionReport> {
        let mean = self.mean()?;
        let variance = self.variance()?;
        let nb_matched_variance = self.matched_nb()?.variance();
        if !(variance > mean && variance > nb_matched_variance) {
            return Err(NbrigError::Numerical(format!(
                "overdispersion inequalities fail: variance {variance}, mean {mean}, matched NB variance {nb_matched_variance}"
            )));
        }
        Ok(DispersionReport {
            mean,
            variance,
            ratio: variance / mean,
            nb_matched_variance,
        })
    }

    /// Smallest `x` with `pmf(x) < 1e-14` and `x > 10 (mean + 1)`.
    pub fn truncation_point(&self) -> Result<u64> {
        let floor = (10.0 * (self.mean()? + 1.0)).floor() as u64 + 1;
        let mut x = floor;
        loop {
            let ev = if x <= 64 {
                self.evaluate(x)?
            } else {
                self.mixture(x)?
            };
            if ev.value < TRUNCATION_PMF {
                return Ok(x);
            }
            if x >= TRUNCATION_CAP {
                return Err(NbrigError::Domain(format!(
                    "pmf still above {TRUNCATION_PMF:e} at x = {TRUNCATION_CAP}"
                )));
            }
            x = (x + x / 4 + 1).min(TRUNCATION_CAP);
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<u64>> {
        self.sample_with(n, seed, Execution::default())
    }

    /// Draws `λ ~ RIG`, then `X | λ ~ NB(r, e^-λ)` as a gamma-Poisson mixture
    /// with gamma scale `(1 - p) / p = e^λ - 1`.
    pub fn sample_with(&self, n: usize, seed: u64, exec: Execution) -> Result<Vec<u64>> {
        if n == 0 {
            return Err(NbrigError::Domain("sample size must be at least 1".into()));
        }
        let counts = CountSampler::new(self)?;
        Ok(par::sample_in_chunks(exec, n, seed, |rng| counts.draw(rng)))
    }
}

/// Single-draw sampler shared by count and aggregate simulation.
pub(crate) struct CountSampler {
    ig: InverseGaussian<f64>,
    gamma: Gamma<f64>,
}

impl CountSampler {
    pub(crate) fn new(p: &NbrigParams) -> Result<Self> {
        let ig = p.mix.inverse_gaussian()?;
        let gamma = Gamma::new(p.r, 1.0)
            .map_err(|e| NbrigError::Numerical(format!("gamma sampler: {e}")))?;
        Ok(CountSampler { ig, gamma })
    }

    pub(crate) fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let lam = 1.0 / self.ig.sample(rng);
        let rate = self.gamma.sample(rng) * lam.exp_m1();
        poisson_draw(rate, rng)
    }
}

/// Poisson draw that saturates instead of failing for extreme rates.
pub(crate) fn poisson_draw<R: rand::Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if !(rate > 0.0) {
        return 0;
    }
    if rate > 1e18 {
        // relative spread 1e-9, below f64 resolution of the count
        return if rate >= u64::MAX as f64 {
            u64::MAX
        } else {
            rate.round() as u64
        };
    }
    match Poisson::new(rate) {
        Ok(d) => {
            let v: f64 = d.sample(rng);
            v as u64
        }
        Err(_) => rate.round() as u64,
    }
}

/// Materialized PMF on `0..=x_max` with the mass beyond it.
///
/// Values come from the recursion while its error bound stays below
/// [`TRUST_LIMIT`] and from mixture quadrature after that. `tail_mass` is
/// computed independently of `probs`, as a mixture of negative binomial tails,
/// so `sum(probs) + tail_mass = 1` is a genuine check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable {
    pub params: NbrigParams,
    pub probs: Vec<f64>,
    pub methods: Vec<Method>,
    pub tail_mass: f64,
}

impl PmfTable {
    pub fn new(params: NbrigParams, x_max: u64, exec: Execution) -> Result<Self> {
        let n = x_max as usize + 1;
        let mut seeds = Seeds::new(&params);
        let mut rec = Recursion::new(&params, &seeds);
        let mut probs = Vec::with_capacity(n);
        let mut methods = Vec::with_capacity(n);
        loop {
            let ev = rec.current(&seeds);
            if ev.rel_err > TRUST_LIMIT {
                break;
            }
            probs.push(ev.value);
            methods.push(Method::Recursive);
            if rec.k() == x_max {
                break;
            }
            seeds.extend_to(&params, rec.k() + 1);
            rec.step(&seeds);
        }
        let start = probs.len();
        let rest = par::map_indices(exec, n - start, |i| {
            let x = (start + i) as u64;
            params.mixture(x).or_else(|_| params.evaluate(x))
        });
        for ev in rest {
            let ev = ev?;
            probs.push(ev.value);
            methods.push(ev.method);
        }
        let tail_mass = mixture::survival(&params, x_max)
            .unwrap_or_else(|_| (1.0 - compensated_sum(probs.iter().copied())).max(0.0));
        Ok(PmfTable {
            params,
            probs,
            methods,
            tail_mass,
        })
    }

    /// Table up to [`NbrigParams::truncation_point`].
    pub fn to_truncation(params: NbrigParams, exec: Execution) -> Result<Self> {
        Self::new(params, params.truncation_point()?, exec)
    }

    pub fn x_max(&self) -> u64 {
        self.probs.len() as u64 - 1
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.iter().copied().chain([self.tail_mass]))
    }
}

pub fn pmf_direct(x: u64, p: &NbrigParams) -> Result<f64> {
    Ok(p.direct(x)?.value)
}

pub fn pmf_recursive(k: u64, p: &NbrigParams) -> Result<f64> {
    Ok(p.recursive(k)?.value)
}

pub fn pmf(x: u64, p: &NbrigParams) -> Result<f64> {
    p.pmf(x)
}

pub fn log_pmf(x: u64, p: &NbrigParams) -> Result<f64> {
    p.log_pmf(x)
}

pub fn cdf(x: i64, p: &NbrigParams) -> Result<f64> {
    p.cdf(x)
}

pub fn survival(x: i64, p: &NbrigParams) -> Result<f64> {
    p.survival(x)
}

pub fn factorial_moment(k: u64, p: &NbrigParams) -> Result<f64> {
    p.factorial_moment(k)
}

pub fn mean(p: &NbrigParams) -> Result<f64> {
    p.mean()
}

pub fn second_moment(p: &NbrigParams) -> Result<f64> {
    p.second_moment()
}

pub fn variance(p: &NbrigParams) -> Result<f64> {
    p.variance()
}

pub fn dispersion_report(p: &NbrigParams) -> Result<DispersionReport> {
    p.dispersion_report()
}

pub fn sample(n: usize, p: &NbrigParams, seed: u64) -> Result<Vec<u64>> {
    p.sample(n, seed)
}

/// Closed form with a caller-supplied log coefficient in place of
/// `ln C(r+x-1, x)`; the multivariate joint PMF shares this path.
pub(crate) fn direct_with_coef(p: &NbrigParams, x: u64, ln_coef: f64) -> Evaluation {
    let mut seeds = Seeds::new(p);
    seeds.extend_to(p, x);
    if x == 0 {
        return finish(&seeds, ln_coef, Dd::ONE, 0.0, Method::Direct);
    }
    let (sum, err) = alternating_sum(&seeds, x);
    finish(&seeds, ln_coef, sum, err, Method::Direct)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> NbrigParams {
        NbrigParams::new(3.4, 61.4973, 35.8961).unwrap()
    }

    #[test]
    fn zero_is_the_mgf_everywhere() {
        let p = table1();
        let closed = p.mix().log_mgf(-3.4).unwrap().exp();
        assert_eq!(p.direct(0).unwrap().value, closed);
        assert_eq!(p.recursive(0).unwrap().value, closed);
        assert_eq!(p.pmf(0).unwrap(), closed);
    }

    #[test]
    fn expected_frequencies_table1() {
        // independent float evaluation of the alternating sum in mpmath
        let want = [
            103_709.38, 14_054.99, 1_787.40, 251.94, 40.223, 7.2178, 1.4371,
        ];
        let p = table1();
        for (x, w) in want.iter().enumerate() {
            let got = 119_853.0 * p.direct(x as u64).unwrap().value;
            assert!((got - w).abs() < 1e-4 * w, "{x}: {got}");
        }
    }

    #[test]
    fn direct_and_recursive_agree_where_conditioning_is_bad() {
        let p = table1();
        for x in 0..=20 {
            let d = p.direct(x).unwrap();
            let r = p.recursive(x).unwrap();
            assert!((d.value - r.value).abs() <= 1e-12 * d.value, "{x}");
        }
    }

    #[test]
    fn dispatcher_switches_to_mixture() {
        let p = table1();
        let ev = p.evaluate(60).unwrap();
        assert_eq!(ev.method, Method::Mixture);
        assert!(ev.value > 0.0 && ev.rel_err < 1e-10);
        assert!(p.direct(200).is_err());
    }

    #[test]
    fn mixture_matches_direct_at_small_counts() {
        let p = NbrigParams::new(2.03, 24.87, 17.42).unwrap();
        for x in 0..12 {
            let d = p.direct(x).unwrap().value;
            let m = p.mixture(x).unwrap().value;
            assert!((d - m).abs() < 1e-12 * d, "{x}: {d} {m}");
        }
    }

    #[test]
    fn moments_need_the_mgf() {
        let p = NbrigParams::new(1.0, 4.0, 1.0).unwrap();
        assert!(p.mean().is_ok());
        assert!(p.variance().is_err());
        assert!(p.factorial_moment(2).is_err());
        assert!(p.factorial_moment(1).is_ok());
    }

    #[test]
    fn factorial_moment_one_is_mean() {
        let p = table1();
        let a = p.factorial_moment(1).unwrap();
        let b = p.mean().unwrap();
        assert!((a - b).abs() < 1e-14 * b);
    }

    #[test]
    fn variance_forms_agree() {
        let p = table1();
        let via_second = p.second_moment().unwrap() - p.mean().unwrap().powi(2);
        assert!((via_second - p.variance().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn table_is_normalized() {
        let p = NbrigParams::new(2.03, 24.87, 17.42).unwrap();
        let t = PmfTable::new(p, 200, Execution::Sequential).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-10);
        assert!(t.methods.contains(&Method::Mixture));
    }

    #[test]
    fn survival_complements_cdf() {
        let p = table1();
        for x in [0, 3, 10, 40] {
            let s = p.survival(x).unwrap();
            let c = p.cdf(x).unwrap();
            assert!((s + c - 1.0).abs() < 1e-12, "{x}");
        }
        assert_eq!(p.cdf(-1).unwrap(), 0.0);
    }

    #[test]
    fn sampling_is_deterministic_and_mode_independent() {
        let p = table1();
        let a = p.sample_with(40_000, 9, Execution::Sequential).unwrap();
        let b = p.sample_with(40_000, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(p.sample(0, 1).is_err());
    }

    #[test]
    fn poisson_draw_saturates() {
        let mut rng = rand::rng();
        assert_eq!(poisson_draw(0.0, &mut rng), 0);
        assert_eq!(poisson_draw(f64::INFINITY, &mut rng), u64::MAX);
        assert_eq!(poisson_draw(3e18, &mut rng), 3_000_000_000_000_000_000);
    }
}
