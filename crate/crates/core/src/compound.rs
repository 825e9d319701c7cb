//! Aggregate losses `S = Y_1 + ... + Y_N` with NBRIG claim counts `N` and
//! i.i.d. integer severities `Y >= 1`.
//!
//! The recursion couples the aggregate PMF at `r` with the one at `r + 1`:
//!
//! ```text
//! g(x; s) = sum_y ((s y + x - y) / x) f(y) g(x-y; s) - sum_y (s y / x) f(y) g(x-y; s+1),   x >= 1
//! g(0; s) = P(N = 0; s)
//! ```
//!
//! so shifts `s = r + j` are filled from `j = x_max` down to `j = 0`. With
//! the severity `{1: 1}` every operation coincides with the count recursion,
//! which makes the two outputs bit-identical. Cells where the running error
//! bound exceeds [`TRUST_LIMIT`] are taken from the convolution sum instead.

use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dd::{Dd, DD_EPS};
use crate::dist::{finish, CountSampler, NbrigParams, PmfTable, Seeds, TRUST_LIMIT};
use crate::error::{NbrigError, Result};
use crate::par::{self, Execution};
use crate::special::compensated_sum;

/// Tolerance on the total severity mass.
pub const SEVERITY_MASS_TOL: f64 = 1e-12;

/// Discrete severity distribution on `1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityPmf {
    /// `probs[y]` is `f(y)`; `probs[0]` is always zero.
    probs: Vec<f64>,
}

impl SeverityPmf {
    /// Builds from `(y, f(y))` pairs. Rejects `f(0) > 0`, negative or
    /// repeated entries, and total mass outside `1 ± 1e-12`.
    pub fn new<I: IntoIterator<Item = (u64, f64)>>(pairs: I) -> Result<Self> {
        let mut probs = vec![0.0];
        let mut seen = vec![false];
        for (y, f) in pairs {
            if !(f.is_finite() && f >= 0.0) {
                return Err(NbrigError::InvalidData(format!(
                    "severity probability f({y}) = {f} must be finite and nonnegative"
                )));
            }
            if y == 0 && f > 0.0 {
                return Err(NbrigError::InvalidData(format!(
                    "severity has f(0) = {f} > 0; support must start at 1. \
                     Fold the zero-claim mass into the count distribution (thin N by 1 - f(0)) \
                     and renormalize f over y >= 1"
                )));
            }
            let y = usize::try_from(y)
                .map_err(|_| NbrigError::InvalidData(format!("severity value {y} too large")))?;
            if y >= probs.len() {
                probs.resize(y + 1, 0.0);
                seen.resize(y + 1, false);
            }
            if seen[y] {
                return Err(NbrigError::InvalidData(format!(
                    "severity value {y} listed twice"
                )));
            }
            seen[y] = true;
            probs[y] = f;
        }
        let mass = compensated_sum(probs.iter().copied());
        if (mass - 1.0).abs() > SEVERITY_MASS_TOL {
            return Err(NbrigError::InvalidData(format!(
                "severity probabilities sum to {mass}, not 1"
            )));
        }
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Ok(SeverityPmf { probs })
    }

    /// Unit mass at `y`.
    pub fn degenerate(y: u64) -> Result<Self> {
        Self::new([(y, 1.0)])
    }

    pub fn max_y(&self) -> u64 {
        self.probs.len() as u64 - 1
    }

    pub fn prob(&self, y: u64) -> f64 {
        self.probs.get(y as usize).copied().unwrap_or(0.0)
    }

    /// `f(0), f(1), ..., f(max_y)`.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(y, f)| y as f64 * f))
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        compensated_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(y, f)| (y as f64 - mu).powi(2) * f),
        )
    }
}

/// Claim counts above this are summed by the normal approximation.
pub const EXACT_CLAIMS_LIMIT: u64 = 1_000_000;

/// Simulated aggregate losses. Each draw takes `N` from the count sampler and
/// adds `N` severity draws; for `N >` [`EXACT_CLAIMS_LIMIT`] the sum is drawn
/// from `Normal(N mean, N var)` and rounded, saturating at `u64::MAX`.
pub fn sample_aggregate(
    p: &NbrigParams,
    f: &SeverityPmf,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(NbrigError::Domain("sample size must be at least 1".into()));
    }
    let counts = CountSampler::new(p)?;
    let pick = WeightedIndex::new(f.as_slice())
        .map_err(|e| NbrigError::InvalidData(format!("severity sampler: {e}")))?;
    let (mu, var) = (f.mean(), f.variance());
    Ok(par::sample_in_chunks(exec, n, seed, |rng| {
        let claims = counts.draw(rng);
        if claims <= EXACT_CLAIMS_LIMIT {
            (0..claims).fold(0u64, |acc, _| acc + pick.sample(rng) as u64)
        } else {
            let k = claims as f64;
            let z: f64 = StandardNormal.sample(rng);
            let loss = (k * mu + (k * var).sqrt() * z).round();
            if loss >= u64::MAX as f64 {
                u64::MAX
            } else {
                loss.max(0.0) as u64
            }
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateMethod {
    Recursion,
    /// Recursion up to `oracle_from - 1`, convolution sum from there on.
    Hybrid,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateDist {
    pub params: NbrigParams,
    /// `P(S = 0)`.
    pub atom0: f64,
    /// `P(S = x)` for `x = 1..=x_max`.
    pub probs: Vec<f64>,
    /// Mass not represented in `atom0` and `probs`.
    pub tail: f64,
    pub method: AggregateMethod,
    /// First `x` taken from the convolution sum, if any.
    pub oracle_from: Option<u64>,
}

impl AggregateDist {
    pub fn x_max(&self) -> u64 {
        self.probs.len() as u64
    }

    /// `P(S = x)` for `x = 0..=x_max`.
    pub fn masses(&self) -> Vec<f64> {
        std::iter::once(self.atom0)
            .chain(self.probs.iter().copied())
            .collect()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses().into_iter().chain([self.tail]))
    }

    /// `P(S > x)` for `x <= x_max`, summed over the represented upper cells and the tail.
    pub fn survival(&self, x: u64) -> f64 {
        let m = self.masses();
        compensated_sum(m[(x as usize + 1).min(m.len())..].iter().copied().chain([self.tail]))
    }
}

/// Truncated convolution with the mass beyond `x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub probs: Vec<f64>,
    pub tail: f64,
}

/// `(a * b)(x)` for `x = 0..=x_max`; products landing above `x_max` are
/// accumulated in `tail`.
pub fn convolve(a: &[f64], b: &[f64], x_max: u64) -> Convolution {
    let n = x_max as usize + 1;
    let mut probs = vec![0.0; n];
    let mut tail = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (k, &bk) in b.iter().enumerate() {
            let v = ai * bk;
            if i + k < n {
                probs[i + k] += v;
            } else {
                tail += v;
            }
        }
    }
    Convolution { probs, tail }
}

/// `sum_{n <= n_max} P(N = n) f^{*n}(x)` for `x = 0..=x_max`, by repeated
/// convolution. `tail` holds the convolution mass above `x_max` plus
/// `P(N > n_max)`.
pub fn aggregate_bruteforce(
    p: &NbrigParams,
    f: &SeverityPmf,
    x_max: u64,
    n_max: u64,
) -> Result<AggregateDist> {
    // f(0) = 0, so more than x_max claims never land at or below x_max
    let n_eff = n_max.min(x_max);
    let counts = PmfTable::new(*p, n_eff, Execution::Sequential)?;
    let (masses, conv_tail) = bruteforce_masses(&counts.probs, f, x_max);
    Ok(AggregateDist {
        params: *p,
        atom0: masses[0],
        probs: masses[1..].to_vec(),
        // more than n_eff claims always exceed x_max or n_max
        tail: conv_tail + counts.tail_mass,
        method: AggregateMethod::BruteForce,
        oracle_from: Some(0),
    })
}

/// Convolution sum over the given count probabilities; returns the masses on
/// `0..=x_max` and the convolution mass above `x_max`.
fn bruteforce_masses(counts: &[f64], f: &SeverityPmf, x_max: u64) -> (Vec<f64>, f64) {
    let n = x_max as usize + 1;
    let mut masses = vec![0.0; n];
    let mut tail = 0.0;
    let mut power = vec![0.0; n];
    power[0] = 1.0;
    let mut power_tail = 0.0;
    let f_mass = compensated_sum(f.as_slice().iter().copied());
    for (k, &pk) in counts.iter().enumerate() {
        if k > 0 {
            let c = convolve(&power, f.as_slice(), x_max);
            power_tail = power_tail * f_mass + c.tail;
            power = c.probs;
        }
        for (m, v) in masses.iter_mut().zip(&power) {
            *m += pk * v;
        }
        tail += pk * power_tail;
    }
    (masses, tail)
}

/// Aggregate PMF by the two-level recursion, falling back to the
/// convolution sum for cells whose error bound exceeds [`TRUST_LIMIT`].
pub fn aggregate_pmf(p: &NbrigParams, f: &SeverityPmf, x_max: u64) -> Result<AggregateDist> {
    let mut seeds = Seeds::new(p);
    seeds.extend_to(p, x_max);
    let fy: Vec<(usize, f64)> = f
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(y, &v)| (y, v))
        .collect();
    let r = Dd::new(p.r());

    // g and its error bound at shift j + 1, scaled by 1 / P(N = 0; r)
    let mut upper: Vec<Dd> = Vec::new();
    let mut upper_err: Vec<f64> = Vec::new();
    for j in (0..=x_max as usize).rev() {
        let len = x_max as usize - j + 1;
        let s = r + j as f64;
        let mut g = Vec::with_capacity(len);
        let mut err = Vec::with_capacity(len);
        g.push(seeds.scaled[j]);
        err.push(seeds.scaled[j].hi * seeds.rel_err[j]);
        for x in 1..len {
            let mut sum_a = Dd::ZERO;
            let mut sum_b = Dd::ZERO;
            let (mut prop_a, mut prop_b) = (0.0, 0.0);
            let (mut abs_a, mut abs_b) = (0.0, 0.0);
            let mut terms = 0usize;
            for &(y, fv) in fy.iter().take_while(|(y, _)| *y <= x) {
                let a = (s * y as f64 + (x - y) as f64) / x as f64;
                let b = s * y as f64 / x as f64;
                let af = a * fv;
                let bf = b * fv;
                let ta = af * g[x - y];
                let tb = bf * upper[x - y];
                sum_a += ta;
                sum_b += tb;
                prop_a += af.hi * err[x - y];
                prop_b += bf.hi * upper_err[x - y];
                abs_a += ta.hi.abs();
                abs_b += tb.hi.abs();
                terms += 1;
            }
            g.push(sum_a - sum_b);
            let mut e = prop_a + prop_b + DD_EPS * 6.0 * (abs_a + abs_b);
            if terms > 1 {
                e += DD_EPS * 2.0 * terms as f64 * (abs_a + abs_b);
            }
            err.push(e);
        }
        upper = g;
        upper_err = err;
    }

    let mut masses = Vec::with_capacity(x_max as usize + 1);
    let mut oracle_from = None;
    for x in 0..=x_max as usize {
        let ev = finish(&seeds, 0.0, upper[x], upper_err[x], crate::dist::Method::Recursive);
        if ev.rel_err > TRUST_LIMIT {
            oracle_from = Some(x as u64);
            break;
        }
        masses.push(ev.value);
    }
    let method = match oracle_from {
        None => AggregateMethod::Recursion,
        Some(0) => AggregateMethod::BruteForce,
        Some(_) => AggregateMethod::Hybrid,
    };
    if let Some(from) = oracle_from {
        let counts = PmfTable::new(*p, x_max, Execution::default())?;
        let (oracle, _) = bruteforce_masses(&counts.probs, f, x_max);
        masses.extend_from_slice(&oracle[from as usize..]);
    }
    let tail = (1.0 - compensated_sum(masses.iter().copied())).max(0.0);
    Ok(AggregateDist {
        params: *p,
        atom0: masses[0],
        probs: masses[1..].to_vec(),
        tail,
        method,
        oracle_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_severity_losses_are_counts() {
        let p = NbrigParams::new(2.03, 24.87, 17.42).unwrap();
        let f = SeverityPmf::degenerate(1).unwrap();
        let losses = sample_aggregate(&p, &f, 20_000, 4, Execution::Parallel).unwrap();
        let mean = losses.iter().map(|&v| v as f64).sum::<f64>() / 20_000.0;
        let se = (p.variance().unwrap() / 20_000.0).sqrt();
        assert!((mean - p.mean().unwrap()).abs() < 4.0 * se);
        let f3 = SeverityPmf::degenerate(3).unwrap();
        let tripled = sample_aggregate(&p, &f3, 1000, 4, Execution::Sequential).unwrap();
        assert!(tripled.iter().all(|v| v % 3 == 0));
    }

    fn table1() -> NbrigParams {
        NbrigParams::new(3.4, 61.4973, 35.8961).unwrap()
    }

    #[test]
    fn severity_validation() {
        assert!(SeverityPmf::new([(0, 0.1), (1, 0.9)]).is_err());
        assert!(SeverityPmf::new([(1, 0.5), (2, 0.4)]).is_err());
        assert!(SeverityPmf::new([(1, 0.5), (1, 0.5)]).is_err());
        assert!(SeverityPmf::new([(1, -0.5), (2, 1.5)]).is_err());
        let f = SeverityPmf::new([(3, 0.25), (1, 0.75), (0, 0.0)]).unwrap();
        assert_eq!(f.max_y(), 3);
        assert_eq!(f.prob(2), 0.0);
    }

    #[test]
    fn unit_severity_is_the_count_pmf() {
        let p = table1();
        let agg = aggregate_pmf(&p, &SeverityPmf::degenerate(1).unwrap(), 40).unwrap();
        let table = PmfTable::new(p, 40, Execution::Sequential).unwrap();
        assert_eq!(agg.masses(), table.probs);
        assert_eq!(agg.method, AggregateMethod::Hybrid);
    }

    #[test]
    fn atom_is_the_mgf() {
        let p = table1();
        let f = SeverityPmf::new([(1, 0.5), (2, 0.5)]).unwrap();
        let agg = aggregate_pmf(&p, &f, 5).unwrap();
        assert_eq!(agg.atom0, p.mix().log_mgf(-3.4).unwrap().exp());
    }

    #[test]
    fn convolution_identity_and_tail() {
        let a = [0.2, 0.5, 0.3];
        let b = [0.0, 0.6, 0.4];
        let c = convolve(&[1.0], &b, 5);
        assert_eq!(&c.probs[..3], &b);
        let ab = convolve(&a, &b, 2);
        assert!((compensated_sum(ab.probs.iter().copied()) + ab.tail - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bruteforce_with_no_claims() {
        let p = table1();
        let f = SeverityPmf::new([(1, 0.5), (2, 0.5)]).unwrap();
        let agg = aggregate_bruteforce(&p, &f, 6, 0).unwrap();
        assert_eq!(agg.atom0, p.pmf(0).unwrap());
        assert!(agg.probs.iter().all(|&v| v == 0.0));
    }
}
