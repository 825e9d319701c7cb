//! d-dimensional NBRIG: `X_i | λ ~ NB(r_i, e^-λ)` independently, sharing one
//! `λ ~ RIG(α, m)`. The shared mixing variable induces positive correlation.
//!
//! Given `λ` the sum `X~ = X_1 + ... + X_d` is `NB(r~, e^-λ)` with
//! `r~ = r_1 + ... + r_d`, and the conditional law of the vector given the sum
//! is free of `λ`. Hence
//!
//! ```text
//! P(X = x) = [prod_i C(r_i + x_i - 1, x_i) / C(r~ + x~ - 1, x~)] P(X~ = x~).
//! ```

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::dist::{direct_with_coef, NbrigParams, PRECISION_LIMIT};
use crate::error::{check_positive, NbrigError, Result};
use crate::rig::RigParams;
use crate::special::ln_nb_coef;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvNbrigParams {
    rs: Vec<f64>,
    mix: RigParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MvMoments {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub corr: Vec<Vec<f64>>,
}

impl MvNbrigParams {
    pub fn new(rs: Vec<f64>, alpha: f64, m: f64) -> Result<Self> {
        Self::from_parts(rs, RigParams::new(alpha, m)?)
    }

    pub fn from_parts(rs: Vec<f64>, mix: RigParams) -> Result<Self> {
        if rs.is_empty() {
            return Err(NbrigError::Domain("dimension must be at least 1".into()));
        }
        for &r in &rs {
            check_positive("r_i", r)?;
        }
        Ok(MvNbrigParams { rs, mix })
    }

    pub fn dim(&self) -> usize {
        self.rs.len()
    }

    pub fn rs(&self) -> &[f64] {
        &self.rs
    }

    pub fn mix(&self) -> &RigParams {
        &self.mix
    }

    /// `r~ = sum_i r_i`.
    pub fn r_total(&self) -> f64 {
        self.rs.iter().sum()
    }

    /// Distribution of the component sum.
    pub fn sum_params(&self) -> NbrigParams {
        NbrigParams::from_parts(self.r_total(), self.mix).expect("sum of positive r is positive")
    }

    /// Univariate marginal of component `i`.
    pub fn marginal(&self, i: usize) -> Result<NbrigParams> {
        let r = *self
            .rs
            .get(i)
            .ok_or_else(|| NbrigError::Domain(format!("component {i} out of range")))?;
        NbrigParams::from_parts(r, self.mix)
    }

    fn check_len(&self, xs: &[u64]) -> Result<u64> {
        if xs.len() != self.dim() {
            return Err(NbrigError::Domain(format!(
                "point has {} coordinates, distribution has {}",
                xs.len(),
                self.dim()
            )));
        }
        Ok(xs.iter().sum())
    }

    fn ln_coef_product(&self, xs: &[u64]) -> f64 {
        self.rs.iter().zip(xs).map(|(&r, &x)| ln_nb_coef(r, x)).sum()
    }

    /// Closed-form joint PMF:
    /// `prod_i C(r_i+x_i-1, x_i) sum_j (-1)^j C(x~, j) M(-(r~+j))`.
    /// Fails with a precision error when the alternating sum over `x~`
    /// cancels too far; [`Self::joint_pmf_via_univariate`] has no such limit.
    pub fn joint_pmf(&self, xs: &[u64]) -> Result<f64> {
        let total = self.check_len(xs)?;
        let ev = direct_with_coef(&self.sum_params(), total, self.ln_coef_product(xs));
        let rel_err = ev.rel_err;
        if !(rel_err <= PRECISION_LIMIT) {
            return Err(NbrigError::Precision {
                what: format!("closed-form joint pmf at total count {total}"),
                rel_err,
                limit: PRECISION_LIMIT,
            });
        }
        Ok(ev.value)
    }

    /// Joint PMF through the distribution of the component sum.
    pub fn joint_pmf_via_univariate(&self, xs: &[u64]) -> Result<f64> {
        let total = self.check_len(xs)?;
        let sum = self.sum_params();
        let ln = self.ln_coef_product(xs) - ln_nb_coef(sum.r(), total) + sum.log_pmf(total)?;
        Ok(ln.exp())
    }

    /// Default evaluation path, via the component sum.
    pub fn pmf(&self, xs: &[u64]) -> Result<f64> {
        self.joint_pmf_via_univariate(xs)
    }

    /// Means, variances, covariances `r_i r_j (M(2) - M(1)^2)` and
    /// correlations; needs `alpha > 4`.
    pub fn moments(&self) -> Result<MvMoments> {
        if self.mix.alpha() <= 4.0 {
            return Err(NbrigError::Domain(format!(
                "covariances need alpha > 4, got alpha = {}",
                self.mix.alpha()
            )));
        }
        let m1 = self.mix.mgf_dd(Dd::new(1.0));
        let m2 = self.mix.mgf_dd(Dd::new(2.0));
        let var_e = (m2 - m1.square()).to_f64();
        let marginals: Vec<NbrigParams> = (0..self.dim())
            .map(|i| self.marginal(i))
            .collect::<Result<_>>()?;
        let means = marginals.iter().map(|p| p.mean()).collect::<Result<Vec<_>>>()?;
        let variances = marginals
            .iter()
            .map(|p| p.variance())
            .collect::<Result<Vec<_>>>()?;
        let d = self.dim();
        let mut cov = vec![vec![0.0; d]; d];
        let mut corr = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                cov[i][j] = if i == j {
                    variances[i]
                } else {
                    self.rs[i] * self.rs[j] * var_e
                };
                corr[i][j] = if i == j {
                    1.0
                } else {
                    cov[i][j] / (variances[i] * variances[j]).sqrt()
                };
                if i != j && !(corr[i][j] > 0.0) {
                    return Err(NbrigError::Numerical(format!(
                        "correlation ({i}, {j}) = {} is not positive",
                        corr[i][j]
                    )));
                }
            }
        }
        Ok(MvMoments {
            means,
            variances,
            cov,
            corr,
        })
    }
}

pub fn joint_pmf(xs: &[u64], p: &MvNbrigParams) -> Result<f64> {
    p.joint_pmf(xs)
}

pub fn joint_pmf_via_univariate(xs: &[u64], p: &MvNbrigParams) -> Result<f64> {
    p.joint_pmf_via_univariate(xs)
}

pub fn mv_moments(p: &MvNbrigParams) -> Result<MvMoments> {
    p.moments()
}
