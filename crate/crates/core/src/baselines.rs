//! Poisson and negative binomial comparison models.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_positive, NbrigError, Result};
use crate::fit::{self, CountData, FitOptions, FitReport, Model, ModelParams};
use crate::special::ln_nb_coef;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    lambda: f64,
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        Ok(PoissonParams {
            lambda: check_positive("lambda", lambda)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn ln_pmf(&self, x: u64) -> f64 {
        let x = x as f64;
        x * self.lambda.ln() - self.lambda - ln_gamma(x + 1.0)
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.ln_pmf(x).exp()
    }

    pub fn mean(&self) -> f64 {
        self.lambda
    }

    pub fn variance(&self) -> f64 {
        self.lambda
    }
}

/// `P(X = x) = C(r+x-1, x) p^r (1-p)^x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    r: f64,
    p: f64,
}

impl NbParams {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        let r = check_positive("r", r)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(NbrigError::InvalidParameter {
                name: "p",
                value: p,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(NbParams { r, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ln_pmf(&self, x: u64) -> f64 {
        let tail = if x == 0 {
            0.0
        } else {
            x as f64 * (-self.p).ln_1p()
        };
        ln_nb_coef(self.r, x) + self.r * self.p.ln() + tail
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.ln_pmf(x).exp()
    }

    pub fn mean(&self) -> f64 {
        self.r * (1.0 - self.p) / self.p
    }

    pub fn variance(&self) -> f64 {
        self.r * (1.0 - self.p) / (self.p * self.p)
    }
}

pub fn poisson_pmf(x: u64, lambda: f64) -> Result<f64> {
    Ok(PoissonParams::new(lambda)?.pmf(x))
}

pub fn nb_pmf(x: u64, r: f64, p: f64) -> Result<f64> {
    Ok(NbParams::new(r, p)?.pmf(x))
}

/// Closed-form MLE: the weighted sample mean.
pub fn fit_poisson(data: &CountData) -> Result<FitReport> {
    let mean = data.mean();
    if !(mean > 0.0) {
        return Err(NbrigError::InvalidData(
            "all counts are zero; the Poisson MLE lambda = 0 is outside the parameter space".into(),
        ));
    }
    let params = PoissonParams::new(mean)?;
    let loglik = |theta: &[f64]| match PoissonParams::new(theta[0].exp()) {
        Ok(q) => data
            .cells()
            .iter()
            .map(|&(x, n)| n as f64 * q.ln_pmf(x))
            .sum::<f64>(),
        Err(_) => f64::NEG_INFINITY,
    };
    let theta = [mean.ln()];
    let log_likelihood = loglik(&theta);
    fit::build_report(
        data,
        Model::Poisson,
        ModelParams::Poisson { lambda: mean },
        log_likelihood,
        |x| Ok(params.pmf(x)),
        fit::Convergence::closed_form(fit::gradient_norm(&loglik, &theta)),
        Vec::new(),
    )
}

/// NB log-likelihood in `(ln r, logit p)`.
fn nb_log_likelihood(data: &CountData, theta: &[f64]) -> f64 {
    let r = theta[0].exp();
    let p = 1.0 / (1.0 + (-theta[1]).exp());
    match NbParams::new(r, p) {
        Ok(nb) => data
            .cells()
            .iter()
            .map(|&(x, n)| n as f64 * nb.ln_pmf(x))
            .sum(),
        Err(_) => f64::NEG_INFINITY,
    }
}

fn nb_from_theta(theta: &[f64]) -> Result<NbParams> {
    NbParams::new(theta[0].exp(), 1.0 / (1.0 + (-theta[1]).exp()))
}

/// MLE of `(r, p)` over `(ln r, logit p)` with the shared optimizer.
pub fn fit_nb(data: &CountData, options: &FitOptions) -> Result<FitReport> {
    data.require_distinct_counts(2)?;
    let mean = data.mean();
    let var = data.variance();
    let mut starts: Vec<Vec<f64>> = [0.5f64, 1.0, 2.0, 5.0]
        .iter()
        .map(|&r| vec![r.ln(), (r / mean).ln()])
        .collect();
    if var > mean && mean > 0.0 {
        // moments: r = mean^2 / (var - mean), p = mean / var
        starts.insert(0, vec![(mean * mean / (var - mean)).ln(), (mean / (var - mean)).ln()]);
    }
    let outcome = fit::maximize(|t| nb_log_likelihood(data, t), &starts, options);
    let nb = nb_from_theta(&outcome.theta)?;
    fit::build_report(
        data,
        Model::Nb,
        ModelParams::Nb {
            r: nb.r(),
            p: nb.p(),
        },
        outcome.log_likelihood,
        |x| Ok(nb.pmf(x)),
        outcome.convergence,
        Vec::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nb_zero_is_p_to_the_r() {
        let nb = NbParams::new(1.03267, 0.87).unwrap();
        assert!((nb.pmf(0) - 0.87f64.powf(1.03267)).abs() < 1e-15);
    }

    #[test]
    fn nb_rejects_boundary() {
        assert!(NbParams::new(1.0, 1.0).is_err());
        assert!(NbParams::new(1.0, 0.0).is_err());
        assert!(NbParams::new(0.0, 0.5).is_err());
    }

    #[test]
    fn poisson_values() {
        let p = PoissonParams::new(2.0).unwrap();
        assert!((p.pmf(3) - 8.0 / 6.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(poisson_pmf(1, -1.0).is_err());
    }

    #[test]
    fn theta_mapping_roundtrips() {
        let nb = nb_from_theta(&[0.3f64.ln(), (0.25f64 / 0.75).ln()]).unwrap();
        assert!((nb.r() - 0.3).abs() < 1e-15);
        assert!((nb.p() - 0.25).abs() < 1e-15);
    }
}
