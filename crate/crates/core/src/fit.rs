//! Maximum-likelihood fitting and goodness-of-fit reporting.
//!
//! The NBRIG log-likelihood is maximized over `(ln r, ln α, ln m)` with
//! Nelder-Mead from a deterministic multi-start set, then polished with
//! finite-difference Newton steps. A converged report certifies that the
//! central-difference gradient at the optimum is below [`GRADIENT_TOL`].

use serde::{Deserialize, Serialize};

use crate::dist::NbrigParams;
use crate::error::{NbrigError, Result};
use crate::optim::{fd_gradient, newton_polish, NelderMead};
use crate::par::{self, Execution};
use crate::special::{chi_square_sf, compensated_sum};
use crate::baselines;

/// Max-norm of the likelihood gradient accepted at a converged optimum.
pub const GRADIENT_TOL: f64 = 1e-3;

/// Step of the gradient check, in transformed coordinates.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Grouped cells must reach this expected frequency.
pub const MIN_EXPECTED: f64 = 5.0;

const GRID_R: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
const GRID_ALPHA: [f64; 3] = [5.0, 25.0, 60.0];
const GRID_M: [f64; 4] = [1.0, 5.0, 20.0, 40.0];

/// Observed frequencies by count, sorted by count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    cells: Vec<(u64, u64)>,
    total: u64,
}

impl CountData {
    /// Builds from `(count, frequency)` pairs in any order; repeated counts
    /// are merged by adding their frequencies.
    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Result<Self> {
        let mut cells: Vec<(u64, u64)> = pairs.into_iter().collect();
        cells.sort_by_key(|c| c.0);
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(cells.len());
        for (x, n) in cells {
            match merged.last_mut() {
                Some(last) if last.0 == x => {
                    last.1 = last.1.checked_add(n).ok_or_else(overflow)?;
                }
                _ => merged.push((x, n)),
            }
        }
        let total = merged
            .iter()
            .try_fold(0u64, |acc, c| acc.checked_add(c.1))
            .ok_or_else(overflow)?;
        if total == 0 {
            return Err(NbrigError::InvalidData("no observations (total frequency is 0)".into()));
        }
        Ok(CountData {
            cells: merged,
            total,
        })
    }

    /// Tabulates raw observations.
    pub fn from_observations(xs: &[u64]) -> Result<Self> {
        Self::from_pairs(xs.iter().map(|&x| (x, 1)))
    }

    pub fn cells(&self) -> &[(u64, u64)] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn x_max(&self) -> u64 {
        self.cells.last().map_or(0, |c| c.0)
    }

    pub fn frequency(&self, x: u64) -> u64 {
        self.cells
            .binary_search_by_key(&x, |c| c.0)
            .map_or(0, |i| self.cells[i].1)
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|&(x, n)| x as f64 * n as f64)) / self.total as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        compensated_sum(
            self.cells
                .iter()
                .map(|&(x, n)| n as f64 * (x as f64 - mean).powi(2)),
        ) / self.total as f64
    }

    pub(crate) fn require_distinct_counts(&self, k: usize) -> Result<()> {
        let distinct = self.cells.iter().filter(|c| c.1 > 0).count();
        if distinct < k {
            return Err(NbrigError::InvalidData(format!(
                "need at least {k} distinct observed counts, found {distinct}"
            )));
        }
        Ok(())
    }
}

fn overflow() -> NbrigError {
    NbrigError::InvalidData("total frequency overflows u64".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Poisson,
    #[serde(rename = "NB")]
    Nb,
    #[serde(rename = "NBRIG")]
    Nbrig,
}

impl Model {
    pub fn n_params(self) -> usize {
        match self {
            Model::Poisson => 1,
            Model::Nb => 2,
            Model::Nbrig => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Poisson => "Poisson",
            Model::Nb => "NB",
            Model::Nbrig => "NBRIG",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelParams {
    Nbrig { r: f64, alpha: f64, m: f64 },
    Nb { r: f64, p: f64 },
    Poisson { lambda: f64 },
}

/// One grouped cell `from..=to` (`to = None`: open-ended upper tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGroup {
    pub from: u64,
    pub to: Option<u64>,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub chi2: f64,
    /// Pearson statistic over the cells `0..=x_max` with no grouping and no tail.
    pub chi2_ungrouped: f64,
    pub df: u32,
    pub p_value: Option<f64>,
    pub grouping: Vec<CellGroup>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: Model,
    pub params: ModelParams,
    pub log_likelihood: f64,
    pub chi2: f64,
    /// Pearson statistic over the cells `0..=x_max` with no grouping and no tail.
    pub chi2_ungrouped: f64,
    pub df: u32,
    pub p_value: Option<f64>,
    pub aic: f64,
    /// Expected frequency of each count `0..=x_max`.
    pub expected: Vec<f64>,
    /// Expected frequency of counts above `x_max`.
    pub expected_tail: f64,
    pub grouping: Vec<CellGroup>,
    pub converged: bool,
    pub n_evals: usize,
    pub gradient_norm: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    pub fn nbrig_params(&self) -> Option<NbrigParams> {
        match self.params {
            ModelParams::Nbrig { r, alpha, m } => NbrigParams::new(r, alpha, m).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Starting points; `None` uses the built-in multi-start grid.
    pub inits: Option<Vec<NbrigParams>>,
    /// Simplex diameter at which Nelder-Mead stops.
    pub tol: f64,
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Grid starts kept after ranking by initial likelihood.
    pub keep_starts: usize,
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            inits: None,
            tol: 1e-8,
            max_evals: 20_000,
            keep_starts: 6,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Convergence {
    pub converged: bool,
    pub n_evals: usize,
    pub gradient_norm: Option<f64>,
}

impl Convergence {
    pub(crate) fn closed_form(gradient_norm: f64) -> Self {
        Convergence {
            converged: gradient_norm < GRADIENT_TOL,
            n_evals: 0,
            gradient_norm: Some(gradient_norm),
        }
    }
}

pub(crate) struct Outcome {
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub convergence: Convergence,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Central-difference gradient max-norm of `loglik` at `theta`.
pub(crate) fn gradient_norm<F: Fn(&[f64]) -> f64>(loglik: &F, theta: &[f64]) -> f64 {
    let mut f = |t: &[f64]| loglik(t);
    let g = max_norm(&fd_gradient(&mut f, theta, GRADIENT_STEP));
    if g.is_finite() {
        g
    } else {
        f64::INFINITY
    }
}

/// Maximizes `loglik` from every start (in parallel under `options.exec`)
/// and returns the best optimum after polishing. Deterministic: ties go to
/// the earlier start.
pub(crate) fn maximize<F>(loglik: F, starts: &[Vec<f64>], options: &FitOptions) -> Outcome
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let nm = NelderMead {
        tol_x: options.tol,
        max_evals: options.max_evals,
        ..NelderMead::default()
    };
    let runs = par::map_indices(options.exec, starts.len(), |i| {
        nm.minimize(|t| -loglik(t), &starts[i])
    });
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value < runs[best].value {
            best = i;
        }
    }
    let run = &runs[best];
    let mut neg = |t: &[f64]| -loglik(t);
    let (theta, value, polish_evals) = newton_polish(&mut neg, &run.x, run.value, 6);
    let g = gradient_norm(&loglik, &theta);
    let n_evals = runs.iter().map(|r| r.n_evals).sum::<usize>() + polish_evals;
    Outcome {
        theta,
        log_likelihood: -value,
        convergence: Convergence {
            converged: run.converged && g < GRADIENT_TOL && value.is_finite(),
            n_evals,
            gradient_norm: Some(g),
        },
    }
}

/// `sum_x n_x ln P(X = x)`.
pub fn log_likelihood(p: &NbrigParams, data: &CountData) -> Result<f64> {
    let xs: Vec<u64> = data.cells.iter().map(|c| c.0).collect();
    let lp = p.log_pmfs(&xs)?;
    Ok(compensated_sum(
        data.cells
            .iter()
            .zip(lp)
            .filter(|(c, _)| c.1 > 0)
            .map(|(c, l)| c.1 as f64 * l),
    ))
}

fn nbrig_from_theta(theta: &[f64]) -> Result<NbrigParams> {
    NbrigParams::new(theta[0].exp(), theta[1].exp(), theta[2].exp())
}

fn nbrig_theta(p: &NbrigParams) -> Vec<f64> {
    vec![p.r().ln(), p.alpha().ln(), p.m().ln()]
}

/// NBRIG MLE. Needs at least two distinct observed counts.
pub fn fit_nbrig_mle(data: &CountData, options: &FitOptions) -> Result<FitReport> {
    data.require_distinct_counts(2)?;
    let loglik = |theta: &[f64]| -> f64 {
        match nbrig_from_theta(theta).and_then(|p| log_likelihood(&p, data)) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    };
    let starts: Vec<Vec<f64>> = match &options.inits {
        Some(inits) if !inits.is_empty() => inits.iter().map(nbrig_theta).collect(),
        _ => {
            let grid: Vec<Vec<f64>> = GRID_R
                .iter()
                .flat_map(|&r| {
                    GRID_ALPHA.iter().flat_map(move |&a| {
                        GRID_M.iter().map(move |&m| vec![r.ln(), a.ln(), m.ln()])
                    })
                })
                .collect();
            let values = par::map_indices(options.exec, grid.len(), |i| loglik(&grid[i]));
            let mut order: Vec<usize> = (0..grid.len()).collect();
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
            order
                .into_iter()
                .take(options.keep_starts.max(1))
                .map(|i| grid[i].clone())
                .collect()
        }
    };
    let outcome = maximize(loglik, &starts, options);
    let p = nbrig_from_theta(&outcome.theta)?;
    let mut warnings = Vec::new();
    if !outcome.convergence.converged {
        warnings.push(format!(
            "optimizer did not converge (gradient max-norm {:e})",
            outcome.convergence.gradient_norm.unwrap_or(f64::NAN)
        ));
    }
    if p.alpha() <= 4.0 {
        warnings.push(format!(
            "alpha = {} <= 4: the variance does not exist, variance-based diagnostics are unavailable",
            p.alpha()
        ));
    }
    build_report(
        data,
        Model::Nbrig,
        ModelParams::Nbrig {
            r: p.r(),
            alpha: p.alpha(),
            m: p.m(),
        },
        outcome.log_likelihood,
        |x| p.pmf(x),
        outcome.convergence,
        warnings,
    )
}

pub(crate) fn build_report<P>(
    data: &CountData,
    model: Model,
    params: ModelParams,
    log_likelihood: f64,
    pmf: P,
    convergence: Convergence,
    mut warnings: Vec<String>,
) -> Result<FitReport>
where
    P: Fn(u64) -> Result<f64>,
{
    let n = data.total as f64;
    let probs = (0..=data.x_max()).map(&pmf).collect::<Result<Vec<f64>>>()?;
    let expected: Vec<f64> = probs.iter().map(|p| n * p).collect();
    let expected_tail = n * (1.0 - compensated_sum(probs.iter().copied())).max(0.0);
    let k = model.n_params();
    let gof = chi_square_gof(data, &expected, expected_tail, k)?;
    warnings.extend(gof.warnings);
    Ok(FitReport {
        model,
        params,
        log_likelihood,
        chi2: gof.chi2,
        chi2_ungrouped: gof.chi2_ungrouped,
        df: gof.df,
        p_value: gof.p_value,
        aic: 2.0 * k as f64 - 2.0 * log_likelihood,
        expected,
        expected_tail,
        grouping: gof.grouping,
        converged: convergence.converged,
        n_evals: convergence.n_evals,
        gradient_norm: convergence.gradient_norm,
        warnings,
    })
}

/// Pearson chi-square after grouping cells from the top count downwards
/// until every group expects at least [`MIN_EXPECTED`] observations. The top
/// group is open-ended and carries `expected_tail`.
pub fn chi_square_gof(
    observed: &CountData,
    expected: &[f64],
    expected_tail: f64,
    n_params: usize,
) -> Result<GoodnessOfFit> {
    let x_max = observed.x_max();
    if expected.len() as u64 != x_max + 1 {
        return Err(NbrigError::InvalidData(format!(
            "expected frequencies cover {} counts, data needs {}",
            expected.len(),
            x_max + 1
        )));
    }
    let mut groups: Vec<CellGroup> = Vec::new();
    let mut open = CellGroup {
        from: x_max,
        to: None,
        observed: 0,
        expected: expected_tail,
    };
    for x in (0..=x_max).rev() {
        open.from = x;
        open.observed += observed.frequency(x);
        open.expected += expected[x as usize];
        if open.expected >= MIN_EXPECTED || x == 0 {
            groups.push(open);
            open = CellGroup {
                from: x,
                to: Some(x.saturating_sub(1)),
                observed: 0,
                expected: 0.0,
            };
        }
    }
    // a short bottom group joins its neighbour above
    if groups.len() > 1 && groups.last().is_some_and(|g| g.expected < MIN_EXPECTED) {
        let bottom = groups.pop().expect("non-empty");
        let above = groups.last_mut().expect("len > 1");
        above.from = bottom.from;
        above.observed += bottom.observed;
        above.expected += bottom.expected;
    }
    groups.reverse();
    let chi2 = groups
        .iter()
        .map(|g| (g.observed as f64 - g.expected).powi(2) / g.expected)
        .sum::<f64>();
    let chi2_ungrouped = expected
        .iter()
        .enumerate()
        .map(|(x, &e)| (observed.frequency(x as u64) as f64 - e).powi(2) / e)
        .sum::<f64>();
    let mut warnings = Vec::new();
    let raw_df = groups.len() as i64 - n_params as i64 - 1;
    let (df, p_value) = if raw_df < 1 {
        warnings.push(format!(
            "only {} grouped cells for {n_params} parameters; df floored at 1 and p-value omitted",
            groups.len()
        ));
        (1, None)
    } else {
        (raw_df as u32, Some(chi_square_sf(chi2, raw_df as u32)))
    };
    Ok(GoodnessOfFit {
        chi2,
        chi2_ungrouped,
        df,
        p_value,
        grouping: groups,
        warnings,
    })
}

/// Poisson, NB and NBRIG fits sorted by ascending AIC.
pub fn compare_models(data: &CountData, options: &FitOptions) -> Result<Vec<FitReport>> {
    let mut reports = vec![
        baselines::fit_poisson(data)?,
        baselines::fit_nb(data, options)?,
        fit_nbrig_mle(data, options)?,
    ];
    reports.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    Ok(reports)
}
