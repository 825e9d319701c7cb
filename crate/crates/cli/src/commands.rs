use anyhow::{Context, Result};
use nbrig::baselines::{fit_nb, fit_poisson};
use nbrig::compound::{aggregate_pmf, sample_aggregate, AggregateMethod};
use nbrig::fit::fit_nbrig_mle;
use nbrig::{
    CountData, Execution, FitOptions, FitReport, Model, ModelParams, NbrigParams, PmfTable,
};
use serde::Serialize;
use serde_json::Value;

use crate::args::{Format, ModelSelector};
use crate::config::RunConfig;
use crate::format::{csv_num, text_num, text_table};
use crate::ingest::{ingest_counts, ingest_severity};

/// A command's output plus diagnostics destined for standard error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifact {
    pub body: String,
    pub diagnostics: Vec<String>,
}

fn nbrig_params(cfg: &RunConfig, command: &str) -> Result<NbrigParams> {
    let (r, a, m) = cfg.params.required(command)?;
    Ok(NbrigParams::new(r, a, m)?)
}

fn fit_options(cfg: &RunConfig) -> Result<FitOptions> {
    let inits = match cfg.params.complete()? {
        Some((r, a, m)) => Some(vec![NbrigParams::new(r, a, m)?]),
        None => None,
    };
    Ok(FitOptions {
        inits,
        tol: cfg.tol,
        exec: Execution::default(),
        ..FitOptions::default()
    })
}

fn selected(model: ModelSelector) -> Vec<Model> {
    match model {
        ModelSelector::Poisson => vec![Model::Poisson],
        ModelSelector::Nb => vec![Model::Nb],
        ModelSelector::Nbrig => vec![Model::Nbrig],
        ModelSelector::All => vec![Model::Poisson, Model::Nb, Model::Nbrig],
    }
}

fn fit_models(cfg: &RunConfig, data: &CountData) -> Result<Vec<FitReport>> {
    let options = fit_options(cfg)?;
    selected(cfg.model)
        .into_iter()
        .map(|m| {
            let rep = match m {
                Model::Poisson => fit_poisson(data),
                Model::Nb => fit_nb(data, &options),
                Model::Nbrig => fit_nbrig_mle(data, &options),
            };
            rep.with_context(|| format!("{m} fit failed"))
        })
        .collect()
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Artifact> {
    let data = load_counts(cfg)?;
    let reports = fit_models(cfg, &data)?;
    Ok(report_artifact(cfg.format, &data, &reports))
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Artifact> {
    let data = load_counts(cfg)?;
    let mut reports = fit_models(cfg, &data)?;
    reports.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    Ok(report_artifact(cfg.format, &data, &reports))
}

fn load_counts(cfg: &RunConfig) -> Result<CountData> {
    let path = cfg.input.as_ref().context("no input file")?;
    Ok(ingest_counts(path)?)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    model: Model,
    params: &'a ModelParams,
    log_likelihood: f64,
    chi2: f64,
    chi2_ungrouped: f64,
    df: u32,
    p_value: Option<f64>,
    aic: f64,
    expected: &'a [f64],
    expected_tail: f64,
    observed: Vec<u64>,
    converged: bool,
    n_evals: usize,
    gradient_norm: Option<f64>,
    warnings: &'a [String],
}

fn params_text(p: &ModelParams) -> String {
    match *p {
        ModelParams::Nbrig { r, alpha, m } => format!(
            "r={} alpha={} m={}",
            text_num(r),
            text_num(alpha),
            text_num(m)
        ),
        ModelParams::Nb { r, p } => format!("r={} p={}", text_num(r), text_num(p)),
        ModelParams::Poisson { lambda } => format!("lambda={}", text_num(lambda)),
    }
}

fn report_artifact(format: Format, data: &CountData, reports: &[FitReport]) -> Artifact {
    let mut diagnostics = Vec::new();
    for r in reports {
        for w in &r.warnings {
            diagnostics.push(format!("{}: {w}", r.model));
        }
    }
    let observed: Vec<u64> = (0..=data.x_max()).map(|x| data.frequency(x)).collect();
    let body = match format {
        Format::Json => {
            let items: Vec<JsonReport> = reports
                .iter()
                .map(|r| JsonReport {
                    model: r.model,
                    params: &r.params,
                    log_likelihood: r.log_likelihood,
                    chi2: r.chi2,
                    chi2_ungrouped: r.chi2_ungrouped,
                    df: r.df,
                    p_value: r.p_value,
                    aic: r.aic,
                    expected: &r.expected,
                    expected_tail: r.expected_tail,
                    observed: observed.clone(),
                    converged: r.converged,
                    n_evals: r.n_evals,
                    gradient_norm: r.gradient_norm,
                    warnings: &r.warnings,
                })
                .collect();
            json(&items)
        }
        Format::Csv => {
            let mut header: Vec<String> = [
                "model",
                "r",
                "alpha",
                "m",
                "p",
                "lambda",
                "log_likelihood",
                "chi2",
                "chi2_ungrouped",
                "df",
                "p_value",
                "aic",
                "converged",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend((0..=data.x_max()).map(|x| format!("expected_{x}")));
            header.push("expected_tail".into());
            let mut rows = vec![header];
            for r in reports {
                let (pr, pa, pm, pp, pl) = match r.params {
                    ModelParams::Nbrig { r, alpha, m } => (Some(r), Some(alpha), Some(m), None, None),
                    ModelParams::Nb { r, p } => (Some(r), None, None, Some(p), None),
                    ModelParams::Poisson { lambda } => (None, None, None, None, Some(lambda)),
                };
                let opt = |v: Option<f64>| v.map(csv_num).unwrap_or_default();
                let mut row = vec![
                    r.model.name().to_string(),
                    opt(pr),
                    opt(pa),
                    opt(pm),
                    opt(pp),
                    opt(pl),
                    csv_num(r.log_likelihood),
                    csv_num(r.chi2),
                    csv_num(r.chi2_ungrouped),
                    r.df.to_string(),
                    opt(r.p_value),
                    csv_num(r.aic),
                    r.converged.to_string(),
                ];
                row.extend(r.expected.iter().map(|&e| csv_num(e)));
                row.push(csv_num(r.expected_tail));
                rows.push(row);
            }
            csv_text(&rows)
        }
        Format::Text => {
            let mut header = vec!["Count".to_string(), "Observed".to_string()];
            header.extend(reports.iter().map(|r| r.model.name().to_string()));
            let mut rows = Vec::new();
            for x in 0..=data.x_max() {
                let mut row = vec![x.to_string(), data.frequency(x).to_string()];
                row.extend(reports.iter().map(|r| text_num(r.expected[x as usize])));
                rows.push(row);
            }
            let mut tail = vec![format!(">{}", data.x_max()), "0".to_string()];
            tail.extend(reports.iter().map(|r| text_num(r.expected_tail)));
            rows.push(tail);
            let mut total = vec!["Total".to_string(), data.total().to_string()];
            total.extend(reports.iter().map(|_| String::new()));
            rows.push(total);
            let mut table = text_table(&header, &rows);
            table.push('\n');
            let mut summary = Vec::new();
            for r in reports {
                summary.push(vec![
                    r.model.name().to_string(),
                    params_text(&r.params),
                    text_num(r.log_likelihood),
                    format!("{}({})", text_num(r.chi2), r.df),
                    r.p_value.map(text_num).unwrap_or_else(|| "-".into()),
                    text_num(r.aic),
                ]);
            }
            let head: Vec<String> = ["Model", "Parameters", "logL", "chi2(df)", "p-value", "AIC"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            table.push_str(&text_table(&head, &summary));
            table
        }
    };
    Artifact { body, diagnostics }
}

fn json<T: Serialize>(value: &T) -> String {
    // through Value so keys are sorted and re-emission is idempotent
    let v: Value = serde_json::to_value(value).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn csv_text(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// `(x, value)` rows in the requested format.
fn column_artifact(
    format: Format,
    name: &str,
    values: &[f64],
    meta: Value,
    diagnostics: Vec<String>,
) -> Artifact {
    let body = match format {
        Format::Csv => {
            let mut rows = vec![vec!["x".to_string(), name.to_string()]];
            rows.extend(
                values
                    .iter()
                    .enumerate()
                    .map(|(x, &v)| vec![x.to_string(), csv_num(v)]),
            );
            csv_text(&rows)
        }
        Format::Text => {
            let rows: Vec<Vec<String>> = values
                .iter()
                .enumerate()
                .map(|(x, &v)| vec![x.to_string(), text_num(v)])
                .collect();
            text_table(&["x".to_string(), name.to_string()], &rows)
        }
        Format::Json => {
            let mut obj = meta;
            obj[name] = serde_json::to_value(values).expect("finite floats");
            json(&obj)
        }
    };
    Artifact { body, diagnostics }
}

pub fn cmd_pmf(cfg: &RunConfig) -> Result<Artifact> {
    let p = nbrig_params(cfg, "pmf")?;
    let table = PmfTable::new(p, cfg.x_max, Execution::default())?;
    let meta = serde_json::json!({
        "params": { "r": p.r(), "alpha": p.alpha(), "m": p.m() },
        "tail_mass": table.tail_mass,
    });
    Ok(column_artifact(cfg.format, "pmf", &table.probs, meta, Vec::new()))
}

pub fn cmd_aggregate(cfg: &RunConfig) -> Result<Artifact> {
    let p = nbrig_params(cfg, "aggregate")?;
    let f = ingest_severity(cfg.severity.as_ref().context("aggregate needs --severity")?)?;
    let agg = aggregate_pmf(&p, &f, cfg.x_max)?;
    let mut diagnostics = Vec::new();
    if agg.method != AggregateMethod::Recursion {
        if let Some(from) = agg.oracle_from {
            diagnostics.push(format!(
                "recursion error bound exceeded; losses from {from} on use the convolution sum"
            ));
        }
    }
    let meta = serde_json::json!({
        "params": { "r": p.r(), "alpha": p.alpha(), "m": p.m() },
        "tail": agg.tail,
        "method": agg.method,
        "oracle_from": agg.oracle_from,
    });
    Ok(column_artifact(cfg.format, "mass", &agg.masses(), meta, diagnostics))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Artifact> {
    let p = nbrig_params(cfg, "simulate")?;
    let (kind, values) = match &cfg.severity {
        Some(path) => {
            let f = ingest_severity(path)?;
            ("loss", sample_aggregate(&p, &f, cfg.n, cfg.seed, Execution::default())?)
        }
        None => ("count", p.sample_with(cfg.n, cfg.seed, Execution::default())?),
    };
    let body = match cfg.format {
        Format::Json => json(&serde_json::json!({
            "params": { "r": p.r(), "alpha": p.alpha(), "m": p.m() },
            "seed": cfg.seed,
            "kind": kind,
            "values": values,
        })),
        Format::Csv | Format::Text => {
            let mut s = String::with_capacity(values.len() * 4 + 8);
            if cfg.format == Format::Csv {
                s.push_str(kind);
                s.push('\n');
            }
            for v in values {
                s.push_str(&v.to_string());
                s.push('\n');
            }
            s
        }
    };
    Ok(Artifact {
        body,
        diagnostics: Vec::new(),
    })
}
