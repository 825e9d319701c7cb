use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::args::{Command, Flags, Format, ModelSelector};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_DRAWS: usize = 1000;
pub const DEFAULT_PMF_X_MAX: u64 = 30;
pub const DEFAULT_AGGREGATE_X_MAX: u64 = 50;

/// Contents of a `--config` file; keys mirror the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub model: Option<ModelSelector>,
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    #[serde(alias = "x_max")]
    pub x_max: Option<u64>,
    pub seed: Option<u64>,
    pub severity: Option<PathBuf>,
    pub tol: Option<f64>,
    pub n: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamOverride {
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
}

impl ParamOverride {
    /// All three parameters, or `None` if none were given.
    pub fn complete(&self) -> Result<Option<(f64, f64, f64)>> {
        match (self.r, self.alpha, self.m) {
            (Some(r), Some(a), Some(m)) => Ok(Some((r, a, m))),
            (None, None, None) => Ok(None),
            _ => bail!("--r, --alpha and --m must be given together"),
        }
    }

    pub fn required(&self, command: &str) -> Result<(f64, f64, f64)> {
        self.complete()?
            .with_context(|| format!("{command} needs --r, --alpha and --m"))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub model: ModelSelector,
    pub params: ParamOverride,
    pub seed: u64,
    pub x_max: u64,
    pub severity: Option<PathBuf>,
    pub tol: f64,
    pub n: usize,
}

impl RunConfig {
    /// Merges flags over the config file over defaults, then validates paths.
    pub fn resolve(command: Command, flags: Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let input = match (flags.input_pos, flags.input) {
            (Some(a), Some(b)) if a != b => {
                bail!("input given twice: {} and {}", a.display(), b.display())
            }
            (a, b) => a.or(b).or(file.input),
        };
        let default_model = match command {
            Command::Fit => ModelSelector::Nbrig,
            _ => ModelSelector::All,
        };
        let default_x_max = match command {
            Command::Aggregate => DEFAULT_AGGREGATE_X_MAX,
            _ => DEFAULT_PMF_X_MAX,
        };
        let cfg = RunConfig {
            command,
            input,
            output: flags.output.or(file.output),
            format: flags.format.or(file.format).unwrap_or(Format::Text),
            model: flags.model.or(file.model).unwrap_or(default_model),
            params: ParamOverride {
                r: flags.r.or(file.r),
                alpha: flags.alpha.or(file.alpha),
                m: flags.m.or(file.m),
            },
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            x_max: flags.x_max.or(file.x_max).unwrap_or(default_x_max),
            severity: flags.severity.or(file.severity),
            tol: flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            n: flags.n.or(file.n).unwrap_or(DEFAULT_DRAWS),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match self.command {
            Command::Fit | Command::Compare => {
                let input = self
                    .input
                    .as_ref()
                    .context("no input file; pass it as an argument or with --input")?;
                require_file(input, "input")?;
            }
            Command::Pmf | Command::Simulate => {
                self.params.required(self.command_name())?;
            }
            Command::Aggregate => {
                self.params.required("aggregate")?;
                if self.severity.is_none() {
                    bail!("aggregate needs --severity");
                }
            }
        }
        if let Some(s) = &self.severity {
            require_file(s, "severity")?;
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("--tol must be positive, got {}", self.tol);
        }
        if self.command == Command::Simulate && self.n == 0 {
            bail!("--n must be at least 1");
        }
        if let Some(out) = &self.output {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
            if let Some(dir) = parent {
                if !dir.is_dir() {
                    bail!("output directory {} does not exist", dir.display());
                }
            }
        }
        Ok(())
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Fit => "fit",
            Command::Compare => "compare",
            Command::Pmf => "pmf",
            Command::Aggregate => "aggregate",
            Command::Simulate => "simulate",
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} file {} does not exist or is not a file", path.display());
    }
    Ok(())
}
