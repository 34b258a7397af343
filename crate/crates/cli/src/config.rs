use std::collections::BTreeSet;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use arbfront::backtest::{StrategyId, DEFAULT_GAMMA_GRID};
use arbfront::conic::DEFAULT_TOL;
use arbfront::storage::{StorageSpec, TerminalSoc};
use arbfront::uncertainty::DEFAULT_LOGNORMAL_CLIP;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

/// Everything a run needs. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub train_years: Vec<i32>,
    pub test_years: Vec<i32>,
    pub storage: StorageSpec,
    pub gamma_grid: Vec<f64>,
    pub strategies: Vec<StrategyId>,
    pub lognormal_clip: f64,
    pub solver_tol: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_path: PathBuf::from("data/synthetic.csv"),
            train_years: (2018..=2021).collect(),
            test_years: vec![2022, 2023],
            storage: StorageSpec::default(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            strategies: StrategyId::ALL.to_vec(),
            lognormal_clip: DEFAULT_LOGNORMAL_CLIP,
            solver_tol: DEFAULT_TOL,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TerminalArg {
    EqualInitial,
    Free,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run config. Relative paths inside it resolve against its directory.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory for the cache, bundle and reports.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Hourly `timestamp,price` CSV.
    #[arg(long, global = true, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// e.g. `2018-2021` or `2018,2020`.
    #[arg(long, global = true, value_parser = parse_years)]
    pub train_years: Option<Years>,
    #[arg(long, global = true, value_parser = parse_years)]
    pub test_years: Option<Years>,
    /// Comma-separated normalized budgets in [0, 1].
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub gamma_grid: Option<Vec<f64>>,
    /// Comma-separated strategy names, e.g. `poly-mean-std,ellip-cov`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub strategies: Option<Vec<StrategyId>>,
    /// MW.
    #[arg(long, global = true)]
    pub power: Option<f64>,
    /// MWh.
    #[arg(long, global = true)]
    pub energy: Option<f64>,
    #[arg(long, global = true)]
    pub efficiency: Option<f64>,
    /// MWh.
    #[arg(long, global = true)]
    pub initial_soc: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub terminal: Option<TerminalArg>,
    /// $/MWh floor applied before taking logs.
    #[arg(long, global = true)]
    pub lognormal_clip: Option<f64>,
    #[arg(long, global = true)]
    pub solver_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Years(pub Vec<i32>);

fn parse_years(s: &str) -> Result<Years, String> {
    let mut years = Vec::new();
    for part in s.split(',').map(str::trim) {
        let parsed = match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad(part))?, b.trim().parse().map_err(|_| bad(part))?);
                if a > b {
                    return Err(format!("empty year range {part}"));
                }
                (a..=b).collect()
            }
            None => vec![part.parse().map_err(|_| bad(part))?],
        };
        years.extend(parsed);
    }
    Ok(Years(years))
}

fn bad(part: &str) -> String {
    format!("not a year or year range: {part:?}")
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        let o = flags.clone();
        if let Some(v) = o.out {
            cfg.output_dir = v;
        }
        if let Some(v) = o.data {
            cfg.data_path = v;
        }
        if let Some(Years(v)) = o.train_years {
            cfg.train_years = v;
        }
        if let Some(Years(v)) = o.test_years {
            cfg.test_years = v;
        }
        if let Some(v) = o.gamma_grid {
            cfg.gamma_grid = v;
        }
        if let Some(v) = o.strategies {
            cfg.strategies = v;
        }
        let s = &mut cfg.storage;
        o.power.inspect(|&v| s.power_rating = v);
        o.energy.inspect(|&v| s.energy_capacity = v);
        o.efficiency.inspect(|&v| s.efficiency = v);
        o.initial_soc.inspect(|&v| s.initial_soc = v);
        if let Some(t) = o.terminal {
            s.terminal_soc = match t {
                TerminalArg::EqualInitial => TerminalSoc::EqualInitial,
                TerminalArg::Free => TerminalSoc::Free,
            };
        }
        if let Some(v) = o.lognormal_clip {
            cfg.lognormal_clip = v;
        }
        if let Some(v) = o.solver_tol {
            cfg.solver_tol = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data_path, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = normalize(&base.join(&*p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.storage.validate()?;
        if self.gamma_grid.is_empty() {
            bail!("gamma_grid is empty");
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            bail!("gamma_grid value {g} is outside [0, 1]");
        }
        if self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!("gamma_grid must be strictly ascending");
        }
        if self.strategies.is_empty() {
            bail!("no strategies selected");
        }
        if self.train_years.is_empty() {
            bail!("train_years is empty");
        }
        let train: BTreeSet<i32> = self.train_years.iter().copied().collect();
        if let Some(y) = self.test_years.iter().find(|y| train.contains(y)) {
            bail!("year {y} is in both train_years and test_years");
        }
        if !(self.lognormal_clip > 0.0 && self.lognormal_clip.is_finite()) {
            bail!("lognormal_clip must be positive");
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            bail!("solver_tol must be in (0, 1)");
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.output_dir.join("days.json")
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.output_dir.join("models.json")
    }
}

/// Drops `.` and folds `dir/..` without touching the filesystem.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.components().next_back(), Some(Component::Normal(_))) => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    if out.as_os_str().is_empty() {
        out.push(".");
    }
    out
}
