use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::anyhow;
use arbfront::backtest::{calibrate_all, Backtest, DatasetInfo, ModelBundle, ModelSet, BUNDLE_FORMAT_VERSION};
use arbfront::error::Error as CoreError;
use arbfront::market::{day_records, group_days, parse_price_csv, split_by_years, write_price_csv, GroupDiagnostics, PriceDay};
use arbfront::synthetic::{generate, SyntheticConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const EXIT_DATA: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_DATA, error: error.into() }
    }

    /// Solver and convergence failures exit 4, everything else is a data error.
    fn core(error: CoreError, context: String) -> Self {
        let code = if numerical(&error) { EXIT_SOLVER } else { EXIT_DATA };
        Self { code, error: anyhow::Error::new(error).context(context) }
    }
}

fn numerical(e: &CoreError) -> bool {
    match e {
        CoreError::Cell { source, .. } => numerical(source),
        CoreError::NonConvergence { .. } => true,
        other => other.is_solver_failure(),
    }
}

pub type Outcome = Result<(), Failure>;

trait OrData<T> {
    fn or_data(self, msg: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrData<T> for Result<T, E> {
    fn or_data(self, msg: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::data(e.into().context(msg())))
    }
}

/// The `ingest` output: complete days plus how many were dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayCache {
    pub source: String,
    pub diagnostics: GroupDiagnostics,
    pub days: Vec<PriceDay>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    text.push('\n');
    fs::write(path, text).or_data(|| format!("cannot write {}", path.display()))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).or_data(|| format!("cannot create output directory {}", dir.display()))
}

pub fn synth(cfg: &RunConfig, synthetic: &SyntheticConfig) -> Outcome {
    let days = generate(synthetic).map_err(Failure::data)?;
    if let Some(dir) = cfg.data_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let path = &cfg.data_path;
    let file = File::create(path).or_data(|| format!("cannot write {}", path.display()))?;
    write_price_csv(&day_records(&days), BufWriter::new(file)).or_data(|| format!("cannot write {}", path.display()))?;
    println!(
        "wrote {} days ({}–{}, seed {}) to {}",
        days.len(),
        synthetic.first_year,
        synthetic.last_year,
        synthetic.seed,
        path.display()
    );
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Outcome {
    let path = &cfg.data_path;
    let file = File::open(path).or_data(|| format!("cannot open price file {}", path.display()))?;
    let records = parse_price_csv(file).or_data(|| format!("cannot parse {}", path.display()))?;
    let (days, diagnostics) = group_days(&records);
    create_dir(&cfg.output_dir)?;
    let cache = DayCache { source: path.display().to_string(), diagnostics, days };
    write_json(&cfg.cache_path(), &cache)?;
    println!("read {} hourly prices from {}", records.len(), path.display());
    println!("days kept: {}, days dropped: {}", diagnostics.days_kept, diagnostics.days_dropped);
    println!("wrote {}", cfg.cache_path().display());
    Ok(())
}

fn load_cache(cfg: &RunConfig) -> Result<DayCache, Failure> {
    let path = cfg.cache_path();
    let text = fs::read_to_string(&path).or_data(|| format!("cannot read day cache {} (run `ingest` first)", path.display()))?;
    serde_json::from_str(&text).or_data(|| format!("corrupt day cache {}", path.display()))
}

fn split(cfg: &RunConfig, days: &[PriceDay]) -> Result<(Vec<PriceDay>, Vec<PriceDay>), Failure> {
    let train: BTreeSet<i32> = cfg.train_years.iter().copied().collect();
    let test: BTreeSet<i32> = cfg.test_years.iter().copied().collect();
    let ds = split_by_years(days, &train, &test).map_err(Failure::data)?;
    Ok((ds.train_days, ds.test_days))
}

pub fn calibrate(cfg: &RunConfig) -> Outcome {
    let cache = load_cache(cfg)?;
    let (train, _) = split(cfg, &cache.days)?;
    let models = ModelSet::fit(&train, cfg.lognormal_clip).map_err(|e| Failure::core(e, "model fitting failed".into()))?;
    let calibrations = calibrate_all(&models, &cfg.storage, cfg.solver_tol)
        .map_err(|e| Failure::core(e, "budget calibration failed".into()))?;
    let bundle = ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        storage: cfg.storage.clone(),
        train_years: cfg.train_years.clone(),
        train_days: train.len(),
        lognormal_clip: cfg.lognormal_clip,
        solver_tol: cfg.solver_tol,
        models,
        calibrations,
    };
    create_dir(&cfg.output_dir)?;
    write_json(&cfg.bundle_path(), &bundle)?;

    println!("fitted {} models on {} training days", bundle.models.records().len(), train.len());
    for c in &bundle.calibrations {
        match c.r_max() {
            Some(r) => println!("  {:<16} r_max = {r:.6}{}", c.strategy.name(), if c.capped { " (capped)" } else { "" }),
            None => println!("  {:<16} confidence = 0.5 + 0.499·Γ", c.strategy.name()),
        }
    }
    println!("wrote {}", cfg.bundle_path().display());
    if bundle.any_degenerate() {
        let names: Vec<&str> = bundle.calibrations.iter().filter(|c| c.degenerate).map(|c| c.strategy.name()).collect();
        return Err(Failure {
            code: EXIT_DEGENERATE,
            error: anyhow!("no profit is guaranteed even at zero budget for {}; the training prices leave nothing to arbitrage", names.join(", ")),
        });
    }
    Ok(())
}

pub fn frontier(cfg: &RunConfig) -> Outcome {
    let cache = load_cache(cfg)?;
    let path = cfg.bundle_path();
    let text = fs::read_to_string(&path).or_data(|| format!("cannot read model bundle {} (run `calibrate` first)", path.display()))?;
    let bundle = ModelBundle::from_json(&text).or_data(|| format!("cannot load model bundle {}", path.display()))?;
    if bundle.storage != cfg.storage {
        return Err(Failure::data(anyhow!(
            "{} was calibrated for a different storage unit; rerun `calibrate`",
            path.display()
        )));
    }
    if let Some(y) = cfg.test_years.iter().find(|y| bundle.train_years.contains(y)) {
        return Err(Failure::data(anyhow!("test year {y} was used to train {}", path.display())));
    }
    let (_, test) = split(cfg, &cache.days)?;
    let test_days = test.len();
    let info = DatasetInfo {
        source: cache.source.clone(),
        train_years: bundle.train_years.clone(),
        test_years: cfg.test_years.clone(),
        train_days: bundle.train_days,
        test_days,
    };
    let backtest = Backtest::new(bundle.storage, bundle.models, bundle.calibrations, test, bundle.solver_tol)
        .or_data(|| format!("no test days in years {:?}", cfg.test_years))?;
    let report = backtest
        .compare_all(&cfg.strategies, &cfg.gamma_grid, info)
        .map_err(|e| Failure::core(e, "frontier failed".into()))?;

    create_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("frontier.csv");
    let file = File::create(&csv_path).or_data(|| format!("cannot write {}", csv_path.display()))?;
    let mut out = BufWriter::new(file);
    report.write_frontier_csv(&mut out).map_err(Failure::data)?;
    out.flush().map_err(Failure::data)?;
    let report_path = cfg.output_dir.join("report.json");
    let mut json = report.to_json().map_err(Failure::data)?;
    json.push('\n');
    fs::write(&report_path, json).or_data(|| format!("cannot write {}", report_path.display()))?;
    let plot_path = cfg.output_dir.join("plot_frontier.py");
    fs::write(&plot_path, PLOT_SCRIPT).or_data(|| format!("cannot write {}", plot_path.display()))?;

    println!("{test_days} test days, {} cells", report.num_cells());
    println!("{:<16} {:>5} {:>12} {:>12} {:>10}", "strategy", "Γ", "worst case", "expected", "risk/yr");
    for f in &report.frontiers {
        for p in &f.points {
            println!(
                "{:<16} {:>5.2} {:>12.4} {:>12.4} {:>10.2}{}",
                f.strategy.name(),
                p.gamma,
                p.worst_case,
                p.expected_profit,
                p.risk_days_per_year,
                if p.converged { "" } else { "  (iteration cap)" }
            );
        }
    }
    println!("wrote {}, {} and {}", csv_path.display(), report_path.display(), plot_path.display());
    Ok(())
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Expected profit against loss days per year, one line per strategy."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
src = Path(sys.argv[1]) if len(sys.argv) > 1 else here / "frontier.csv"
dst = Path(sys.argv[2]) if len(sys.argv) > 2 else src.with_suffix(".png")

rows = defaultdict(list)
with open(src, newline="") as f:
    for r in csv.DictReader(f):
        rows[r["strategy"]].append((float(r["risk_days_per_year"]), float(r["expected_profit"]), float(r["gamma"])))

fig, ax = plt.subplots(figsize=(7, 5))
for name, pts in rows.items():
    risk, profit, gamma = zip(*pts)
    ax.plot(risk, profit, marker="o", label=name)
    for x, y, g in pts:
        ax.annotate(f"{g:g}", (x, y), textcoords="offset points", xytext=(3, 3), fontsize=7)
ax.set_xlabel("loss days per year")
ax.set_ylabel("expected daily profit ($)")
ax.grid(alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
"#;
