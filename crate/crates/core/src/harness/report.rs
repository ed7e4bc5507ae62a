//! Writing reports to disk and comparing them pairwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::RunReport;
use crate::error::{Error, Result};
use crate::stats::{wilcoxon_signed_rank, WilcoxonResult};

pub const REPORT_FILE: &str = "report.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const PL_CURVE_FILE: &str = "pl_curve.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub report: PathBuf,
    pub convergence: PathBuf,
    pub pl_curve: PathBuf,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes `report.json`, `convergence.csv` and `pl_curve.csv` into `dir`,
/// creating it if needed.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths {
        report: dir.join(REPORT_FILE),
        convergence: dir.join(CONVERGENCE_FILE),
        pl_curve: dir.join(PL_CURVE_FILE),
    };
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(&paths.report, json).map_err(|e| Error::io(&paths.report, e))?;

    let mut w = csv_writer(&paths.convergence)?;
    w.write_record([
        "run",
        "iteration",
        "best_fitness",
        "mean_fitness",
        "elapsed_s",
    ])?;
    for r in &report.runs {
        for row in &r.trace {
            w.serialize((
                r.run,
                row.iteration,
                row.best_fitness,
                row.mean_fitness,
                row.elapsed_s,
            ))?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths.convergence, e))?;

    let mut w = csv_writer(&paths.pl_curve)?;
    w.write_record(["run", "epoch", "log_pl", "mse"])?;
    for r in &report.runs {
        for p in &r.epochs {
            w.serialize((r.run, p.epoch, p.log_pl, p.mse))?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths.pl_curve, e))?;
    Ok(paths)
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonCell {
    Tested(WilcoxonResult),
    /// Every paired difference was zero.
    NoEffectiveSamples,
}

impl ComparisonCell {
    /// `≠` when the difference is significant at 0.05, `=` otherwise.
    pub fn symbol(&self) -> &'static str {
        match self {
            ComparisonCell::Tested(r) if r.significant_at_0_05 => "≠",
            _ => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<ComparisonCell>>,
}

impl ComparisonMatrix {
    /// Plain-text table of `=`/`≠` symbols.
    pub fn render(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.chars().count())
            .max()
            .unwrap_or(0)
            .max(1);
        let mut out = format!("{:width$}", "");
        for l in &self.labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.cells) {
            out.push_str(&format!("{l:width$}"));
            for c in row {
                out.push_str(&format!(" {:>width$}", c.symbol()));
            }
            out.push('\n');
        }
        out
    }
}

fn label(report: &RunReport) -> String {
    let c = &report.config;
    format!(
        "{}-{}{}-{}",
        c.optimizer.algorithm, c.model.kind, c.model.layers, c.training.learner
    )
}

/// Wilcoxon signed-rank tests between the per-run test MSEs of every pair of
/// reports.
pub fn compare_reports(reports: &[&RunReport]) -> Result<ComparisonMatrix> {
    if reports.len() < 2 {
        return Err(Error::Config(
            "comparison needs at least two reports".into(),
        ));
    }
    let samples: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| r.test_mses())
        .collect::<Result<_>>()?;
    if samples.iter().any(|s| s.len() != samples[0].len()) {
        let counts: Vec<usize> = samples.iter().map(Vec::len).collect();
        return Err(Error::Config(format!(
            "reports have unequal run counts {counts:?}"
        )));
    }
    let base: Vec<String> = reports.iter().map(|r| label(r)).collect();
    let labels: Vec<String> = base
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if base.iter().filter(|b| *b == l).count() > 1 {
                format!("{l}#{}", i + 1)
            } else {
                l.clone()
            }
        })
        .collect();
    let n = reports.len();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(match wilcoxon_signed_rank(&samples[i], &samples[j]) {
                Ok(r) => ComparisonCell::Tested(r),
                Err(Error::NoEffectiveSamples) => ComparisonCell::NoEffectiveSamples,
                Err(e) => return Err(e),
            });
        }
        cells.push(row);
    }
    Ok(ComparisonMatrix { labels, cells })
}
