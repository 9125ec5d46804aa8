//! Evaluation report rows and their rendered table layouts.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HeToMt,
    MtToHe,
    Averaged,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::HeToMt => "he-to-mt",
            Direction::MtToHe => "mt-to-he",
            Direction::Averaged => "averaged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method_name: String,
    pub direction: Direction,
    pub split: String,
    pub fid: f64,
    pub wd: f64,
    pub ssim_mean: f64,
    pub ssim_stderr: f64,
    pub n_pairs: usize,
    pub extractor_name: String,
    pub config_hash: String,
}

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: u32,
    pub rows: Vec<ReportRow>,
    pub config: RunConfig,
}

impl EvaluationReport {
    pub fn new(rows: Vec<ReportRow>, config: RunConfig) -> Result<Self> {
        let report = Self {
            version: REPORT_VERSION,
            rows,
            config,
        };
        report.check_averaged_rows()?;
        Ok(report)
    }

    /// The averaged row must equal the arithmetic mean of its two direction
    /// rows, metric by metric.
    pub fn check_averaged_rows(&self) -> Result<()> {
        for avg in self.rows.iter().filter(|r| r.direction == Direction::Averaged) {
            let mut dirs = self.rows.iter().filter(|r| {
                r.method_name == avg.method_name
                    && r.split == avg.split
                    && r.direction != Direction::Averaged
            });
            let (Some(a), Some(b)) = (dirs.next(), dirs.next()) else {
                return Err(CliError::Data(format!(
                    "averaged row for '{}' lacks two direction rows",
                    avg.method_name
                )));
            };
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
            if !(close(avg.fid, (a.fid + b.fid) / 2.0)
                && close(avg.wd, (a.wd + b.wd) / 2.0)
                && close(avg.ssim_mean, (a.ssim_mean + b.ssim_mean) / 2.0)
                && close(avg.ssim_stderr, (a.ssim_stderr + b.ssim_stderr) / 2.0))
            {
                return Err(CliError::Data(format!(
                    "averaged row for '{}' is not the mean of its direction rows",
                    avg.method_name
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let report: EvaluationReport = serde_json::from_str(&text)?;
        report.check_averaged_rows()?;
        Ok(report)
    }
}

/// Merged view over one or more reports, rendered in the Table-1-style
/// layout: one line per method (averaged direction) or two (per direction),
/// methods ordered by ascending validation FID.
pub struct ReportTable {
    rows: Vec<ReportRow>,
    wd_factor: bool,
}

impl ReportTable {
    pub fn from_reports(reports: &[EvaluationReport], per_direction: bool) -> Self {
        let wd_factor = reports.iter().all(|r| r.config.report_wd_factor);
        let mut rows: Vec<ReportRow> = Vec::new();
        for report in reports {
            for row in &report.rows {
                let keep = if per_direction {
                    row.direction != Direction::Averaged
                } else {
                    row.direction == Direction::Averaged
                };
                if keep {
                    rows.push(row.clone());
                }
            }
            // single-direction reports have no averaged row; fall back to
            // whatever directions exist
            if !per_direction {
                for row in &report.rows {
                    if row.direction != Direction::Averaged
                        && !rows.iter().any(|r| {
                            r.method_name == row.method_name && r.split == row.split
                        })
                    {
                        rows.push(row.clone());
                    }
                }
            }
        }
        let mut table = Self { rows, wd_factor };
        table.sort_rows();
        table
    }

    /// Methods ordered by FID on the validation split (ascending), falling
    /// back to any split; directions keep he-to-mt first within a method.
    fn sort_rows(&mut self) {
        let mut val_fid: BTreeMap<&str, f64> = BTreeMap::new();
        let mut any_fid: BTreeMap<&str, f64> = BTreeMap::new();
        for row in &self.rows {
            let slot = if row.split == "val" {
                &mut val_fid
            } else {
                &mut any_fid
            };
            slot.entry(row.method_name.as_str())
                .and_modify(|v| *v = v.min(row.fid))
                .or_insert(row.fid);
        }
        let key: BTreeMap<String, f64> = self
            .rows
            .iter()
            .map(|r| {
                let name = r.method_name.as_str();
                let fid = val_fid
                    .get(name)
                    .or_else(|| any_fid.get(name))
                    .copied()
                    .unwrap_or(f64::INFINITY);
                (name.to_string(), fid)
            })
            .collect();
        let dir_rank = |d: Direction| match d {
            Direction::HeToMt => 0,
            Direction::MtToHe => 1,
            Direction::Averaged => 2,
        };
        self.rows.sort_by(|a, b| {
            let ka = key[&a.method_name];
            let kb = key[&b.method_name];
            ka.total_cmp(&kb)
                .then_with(|| a.method_name.cmp(&b.method_name))
                .then_with(|| a.split.cmp(&b.split))
                .then_with(|| dir_rank(a.direction).cmp(&dir_rank(b.direction)))
        });
    }

    fn wd_header(&self) -> &'static str {
        if self.wd_factor {
            "wd_1e-4"
        } else {
            "wd"
        }
    }

    fn wd_value(&self, raw: f64) -> f64 {
        if self.wd_factor {
            raw * 1e4
        } else {
            raw
        }
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "method,direction,split,fid,{},ssim,ssim_stderr,n_pairs,extractor,config_hash",
            self.wd_header()
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{}",
                r.method_name,
                r.direction.as_str(),
                r.split,
                r.fid,
                self.wd_value(r.wd),
                r.ssim_mean,
                r.ssim_stderr,
                r.n_pairs,
                r.extractor_name,
                r.config_hash
            );
        }
        out
    }

    fn body_rows(&self) -> Vec<[String; 7]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.method_name.clone(),
                    r.direction.as_str().to_string(),
                    r.split.clone(),
                    format!("{:.2}", r.fid),
                    format!("{:.2}", self.wd_value(r.wd)),
                    format!("{:.3} \u{b1} {:.3}", r.ssim_mean, r.ssim_stderr),
                    r.n_pairs.to_string(),
                ]
            })
            .collect()
    }

    fn headers(&self) -> [String; 7] {
        [
            "Method".into(),
            "Direction".into(),
            "Split".into(),
            "FID".into(),
            format!("WD ({})", if self.wd_factor { "\u{d7}1e-4" } else { "raw" }),
            "SSIM".into(),
            "Pairs".into(),
        ]
    }

    pub fn render_markdown(&self) -> String {
        let headers = self.headers();
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", headers.join(" | "));
        let _ = writeln!(out, "|{}|", headers.map(|_| "---").join("|"));
        for row in self.body_rows() {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
        out
    }

    pub fn render_text(&self) -> String {
        let headers = self.headers();
        let body = self.body_rows();
        let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row.iter()) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let fmt_row = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(out, "{}", fmt_row(&headers));
        let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        for row in &body {
            let _ = writeln!(out, "{}", fmt_row(row));
        }
        out
    }
}
