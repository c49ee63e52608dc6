// SPDX-License-Identifier: Apache-2.0

//! Comparison table rendering (aligned text and CSV) and voltage dumps.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bench::{ComparisonReport, ReportRow};
use crate::error::{Error, Result};

pub const COLUMNS: [&str; 9] = [
    "strategy",
    "# vias added",
    "voltage drop avg (mV)",
    "voltage drop worst (mV)",
    "runtime (s)",
    "power integrity improvement (%)",
    "runtime improvement vs optimal (%)",
    "proven optimal",
    "EM violations",
];

/// Columns that depend on wall-clock time.
pub const TIMING_COLUMNS: [usize; 2] = [4, 6];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (expected csv or text)")),
        }
    }
}

fn na() -> String {
    "N/A".to_string()
}

fn cells(row: &ReportRow, precision: usize) -> [String; 9] {
    [
        row.label.clone(),
        row.vias_added.map_or_else(na, |v| v.to_string()),
        format!("{:.*}", precision, row.drop_avg_mv),
        format!("{:.*}", precision, row.drop_worst_mv),
        row.runtime.map_or_else(na, |t| format!("{:.6}", t.as_secs_f64())),
        format!("{:.1}", row.integrity_improvement_pct),
        row.runtime_improvement_pct.map_or_else(na, |p| format!("{p:.1}")),
        row.proven_optimal.map_or_else(na, |p| p.to_string()),
        row.ir.em_violations.len().to_string(),
    ]
}

pub fn render_text(report: &ComparisonReport) -> String {
    let table: Vec<[String; 9]> = std::iter::once(COLUMNS.map(String::from))
        .chain(report.rows.iter().map(|r| cells(r, 4)))
        .collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in table.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(rule));
            out.push('\n');
        }
    }
    out
}

pub fn render_csv(report: &ComparisonReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidSpec(format!("csv encoding failed: {e}"));
    writer.write_record(COLUMNS).map_err(csv_err)?;
    for row in &report.rows {
        writer.write_record(cells(row, 6)).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidSpec(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(report: &ComparisonReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(render_text(report)),
        ReportFormat::Csv => render_csv(report),
    }
}

/// Writes the rendered table to `path`, or to stdout when `path` is `None`.
pub fn write_report(report: &ComparisonReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let text = render(report, format)?;
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes `<dir>/<label>.json` with the IR summary and every node voltage.
pub fn dump_voltages(report: &ComparisonReport, dir: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    for row in &report.rows {
        let path = dir.join(format!("{}.json", file_stem(&row.label)));
        let mut text = row.ir.to_json(true)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}
