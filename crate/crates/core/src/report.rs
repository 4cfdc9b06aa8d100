//! Evaluation reports and their JSON, Markdown and CSV renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::GroupStatistics;

/// Errors of one recalibration condition on the evaluation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    /// `none` for the uncalibrated scores, otherwise the method name.
    pub method: String,
    /// Number of groups the recalibrator was fitted with.
    #[serde(rename = "G")]
    pub groups: Option<usize>,
    pub smce: f64,
    /// Relative change of `smce` over the uncalibrated row, in percent.
    pub smce_delta: Option<f64>,
    /// GMCE per evaluation group.
    pub gmce: Vec<f64>,
    pub gmce_delta: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFailure {
    pub method: String,
    #[serde(rename = "G")]
    pub groups: Option<usize>,
    pub error: String,
}

/// Statistics of the whole evaluation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallStatistics {
    #[serde(rename = "N")]
    pub records: usize,
    pub tag_types: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub threshold: f64,
    #[serde(rename = "B")]
    pub bins: usize,
    pub eval_groups: usize,
    pub notes: Vec<String>,
    pub rows: Vec<ConditionRow>,
    pub failures: Vec<ConditionFailure>,
    pub overall: OverallStatistics,
    pub group_statistics: Vec<GroupStatistics>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn row(&self, method: &str, groups: Option<usize>) -> Option<&ConditionRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.groups == groups)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Format(other.to_string())),
        }
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Markdown => Ok(render_markdown(report)),
        ReportFormat::Csv => Ok(render_csv(report)),
    }
}

/// Four decimals without the leading zero: `.0065`.
pub fn format_error(value: f64) -> String {
    let s = format!("{value:.4}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// Two decimals with a percent sign and a typographic minus: `−61.08%`.
pub fn format_delta(delta: f64) -> String {
    let s = format!("{delta:.2}");
    if s == "-0.00" {
        return "0.00%".into();
    }
    match s.strip_prefix('-') {
        Some(rest) => format!("\u{2212}{rest}%"),
        None => format!("{s}%"),
    }
}

fn format_count(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn format_share(f: f64) -> String {
    format!("{:.1}%", 100.0 * f)
}

fn display_method(method: &str) -> &str {
    match method {
        "none" => "None",
        "scaling-binning" => "Scaling Binning",
        "isotonic" => "Isotonic Regression",
        "histogram" => "Histogram Binning",
        other => other,
    }
}

fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Calibration report\n");
    let _ = writeln!(out, "- threshold: {}", report.threshold);
    let _ = writeln!(out, "- bins: {}", report.bins);
    let _ = writeln!(out, "- evaluation groups: {}", report.eval_groups);
    for note in &report.notes {
        let _ = writeln!(out, "- {note}");
    }
    out.push('\n');

    let mut header = String::from("| Method | G | SMCE | Δ |");
    let mut rule = String::from("|:--|--:|--:|--:|");
    for g in 1..=report.eval_groups {
        let _ = write!(header, " GMCE {g} | Δ |");
        rule.push_str("--:|--:|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    let delta = |d: &Option<f64>| d.map(format_delta).unwrap_or_default();
    for row in &report.rows {
        let g = row.groups.map_or("—".to_string(), |g| g.to_string());
        let _ = write!(
            out,
            "| {} | {g} | {} | {} |",
            display_method(&row.method),
            format_error(row.smce),
            delta(&row.smce_delta)
        );
        for (v, d) in row.gmce.iter().zip(&row.gmce_delta) {
            let _ = write!(out, " {} | {} |", format_error(*v), delta(d));
        }
        out.push('\n');
    }
    if report.rows.is_empty() {
        return out;
    }

    let _ = writeln!(out, "\n## Group statistics\n");
    let mut header = String::from("| | All |");
    let mut rule = String::from("|:--|--:|");
    for s in &report.group_statistics {
        let _ = write!(header, " Group {} |", s.group + 1);
        rule.push_str("--:|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    let stats = &report.group_statistics;
    let line = |label: &str, all: String, cells: Vec<String>| {
        format!("| {label} | {all} | {} |\n", cells.join(" | "))
    };
    out += &line(
        "N",
        format_count(report.overall.records),
        stats.iter().map(|s| format_count(s.records)).collect(),
    );
    out += &line(
        "Tag types",
        format_count(report.overall.tag_types),
        stats.iter().map(|s| format_count(s.tag_types)).collect(),
    );
    out += &line(
        "Tag freq in train",
        String::new(),
        stats
            .iter()
            .map(|s| {
                format!(
                    "[{}, {}]",
                    format_share(s.min_train_freq),
                    format_share(s.max_train_freq)
                )
            })
            .collect(),
    );
    out += &line(
        "Tokens",
        format_count(report.overall.tokens),
        stats.iter().map(|s| format_count(s.tokens)).collect(),
    );

    if !report.failures.is_empty() {
        let _ = writeln!(out, "\n## Failed conditions\n");
        for f in &report.failures {
            let g = f.groups.map_or("—".to_string(), |g| g.to_string());
            let _ = writeln!(
                out,
                "- {} (G = {g}): {}",
                display_method(&f.method),
                f.error
            );
        }
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\n## Warnings\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

pub const CSV_HEADER: &str = "method,G,metric,group,value,delta_percent";

/// Long format: one line per (condition, metric, group).
fn render_csv(report: &EvaluationReport) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    let opt = |d: Option<f64>| d.map(|d| d.to_string()).unwrap_or_default();
    for row in &report.rows {
        let g = row.groups.map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{g},smce,all,{},{}",
            row.method,
            row.smce,
            opt(row.smce_delta)
        );
        for (i, (v, d)) in row.gmce.iter().zip(&row.gmce_delta).enumerate() {
            let _ = writeln!(out, "{},{g},gmce,{},{v},{}", row.method, i + 1, opt(*d));
        }
    }
    out
}
