use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "instance,mode,solved,plan_length,solver_ms,llm_calls,expansions,branching";

/// One (instance, mode) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub mode: String,
    pub solved: bool,
    pub plan_length: Option<usize>,
    pub solver_ms: u64,
    /// Logical LLM calls.
    pub llm_calls: u64,
    pub expansions: u64,
    /// Generated successors per expansion.
    pub branching: f64,
    /// Shown in table output only; the CSV columns are fixed.
    pub failure: Option<String>,
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            csv_field(&self.instance),
            csv_field(&self.mode),
            self.solved,
            self.plan_length.map(|n| n.to_string()).unwrap_or_default(),
            self.solver_ms,
            self.llm_calls,
            self.expansions,
            self.branching
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

/// Sorts by instance, then mode.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| (&a.instance, &a.mode).cmp(&(&b.instance, &b.mode)));
}

/// Renders rows in deterministic order.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    match format {
        ReportFormat::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            for r in &rows {
                out.push_str(&r.csv_line());
                out.push('\n');
            }
            out
        }
        ReportFormat::Table => table(&rows),
    }
}

fn table(rows: &[ReportRow]) -> String {
    let header = ["instance", "mode", "solved", "length", "solver_ms", "llm_calls", "expansions", "branching", "failure"];
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.instance.clone(),
                r.mode.clone(),
                if r.solved { "yes" } else { "no" }.to_string(),
                r.plan_length.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                r.solver_ms.to_string(),
                r.llm_calls.to_string(),
                r.expansions.to_string(),
                format!("{:.3}", r.branching),
                r.failure.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if (2..8).contains(&i) { format!("{c:>w$}") } else { format!("{c:<w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header.map(String::from));
    for row in &cells {
        line(row);
    }
    out
}

/// Solved/total per mode, e.g. `predict  49/50`.
pub fn summary(rows: &[ReportRow]) -> String {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in rows {
        let c = counts.entry(&r.mode).or_default();
        c.0 += usize::from(r.solved);
        c.1 += 1;
    }
    let width = counts.keys().map(|k| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (mode, (solved, total)) in counts {
        let _ = writeln!(out, "{mode:<width$}  {solved}/{total}");
    }
    out
}
