use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::IdentityReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

/// Pass/fail summary of a diagnostics run, printable as text or JSON.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub entries: Vec<ReportEntry>,
}

impl DiagnosticReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, value: Option<f64>, threshold: Option<f64>, note: impl Into<String>) {
        self.entries.push(ReportEntry { name: name.into(), passed, value, threshold, note: note.into() });
    }

    pub fn add_identities(&mut self, prefix: &str, report: &IdentityReport) {
        for c in &report.checks {
            self.push(
                format!("{prefix}{}", c.name),
                c.max_deviation <= report.tolerance,
                Some(c.max_deviation),
                Some(report.tolerance),
                format!("{} comparisons", c.count),
            );
        }
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let status = if e.passed { "PASS" } else { "FAIL" };
            write!(out, "{status} {}", e.name).unwrap();
            if let Some(v) = e.value {
                write!(out, " value={v:e}").unwrap();
            }
            if let Some(t) = e.threshold {
                write!(out, " threshold={t:e}").unwrap();
            }
            if !e.note.is_empty() {
                write!(out, " ({})", e.note).unwrap();
            }
            out.push('\n');
        }
        let verdict = if self.passed() { "all checks passed" } else { "some checks failed" };
        writeln!(out, "{verdict}").unwrap();
        out
    }
}
