use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::model::{ConstrainedProblem, FiniteSumPart};

pub const CSV_HEADER: &str = "epoch,grad_evals,wall_ms,objective,objective_gap,constraint_violation,test_loss";

/// One row of a [`MetricTrace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub grad_evals: u64,
    pub wall_ms: Option<f64>,
    pub objective: f64,
    pub objective_gap: Option<f64>,
    pub constraint_violation: f64,
    pub test_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricTrace {
    pub records: Vec<EpochRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(tok: &str, line: usize) -> Result<Option<f64>, DiagnosticsError> {
    if tok.is_empty() {
        return Ok(None);
    }
    tok.parse().map(Some).map_err(|_| DiagnosticsError::Csv { line, message: format!("bad number {tok:?}") })
}

impl MetricTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Epochs contiguous from 0 and gradient evaluations strictly increasing.
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        for (i, r) in self.records.iter().enumerate() {
            if r.epoch != i {
                return Err(DiagnosticsError::InvalidTrace(format!("record {i} has epoch {}", r.epoch)));
            }
        }
        for w in self.records.windows(2) {
            if w[1].grad_evals <= w[0].grad_evals {
                return Err(DiagnosticsError::InvalidTrace(format!(
                    "gradient evaluations not increasing at epoch {}",
                    w[1].epoch
                )));
            }
        }
        Ok(())
    }

    /// Floats use shortest round-trip formatting; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch,
                r.grad_evals,
                opt(r.wall_ms),
                r.objective,
                opt(r.objective_gap),
                r.constraint_violation,
                opt(r.test_loss)
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DiagnosticsError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => return Err(DiagnosticsError::Csv { line: 1, message: format!("expected header {CSV_HEADER:?}") }),
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(DiagnosticsError::Csv { line: line_no, message: format!("expected 7 fields, got {}", f.len()) });
            }
            let req = |tok: &str| parse_opt(tok, line_no)?.ok_or(DiagnosticsError::Csv { line: line_no, message: "missing value".into() });
            records.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| DiagnosticsError::Csv { line: line_no, message: "bad epoch".into() })?,
                grad_evals: f[1].parse().map_err(|_| DiagnosticsError::Csv { line: line_no, message: "bad grad_evals".into() })?,
                wall_ms: parse_opt(f[2], line_no)?,
                objective: req(f[3])?,
                objective_gap: parse_opt(f[4], line_no)?,
                constraint_violation: req(f[5])?,
                test_loss: parse_opt(f[6], line_no)?,
            });
        }
        Ok(MetricTrace { records })
    }

    /// Values of a named CSV column, `None` where the field is empty.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, DiagnosticsError> {
        let get: fn(&EpochRecord) -> Option<f64> = match name {
            "epoch" => |r| Some(r.epoch as f64),
            "grad_evals" => |r| Some(r.grad_evals as f64),
            "wall_ms" => |r| r.wall_ms,
            "objective" => |r| Some(r.objective),
            "objective_gap" => |r| r.objective_gap,
            "constraint_violation" => |r| Some(r.constraint_violation),
            "test_loss" => |r| r.test_loss,
            other => return Err(DiagnosticsError::UnknownColumn(other.to_string())),
        };
        Ok(self.records.iter().map(get).collect())
    }
}

/// What to measure at each epoch besides objective and feasibility.
#[derive(Debug, Clone, Default)]
pub struct MetricsConfig {
    /// Reference optimum `F*` for the objective gap.
    pub f_star: Option<f64>,
    /// Held-out loss evaluated at the `x2` block.
    pub test: Option<Arc<dyn FiniteSumPart>>,
    pub record_wall_time: bool,
}

pub(crate) struct Recorder<'a> {
    problem: &'a ConstrainedProblem,
    config: &'a MetricsConfig,
    start: Instant,
    trace: MetricTrace,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(problem: &'a ConstrainedProblem, config: &'a MetricsConfig) -> Self {
        Recorder { problem, config, start: Instant::now(), trace: MetricTrace::default() }
    }

    pub(crate) fn record(&mut self, grad_evals: u64, x1: &[f64], x2: &[f64]) -> &EpochRecord {
        let objective = self.problem.reported_objective(x1, x2);
        let record = EpochRecord {
            epoch: self.trace.records.len(),
            grad_evals,
            wall_ms: self.config.record_wall_time.then(|| self.start.elapsed().as_secs_f64() * 1e3),
            objective,
            objective_gap: self.config.f_star.map(|f| objective - f),
            constraint_violation: self.problem.constraint_violation(x1, x2),
            test_loss: self.config.test.as_ref().map(|t| t.value(x2)),
        };
        self.trace.records.push(record);
        self.trace.records.last().unwrap()
    }

    pub(crate) fn finish(self) -> MetricTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricTrace {
        MetricTrace {
            records: vec![
                EpochRecord {
                    epoch: 0,
                    grad_evals: 0,
                    wall_ms: None,
                    objective: 0.1 + 0.2,
                    objective_gap: Some(-1e-17),
                    constraint_violation: 0.0,
                    test_loss: None,
                },
                EpochRecord {
                    epoch: 1,
                    grad_evals: 400,
                    wall_ms: Some(1.5),
                    objective: 1e-300,
                    objective_gap: None,
                    constraint_violation: 3.25e-9,
                    test_loss: Some(0.5),
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let csv = t.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().nth(1).unwrap(), "0,0,,0.30000000000000004,-0.00000000000000001,0,");
        assert_eq!(MetricTrace::from_csv(&csv).unwrap(), t);
        assert!(MetricTrace::from_csv("a,b\n").is_err());
    }

    #[test]
    fn validation() {
        let mut t = sample();
        assert!(t.validate().is_ok());
        t.records[1].grad_evals = 0;
        assert!(t.validate().is_err());
        let mut t = sample();
        t.records[1].epoch = 2;
        assert!(t.validate().is_err());
    }

    #[test]
    fn columns() {
        let t = sample();
        assert_eq!(t.column("test_loss").unwrap(), vec![None, Some(0.5)]);
        assert_eq!(t.column("constraint_violation").unwrap(), vec![Some(0.0), Some(3.25e-9)]);
        assert!(t.column("nope").is_err());
    }
}
