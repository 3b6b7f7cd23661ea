use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SolverSpec};
use super::HarnessError;
use crate::diagnostics::{
    check_multiplier_identities, compute_reference_with, MetricTrace, MetricsConfig, ReferenceMethod, CSV_HEADER,
};
use crate::model::ConstrainedProblem;
use crate::solvers::{solve, SolverError, SolverKind, SolverOptions, ThetaSchedule};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Ok,
    Failed,
}

/// Bookkeeping for one `(solver, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub solver: SolverKind,
    pub seed: u64,
    pub library_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub started_at_ms: Option<u128>,
    pub finished_at_ms: Option<u128>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub f_star: Option<f64>,
    pub residual: Option<f64>,
    pub method: ReferenceMethod,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub config_hash: String,
    pub library_version: String,
    pub reference: Option<ReferenceSummary>,
    pub runs: Vec<RunManifest>,
    pub aggregates: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: ExperimentManifest,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.manifest.runs.iter().filter(|r| r.status == RunStatus::Failed).count()
    }
}

pub fn run_file_name(solver: SolverKind, seed: u64) -> String {
    format!("{solver}_seed{seed}.csv")
}

pub fn aggregate_file_name(solver: SolverKind) -> String {
    format!("{solver}_mean.csv")
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn write_manifest(dir: &Path, manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    write(&dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(manifest).expect("manifest serializes"))
}

/// Rejects options a solver would refuse, before any run starts.
pub(crate) fn check_options(kind: SolverKind, problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<(), SolverError> {
    opts.validate(problem)?;
    match kind {
        SolverKind::Acc => {
            ThetaSchedule::new(opts.c, opts.tau, opts.m)?;
        }
        SolverKind::Sag => {
            let needed = (problem.n() as u64).saturating_mul(problem.dim2() as u64).saturating_mul(8);
            if needed > opts.sag_memory_budget {
                return Err(SolverError::MemoryBudget { needed, budget: opts.sag_memory_budget });
            }
        }
        _ => {}
    }
    Ok(())
}

/// Executes every `(solver, seed)` pair of `config`, writing one CSV per run,
/// one across-seed mean CSV per solver and a manifest into `out_dir`
/// (`config.output_dir` when `None`).
pub fn run(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let out_dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone());
    let built = config.build_problem()?;
    let problem = &built.problem;
    let n = problem.n();

    let specs: Vec<SolverSpec> = config.solvers.iter().map(|s| s.spec()).collect();
    for spec in &specs {
        let opts = config.solver_options(spec, n, config.seeds[0]);
        check_options(spec.name, problem, &opts)
            .map_err(|e| HarnessError::Config(format!("solver {}: {e}", spec.name)))?;
    }
    fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Io { path: out_dir.clone(), source })?;

    let hash = config.hash();
    let version = env!("CARGO_PKG_VERSION").to_string();
    let reference = config.reference.map(|budget| {
        let method = config.reference_method;
        match compute_reference_with(problem, method, budget) {
            Ok(r) => ReferenceSummary {
                f_star: Some(r.f_star),
                residual: Some(r.residual),
                method,
                iterations: Some(r.iterations),
                error: None,
            },
            Err(e) => ReferenceSummary { f_star: None, residual: None, method, iterations: None, error: Some(e.to_string()) },
        }
    });
    let f_star = reference.as_ref().and_then(|r| r.f_star);

    let jobs: Vec<(SolverSpec, u64)> =
        specs.iter().flat_map(|s| config.seeds.iter().map(move |&seed| (s.clone(), seed))).collect();
    let manifest = Mutex::new(ExperimentManifest {
        config_hash: hash.clone(),
        library_version: version.clone(),
        reference,
        runs: jobs
            .iter()
            .map(|(spec, seed)| RunManifest {
                config_hash: hash.clone(),
                solver: spec.name,
                seed: *seed,
                library_version: version.clone(),
                status: RunStatus::Pending,
                error: None,
                started_at_ms: None,
                finished_at_ms: None,
                outputs: Vec::new(),
            })
            .collect(),
        aggregates: Vec::new(),
    });
    write_manifest(&out_dir, &manifest.lock().unwrap())?;

    let metrics = MetricsConfig { f_star, test: built.test.clone(), record_wall_time: config.record_wall_time };
    let traces: Vec<Mutex<Option<MetricTrace>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let io_error: Mutex<Option<HarnessError>> = Mutex::new(None);
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(jobs.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= jobs.len() {
                    break;
                }
                let (spec, seed) = &jobs[idx];
                let started = now_ms();
                let mut opts = config.solver_options(spec, n, *seed);
                opts.metrics = metrics.clone();
                let result = solve(spec.name, problem, &opts);
                let mut outputs = Vec::new();
                let (status, error) = match result {
                    Ok(sol) => {
                        let name = run_file_name(spec.name, *seed);
                        let mut res = write(&out_dir.join(&name), &sol.trace.to_csv());
                        outputs.push(name);
                        if res.is_ok() && !sol.steps.is_empty() {
                            let name = format!("{}_seed{seed}_identities.json", spec.name);
                            res = match check_multiplier_identities(&sol.steps) {
                                Ok(report) => write(
                                    &out_dir.join(&name),
                                    &serde_json::to_string_pretty(&report).expect("report serializes"),
                                ),
                                Err(e) => Err(HarnessError::Diagnostics(e)),
                            };
                            outputs.push(name);
                        }
                        *traces[idx].lock().unwrap() = Some(sol.trace);
                        match res {
                            Ok(()) => (RunStatus::Ok, None),
                            Err(e) => {
                                let msg = e.to_string();
                                io_error.lock().unwrap().get_or_insert(e);
                                (RunStatus::Failed, Some(msg))
                            }
                        }
                    }
                    Err(e) => (RunStatus::Failed, Some(e.to_string())),
                };
                let mut m = manifest.lock().unwrap();
                let entry = &mut m.runs[idx];
                entry.status = status;
                entry.error = error;
                entry.started_at_ms = Some(started);
                entry.finished_at_ms = Some(now_ms());
                entry.outputs = outputs;
                if let Err(e) = write_manifest(&out_dir, &m) {
                    io_error.lock().unwrap().get_or_insert(e);
                }
            });
        }
    });
    if let Some(e) = io_error.into_inner().unwrap() {
        return Err(e);
    }

    let traces: Vec<Option<MetricTrace>> = traces.into_iter().map(|t| t.into_inner().unwrap()).collect();
    let mut manifest = manifest.into_inner().unwrap();
    for spec in &specs {
        let group: Vec<&MetricTrace> = jobs
            .iter()
            .zip(&traces)
            .filter(|((s, _), _)| s.name == spec.name)
            .filter_map(|(_, t)| t.as_ref())
            .collect();
        if let Some(csv) = aggregate_csv(&group) {
            let name = aggregate_file_name(spec.name);
            write(&out_dir.join(&name), &csv)?;
            manifest.aggregates.push(name);
        }
    }
    write_manifest(&out_dir, &manifest)?;
    Ok(RunSummary { out_dir, manifest })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>, count: usize) -> Option<f64> {
    let mut sum = 0.0;
    for v in values {
        sum += v?;
    }
    Some(sum / count as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Row-wise means of traces with equal length, summed in the given order.
/// Gradient evaluations are written as an integer when every run agrees.
pub fn aggregate_csv(traces: &[&MetricTrace]) -> Option<String> {
    let first = traces.first()?;
    let rows = traces.iter().map(|t| t.len()).min()?;
    let k = traces.len();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for i in 0..rows {
        let recs: Vec<_> = traces.iter().map(|t| &t.records[i]).collect();
        let evals = if recs.iter().all(|r| r.grad_evals == first.records[i].grad_evals) {
            first.records[i].grad_evals.to_string()
        } else {
            (recs.iter().map(|r| r.grad_evals as f64).sum::<f64>() / k as f64).to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i,
            evals,
            fmt_opt(mean_of(recs.iter().map(|r| r.wall_ms), k)),
            mean_of(recs.iter().map(|r| Some(r.objective)), k).unwrap(),
            fmt_opt(mean_of(recs.iter().map(|r| r.objective_gap), k)),
            mean_of(recs.iter().map(|r| Some(r.constraint_violation)), k).unwrap(),
            fmt_opt(mean_of(recs.iter().map(|r| r.test_loss), k)),
        )
        .unwrap();
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::EpochRecord;

    fn rec(epoch: usize, objective: f64, gap: Option<f64>) -> EpochRecord {
        EpochRecord {
            epoch,
            grad_evals: 10 * epoch as u64 + 1,
            wall_ms: None,
            objective,
            objective_gap: gap,
            constraint_violation: objective / 2.0,
            test_loss: None,
        }
    }

    #[test]
    fn aggregate_means() {
        let a = MetricTrace { records: vec![rec(0, 1.0, Some(0.5)), rec(1, 0.1, Some(0.05))] };
        let b = MetricTrace { records: vec![rec(0, 2.0, None), rec(1, 0.2, Some(0.15))] };
        let csv = aggregate_csv(&[&a, &b]).unwrap();
        let t = MetricTrace::from_csv(&csv).unwrap();
        assert_eq!(t.records[0].objective, 1.5);
        assert_eq!(t.records[0].objective_gap, None);
        assert_eq!(t.records[1].objective_gap, Some((0.05 + 0.15) / 2.0));
        assert_eq!(t.records[1].grad_evals, 11);
        assert!(aggregate_csv(&[]).is_none());
    }
}
