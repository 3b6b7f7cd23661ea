use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synth::{synth_lasso, SynthSpec};
use super::HarnessError;
use crate::diagnostics::{ReferenceBudget, ReferenceMethod};
use crate::model::{
    build_graph_pattern, build_lasso, load_libsvm, ConstrainedProblem, Dataset, FiniteSumPart, GraphSource,
    LeastSquaresLoss, LipschitzConvention, LogisticLoss, LossKind, Normalization, Split,
};
use crate::solvers::{SnapshotRule, SolverKind, SolverOptions};

pub const DEFAULT_MU: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SynthSpec),
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        dimension: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    #[default]
    Identity,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub data: DataSource,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub split: SplitKind,
    #[serde(default)]
    pub graph: Option<GraphSource>,
    #[serde(default)]
    pub normalization: Normalization,
    /// Trailing fraction of samples held out for the test loss.
    #[serde(default)]
    pub test_fraction: f64,
}

fn default_mu() -> f64 {
    DEFAULT_MU
}

/// Per-solver settings; unset fields fall back to [`SolverOptions::default`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_rule: Option<SnapshotRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<bool>,
}

/// A solver given either by name or with settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolverEntry {
    Name(SolverKind),
    Spec(SolverSpec),
}

impl SolverEntry {
    pub fn spec(&self) -> SolverSpec {
        match self {
            SolverEntry::Name(kind) => SolverSpec { name: *kind, ..Default::default() },
            SolverEntry::Spec(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverEntry>,
    /// Number of epochs `S`.
    pub epochs: usize,
    /// Inner iterations per epoch; `2n/b` when unset.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub paper_lipschitz: bool,
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub record_identities: bool,
    #[serde(default)]
    pub record_wall_time: bool,
    /// Reference solve for the objective gap; `null` disables it.
    #[serde(default = "default_reference")]
    pub reference: Option<ReferenceBudget>,
    #[serde(default)]
    pub reference_method: ReferenceMethod,
    #[serde(default)]
    pub sag_memory_budget: Option<u64>,
}

fn default_batch() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_reference() -> Option<ReferenceBudget> {
    Some(ReferenceBudget::default())
}

/// Training problem plus the optional held-out loss.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: ConstrainedProblem,
    pub train: Arc<Dataset>,
    pub test: Option<Arc<dyn FiniteSumPart>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let DataSource::Libsvm { path: data, .. } = &mut cfg.problem.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        let p = &self.problem;
        if !(p.mu > 0.0) || !p.mu.is_finite() {
            return bad(format!("mu must be positive, got {}", p.mu));
        }
        if !(0.0..1.0).contains(&p.test_fraction) {
            return bad(format!("test_fraction must be in [0, 1), got {}", p.test_fraction));
        }
        if p.split == SplitKind::Graph && p.graph.is_none() {
            return bad("split \"graph\" needs a graph source".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.solvers {
            if !seen.insert(s.spec().name) {
                return bad(format!("solver {} listed twice", s.spec().name));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn lipschitz_convention(&self) -> LipschitzConvention {
        if self.paper_lipschitz {
            LipschitzConvention::Paper
        } else {
            LipschitzConvention::Safe
        }
    }

    /// Loads or generates the data, normalizes it, holds out the test part and
    /// assembles the constrained problem.
    pub fn build_problem(&self) -> Result<BuiltProblem, HarnessError> {
        let p = &self.problem;
        let raw = match &p.data {
            DataSource::Synthetic(spec) => synth_lasso(spec, p.loss)?.dataset,
            DataSource::Libsvm { path, dimension } => load_libsvm(path, *dimension)?,
        };
        let data = raw.normalized(p.normalization);
        let n_test = (data.n() as f64 * p.test_fraction).floor() as usize;
        let (train, test) = if n_test > 0 {
            let (a, b) = data.split_at(data.n() - n_test);
            (a, Some(b))
        } else {
            (data, None)
        };
        if train.n() == 0 {
            return Err(HarnessError::Config("no training samples left after the test split".into()));
        }
        let split = match p.split {
            SplitKind::Identity => Split::Identity,
            SplitKind::Graph => {
                let source = p.graph.as_ref().expect("validated");
                Split::Graph(build_graph_pattern(source, &train)?)
            }
        };
        let train = Arc::new(train);
        let problem = build_lasso(train.clone(), p.loss, p.mu, split, self.lipschitz_convention())?;
        let test: Option<Arc<dyn FiniteSumPart>> = match test {
            None => None,
            Some(t) => {
                let t = Arc::new(t);
                Some(match p.loss {
                    LossKind::Squared => Arc::new(LeastSquaresLoss::new(t, self.paper_lipschitz)?),
                    LossKind::Logistic => Arc::new(LogisticLoss::new(t)?),
                })
            }
        };
        Ok(BuiltProblem { problem, train, test })
    }

    pub fn epoch_length(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| SolverOptions::default_m(n, self.batch))
    }

    /// Solver options for one `(solver, seed)` run, metrics left default.
    pub fn solver_options(&self, spec: &SolverSpec, n: usize, seed: u64) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            beta: spec.beta.unwrap_or(d.beta),
            rho: spec.rho.unwrap_or(d.rho),
            beta_max: spec.beta_max.unwrap_or(d.beta_max),
            m: self.epoch_length(n),
            batch: self.batch,
            epochs: self.epochs,
            seed,
            sigma: spec.sigma.unwrap_or(d.sigma),
            c: spec.c.unwrap_or(d.c),
            tau: spec.tau.unwrap_or(d.tau),
            l1_override: spec.l1,
            l2_override: spec.l2,
            snapshot_rule: spec.snapshot_rule.unwrap_or_default(),
            warm_start: spec.warm_start.unwrap_or(self.warm_start),
            sag_memory_budget: self.sag_memory_budget.unwrap_or(d.sag_memory_budget),
            record_steps: self.record_identities && spec.name == SolverKind::Acc,
            ..d
        }
    }
}
