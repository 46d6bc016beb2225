//! Model persistence as JSON. Floats are written in shortest round-trip form
//! and parsed exactly, so save → load is bit-identical for every number.

use std::path::Path;

use mklrt_core::nalgebra::DMatrix;
use mklrt_core::{FittedModel, GevdResult, KfdaVariant, SimplexWeights, Task};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::prep::Preprocess;

pub const MODEL_VERSION: u32 = 1;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for Dense {
    fn from(m: &DMatrix<f64>) -> Self {
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl Dense {
    pub fn to_matrix(&self) -> std::result::Result<DMatrix<f64>, String> {
        if self.rows * self.cols != self.data.len() {
            return Err(format!(
                "{}x{} matrix with {} values",
                self.rows,
                self.cols,
                self.data.len()
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// How the model combines base kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    /// `Σ μ_m K^m`.
    Weighted,
    /// Entrywise geometric mean.
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MklRt,
    Ak,
    Pk,
    Bik,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_gap: f64,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub task: String,
    pub kfda_variant: Option<String>,
    pub method: Method,
    pub combination: Combination,
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub selected: Vec<usize>,
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub rank: usize,
    pub jitter: Option<f64>,
    pub gamma: Dense,
    pub xi: Option<Dense>,
    pub train_ids: Vec<String>,
    pub second_view_ids: Option<Vec<String>>,
    pub preprocess: Vec<Preprocess>,
    pub second_view_preprocess: Option<Preprocess>,
    pub solver: Option<SolverSummary>,
    /// `(σ, score)` pairs from cross-validation, if a grid was searched.
    pub sigma_scores: Vec<(f64, Option<f64>)>,
    pub seed: u64,
    pub config: Option<ExperimentConfig>,
}

fn task_fields(task: Task) -> (String, Option<String>) {
    match task {
        Task::Kfda(v) => (
            "kfda".into(),
            Some(match v {
                KfdaVariant::A => "a".into(),
                KfdaVariant::B => "b".into(),
            }),
        ),
        other => (other.name().to_string(), None),
    }
}

fn parse_task(name: &str, variant: Option<&str>) -> std::result::Result<Task, String> {
    Ok(match (name, variant) {
        ("kfda", Some("a") | None) => Task::Kfda(KfdaVariant::A),
        ("kfda", Some("b")) => Task::Kfda(KfdaVariant::B),
        ("kcca", _) => Task::Kcca,
        ("lkcca", _) => Task::Lkcca,
        ("custom", _) => Task::Custom,
        _ => return Err(format!("unknown task {name:?} (variant {variant:?})")),
    })
}

/// Everything about a fit that the model file records besides the fitted
/// model itself.
#[derive(Debug, Clone)]
pub struct ModelExtras {
    pub method: Method,
    pub combination: Combination,
    pub selected: Vec<usize>,
    pub preprocess: Vec<Preprocess>,
    pub second_view_preprocess: Option<Preprocess>,
    pub solver: Option<SolverSummary>,
    pub sigma_scores: Vec<(f64, Option<f64>)>,
    pub seed: u64,
    pub config: Option<ExperimentConfig>,
}

impl ModelFile {
    pub fn new(model: &FittedModel, extras: ModelExtras) -> Self {
        let (task, kfda_variant) = task_fields(model.task);
        ModelFile {
            format_version: MODEL_VERSION,
            task,
            kfda_variant,
            method: extras.method,
            combination: extras.combination,
            sigma: model.sigma,
            mu: model.mu.as_slice().to_vec(),
            selected: extras.selected,
            lambda: model.gevd.lambda.clone(),
            objective: model.gevd.objective,
            rank: model.gevd.rank,
            jitter: model.gevd.jitter,
            gamma: Dense::from(&model.gevd.gamma),
            xi: model.xi.as_ref().map(Dense::from),
            train_ids: model.train_ids.clone(),
            second_view_ids: model.second_view_ids.clone(),
            preprocess: extras.preprocess,
            second_view_preprocess: extras.second_view_preprocess,
            solver: extras.solver,
            sigma_scores: extras.sigma_scores,
            seed: extras.seed,
            config: extras.config,
        }
    }

    /// The fitted model as the core library sees it. For product
    /// combinations the weights are `[1]` over the single combined kernel.
    pub fn fitted(&self, path: &Path) -> Result<FittedModel> {
        let bad = |m: String| CliError::format(path, m);
        let task = parse_task(&self.task, self.kfda_variant.as_deref()).map_err(bad)?;
        let mu = match self.combination {
            Combination::Weighted => SimplexWeights::new(self.mu.clone())?,
            Combination::Product => SimplexWeights::uniform(1),
        };
        let gamma = self.gamma.to_matrix().map_err(bad)?;
        if gamma.nrows() != self.train_ids.len() || gamma.ncols() != self.lambda.len() {
            return Err(bad(format!(
                "gamma is {}x{} but there are {} training items and {} eigenvalues",
                gamma.nrows(),
                gamma.ncols(),
                self.train_ids.len(),
                self.lambda.len()
            )));
        }
        let xi = self
            .xi
            .as_ref()
            .map(|x| x.to_matrix())
            .transpose()
            .map_err(bad)?;
        Ok(FittedModel {
            task,
            sigma: self.sigma,
            mu,
            gevd: GevdResult {
                gamma,
                lambda: self.lambda.clone(),
                objective: self.objective,
                rank: self.rank,
                jitter: self.jitter,
            },
            xi,
            train_ids: self.train_ids.clone(),
            second_view_ids: self.second_view_ids.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let m: ModelFile =
            serde_json::from_str(text).map_err(|e| CliError::format(path, e.to_string()))?;
        if m.format_version != MODEL_VERSION {
            return Err(CliError::format(
                path,
                format!("unsupported model version {}", m.format_version),
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }
}
