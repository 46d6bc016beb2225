//! Experiment configuration (TOML).
//!
//! ```toml
//! task = "kfda"                  # kfda | kcca | lkcca
//! kernels = ["k1.mklk", "k2.csv"]
//! labels = "labels.csv"
//! sigma = 0.5                    # or sigma_grid = [0.1, 0.5, 0.9]
//! seed = 7
//!
//! [output]
//! model = "model.json"
//! trace = "trace.csv"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use mklrt_core::eval::Metric;
use mklrt_core::silp::SolverConfig;
use mklrt_core::{KfdaVariant, Task};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskName {
    Kfda,
    Kcca,
    Lkcca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Files hold kernel values.
    #[default]
    Kernel,
    /// Files hold distances, turned into `exp(-d/η)` with `η` the mean
    /// training distance.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Euclidean,
    Cosine,
}

impl From<MetricName> for Metric {
    fn from(m: MetricName) -> Self {
        match m {
            MetricName::Euclidean => Metric::Euclidean,
            MetricName::Cosine => Metric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub model: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub oracle_table: Option<PathBuf>,
    pub sigma_scores: Option<PathBuf>,
}

fn default_epsilon() -> f64 {
    1e-4
}

fn default_max_iters() -> usize {
    500
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskName,
    #[serde(default)]
    pub kfda_variant: VariantName,
    /// First-view base kernels, in order.
    pub kernels: Vec<PathBuf>,
    /// First-view labels (KFDA, LKCCA).
    pub labels: Option<PathBuf>,
    /// Second-view kernel (KCCA, LKCCA).
    pub second_view_kernel: Option<PathBuf>,
    /// Second-view labels (LKCCA).
    pub second_view_labels: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub sigma_grid: Option<Vec<f64>>,
    pub dims: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_threshold")]
    pub selection_threshold: f64,
    #[serde(default)]
    pub center: bool,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub input: InputKind,
    /// NN metric in latent space; Euclidean unless set.
    pub metric: Option<MetricName>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.kernels.iter_mut().for_each(fix);
        for p in [
            &mut self.labels,
            &mut self.second_view_kernel,
            &mut self.second_view_labels,
            &mut self.output.model,
            &mut self.output.trace,
            &mut self.output.oracle_table,
            &mut self.output.sigma_scores,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn task(&self) -> Task {
        match self.task {
            TaskName::Kfda => Task::Kfda(match self.kfda_variant {
                VariantName::A => KfdaVariant::A,
                VariantName::B => KfdaVariant::B,
            }),
            TaskName::Kcca => Task::Kcca,
            TaskName::Lkcca => Task::Lkcca,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric.map(Metric::from).unwrap_or_default()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            selection_threshold: self.selection_threshold,
            ..SolverConfig::default()
        }
    }

    /// The σ candidates: the single σ, or the grid.
    pub fn sigmas(&self) -> Vec<f64> {
        match (&self.sigma, &self.sigma_grid) {
            (Some(s), _) => vec![*s],
            (None, Some(g)) => g.clone(),
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(CliError::Config(m.to_string()));
        if self.kernels.is_empty() {
            return err("at least one kernel file is required");
        }
        match (&self.sigma, &self.sigma_grid) {
            (Some(_), Some(_)) => return err("give either sigma or sigma_grid, not both"),
            (None, None) => return err("sigma or sigma_grid is required"),
            (None, Some(g)) if g.is_empty() => return err("sigma_grid is empty"),
            _ => {}
        }
        if let Some(bad) = self.sigmas().into_iter().find(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(CliError::Config(format!("sigma {bad} outside (0, 1)")));
        }
        if self.dims == Some(0) {
            return err("dims must be at least 1");
        }
        self.solver().validate()?;
        if self.folds < 2 {
            return err("folds must be at least 2");
        }
        let needs = |field: &Option<PathBuf>, name: &str| -> Result<()> {
            if field.is_none() {
                return Err(CliError::Config(format!(
                    "task {:?} needs `{name}`",
                    self.task
                )));
            }
            Ok(())
        };
        match self.task {
            TaskName::Kfda => needs(&self.labels, "labels")?,
            TaskName::Kcca => {
                needs(&self.second_view_kernel, "second_view_kernel")?;
                if self.sigma_grid.is_some() {
                    return err("sigma_grid needs labels; KCCA takes a single sigma");
                }
            }
            TaskName::Lkcca => {
                needs(&self.labels, "labels")?;
                needs(&self.second_view_kernel, "second_view_kernel")?;
                needs(&self.second_view_labels, "second_view_labels")?;
            }
        }
        let inputs = self
            .kernels
            .iter()
            .chain(&self.labels)
            .chain(&self.second_view_kernel)
            .chain(&self.second_view_labels);
        for p in inputs {
            if !p.exists() {
                return Err(CliError::Config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }
}
