//! Plot-ready CSV exports and JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mklrt_core::eval::{ClassificationReport, RetrievalReport, SigmaScore};
use mklrt_core::oracle::OracleRow;
use mklrt_core::silp::IterationRecord;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::io::write_comments;

fn csv_file(path: &Path, comments: &[(String, String)]) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_comments(&mut w, comments).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(w))
}

fn finish(path: &Path, wr: csv::Writer<BufWriter<File>>) -> Result<()> {
    wr.into_inner()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .flush()
        .map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::format(path, e.to_string())
}

fn mu_header(m: usize) -> impl Iterator<Item = String> {
    (1..=m).map(|i| format!("mu_{i}"))
}

/// `iteration,zeta,value,gap,mu_1..mu_M`.
pub fn write_trace(
    path: &Path,
    history: &[IterationRecord],
    comments: &[(String, String)],
) -> Result<()> {
    let mut wr = csv_file(path, comments)?;
    let m = history.first().map_or(0, |h| h.mu.len());
    let mut header: Vec<String> = ["iteration", "zeta", "value", "gap"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(mu_header(m));
    wr.write_record(&header).map_err(csv_err(path))?;
    for h in history {
        let mut rec = vec![
            h.iteration.to_string(),
            h.zeta.to_string(),
            h.value.to_string(),
            h.gap.to_string(),
        ];
        rec.extend(h.mu.iter().map(|v| v.to_string()));
        wr.write_record(&rec).map_err(csv_err(path))?;
    }
    finish(path, wr)
}

/// `mu_1..mu_M,objective`.
pub fn write_oracle_table(
    path: &Path,
    table: &[OracleRow],
    comments: &[(String, String)],
) -> Result<()> {
    let mut wr = csv_file(path, comments)?;
    let m = table.first().map_or(0, |r| r.mu.len());
    let mut header: Vec<String> = mu_header(m).collect();
    header.push("objective".into());
    wr.write_record(&header).map_err(csv_err(path))?;
    for r in table {
        let mut rec: Vec<String> = r.mu.as_slice().iter().map(|v| v.to_string()).collect();
        rec.push(r.objective.to_string());
        wr.write_record(&rec).map_err(csv_err(path))?;
    }
    finish(path, wr)
}

/// `sigma,score`; failed candidates have an empty score.
pub fn write_sigma_scores(
    path: &Path,
    scores: &[SigmaScore],
    comments: &[(String, String)],
) -> Result<()> {
    let mut wr = csv_file(path, comments)?;
    wr.write_record(["sigma", "score"]).map_err(csv_err(path))?;
    for s in scores {
        let score = s.score.map(|v| v.to_string()).unwrap_or_default();
        wr.write_record([s.sigma.to_string(), score])
            .map_err(csv_err(path))?;
    }
    finish(path, wr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSummary {
    pub per_class_accuracy: Vec<(usize, f64)>,
    pub mean_per_class: f64,
    pub n_test: usize,
}

impl ClassificationSummary {
    pub fn new(r: &ClassificationReport, n_test: usize) -> Self {
        ClassificationSummary {
            per_class_accuracy: r.per_class_accuracy.iter().map(|(&c, &a)| (c, a)).collect(),
            mean_per_class: r.mean_per_class,
            n_test,
        }
    }
}

/// `class,accuracy` rows followed by a `mean` row.
pub fn write_classification_csv(
    path: &Path,
    s: &ClassificationSummary,
    comments: &[(String, String)],
) -> Result<()> {
    let mut wr = csv_file(path, comments)?;
    wr.write_record(["class", "accuracy"])
        .map_err(csv_err(path))?;
    for (c, a) in &s.per_class_accuracy {
        wr.write_record([c.to_string(), a.to_string()])
            .map_err(csv_err(path))?;
    }
    wr.write_record(["mean".to_string(), s.mean_per_class.to_string()])
        .map_err(csv_err(path))?;
    finish(path, wr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalSummary {
    pub per_query: Vec<(String, Option<f64>)>,
    pub map: f64,
}

impl RetrievalSummary {
    pub fn new(r: &RetrievalReport, query_ids: &[String]) -> Self {
        RetrievalSummary {
            per_query: query_ids
                .iter()
                .cloned()
                .zip(r.per_query_ap.iter().copied())
                .collect(),
            map: r.map,
        }
    }
}

/// `query_id,ap` rows (empty AP when nothing was relevant) and a `MAP` row.
pub fn write_retrieval_csv(
    path: &Path,
    s: &RetrievalSummary,
    comments: &[(String, String)],
) -> Result<()> {
    let mut wr = csv_file(path, comments)?;
    wr.write_record(["query_id", "ap"]).map_err(csv_err(path))?;
    for (id, ap) in &s.per_query {
        wr.write_record([id.clone(), ap.map(|v| v.to_string()).unwrap_or_default()])
            .map_err(csv_err(path))?;
    }
    wr.write_record(["MAP".to_string(), s.map.to_string()])
        .map_err(csv_err(path))?;
    finish(path, wr)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}
