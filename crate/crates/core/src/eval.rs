//! Evaluation of learned embeddings: nearest-neighbor classification,
//! mean per-class accuracy, cosine retrieval with average precision, and
//! cross-validated choice of `σ`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVectorView, RowDVector};

use crate::error::{check_dim, Error, Result};
use crate::instances::{project, InstanceSpec, LabelVector, SideInputs, Task, View};
use crate::kernel::KernelMatrix;
use crate::silp::{mkl_rt_fit, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

fn row_norm(m: &DMatrix<f64>, i: usize) -> f64 {
    m.row(i).norm()
}

/// Cosine similarity of row `i` of `m` with `q`; `None` if either is zero.
fn cosine_with_row(
    q: &RowDVector<f64>,
    q_norm: f64,
    m: &DMatrix<f64>,
    i: usize,
    row_norm: f64,
) -> Option<f64> {
    if q_norm == 0.0 || row_norm == 0.0 {
        None
    } else {
        Some(q.dot(&m.row(i)) / (q_norm * row_norm))
    }
}

/// 1-nearest-neighbor labels for each test row. Exact distance ties go to
/// the smaller training index.
pub fn nn_classify(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    test: &DMatrix<f64>,
    metric: Metric,
) -> Result<Vec<usize>> {
    if train.nrows() == 0 {
        return Err(Error::Empty("nearest-neighbor training set"));
    }
    check_dim("training labels", train.nrows(), train_labels.len())?;
    check_dim("latent dimension", train.ncols(), test.ncols())?;
    let train_norms: Vec<f64> = (0..train.nrows()).map(|i| row_norm(train, i)).collect();
    let mut out = Vec::with_capacity(test.nrows());
    for t in 0..test.nrows() {
        let q = test.row(t).into_owned();
        let q_norm = q.norm();
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..train.nrows() {
            let d = match metric {
                Metric::Euclidean => (train.row(i) - &q).norm_squared(),
                Metric::Cosine => {
                    1.0 - cosine_with_row(&q, q_norm, train, i, train_norms[i]).unwrap_or(0.0)
                }
            };
            if d < best.0 {
                best = (d, i);
            }
        }
        out.push(train_labels[best.1]);
    }
    Ok(out)
}

/// Per-class recognition rates and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub per_class_accuracy: BTreeMap<usize, f64>,
    pub mean_per_class: f64,
}

/// Mean over classes (those present in `truth`) of within-class accuracy.
pub fn mean_per_class_accuracy(
    truth: &[usize],
    predicted: &[usize],
) -> Result<ClassificationReport> {
    check_dim("predicted labels", truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("label list"));
    }
    let mut tally: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        let e = tally.entry(t).or_insert((0, 0));
        e.1 += 1;
        if t == p {
            e.0 += 1;
        }
    }
    let per_class_accuracy: BTreeMap<usize, f64> = tally
        .into_iter()
        .map(|(c, (hit, total))| (c, hit as f64 / total as f64))
        .collect();
    let mean_per_class = per_class_accuracy.values().sum::<f64>() / per_class_accuracy.len() as f64;
    Ok(ClassificationReport {
        per_class_accuracy,
        mean_per_class,
    })
}

/// Gallery indices ordered by descending cosine similarity to `query`.
/// Ties go to the smaller index; zero gallery rows are ranked last.
pub fn retrieve_cosine(query: DVectorView<'_, f64>, gallery: &DMatrix<f64>) -> Result<Vec<usize>> {
    check_dim("query dimension", gallery.ncols(), query.len())?;
    let q = query.transpose();
    let q_norm = q.norm();
    let mut scored: Vec<(usize, Option<f64>)> = (0..gallery.nrows())
        .map(|i| {
            (
                i,
                cosine_with_row(&q, q_norm, gallery, i, row_norm(gallery, i)),
            )
        })
        .collect();
    scored.sort_by(|a, b| match (a.1, b.1) {
        (Some(x), Some(y)) => y
            .partial_cmp(&x)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0)),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });
    Ok(scored.into_iter().map(|(i, _)| i).collect())
}

/// Average of precision@k over the ranks `k` holding relevant items.
/// `None` when nothing is relevant.
pub fn average_precision(relevance: &[bool]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::Empty("average precision list"));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Per-query average precisions and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    /// `None` for queries with no relevant gallery item (excluded from MAP).
    pub per_query_ap: Vec<Option<f64>>,
    pub map: f64,
}

/// Ranks the whole gallery for every query row by cosine similarity;
/// relevance means equal category.
pub fn retrieval_report(
    queries: &DMatrix<f64>,
    query_categories: &[usize],
    gallery: &DMatrix<f64>,
    gallery_categories: &[usize],
) -> Result<RetrievalReport> {
    check_dim("query categories", queries.nrows(), query_categories.len())?;
    check_dim(
        "gallery categories",
        gallery.nrows(),
        gallery_categories.len(),
    )?;
    let mut per_query_ap = Vec::with_capacity(queries.nrows());
    for (qi, &cat) in query_categories.iter().enumerate() {
        let q = queries.row(qi).transpose();
        let ranking = retrieve_cosine(q.as_view(), gallery)?;
        let relevance: Vec<bool> = ranking
            .iter()
            .map(|&g| gallery_categories[g] == cat)
            .collect();
        let ap = average_precision(&relevance);
        if ap.is_none() {
            log::warn!("query {qi} has no relevant gallery item; excluded from MAP");
        }
        per_query_ap.push(ap);
    }
    let aps: Vec<f64> = per_query_ap.iter().flatten().copied().collect();
    let map = mean_average_precision(&aps)?;
    Ok(RetrievalReport { per_query_ap, map })
}

/// Score of one candidate `σ` in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaScore {
    pub sigma: f64,
    /// `None` when some fold failed (e.g. a degenerate pencil).
    pub score: Option<f64>,
}

/// Picks the `σ` with the highest score; ties go to the larger `σ`.
/// Candidates whose scoring fails or is non-finite are excluded.
pub fn select_sigma<F>(grid: &[f64], mut score: F) -> Result<(f64, Vec<SigmaScore>)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::Empty("sigma grid"));
    }
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &sigma in grid {
        let s = match score(sigma) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => None,
            Err(e) => {
                log::info!("sigma={sigma} excluded: {e}");
                None
            }
        };
        if let Some(v) = s {
            best = match best {
                Some((bs, bv)) if v < bv || (v == bv && sigma <= bs) => Some((bs, bv)),
                _ => Some((sigma, v)),
            };
        }
        table.push(SigmaScore { sigma, score: s });
    }
    let (sigma, _) = best.ok_or(Error::invalid("every sigma candidate failed"))?;
    Ok((sigma, table))
}

/// Data for a cross-validated `σ` sweep.
#[derive(Debug, Clone, Copy)]
pub enum CvData<'a> {
    /// KFDA: labels and a fold id per item; scored by mean per-class
    /// NN accuracy (`metric` in latent space) on the held-out fold.
    Classification {
        labels: &'a LabelVector,
        folds: &'a [usize],
        metric: Metric,
    },
    /// LKCCA: both views are split; scored by the MAP of first-view
    /// held-out queries against the second-view held-out gallery.
    LabeledRetrieval {
        y: &'a LabelVector,
        w: &'a LabelVector,
        kz: &'a KernelMatrix,
        folds_x: &'a [usize],
        folds_z: &'a [usize],
    },
}

fn split(folds: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != fold)
}

fn n_folds(folds: &[usize]) -> Result<usize> {
    let k = folds.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if (0..k).any(|f| !folds.contains(&f)) {
        return Err(Error::invalid("fold ids must be contiguous from 0"));
    }
    Ok(k)
}

fn sub_labels(y: &LabelVector, idx: &[usize]) -> Result<LabelVector> {
    LabelVector::with_classes(idx.iter().map(|&i| y.labels()[i]).collect(), y.n_classes())
}

/// Cross-validates `σ` over `grid` with MKL-RT fits on the training folds.
/// Ties go to the larger `σ`.
pub fn cross_validate_sigma(
    task: Task,
    dims: Option<usize>,
    kernels: &[KernelMatrix],
    data: CvData<'_>,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<(f64, Vec<SigmaScore>)> {
    let n = kernels.first().ok_or(Error::Empty("kernel list"))?.size();
    match data {
        CvData::Classification {
            labels,
            folds,
            metric,
        } => {
            if !matches!(task, Task::Kfda(_)) {
                return Err(Error::invalid("classification CV requires a KFDA task"));
            }
            check_dim("fold ids", n, folds.len())?;
            check_dim("labels", n, labels.len())?;
            let k = n_folds(folds)?;
            let mut splits = Vec::with_capacity(k);
            for f in 0..k {
                let (train, test) = split(folds, f);
                let y_train = sub_labels(labels, &train)?;
                let train_k: Vec<KernelMatrix> = kernels
                    .iter()
                    .map(|km| km.subset(&train))
                    .collect::<Result<_>>()?;
                let cross: Vec<_> = kernels
                    .iter()
                    .map(|km| km.cross_subset(&test, &train))
                    .collect::<Result<_>>()?;
                let y_test: Vec<usize> = test.iter().map(|&i| labels.labels()[i]).collect();
                splits.push((y_train, train_k, cross, y_test));
            }
            select_sigma(grid, |sigma| {
                let mut spec = InstanceSpec::new(task, sigma)?;
                spec.dims = dims;
                let mut total = 0.0;
                for (y_train, train_k, cross, y_test) in &splits {
                    let sol =
                        mkl_rt_fit(&spec, train_k, &SideInputs::Labels(y_train.clone()), cfg)?;
                    let train_latent = sol.combined.values() * sol.model.gamma();
                    let test_latent = project(&sol.model, cross, View::First)?;
                    let pred = nn_classify(&train_latent, y_train.labels(), &test_latent, metric)?;
                    total += mean_per_class_accuracy(y_test, &pred)?.mean_per_class;
                }
                Ok(total / splits.len() as f64)
            })
        }
        CvData::LabeledRetrieval {
            y,
            w,
            kz,
            folds_x,
            folds_z,
        } => {
            if task != Task::Lkcca {
                return Err(Error::invalid(
                    "labeled retrieval CV requires an LKCCA task",
                ));
            }
            check_dim("first-view fold ids", n, folds_x.len())?;
            check_dim("second-view fold ids", kz.size(), folds_z.len())?;
            let k = n_folds(folds_x)?;
            if n_folds(folds_z)? != k {
                return Err(Error::invalid("both views need the same number of folds"));
            }
            select_sigma(grid, |sigma| {
                let mut spec = InstanceSpec::new(task, sigma)?;
                spec.dims = dims;
                let mut total = 0.0;
                for f in 0..k {
                    let (tx, vx) = split(folds_x, f);
                    let (tz, vz) = split(folds_z, f);
                    let side = SideInputs::Labeled {
                        y: sub_labels(y, &tx)?,
                        w: sub_labels(w, &tz)?,
                        kz: kz.subset(&tz)?,
                    };
                    let train_k: Vec<KernelMatrix> = kernels
                        .iter()
                        .map(|km| km.subset(&tx))
                        .collect::<Result<_>>()?;
                    let sol = mkl_rt_fit(&spec, &train_k, &side, cfg)?;
                    let cross_x: Vec<_> = kernels
                        .iter()
                        .map(|km| km.cross_subset(&vx, &tx))
                        .collect::<Result<_>>()?;
                    let cross_z = kz.cross_subset(&vz, &tz)?;
                    let qx = project(&sol.model, &cross_x, View::First)?;
                    let gz = project(&sol.model, &[cross_z], View::Second)?;
                    let cat_x: Vec<usize> = vx.iter().map(|&i| y.labels()[i]).collect();
                    let cat_z: Vec<usize> = vz.iter().map(|&i| w.labels()[i]).collect();
                    total += retrieval_report(&qx, &cat_x, &gz, &cat_z)?.map;
                }
                Ok(total / k as f64)
            })
        }
    }
}
