//! The CLI verbs as library functions.

use std::path::{Path, PathBuf};

use mklrt_core::baselines::{
    average_kernel, best_individual_kernel, product_cross, product_kernel,
};
use mklrt_core::eval::{
    cross_validate_sigma, mean_per_class_accuracy, nn_classify, retrieval_report, CvData, Metric,
    SigmaScore,
};
use mklrt_core::instances::{fit_instance, task_matrices};
use mklrt_core::kernel::{
    combine, rbf_bandwidth, rbf_from_distance, rbf_with_bandwidth, DistanceMatrix,
};
use mklrt_core::nalgebra::DMatrix;
use mklrt_core::oracle::OracleResult;
use mklrt_core::{
    mkl_rt_fit, project, CrossKernelMatrix, FittedModel, InstanceSpec, KernelMatrix, LabelVector,
    MklSolution, SideInputs, SimplexWeights, SolverConfig, View,
};

use crate::config::{ExperimentConfig, TaskName};
use crate::error::{CliError, Result};
use crate::io::{
    align_labels, label_map, load_cross_kernel, load_kernel, lookup_labels, read_labels,
    read_latents, save_cross_kernel, save_kernel, write_latents, LoadedKernel,
};
use crate::model::{Combination, Method, ModelExtras, ModelFile, SolverSummary};
use crate::parallel::brute_force_parallel;
use crate::prep::{prepare_cross, prepare_train, PrepOptions, Preprocess};
use crate::report::{
    write_classification_csv, write_json, write_oracle_table, write_retrieval_csv,
    write_sigma_scores, write_trace, ClassificationSummary, RetrievalSummary,
};
use crate::toy;

/// Relative tolerance of the oracle verdict: the SILP objective may fall
/// short of the grid maximum by this fraction.
pub const ORACLE_TOL: f64 = 1e-3;

fn seed_comment(seed: u64) -> Vec<(String, String)> {
    vec![("seed".to_string(), seed.to_string())]
}

/// Preprocessed training inputs for one experiment.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub kernels: Vec<KernelMatrix>,
    pub preprocess: Vec<Preprocess>,
    pub side: SideInputs,
    pub second_view_preprocess: Option<Preprocess>,
}

impl TrainingData {
    fn labels(&self) -> Option<&LabelVector> {
        match &self.side {
            SideInputs::Labels(y) | SideInputs::Labeled { y, .. } => Some(y),
            _ => None,
        }
    }
}

fn prep_options(cfg: &ExperimentConfig) -> PrepOptions {
    PrepOptions {
        input: cfg.input,
        center: cfg.center,
        normalize: cfg.normalize,
    }
}

fn load_labels_for(path: &Path, kernel: &LoadedKernel) -> Result<LabelVector> {
    align_labels(path, &read_labels(path)?, kernel)
}

pub fn load_training(cfg: &ExperimentConfig) -> Result<TrainingData> {
    let opts = prep_options(cfg);
    let loaded: Vec<LoadedKernel> = cfg
        .kernels
        .iter()
        .map(|p| load_kernel(p))
        .collect::<Result<_>>()?;
    let first = &loaded[0];
    for (p, k) in cfg.kernels.iter().zip(&loaded) {
        if k.kernel.item_ids() != first.kernel.item_ids() {
            return Err(CliError::format(
                p,
                "base kernels must list the same items in the same order",
            ));
        }
    }
    let mut kernels = Vec::with_capacity(loaded.len());
    let mut preprocess = Vec::with_capacity(loaded.len());
    for k in &loaded {
        let (pk, rec) = prepare_train(&k.kernel, opts)?;
        kernels.push(pk);
        preprocess.push(rec);
    }
    let second = match &cfg.second_view_kernel {
        Some(p) => {
            let raw = load_kernel(p)?;
            let (kz, rec) = prepare_train(&raw.kernel, opts)?;
            Some((raw, kz, rec))
        }
        None => None,
    };
    let (side, second_view_preprocess) = match cfg.task {
        TaskName::Kfda => {
            let path = cfg.labels.as_ref().expect("validated");
            (SideInputs::Labels(load_labels_for(path, first)?), None)
        }
        TaskName::Kcca => {
            let (_, kz, rec) = second.expect("validated");
            if kz.size() != kernels[0].size() {
                return Err(CliError::Usage(format!(
                    "KCCA pairs items by row order: first view has {} items, second view {}",
                    kernels[0].size(),
                    kz.size()
                )));
            }
            (SideInputs::Paired { kz }, Some(rec))
        }
        TaskName::Lkcca => {
            let (raw, kz, rec) = second.expect("validated");
            let y = load_labels_for(cfg.labels.as_ref().expect("validated"), first)?;
            let w = load_labels_for(cfg.second_view_labels.as_ref().expect("validated"), &raw)?;
            (SideInputs::Labeled { y, w, kz }, Some(rec))
        }
    };
    Ok(TrainingData {
        kernels,
        preprocess,
        side,
        second_view_preprocess,
    })
}

/// Chooses σ: the configured value, or the cross-validated best of the grid.
fn choose_sigma(
    cfg: &ExperimentConfig,
    kernels: &[KernelMatrix],
    side: &SideInputs,
    solver: &SolverConfig,
) -> Result<(f64, Vec<SigmaScore>)> {
    if let Some(s) = cfg.sigma {
        return Ok((s, Vec::new()));
    }
    let grid = cfg.sigma_grid.clone().unwrap_or_default();
    cv_sigma(cfg, kernels, side, &grid, solver)
}

fn cv_sigma(
    cfg: &ExperimentConfig,
    kernels: &[KernelMatrix],
    side: &SideInputs,
    grid: &[f64],
    solver: &SolverConfig,
) -> Result<(f64, Vec<SigmaScore>)> {
    let mut rng = toy::rng(cfg.seed);
    let task = cfg.task();
    let res = match side {
        SideInputs::Labels(y) => {
            let folds = toy::stratified_folds(y, cfg.folds, &mut rng);
            let data = CvData::Classification {
                labels: y,
                folds: &folds,
                metric: cfg.metric(),
            };
            cross_validate_sigma(task, cfg.dims, kernels, data, grid, solver)?
        }
        SideInputs::Labeled { y, w, kz } => {
            let folds_x = toy::stratified_folds(y, cfg.folds, &mut rng);
            let folds_z = toy::stratified_folds(w, cfg.folds, &mut rng);
            let data = CvData::LabeledRetrieval {
                y,
                w,
                kz,
                folds_x: &folds_x,
                folds_z: &folds_z,
            };
            cross_validate_sigma(task, cfg.dims, kernels, data, grid, solver)?
        }
        _ => {
            return Err(CliError::Usage(
                "cross-validation needs class labels".into(),
            ))
        }
    };
    Ok(res)
}

fn spec_for(cfg: &ExperimentConfig, sigma: f64) -> Result<InstanceSpec> {
    let mut spec = InstanceSpec::new(cfg.task(), sigma)?;
    spec.dims = cfg.dims;
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub solution: MklSolution,
}

/// Learns `μ*` and the embedding. Outputs named in the config are written
/// even when the loop stops unconverged; that case is reported as
/// [`CliError::Unconverged`] afterwards.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let data = load_training(cfg)?;
    let solver = cfg.solver();
    let (sigma, scores) = choose_sigma(cfg, &data.kernels, &data.side, &solver)?;
    let spec = spec_for(cfg, sigma)?;
    let sol = mkl_rt_fit(&spec, &data.kernels, &data.side, &solver)?;
    let state = &sol.state;
    let extras = ModelExtras {
        method: Method::MklRt,
        combination: Combination::Weighted,
        selected: sol.selected.clone(),
        preprocess: data.preprocess.clone(),
        second_view_preprocess: data.second_view_preprocess.clone(),
        solver: Some(SolverSummary {
            converged: state.converged,
            iterations: state.iterations,
            final_gap: state.final_gap(),
            zeta: state.zeta.is_finite().then_some(state.zeta),
        }),
        sigma_scores: scores.iter().map(|s| (s.sigma, s.score)).collect(),
        seed: cfg.seed,
        config: Some(cfg.clone()),
    };
    let model = ModelFile::new(&sol.model, extras);
    write_outputs(cfg, &model, Some(&sol), &scores)?;
    if !sol.converged() {
        return Err(CliError::Unconverged(format!(
            "gap {:e} after {} iterations (epsilon {:e})",
            state.final_gap(),
            state.iterations,
            cfg.epsilon
        )));
    }
    Ok(TrainOutcome {
        model,
        solution: sol,
    })
}

fn write_outputs(
    cfg: &ExperimentConfig,
    model: &ModelFile,
    sol: Option<&MklSolution>,
    scores: &[SigmaScore],
) -> Result<()> {
    let comments = seed_comment(cfg.seed);
    if let Some(p) = &cfg.output.model {
        model.save(p)?;
    }
    if let (Some(p), Some(sol)) = (&cfg.output.trace, sol) {
        write_trace(p, &sol.state.history, &comments)?;
    }
    if let Some(p) = &cfg.output.sigma_scores {
        if !scores.is_empty() {
            write_sigma_scores(p, scores, &comments)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Average,
    Product,
    BestIndividual,
}

/// Fits a fixed-combination comparator: average kernel, geometric-mean
/// kernel, or the single kernel with the best cross-validated score. With a
/// σ grid, σ is cross-validated on the chosen kernel.
pub fn cmd_baseline(cfg: &ExperimentConfig, method: BaselineMethod) -> Result<ModelFile> {
    let data = load_training(cfg)?;
    let solver = cfg.solver();
    let m = data.kernels.len();
    let all: Vec<usize> = (0..m).collect();
    let (combined, mu, combination, selected, tag, cv) = match method {
        BaselineMethod::Average => (
            average_kernel(&data.kernels)?,
            SimplexWeights::uniform(m),
            Combination::Weighted,
            all,
            Method::Ak,
            None,
        ),
        BaselineMethod::Product => (
            product_kernel(&data.kernels)?,
            SimplexWeights::uniform(m),
            Combination::Product,
            all,
            Method::Pk,
            None,
        ),
        BaselineMethod::BestIndividual => {
            if data.labels().is_none() {
                return Err(CliError::Usage(
                    "bik selects by cross-validation and needs class labels".into(),
                ));
            }
            let grid = cfg.sigmas();
            let mut per_kernel: Vec<Option<(f64, Vec<SigmaScore>)>> = vec![None; m];
            let mut failure = None;
            let (idx, k) = best_individual_kernel(&data.kernels, |i, k| {
                match cv_sigma(cfg, std::slice::from_ref(k), &data.side, &grid, &solver) {
                    Ok((sigma, table)) => {
                        let best = table
                            .iter()
                            .filter_map(|s| s.score)
                            .fold(f64::NEG_INFINITY, f64::max);
                        log::info!("bik: kernel {} cv score {best} at sigma {sigma}", i + 1);
                        per_kernel[i] = Some((sigma, table));
                        best
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            })
            .map_err(|e| failure.take().unwrap_or(CliError::Core(e)))?;
            (
                k,
                SimplexWeights::vertex(m, idx),
                Combination::Weighted,
                vec![idx],
                Method::Bik,
                per_kernel[idx].take(),
            )
        }
    };
    let (sigma, scores) = match (cv, cfg.sigma) {
        (Some((sigma, table)), None) => (sigma, table),
        (_, Some(sigma)) => (sigma, Vec::new()),
        (None, None) => cv_sigma(
            cfg,
            std::slice::from_ref(&combined),
            &data.side,
            &cfg.sigmas(),
            &solver,
        )?,
    };
    let spec = spec_for(cfg, sigma)?;
    let mut fitted = fit_instance(
        &spec,
        std::slice::from_ref(&combined),
        &SimplexWeights::uniform(1),
        &data.side,
    )?;
    if combination == Combination::Weighted {
        fitted.mu = mu.clone();
    }
    let extras = ModelExtras {
        method: tag,
        combination,
        selected,
        preprocess: data.preprocess.clone(),
        second_view_preprocess: data.second_view_preprocess.clone(),
        solver: None,
        sigma_scores: scores.iter().map(|s| (s.sigma, s.score)).collect(),
        seed: cfg.seed,
        config: Some(cfg.clone()),
    };
    let mut model = ModelFile::new(&fitted, extras);
    model.mu = mu.as_slice().to_vec();
    write_outputs(cfg, &model, None, &scores)?;
    Ok(model)
}

/// Latent coordinates of test items. First view: one test-by-train file per
/// base kernel, in training order. Second view: one file for the second
/// view's kernel.
pub fn cmd_project(
    model_path: &Path,
    kernel_files: &[PathBuf],
    view: View,
) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mf = ModelFile::load(model_path)?;
    let fitted = mf.fitted(model_path)?;
    let z = match view {
        View::First => {
            if kernel_files.len() != mf.preprocess.len() {
                return Err(CliError::Usage(format!(
                    "model combines {} kernels but {} files were given",
                    mf.preprocess.len(),
                    kernel_files.len()
                )));
            }
            let cross: Vec<CrossKernelMatrix> = kernel_files
                .iter()
                .zip(&mf.preprocess)
                .map(|(p, rec)| prepare_cross(&load_cross_kernel(p, Some(&mf.train_ids))?, rec))
                .collect::<Result<_>>()?;
            let cross = match mf.combination {
                Combination::Weighted => cross,
                Combination::Product => vec![product_cross(&cross)?],
            };
            let z = project(&fitted, &cross, View::First)?;
            (cross[0].test_ids().to_vec(), z)
        }
        View::Second => {
            let ids = mf
                .second_view_ids
                .as_deref()
                .ok_or_else(|| CliError::Usage("model has no second view".into()))?;
            let [p] = kernel_files else {
                return Err(CliError::Usage(
                    "second-view projection takes exactly one kernel file".into(),
                ));
            };
            let rec = mf.second_view_preprocess.clone().unwrap_or_default();
            let kt = prepare_cross(&load_cross_kernel(p, Some(ids))?, &rec)?;
            let z = project(&fitted, std::slice::from_ref(&kt), View::Second)?;
            (kt.test_ids().to_vec(), z)
        }
    };
    Ok(z)
}

pub fn write_projection(
    out: &Path,
    model_path: &Path,
    ids: &[String],
    z: &DMatrix<f64>,
) -> Result<()> {
    let seed = ModelFile::load(model_path)?.seed;
    write_latents(out, ids, z, &seed_comment(seed))
}

fn labels_from(files: &[PathBuf]) -> Result<std::collections::BTreeMap<String, usize>> {
    let rows = files
        .iter()
        .map(|p| Ok((p.as_path(), read_labels(p)?)))
        .collect::<Result<Vec<_>>>()?;
    label_map(&rows)
}

/// 1-NN classification of test latents against training latents, scored by
/// mean per-class accuracy. Labels are looked up by item id.
pub fn cmd_classify(
    train: &Path,
    test: &Path,
    label_files: &[PathBuf],
    metric: Metric,
) -> Result<ClassificationSummary> {
    let map = labels_from(label_files)?;
    let (train_ids, ztr) = read_latents(train)?;
    let (test_ids, zte) = read_latents(test)?;
    let ytr = lookup_labels(&map, &train_ids, "training")?;
    let yte = lookup_labels(&map, &test_ids, "test")?;
    let pred = nn_classify(&ztr, &ytr, &zte, metric)?;
    let report = mean_per_class_accuracy(&yte, &pred)?;
    Ok(ClassificationSummary::new(&report, yte.len()))
}

/// Cosine retrieval of every query against the whole gallery, scored by MAP
/// with same-class relevance.
pub fn cmd_retrieve(
    queries: &Path,
    gallery: &Path,
    label_files: &[PathBuf],
) -> Result<RetrievalSummary> {
    let map = labels_from(label_files)?;
    let (qids, zq) = read_latents(queries)?;
    let (gids, zg) = read_latents(gallery)?;
    let qc = lookup_labels(&map, &qids, "query")?;
    let gc = lookup_labels(&map, &gids, "gallery")?;
    let report = retrieval_report(&zq, &qc, &zg, &gc)?;
    Ok(RetrievalSummary::new(&report, &qids))
}

pub fn write_classification(
    csv: Option<&Path>,
    json: Option<&Path>,
    s: &ClassificationSummary,
    comments: &[(String, String)],
) -> Result<()> {
    if let Some(p) = csv {
        write_classification_csv(p, s, comments)?;
    }
    if let Some(p) = json {
        write_json(p, s)?;
    }
    Ok(())
}

pub fn write_retrieval(
    csv: Option<&Path>,
    json: Option<&Path>,
    s: &RetrievalSummary,
    comments: &[(String, String)],
) -> Result<()> {
    if let Some(p) = csv {
        write_retrieval_csv(p, s, comments)?;
    }
    if let Some(p) = json {
        write_json(p, s)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct OracleVerdict {
    pub grid: OracleResult,
    pub silp_objective: f64,
    pub silp_mu: SimplexWeights,
    pub pass: bool,
}

/// Compares the SILP fit with an exhaustive simplex grid at spacing `step`.
pub fn cmd_oracle(
    cfg: &ExperimentConfig,
    step: f64,
    table: Option<&Path>,
) -> Result<OracleVerdict> {
    let sigma = match (cfg.sigma, &cfg.sigma_grid) {
        (Some(s), _) => s,
        _ => {
            return Err(CliError::Usage(
                "oracle runs at a single sigma; set `sigma`".into(),
            ))
        }
    };
    let data = load_training(cfg)?;
    let spec = spec_for(cfg, sigma)?;
    let mats = task_matrices(&spec, data.kernels[0].size(), &data.side)?;
    let grid = brute_force_parallel(&data.kernels, &mats.l, &mats.lp, sigma, step)?;
    let sol = mkl_rt_fit(&spec, &data.kernels, &data.side, &cfg.solver())?;
    let pass = sol.objective() >= grid.best_objective - ORACLE_TOL * grid.best_objective.abs();
    if let Some(p) = table.or(cfg.output.oracle_table.as_deref()) {
        write_oracle_table(p, &grid.table, &seed_comment(cfg.seed))?;
    }
    Ok(OracleVerdict {
        silp_objective: sol.objective(),
        silp_mu: sol.mu().clone(),
        grid,
        pass,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Human-readable summary of a model file or a kernel file.
pub fn cmd_inspect(path: &Path) -> Result<String> {
    let head = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let is_json = head.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{');
    if is_json {
        let mf = ModelFile::load(path)?;
        let fitted: FittedModel = mf.fitted(path)?;
        let mut out = String::new();
        out.push_str(&format!("task: {}\n", fitted.task.name()));
        out.push_str(&format!("method: {:?}\n", mf.method));
        out.push_str(&format!("sigma: {}\n", mf.sigma));
        out.push_str(&format!("mu: {}\n", fmt_vec(&mf.mu)));
        let selected: Vec<String> = mf.selected.iter().map(|i| (i + 1).to_string()).collect();
        out.push_str(&format!(
            "selected kernels (1-based): [{}]\n",
            selected.join(", ")
        ));
        out.push_str(&format!("eigenvalues: {}\n", fmt_vec(&mf.lambda)));
        out.push_str(&format!("objective: {}\n", mf.objective));
        out.push_str(&format!("dims: {} of rank {}\n", mf.lambda.len(), mf.rank));
        if let Some(s) = &mf.solver {
            out.push_str(&format!(
                "solver: converged={} iterations={} gap={:e}\n",
                s.converged, s.iterations, s.final_gap
            ));
        }
        out.push_str(&format!("training items: {}\n", mf.train_ids.len()));
        out.push_str(&format!("seed: {}\n", mf.seed));
        return Ok(out);
    }
    let raw = crate::io::load_matrix(path)?;
    let (r, c) = raw.values.shape();
    let mut out = format!(
        "matrix: {r}x{c}\nids: {}\n",
        if raw.row_ids.is_some() { "yes" } else { "no" }
    );
    if r == c && r > 0 {
        let asym = mklrt_core::linalg::max_asymmetry(&raw.values);
        out.push_str(&format!("trace: {}\n", raw.values.trace()));
        out.push_str(&format!("max asymmetry: {asym:e}\n"));
        if asym == 0.0
            || asym <= mklrt_core::kernel::SYMMETRY_TOL * mklrt_core::linalg::max_abs(&raw.values)
        {
            out.push_str(&format!(
                "min eigenvalue: {:e}\n",
                mklrt_core::linalg::min_eigenvalue(&mklrt_core::linalg::symmetrize(&raw.values))
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyOptions {
    pub seed: u64,
    pub per_class: usize,
    pub test_per_class: usize,
    pub separation: f64,
    pub noise_kernels: usize,
    pub sigma: f64,
}

impl Default for ToyOptions {
    fn default() -> Self {
        ToyOptions {
            seed: 0,
            per_class: 40,
            test_per_class: 40,
            separation: 10.0,
            noise_kernels: 0,
            sigma: 0.5,
        }
    }
}

/// Writes a two-blob KFDA experiment into `dir`: training kernels, matching
/// test-by-train kernels, labels for every item and `exp.toml`. Returns the
/// config path.
pub fn cmd_toy(dir: &Path, opts: ToyOptions) -> Result<PathBuf> {
    if opts.per_class < 2 || opts.test_per_class < 1 {
        return Err(CliError::Usage(
            "toy data needs per_class >= 2 and test_per_class >= 1".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut rng = toy::rng(opts.seed);
    let train = toy::two_blobs(&mut rng, opts.per_class, opts.separation);
    let test = toy::two_blobs(&mut rng, opts.test_per_class, opts.separation);
    let train_ids: Vec<String> = (0..train.labels.len()).map(|i| format!("tr{i}")).collect();
    let test_ids: Vec<String> = (0..test.labels.len()).map(|i| format!("te{i}")).collect();

    let d_train = DistanceMatrix::new(toy::pairwise_distances(&train.points, &train.points))?;
    let eta = rbf_bandwidth(&d_train)?;
    let k = KernelMatrix::new(
        rbf_from_distance(&d_train)?.into_values(),
        train_ids.clone(),
    )?;
    let kt = rbf_with_bandwidth(&toy::pairwise_distances(&test.points, &train.points), eta)?;
    let kt = CrossKernelMatrix::new(kt, test_ids.clone(), train_ids.clone())?;
    save_kernel(&dir.join("train_rbf.mklk"), &k)?;
    save_cross_kernel(&dir.join("test_rbf.mklk"), &kt)?;
    let mut kernel_names = vec!["train_rbf.mklk".to_string()];

    for j in 1..=opts.noise_kernels {
        let dim = 5;
        let all = toy::noise_features(&mut rng, train_ids.len() + test_ids.len(), dim)
            / (dim as f64).sqrt();
        let xtr = all.rows(0, train_ids.len()).into_owned();
        let xte = all.rows(train_ids.len(), test_ids.len()).into_owned();
        let kn = KernelMatrix::new(
            mklrt_core::linalg::symmetrize(&(&xtr * xtr.transpose())),
            train_ids.clone(),
        )?;
        let ktn =
            CrossKernelMatrix::new(&xte * xtr.transpose(), test_ids.clone(), train_ids.clone())?;
        save_kernel(&dir.join(format!("train_noise{j}.mklk")), &kn)?;
        save_cross_kernel(&dir.join(format!("test_noise{j}.mklk")), &ktn)?;
        kernel_names.push(format!("train_noise{j}.mklk"));
    }

    let mut labels = String::from("item_id,class_id\n");
    for (id, c) in train_ids
        .iter()
        .zip(&train.labels)
        .chain(test_ids.iter().zip(&test.labels))
    {
        labels.push_str(&format!("{id},{c}\n"));
    }
    let lp = dir.join("labels.csv");
    std::fs::write(&lp, labels).map_err(|e| CliError::io(&lp, e))?;

    let quoted: Vec<String> = kernel_names.iter().map(|k| format!("{k:?}")).collect();
    let cfg_text = format!(
        "task = \"kfda\"\nkernels = [{}]\nlabels = \"labels.csv\"\ncenter = true\nsigma = {}\nseed = {}\n\n[output]\nmodel = \"model.json\"\ntrace = \"trace.csv\"\n",
        quoted.join(", "),
        opts.sigma,
        opts.seed
    );
    let cp = dir.join("exp.toml");
    std::fs::write(&cp, cfg_text).map_err(|e| CliError::io(&cp, e))?;
    Ok(cp)
}

/// Training latents `K* Γ` from a model and its training kernels; used to
/// check the project path end to end.
pub fn training_latents(model: &FittedModel, kernels: &[KernelMatrix]) -> Result<DMatrix<f64>> {
    let k = combine(&model.mu, kernels)?;
    Ok(k.values() * model.gamma())
}
