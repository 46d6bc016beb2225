//! Concrete ratio-trace instances: KFDA, KCCA and labeled KCCA.
//!
//! Each task contributes a pair `(L, L')`; the combined kernel supplies `K`.
//! Two-view tasks additionally produce the second-view map `Ξ`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{combine, combine_cross, CrossKernelMatrix, KernelMatrix, SimplexWeights};
use crate::linalg;
use crate::ratio_trace::{check_sigma, solve_gevd_pencil, GevdResult, RatioTraceInstance};

/// Class labels `1..=P` over `N` items; every class is occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelVector {
    /// `P` is taken as the largest label.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let p = labels
            .iter()
            .copied()
            .max()
            .ok_or(Error::Empty("label vector"))?;
        Self::with_classes(labels, p)
    }

    pub fn with_classes(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("label vector"));
        }
        if n_classes == 0 {
            return Err(Error::invalid("label vector needs at least one class"));
        }
        let mut counts = vec![0usize; n_classes];
        for &y in &labels {
            if y == 0 || y > n_classes {
                return Err(Error::invalid(alloc::format!(
                    "class id {y} outside 1..={n_classes}"
                )));
            }
            counts[y - 1] += 1;
        }
        if let Some(p) = counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(alloc::format!(
                "class {} has no items",
                p + 1
            )));
        }
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Item count per class, indexed by `class - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &y in &self.labels {
            counts[y - 1] += 1;
        }
        counts
    }
}

/// Which right-hand matrix KFDA uses: `L = I - L'` (A) or `L = I` (B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KfdaVariant {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Kfda(KfdaVariant),
    Kcca,
    Lkcca,
    /// User-supplied `(L, L')`.
    Custom,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Kfda(KfdaVariant::A) => "kfda-a",
            Task::Kfda(KfdaVariant::B) => "kfda-b",
            Task::Kcca => "kcca",
            Task::Lkcca => "lkcca",
            Task::Custom => "custom",
        }
    }

    pub fn is_two_view(&self) -> bool {
        matches!(self, Task::Kcca | Task::Lkcca)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub task: Task,
    pub sigma: f64,
    pub dims: Option<usize>,
}

impl InstanceSpec {
    pub fn new(task: Task, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            task,
            sigma,
            dims: None,
        })
    }

    pub fn with_dims(mut self, dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("dims must be at least 1"));
        }
        self.dims = Some(dims);
        Ok(self)
    }
}

/// Task-specific inputs besides the first-view kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum SideInputs {
    /// KFDA class labels.
    Labels(LabelVector),
    /// KCCA second-view kernel, paired with the first view by row order.
    Paired { kz: KernelMatrix },
    /// LKCCA: labels of both views and the second-view kernel.
    Labeled {
        y: LabelVector,
        w: LabelVector,
        kz: KernelMatrix,
    },
    /// Explicit `(L, L')` for any other ratio-trace instance.
    Custom { l: DMatrix<f64>, lp: DMatrix<f64> },
}

/// `L' = Σ_p (1/N_p) 1_p 1_pᵀ`, and `L = I - L'` (variant A) or `I` (B).
pub fn build_kfda(y: &LabelVector, variant: KfdaVariant) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = y.len();
    let counts = y.class_counts();
    let mut lp = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if y.labels[i] == y.labels[j] {
                lp[(i, j)] = 1.0 / counts[y.labels[i] - 1] as f64;
            }
        }
    }
    let l = match variant {
        KfdaVariant::A => DMatrix::identity(n, n) - &lp,
        KfdaVariant::B => DMatrix::identity(n, n),
    };
    (l, lp)
}

fn symmetrize_logged(m: &DMatrix<f64>, context: &'static str) -> DMatrix<f64> {
    let asym = linalg::max_asymmetry(m);
    let scale = linalg::max_abs(m);
    if asym > 1e-6 * scale {
        log::warn!("{context}: asymmetry {asym:e} before symmetrization (scale {scale:e})");
    } else if asym > 0.0 {
        log::trace!("{context}: asymmetry {asym:e} before symmetrization");
    }
    linalg::symmetrize(m)
}

/// KCCA: `L = I`, `L' = K^z((1-σ)K^z + σI)⁻¹`.
pub fn build_kcca(kz: &KernelMatrix, sigma: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_sigma(sigma)?;
    let n = kz.size();
    let system = regularized(kz.values(), sigma);
    // system and K^z commute, so system⁻¹ K^z = K^z system⁻¹
    let lp = linalg::spd_solve(&system, kz.values(), "KCCA regularized second-view system")?;
    Ok((DMatrix::identity(n, n), symmetrize_logged(&lp, "KCCA L'")))
}

fn regularized(kz: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let n = kz.nrows();
    kz * (1.0 - sigma) + DMatrix::identity(n, n) * sigma
}

/// Matrices of the unreplicated labeled-KCCA construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LkccaParts {
    /// `L = D^x`.
    pub l: DMatrix<f64>,
    pub lp: DMatrix<f64>,
    /// `E = Σ_p 1^x_p 1^zᵀ_p` (`N^x × N^z`).
    pub e: DMatrix<f64>,
    /// Diagonal of `D^x`: `N^z_{y_i}`.
    pub dx: Vec<f64>,
    /// Diagonal of `D^z`: `N^x_{w_j}`.
    pub dz: Vec<f64>,
}

/// Pairing structure of labeled KCCA: `E`, `D^x`, `D^z`.
pub fn lkcca_pairing(
    y: &LabelVector,
    w: &LabelVector,
) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    if y.n_classes() != w.n_classes() {
        return Err(Error::invalid(alloc::format!(
            "views have different class sets: {} vs {} classes",
            y.n_classes(),
            w.n_classes()
        )));
    }
    let cx = y.class_counts();
    let cz = w.class_counts();
    let e = DMatrix::from_fn(y.len(), w.len(), |i, j| {
        if y.labels[i] == w.labels[j] {
            1.0
        } else {
            0.0
        }
    });
    let dx = y.labels.iter().map(|&c| cz[c - 1] as f64).collect();
    let dz = w.labels.iter().map(|&c| cx[c - 1] as f64).collect();
    Ok((e, dx, dz))
}

/// Labeled KCCA without replication:
/// `L = D^x`, `L' = E K^z (σI + (1-σ) D^z K^z)⁻¹ Eᵀ`.
pub fn build_lkcca(
    y: &LabelVector,
    w: &LabelVector,
    kz: &KernelMatrix,
    sigma: f64,
) -> Result<LkccaParts> {
    check_sigma(sigma)?;
    check_dim("LKCCA second-view kernel vs labels", w.len(), kz.size())?;
    let (e, dx, dz) = lkcca_pairing(y, w)?;
    let system = lkcca_system(kz.values(), &dz, sigma);
    let solved = linalg::lu_solve(&system, &e.transpose(), "LKCCA second-view system")?;
    let lp = &e * kz.values() * solved;
    let l = DMatrix::from_diagonal(&DVector::from_column_slice(&dx));
    Ok(LkccaParts {
        l,
        lp: symmetrize_logged(&lp, "LKCCA L'"),
        e,
        dx,
        dz,
    })
}

/// `(1-σ) D^z K^z + σI`.
fn lkcca_system(kz: &DMatrix<f64>, dz: &[f64], sigma: f64) -> DMatrix<f64> {
    let n = kz.nrows();
    let mut m = kz * (1.0 - sigma);
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= dz[i];
    }
    m + DMatrix::identity(n, n) * sigma
}

fn inv_sqrt_lambda(gamma: &DMatrix<f64>, lambda: &[f64]) -> Result<DMatrix<f64>> {
    check_dim("Gamma columns vs eigenvalues", gamma.ncols(), lambda.len())?;
    if let Some(bad) = lambda.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::invalid(alloc::format!(
            "eigenvalues must be strictly positive, found {bad}"
        )));
    }
    let mut out = gamma.clone();
    for (mut col, &l) in out.column_iter_mut().zip(lambda) {
        col /= libm::sqrt(l);
    }
    Ok(out)
}

/// `Ξ = ((1-σ)K^z + σI)⁻¹ K^x Γ Λ^{-1/2}`.
pub fn compute_xi_kcca(
    kz: &DMatrix<f64>,
    kx: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    lambda: &[f64],
    sigma: f64,
) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    check_dim("KCCA K^z vs K^x", kx.nrows(), kz.nrows())?;
    let rhs = kx * inv_sqrt_lambda(gamma, lambda)?;
    linalg::spd_solve(&regularized(kz, sigma), &rhs, "KCCA second-view map")
}

/// `Ξ = ((1-σ)D^zK^z + σI)⁻¹ Eᵀ K^x Γ Λ^{-1/2}`.
pub fn compute_xi_lkcca(
    kz: &DMatrix<f64>,
    kx: &DMatrix<f64>,
    e: &DMatrix<f64>,
    dz: &[f64],
    gamma: &DMatrix<f64>,
    lambda: &[f64],
    sigma: f64,
) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    check_dim("LKCCA E rows", kx.nrows(), e.nrows())?;
    check_dim("LKCCA E cols", kz.nrows(), e.ncols())?;
    check_dim("LKCCA D^z", kz.nrows(), dz.len())?;
    let rhs = e.transpose() * kx * inv_sqrt_lambda(gamma, lambda)?;
    linalg::lu_solve(&lkcca_system(kz, dz, sigma), &rhs, "LKCCA second-view map")
}

/// `(L, L')` for a task plus the extra pieces two-view tasks need later.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskMatrices {
    pub l: DMatrix<f64>,
    pub lp: DMatrix<f64>,
    /// `(E, diag D^z)` for LKCCA.
    pub pairing: Option<(DMatrix<f64>, Vec<f64>)>,
    /// Number of classes, when the task is label-driven.
    pub n_classes: Option<usize>,
}

/// Builds `(L, L')` for `spec.task` from its side inputs.
pub fn task_matrices(spec: &InstanceSpec, n: usize, side: &SideInputs) -> Result<TaskMatrices> {
    let out = match (spec.task, side) {
        (Task::Kfda(variant), SideInputs::Labels(y)) => {
            check_dim("KFDA labels vs kernel", n, y.len())?;
            let (l, lp) = build_kfda(y, variant);
            TaskMatrices {
                l,
                lp,
                pairing: None,
                n_classes: Some(y.n_classes()),
            }
        }
        (Task::Kcca, SideInputs::Paired { kz }) => {
            check_dim("KCCA second view vs first view", n, kz.size())?;
            let (l, lp) = build_kcca(kz, spec.sigma)?;
            TaskMatrices {
                l,
                lp,
                pairing: None,
                n_classes: None,
            }
        }
        (Task::Lkcca, SideInputs::Labeled { y, w, kz }) => {
            check_dim("LKCCA first-view labels vs kernel", n, y.len())?;
            let parts = build_lkcca(y, w, kz, spec.sigma)?;
            TaskMatrices {
                l: parts.l,
                lp: parts.lp,
                pairing: Some((parts.e, parts.dz)),
                n_classes: Some(y.n_classes()),
            }
        }
        (Task::Custom, SideInputs::Custom { l, lp }) => TaskMatrices {
            l: l.clone(),
            lp: lp.clone(),
            pairing: None,
            n_classes: None,
        },
        _ => {
            return Err(Error::invalid(alloc::format!(
                "side inputs do not match task {}",
                spec.task.name()
            )))
        }
    };
    Ok(out)
}

/// Embedding dimension: explicit `dims`, else `P - 1` for label-driven
/// tasks (at least 1), else every non-zero eigenpair.
pub fn default_dims(spec: &InstanceSpec, mats: &TaskMatrices) -> Option<usize> {
    spec.dims.or(match spec.task {
        Task::Kfda(_) | Task::Lkcca => mats.n_classes.map(|p| p.saturating_sub(1).max(1)),
        Task::Kcca | Task::Custom => None,
    })
}

/// A fitted embedding: weights, first-view projection `Γ`, eigenvalues and
/// (for two-view tasks) the second-view map `Ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub task: Task,
    pub sigma: f64,
    pub mu: SimplexWeights,
    pub gevd: GevdResult,
    pub xi: Option<DMatrix<f64>>,
    pub train_ids: Vec<String>,
    pub second_view_ids: Option<Vec<String>>,
}

impl FittedModel {
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gevd.gamma
    }

    pub fn lambda(&self) -> &[f64] {
        &self.gevd.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    First,
    Second,
}

/// Fits at fixed weights `mu` using prebuilt task matrices.
pub fn fit_with_matrices(
    spec: &InstanceSpec,
    kernels: &[KernelMatrix],
    mu: &SimplexWeights,
    side: &SideInputs,
    mats: &TaskMatrices,
) -> Result<FittedModel> {
    let k = combine(mu, kernels)?;
    let inst = RatioTraceInstance::new(k.clone(), mats.l.clone(), mats.lp.clone(), spec.sigma)?;
    let gevd = solve_gevd_pencil(&inst, default_dims(spec, mats))?;
    let (xi, second_view_ids) = match side {
        SideInputs::Paired { kz } => (
            Some(compute_xi_kcca(
                kz.values(),
                k.values(),
                &gevd.gamma,
                &gevd.lambda,
                spec.sigma,
            )?),
            Some(kz.item_ids().to_vec()),
        ),
        SideInputs::Labeled { kz, .. } => {
            let (e, dz) = mats
                .pairing
                .as_ref()
                .ok_or(Error::invalid("LKCCA fit requires pairing matrices"))?;
            (
                Some(compute_xi_lkcca(
                    kz.values(),
                    k.values(),
                    e,
                    dz,
                    &gevd.gamma,
                    &gevd.lambda,
                    spec.sigma,
                )?),
                Some(kz.item_ids().to_vec()),
            )
        }
        _ => (None, None),
    };
    Ok(FittedModel {
        task: spec.task,
        sigma: spec.sigma,
        mu: mu.clone(),
        gevd,
        xi,
        train_ids: k.item_ids().to_vec(),
        second_view_ids,
    })
}

/// Combines `kernels` with `mu`, builds the task's `(L, L')` and solves the
/// pencil. Default dims are `P - 1` for KFDA/LKCCA and full rank for KCCA.
pub fn fit_instance(
    spec: &InstanceSpec,
    kernels: &[KernelMatrix],
    mu: &SimplexWeights,
    side: &SideInputs,
) -> Result<FittedModel> {
    let n = kernels.first().ok_or(Error::Empty("kernel list"))?.size();
    let mats = task_matrices(spec, n, side)?;
    fit_with_matrices(spec, kernels, mu, side, &mats)
}

/// Latent coordinates (one row per test item) for new data.
///
/// The first view combines the `M` cross kernels with the model weights and
/// applies `Γ`; the second view takes a single cross kernel and applies `Ξ`.
pub fn project(
    model: &FittedModel,
    cross_kernels: &[CrossKernelMatrix],
    view: View,
) -> Result<DMatrix<f64>> {
    match view {
        View::First => {
            let kt = combine_cross(&model.mu, cross_kernels)?;
            if kt.train_ids() != model.train_ids.as_slice() {
                return Err(Error::IdMismatch(
                    "cross kernel train ids differ from the model",
                ));
            }
            Ok(kt.values() * model.gamma())
        }
        View::Second => {
            let xi = model
                .xi
                .as_ref()
                .ok_or(Error::invalid("model has no second view"))?;
            let [kt] = cross_kernels else {
                return Err(Error::DimensionMismatch {
                    context: "second-view cross kernels",
                    expected: 1,
                    found: cross_kernels.len(),
                });
            };
            if Some(kt.train_ids()) != model.second_view_ids.as_deref() {
                return Err(Error::IdMismatch(
                    "cross kernel ids differ from the model's second view",
                ));
            }
            Ok(kt.values() * xi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn labels(v: &[usize]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn label_vector_validation() {
        assert!(LabelVector::new(vec![]).is_err());
        assert!(LabelVector::new(vec![1, 3]).is_err());
        assert!(LabelVector::new(vec![0, 1]).is_err());
        assert!(LabelVector::with_classes(vec![1, 1], 2).is_err());
        assert_eq!(labels(&[2, 1, 2]).class_counts(), [1, 2]);
    }

    #[test]
    fn kfda_example() {
        let (l, lp) = build_kfda(&labels(&[1, 1, 2]), KfdaVariant::A);
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(lp, expected);
        assert_eq!(l, DMatrix::identity(3, 3) - expected);
        let (l, _) = build_kfda(&labels(&[1, 1, 2]), KfdaVariant::B);
        assert_eq!(l, DMatrix::identity(3, 3));
    }

    #[test]
    fn kfda_singletons_degenerate() {
        let (l, lp) = build_kfda(&labels(&[1, 2]), KfdaVariant::A);
        assert_eq!(lp, DMatrix::identity(2, 2));
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kfda_trace_is_class_count() {
        let (_, lp) = build_kfda(&labels(&[3, 1, 2, 2, 3, 3, 1]), KfdaVariant::A);
        assert_relative_eq!(lp.trace(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn kcca_examples() {
        let (l, lp) = build_kcca(&KernelMatrix::identity(3), 0.5).unwrap();
        assert_eq!(l, DMatrix::identity(3, 3));
        assert!((lp - DMatrix::identity(3, 3)).amax() < 1e-15);

        let kz = KernelMatrix::from_row_slice(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let (_, lp) = build_kcca(&kz, 0.5).unwrap();
        assert!((lp - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn lkcca_pairing_example() {
        let (e, dx, dz) = lkcca_pairing(&labels(&[1, 2]), &labels(&[2, 1, 2])).unwrap();
        assert_eq!(
            e,
            DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
        );
        assert_eq!(dx, [1.0, 2.0]);
        assert_eq!(dz, [1.0, 1.0, 1.0]);

        let parts = build_lkcca(
            &labels(&[1, 2]),
            &labels(&[2, 1, 2]),
            &KernelMatrix::identity(3),
            0.5,
        )
        .unwrap();
        assert!((parts.lp - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])).amax() < 1e-14);
        assert_eq!(
            parts.l,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])
        );
    }

    #[test]
    fn lkcca_missing_class_rejected() {
        let y = labels(&[1, 2, 2]);
        let w = labels(&[1, 1]);
        assert!(build_lkcca(&y, &w, &KernelMatrix::identity(2), 0.5).is_err());
    }

    #[test]
    fn xi_identity_kernels() {
        let gamma = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let xi = compute_xi_kcca(
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
            &gamma,
            &[4.0],
            0.3,
        )
        .unwrap();
        assert_relative_eq!(xi[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(xi[(1, 0)], 1.0, epsilon = 1e-15);
        assert!(compute_xi_kcca(
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
            &gamma,
            &[0.0],
            0.3
        )
        .is_err());
    }

    #[test]
    fn xi_lkcca_identity_system() {
        let gamma = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let e = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let kx = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let xi = compute_xi_lkcca(
            &DMatrix::identity(3, 3),
            &kx,
            &e,
            &[1.0; 3],
            &gamma,
            &[1.0],
            0.5,
        )
        .unwrap();
        let expected = e.transpose() * &kx * &gamma;
        assert!((xi - expected).amax() < 1e-14);
    }

    #[test]
    fn fit_dispatch_kfda() {
        let y = labels(&[1, 1, 2, 2, 3, 3]);
        let k = KernelMatrix::from_values(DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                2.0
            } else if i / 2 == j / 2 {
                1.0
            } else {
                0.1
            }
        }))
        .unwrap();
        let spec = InstanceSpec::new(Task::Kfda(KfdaVariant::A), 0.5).unwrap();
        let model = fit_instance(
            &spec,
            &[k],
            &SimplexWeights::uniform(1),
            &SideInputs::Labels(y),
        )
        .unwrap();
        assert_eq!(model.gamma().ncols(), 2);
        assert!(model.xi.is_none());
    }

    #[test]
    fn mismatched_side_inputs() {
        let spec = InstanceSpec::new(Task::Kcca, 0.5).unwrap();
        let side = SideInputs::Labels(labels(&[1, 2]));
        let err = fit_instance(
            &spec,
            &[KernelMatrix::identity(2)],
            &SimplexWeights::uniform(1),
            &side,
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn project_zero_row_and_vertex_weights() {
        let y = labels(&[1, 1, 2, 2]);
        let k1 = KernelMatrix::from_values(DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                1.0
            } else if i / 2 == j / 2 {
                0.8
            } else {
                0.1
            }
        }))
        .unwrap();
        let k2 = KernelMatrix::from_values(DMatrix::from_fn(
            4,
            4,
            |i, j| if i == j { 1.5 } else { 0.3 },
        ))
        .unwrap();
        let spec = InstanceSpec::new(Task::Kfda(KfdaVariant::B), 0.4).unwrap();
        let side = SideInputs::Labels(y);
        let both = fit_instance(
            &spec,
            &[k1.clone(), k2.clone()],
            &SimplexWeights::vertex(2, 0),
            &side,
        )
        .unwrap();
        let single = fit_instance(
            &spec,
            core::slice::from_ref(&k1),
            &SimplexWeights::uniform(1),
            &side,
        )
        .unwrap();

        let zero = CrossKernelMatrix::for_train(DMatrix::zeros(1, 4), &k1).unwrap();
        let z = project(&both, &[zero.clone(), zero], View::First).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));

        let rows = CrossKernelMatrix::for_train(k1.values().clone(), &k1).unwrap();
        let rows2 = CrossKernelMatrix::for_train(k2.values().clone(), &k1).unwrap();
        let a = project(&both, &[rows.clone(), rows2], View::First).unwrap();
        let b = project(&single, &[rows], View::First).unwrap();
        assert_eq!(a, b);
        assert!((a - k1.values() * single.gamma()).amax() < 1e-14);
    }
}
