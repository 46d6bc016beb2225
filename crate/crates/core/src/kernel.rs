//! Kernel matrices and the operations on them: convex combination,
//! kernel-induced distances, RBF kernels from distances, centering and
//! trace normalization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Relative symmetry tolerance for kernel matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Relative tolerance for the on-demand PSD check (scaled by `trace / N`).
pub const PSD_TOL: f64 = 1e-8;
/// Tolerance on `Σ μ = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

/// Dense symmetric Gram matrix over an ordered set of training items.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    item_ids: Vec<String>,
}

impl KernelMatrix {
    pub fn new(values: DMatrix<f64>, item_ids: Vec<String>) -> Result<Self> {
        linalg::ensure_symmetric(&values, SYMMETRY_TOL, "kernel matrix")?;
        linalg::ensure_finite(&values, "kernel matrix")?;
        check_dim("kernel item ids", values.nrows(), item_ids.len())?;
        Ok(Self { values, item_ids })
    }

    /// Builds a kernel whose item ids are the row indices `"0".."N-1"`.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        let ids = default_ids(values.nrows());
        Self::new(values, ids)
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        Self::from_values(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: DMatrix::identity(n, n),
            item_ids: default_ids(n),
        }
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    /// Replaces the values, keeping the ids. The new matrix must have the same size.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        check_dim("kernel size", self.size(), values.nrows())?;
        Self::new(values, self.item_ids.clone())
    }

    /// Principal submatrix over `idx`, keeping the matching ids.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let n = self.size();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch {
                context: "kernel subset index",
                expected: n,
                found: bad,
            });
        }
        Ok(Self {
            values: self.values.select_rows(idx).select_columns(idx),
            item_ids: idx.iter().map(|&i| self.item_ids[i].clone()).collect(),
        })
    }

    /// Rows `rows` against columns `cols`, as a cross kernel whose training
    /// items are `cols`.
    pub fn cross_subset(&self, rows: &[usize], cols: &[usize]) -> Result<CrossKernelMatrix> {
        let n = self.size();
        if let Some(&bad) = rows.iter().chain(cols).find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch {
                context: "kernel subset index",
                expected: n,
                found: bad,
            });
        }
        Ok(CrossKernelMatrix {
            values: self.values.select_rows(rows).select_columns(cols),
            test_ids: rows.iter().map(|&i| self.item_ids[i].clone()).collect(),
            train_ids: cols.iter().map(|&i| self.item_ids[i].clone()).collect(),
        })
    }

    /// Checks positive semi-definiteness: the smallest eigenvalue must be
    /// at least `-1e-8 * trace / N`. Returns the smallest eigenvalue.
    pub fn check_psd(&self) -> Result<f64> {
        let n = self.size().max(1) as f64;
        let min = linalg::min_eigenvalue(&self.values);
        let floor = -PSD_TOL * (self.trace().abs() / n);
        if min >= floor {
            Ok(min)
        } else {
            Err(Error::invalid(format!(
                "kernel is not positive semi-definite: smallest eigenvalue {min:e} below {floor:e}"
            )))
        }
    }
}

/// Kernel evaluations between test items (rows) and training items (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossKernelMatrix {
    values: DMatrix<f64>,
    test_ids: Vec<String>,
    train_ids: Vec<String>,
}

impl CrossKernelMatrix {
    pub fn new(
        values: DMatrix<f64>,
        test_ids: Vec<String>,
        train_ids: Vec<String>,
    ) -> Result<Self> {
        check_dim("cross kernel test ids", values.nrows(), test_ids.len())?;
        check_dim("cross kernel train ids", values.ncols(), train_ids.len())?;
        linalg::ensure_finite(&values, "cross kernel")?;
        Ok(Self {
            values,
            test_ids,
            train_ids,
        })
    }

    /// Cross kernel against `train`, with test ids `"0".."N_t-1"`.
    pub fn for_train(values: DMatrix<f64>, train: &KernelMatrix) -> Result<Self> {
        let test_ids = default_ids(values.nrows());
        Self::new(values, test_ids, train.item_ids().to_vec())
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn test_ids(&self) -> &[String] {
        &self.test_ids
    }

    pub fn train_ids(&self) -> &[String] {
        &self.train_ids
    }

    pub fn n_test(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_train(&self) -> usize {
        self.values.ncols()
    }
}

/// Kernel weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::Empty("simplex weights"));
        }
        if mu.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                "simplex weights must be finite and nonnegative",
            ));
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "simplex weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(mu))
    }

    pub fn uniform(m: usize) -> Self {
        Self(alloc::vec![1.0 / m as f64; m])
    }

    /// The simplex vertex putting all weight on kernel `index`.
    pub fn vertex(m: usize, index: usize) -> Self {
        let mut mu = alloc::vec![0.0; m];
        mu[index] = 1.0;
        Self(mu)
    }

    /// Clamps tiny negative entries produced by floating-point pivoting and
    /// renormalizes onto the simplex.
    pub(crate) fn from_solver(mut mu: Vec<f64>) -> Result<Self> {
        for v in mu.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = mu.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::NonFinite("simplex weights"));
        }
        for v in mu.iter_mut() {
            *v /= sum;
        }
        Ok(Self(mu))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices whose weight strictly exceeds `threshold`.
    pub fn selected(&self, threshold: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Nonnegative symmetric distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        linalg::ensure_symmetric(&values, SYMMETRY_TOL, "distance matrix")?;
        linalg::ensure_finite(&values, "distance matrix")?;
        if (0..values.nrows()).any(|i| values[(i, i)] != 0.0) {
            return Err(Error::invalid("distance matrix must have a zero diagonal"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid(
                "distance matrix entries must be nonnegative",
            ));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    /// Mean of the off-diagonal entries.
    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.size();
        if n < 2 {
            return 0.0;
        }
        let total: f64 = self.0.iter().sum();
        total / (n * (n - 1)) as f64
    }
}

fn ensure_same_items(kernels: &[KernelMatrix]) -> Result<usize> {
    let first = kernels.first().ok_or(Error::Empty("kernel list"))?;
    let n = first.size();
    for k in &kernels[1..] {
        check_dim("kernel size", n, k.size())?;
        if k.item_ids != first.item_ids {
            return Err(Error::IdMismatch("base kernels must share item ordering"));
        }
    }
    Ok(n)
}

/// Convex combination `Σ μ_m K^m`, symmetrized after summation.
pub fn combine(weights: &SimplexWeights, kernels: &[KernelMatrix]) -> Result<KernelMatrix> {
    let n = ensure_same_items(kernels)?;
    check_dim("weights vs kernels", kernels.len(), weights.len())?;
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for (k, &w) in kernels.iter().zip(weights.as_slice()) {
        if w != 0.0 {
            sum += &k.values * w;
        }
    }
    Ok(KernelMatrix {
        values: linalg::symmetrize(&sum),
        item_ids: kernels[0].item_ids.clone(),
    })
}

/// Combines cross kernels with the same weights. All cross kernels must
/// share test and train ids.
pub fn combine_cross(
    weights: &SimplexWeights,
    kernels: &[CrossKernelMatrix],
) -> Result<CrossKernelMatrix> {
    let first = kernels.first().ok_or(Error::Empty("cross kernel list"))?;
    check_dim("weights vs cross kernels", kernels.len(), weights.len())?;
    let mut sum = DMatrix::<f64>::zeros(first.n_test(), first.n_train());
    for (k, &w) in kernels.iter().zip(weights.as_slice()) {
        if k.values.shape() != sum.shape() {
            return Err(Error::DimensionMismatch {
                context: "cross kernel shape",
                expected: first.n_train(),
                found: k.n_train(),
            });
        }
        if k.train_ids != first.train_ids || k.test_ids != first.test_ids {
            return Err(Error::IdMismatch("cross kernels must share item ordering"));
        }
        if w != 0.0 {
            sum += &k.values * w;
        }
    }
    Ok(CrossKernelMatrix {
        values: sum,
        test_ids: first.test_ids.clone(),
        train_ids: first.train_ids.clone(),
    })
}

/// Kernel-induced distances `d(i,j) = sqrt(K_ii + K_jj - K_ij - K_ji)`.
///
/// Negative squared distances (indefinite inputs) are clamped to zero; the
/// number of clamped pairs is returned alongside the matrix.
pub fn distance_from_kernel(k: &KernelMatrix) -> (DistanceMatrix, usize) {
    let v = &k.values;
    let n = k.size();
    let mut d = DMatrix::zeros(n, n);
    let mut clamped = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let sq = v[(i, i)] + v[(j, j)] - v[(i, j)] - v[(j, i)];
            let dist = if sq < 0.0 {
                clamped += 1;
                0.0
            } else {
                libm::sqrt(sq)
            };
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    if clamped > 0 {
        log::warn!("distance_from_kernel: clamped {clamped} negative squared distances to zero");
    }
    (DistanceMatrix(d), clamped)
}

/// Bandwidth used by [`rbf_from_distance`]: the off-diagonal mean distance.
pub fn rbf_bandwidth(d: &DistanceMatrix) -> Result<f64> {
    let eta = d.off_diagonal_mean();
    if eta > 0.0 && eta.is_finite() {
        Ok(eta)
    } else {
        Err(Error::invalid(
            "distance matrix has no positive off-diagonal entry; RBF bandwidth undefined",
        ))
    }
}

/// `K(i,j) = exp(-d(i,j) / η)` with η the mean off-diagonal distance.
pub fn rbf_from_distance(d: &DistanceMatrix) -> Result<KernelMatrix> {
    let eta = rbf_bandwidth(d)?;
    let values = d.values().map(|x| libm::exp(-x / eta));
    KernelMatrix::from_values(values)
}

/// Applies a fixed-bandwidth RBF map to raw (e.g. test-to-train) distances.
pub fn rbf_with_bandwidth(distances: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("RBF bandwidth must be positive"));
    }
    if distances.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("distances must be finite and nonnegative"));
    }
    Ok(distances.map(|x| libm::exp(-x / eta)))
}

fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows().max(1) as f64;
    m.column_iter().map(|c| c.sum() / n).collect()
}

/// Double centering `HKH` with `H = I - 11ᵀ/N`.
pub fn center_train(k: &KernelMatrix) -> KernelMatrix {
    let n = k.size();
    let means = column_means(&k.values);
    let grand = if n == 0 {
        0.0
    } else {
        means.iter().sum::<f64>() / n as f64
    };
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = k.values[(i, j)] - means[i] - means[j] + grand;
        }
    }
    KernelMatrix {
        values: linalg::symmetrize(&out),
        item_ids: k.item_ids.clone(),
    }
}

/// Column means of a training kernel, as needed by [`center_cross_with_means`].
pub fn train_column_means(k: &KernelMatrix) -> Vec<f64> {
    column_means(&k.values)
}

/// Centers test-to-train kernel rows consistently with [`center_train`]:
/// `(K_t - 1 1ᵀK/N) H`.
pub fn center_cross(kt: &CrossKernelMatrix, k_train: &KernelMatrix) -> Result<CrossKernelMatrix> {
    check_dim("cross kernel columns", k_train.size(), kt.n_train())?;
    if kt.train_ids != k_train.item_ids {
        return Err(Error::IdMismatch(
            "cross kernel train ids differ from training kernel",
        ));
    }
    center_cross_with_means(kt, &column_means(&k_train.values))
}

/// [`center_cross`] from stored training column means.
pub fn center_cross_with_means(kt: &CrossKernelMatrix, means: &[f64]) -> Result<CrossKernelMatrix> {
    check_dim("training column means", kt.n_train(), means.len())?;
    let n = means.len();
    let mut out = kt.values.clone();
    for mut row in out.row_iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v -= means[j];
        }
        let row_mean = row.sum() / n as f64;
        for v in row.iter_mut() {
            *v -= row_mean;
        }
    }
    Ok(CrossKernelMatrix {
        values: out,
        test_ids: kt.test_ids.clone(),
        train_ids: kt.train_ids.clone(),
    })
}

/// Scales `k` so that its trace equals `N`. Returns the scale factor too.
pub fn normalize_trace(k: &KernelMatrix) -> Result<(KernelMatrix, f64)> {
    let tr = k.trace();
    if !(tr > 0.0) {
        return Err(Error::invalid(format!(
            "trace normalization requires a positive trace, found {tr}"
        )));
    }
    let scale = k.size() as f64 / tr;
    Ok((
        KernelMatrix {
            values: &k.values * scale,
            item_ids: k.item_ids.clone(),
        },
        scale,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn km(n: usize, data: &[f64]) -> KernelMatrix {
        KernelMatrix::from_row_slice(n, data).unwrap()
    }

    #[test]
    fn combine_examples() {
        let k1 = km(2, &[2.0, 1.0, 1.0, 2.0]);
        let out = combine(
            &SimplexWeights::new(vec![1.0]).unwrap(),
            core::slice::from_ref(&k1),
        )
        .unwrap();
        assert_eq!(out.values(), k1.values());

        let w = SimplexWeights::new(vec![0.5, 0.5]).unwrap();
        let out = combine(&w, &[KernelMatrix::identity(2), km(2, &[1.0; 4])]).unwrap();
        assert_eq!(
            out.values(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])
        );

        let w = SimplexWeights::new(vec![0.2, 0.8]).unwrap();
        let out = combine(&w, &[km(1, &[3.0]), km(1, &[8.0])]).unwrap();
        assert_relative_eq!(out.values()[(0, 0)], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn combine_errors() {
        let w = SimplexWeights::uniform(2);
        assert!(matches!(combine(&w, &[]), Err(Error::Empty(_))));
        let err = combine(&w, &[KernelMatrix::identity(2), KernelMatrix::identity(3)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = combine(&w, &[KernelMatrix::identity(2)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn simplex_weights_validation() {
        assert!(SimplexWeights::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexWeights::new(vec![]).is_err());
        assert_eq!(
            SimplexWeights::new(vec![0.0, 1.0, 0.0])
                .unwrap()
                .selected(1e-3),
            [1]
        );
    }

    #[test]
    fn distance_examples() {
        let (d, clamped) = distance_from_kernel(&KernelMatrix::identity(2));
        assert_eq!(clamped, 0);
        assert_relative_eq!(d.values()[(0, 1)], 2f64.sqrt());
        let (d, _) = distance_from_kernel(&km(2, &[4.0, 2.0, 2.0, 1.0]));
        assert_relative_eq!(d.values()[(0, 1)], 1.0);
        let (d, _) = distance_from_kernel(&km(3, &[0.7; 9]));
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn distance_clamps_indefinite() {
        // K_11 + K_22 - 2 K_12 = 1 + 1 - 4 < 0
        let (d, clamped) = distance_from_kernel(&km(2, &[1.0, 2.0, 2.0, 1.0]));
        assert_eq!(clamped, 1);
        assert_eq!(d.values()[(0, 1)], 0.0);
    }

    #[test]
    fn rbf_examples() {
        let d = DistanceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])).unwrap();
        let k = rbf_from_distance(&d).unwrap();
        assert_relative_eq!(k.values()[(0, 1)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(k.values()[(0, 1)], 0.367879, epsilon = 1e-6);
        assert_eq!(k.values()[(0, 0)], 1.0);

        let zero = DistanceMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            rbf_from_distance(&zero),
            Err(Error::InvalidInput(_))
        ));

        let d = DistanceMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0],
        ))
        .unwrap();
        assert_relative_eq!(rbf_bandwidth(&d).unwrap(), 2.0);
        let k = rbf_from_distance(&d).unwrap();
        assert_relative_eq!(k.values()[(1, 2)], (-1.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(DistanceMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).is_err());
        assert!(
            DistanceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0])).is_err()
        );
    }

    #[test]
    fn center_examples() {
        let c = center_train(&km(3, &[1.0; 9]));
        assert!(c.values().iter().all(|v| v.abs() < 1e-15));
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert_eq!(center_train(&KernelMatrix::identity(2)).values(), &expected);
        assert_eq!(
            center_train(&km(2, &[2.0, 0.0, 0.0, 0.0])).values(),
            &expected
        );
    }

    #[test]
    fn center_cross_examples() {
        let train = KernelMatrix::identity(2);
        let kt = CrossKernelMatrix::for_train(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), &train)
            .unwrap();
        let c = center_cross(&kt, &train).unwrap();
        assert_relative_eq!(c.values()[(0, 0)], 0.5);
        assert_relative_eq!(c.values()[(0, 1)], -0.5);

        let train = km(3, &[3.0, 1.0, 0.5, 1.0, 2.0, 0.2, 0.5, 0.2, 1.5]);
        let means = DMatrix::from_fn(1, 3, |_, j| train.values().column(j).mean());
        let kt = CrossKernelMatrix::for_train(means, &train).unwrap();
        let c = center_cross(&kt, &train).unwrap();
        assert!(c.values().iter().all(|v| v.abs() < 1e-15));

        let centered = center_train(&train);
        for i in 0..3 {
            let row = DMatrix::from_fn(1, 3, |_, j| train.values()[(i, j)]);
            let kt = CrossKernelMatrix::for_train(row, &train).unwrap();
            let c = center_cross(&kt, &train).unwrap();
            for j in 0..3 {
                assert_relative_eq!(
                    c.values()[(0, j)],
                    centered.values()[(i, j)],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn center_cross_rejects_mismatch() {
        let train = KernelMatrix::identity(2);
        let kt = CrossKernelMatrix::new(
            DMatrix::zeros(1, 2),
            vec!["t".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(
            center_cross(&kt, &train),
            Err(Error::IdMismatch(_))
        ));
        let kt =
            CrossKernelMatrix::for_train(DMatrix::zeros(1, 3), &KernelMatrix::identity(3)).unwrap();
        assert!(matches!(
            center_cross(&kt, &train),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let (k, _) = normalize_trace(&KernelMatrix::identity(3)).unwrap();
        assert_eq!(k.values(), &DMatrix::identity(3, 3));
        let (k, s) = normalize_trace(&km(2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(k.values(), &DMatrix::identity(2, 2));
        assert_eq!(s, 0.5);
        let (k, _) = normalize_trace(&km(1, &[4.0])).unwrap();
        assert_eq!(k.values()[(0, 0)], 1.0);
        assert!(normalize_trace(&km(1, &[0.0])).is_err());
    }

    #[test]
    fn psd_check() {
        assert!(KernelMatrix::identity(3).check_psd().is_ok());
        assert!(km(2, &[1.0, 2.0, 2.0, 1.0]).check_psd().is_err());
    }
}
