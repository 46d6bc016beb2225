//! Fixed (non-learned) kernel combinations used as comparators.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{combine, CrossKernelMatrix, KernelMatrix, SimplexWeights};

/// Arithmetic mean kernel `(1/M) Σ K^m`.
pub fn average_kernel(kernels: &[KernelMatrix]) -> Result<KernelMatrix> {
    if kernels.is_empty() {
        return Err(Error::Empty("kernel list"));
    }
    combine(&SimplexWeights::uniform(kernels.len()), kernels)
}

/// Entrywise geometric mean kernel `(Π K^m)^{1/M}`.
///
/// Every entry of every kernel must be strictly positive. The result is not
/// guaranteed to be PSD; use [`KernelMatrix::check_psd`] if that matters.
pub fn product_kernel(kernels: &[KernelMatrix]) -> Result<KernelMatrix> {
    let first = kernels.first().ok_or(Error::Empty("kernel list"))?;
    if kernels.len() == 1 {
        if first.values().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid(
                "geometric mean kernel needs strictly positive entries",
            ));
        }
        return Ok(first.clone());
    }
    let n = first.size();
    let m = kernels.len() as f64;
    let mut log_sum = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in kernels {
        if k.size() != n {
            return Err(Error::DimensionMismatch {
                context: "kernel size",
                expected: n,
                found: k.size(),
            });
        }
        if k.item_ids() != first.item_ids() {
            return Err(Error::IdMismatch("base kernels must share item ordering"));
        }
        for (acc, &v) in log_sum.iter_mut().zip(k.values().iter()) {
            if !(v > 0.0) {
                return Err(Error::invalid(
                    "geometric mean kernel needs strictly positive entries",
                ));
            }
            *acc += libm::log(v);
        }
    }
    let values = log_sum.map(|s| libm::exp(s / m));
    first.with_values(crate::linalg::symmetrize(&values))
}

/// Entrywise geometric mean of test-to-train kernels, matching
/// [`product_kernel`] on the training side.
pub fn product_cross(kernels: &[CrossKernelMatrix]) -> Result<CrossKernelMatrix> {
    let first = kernels.first().ok_or(Error::Empty("cross kernel list"))?;
    let m = kernels.len() as f64;
    let mut log_sum = nalgebra::DMatrix::<f64>::zeros(first.n_test(), first.n_train());
    for k in kernels {
        if k.values().shape() != log_sum.shape() {
            return Err(Error::DimensionMismatch {
                context: "cross kernel shape",
                expected: first.n_train(),
                found: k.n_train(),
            });
        }
        if k.train_ids() != first.train_ids() || k.test_ids() != first.test_ids() {
            return Err(Error::IdMismatch("cross kernels must share item ordering"));
        }
        for (acc, &v) in log_sum.iter_mut().zip(k.values().iter()) {
            if !(v > 0.0) {
                return Err(Error::invalid(
                    "geometric mean kernel needs strictly positive entries",
                ));
            }
            *acc += libm::log(v);
        }
    }
    CrossKernelMatrix::new(
        log_sum.map(|s| libm::exp(s / m)),
        first.test_ids().to_vec(),
        first.train_ids().to_vec(),
    )
}

/// Picks the kernel with the highest selector score; ties go to the smaller
/// index. Non-finite scores are skipped. Returns the 0-based index.
pub fn best_individual_kernel<F>(
    kernels: &[KernelMatrix],
    mut selector: F,
) -> Result<(usize, KernelMatrix)>
where
    F: FnMut(usize, &KernelMatrix) -> f64,
{
    if kernels.is_empty() {
        return Err(Error::Empty("kernel list"));
    }
    let scores: Vec<f64> = kernels
        .iter()
        .enumerate()
        .map(|(i, k)| selector(i, k))
        .collect();
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            log::warn!("best_individual_kernel: kernel {i} scored {s}; skipped");
            continue;
        }
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    let idx = best.ok_or(Error::invalid(
        "no kernel received a finite selection score",
    ))?;
    Ok((idx, kernels[idx].clone()))
}
