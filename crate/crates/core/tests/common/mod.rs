#![allow(dead_code)]

use mklrt_core::kernel::{distance_from_kernel, rbf_from_distance};
use mklrt_core::nalgebra::DMatrix;
use mklrt_core::{KernelMatrix, LabelVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// `X Xᵀ / d` for Gaussian features; full rank when `d >= n`.
pub fn linear_kernel(rng: &mut ChaCha8Rng, n: usize, d: usize) -> KernelMatrix {
    let x = gaussian_matrix(rng, n, d);
    KernelMatrix::from_values(&x * x.transpose() / d as f64).unwrap()
}

pub fn linear_kernel_of(x: &DMatrix<f64>) -> KernelMatrix {
    KernelMatrix::from_values(x * x.transpose()).unwrap()
}

/// Exponential-of-distance kernel on Gaussian points; full rank for
/// distinct points.
pub fn rbf_kernel(rng: &mut ChaCha8Rng, n: usize, d: usize) -> KernelMatrix {
    let x = gaussian_matrix(rng, n, d);
    let (dist, _) = distance_from_kernel(&linear_kernel_of(&x));
    rbf_from_distance(&dist).unwrap()
}

/// Labels in `1..=p`, every class occupied.
pub fn labels(rng: &mut ChaCha8Rng, n: usize, p: usize) -> LabelVector {
    assert!(n >= p);
    let mut y: Vec<usize> = (0..n)
        .map(|i| if i < p { i + 1 } else { rng.gen_range(1..=p) })
        .collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        y.swap(i, j);
    }
    LabelVector::new(y).unwrap()
}

/// `M` random full-rank kernels of size `n`, alternating linear and RBF.
pub fn kernel_family(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<KernelMatrix> {
    (0..m)
        .map(|i| {
            if i % 2 == 0 {
                linear_kernel(rng, n, n + 2 + i)
            } else {
                rbf_kernel(rng, n, 2 + i)
            }
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
