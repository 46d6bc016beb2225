//! Seeded synthetic data and fold assignment.

use mklrt_core::nalgebra::DMatrix;
use mklrt_core::LabelVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points drawn from isotropic unit-variance Gaussians in 2-D, one blob per
/// class, with class `c` centred at `((c-1)·separation, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub points: DMatrix<f64>,
    pub labels: Vec<usize>,
}

pub fn two_blobs(rng: &mut ChaCha8Rng, per_class: usize, separation: f64) -> Blobs {
    blobs(rng, 2, per_class, separation)
}

pub fn blobs(rng: &mut ChaCha8Rng, classes: usize, per_class: usize, separation: f64) -> Blobs {
    let n = classes * per_class;
    let mut points = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for c in 0..classes {
        for i in 0..per_class {
            let r = c * per_class + i;
            points[(r, 0)] = c as f64 * separation + rng.sample::<f64, _>(StandardNormal);
            points[(r, 1)] = rng.sample::<f64, _>(StandardNormal);
            labels.push(c + 1);
        }
    }
    Blobs { points, labels }
}

/// Euclidean distances between the rows of `a` and `b`.
pub fn pairwise_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| (a.row(i) - b.row(j)).norm())
}

/// Gram matrix `X Yᵀ` of standard Gaussian features; carries no label
/// information.
pub fn noise_features(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Fold ids `0..k`: items of each class are shuffled, then dealt round-robin
/// continuing from where the previous class stopped.
pub fn stratified_folds(labels: &LabelVector, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in 1..=labels.n_classes() {
        let mut idx: Vec<usize> = (0..labels.len())
            .filter(|&i| labels.labels()[i] == class)
            .collect();
        idx.shuffle(rng);
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    folds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_seeded() {
        let a = two_blobs(&mut rng(3), 5, 10.0);
        let b = two_blobs(&mut rng(3), 5, 10.0);
        assert_eq!(a, b);
        assert_ne!(a, two_blobs(&mut rng(4), 5, 10.0));
        assert_eq!(a.labels, [1, 1, 1, 1, 1, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn blob_means_are_separated() {
        let b = two_blobs(&mut rng(1), 400, 10.0);
        let m1 = b.points.rows(0, 400).row_mean();
        let m2 = b.points.rows(400, 400).row_mean();
        assert!(((m2 - m1)[0] - 10.0).abs() < 0.3);
    }

    #[test]
    fn folds_are_balanced_per_class() {
        let y = LabelVector::new([vec![1; 10], vec![2; 7]].concat()).unwrap();
        let f = stratified_folds(&y, 3, &mut rng(0));
        for class in 1..=2 {
            let mut counts = [0; 3];
            for (i, &fold) in f.iter().enumerate() {
                if y.labels()[i] == class {
                    counts[fold] += 1;
                }
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
        assert_eq!(f, stratified_folds(&y, 3, &mut rng(0)));
    }

    #[test]
    fn distances() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        let d = pairwise_distances(&a, &a);
        assert_eq!(d[(0, 1)], 5.0);
        assert_eq!(d[(1, 1)], 0.0);
    }
}
