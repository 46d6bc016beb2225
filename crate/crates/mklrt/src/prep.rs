//! Per-kernel preprocessing, recorded so test kernels get the same treatment.

use mklrt_core::kernel::{
    center_cross_with_means, center_train, normalize_trace, rbf_bandwidth, rbf_from_distance,
    rbf_with_bandwidth, train_column_means, DistanceMatrix,
};
use mklrt_core::{CrossKernelMatrix, KernelMatrix};
use serde::{Deserialize, Serialize};

use crate::config::InputKind;
use crate::error::Result;

/// What was done to one training kernel, in order: RBF map, centering,
/// trace scaling.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub rbf_bandwidth: Option<f64>,
    pub center_means: Option<Vec<f64>>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrepOptions {
    pub input: InputKind,
    pub center: bool,
    pub normalize: bool,
}

pub fn prepare_train(raw: &KernelMatrix, opts: PrepOptions) -> Result<(KernelMatrix, Preprocess)> {
    let mut rec = Preprocess::default();
    let mut k = match opts.input {
        InputKind::Kernel => raw.clone(),
        InputKind::Distance => {
            let d = DistanceMatrix::new(raw.values().clone())?;
            rec.rbf_bandwidth = Some(rbf_bandwidth(&d)?);
            raw.with_values(rbf_from_distance(&d)?.into_values())?
        }
    };
    if opts.center {
        rec.center_means = Some(train_column_means(&k));
        k = center_train(&k);
    }
    if opts.normalize {
        let (scaled, s) = normalize_trace(&k)?;
        rec.scale = Some(s);
        k = scaled;
    }
    if let Err(e) = k.check_psd() {
        log::warn!("kernel over {} items is not PSD: {e}", k.size());
    }
    Ok((k, rec))
}

pub fn prepare_cross(raw: &CrossKernelMatrix, rec: &Preprocess) -> Result<CrossKernelMatrix> {
    let mut k = raw.clone();
    if let Some(eta) = rec.rbf_bandwidth {
        k = CrossKernelMatrix::new(
            rbf_with_bandwidth(k.values(), eta)?,
            k.test_ids().to_vec(),
            k.train_ids().to_vec(),
        )?;
    }
    if let Some(means) = &rec.center_means {
        k = center_cross_with_means(&k, means)?;
    }
    if let Some(s) = rec.scale {
        k = CrossKernelMatrix::new(
            k.values() * s,
            k.test_ids().to_vec(),
            k.train_ids().to_vec(),
        )?;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mklrt_core::nalgebra::DMatrix;

    fn kernel() -> KernelMatrix {
        KernelMatrix::from_row_slice(3, &[2.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]).unwrap()
    }

    #[test]
    fn identity_options_leave_kernel_alone() {
        let (k, rec) = prepare_train(&kernel(), PrepOptions::default()).unwrap();
        assert_eq!(k, kernel());
        assert_eq!(rec, Preprocess::default());
    }

    #[test]
    fn cross_on_training_items_reproduces_training_kernel() {
        let opts = PrepOptions {
            input: InputKind::Kernel,
            center: true,
            normalize: true,
        };
        let (k, rec) = prepare_train(&kernel(), opts).unwrap();
        let cross = kernel().cross_subset(&[0, 1, 2], &[0, 1, 2]).unwrap();
        let c = prepare_cross(&cross, &rec).unwrap();
        assert!((c.values() - k.values()).amax() < 1e-14);
        assert!((k.trace() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn distances_become_rbf() {
        let d = KernelMatrix::from_row_slice(2, &[0.0, 2.0, 2.0, 0.0]).unwrap();
        let opts = PrepOptions {
            input: InputKind::Distance,
            ..PrepOptions::default()
        };
        let (k, rec) = prepare_train(&d, opts).unwrap();
        assert_eq!(rec.rbf_bandwidth, Some(2.0));
        assert!((k.values()[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        let cross = CrossKernelMatrix::new(
            DMatrix::from_row_slice(1, 2, &[0.0, 4.0]),
            vec!["t".into()],
            k.item_ids().to_vec(),
        )
        .unwrap();
        let c = prepare_cross(&cross, &rec).unwrap();
        assert_eq!(c.values()[(0, 0)], 1.0);
        assert!((c.values()[(0, 1)] - (-2.0f64).exp()).abs() < 1e-15);
    }
}
