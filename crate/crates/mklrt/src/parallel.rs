//! Thread pool sizing and the parallel oracle grid.

use mklrt_core::nalgebra::DMatrix;
use mklrt_core::oracle::{best_of_table, grid_simplex, objective_at_mu, OracleResult, OracleRow};
use mklrt_core::KernelMatrix;
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "MKLRT_THREADS";

/// Worker count from `MKLRT_THREADS`; `None` leaves rayon's default.
pub fn configured_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

pub fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_threads()? {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

/// [`mklrt_core::oracle::brute_force_mkl`] with grid points evaluated in
/// parallel. The table keeps grid order, so the result does not depend on
/// the thread count.
pub fn brute_force_parallel(
    kernels: &[KernelMatrix],
    l: &DMatrix<f64>,
    lp: &DMatrix<f64>,
    sigma: f64,
    step: f64,
) -> Result<OracleResult> {
    let grid = grid_simplex(kernels.len(), step)?;
    let table = pool()?.install(|| {
        grid.into_par_iter()
            .map(|mu| {
                let objective = objective_at_mu(&mu, kernels, l, lp, sigma)?;
                Ok(OracleRow { mu, objective })
            })
            .collect::<mklrt_core::Result<Vec<_>>>()
    })?;
    Ok(best_of_table(table)?)
}
