//! Brute-force check of the SILP weights: evaluate the ratio-trace optimum
//! on a lattice over the simplex and keep the best point.
//!
//! The objective as a function of `μ` is generally not concave in the
//! original parametrization, so an exhaustive grid is used rather than a
//! local search. The grid under-approximates the simplex, so comparisons
//! against the SILP are one-sided.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{combine, KernelMatrix, SimplexWeights};
use crate::ratio_trace::{solve_gevd_pencil, RatioTraceInstance};

/// All lattice points `k / n` (with `n = 1 / step`) on the simplex, in
/// lexicographically ascending order.
pub fn grid_simplex(m: usize, step: f64) -> Result<Vec<SimplexWeights>> {
    if m == 0 {
        return Err(Error::invalid("grid needs at least one kernel"));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid("grid step must lie in (0, 1]"));
    }
    let n = libm::round(1.0 / step);
    if (n * step - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(alloc::format!(
            "grid step {step} does not divide 1"
        )));
    }
    let n = n as usize;
    let mut out = Vec::new();
    let mut counts = vec![0usize; m];
    compositions(&mut counts, 0, n, n, &mut out);
    Ok(out)
}

fn compositions(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    n: usize,
    out: &mut Vec<SimplexWeights>,
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        let mu: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        // k/n sums to 1 up to rounding; SimplexWeights::new checks 1e-12
        out.push(SimplexWeights::new(mu).expect("lattice point lies on the simplex"));
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        compositions(counts, pos + 1, remaining - c, n, out);
    }
}

/// Ratio-trace optimum at fixed weights: combine, solve the pencil, and
/// return the sum of all non-zero generalized eigenvalues.
pub fn objective_at_mu(
    mu: &SimplexWeights,
    kernels: &[KernelMatrix],
    l: &DMatrix<f64>,
    lp: &DMatrix<f64>,
    sigma: f64,
) -> Result<f64> {
    let k = combine(mu, kernels)?;
    let inst = RatioTraceInstance::new(k, l.clone(), lp.clone(), sigma)?;
    Ok(solve_gevd_pencil(&inst, None)?.objective)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub mu: SimplexWeights,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_mu: SimplexWeights,
    pub best_objective: f64,
    pub table: Vec<OracleRow>,
}

/// Relative tolerance under which two grid objectives count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Picks the best row of a precomputed table. Ties (within `TIE_TOL`
/// relative) go to the earliest row, which for [`grid_simplex`] order is the
/// lexicographically smallest `μ`.
pub fn best_of_table(table: Vec<OracleRow>) -> Result<OracleResult> {
    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        if !row.objective.is_finite() {
            return Err(Error::NonFinite("oracle objective"));
        }
        if let Some(b) = best {
            let bv = table[b].objective;
            if row.objective > bv + TIE_TOL * bv.abs().max(1.0) {
                best = Some(i);
            }
        } else {
            best = Some(i);
        }
    }
    let b = best.ok_or(Error::Empty("oracle table"))?;
    Ok(OracleResult {
        best_mu: table[b].mu.clone(),
        best_objective: table[b].objective,
        table,
    })
}

/// Exhaustive search over [`grid_simplex`]`(M, step)`.
pub fn brute_force_mkl(
    kernels: &[KernelMatrix],
    l: &DMatrix<f64>,
    lp: &DMatrix<f64>,
    sigma: f64,
    step: f64,
) -> Result<OracleResult> {
    let grid = grid_simplex(kernels.len(), step)?;
    let table = grid
        .into_iter()
        .map(|mu| {
            let objective = objective_at_mu(&mu, kernels, l, lp, sigma)?;
            Ok(OracleRow { mu, objective })
        })
        .collect::<Result<Vec<_>>>()?;
    best_of_table(table)
}
