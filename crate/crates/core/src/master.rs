//! Restricted master problem of the column-generation loop.
//!
//! Given scores `S_m(η^(c))` for every stored constraint `c`, solve
//!
//! ```text
//! maximize ζ  s.t.  Σ_m μ_m S_m(η^(c)) ≥ ζ  ∀c,   Σ μ = 1,  μ ≥ 0
//! ```
//!
//! with a dense tableau simplex. The LP has `M + 1` structural variables,
//! so nothing fancier is needed. Bland's rule makes pivoting finite and the
//! returned vertex deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::SimplexWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub mu: SimplexWeights,
    pub zeta: f64,
}

const PIVOT_TOL: f64 = 1e-12;

/// Solves the restricted master LP. `scores[c][m]` is `S_m` evaluated at
/// constraint `c`.
pub fn solve_restricted_master(scores: &[Vec<f64>]) -> Result<MasterSolution> {
    let first = scores
        .first()
        .ok_or(Error::Empty("restricted master constraints"))?;
    let m = first.len();
    if m == 0 {
        return Err(Error::Empty("restricted master kernels"));
    }
    if scores.iter().any(|row| row.len() != m) {
        return Err(Error::DimensionMismatch {
            context: "restricted master score rows",
            expected: m,
            found: scores.iter().map(Vec::len).find(|&l| l != m).unwrap_or(m),
        });
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("restricted master scores"));
    }

    // Shift so that ζ = floor + scale * t with t ≥ 0 and shifted scores in [0, 1].
    let floor = scores
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let ceil = scores
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = if ceil > floor { ceil - floor } else { 1.0 };
    let a: Vec<Vec<f64>> = scores
        .iter()
        .map(|row| row.iter().map(|v| (v - floor) / scale).collect())
        .collect();

    let t = run_simplex(&a, m)?;
    let mu = SimplexWeights::from_solver(t.mu)?;
    Ok(MasterSolution {
        mu,
        zeta: floor + scale * t.t,
    })
}

struct Vertex {
    mu: Vec<f64>,
    t: f64,
}

/// Tableau simplex on the shifted problem.
///
/// Columns: `μ_0..μ_{M-1}`, `t`, slacks `s_0..s_{C-1}`, then the right-hand
/// side. Rows: one per constraint `t - Σ a_cm μ_m + s_c = 0`, then the
/// simplex row `Σ μ = 1`. The starting basis is `{s_c} ∪ {μ_0}`.
fn run_simplex(a: &[Vec<f64>], m: usize) -> Result<Vertex> {
    let c = a.len();
    let t_col = m;
    let n_vars = m + 1 + c;
    let rhs = n_vars;
    let rows = c + 1;

    let mut tab = vec![vec![0.0; n_vars + 1]; rows];
    for (ci, row) in a.iter().enumerate() {
        // row c plus a_c0 times the simplex row, which eliminates μ_0
        for mi in 0..m {
            tab[ci][mi] = row[0] - row[mi];
        }
        tab[ci][t_col] = 1.0;
        tab[ci][m + 1 + ci] = 1.0;
        tab[ci][rhs] = row[0];
    }
    for mi in 0..m {
        tab[c][mi] = 1.0;
    }
    tab[c][rhs] = 1.0;

    let mut basis: Vec<usize> = (0..c).map(|ci| m + 1 + ci).collect();
    basis.push(0);

    // reduced costs of "maximize t"
    let mut obj = vec![0.0; n_vars + 1];
    obj[t_col] = -1.0;

    let max_pivots = 50 * (rows + n_vars) + 1000;
    for _ in 0..max_pivots {
        let Some(enter) = (0..n_vars).find(|&j| obj[j] < -PIVOT_TOL) else {
            let mut mu = vec![0.0; m];
            let mut t = 0.0;
            for (r, &b) in basis.iter().enumerate() {
                if b < m {
                    mu[b] = tab[r][rhs];
                } else if b == t_col {
                    t = tab[r][rhs];
                }
            }
            return Ok(Vertex { mu, t });
        };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let coef = tab[r][enter];
            if coef > PIVOT_TOL {
                let ratio = tab[r][rhs].max(0.0) / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - PIVOT_TOL
                            || (ratio <= lratio + PIVOT_TOL && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let (pr, _) = leave.ok_or(Error::Numerical("restricted master LP unbounded"))?;
        pivot(&mut tab, &mut obj, pr, enter);
        basis[pr] = enter;
    }
    Err(Error::Numerical("restricted master LP did not terminate"))
}

fn pivot(tab: &mut [Vec<f64>], obj: &mut [f64], pr: usize, pc: usize) {
    let p = tab[pr][pc];
    for v in tab[pr].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[pr].clone();
    for (r, row) in tab.iter_mut().enumerate() {
        if r == pr {
            continue;
        }
        let f = row[pc];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        }
    }
    let f = obj[pc];
    if f != 0.0 {
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        obj[pc] = 0.0;
    }
}
