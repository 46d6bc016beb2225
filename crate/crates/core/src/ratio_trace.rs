//! Kernelized ratio-trace problems and their generalized eigenvalue solution.
//!
//! The kernelized problem maximizes
//! `trace[(Γᵀ((1-σ)KLK + σK)Γ)⁻¹ (ΓᵀKL'KΓ)]`, whose optimum is spanned by
//! the generalized eigenvectors of the pencil `(KL'K, (1-σ)KLK + σK)` with
//! non-zero eigenvalues. The pencil is reduced with the Cholesky factor of
//! the right-hand matrix and solved as an ordinary symmetric eigenproblem.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg;

/// Eigenvalues at or below `RANK_TOL * λ_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Relative jitter added once to a numerically singular right-hand matrix.
pub const JITTER: f64 = 1e-10;
/// Relative symmetry tolerance for `L` and `L'`.
pub const LAPLACIAN_SYMMETRY_TOL: f64 = 1e-9;

/// Non-zero eigenpairs of a symmetric PSD matrix, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
}

impl Eigenpairs {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Columns `sqrt(λ_i) u_i`, so that `F Fᵀ` reconstructs the matrix.
    pub fn scaled_columns(&self) -> DMatrix<f64> {
        let mut out = self.vectors.clone();
        for (mut col, &v) in out.column_iter_mut().zip(&self.values) {
            col *= libm::sqrt(v);
        }
        out
    }
}

/// Eigenpairs of a symmetric PSD matrix whose eigenvalue exceeds
/// `RANK_TOL * max(λ_max, 0)`.
pub fn psd_eigenfactor(m: &DMatrix<f64>) -> Result<Eigenpairs> {
    psd_eigenfactor_with_tol(m, RANK_TOL)
}

/// [`psd_eigenfactor`] with an explicit relative rank tolerance.
pub fn psd_eigenfactor_with_tol(m: &DMatrix<f64>, tol: f64) -> Result<Eigenpairs> {
    linalg::ensure_symmetric(m, LAPLACIAN_SYMMETRY_TOL, "PSD eigenfactor")?;
    let (values, vectors) = linalg::sorted_symmetric_eigen(m)?;
    let lmax = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = tol * lmax;
    let rank = values
        .iter()
        .take_while(|&&v| v > cutoff && v > 0.0)
        .count();
    Ok(Eigenpairs {
        values: values[..rank].to_vec(),
        vectors: vectors.columns(0, rank).into_owned(),
    })
}

/// Low-rank factors of `L` and `L'`: `L = G Gᵀ` and `L' = Σ h_i h_iᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    /// `N × l`, columns `sqrt(α_i) u_i`.
    pub g: DMatrix<f64>,
    /// `N × l'`, column `i` is `h_i = sqrt(β_i) v_i`.
    pub h: DMatrix<f64>,
}

impl PsdFactor {
    pub fn new(l: &DMatrix<f64>, lp: &DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(l, lp, RANK_TOL)
    }

    pub fn with_tolerance(l: &DMatrix<f64>, lp: &DMatrix<f64>, tol: f64) -> Result<Self> {
        check_dim("L vs L'", l.nrows(), lp.nrows())?;
        let g = psd_eigenfactor_with_tol(l, tol)?.scaled_columns();
        let h = psd_eigenfactor_with_tol(lp, tol)?.scaled_columns();
        Ok(Self { g, h })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// `l = rank(L)`.
    pub fn rank_l(&self) -> usize {
        self.g.ncols()
    }

    /// `l' = rank(L')`.
    pub fn rank_lp(&self) -> usize {
        self.h.ncols()
    }
}

/// One kernelized ratio-trace problem: `(K, L, L', σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTraceInstance {
    k: KernelMatrix,
    l: DMatrix<f64>,
    lp: DMatrix<f64>,
    sigma: f64,
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!(
            "sigma must lie strictly inside (0, 1), got {sigma}"
        )))
    }
}

impl RatioTraceInstance {
    /// Validates shapes, symmetry of `L` and `L'`, and `σ ∈ (0, 1)`.
    ///
    /// `L = 0` is accepted (it arises for KFDA with one item per class) and
    /// leaves `σK` as the right-hand matrix; a warning is logged.
    pub fn new(k: KernelMatrix, l: DMatrix<f64>, lp: DMatrix<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let n = k.size();
        if n == 0 {
            return Err(Error::Empty("ratio-trace instance"));
        }
        check_dim("L rows", n, l.nrows())?;
        check_dim("L' rows", n, lp.nrows())?;
        linalg::ensure_symmetric(&l, LAPLACIAN_SYMMETRY_TOL, "L")?;
        linalg::ensure_symmetric(&lp, LAPLACIAN_SYMMETRY_TOL, "L'")?;
        linalg::ensure_finite(&l, "L")?;
        linalg::ensure_finite(&lp, "L'")?;
        if l.iter().all(|&v| v == 0.0) {
            log::warn!("ratio-trace instance has L = 0; right-hand matrix reduces to sigma*K");
        }
        Ok(Self { k, l, lp, sigma })
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.k
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn lp(&self) -> &DMatrix<f64> {
        &self.lp
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The pencil `(A, B) = (KL'K, (1-σ)KLK + σK)`, both symmetrized.
    pub fn pencil(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        pencil_for(self.k.values(), &self.l, &self.lp, self.sigma)
    }
}

pub(crate) fn pencil_for(
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
    lp: &DMatrix<f64>,
    sigma: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = k * lp * k;
    let b = (k * l * k) * (1.0 - sigma) + k * sigma;
    (linalg::symmetrize(&a), linalg::symmetrize(&b))
}

/// Generalized eigenvectors and eigenvalues of a ratio-trace pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct GevdResult {
    /// `N × r` generalized eigenvectors, B-orthonormal.
    pub gamma: DMatrix<f64>,
    /// Retained eigenvalues, strictly positive and descending.
    pub lambda: Vec<f64>,
    /// Sum of every non-zero generalized eigenvalue (not only the retained
    /// ones), i.e. the optimal ratio-trace value.
    pub objective: f64,
    /// Number of non-zero generalized eigenvalues before truncation.
    pub rank: usize,
    /// Jitter added to the right-hand matrix, if it was numerically singular.
    pub jitter: Option<f64>,
}

impl GevdResult {
    pub fn dims(&self) -> usize {
        self.lambda.len()
    }
}

/// Solves `A γ = λ B γ` for symmetric `A` and symmetric positive-definite `B`.
///
/// With `allow_jitter`, a `B` that fails Cholesky or has a squared pivot
/// below `JITTER * trace(B) / N` receives `JITTER * trace(B) / N * I` once.
fn symmetric_definite_gevd(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    dims: Option<usize>,
    allow_jitter: bool,
) -> Result<GevdResult> {
    linalg::ensure_finite(a, "pencil left-hand matrix")?;
    linalg::ensure_finite(b, "pencil right-hand matrix")?;
    let n = b.nrows();
    let scale = b.trace() / n as f64;
    let singular_floor = JITTER * scale.abs();

    let mut jitter = None;
    let chol = match b.clone().cholesky() {
        Some(c) if !allow_jitter || min_squared_pivot(c.l_dirty()) > singular_floor => c,
        _ if allow_jitter && scale > 0.0 => {
            let delta = JITTER * scale;
            log::debug!("right-hand matrix numerically singular; adding jitter {delta:e}");
            jitter = Some(delta);
            let mut bj = b.clone();
            for i in 0..n {
                bj[(i, i)] += delta;
            }
            bj.cholesky().ok_or(Error::Factorization(
                "right-hand matrix not positive definite after jitter",
            ))?
        }
        _ => {
            return Err(Error::Factorization(
                "right-hand matrix not positive definite",
            ))
        }
    };

    let lower = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let left = lower
        .solve_lower_triangular(a)
        .ok_or(Error::Factorization("triangular solve"))?;
    let reduced = lower
        .solve_lower_triangular(&left.transpose())
        .ok_or(Error::Factorization("triangular solve"))?;
    let (values, vectors) = linalg::sorted_symmetric_eigen(&linalg::symmetrize(&reduced))?;

    let positive = values.iter().take_while(|&&v| v > 0.0).count();
    let candidates = lower
        .transpose()
        .solve_upper_triangular(&vectors.columns(0, positive).into_owned())
        .ok_or(Error::Factorization("triangular solve"))?;
    // With jitter, pairs normalized mostly by δ‖γ‖² lie in the null space
    // of B and are round-off, not eigenpairs of the original pencil.
    let genuine: Vec<usize> = match jitter {
        Some(delta) => (0..positive)
            .filter(|&j| delta * candidates.column(j).norm_squared() < 0.5)
            .collect(),
        None => (0..positive).collect(),
    };
    let lmax = genuine.first().map_or(0.0, |&j| values[j]);
    let cutoff = RANK_TOL * lmax;
    let genuine: Vec<usize> = genuine
        .into_iter()
        .filter(|&j| values[j] > cutoff)
        .collect();
    let rank = genuine.len();
    if rank == 0 {
        return Err(Error::invalid(
            "pencil has no positive generalized eigenvalues",
        ));
    }
    let objective: f64 = genuine.iter().map(|&j| values[j]).sum();
    let keep = dims.map_or(rank, |d| d.min(rank));
    let cols = &genuine[..keep];
    let mut gamma = candidates.select_columns(cols);
    linalg::fix_column_signs(&mut gamma);
    linalg::ensure_finite(&gamma, "generalized eigenvectors")?;
    let values: Vec<f64> = cols.iter().map(|&j| values[j]).collect();

    Ok(GevdResult {
        gamma,
        lambda: values,
        objective,
        rank,
        jitter,
    })
}

fn min_squared_pivot(l: &DMatrix<f64>) -> f64 {
    (0..l.nrows())
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min)
}

/// Solves the plain ratio-trace problem `max trace[(WᵀS₁W)⁻¹(WᵀS₂W)]`
/// through the pencil `(S₂, S₁)`. `S₁` must be positive definite.
pub fn solve_generic_ratio_trace(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<GevdResult> {
    linalg::ensure_symmetric(s1, LAPLACIAN_SYMMETRY_TOL, "S1")?;
    linalg::ensure_symmetric(s2, LAPLACIAN_SYMMETRY_TOL, "S2")?;
    check_dim("S1 vs S2", s1.nrows(), s2.nrows())?;
    symmetric_definite_gevd(
        &linalg::symmetrize(s2),
        &linalg::symmetrize(s1),
        None,
        false,
    )
}

/// Solves the kernelized pencil `KL'K γ = λ ((1-σ)KLK + σK) γ` and keeps
/// the top `min(dims, rank)` eigenpairs.
pub fn solve_gevd_pencil(inst: &RatioTraceInstance, dims: Option<usize>) -> Result<GevdResult> {
    if dims == Some(0) {
        return Err(Error::invalid("dims must be at least 1"));
    }
    let (a, b) = inst.pencil();
    symmetric_definite_gevd(&a, &b, dims, true)
}

/// `trace[(WᵀS₁W)⁻¹(WᵀS₂W)]` for an explicit projection `W`.
pub fn ratio_trace_value(w: &DMatrix<f64>, s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let denom = w.transpose() * s1 * w;
    let numer = w.transpose() * s2 * w;
    let solved = linalg::lu_solve(&denom, &numer, "ratio-trace denominator")?;
    Ok(solved.trace())
}
