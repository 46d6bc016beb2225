//! Convex multiple kernel learning for ratio-trace problems.
//!
//! The kernel weights `μ` are found by a semi-infinite linear program:
//! maximize `ζ` subject to `Σ_m μ_m S_m(η) ≥ ζ` for every `η ∈ R^{l×l'}`,
//! with `μ` on the simplex. Column generation alternates between finding the
//! most violated constraint (one SPD linear solve per column of `η`) and
//! re-solving a finite master LP over the constraints found so far.
//!
//! At the optimum `min_η Σ_m μ_m S_m(η)` equals `σ` times the ratio-trace
//! objective at `K = Σ μ_m K^m`, which is what ties the SILP to the original
//! non-convex problem.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::instances::{fit_with_matrices, task_matrices, FittedModel, InstanceSpec, SideInputs};
use crate::kernel::{combine, KernelMatrix, SimplexWeights};
use crate::linalg;
use crate::master::solve_restricted_master;
use crate::ratio_trace::{check_sigma, PsdFactor, RANK_TOL};

/// Stopping and selection parameters of the column-generation loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative gap `|1 - Σ μ_m S_m(η*) / ζ|` below which the loop stops.
    pub epsilon: f64,
    /// Iteration cap `T`.
    pub max_iters: usize,
    /// Rank tolerance for the eigen-factors of `L` and `L'`.
    pub rank_tol: f64,
    /// Kernels with `μ_m` above this are reported as selected.
    pub selection_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 500,
            rank_tol: RANK_TOL,
            selection_threshold: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.rank_tol > 0.0) || !(self.selection_threshold > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// `S_m(η)` for one base kernel:
///
/// ```text
/// (1/σ) Σ_i [ η_iᵀη_i / (4(1-σ)) + η_iᵀGᵀK^mGη_i / (4σ) - η_iᵀGᵀK^m h_i ] + Σ_i h_iᵀK^m h_i
/// ```
pub fn eval_s_m(
    eta: &DMatrix<f64>,
    km: &KernelMatrix,
    factor: &PsdFactor,
    sigma: f64,
) -> Result<f64> {
    check_sigma(sigma)?;
    check_dim("S_m kernel size", factor.n(), km.size())?;
    check_dim("eta rows vs rank(L)", factor.rank_l(), eta.nrows())?;
    check_dim("eta cols vs rank(L')", factor.rank_lp(), eta.ncols())?;
    let k = km.values();
    let mut sum = 0.0;
    let mut trace_term = 0.0;
    for i in 0..factor.rank_lp() {
        let eta_i = eta.column(i);
        let h_i = factor.h.column(i);
        let g_eta = &factor.g * eta_i;
        let k_h = k * h_i;
        sum += eta_i.dot(&eta_i) / (4.0 * (1.0 - sigma)) + g_eta.dot(&(k * &g_eta)) / (4.0 * sigma)
            - g_eta.dot(&k_h);
        trace_term += h_i.dot(&k_h);
    }
    Ok(sum / sigma + trace_term)
}

/// Most violated constraint for kernel `K`: column `i` of the result solves
/// `(I / (2(1-σ)) + GᵀKG / (2σ)) η_i = GᵀK h_i`.
pub fn most_violated_constraint(
    k: &KernelMatrix,
    factor: &PsdFactor,
    sigma: f64,
) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    check_dim("constraint kernel size", factor.n(), k.size())?;
    let gk = factor.g.transpose() * k.values();
    let gkg = &gk * &factor.g;
    let gkh = gk * &factor.h;
    solve_eta(&gkg, &gkh, sigma)
}

fn solve_eta(gkg: &DMatrix<f64>, gkh: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    let l = gkg.nrows();
    if l == 0 {
        return Ok(DMatrix::zeros(0, gkh.ncols()));
    }
    let system = DMatrix::identity(l, l) / (2.0 * (1.0 - sigma)) + gkg / (2.0 * sigma);
    let eta = linalg::spd_solve(&system, gkh, "most-violated-constraint system")?;
    linalg::ensure_finite(&eta, "most violated constraint")?;
    Ok(eta)
}

/// Per-kernel quantities reused across iterations:
/// `GᵀK^mG`, `GᵀK^mH` and `trace(K^m L')`.
struct ProjectedKernel {
    gkg: DMatrix<f64>,
    gkh: DMatrix<f64>,
    trace_klp: f64,
}

impl ProjectedKernel {
    fn new(k: &KernelMatrix, factor: &PsdFactor) -> Self {
        let gk = factor.g.transpose() * k.values();
        let kh = k.values() * &factor.h;
        let trace_klp = factor.h.component_mul(&kh).sum();
        Self {
            gkg: &gk * &factor.g,
            gkh: gk * &factor.h,
            trace_klp,
        }
    }

    fn score(&self, eta: &DMatrix<f64>, sigma: f64) -> f64 {
        let quad_id = eta.norm_squared() / (4.0 * (1.0 - sigma));
        let quad_k = eta.component_mul(&(&self.gkg * eta)).sum() / (4.0 * sigma);
        let linear = eta.component_mul(&self.gkh).sum();
        (quad_id + quad_k - linear) / sigma + self.trace_klp
    }
}

/// One pass of the column-generation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Master optimum before this iteration's check (`+∞` on the first).
    pub zeta: f64,
    /// `Σ_m μ_m S_m(η*)` at this iteration's `μ`.
    pub value: f64,
    /// Stopping gap; defined as 1 while `ζ = +∞`.
    pub gap: f64,
    /// Weights used in this iteration.
    pub mu: Vec<f64>,
}

/// State of the column-generation solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SilpState {
    /// Stored constraints `η^(c)`.
    pub constraints: Vec<DMatrix<f64>>,
    /// `scores[c][m] = S_m(η^(c))`.
    pub scores: Vec<Vec<f64>>,
    pub mu: SimplexWeights,
    pub zeta: f64,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl SilpState {
    pub fn final_gap(&self) -> f64 {
        self.history.last().map_or(1.0, |r| r.gap)
    }
}

fn stopping_gap(value: f64, zeta: f64) -> f64 {
    if zeta.is_infinite() {
        1.0
    } else if zeta == 0.0 {
        (zeta - value).abs()
    } else {
        (1.0 - value / zeta).abs()
    }
}

fn weighted_sum<'a>(
    mats: impl Iterator<Item = (f64, &'a DMatrix<f64>)>,
    rows: usize,
    cols: usize,
) -> DMatrix<f64> {
    let mut acc = DMatrix::<f64>::zeros(rows, cols);
    for (w, m) in mats {
        if w != 0.0 {
            acc += m * w;
        }
    }
    acc
}

/// Runs column generation from `μ = 1/M`, `ζ = +∞`.
///
/// Stops once the gap drops below `cfg.epsilon`. If `cfg.max_iters` is
/// reached first, the returned state carries the weights with the best
/// lower bound `Σ μ_m S_m(η*)` seen so far and `converged = false`.
pub fn column_generation(
    kernels: &[KernelMatrix],
    factor: &PsdFactor,
    sigma: f64,
    cfg: &SolverConfig,
) -> Result<SilpState> {
    check_sigma(sigma)?;
    cfg.validate()?;
    let m = kernels.len();
    if m == 0 {
        return Err(Error::Empty("kernel list"));
    }
    for k in kernels {
        check_dim("base kernel size", factor.n(), k.size())?;
    }
    let projected: Vec<ProjectedKernel> = kernels
        .iter()
        .map(|k| ProjectedKernel::new(k, factor))
        .collect();
    let (l, lp) = (factor.rank_l(), factor.rank_lp());

    let mut state = SilpState {
        constraints: Vec::new(),
        scores: Vec::new(),
        mu: SimplexWeights::uniform(m),
        zeta: f64::INFINITY,
        iterations: 0,
        history: Vec::new(),
        converged: false,
    };
    let mut best: Option<(f64, SimplexWeights)> = None;

    for t in 1..=cfg.max_iters {
        state.iterations = t;
        let mu = state.mu.as_slice();
        let gkg = weighted_sum(mu.iter().zip(&projected).map(|(&w, p)| (w, &p.gkg)), l, l);
        let gkh = weighted_sum(mu.iter().zip(&projected).map(|(&w, p)| (w, &p.gkh)), l, lp);
        let eta = solve_eta(&gkg, &gkh, sigma)?;

        let scores: Vec<f64> = projected.iter().map(|p| p.score(&eta, sigma)).collect();
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("S_m scores"));
        }
        let value: f64 = mu.iter().zip(&scores).map(|(w, s)| w * s).sum();
        let gap = stopping_gap(value, state.zeta);
        state.history.push(IterationRecord {
            iteration: t,
            zeta: state.zeta,
            value,
            gap,
            mu: mu.to_vec(),
        });
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, state.mu.clone()));
        }
        log::debug!(
            "silp iteration {t}: zeta={} value={value} gap={gap:e}",
            state.zeta
        );

        if gap < cfg.epsilon {
            state.converged = true;
            return Ok(state);
        }

        state.constraints.push(eta);
        state.scores.push(scores);
        let master = solve_restricted_master(&state.scores)?;
        state.mu = master.mu;
        state.zeta = master.zeta;
    }

    log::warn!(
        "column generation stopped after {} iterations without meeting epsilon={}",
        cfg.max_iters,
        cfg.epsilon
    );
    if let Some((_, mu)) = best {
        state.mu = mu;
    }
    Ok(state)
}

/// Result of a full MKL-RT fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MklSolution {
    /// Embedding solved at `K* = Σ μ*_m K^m`.
    pub model: FittedModel,
    pub state: SilpState,
    /// Kernels with `μ*_m` above the selection threshold.
    pub selected: Vec<usize>,
    pub combined: KernelMatrix,
}

impl MklSolution {
    pub fn mu(&self) -> &SimplexWeights {
        &self.model.mu
    }

    pub fn objective(&self) -> f64 {
        self.model.gevd.objective
    }

    pub fn converged(&self) -> bool {
        self.state.converged
    }
}

/// Factor `(L, L')`, learn `μ*` by column generation, then solve the pencil
/// at `K*`.
pub fn mkl_rt_fit(
    spec: &InstanceSpec,
    kernels: &[KernelMatrix],
    side: &SideInputs,
    cfg: &SolverConfig,
) -> Result<MklSolution> {
    let n = kernels.first().ok_or(Error::Empty("kernel list"))?.size();
    let mats = task_matrices(spec, n, side)?;
    let factor = PsdFactor::with_tolerance(&mats.l, &mats.lp, cfg.rank_tol)?;
    if factor.rank_lp() == 0 {
        return Err(Error::invalid("L' has rank zero; nothing to maximize"));
    }
    let state = column_generation(kernels, &factor, spec.sigma, cfg)?;
    let model = fit_with_matrices(spec, kernels, &state.mu, side, &mats)?;
    let combined = combine(&state.mu, kernels)?;
    let selected = state.mu.selected(cfg.selection_threshold);
    Ok(MklSolution {
        model,
        state,
        selected,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{KfdaVariant, LabelVector, Task};
    use crate::ratio_trace::{solve_gevd_pencil, RatioTraceInstance};
    use approx::assert_relative_eq;

    fn scalar_factor() -> PsdFactor {
        let one = DMatrix::from_element(1, 1, 1.0);
        PsdFactor::new(&one, &one).unwrap()
    }

    #[test]
    fn s_m_scalar_case() {
        let f = scalar_factor();
        let k = KernelMatrix::from_row_slice(1, &[1.0]).unwrap();
        for &eta in &[0.0, 0.5, 1.0, -2.0] {
            let s = eval_s_m(&DMatrix::from_element(1, 1, eta), &k, &f, 0.5).unwrap();
            assert_relative_eq!(s, 2.0 * eta * eta - 2.0 * eta + 1.0, epsilon = 1e-14);
        }
        let s = eval_s_m(&DMatrix::from_element(1, 1, 0.5), &k, &f, 0.5).unwrap();
        assert_relative_eq!(s, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn s_m_at_zero_is_trace_klp() {
        let l = DMatrix::identity(3, 3);
        let lp = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        let f = PsdFactor::new(&l, &lp).unwrap();
        let k = KernelMatrix::from_row_slice(3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5])
            .unwrap();
        let s = eval_s_m(&DMatrix::zeros(3, 2), &k, &f, 0.3).unwrap();
        assert_relative_eq!(s, (k.values() * &lp).trace(), epsilon = 1e-12);
        assert!(eval_s_m(&DMatrix::zeros(2, 2), &k, &f, 0.3).is_err());
    }

    #[test]
    fn constraint_identity_kernel() {
        let i3 = DMatrix::identity(3, 3);
        let lp = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![3.0, 2.0, 1.0]));
        let f = PsdFactor::new(&i3, &lp).unwrap();
        let k = KernelMatrix::identity(3);
        let eta = most_violated_constraint(&k, &f, 0.5).unwrap();
        assert!((eta - &f.h * 0.5).amax() < 1e-14);
        let eta = most_violated_constraint(&k, &f, 0.2).unwrap();
        assert!((eta - &f.h * 0.32).amax() < 1e-14);
    }

    #[test]
    fn constraint_scalar_cross_check() {
        let f = scalar_factor();
        let k = KernelMatrix::from_row_slice(1, &[1.0]).unwrap();
        let eta = most_violated_constraint(&k, &f, 0.5).unwrap();
        assert_relative_eq!(eta[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn projected_score_matches_direct_formula() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 1.0]);
        let lp = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.3, 0.2, 0.8, 0.0, 0.3, 0.0, 0.6]);
        let f = PsdFactor::new(&l, &lp).unwrap();
        let k = KernelMatrix::from_row_slice(3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5])
            .unwrap();
        let eta = DMatrix::from_fn(3, 3, |i, j| (i as f64 - 1.0) * 0.3 + j as f64 * 0.1);
        let direct = eval_s_m(&eta, &k, &f, 0.4).unwrap();
        let fast = ProjectedKernel::new(&k, &f).score(&eta, 0.4);
        assert_relative_eq!(direct, fast, epsilon = 1e-12);
    }

    #[test]
    fn single_kernel_reduces_to_plain_gevd() {
        let y = LabelVector::new(alloc::vec![1, 1, 2, 2, 2]).unwrap();
        let k = KernelMatrix::from_values(DMatrix::from_fn(5, 5, |i, j| {
            let d = i as f64 - j as f64;
            libm::exp(-d * d / 4.0)
        }))
        .unwrap();
        let spec = InstanceSpec::new(Task::Kfda(KfdaVariant::A), 0.5).unwrap();
        let side = SideInputs::Labels(y.clone());
        let sol = mkl_rt_fit(
            &spec,
            core::slice::from_ref(&k),
            &side,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(sol.converged());
        assert_eq!(sol.mu().as_slice(), [1.0]);
        assert_eq!(sol.selected, [0]);

        let (l, lp) = crate::instances::build_kfda(&y, KfdaVariant::A);
        let plain =
            solve_gevd_pencil(&RatioTraceInstance::new(k, l, lp, 0.5).unwrap(), Some(1)).unwrap();
        assert_relative_eq!(sol.objective(), plain.objective, epsilon = 1e-8);
        assert_relative_eq!(sol.model.lambda()[0], plain.lambda[0], epsilon = 1e-8);
        // zeta at convergence is sigma times the ratio-trace optimum
        assert_relative_eq!(sol.state.zeta, 0.5 * plain.objective, max_relative = 1e-8);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            epsilon: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_iters: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stopping_gap_conventions() {
        assert_eq!(stopping_gap(3.0, f64::INFINITY), 1.0);
        assert_eq!(stopping_gap(0.5, 0.0), 0.5);
        assert_relative_eq!(stopping_gap(0.9, 1.0), 0.1, epsilon = 1e-15);
    }
}
