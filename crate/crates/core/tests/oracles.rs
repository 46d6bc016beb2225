//! Independent reference computations checked against the solver.

mod common;

use common::*;
use mklrt_core::instances::{build_kcca, build_kfda, build_lkcca, compute_xi_kcca};
use mklrt_core::kernel::combine;
use mklrt_core::linalg::{max_abs, sorted_symmetric_eigen, spd_solve};
use mklrt_core::nalgebra::DMatrix;
use mklrt_core::oracle::{brute_force_mkl, objective_at_mu};
use mklrt_core::silp::{eval_s_m, most_violated_constraint};
use mklrt_core::{
    mkl_rt_fit, solve_gevd_pencil, InstanceSpec, KernelMatrix, KfdaVariant, LabelVector, PsdFactor,
    RatioTraceInstance, SideInputs, SimplexWeights, SolverConfig, Task,
};

/// For invertible `K` the pencil reduces to `(L', (1-σ)L + σK⁻¹)`, whose
/// trace is `tr(C⁻¹ L')`.
fn inverse_trace_objective(
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
    lp: &DMatrix<f64>,
    sigma: f64,
) -> f64 {
    let k_inv = k.clone().try_inverse().unwrap();
    let c = l * (1.0 - sigma) + k_inv * sigma;
    spd_solve(&c, lp, "oracle").unwrap().trace()
}

#[test]
fn gevd_objective_matches_inverse_trace_formula() {
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let n = 6 + (seed as usize % 5);
        let k = linear_kernel(&mut r, n, n + 3);
        let y = labels(&mut r, n, 3);
        let sigma = [0.1, 0.5, 0.9][seed as usize % 3];
        for variant in [KfdaVariant::A, KfdaVariant::B] {
            let (l, lp) = build_kfda(&y, variant);
            let got = solve_gevd_pencil(
                &RatioTraceInstance::new(k.clone(), l.clone(), lp.clone(), sigma).unwrap(),
                None,
            )
            .unwrap()
            .objective;
            let want = inverse_trace_objective(k.values(), &l, &lp, sigma);
            assert!(rel_err(got, want) < 1e-8, "seed {seed}: {got} vs {want}");
        }
    }
}

fn regularized(k: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    k * (1.0 - sigma) + DMatrix::identity(k.nrows(), k.nrows()) * sigma
}

#[test]
fn kcca_spectrum_and_second_view_map() {
    for seed in 0..10u64 {
        let mut r = rng(100 + seed);
        let n = 8;
        let kx = linear_kernel(&mut r, n, n + 2);
        let kz = rbf_kernel(&mut r, n, 3);
        let sigma = 0.3;
        let (l, lp) = build_kcca(&kz, sigma).unwrap();
        let res = solve_gevd_pencil(
            &RatioTraceInstance::new(kx.clone(), l, lp, sigma).unwrap(),
            None,
        )
        .unwrap();

        // eigenvalues of (Rx⁻¹Kx)(Rz⁻¹Kz) are the squared regularized canonical correlations
        let rx = regularized(kx.values(), sigma);
        let rz = regularized(kz.values(), sigma);
        let px = spd_solve(&rx, kx.values(), "rx").unwrap();
        let pz = spd_solve(&rz, kz.values(), "rz").unwrap();
        let prod = &px * &pz;
        assert!(rel_err(res.objective, prod.trace()) < 1e-8, "seed {seed}");
        let mut spec: Vec<f64> = prod.complex_eigenvalues().iter().map(|c| c.re).collect();
        spec.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in res.lambda.iter().zip(&spec) {
            assert!((a - b).abs() < 1e-8 * spec[0], "seed {seed}: {a} vs {b}");
        }

        // the maps are mutually consistent: Rx⁻¹ Kz Ξ = Γ Λ^{1/2}
        let xi = compute_xi_kcca(kz.values(), kx.values(), &res.gamma, &res.lambda, sigma).unwrap();
        let back = spd_solve(&rx, &(kz.values() * &xi), "back").unwrap();
        let mut want = res.gamma.clone();
        for (mut c, &v) in want.column_iter_mut().zip(&res.lambda) {
            c *= v.sqrt();
        }
        assert!(
            max_abs(&(back - &want)) < 1e-6 * max_abs(&want),
            "seed {seed}"
        );
    }
}

#[test]
fn constraint_minimizes_weighted_scores() {
    let mut violations = 0;
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let n = 5 + (seed as usize % 4);
        let m = 3;
        let ks = kernel_family(&mut r, n, m);
        let raw: Vec<f64> = (0..m).map(|_| gaussian(&mut r).abs() + 0.1).collect();
        let s: f64 = raw.iter().sum();
        let mu = SimplexWeights::new(raw.iter().map(|v| v / s).collect()).unwrap();
        let y = labels(&mut r, n, 2);
        let (l, lp) = build_kfda(&y, KfdaVariant::A);
        let sigma = [0.1, 0.5, 0.9][seed as usize % 3];
        let factor = PsdFactor::new(&l, &lp).unwrap();
        let k = combine(&mu, &ks).unwrap();
        let eta = most_violated_constraint(&k, &factor, sigma).unwrap();
        let total = |e: &DMatrix<f64>| -> f64 {
            ks.iter()
                .zip(mu.as_slice())
                .map(|(km, w)| w * eval_s_m(e, km, &factor, sigma).unwrap())
                .sum()
        };
        let base = total(&eta);
        let dir = gaussian_matrix(&mut r, eta.nrows(), eta.ncols());
        let dir = &dir / dir.norm();
        for sign in [1.0, -1.0] {
            if total(&(&eta + &dir * (sign * 1e-4))) < base - 1e-12 * base.abs().max(1.0) {
                violations += 1;
            }
        }
        // the minimum equals σ times the ratio-trace optimum
        let obj = objective_at_mu(&mu, &ks, &l, &lp, sigma).unwrap();
        assert!(
            rel_err(base, sigma * obj) < 1e-8,
            "seed {seed}: {base} vs {}",
            sigma * obj
        );
    }
    assert_eq!(violations, 0);
}

#[test]
fn silp_reaches_grid_optimum() {
    for seed in 0..6u64 {
        let mut r = rng(5000 + seed);
        let n = 10;
        let ks = kernel_family(&mut r, n, 3);
        let y = labels(&mut r, n, 2);
        let sigma = [0.1, 0.5, 0.9][seed as usize % 3];
        let (l, lp) = build_kfda(&y, KfdaVariant::A);
        let grid = brute_force_mkl(&ks, &l, &lp, sigma, 0.05).unwrap();
        let spec = InstanceSpec::new(Task::Kfda(KfdaVariant::A), sigma).unwrap();
        let sol = mkl_rt_fit(&spec, &ks, &SideInputs::Labels(y), &SolverConfig::default()).unwrap();
        assert!(sol.converged());
        assert!(
            sol.objective() >= grid.best_objective * (1.0 - 1e-3),
            "seed {seed}: silp {} grid {}",
            sol.objective(),
            grid.best_objective
        );
        // ζ never increases
        let zetas: Vec<f64> = sol
            .state
            .history
            .iter()
            .map(|h| h.zeta)
            .filter(|z| z.is_finite())
            .collect();
        assert!(zetas
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0)));
    }
}

/// Replicated KCCA: one row per matching pair `(i, j)` with `y_i = w_j`,
/// solved in the range of the replicated kernel.
fn replicated_objective(
    kx: &KernelMatrix,
    kz: &KernelMatrix,
    y: &LabelVector,
    w: &LabelVector,
    sigma: f64,
) -> f64 {
    let pairs: Vec<(usize, usize)> = (0..y.len())
        .flat_map(|i| (0..w.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| y.labels()[i] == w.labels()[j])
        .collect();
    let q = pairs.len();
    let kx_rep = DMatrix::from_fn(q, q, |a, b| kx.values()[(pairs[a].0, pairs[b].0)]);
    let kz_rep = DMatrix::from_fn(q, q, |a, b| kz.values()[(pairs[a].1, pairs[b].1)]);
    let (l, lp) = build_kcca(&KernelMatrix::from_values(kz_rep).unwrap(), sigma).unwrap();

    let (d, u) = sorted_symmetric_eigen(&kx_rep).unwrap();
    let rank = d.iter().take_while(|&&v| v > 1e-10 * d[0]).count();
    let u = u.columns(0, rank).into_owned();
    let dm = DMatrix::from_diagonal(&d[..rank].to_vec().into());
    let a = &dm * u.transpose() * &lp * &u * &dm;
    let b = (&dm * u.transpose() * &l * &u * &dm) * (1.0 - sigma) + &dm * sigma;
    spd_solve(&b, &a, "replicated").unwrap().trace()
}

#[test]
fn lkcca_matches_replicated_kcca() {
    for seed in 0..20u64 {
        let mut r = rng(9000 + seed);
        let p = 2 + seed as usize % 2;
        let nx = 6 + seed as usize % 3;
        let nz = 5 + seed as usize % 4;
        let y = labels(&mut r, nx, p);
        let w = labels(&mut r, nz, p);
        let kx = rbf_kernel(&mut r, nx, 3);
        let kz = linear_kernel(&mut r, nz, nz + 1);
        let sigma = [0.1, 0.5, 0.9][seed as usize % 3];
        let parts = build_lkcca(&y, &w, &kz, sigma).unwrap();
        let got = solve_gevd_pencil(
            &RatioTraceInstance::new(kx.clone(), parts.l, parts.lp, sigma).unwrap(),
            None,
        )
        .unwrap()
        .objective;
        let want = replicated_objective(&kx, &kz, &y, &w, sigma);
        assert!(rel_err(got, want) < 1e-6, "seed {seed}: {got} vs {want}");
    }
}
