//! Multiple kernel learning for ratio-trace problems.
//!
//! Kernel Fisher discriminant analysis, kernel CCA and labeled kernel CCA all
//! reduce to maximizing `trace[(Γᵀ((1-σ)KLK + σK)Γ)⁻¹ (ΓᵀKL'KΓ)]` for
//! task-specific `(L, L')`. This crate learns the convex combination
//! `K = Σ μ_m K^m` of precomputed base kernels that maximizes that trace by
//! solving an equivalent semi-infinite linear program with column
//! generation, then solves the generalized eigenproblem at the learned
//! kernel.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | kernel matrices, combination, distances, centering |
//! | [`ratio_trace`] | pencil construction and generalized eigensolver |
//! | [`instances`] | KFDA / KCCA / LKCCA matrices, fitting, projection |
//! | [`silp`] | `S_m`, constraint generation, column generation, MKL-RT fit |
//! | [`master`] | restricted master LP |
//! | [`baselines`] | average, product and best-single kernels |
//! | [`eval`] | NN classification, retrieval, AP/MAP, σ cross-validation |
//! | [`oracle`] | brute-force simplex grid search |
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod eval;
pub mod instances;
pub mod kernel;
pub mod linalg;
pub mod master;
pub mod oracle;
pub mod ratio_trace;
pub mod silp;

pub use error::{Error, Result};
pub use instances::{
    fit_instance, project, FittedModel, InstanceSpec, KfdaVariant, LabelVector, SideInputs, Task,
    View,
};
pub use kernel::{CrossKernelMatrix, DistanceMatrix, KernelMatrix, SimplexWeights};
pub use ratio_trace::{solve_gevd_pencil, GevdResult, PsdFactor, RatioTraceInstance};
pub use silp::{column_generation, mkl_rt_fit, MklSolution, SilpState, SolverConfig};

pub use nalgebra;
