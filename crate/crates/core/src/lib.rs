//! P1 finite element solver for the infinity Laplacian
//! `Δ_∞ u = (∇u ⊗ ∇u : D²u) / |∇u|² = f` on `(-1, 1)²` with Dirichlet data.
//!
//! The equation is treated in nondivergence form: a piecewise-constant
//! finite element Hessian replaces `D²u`, a relaxed fixed-point iteration
//! linearises the operator, and residual indicators drive newest vertex
//! bisection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod check;
pub mod error;
pub mod estimator;
pub mod fespace;
pub mod hessian;
pub mod mesh;
pub mod output;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use faer;

pub use adapt::{adaptive_solve, mark, prolongate, AdaptiveConfig, AdaptiveHistory, AdaptiveOutcome, CycleRecord};
pub use error::{Error, Result};
pub use estimator::{estimate, jump_residual, EstimatorOptions, IndicatorField};
pub use fespace::{P1Function, SpaceP0Tensor, SpaceP1, Tensor, TensorField};
pub use hessian::{fe_hessian, hessian_operator, HessianOperator};
pub use mesh::{build_initial_mesh, Edge, Point, Triangle, Triangulation, Vertex};
pub use output::{write_csv, write_vtu, CsvTable, VtuField};
pub use problems::{problem, registry, BenchmarkProblem};
pub use solver::{
    apply_dirichlet, assemble_step, default_initializer, fixed_point_solve, solve_linear,
    LinearSystem, ProblemData, SolveReport, SolverConfig,
};
pub use study::{convergence_study, convergence_study_with, EocRow, EocTable, StudyConfig, StudyFailure};
