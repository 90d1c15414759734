//! Fixed-point linearisation with Laplacian relaxation.
//!
//! Each step freezes the diffusion tensor at the previous iterate `U^n`
//!
//! ```text
//! A[U^n] = ∇U^n ⊗ ∇U^n / max(|∇U^n|², ε) + I/τ
//! ```
//!
//! and solves the linear nonvariational problem
//! `∫ (A[U^n] : H[U^{n+1}]) Ψ = ∫ (f + tr H[U^n] / τ) Ψ` for all P1 test
//! functions `Ψ`, with `H[U^{n+1}]` eliminated through the Hessian operator.
//! The resulting vertex-sized system is nonsymmetric and is solved with a
//! sparse LU factorisation.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::fespace::{
    barycentric_gradients, frobenius, l2_norm, load_vector, trace, P1Function, SpaceP0Tensor,
    SpaceP1, Tensor, TensorField,
};
use crate::hessian::HessianOperator;
use crate::mesh::{Point, Triangulation};
use crate::quadrature::QuadratureRule;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Data of the Dirichlet problem `Δ_∞ u = f` in Ω, `u = g` on ∂Ω.
#[derive(Clone)]
pub struct ProblemData {
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub exact_solution: Option<ScalarFn>,
    pub exact_gradient: Option<VectorFn>,
    /// Relaxation parameter (pseudo time step).
    pub tau: f64,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("tau", &self.tau)
            .field("has_exact_solution", &self.exact_solution.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    pub fn new(
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(Point) -> f64 + Send + Sync + 'static,
        tau: f64,
    ) -> Result<Self> {
        Self {
            f: Arc::new(f),
            g: Arc::new(g),
            exact_solution: None,
            exact_gradient: None,
            tau,
        }
        .with_tau(tau)
    }

    pub fn with_exact(
        mut self,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        self.exact_solution = Some(Arc::new(u));
        self.exact_gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive and finite, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// The linearisation stops once `||U^n - U^{n-1}||_{L2} <= factor * h^2`.
    pub increment_tol_factor: f64,
    pub max_iterations: usize,
    /// Floor `ε` for `|∇U|²` in the diffusion tensor.
    pub gradient_floor: f64,
    /// Required relative residual of each linear solve.
    pub linear_solver_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            increment_tol_factor: 10.0,
            max_iterations: 100,
            gradient_floor: 1e-10,
            linear_solver_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.increment_tol_factor)
            || !positive(self.gradient_floor)
            || !positive(self.linear_solver_tol)
            || self.max_iterations == 0
        {
            return Err(Error::invalid(format!("solver settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// `p ⊗ p / max(|p|², ε) + I/τ`.
pub fn diffusion_tensor_at(p: Point, tau: f64, eps: f64) -> Tensor {
    let denom = (p[0] * p[0] + p[1] * p[1]).max(eps);
    let r = 1.0 / tau;
    [
        p[0] * p[0] / denom + r,
        p[0] * p[1] / denom,
        p[1] * p[0] / denom,
        p[1] * p[1] / denom + r,
    ]
}

/// Elementwise diffusion tensor `A[U]`.
pub fn diffusion_tensor(mesh: &Triangulation, u: &P1Function, tau: f64, eps: f64) -> Vec<Tensor> {
    u.gradients(mesh)
        .into_iter()
        .map(|p| diffusion_tensor_at(p, tau, eps))
        .collect()
}

/// A square sparse system `matrix · x = rhs`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn from_triplets(n: usize, triplets: &[Triplet<usize, usize, f64>], rhs: Vec<f64>) -> Result<Self> {
        let matrix = SparseColMat::try_new_from_triplets(n, n, triplets)
            .map_err(|e| Error::invalid(format!("cannot build sparse matrix: {e:?}")))?;
        Ok(Self { matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Stored entries as `(row, col, value)`, column by column.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.matrix
            .triplet_iter()
            .map(|t| (t.row, t.col, *t.val))
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.matrix.as_ref();
        let mut y = vec![0.0; m.nrows()];
        for (j, &xj) in x.iter().enumerate().take(m.ncols()) {
            for (&i, &v) in m.row_idx_of_col_raw(j).iter().zip(m.val_of_col(j)) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `||matrix · x - rhs|| / ||rhs||`, or the absolute residual when the
    /// right-hand side vanishes.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        let r = ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let b = self.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }
}

/// Assembles one linearisation step.
///
/// Row `i` is `Σ_{K ∋ i} |K|/3 · A_K : H_K[U^{n+1}]` with `H_K` expanded
/// through the Hessian operator stencil; the right-hand side is
/// `∫ f λ_i + Σ_{K ∋ i} |K|/3 · tr(H_prev,K)/τ`.
pub fn assemble_step(
    mesh: &Triangulation,
    op: &HessianOperator,
    u_prev: &P1Function,
    h_prev: &TensorField,
    problem: &ProblemData,
    config: &SolverConfig,
) -> Result<LinearSystem> {
    SpaceP1::new(mesh).check(u_prev)?;
    SpaceP0Tensor::new(mesh).check(h_prev)?;
    if op.n_triangles() != mesh.n_triangles() || op.n_vertices() != mesh.n_vertices() {
        return Err(Error::invalid("Hessian operator was assembled on a different mesh"));
    }
    let tau = problem.tau;
    let a = diffusion_tensor(mesh, u_prev, tau, config.gradient_floor);
    let mut rhs = load_vector(mesh, &QuadratureRule::order4(), |x| (problem.f)(x));
    let mut triplets = Vec::with_capacity(18 * mesh.n_triangles());
    for (k, t) in mesh.triangles().iter().enumerate() {
        let third = mesh.area(k) / 3.0;
        let relax = third * trace(&h_prev[k]) / tau;
        let coupling: Vec<(usize, f64)> = op
            .stencil(k)
            .iter()
            .map(|(j, w)| (*j, third * frobenius(&a[k], w)))
            .collect();
        for &row in &t.vertices {
            rhs[row] += relax;
            triplets.extend(coupling.iter().map(|&(col, v)| Triplet::new(row, col, v)));
        }
    }
    LinearSystem::from_triplets(mesh.n_vertices(), &triplets, rhs)
}

/// Replaces boundary rows by identity rows carrying `g`, and moves boundary
/// columns of the remaining rows into the right-hand side.
pub fn apply_dirichlet(
    system: LinearSystem,
    space: &SpaceP1<'_>,
    g: &dyn Fn(Point) -> f64,
) -> Result<LinearSystem> {
    let n = system.dim();
    if n != space.dof_count() {
        return Err(Error::invalid("system size does not match the space"));
    }
    let mut boundary_value = vec![None; n];
    for &b in space.boundary_dofs() {
        let v = &space.mesh().vertices()[b];
        let value = g(v.point());
        if !value.is_finite() {
            return Err(Error::Evaluation {
                what: "boundary data",
                x: v.x,
                y: v.y,
                value,
            });
        }
        boundary_value[b] = Some(value);
    }
    let mut rhs = system.rhs;
    let mut triplets = Vec::with_capacity(system.matrix.compute_nnz());
    for t in system.matrix.triplet_iter() {
        let (row, col, val) = (t.row, t.col, *t.val);
        if boundary_value[row].is_some() {
            continue;
        }
        match boundary_value[col] {
            Some(gv) => rhs[row] -= val * gv,
            None => triplets.push(Triplet::new(row, col, val)),
        }
    }
    for (b, value) in boundary_value.iter().enumerate() {
        if let Some(gv) = value {
            triplets.push(Triplet::new(b, b, 1.0));
            rhs[b] = *gv;
        }
    }
    LinearSystem::from_triplets(n, &triplets, rhs)
}

/// Sparse LU solve, checked against `config.linear_solver_tol`. A few steps
/// of iterative refinement are taken if the first solve falls short.
pub fn solve_linear(system: &LinearSystem, config: &SolverConfig) -> Result<Vec<f64>> {
    let n = system.dim();
    if system.matrix.nrows() != n || system.matrix.ncols() != n {
        return Err(Error::invalid("linear system is not square"));
    }
    let lu = system.matrix.sp_lu().map_err(|_| Error::SolverFailure {
        residual: f64::INFINITY,
        tolerance: config.linear_solver_tol,
    })?;
    let b = Mat::from_fn(n, 1, |i, _| system.rhs[i]);
    let sol = lu.solve(&b);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let mut residual = system.relative_residual(&x);
    for _ in 0..3 {
        if residual <= config.linear_solver_tol || !residual.is_finite() {
            break;
        }
        let ax = system.matvec(&x);
        let r = Mat::from_fn(n, 1, |i, _| system.rhs[i] - ax[i]);
        let dx = lu.solve(&r);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += dx[(i, 0)];
        }
        residual = system.relative_residual(&x);
    }
    if !(residual <= config.linear_solver_tol) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure {
            residual,
            tolerance: config.linear_solver_tol,
        });
    }
    Ok(x)
}

/// Conforming P1 solution of `ΔU = f`, `U = g` on ∂Ω, used as the first
/// iterate.
pub fn default_initializer(
    mesh: &Triangulation,
    problem: &ProblemData,
    config: &SolverConfig,
) -> Result<P1Function> {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (k, t) in mesh.triangles().iter().enumerate() {
        let g = barycentric_gradients(mesh.triangle_points(k));
        let area = mesh.area(k);
        for i in 0..3 {
            for j in 0..3 {
                let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                triplets.push(Triplet::new(t.vertices[i], t.vertices[j], v));
            }
        }
    }
    // Weak form of ΔU = f is -(∇U, ∇ψ) = (f, ψ).
    let rhs = load_vector(mesh, &QuadratureRule::order4(), |x| -(problem.f)(x));
    let system = LinearSystem::from_triplets(mesh.n_vertices(), &triplets, rhs)?;
    let system = apply_dirichlet(system, &SpaceP1::new(mesh), &*problem.g)?;
    P1Function::new(solve_linear(&system, config)?)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The last iterate `U^{n+1}`.
    pub solution: P1Function,
    /// The iterate before it, `U^n`.
    pub previous: P1Function,
    /// `H[U^{n+1}]`.
    pub hessian: TensorField,
    /// Number of linear steps taken.
    pub iterations: usize,
    /// L2 norms of `U^{n+1} - U^n`, one per step.
    pub increments: Vec<f64>,
    pub converged: bool,
    /// Stopping threshold `factor * h^2`.
    pub tolerance: f64,
}

/// Performs one linearisation step from `u_prev`, with Dirichlet data
/// applied.
pub fn linearisation_step(
    mesh: &Triangulation,
    op: &HessianOperator,
    u_prev: &P1Function,
    problem: &ProblemData,
    config: &SolverConfig,
) -> Result<P1Function> {
    let h_prev = op.apply(u_prev);
    let system = assemble_step(mesh, op, u_prev, &h_prev, problem, config)?;
    let system = apply_dirichlet(system, &SpaceP1::new(mesh), &*problem.g)?;
    let x = solve_linear(&system, config)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iteration: 0,
            reason: "non-finite coefficients".into(),
        });
    }
    P1Function::new(x)
}

/// Iterates linearisation steps from `u0` (or the Poisson initial guess)
/// until the L2 increment drops below `increment_tol_factor * h^2`, with
/// `h` the largest element diameter.
pub fn fixed_point_solve(
    mesh: &Triangulation,
    problem: &ProblemData,
    config: &SolverConfig,
    u0: Option<P1Function>,
) -> Result<SolveReport> {
    config.validate()?;
    let op = HessianOperator::new(mesh);
    let mut u = match u0 {
        Some(u0) => {
            SpaceP1::new(mesh).check(&u0)?;
            u0
        }
        None => default_initializer(mesh, problem, config)?,
    };
    let h = mesh.max_h();
    let tolerance = config.increment_tol_factor * h * h;
    let mut increments: Vec<f64> = Vec::new();
    let mut previous = u.clone();
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        let next = linearisation_step(mesh, &op, &u, problem, config).map_err(|e| match e {
            Error::Divergence { reason, .. } => Error::Divergence { iteration, reason },
            other => other.at_iteration(iteration),
        })?;
        let diff = P1Function::new(
            next.coefficients()
                .iter()
                .zip(u.coefficients())
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        let increment = l2_norm(mesh, &diff);
        increments.push(increment);
        previous = std::mem::replace(&mut u, next);
        if increment <= tolerance {
            converged = true;
            break;
        }
        if iteration > 5 && increment > 10.0 * increments[iteration - 6] {
            return Err(Error::Divergence {
                iteration,
                reason: format!(
                    "increment grew from {:.3e} to {increment:.3e} over five iterations",
                    increments[iteration - 6]
                ),
            });
        }
    }

    let hessian = op.apply(&u);
    Ok(SolveReport {
        iterations: increments.len(),
        solution: u,
        previous,
        hessian,
        increments,
        converged,
        tolerance,
    })
}
