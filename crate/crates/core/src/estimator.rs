//! Residual a posteriori indicators.
//!
//! For a step `U^n -> U^{n+1}` the interior residual is
//! `R = f + ΔU^n/τ - A[U^n] : D²U^{n+1}` with broken derivatives, and the
//! jump residual on an interior edge is
//! `J = [∇U^n]·n/τ - avg(A[U^n]) : [∇U^{n+1}] ⊗ n`.
//! Broken second derivatives of P1 functions vanish, so `R = f` unless the
//! Hessian-trace variant is requested.

use crate::error::{Error, Result};
use crate::fespace::{frobenius, outer, trace, P1Function, SpaceP1, Tensor};
use crate::hessian::HessianOperator;
use crate::mesh::{Point, Triangulation};
use crate::quadrature::QuadratureRule;
use crate::solver::diffusion_tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    pub gradient_floor: f64,
    /// Use `tr H[U^n]/τ` in place of the broken Laplacian in `R`.
    pub use_hessian_trace: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            gradient_floor: 1e-10,
            use_hessian_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    /// Marking indicator per triangle.
    pub eta: Vec<f64>,
    /// `h_K ||R||_{L2(K)}` per triangle.
    pub interior: Vec<f64>,
    /// `h_e^{1/2} ||J||_{L2(e)}` per edge; zero on boundary edges.
    pub jump: Vec<f64>,
    /// `Σ_K interior + Σ_e jump`.
    pub global_estimate: f64,
    /// `sqrt(Σ_K eta_K²)`.
    pub global_estimate_l2: f64,
}

impl IndicatorField {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Pointwise `f + lap_prev/τ - A : hess_next`.
pub fn residual_formula(f: f64, lap_prev: f64, a: &Tensor, hess_next: &Tensor, tau: f64) -> f64 {
    f + lap_prev / tau - frobenius(a, hess_next)
}

/// `||R||_{L2(K)}` for every triangle, by the degree-4 rule.
pub fn interior_residual_norms(
    mesh: &Triangulation,
    u_prev: &P1Function,
    f: &dyn Fn(Point) -> f64,
    tau: f64,
    options: &EstimatorOptions,
) -> Vec<f64> {
    let quad = QuadratureRule::order4();
    let a = diffusion_tensor(mesh, u_prev, tau, options.gradient_floor);
    let lap_prev: Vec<f64> = if options.use_hessian_trace {
        HessianOperator::new(mesh)
            .apply(u_prev)
            .values()
            .iter()
            .map(trace)
            .collect()
    } else {
        vec![0.0; mesh.n_triangles()]
    };
    let zero = [0.0; 4];
    (0..mesh.n_triangles())
        .map(|k| {
            quad.nodes_on(mesh.triangle_points(k), mesh.area(k))
                .map(|(x, _, w)| w * residual_formula(f(x), lap_prev[k], &a[k], &zero, tau).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// The constant value of `J` on interior edge `e`.
pub fn jump_residual(
    mesh: &Triangulation,
    e: usize,
    u_prev: &P1Function,
    u_next: &P1Function,
    tau: f64,
    gradient_floor: f64,
) -> Result<f64> {
    let edge = mesh
        .edges()
        .get(e)
        .ok_or_else(|| Error::invalid(format!("unknown edge {e}")))?;
    let (plus, minus) = match edge.adjacent {
        (p, Some(m)) => (p, m),
        (_, None) => return Err(Error::invalid(format!("edge {e} lies on the boundary"))),
    };
    let space = SpaceP1::new(mesh);
    space.check(u_prev)?;
    space.check(u_next)?;
    let n = edge.normal_for(plus);
    let gp = [u_prev.gradient(mesh, plus), u_prev.gradient(mesh, minus)];
    let gn = [u_next.gradient(mesh, plus), u_next.gradient(mesh, minus)];
    let flux_jump = (gp[0][0] - gp[1][0]) * n[0] + (gp[0][1] - gp[1][1]) * n[1];
    let tensor_jump = outer([gn[0][0] - gn[1][0], gn[0][1] - gn[1][1]], n);
    let a_plus = crate::solver::diffusion_tensor_at(gp[0], tau, gradient_floor);
    let a_minus = crate::solver::diffusion_tensor_at(gp[1], tau, gradient_floor);
    let avg: Tensor = std::array::from_fn(|i| 0.5 * (a_plus[i] + a_minus[i]));
    Ok(flux_jump / tau - frobenius(&avg, &tensor_jump))
}

/// Elementwise indicators and both global aggregates.
pub fn estimate(
    mesh: &Triangulation,
    u_prev: &P1Function,
    u_next: &P1Function,
    f: &dyn Fn(Point) -> f64,
    tau: f64,
    options: &EstimatorOptions,
) -> Result<IndicatorField> {
    let space = SpaceP1::new(mesh);
    space.check(u_prev)?;
    space.check(u_next)?;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let r_norms = interior_residual_norms(mesh, u_prev, f, tau, options);
    let interior: Vec<f64> = r_norms
        .iter()
        .enumerate()
        .map(|(k, r)| mesh.h_k(k) * r)
        .collect();
    let mut eta_sq: Vec<f64> = interior.iter().map(|x| x * x).collect();
    let mut jump = vec![0.0; mesh.edges().len()];
    for &e in mesh.interior_edges() {
        let j = jump_residual(mesh, e, u_prev, u_next, tau, options.gradient_floor)?;
        let h_e = mesh.h_e(e);
        // ||J||_{L2(e)} = |J| sqrt(h_e) for a constant J.
        let norm = j.abs() * h_e.sqrt();
        jump[e] = h_e.sqrt() * norm;
        let half = 0.5 * h_e * norm * norm;
        let (p, m) = mesh.edges()[e].adjacent;
        eta_sq[p] += half;
        eta_sq[m.expect("interior edge")] += half;
    }
    let global_estimate = interior.iter().sum::<f64>() + jump.iter().sum::<f64>();
    let global_estimate_l2 = eta_sq.iter().sum::<f64>().sqrt();
    Ok(IndicatorField {
        eta: eta_sq.into_iter().map(f64::sqrt).collect(),
        interior,
        jump,
        global_estimate,
        global_estimate_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_initial_mesh;

    fn interp(mesh: &Triangulation, g: impl Fn(Point) -> f64) -> P1Function {
        SpaceP1::new(mesh).interpolate(g).unwrap()
    }

    #[test]
    fn zero_data_and_affine_iterates_give_zero() {
        let mesh = build_initial_mesh(3).unwrap().refine(&[2, 9]).unwrap();
        let u = interp(&mesh, |[x, y]| 1.0 + 2.0 * x - 3.0 * y);
        let ind = estimate(&mesh, &u, &u, &|_| 0.0, 1.0, &EstimatorOptions::default()).unwrap();
        assert!(ind.global_estimate.abs() <= 1e-12);
        assert!(ind.global_estimate_l2.abs() <= 1e-12);
        assert!(ind.eta.iter().all(|&e| e.abs() <= 1e-12));
    }

    #[test]
    fn constant_source_interior_norm() {
        let mesh = build_initial_mesh(2).unwrap();
        let u = P1Function::zeros(mesh.n_vertices());
        let norms = interior_residual_norms(&mesh, &u, &|_| 2.0, 1.0, &EstimatorOptions::default());
        for (k, r) in norms.iter().enumerate() {
            assert!((r - 2.0 * mesh.area(k).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn formula_on_a_quadratic() {
        // U_next = x² + 3xy has D² = [[2,3],[3,0]]; A = [[2,1],[1,1]] gives A:D² = 10.
        let a = [2.0, 1.0, 1.0, 1.0];
        let d2 = [2.0, 3.0, 3.0, 0.0];
        assert_eq!(residual_formula(1.0, 4.0, &a, &d2, 2.0), 1.0 + 2.0 - 10.0);
    }

    #[test]
    fn boundary_edge_rejected() {
        let mesh = build_initial_mesh(1).unwrap();
        let u = P1Function::zeros(mesh.n_vertices());
        let b = mesh.boundary_edges()[0];
        assert!(jump_residual(&mesh, b, &u, &u, 1.0, 1e-10).is_err());
    }

    #[test]
    fn large_tau_keeps_only_tensor_jump() {
        let mesh = build_initial_mesh(2).unwrap();
        let prev = interp(&mesh, |[x, y]| x * x - y * y + x * y);
        let next = interp(&mesh, |[x, y]| x * x + y * y);
        for &e in mesh.interior_edges() {
            let j = jump_residual(&mesh, e, &prev, &next, 1e12, 1e-10).unwrap();
            let edge = &mesh.edges()[e];
            let (p, m) = (edge.adjacent.0, edge.adjacent.1.unwrap());
            let n = edge.normal_for(p);
            let (gp, gm) = (prev.gradient(&mesh, p), prev.gradient(&mesh, m));
            let a = |g: Point| {
                let s = (g[0] * g[0] + g[1] * g[1]).max(1e-10);
                [g[0] * g[0] / s, g[0] * g[1] / s, g[0] * g[1] / s, g[1] * g[1] / s]
            };
            let avg: Tensor = std::array::from_fn(|i| 0.5 * (a(gp)[i] + a(gm)[i]));
            let (np, nm) = (next.gradient(&mesh, p), next.gradient(&mesh, m));
            let second = -frobenius(&avg, &outer([np[0] - nm[0], np[1] - nm[1]], n));
            assert!((j - second).abs() < 1e-10, "{j} vs {second}");
        }
    }

    #[test]
    fn edge_partition_is_conservative() {
        let mesh = build_initial_mesh(3).unwrap().refine(&[0, 5]).unwrap();
        let prev = interp(&mesh, |[x, y]| (x * x + y * y).sqrt());
        let next = interp(&mesh, |[x, y]| x.powi(3) - y);
        let ind = estimate(&mesh, &prev, &next, &|[x, _]| x, 0.7, &EstimatorOptions::default())
            .unwrap();
        let lhs: f64 = ind.eta.iter().map(|e| e * e).sum();
        let rhs: f64 = ind.interior.iter().map(|e| e * e).sum::<f64>()
            + ind.jump.iter().map(|e| e * e).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1.0));
        for &b in mesh.boundary_edges() {
            assert_eq!(ind.jump[b], 0.0);
        }
    }

    #[test]
    fn hessian_trace_option_changes_interior_part() {
        let mesh = build_initial_mesh(2).unwrap().uniform_refine();
        let u = interp(&mesh, |[x, y]| x * x + y * y);
        let plain = estimate(&mesh, &u, &u, &|_| 0.0, 1.0, &EstimatorOptions::default()).unwrap();
        let options = EstimatorOptions {
            use_hessian_trace: true,
            ..Default::default()
        };
        let traced = estimate(&mesh, &u, &u, &|_| 0.0, 1.0, &options).unwrap();
        assert!(plain.interior.iter().all(|&x| x == 0.0));
        // tr H = 4 on criss-cross refinements of |x|².
        for (k, r) in traced.interior.iter().enumerate() {
            assert!((r - mesh.h_k(k) * 4.0 * mesh.area(k).sqrt()).abs() < 1e-10);
        }
    }
}
