//! The finite element Hessian of a P1 function in the piecewise-constant
//! tensor space.
//!
//! Testing the distributional Hessian with the indicator of a triangle `K`
//! leaves only edge terms, because the volume term involves the gradient of
//! a constant:
//!
//! ```text
//! H[V]|_K = 1/|K| ( Σ_{e ⊂ ∂K interior} |e| avg(∇V)_e ⊗ n_K,e
//!                 + Σ_{e ⊂ ∂K ∩ ∂Ω}     |e| ∇V|_K ⊗ n_e )
//! ```
//!
//! The P0 mass matrix is diagonal, so this is an explicit local formula and
//! the Hessian never needs to be solved for.

use crate::error::Result;
use crate::fespace::{barycentric_gradients, outer, P1Function, SpaceP1, Tensor, TensorField};
use crate::mesh::Triangulation;

/// Evaluates `H[V]` directly from the elementwise gradients of `v`.
pub fn fe_hessian(mesh: &Triangulation, v: &P1Function) -> Result<TensorField> {
    SpaceP1::new(mesh).check(v)?;
    let grads = v.gradients(mesh);
    let values = (0..mesh.n_triangles())
        .map(|k| {
            let mut h = [0.0; 4];
            for (i, &e) in mesh.triangle_edges(k).iter().enumerate() {
                let edge = &mesh.edges()[e];
                let n = edge.normal_for(k);
                let g = match mesh.neighbor(k, i) {
                    Some(j) => [
                        0.5 * (grads[k][0] + grads[j][0]),
                        0.5 * (grads[k][1] + grads[j][1]),
                    ],
                    None => grads[k],
                };
                let contribution = outer(g, n);
                for (hc, c) in h.iter_mut().zip(contribution) {
                    *hc += edge.length * c;
                }
            }
            h.map(|x| x / mesh.area(k))
        })
        .collect();
    Ok(TensorField::new(values))
}

/// The linear map from P1 coefficients to `H[·]`, stored per triangle as
/// the (at most six) vertices it reads and their tensor weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianOperator {
    n_vertices: usize,
    stencils: Vec<Vec<(usize, Tensor)>>,
}

fn accumulate(stencil: &mut Vec<(usize, Tensor)>, vertex: usize, w: Tensor) {
    match stencil.iter_mut().find(|(v, _)| *v == vertex) {
        Some((_, acc)) => {
            for (a, b) in acc.iter_mut().zip(w) {
                *a += b;
            }
        }
        None => stencil.push((vertex, w)),
    }
}

impl HessianOperator {
    pub fn new(mesh: &Triangulation) -> Self {
        let lambda_grads: Vec<_> = (0..mesh.n_triangles())
            .map(|k| barycentric_gradients(mesh.triangle_points(k)))
            .collect();
        let stencils = (0..mesh.n_triangles())
            .map(|k| {
                let mut stencil = Vec::with_capacity(6);
                let inv_area = 1.0 / mesh.area(k);
                for (i, &e) in mesh.triangle_edges(k).iter().enumerate() {
                    let edge = &mesh.edges()[e];
                    let [nx, ny] = edge.normal_for(k);
                    let scaled_normal = [edge.length * nx * inv_area, edge.length * ny * inv_area];
                    let (sides, weight): (&[usize], f64) = match mesh.neighbor(k, i) {
                        Some(j) => (&[k, j], 0.5),
                        None => (&[k], 1.0),
                    };
                    for &side in sides {
                        let vertices = mesh.triangles()[side].vertices;
                        for (local, &vertex) in vertices.iter().enumerate() {
                            let g = lambda_grads[side][local];
                            let w = outer([weight * g[0], weight * g[1]], scaled_normal);
                            accumulate(&mut stencil, vertex, w);
                        }
                    }
                }
                stencil
            })
            .collect();
        Self {
            n_vertices: mesh.n_vertices(),
            stencils,
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.stencils.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Vertices read by triangle `k` and their tensor weights.
    pub fn stencil(&self, k: usize) -> &[(usize, Tensor)] {
        &self.stencils[k]
    }

    pub fn apply(&self, v: &P1Function) -> TensorField {
        assert_eq!(v.len(), self.n_vertices, "P1 function does not match the operator");
        let c = v.coefficients();
        TensorField::new(
            self.stencils
                .iter()
                .map(|stencil| {
                    let mut h = [0.0; 4];
                    for (vertex, w) in stencil {
                        for (hc, wc) in h.iter_mut().zip(w) {
                            *hc += c[*vertex] * wc;
                        }
                    }
                    h
                })
                .collect(),
        )
    }
}

/// Assembles the Hessian operator for `mesh`.
pub fn hessian_operator(mesh: &Triangulation) -> HessianOperator {
    HessianOperator::new(mesh)
}
