//! Reference computations built only from vertex coordinates and triangle
//! connectivity, without the library's edge tables or stencils.

#![allow(dead_code)]

use std::collections::BTreeMap;

use inflap::fespace::load_vector;
use inflap::quadrature::QuadratureRule;
use inflap::{P1Function, ProblemData, Tensor, Triangulation};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

pub type Pt = [f64; 2];

pub fn corners(mesh: &Triangulation, k: usize) -> [Pt; 3] {
    mesh.triangles()[k].vertices.map(|v| {
        let p = &mesh.vertices()[v];
        [p.x, p.y]
    })
}

pub fn shoelace(p: [Pt; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Gradient of the affine interpolant of `values` at `p`, from the 3×3
/// Vandermonde system.
pub fn affine_gradient(p: [Pt; 3], values: [f64; 3]) -> Pt {
    let m = Matrix3::new(
        1.0, p[0][0], p[0][1], //
        1.0, p[1][0], p[1][1], //
        1.0, p[2][0], p[2][1],
    );
    let c = m.lu().solve(&Vector3::from(values)).expect("nondegenerate triangle");
    [c[1], c[2]]
}

pub fn element_gradient(mesh: &Triangulation, k: usize, u: &[f64]) -> Pt {
    let v = mesh.triangles()[k].vertices;
    affine_gradient(corners(mesh, k), v.map(|i| u[i]))
}

/// Each undirected edge with the triangles containing it and, per triangle,
/// the vertex opposite the edge.
pub fn edge_map(mesh: &Triangulation) -> BTreeMap<(usize, usize), Vec<(usize, usize)>> {
    let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (k, t) in mesh.triangles().iter().enumerate() {
        for i in 0..3 {
            let a = t.vertices[(i + 1) % 3];
            let b = t.vertices[(i + 2) % 3];
            map.entry((a.min(b), a.max(b))).or_default().push((k, t.vertices[i]));
        }
    }
    map
}

/// Unit normal of edge `(a, b)` pointing away from `opposite`.
pub fn outward_normal(a: Pt, b: Pt, opposite: Pt) -> Pt {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    let mut n = [dy / len, -dx / len];
    let to_opp = [opposite[0] - a[0], opposite[1] - a[1]];
    if n[0] * to_opp[0] + n[1] * to_opp[1] > 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// The P0 Hessian obtained by solving the (diagonal, but assembled densely)
/// mass system against the edge functionals.
pub fn hessian_oracle(mesh: &Triangulation, u: &[f64]) -> Vec<Tensor> {
    let nt = mesh.n_triangles();
    let pts: Vec<Pt> = mesh.vertices().iter().map(|v| [v.x, v.y]).collect();
    let grads: Vec<Pt> = (0..nt).map(|k| element_gradient(mesh, k, u)).collect();
    let mut rhs = DVector::zeros(4 * nt);
    for ((a, b), sides) in edge_map(mesh) {
        let len = (pts[b][0] - pts[a][0]).hypot(pts[b][1] - pts[a][1]);
        let g = match sides.as_slice() {
            [(k0, _), (k1, _)] => [0.5 * (grads[*k0][0] + grads[*k1][0]), 0.5 * (grads[*k0][1] + grads[*k1][1])],
            [(k0, _)] => grads[*k0],
            _ => panic!("nonmanifold edge"),
        };
        for &(k, opp) in &sides {
            let n = outward_normal(pts[a], pts[b], pts[opp]);
            for r in 0..2 {
                for c in 0..2 {
                    rhs[4 * k + 2 * r + c] += len * g[r] * n[c];
                }
            }
        }
    }
    let mut mass = DMatrix::zeros(4 * nt, 4 * nt);
    for k in 0..nt {
        let area = shoelace(corners(mesh, k));
        for c in 0..4 {
            mass[(4 * k + c, 4 * k + c)] = area;
        }
    }
    let h = mass.lu().solve(&rhs).expect("positive areas");
    (0..nt).map(|k| [h[4 * k], h[4 * k + 1], h[4 * k + 2], h[4 * k + 3]]).collect()
}

/// Counts vertices lying strictly inside some triangle edge.
pub fn hanging_vertices(mesh: &Triangulation) -> usize {
    let pts: Vec<Pt> = mesh.vertices().iter().map(|v| [v.x, v.y]).collect();
    let mut count = 0;
    for (a, b) in edge_map(mesh).into_keys() {
        let (pa, pb) = (pts[a], pts[b]);
        let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
        for (v, p) in pts.iter().enumerate() {
            if v == a || v == b {
                continue;
            }
            let cross = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
            let t = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / len2;
            if cross.abs() < 1e-12 && t > 1e-12 && t < 1.0 - 1e-12 {
                count += 1;
            }
        }
    }
    count
}

/// Linear-time conformity test: every edge not on the square's boundary is
/// shared by exactly two triangles, and all triangles are positively
/// oriented.
pub fn is_conforming(mesh: &Triangulation) -> bool {
    let pts: Vec<Pt> = mesh.vertices().iter().map(|v| [v.x, v.y]).collect();
    let on_side = |p: Pt, q: Pt| {
        (p[0] == q[0] && p[0].abs() == 1.0) || (p[1] == q[1] && p[1].abs() == 1.0)
    };
    (0..mesh.n_triangles()).all(|k| shoelace(corners(mesh, k)) > 0.0)
        && edge_map(mesh).iter().all(|(&(a, b), sides)| match sides.len() {
            1 => on_side(pts[a], pts[b]),
            2 => !on_side(pts[a], pts[b]),
            _ => false,
        })
}

pub fn min_angle_degrees(mesh: &Triangulation) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..mesh.n_triangles() {
        let p = corners(mesh, k);
        for i in 0..3 {
            let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
    }
    min
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect()
}

/// `∫_K φ` through the collapsed-square (Duffy) map and a tensor
/// Gauss-Legendre rule.
pub fn duffy_integral(p: [Pt; 3], n: usize, phi: impl Fn(Pt, [f64; 3]) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let jac = 2.0 * shoelace(p).abs();
    let mut sum = 0.0;
    for &(s, ws) in &rule {
        for &(t, wt) in &rule {
            let l1 = s;
            let l2 = t * (1.0 - s);
            let l0 = 1.0 - l1 - l2;
            let x = [
                l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0],
                l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1],
            ];
            sum += ws * wt * (1.0 - s) * jac * phi(x, [l0, l1, l2]);
        }
    }
    sum
}

/// The Hessian as a dense `4·nT × nV` matrix, one oracle column per basis
/// function.
pub fn oracle_hessian_matrix(mesh: &Triangulation) -> DMatrix<f64> {
    let (nv, nt) = (mesh.n_vertices(), mesh.n_triangles());
    let mut b = DMatrix::zeros(4 * nt, nv);
    for j in 0..nv {
        let mut e = vec![0.0; nv];
        e[j] = 1.0;
        for (k, h) in hessian_oracle(mesh, &e).iter().enumerate() {
            for c in 0..4 {
                b[(4 * k + c, j)] = h[c];
            }
        }
    }
    b
}

pub struct Coupled {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Unknowns `(U, H)`: the Hessian is a separate P0 unknown tied to `U` by
/// its defining mass system, and the step equation is tested with P1
/// functions.
pub fn coupled_system(mesh: &Triangulation, u_prev: &P1Function, problem: &ProblemData) -> Coupled {
    let (nv, nt) = (mesh.n_vertices(), mesh.n_triangles());
    let n = nv + 4 * nt;
    let b = oracle_hessian_matrix(mesh);
    let h_prev = &b * DVector::from_column_slice(u_prev.coefficients());
    let tau = problem.tau;
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let boundary: Vec<bool> = mesh.vertices().iter().map(|v| v.on_boundary).collect();
    let load = load_vector(mesh, &QuadratureRule::order4(), |x| (problem.f)(x));
    for i in 0..nv {
        if boundary[i] {
            m[(i, i)] = 1.0;
            rhs[i] = (problem.g)(mesh.point(i));
        } else {
            rhs[i] = load[i];
        }
    }
    for k in 0..nt {
        let p = corners(mesh, k);
        let area = shoelace(p);
        let grad = element_gradient(mesh, k, u_prev.coefficients());
        let s = (grad[0] * grad[0] + grad[1] * grad[1]).max(1e-10);
        let a = [
            grad[0] * grad[0] / s + 1.0 / tau,
            grad[0] * grad[1] / s,
            grad[1] * grad[0] / s,
            grad[1] * grad[1] / s + 1.0 / tau,
        ];
        let tr = h_prev[4 * k] + h_prev[4 * k + 3];
        for &i in &mesh.triangles()[k].vertices {
            if boundary[i] {
                continue;
            }
            // ∫_K λ_i = |K|/3.
            for c in 0..4 {
                m[(i, nv + 4 * k + c)] += area / 3.0 * a[c];
            }
            rhs[i] += area / 3.0 * tr / tau;
        }
        for c in 0..4 {
            let row = nv + 4 * k + c;
            m[(row, row)] = area;
            for j in 0..nv {
                m[(row, j)] -= area * b[(4 * k + c, j)];
            }
        }
    }
    Coupled { matrix: m, rhs }
}
