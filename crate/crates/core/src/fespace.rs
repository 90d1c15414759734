//! Continuous piecewise-linear and discontinuous piecewise-constant spaces.

use crate::error::{Error, Result};
use crate::mesh::{Point, Triangulation};
use crate::quadrature::QuadratureRule;

/// A 2x2 matrix stored row-major: `[a11, a12, a21, a22]`.
pub type Tensor = [f64; 4];

pub fn trace(t: &Tensor) -> f64 {
    t[0] + t[3]
}

/// Frobenius inner product `A : B`.
pub fn frobenius(a: &Tensor, b: &Tensor) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn outer(a: Point, b: Point) -> Tensor {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Gradients of the three barycentric coordinates of a triangle.
pub fn barycentric_gradients(p: [Point; 3]) -> [Point; 3] {
    let twice_area =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    std::array::from_fn(|i| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        [-(b[1] - a[1]) / twice_area, (b[0] - a[0]) / twice_area]
    })
}

/// Coefficients of a continuous P1 function, one per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Function {
    coefficients: Vec<f64>,
}

impl P1Function {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("coefficient {i} is not finite")));
        }
        Ok(Self { coefficients })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coefficients: vec![0.0; n],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Constant gradient on triangle `k`.
    pub fn gradient(&self, mesh: &Triangulation, k: usize) -> Point {
        let g = barycentric_gradients(mesh.triangle_points(k));
        let v = mesh.triangles()[k].vertices.map(|i| self.coefficients[i]);
        [
            v[0] * g[0][0] + v[1] * g[1][0] + v[2] * g[2][0],
            v[0] * g[0][1] + v[1] * g[1][1] + v[2] * g[2][1],
        ]
    }

    pub fn gradients(&self, mesh: &Triangulation) -> Vec<Point> {
        (0..mesh.n_triangles()).map(|k| self.gradient(mesh, k)).collect()
    }

    /// Value at barycentric coordinates `l` of triangle `k`.
    pub fn evaluate(&self, mesh: &Triangulation, k: usize, l: [f64; 3]) -> f64 {
        let v = mesh.triangles()[k].vertices;
        l[0] * self.coefficients[v[0]] + l[1] * self.coefficients[v[1]] + l[2] * self.coefficients[v[2]]
    }
}

/// One constant 2x2 tensor per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    values: Vec<Tensor>,
}

impl TensorField {
    pub fn new(values: Vec<Tensor>) -> Self {
        Self { values }
    }

    pub fn zeros(n_triangles: usize) -> Self {
        Self {
            values: vec![[0.0; 4]; n_triangles],
        }
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major flattening, four entries per triangle.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

impl std::ops::Index<usize> for TensorField {
    type Output = Tensor;

    fn index(&self, k: usize) -> &Tensor {
        &self.values[k]
    }
}

/// The continuous P1 space on a mesh.
#[derive(Debug, Clone)]
pub struct SpaceP1<'a> {
    mesh: &'a Triangulation,
    boundary_dofs: Vec<usize>,
}

impl<'a> SpaceP1<'a> {
    pub fn new(mesh: &'a Triangulation) -> Self {
        Self {
            mesh,
            boundary_dofs: mesh.boundary_vertices(),
        }
    }

    pub fn mesh(&self) -> &'a Triangulation {
        self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Lagrange interpolation at the vertices.
    pub fn interpolate(&self, g: impl Fn(Point) -> f64) -> Result<P1Function> {
        let coefficients = self
            .mesh
            .vertices()
            .iter()
            .map(|v| {
                let value = g(v.point());
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::Evaluation {
                        what: "interpolant",
                        x: v.x,
                        y: v.y,
                        value,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(P1Function { coefficients })
    }

    pub fn check(&self, u: &P1Function) -> Result<()> {
        if u.len() != self.dof_count() {
            return Err(Error::invalid(format!(
                "P1 function has {} coefficients, mesh has {} vertices",
                u.len(),
                self.dof_count()
            )));
        }
        Ok(())
    }
}

/// The discontinuous piecewise-constant 2x2 tensor space on a mesh.
#[derive(Debug, Clone, Copy)]
pub struct SpaceP0Tensor<'a> {
    mesh: &'a Triangulation,
}

impl<'a> SpaceP0Tensor<'a> {
    pub fn new(mesh: &'a Triangulation) -> Self {
        Self { mesh }
    }

    pub fn dof_count(&self) -> usize {
        4 * self.mesh.n_triangles()
    }

    pub fn check(&self, h: &TensorField) -> Result<()> {
        if h.len() != self.mesh.n_triangles() {
            return Err(Error::invalid(format!(
                "tensor field has {} entries, mesh has {} triangles",
                h.len(),
                self.mesh.n_triangles()
            )));
        }
        Ok(())
    }
}

/// `∫_Ω f` by elementwise quadrature.
pub fn integrate(mesh: &Triangulation, quad: &QuadratureRule, f: impl Fn(Point) -> f64) -> f64 {
    (0..mesh.n_triangles())
        .map(|k| {
            quad.nodes_on(mesh.triangle_points(k), mesh.area(k))
                .map(|(x, _, w)| w * f(x))
                .sum::<f64>()
        })
        .sum()
}

/// `∫_Ω f λ_i` for every vertex basis function `λ_i`.
pub fn load_vector(mesh: &Triangulation, quad: &QuadratureRule, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for (k, t) in mesh.triangles().iter().enumerate() {
        for (x, l, w) in quad.nodes_on(mesh.triangle_points(k), mesh.area(k)) {
            let fx = f(x);
            for i in 0..3 {
                out[t.vertices[i]] += w * fx * l[i];
            }
        }
    }
    out
}

/// Exact L2 norm of a P1 function (element mass matrices).
pub fn l2_norm(mesh: &Triangulation, u: &P1Function) -> f64 {
    let c = u.coefficients();
    mesh.triangles()
        .iter()
        .zip(mesh.areas())
        .map(|(t, &area)| {
            let v = t.vertices.map(|i| c[i]);
            let sum = v[0] + v[1] + v[2];
            let sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            area / 12.0 * (sq + sum * sum)
        })
        .sum::<f64>()
        .sqrt()
}

/// `||u - exact||_{L2(Ω)}`.
pub fn l2_error(
    mesh: &Triangulation,
    u: &P1Function,
    exact: impl Fn(Point) -> f64,
    quad: &QuadratureRule,
) -> f64 {
    (0..mesh.n_triangles())
        .map(|k| {
            quad.nodes_on(mesh.triangle_points(k), mesh.area(k))
                .map(|(x, l, w)| w * (u.evaluate(mesh, k, l) - exact(x)).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `|u - exact|_{H1(Ω)}` given the exact gradient.
pub fn h1_semi_error(
    mesh: &Triangulation,
    u: &P1Function,
    exact_gradient: impl Fn(Point) -> Point,
    quad: &QuadratureRule,
) -> f64 {
    (0..mesh.n_triangles())
        .map(|k| {
            let g = u.gradient(mesh, k);
            quad.nodes_on(mesh.triangle_points(k), mesh.area(k))
                .map(|(x, _, w)| {
                    let e = exact_gradient(x);
                    w * ((g[0] - e[0]).powi(2) + (g[1] - e[1]).powi(2))
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}
