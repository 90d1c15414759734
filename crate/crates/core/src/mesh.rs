//! Conforming triangulations of the square `[-1, 1]^2`.
//!
//! Meshes are immutable values: [`Triangulation::refine`] and
//! [`Triangulation::uniform_refine`] return new meshes. Vertex ids of the
//! parent mesh are preserved by refinement and new vertices are appended, so
//! a P1 coefficient vector on the parent is a prefix of its prolongation.
//!
//! Refinement is newest vertex bisection. Every triangle carries a
//! refinement edge (the edge opposite its newest vertex); bisecting it
//! creates a midpoint which becomes the newest vertex of both children.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Absolute tolerance for deciding whether a coordinate lies on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub on_boundary: bool,
    /// Endpoints of the edge this vertex bisected, for vertices created by
    /// refinement.
    pub parents: Option<[usize; 2]>,
}

impl Vertex {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub id: usize,
    /// Counter-clockwise vertex ids.
    pub vertices: [usize; 3],
    /// Local index of the newest vertex; the refinement edge is the edge
    /// opposite it.
    pub refinement_edge: usize,
    /// Id of the triangle in the previous mesh that was bisected to produce
    /// this one. Triangles untouched by a refinement keep their old value.
    pub parent: Option<usize>,
    /// Number of bisections separating this triangle from the initial mesh.
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    /// Endpoints, ordered counter-clockwise with respect to the first
    /// adjacent triangle.
    pub vertices: [usize; 2],
    /// First adjacent triangle and, for interior edges, the second.
    pub adjacent: (usize, Option<usize>),
    /// Local index (opposite vertex) of the edge in each adjacent triangle.
    pub local: (usize, usize),
    /// Unit normal pointing out of the first adjacent triangle.
    pub normal_from_first: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.adjacent.1.is_some()
    }

    /// Outward unit normal of `triangle` on this edge.
    pub fn normal_for(&self, triangle: usize) -> Point {
        let [nx, ny] = self.normal_from_first;
        if triangle == self.adjacent.0 {
            [nx, ny]
        } else {
            [-nx, -ny]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Vertex>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    interior_edges: Vec<usize>,
    boundary_edges: Vec<usize>,
    /// Edge ids of each triangle, indexed by the opposite local vertex.
    triangle_edges: Vec<[usize; 3]>,
    areas: Vec<f64>,
    edge_lookup: HashMap<(usize, usize), usize>,
    level: usize,
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.level == other.level
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]))
}

pub fn distance(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Longest edge length of a triangle.
pub fn diameter(p: [Point; 3]) -> f64 {
    distance(p[0], p[1])
        .max(distance(p[1], p[2]))
        .max(distance(p[2], p[0]))
}

fn on_square_boundary(x: f64, y: f64) -> bool {
    (x.abs().max(y.abs()) - 1.0).abs() <= BOUNDARY_TOL
}

/// Local index of the vertex opposite the longest edge; ties go to the
/// smallest global vertex id.
fn longest_edge_vertex(vertices: [usize; 3], p: [Point; 3]) -> usize {
    let len2 = |i: usize| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)
    };
    let longest = (0..3).map(len2).fold(0.0, f64::max);
    (0..3)
        .filter(|&i| len2(i) >= longest * (1.0 - 1e-12))
        .min_by_key(|&i| vertices[i])
        .expect("a triangle has three edges")
}

/// The criss-cross mesh: an `n x n` grid of squares on `[-1, 1]^2`, each
/// split into four triangles by its diagonals. Refinement edges are the
/// longest edges (the square sides), which makes the labelling compatible
/// for newest vertex bisection.
pub fn build_initial_mesh(n: usize) -> Result<Triangulation> {
    if n == 0 {
        return Err(Error::invalid("initial mesh needs n >= 1"));
    }
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
    let grid = |i: usize, j: usize| j * (n + 1) + i;

    let mut points = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            points.push([coord(i), coord(j)]);
        }
    }
    let mut cells = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = points.len();
            points.push([0.5 * (coord(i) + coord(i + 1)), 0.5 * (coord(j) + coord(j + 1))]);
            let (a, b, d, e) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            cells.extend_from_slice(&[[a, b, c], [b, d, c], [d, e, c], [e, a, c]]);
        }
    }
    Triangulation::new(points, cells)
}

impl Triangulation {
    /// Builds a mesh of `[-1, 1]^2` from counter-clockwise triangles,
    /// labelling each refinement edge by the longest-edge rule.
    pub fn new(points: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite())
                || p[0].abs() > 1.0 + BOUNDARY_TOL
                || p[1].abs() > 1.0 + BOUNDARY_TOL
            {
                return Err(Error::invalid(format!("vertex {i} lies outside [-1,1]^2")));
            }
        }
        let vertices = points
            .iter()
            .enumerate()
            .map(|(id, p)| Vertex {
                id,
                x: p[0],
                y: p[1],
                on_boundary: on_square_boundary(p[0], p[1]),
                parents: None,
            })
            .collect::<Vec<_>>();
        let mut triangles = Vec::with_capacity(cells.len());
        for (id, cell) in cells.into_iter().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("triangle {id} references a missing vertex")));
            }
            let p = cell.map(|v| points[v]);
            triangles.push(Triangle {
                id,
                vertices: cell,
                refinement_edge: longest_edge_vertex(cell, p),
                parent: None,
                generation: 0,
            });
        }
        let mesh = Self::from_parts(vertices, triangles, 0)?;
        mesh.validate().map_err(Error::InvalidArgument)?;
        Ok(mesh)
    }

    fn from_parts(vertices: Vec<Vertex>, triangles: Vec<Triangle>, level: usize) -> Result<Self> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * triangles.len() / 2 + 4);
        let mut edge_lookup = HashMap::with_capacity(edges.capacity());
        let mut triangle_edges = Vec::with_capacity(triangles.len());

        for t in &triangles {
            let p = t.vertices.map(|v| vertices[v].point());
            let area = signed_area(p);
            if !(area > 0.0) {
                return Err(Error::invalid(format!(
                    "triangle {} is not positively oriented (signed area {area:e})",
                    t.id
                )));
            }
            areas.push(area);
            let mut local_edges = [0; 3];
            for (i, slot) in local_edges.iter_mut().enumerate() {
                let a = t.vertices[(i + 1) % 3];
                let b = t.vertices[(i + 2) % 3];
                let key = edge_key(a, b);
                *slot = match edge_lookup.get(&key) {
                    Some(&e) => {
                        let edge: &mut Edge = &mut edges[e];
                        if edge.adjacent.1.is_some() {
                            return Err(Error::invalid(format!(
                                "edge ({a}, {b}) is shared by more than two triangles"
                            )));
                        }
                        edge.adjacent.1 = Some(t.id);
                        edge.local.1 = i;
                        e
                    }
                    None => {
                        let (pa, pb) = (vertices[a].point(), vertices[b].point());
                        let length = distance(pa, pb);
                        let id = edges.len();
                        edges.push(Edge {
                            id,
                            vertices: [a, b],
                            adjacent: (t.id, None),
                            local: (i, i),
                            normal_from_first: [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length],
                            length,
                        });
                        edge_lookup.insert(key, id);
                        id
                    }
                };
            }
            triangle_edges.push(local_edges);
        }

        let (interior_edges, boundary_edges) = edges
            .iter()
            .map(|e| e.id)
            .partition(|&e| edges[e].is_interior());

        Ok(Self {
            vertices,
            triangles,
            edges,
            interior_edges,
            boundary_edges,
            triangle_edges,
            areas,
            edge_lookup,
            level,
        })
    }

    /// Checks conformity, coverage of the square and boundary placement.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e].vertices;
            let (va, vb) = (&self.vertices[a], &self.vertices[b]);
            let same_side = [
                (va.x + 1.0).abs() <= BOUNDARY_TOL && (vb.x + 1.0).abs() <= BOUNDARY_TOL,
                (va.x - 1.0).abs() <= BOUNDARY_TOL && (vb.x - 1.0).abs() <= BOUNDARY_TOL,
                (va.y + 1.0).abs() <= BOUNDARY_TOL && (vb.y + 1.0).abs() <= BOUNDARY_TOL,
                (va.y - 1.0).abs() <= BOUNDARY_TOL && (vb.y - 1.0).abs() <= BOUNDARY_TOL,
            ];
            if !same_side.iter().any(|&s| s) {
                return Err(format!(
                    "edge {e} has a single neighbour but does not lie on the boundary (hanging vertex or hole)"
                ));
            }
        }
        let total: f64 = self.areas.iter().sum();
        if (total - 4.0).abs() > 1e-10 {
            return Err(format!("triangle areas sum to {total}, expected 4"));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn point(&self, v: usize) -> Point {
        self.vertices[v].point()
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        self.triangles[k].vertices.map(|v| self.vertices[v].point())
    }

    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Edge ids of triangle `k`; entry `i` is the edge opposite local vertex `i`.
    pub fn triangle_edges(&self, k: usize) -> [usize; 3] {
        self.triangle_edges[k]
    }

    /// Triangle across the edge opposite local vertex `i` of `k`, if any.
    pub fn neighbor(&self, k: usize, i: usize) -> Option<usize> {
        let e = &self.edges[self.triangle_edges[k][i]];
        match e.adjacent {
            (a, Some(b)) if a == k => Some(b),
            (a, Some(_)) => Some(a),
            (_, None) => None,
        }
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    /// Diameter (longest edge) of triangle `k`.
    pub fn h_k(&self, k: usize) -> f64 {
        diameter(self.triangle_points(k))
    }

    pub fn h_e(&self, e: usize) -> f64 {
        self.edges[e].length
    }

    /// Largest element diameter.
    pub fn max_h(&self) -> f64 {
        (0..self.n_triangles()).map(|k| self.h_k(k)).fold(0.0, f64::max)
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .filter(|v| v.on_boundary)
            .map(|v| v.id)
            .collect()
    }

    pub fn centroid(&self, k: usize) -> Point {
        let p = self.triangle_points(k);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..self.n_triangles() {
            let p = self.triangle_points(k);
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

    /// Newest vertex bisection of the marked triangles, followed by the
    /// bisections needed to restore conformity.
    pub fn refine(&self, marked: &[usize]) -> Result<Triangulation> {
        if let Some(&bad) = marked.iter().find(|&&k| k >= self.n_triangles()) {
            return Err(Error::invalid(format!(
                "cannot refine unknown triangle {bad} (mesh has {})",
                self.n_triangles()
            )));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }

        let mut edge_marked = vec![false; self.edges.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        let mark_edge = |e: usize, edge_marked: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
            if !edge_marked[e] {
                edge_marked[e] = true;
                let (a, b) = self.edges[e].adjacent;
                queue.push_back(a);
                if let Some(b) = b {
                    queue.push_back(b);
                }
            }
        };
        for &k in marked {
            let e = self.refinement_edge_id(k);
            mark_edge(e, &mut edge_marked, &mut queue);
        }
        // Closure: a triangle with any marked edge must also have its
        // refinement edge marked.
        while let Some(k) = queue.pop_front() {
            let edges = self.triangle_edges[k];
            if edges.iter().any(|&e| edge_marked[e]) {
                let e = self.refinement_edge_id(k);
                mark_edge(e, &mut edge_marked, &mut queue);
            }
        }
        self.bisect_marked_edges(&edge_marked)
    }

    /// Splits every triangle into four by two bisection sweeps.
    pub fn uniform_refine(&self) -> Triangulation {
        self.bisect_marked_edges(&vec![true; self.edges.len()])
            .expect("uniform refinement of a valid mesh is valid")
    }

    fn refinement_edge_id(&self, k: usize) -> usize {
        self.triangle_edges[k][self.triangles[k].refinement_edge]
    }

    fn bisect_marked_edges(&self, edge_marked: &[bool]) -> Result<Triangulation> {
        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![None; self.edges.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            if edge_marked[e] {
                let [a, b] = edge.vertices;
                let (pa, pb) = (self.point(a), self.point(b));
                let (x, y) = (0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]));
                let id = vertices.len();
                vertices.push(Vertex {
                    id,
                    x,
                    y,
                    on_boundary: !edge.is_interior() || on_square_boundary(x, y),
                    parents: Some(edge_key(a, b).into()),
                });
                midpoint[e] = Some(id);
            }
        }

        let mut triangles = Vec::with_capacity(self.n_triangles() * 2);
        for t in &self.triangles {
            let r = t.refinement_edge;
            let rotated = [t.vertices[r], t.vertices[(r + 1) % 3], t.vertices[(r + 2) % 3]];
            self.bisect(rotated, t.id, t.generation, edge_marked, &midpoint, &mut triangles)?;
        }
        for (id, t) in triangles.iter_mut().enumerate() {
            t.id = id;
        }
        Triangulation::from_parts(vertices, triangles, self.level + 1)
    }

    /// `verts[0]` is the newest vertex, `verts[1]..verts[2]` the refinement
    /// edge. Recurses at most twice since grandchildren only have new edges
    /// as refinement edges.
    fn bisect(
        &self,
        verts: [usize; 3],
        origin: usize,
        generation: u32,
        edge_marked: &[bool],
        midpoint: &[Option<usize>],
        out: &mut Vec<Triangle>,
    ) -> Result<()> {
        let marked_edge = self
            .find_edge(verts[1], verts[2])
            .filter(|&e| edge_marked[e]);
        let Some(e) = marked_edge else {
            let unchanged = generation == self.triangles[origin].generation;
            out.push(Triangle {
                id: 0,
                vertices: verts,
                refinement_edge: if unchanged {
                    self.triangles[origin].refinement_edge
                } else {
                    0
                },
                parent: if unchanged {
                    self.triangles[origin].parent
                } else {
                    Some(origin)
                },
                generation,
            });
            if unchanged {
                // Keep the original vertex order for untouched triangles.
                out.last_mut().expect("just pushed").vertices = self.triangles[origin].vertices;
            }
            return Ok(());
        };
        let m = midpoint[e].ok_or_else(|| Error::invalid("marked edge without a midpoint"))?;
        let [p0, p1, p2] = verts;
        self.bisect([m, p0, p1], origin, generation + 1, edge_marked, midpoint, out)?;
        self.bisect([m, p2, p0], origin, generation + 1, edge_marked, midpoint, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_mesh_counts() {
        let m = build_initial_mesh(1).unwrap();
        assert_eq!(m.n_triangles(), 4);
        assert_eq!(m.n_vertices(), 5);
        assert_eq!(m.interior_edges().len(), 4);
        assert_eq!(m.boundary_edges().len(), 4);

        let m = build_initial_mesh(2).unwrap();
        assert_eq!(m.n_triangles(), 16);
        assert_eq!(m.n_vertices(), 13);
    }

    #[test]
    fn initial_mesh_zero_is_rejected() {
        assert!(matches!(build_initial_mesh(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn initial_mesh_covers_square() {
        for n in 1..=7 {
            let m = build_initial_mesh(n).unwrap();
            let total: f64 = m.areas().iter().sum();
            assert!((total - 4.0).abs() < 1e-12, "n={n}: {total}");
            m.validate().unwrap();
        }
    }

    #[test]
    fn diameters() {
        assert!((diameter([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) - 2f64.sqrt()).abs() < 1e-15);
        let m = build_initial_mesh(1).unwrap();
        for k in 0..4 {
            assert_eq!(m.h_k(k), 2.0);
        }
        let unit = m
            .edges()
            .iter()
            .find(|e| e.vertices.contains(&0) && e.vertices.contains(&1))
            .unwrap();
        assert_eq!(m.h_e(unit.id), 2.0);
        let m = build_initial_mesh(2).unwrap();
        let side = m.find_edge(0, 1).unwrap();
        assert_eq!(m.h_e(side), 1.0);
    }

    #[test]
    fn refinement_edges_are_square_sides() {
        let m = build_initial_mesh(3).unwrap();
        for t in m.triangles() {
            let e = m.refinement_edge_id(t.id);
            assert!((m.h_e(e) - 2.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let m = build_initial_mesh(3).unwrap();
        for e in m.edges() {
            let [nx, ny] = e.normal_from_first;
            assert!((nx.hypot(ny) - 1.0).abs() < 1e-12);
            let c = m.centroid(e.adjacent.0);
            let a = m.point(e.vertices[0]);
            assert!((a[0] - c[0]) * nx + (a[1] - c[1]) * ny > 0.0);
        }
    }

    #[test]
    fn empty_refinement_is_identity() {
        let m = build_initial_mesh(2).unwrap();
        let r = m.refine(&[]).unwrap();
        assert_eq!(r, m);
    }

    #[test]
    fn unknown_triangle_is_rejected() {
        let m = build_initial_mesh(1).unwrap();
        assert!(matches!(m.refine(&[4]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn refine_all_of_single_square() {
        let m = build_initial_mesh(1).unwrap();
        let r = m.refine(&[0, 1, 2, 3]).unwrap();
        assert!(r.n_triangles() >= 8);
        r.validate().unwrap();
        for t in r.triangles() {
            assert_eq!(t.parent.map(|p| p < 4), Some(true));
        }
    }

    #[test]
    fn uniform_refinement_quadruples_and_halves() {
        let mut m = build_initial_mesh(1).unwrap();
        for _ in 0..4 {
            let r = m.uniform_refine();
            assert_eq!(r.n_triangles(), 4 * m.n_triangles());
            assert_eq!(r.max_h(), 0.5 * m.max_h());
            r.validate().unwrap();
            m = r;
        }
    }

    #[test]
    fn new_vertices_are_edge_midpoints() {
        let m = build_initial_mesh(2).unwrap();
        let r = m.refine(&[5]).unwrap();
        assert_eq!(&r.vertices()[..m.n_vertices()], m.vertices());
        for v in &r.vertices()[m.n_vertices()..] {
            let [a, b] = v.parents.unwrap();
            let (pa, pb) = (m.point(a), m.point(b));
            assert_eq!(v.x, 0.5 * (pa[0] + pb[0]));
            assert_eq!(v.y, 0.5 * (pa[1] + pb[1]));
        }
    }

    #[test]
    fn children_have_newest_vertex_opposite_refinement_edge() {
        let m = build_initial_mesh(2).unwrap();
        let r = m.refine(&[0]).unwrap();
        for t in r.triangles().iter().filter(|t| t.generation > 0) {
            let newest = t.vertices[t.refinement_edge];
            assert!(newest >= m.n_vertices());
        }
    }

    #[test]
    fn non_square_input_is_rejected() {
        let pts = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0]];
        assert!(Triangulation::new(pts, vec![[0, 1, 2]]).is_err());
        let pts = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        assert!(Triangulation::new(pts.clone(), vec![[0, 2, 1], [0, 2, 3]]).is_err());
        let m = Triangulation::new(pts, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(m.max_h(), 8f64.sqrt());
    }
}
