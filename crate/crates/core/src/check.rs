//! A quick invariant suite on small meshes, used by the `check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapt::{mark, prolongate};
use crate::estimator::{estimate, EstimatorOptions};
use crate::fespace::{outer, P1Function, SpaceP1};
use crate::hessian::{fe_hessian, HessianOperator};
use crate::mesh::{build_initial_mesh, Triangulation};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Meshes used by the suite: two criss-cross meshes and a randomly refined
/// one, all reproducible from `seed`.
pub fn sample_meshes(seed: u64) -> Vec<Triangulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = build_initial_mesh(2).expect("n > 0");
    for _ in 0..4 {
        let marked: Vec<usize> = (0..random.n_triangles()).filter(|_| rng.random_bool(0.3)).collect();
        random = random.refine(&marked).expect("ids in range");
    }
    vec![
        build_initial_mesh(1).expect("n > 0"),
        build_initial_mesh(3).expect("n > 0").uniform_refine(),
        random,
    ]
}

fn random_p1(mesh: &Triangulation, rng: &mut ChaCha8Rng) -> P1Function {
    P1Function::new((0..mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("finite values")
}

/// `Σ_K |K| H_K` minus the boundary integral of `∇V ⊗ n`, in max norm.
pub fn consistency_defect(mesh: &Triangulation, v: &P1Function) -> f64 {
    let h = HessianOperator::new(mesh).apply(v);
    let mut total = [0.0; 4];
    for k in 0..mesh.n_triangles() {
        for c in 0..4 {
            total[c] += mesh.area(k) * h[k][c];
        }
    }
    for &e in mesh.boundary_edges() {
        let edge = &mesh.edges()[e];
        let k = edge.adjacent.0;
        let w = outer(v.gradient(mesh, k), edge.normal_for(k));
        for c in 0..4 {
            total[c] -= edge.length * w[c];
        }
    }
    total.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Every vertex that lies on an edge of a triangle must be one of its
/// endpoints.
pub fn hanging_vertices(mesh: &Triangulation) -> usize {
    let mut count = 0;
    for e in mesh.edges() {
        let [a, b] = e.vertices.map(|v| mesh.point(v));
        for v in mesh.vertices() {
            if e.vertices.contains(&v.id) {
                continue;
            }
            let p = v.point();
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / e.length.powi(2);
            if cross.abs() < 1e-12 && t > 1e-12 && t < 1.0 - 1e-12 {
                count += 1;
            }
        }
    }
    count
}

pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meshes = sample_meshes(seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for mesh in &meshes {
        let v = SpaceP1::new(mesh)
            .interpolate(|[x, y]| 0.5 - 2.0 * x + 0.75 * y)
            .expect("finite");
        let h = fe_hessian(mesh, &v).expect("matching sizes");
        worst = worst.max(h.values().iter().flatten().fold(0.0, |m, x| m.max(x.abs())));
    }
    out.push(result("hessian of affine is zero", worst <= 1e-12, format!("max |H| = {worst:.2e}")));

    let mut worst = 0.0f64;
    for mesh in &meshes {
        for _ in 0..20 {
            worst = worst.max(consistency_defect(mesh, &random_p1(mesh, &mut rng)));
        }
    }
    out.push(result("hessian global consistency", worst <= 1e-12, format!("max defect = {worst:.2e}")));

    let hanging: usize = meshes.iter().map(hanging_vertices).sum();
    out.push(result("mesh conformity", hanging == 0, format!("{hanging} hanging vertices")));

    let worst = meshes
        .iter()
        .map(|m| (m.areas().iter().sum::<f64>() - 4.0).abs())
        .fold(0.0, f64::max);
    out.push(result("area conservation", worst <= 1e-10, format!("max |area - 4| = {worst:.2e}")));

    let min_angle = meshes.iter().map(|m| m.min_angle_degrees()).fold(f64::INFINITY, f64::min);
    out.push(result(
        "minimum angle",
        min_angle >= 22.5 - 1e-9,
        format!("min angle = {min_angle:.6} deg"),
    ));

    let mut worst = 0.0f64;
    for mesh in &meshes {
        let u = SpaceP1::new(mesh).interpolate(|[x, y]| 1.0 + x - y).expect("finite");
        let ind = estimate(mesh, &u, &u, &|_| 0.0, 1.0, &EstimatorOptions::default())
            .expect("matching sizes");
        worst = worst.max(ind.global_estimate);
    }
    out.push(result("estimator zero case", worst <= 1e-12, format!("max estimate = {worst:.2e}")));

    let mut worst = 0.0f64;
    for mesh in &meshes {
        let (a, b) = (random_p1(mesh, &mut rng), random_p1(mesh, &mut rng));
        let ind = estimate(mesh, &a, &b, &|[x, y]| x * y, 0.5, &EstimatorOptions::default())
            .expect("matching sizes");
        let lhs: f64 = ind.eta.iter().map(|e| e * e).sum();
        let rhs: f64 = ind.interior.iter().chain(&ind.jump).map(|e| e * e).sum();
        worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
    }
    out.push(result("estimator edge partition", worst <= 1e-13, format!("relative defect = {worst:.2e}")));

    let mesh = &meshes[2];
    let u = random_p1(mesh, &mut rng);
    let marked: Vec<usize> = (0..mesh.n_triangles()).filter(|k| k % 5 == 0).collect();
    let fine = mesh.refine(&marked).expect("ids in range");
    let p = prolongate(&fine, &u).expect("refinement");
    let exact = p.coefficients()[..u.len()] == *u.coefficients();
    out.push(result("warm start keeps old values", exact, String::new()));

    let eta = crate::estimator::IndicatorField {
        eta: vec![3.0, 1.0, 0.0, 0.0],
        interior: vec![0.0; 4],
        jump: Vec::new(),
        global_estimate: 4.0,
        global_estimate_l2: 10f64.sqrt(),
    };
    let m = mark(&eta, 0.9f64.sqrt()).expect("valid theta");
    out.push(result("bulk marking", m == vec![0], format!("marked {m:?}")));

    let again = sample_meshes(seed);
    out.push(result("deterministic refinement", again == meshes, String::new()));
    out
}
