//! Fixtures shared by the criterion benches.

use inflap::{build_initial_mesh, ProblemData, SpaceP1, P1Function, Triangulation};

/// The 4×4 base mesh after `levels` uniform refinements.
pub fn uniform_mesh(levels: usize) -> Triangulation {
    let mut mesh = build_initial_mesh(4).unwrap();
    for _ in 0..levels {
        mesh = mesh.uniform_refine();
    }
    mesh
}

/// A mesh graded towards the origin by `steps` rounds of local refinement.
pub fn graded_mesh(steps: usize) -> Triangulation {
    let mut mesh = build_initial_mesh(4).unwrap();
    for _ in 0..steps {
        let marked: Vec<usize> = (0..mesh.n_triangles())
            .filter(|&k| {
                let c = mesh.centroid(k);
                c[0].hypot(c[1]) < 0.3
            })
            .collect();
        mesh = mesh.refine(&marked).unwrap();
    }
    mesh
}

pub fn aronsson() -> ProblemData {
    inflap::problem("aronsson").unwrap().data
}

pub fn smooth_field(mesh: &Triangulation) -> P1Function {
    SpaceP1::new(mesh).interpolate(|[x, y]| (2.0 * x).sin() * y + x * x).unwrap()
}
