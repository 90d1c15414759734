use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use inflap::{
    apply_dirichlet, assemble_step, estimate, hessian_operator, solve_linear, EstimatorOptions, SolverConfig,
    SpaceP1,
};
use inflap_bench::{aronsson, graded_mesh, smooth_field, uniform_mesh};

fn hessian(c: &mut Criterion) {
    let mut group = c.benchmark_group("hessian");
    for levels in [2, 3, 4] {
        let mesh = uniform_mesh(levels);
        let v = smooth_field(&mesh);
        group.bench_with_input(BenchmarkId::new("assemble", mesh.n_vertices()), &mesh, |b, m| {
            b.iter(|| hessian_operator(black_box(m)))
        });
        let op = hessian_operator(&mesh);
        group.bench_with_input(BenchmarkId::new("apply", mesh.n_vertices()), &v, |b, v| {
            b.iter(|| op.apply(black_box(v)))
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    let problem = aronsson();
    let config = SolverConfig::default();
    for levels in [2, 3, 4] {
        let mesh = uniform_mesh(levels);
        let u = smooth_field(&mesh);
        let op = hessian_operator(&mesh);
        let h = op.apply(&u);
        group.bench_with_input(BenchmarkId::new("assemble", mesh.n_vertices()), &mesh, |b, m| {
            b.iter(|| assemble_step(m, &op, &u, &h, &problem, &config).unwrap())
        });
        let system = assemble_step(&mesh, &op, &u, &h, &problem, &config).unwrap();
        let system = apply_dirichlet(system, &SpaceP1::new(&mesh), &*problem.g).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", mesh.n_vertices()), &system, |b, s| {
            b.iter(|| solve_linear(s, &config).unwrap())
        });
    }
    group.finish();
}

fn estimator(c: &mut Criterion) {
    let problem = aronsson();
    let mesh = uniform_mesh(3);
    let prev = smooth_field(&mesh);
    let next = SpaceP1::new(&mesh).interpolate(|x| (problem.g)(x)).unwrap();
    c.bench_function("estimate", |b| {
        b.iter(|| estimate(&mesh, &prev, &next, &*problem.f, 0.1, &EstimatorOptions::default()).unwrap())
    });
}

fn refine(c: &mut Criterion) {
    let mut group = c.benchmark_group("refine");
    for steps in [4, 8] {
        let mesh = graded_mesh(steps);
        let marked: Vec<usize> = (0..mesh.n_triangles()).step_by(7).collect();
        group.bench_with_input(BenchmarkId::new("local", mesh.n_triangles()), &mesh, |b, m| {
            b.iter(|| m.refine(black_box(&marked)).unwrap())
        });
    }
    let mesh = uniform_mesh(3);
    group.bench_function(BenchmarkId::new("uniform", mesh.n_triangles()), |b| b.iter(|| mesh.uniform_refine()));
    group.finish();
}

criterion_group!(benches, hessian, step, estimator, refine);
criterion_main!(benches);
