use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use l1geo::construct::{construct_arbitrary_face, AffineSubspace};
use l1geo::dict::{complete_graph_edges, difference_dict, incidence_dict};
use l1geo::linalg::Matrix;
use l1geo::{
    brute_force_feasible_signs, describe_solution_set, enumerate_feasible_signs, hasse_diagram, solve_admm,
    Dictionary, ProblemInstance, SignVector, Tolerances,
};

fn k4() -> Dictionary {
    incidence_dict(&complete_graph_edges(4), 4).unwrap()
}

fn setting3d() -> ProblemInstance {
    let d = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 2.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let phi = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 3.0, 1.0, 1.0, 2f64.sqrt(), 0.0, 0.0]);
    let dict = Dictionary::new(d, Tolerances::default()).unwrap();
    ProblemInstance::new(dict, phi, vec![1.0, 1.0, 0.0], 0.5).unwrap()
}

fn signs(c: &mut Criterion) {
    let d = k4();
    c.bench_function("k4 enumerate", |b| b.iter(|| enumerate_feasible_signs(black_box(&d)).unwrap()));
    c.bench_function("k4 hasse", |b| b.iter(|| hasse_diagram(black_box(&d)).unwrap()));
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("k4 sampling oracle", |b| b.iter(|| brute_force_feasible_signs(black_box(&d), 200, 0).unwrap()));
    g.finish();
}

fn solution_sets(c: &mut Criterion) {
    let inst = setting3d();
    let x = solve_admm(&inst, inst.tol().solver_tol, 50_000).unwrap();
    c.bench_function("setting3d solve", |b| b.iter(|| solve_admm(black_box(&inst), 5e-10, 50_000).unwrap()));
    c.bench_function("setting3d describe", |b| b.iter(|| describe_solution_set(black_box(&inst), &x).unwrap()));
}

fn constructions(c: &mut Criterion) {
    let d = difference_dict(3).unwrap();
    let sign: SignVector = "-+".parse().unwrap();
    let normals = Matrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
    let a = AffineSubspace::from_normals(vec![1.0, 1.0, 1.0], &normals, d.tol()).unwrap();
    c.bench_function("tv3 construct face", |b| {
        b.iter(|| construct_arbitrary_face(black_box(&d), &sign, 1.0, &a, 1.0).unwrap())
    });
}

criterion_group!(benches, signs, solution_sets, constructions);
criterion_main!(benches);
