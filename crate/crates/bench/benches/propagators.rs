use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vnsim_bench::fixture;
use vnsim_core::circuit::{build_plan, execute, ShotPolicy};
use vnsim_core::models::ModelHamiltonian;
use vnsim_core::oracle::integrate_von_neumann;
use vnsim_core::{Method, Propagator, TimeGrid};

fn propagators(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate_1000_steps");
    let grid = TimeGrid::with_steps(1.0, 1000, 100).unwrap();
    for name in ["example1", "example2"] {
        let f = fixture(name);
        for method in [Method::LieEuler, Method::AlphaExact, Method::ClassicalOde] {
            let p = Propagator::new(method, grid, &f.structure).unwrap();
            group.bench_with_input(BenchmarkId::new(method.as_str(), name), &p, |b, p| {
                b.iter(|| p.run(&f.rho0, &f.drive).unwrap())
            });
        }
        let ham = ModelHamiltonian::new(&f.spec).unwrap();
        let rho = f.spec.initial_density(&f.basis).unwrap();
        group.bench_function(BenchmarkId::new("oracle", name), |b| {
            b.iter(|| integrate_von_neumann(&ham, &rho, &grid).unwrap())
        });
        for (label, policy) in [
            ("circuit_exact", ShotPolicy::Exact),
            (
                "circuit_shots",
                ShotPolicy::Shots {
                    count: 16384,
                    seed: 1,
                },
            ),
        ] {
            group.bench_function(BenchmarkId::new(label, name), |b| {
                b.iter(|| {
                    let plan = build_plan(&f.rho0, &f.drive, &f.structure, &grid, policy).unwrap();
                    execute(&plan).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, propagators);
criterion_main!(benches);
