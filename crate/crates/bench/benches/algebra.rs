use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vnsim_core::liouville::{alpha_rhs, v_matrix};
use vnsim_core::{build_basis, build_structure_tensor, AlphaVector, FnDrive};

fn structure_constants(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_structure_tensor");
    for n_sites in 1..=4 {
        let basis = build_basis(n_sites).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_sites), &basis, |b, basis| {
            b.iter(|| build_structure_tensor(basis).unwrap())
        });
    }
    group.finish();
}

fn alpha_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_rhs");
    for n_sites in [1, 2, 3] {
        let st = build_structure_tensor(&build_basis(n_sites).unwrap()).unwrap();
        let n = st.dim();
        let alpha = AlphaVector::from_vec((0..n).map(|k| 0.01 * (k as f64).sin()).collect());
        let drive = FnDrive::new(n, |t, a| {
            a.iter_mut()
                .enumerate()
                .for_each(|(k, v)| *v = (t + k as f64).cos())
        });
        group.bench_function(BenchmarkId::new("v_matrix", n), |b| {
            b.iter(|| v_matrix(&alpha, &st).unwrap())
        });
        group.bench_function(BenchmarkId::new("solve", n), |b| {
            b.iter(|| alpha_rhs(0.3, &alpha, &drive, &st).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, structure_constants, alpha_solve);
criterion_main!(benches);
