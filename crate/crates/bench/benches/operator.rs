use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use cutdg::diagnostics::project;
use cutdg::dod::StabilizedOperator;
use cutdg_bench::rotated_problem;

fn apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply");
    for r in [1usize, 2, 3] {
        let p = rotated_problem(40, r);
        let u = project(&p.disc, &p.exact, 0.0);
        let mut out = vec![0.0; u.coeffs.len()];
        g.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, _| b.iter(|| p.operator.rhs(black_box(&u.coeffs), &mut out)));
    }
    g.finish();
}

fn assemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    for r in [1usize, 2] {
        let p = rotated_problem(40, r);
        g.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, _| {
            b.iter(|| StabilizedOperator::new(&p.disc, p.operator.dissipation, p.operator.stabilizers.clone()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, apply, assemble);
criterion_main!(benches);
