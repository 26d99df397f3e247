use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use foxpal::coloring::{determinant, solve};
use foxpal::corpus::lookup;
use foxpal::rules::{audit_tables, soundness};
use foxpal::{eliminate_all, verify_report, Modulus};
use foxpal_bench::elimination_cases;

fn linear_algebra(c: &mut Criterion) {
    let d = lookup("T(2,13)").unwrap().diagram();
    c.bench_function("determinant T(2,13)", |b| b.iter(|| determinant(black_box(&d))));
    let m = Modulus::new(13).unwrap();
    c.bench_function("solve T(2,13) p=13", |b| b.iter(|| solve(black_box(&d), m)));
}

fn elimination(c: &mut Criterion) {
    let mut g = c.benchmark_group("eliminate_all");
    g.sample_size(10);
    for (name, d, col) in elimination_cases() {
        g.bench_with_input(BenchmarkId::from_parameter(&name), &(d, col), |b, (d, col)| {
            b.iter(|| eliminate_all(d, col).unwrap())
        });
    }
    g.finish();
}

fn verification(c: &mut Criterion) {
    let (_, d, col) = elimination_cases().remove(0);
    let rep = eliminate_all(&d, &col).unwrap();
    let dj = d.to_json();
    c.bench_function("verify_report T(2,11)", |b| b.iter(|| verify_report(&dj, &col, black_box(&rep))));
}

fn audit(c: &mut Criterion) {
    c.bench_function("audit_tables p=101", |b| b.iter(|| audit_tables(black_box(101)).unwrap()));
    c.bench_function("soundness p=101", |b| b.iter(|| soundness(black_box(101))));
}

criterion_group!(benches, linear_algebra, elimination, verification, audit);
criterion_main!(benches);
