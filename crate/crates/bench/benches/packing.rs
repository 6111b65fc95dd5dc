use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use frakt_bench::{cantor, quarter_half};
use frakt_core::rational::{pow_i, rational};
use frakt_core::{fibonacci_table, greedy_count, DeltaTable, SweepOptions};

fn bench_greedy_sweep(c: &mut Criterion) {
    let sys = quarter_half();
    let opts = SweepOptions::for_system(&sys);
    let t = pow_i(&rational(2, 1), 3 - 16); // count = F_16 = 987
    c.bench_function("greedy_count_f16", |b| {
        b.iter(|| greedy_count(black_box(&sys), black_box(&t), &opts).unwrap())
    });

    let c3 = cantor();
    let t3 = pow_i(&rational(1, 3), 10); // count = 2^11
    c.bench_function("greedy_count_cantor_2048", |b| {
        b.iter(|| greedy_count(black_box(&c3), black_box(&t3), &opts).unwrap())
    });
}

fn bench_delta_table(c: &mut Criterion) {
    let sys = quarter_half();
    c.bench_function("delta_table_987", |b| {
        b.iter(|| DeltaTable::build(black_box(&sys), 987).unwrap())
    });
}

fn bench_fibonacci_table(c: &mut Criterion) {
    c.bench_function("fibonacci_table_12", |b| {
        b.iter(|| fibonacci_table(black_box(12)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_greedy_sweep,
    bench_delta_table,
    bench_fibonacci_table
);
criterion_main!(benches);
