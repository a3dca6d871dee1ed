//! Decode-path benchmarks: the hyperplane dynamic program against naive
//! enumeration, the block decoder, and the affine-form dynamic program.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ldp_freq_bench::{hpg_fixture, pg_fixture, pirappor_fixture};
use ldp_freq_core::pg::{subset_sums_dp, subset_sums_naive};

fn decode_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode_k1000_eps_ln5");
    group.sample_size(20);

    let (pg, pg_counts) = pg_fixture(5f64.ln(), 1_000, 10_000, 42);
    group.bench_function("pg_dp", |b| {
        b.iter(|| black_box(subset_sums_dp(pg.geometry(), pg_counts.counts())))
    });
    group.bench_function("pg_naive", |b| {
        b.iter(|| black_box(subset_sums_naive(pg.geometry(), pg_counts.counts())))
    });

    let (hpg, hpg_counts) = hpg_fixture(5f64.ln(), 1_000, 2, 10_000, 42);
    group.bench_function("hpg_q2", |b| {
        b.iter(|| black_box(hpg.decode(&hpg_counts).expect("decodes")))
    });

    let (pr, pr_counts) = pirappor_fixture(5f64.ln(), 1_000, 10_000, 42);
    group.bench_function("pirappor_dp", |b| {
        b.iter(|| black_box(pr.decode_dp(&pr_counts).expect("decodes")))
    });

    group.finish();
}

fn encode_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode_k22000_eps5");
    group.sample_size(20);

    let pg = ldp_freq_core::pg::PgParams::with_geometry(5.0, 22_000, 151, 3).expect("pins");
    let mut rng = ldp_freq_core::seeding::stream(&[7]);
    group.bench_function("pg", |b| {
        b.iter(|| black_box(pg.encode(black_box(17), &mut rng).expect("encodes")))
    });

    let hpg = ldp_freq_core::hpg::HpgParams::derive(5.0, 22_000, 5).expect("derives");
    group.bench_function("hpg_q5", |b| {
        b.iter(|| black_box(hpg.encode(black_box(17), &mut rng).expect("encodes")))
    });

    group.finish();
}

criterion_group!(benches, decode_benches, encode_benches);
criterion_main!(benches);
