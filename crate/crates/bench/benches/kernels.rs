use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use bet_bench::{null_bits, sine_samples};
use bet_core::{
    binary_expand, contingency, empirical_copula, enumerate_cross, fwht, max_bet,
    symmetry_direct, symmetry_from_table, two_stage_bet, Provenance, PvalueMethod, TiePolicy,
};

fn bench_fwht(c: &mut Criterion) {
    let mut group = c.benchmark_group("fwht");
    for k in [8u32, 12, 16] {
        let len = 1usize << k;
        group.throughput(Throughput::Elements(len as u64));
        let input: Vec<i64> = (0..len as i64).map(|i| (i * 37) % 101 - 50).collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &input, |b, input| {
            b.iter(|| {
                let mut v = input.clone();
                fwht(&mut v).unwrap();
                black_box(v)
            })
        });
    }
    group.finish();
}

fn bench_symmetry_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("symmetry_direct");
    for n in [1_000usize, 100_000] {
        let (u, v) = null_bits(n, 4, 7);
        let indices = enumerate_cross(4, 4);
        group.throughput(Throughput::Elements((n * indices.len()) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let mut acc = 0i64;
                for idx in &indices {
                    acc += symmetry_direct(&u, &v, idx).unwrap();
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn bench_transform_route(c: &mut Criterion) {
    let (u, v) = null_bits(100_000, 4, 11);
    c.bench_function("contingency_plus_fwht_n100k_d4", |b| {
        b.iter(|| {
            let t = contingency(&u, &v, 4, 4).unwrap();
            black_box(symmetry_from_table(&t))
        })
    });
}

fn bench_procedures(c: &mut Criterion) {
    let samples = sine_samples(128, 3);
    c.bench_function("two_stage_bet_n128_dmax4", |b| {
        b.iter(|| {
            let copula = empirical_copula(&samples, TiePolicy::Error).unwrap();
            let (u, v) = binary_expand(&copula, 4);
            black_box(
                two_stage_bet(&u, &v, 4, Provenance::EmpiricalRank, PvalueMethod::Exact).unwrap(),
            )
        })
    });
    let (u, v) = null_bits(128, 2, 5);
    c.bench_function("max_bet_n128_d2_normal", |b| {
        b.iter(|| {
            black_box(
                max_bet(
                    &u,
                    &v,
                    2,
                    2,
                    Provenance::EmpiricalRank,
                    PvalueMethod::NormalApprox { continuity: false },
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_fwht,
    bench_symmetry_kernel,
    bench_transform_route,
    bench_procedures
);
criterion_main!(benches);
