//! Compare the data-parallel core on a 1-thread pool vs an N-thread pool
//! (N = available parallelism), on the two workloads that dominate real
//! runs: exact rational matrix multiplication and the genus-2 bar + Hopf
//! pipeline. `with_pool_size` pins every internal `par_map` to the given
//! pool, so both measurements exercise the same code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use barwitt::bar::{build_bar, h0_hopf};
use barwitt::cdga::Augmentation;
use barwitt::fixtures;
use barwitt::matrix::Mat;
use barwitt::par::with_pool_size;
use num::BigRational;

fn dense_matrix(n: usize, seed: u64) -> Mat {
    // small deterministic LCG; entries are genuine fractions so that the
    // BigRational arithmetic (not allocation of zeros) dominates
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) % 2000) as i64 - 1000
    };
    let mut m = Mat::zero(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = BigRational::new(next().into(), (next().abs() + 1).into());
        }
    }
    m
}

fn pool_sizes() -> Vec<usize> {
    // always produce both series; on a single-core host the N-thread run
    // measures pure pool overhead
    let n = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).max(2);
    vec![1, n]
}

fn bench_mat_mul(c: &mut Criterion) {
    let mut group = c.benchmark_group("mat_mul_rational");
    group.sample_size(10);
    let a = dense_matrix(48, 1);
    let b = dense_matrix(48, 2);
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::new("threads", threads), &threads, |bench, &t| {
            bench.iter(|| with_pool_size(t, || a.mul(&b)));
        });
    }
    group.finish();
}

fn bench_genus2_hopf(c: &mut Criterion) {
    let mut group = c.benchmark_group("genus2_bar_hopf_level2");
    group.sample_size(10);
    let a = fixtures::genus2();
    let aug = Augmentation::connected(&a).unwrap();
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::new("threads", threads), &threads, |bench, &t| {
            bench.iter(|| {
                with_pool_size(t, || {
                    let b = build_bar(&a, &aug, 2).unwrap();
                    h0_hopf(&b).unwrap().b_dims
                })
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_mat_mul, bench_genus2_hopf);
criterion_main!(benches);
