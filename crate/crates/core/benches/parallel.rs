//! Rayon pool against single-threaded execution on the data-parallel kernels.
//!
//! With default features each workload runs twice: on the global pool and
//! inside a one-thread pool. Build with `--no-default-features` to time the
//! sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fsco::config::{FscoConfig, Preset};
use fsco::experiment::{run_experiment, RunMode};
use fsco::nn::{finite_diff_check, Activation, Network};
use fsco::par;
use fsco::rng::normal_matrix;
use fsco::tensor::matmul_nt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
fn variants() -> Vec<(String, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![(format!("rayon-{}", par::threads()), None), ("single-thread".into(), Some(one))]
}

#[cfg(not(feature = "parallel"))]
fn variants() -> Vec<(String, Option<()>)> {
    vec![("sequential".into(), None)]
}

#[cfg(feature = "parallel")]
fn within<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn within<R>(_: &Option<()>, f: impl FnOnce() -> R) -> R {
    f()
}

fn matmul(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = normal_matrix(128, 784, &mut rng);
    let b = normal_matrix(256, 784, &mut rng);
    let mut group = c.benchmark_group("matmul_128x784x256");
    for (name, pool) in variants() {
        group.bench_function(BenchmarkId::from_parameter(&name), |bench| {
            bench.iter(|| within(&pool, || matmul_nt(black_box(&a), black_box(&b)).unwrap()))
        });
    }
    group.finish();
}

fn gradcheck(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Network::mlp(&[8, 32, 32, 4], &[Activation::Tanh, Activation::Sigmoid, Activation::Identity], &mut rng)
        .unwrap();
    let x = normal_matrix(16, 8, &mut rng);
    let y = normal_matrix(16, 4, &mut rng);
    let mut group = c.benchmark_group("finite_diff_1476_params");
    group.sample_size(10);
    for (name, pool) in variants() {
        group.bench_function(BenchmarkId::from_parameter(&name), |bench| {
            bench.iter(|| within(&pool, || finite_diff_check(&net, &x, &y, 1e-5).unwrap()))
        });
    }
    group.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let mut cfg = FscoConfig::preset(Preset::Synthetic);
    cfg.cycles = Some(50);
    cfg.coverage_samples = 500;
    let seeds = [1u64, 2, 3, 4];
    let mut group = c.benchmark_group("sweep_4_seeds_50_cycles");
    group.sample_size(10);
    for (name, pool) in variants() {
        group.bench_function(BenchmarkId::from_parameter(&name), |bench| {
            bench.iter(|| {
                within(&pool, || {
                    par::map_indexed(seeds.len(), |i| {
                        let cfg = FscoConfig { seed: seeds[i], ..cfg.clone() };
                        run_experiment(&cfg, RunMode::Fsco, None).unwrap().records.len()
                    })
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, matmul, gradcheck, seed_sweep);
criterion_main!(benches);
