//! Throughput of the data-parallel sample sweeps (the hypothesis
//! harness's scaling and cone checks), with a single-thread rayon pool
//! as the sequential baseline when the `parallel` feature is on. Build
//! with `--no-default-features` to benchmark the plain sequential code
//! path instead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use pohozaev::grid::symmetrize_to_same_grid;
use pohozaev::hypotheses::{check_cone, check_scalings};
use pohozaev::sampler::Sampler;
use pohozaev::variational::DilationAction;
use pohozaev::{build_family, ProblemInstance};

fn scaling_sweep(n_samples: usize) -> usize {
    let inst = ProblemInstance::fractional_1d(vec![0.25, 0.4]);
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let mut sampler = Sampler::new(17);
    check_scalings(&fam, &DilationAction, &grid, &mut sampler, n_samples)
        .unwrap()
        .len()
}

fn cone_sweep(n_samples: usize) -> usize {
    let inst = ProblemInstance::classical_cubic();
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let mut sampler = Sampler::new(23);
    check_cone(&fam, &symmetrize_to_same_grid, &grid, &mut sampler, n_samples)
        .unwrap()
        .len()
}

fn bench_sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("scaling_sweep_48");
    group.sample_size(20);
    group.bench_function("default_pool", |b| {
        b.iter(|| black_box(scaling_sweep(black_box(48))))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("single_thread_pool", |b| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        b.iter(|| pool.install(|| black_box(scaling_sweep(black_box(48)))))
    });
    group.finish();

    let mut group = c.benchmark_group("cone_sweep_24");
    group.sample_size(20);
    group.bench_function("default_pool", |b| {
        b.iter(|| black_box(cone_sweep(black_box(24))))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("single_thread_pool", |b| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        b.iter(|| pool.install(|| black_box(cone_sweep(black_box(24)))))
    });
    group.finish();
}

criterion_group!(benches, bench_sweeps);
criterion_main!(benches);
