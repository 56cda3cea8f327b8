//! Data-parallel kernels under a one-thread pool versus the default pool.
//!
//! Build with `--no-default-features` to bench the purely sequential code path.

use std::f64::consts::{FRAC_PI_2, PI};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qwalk_core::estimation::{monte_carlo, ExperimentDesign};
use qwalk_core::grid::{grid_scan, GridSpec, Quantity};
use qwalk_core::par;
use qwalk_core::walk::{run, WalkConfig};
use qwalk_core::{BlochState, Boundary};

fn oracle_batch() -> f64 {
    let config = WalkConfig::new(0.5, 2, 2000).unwrap();
    par::map_range(16, |i| {
        let s = BlochState::new(PI * i as f64 / 15.0, 0.7).unwrap();
        run(&config, &s).unwrap().escape_estimate
    })
    .into_iter()
    .sum()
}

fn eta_grid() -> usize {
    let spec = GridSpec::new(Quantity::EtaBeta, Boundary::Finite(2), 120, 240);
    grid_scan(&spec).unwrap().cells().len()
}

fn estimation_study() -> f64 {
    let design = ExperimentDesign::new(vec![Boundary::Finite(1), Boundary::Finite(2)], 100_000, 1).unwrap();
    let truth = BlochState::new(FRAC_PI_2, FRAC_PI_2).unwrap();
    monte_carlo(&truth, &design, 100).unwrap().log_likelihood_at_max
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let n = default.current_num_threads();
    vec![("single".into(), single), (format!("default-{n}"), default)]
}

type Kernel = (&'static str, fn() -> f64);

fn kernels() -> [Kernel; 3] {
    [
        ("oracle_batch", oracle_batch),
        ("eta_grid_120x240", || eta_grid() as f64),
        ("monte_carlo_r100", estimation_study),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let pools = pools();
    for (name, kernel) in kernels() {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        for (label, pool) in &pools {
            group.bench_function(BenchmarkId::from_parameter(label), |b| {
                b.iter(|| pool.install(|| black_box(kernel())))
            });
        }
        group.finish();
    }
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    for (name, kernel) in kernels() {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        group.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(|| black_box(kernel())));
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
