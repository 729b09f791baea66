//! Data-parallel kernels on a one-thread pool against the default pool.
//! Build with `--no-default-features` to time the plain sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polarmoments::experiment_sim::{run_protocol, DetectorConfig};
use polarmoments::fock_state::named_state;
use polarmoments::moment_engine::{sphere_scan, GridSpec};
use polarmoments::tomography::{protocol_directions, ThirdOrderVariant};
use polarmoments::Manifold;
use rayon::ThreadPoolBuilder;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn scan(c: &mut Criterion) {
    let state = named_state("coherent4_tilted").unwrap();
    let grid = GridSpec::Icosphere { level: 4 };
    let mut group = c.benchmark_group("sphere_scan_order4_ico4");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| sphere_scan(&state, Manifold::Single(4), 4, grid).unwrap()))
        });
    }
    group.finish();
}

fn protocol(c: &mut Criterion) {
    let state = named_state("unpolarized2").unwrap();
    let plan = protocol_directions(2, ThirdOrderVariant::Tilted).unwrap();
    let cfg = DetectorConfig { runs: 8, ..DetectorConfig::preset("eff20").unwrap() };
    let mut group = c.benchmark_group("simulated_protocol");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| run_protocol(&state, &plan, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, scan, protocol);
criterion_main!(benches);
