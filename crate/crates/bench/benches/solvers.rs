//! Criterion benchmarks for the hot paths: co-array construction, weight
//! solves, objective expansion, and the cutting-plane solver.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nestnull_core::beamforming::{solve_weights, NullingSpec, SolveOptions as BeamOptions};
use nestnull_core::coarray::{difference_coarray, ArrayGeometry};
use nestnull_core::harness::{generate_scenario, ExperimentConfig, SweepValues};
use nestnull_core::hetnet::Scenario;
use nestnull_core::optimizer::{
    build_linearized_program, solve_cutting_plane, solve_heuristic, CutLimits, SolveOptions,
};

fn bench_scenario(n_sbs: usize, n_users: usize) -> Scenario {
    let config = ExperimentConfig {
        n_sbs: SweepValues::One(n_sbs),
        n_users: SweepValues::One(n_users),
        // Room for the larger user populations benched here.
        dof_mbs: 100 + 3 * n_users,
        ..ExperimentConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    generate_scenario(&config, n_sbs, n_users, &mut rng).expect("feasible draw")
}

fn coarray_bench(c: &mut Criterion) {
    c.bench_function("difference_coarray nested(8,8)", |b| {
        let geometry = ArrayGeometry::nested(8, 8).unwrap();
        b.iter(|| difference_coarray(&geometry))
    });
}

fn beamforming_bench(c: &mut Criterion) {
    c.bench_function("solve_weights nested(3,3) 1+6 directions", |b| {
        let geometry = ArrayGeometry::nested(3, 3).unwrap();
        let spec = NullingSpec::new(vec![0.1], vec![-1.1, -0.7, -0.3, 0.45, 0.8, 1.2]).unwrap();
        let opts = BeamOptions::default();
        b.iter(|| solve_weights(&geometry, &spec, &opts).unwrap())
    });
}

fn expansion_bench(c: &mut Criterion) {
    let scenario = bench_scenario(4, 25);
    let opts = SolveOptions::default();
    c.bench_function("build_linearized_program K=25 J=4 order 3", |b| {
        b.iter(|| build_linearized_program(&scenario, &opts).unwrap())
    });
}

fn cutting_plane_bench(c: &mut Criterion) {
    let scenario = bench_scenario(4, 25);
    let opts = SolveOptions::default();
    let ip = build_linearized_program(&scenario, &opts).unwrap();
    c.bench_function("cutting_plane K=25 J=4", |b| {
        b.iter_batched(
            || ip.clone(),
            |ip| solve_cutting_plane(&ip, &CutLimits::default()).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn heuristic_bench(c: &mut Criterion) {
    let scenario = bench_scenario(8, 120);
    c.bench_function("heuristic K=120 J=8", |b| {
        b.iter(|| solve_heuristic(&scenario).unwrap())
    });
}

criterion_group!(
    benches,
    coarray_bench,
    beamforming_bench,
    expansion_bench,
    cutting_plane_bench,
    heuristic_bench
);
criterion_main!(benches);
