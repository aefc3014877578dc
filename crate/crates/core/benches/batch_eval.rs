//! Batched cost evaluations (a swarm generation and a finite-difference
//! gradient) run sequentially and on the rayon pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rbmelt::adjoint::{AdjointSettings, CostWeights, DesiredState};
use rbmelt::exec::Execution;
use rbmelt::forward::{run_forward, ForwardProblem, NumericalSettings, PhysicalParams, RunOptions};
use rbmelt::optimize::{fd_gradient, pso_minimize, Basis, MeltObjective, PsoSettings};
use rbmelt::Grid;

fn small_objective() -> MeltObjective {
    let grid = Grid::new(32, 8, 4.0).unwrap();
    let numerics = NumericalSettings {
        dt: 1e-3,
        t_final: 0.02,
        h0: 0.1,
        ..Default::default()
    };
    let p = ForwardProblem::new(grid, PhysicalParams { ra: 1e3, ..Default::default() }, numerics).unwrap();
    let basis = Basis::TanhBasis;
    let target = run_forward(&p, &basis.wall(&grid, &[0.3, 2.0]).unwrap(), RunOptions::default()).unwrap();
    MeltObjective::new(
        p,
        basis,
        DesiredState::from_output(&target),
        CostWeights::default(),
        AdjointSettings::default(),
    )
    .unwrap()
}

fn batches(c: &mut Criterion) {
    let obj = small_objective();
    let mut g = c.benchmark_group("batch_eval");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        g.bench_function(BenchmarkId::new("fd_gradient", &name), |b| {
            b.iter(|| fd_gradient(&obj, &[0.1, 1.0], 1e-3, exec).unwrap())
        });
        let settings = PsoSettings {
            swarm_size: 16,
            max_evals: 32,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new("pso_two_generations", &name), |b| {
            b.iter(|| pso_minimize(&obj, &[(0.0, 1.0), (0.0, 4.0)], &settings, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, batches);
criterion_main!(benches);
