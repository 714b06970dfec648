use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use driftev::discretize::assemble_with;
use driftev::par::Exec;
use driftev::{build_grid, Coefficient, Interval, KernelSpec, Method, ProblemSpec, SolverConfig};

fn problem() -> ProblemSpec {
    ProblemSpec::new(
        Interval::new(0.0, 8.0).unwrap(),
        KernelSpec::constant_band(1.0, 1.0),
        Coefficient::Constant(0.5),
        Coefficient::Constant(0.0),
    )
    .unwrap()
}

const EXECS: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn assembly(c: &mut Criterion) {
    let p = problem();
    let mut g = c.benchmark_group("assemble");
    for n in [401, 1601] {
        let grid = build_grid(p.domain, n).unwrap();
        for (name, exec) in EXECS {
            g.bench_with_input(BenchmarkId::new(name, n), &grid, |b, grid| {
                b.iter(|| assemble_with(black_box(&p), grid, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let p = problem();
    let mut g = c.benchmark_group("matvec");
    for n in [401, 1601] {
        let op = assemble_with(&p, &build_grid(p.domain, n).unwrap(), Exec::Sequential).unwrap();
        let m = op.matrix();
        let x = vec![1.0; m.dim()];
        let mut y = vec![0.0; m.dim()];
        for (name, exec) in EXECS {
            g.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| m.matvec_into(exec, black_box(&x), &mut y).unwrap())
            });
        }
    }
    g.finish();
}

fn perron(c: &mut Criterion) {
    let p = problem();
    let op = assemble_with(&p, &build_grid(p.domain, 801).unwrap(), Exec::Sequential).unwrap();
    let mut g = c.benchmark_group("perron");
    g.sample_size(10);
    for (name, exec) in EXECS {
        let cfg = SolverConfig {
            exec,
            method: Method::Power,
            ..SolverConfig::with_tol(1e-8)
        };
        g.bench_function(name, |b| {
            b.iter(|| driftev::perron(black_box(&op), &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, matvec, perron);
criterion_main!(benches);
