//! Sequential against data-parallel execution on the hot kernels.

use std::hint::black_box;

use blowup::driver::{length_scale, RefinementEvent};
use blowup::exponents::{estimate_tc, TcSearch};
use blowup::integrator::{step, Scheme};
use blowup::renorm::RenormSnapshot;
use blowup::{Exec, InitialCondition, Level, ModelSpec, Spectral, SpectralField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn gaussian(n: usize) -> SpectralField {
    InitialCondition::Gaussian { amplitude: 1.35 }.field(n)
}

fn nls_terms(c: &mut Criterion) {
    let model = ModelSpec::nls(3.0).unwrap();
    let mut g = c.benchmark_group("nls_terms");
    g.sample_size(20);
    for n in [1296, 5184] {
        let part = model.partition(n).unwrap();
        let u = gaussian(n);
        for (name, exec) in STRATEGIES {
            let sp = Spectral::new(exec);
            g.bench_with_input(BenchmarkId::new(format!("galerkin/{name}"), n), &u, |b, u| {
                b.iter(|| model.term(&sp, 0, black_box(u), 0.1, &part, Level::Full))
            });
            g.bench_with_input(BenchmarkId::new(format!("tmodel/{name}"), n), &u, |b, u| {
                b.iter(|| model.term(&sp, 1, black_box(u), 0.1, &part, Level::Full))
            });
        }
    }
    g.finish();
}

fn burgers_step_and_monitor(c: &mut Criterion) {
    let model = ModelSpec::burgers();
    let mut g = c.benchmark_group("burgers");
    g.sample_size(20);
    for n in [2048, 8192] {
        let part = model.partition(n).unwrap();
        let u = InitialCondition::Sine.field(n).with_time(0.5);
        for (name, exec) in STRATEGIES {
            let sp = Spectral::new(exec);
            g.bench_with_input(BenchmarkId::new(format!("rk4_step/{name}"), n), &u, |b, u| {
                b.iter(|| step(&sp, black_box(u), &model, &part, 1e-4, Scheme::Rk4).unwrap())
            });
            g.bench_with_input(BenchmarkId::new(format!("monitor/{name}"), n), &u, |b, u| {
                b.iter(|| RenormSnapshot::take(&sp, black_box(u), &model, &part))
            });
        }
    }
    g.finish();
}

fn tc_scan(c: &mut Criterion) {
    let events: Vec<RefinementEvent> = (0..12)
        .map(|i| {
            let resolution = 32usize << i;
            let l = length_scale(resolution);
            RefinementEvent {
                n: i + 1,
                time: 1.0 - l.powf(0.67),
                resolution,
                scale: l,
                xi: l.powf(-0.67),
                a1: [1.0, l.powf(0.74)],
                det_b: 0.0,
                det_a: 0.0,
                e1: 0.0,
                e2: 0.0,
            }
        })
        .collect();
    let last = events.last().unwrap().time;
    let mut g = c.benchmark_group("tc_scan");
    for points in [400, 40_000] {
        let search = TcSearch {
            grid_points: points,
            ..TcSearch::window(last, last + 0.5)
        };
        for (name, exec) in STRATEGIES {
            g.bench_with_input(BenchmarkId::new(name, points), &search, |b, s| {
                b.iter(|| estimate_tc(black_box(&events), s, exec).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, nls_terms, burgers_step_and_monitor, tc_scan);
criterion_main!(benches);
