use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gpargmax::simulate::{build_lattice, mc_argmax, McOptions};
use gpargmax::{CovSpec, Execution, MeanSpec, MixtureAtom, RngPolicy};
use std::hint::black_box;

fn chernoff(c: &mut Criterion) {
    let lat = build_lattice(1, 4.0, 50).unwrap();
    let k = CovSpec::ScaledBm1d { sigma2: 1.0 };
    let m = MeanSpec::PowerMean { c: 1.0, gamma: 2.0 };
    let mut group = c.benchmark_group("mc_argmax_d1");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{execution:?}")), &execution, |b, &execution| {
            let opts = McOptions { execution, ..Default::default() };
            b.iter(|| mc_argmax(&k, &m, &lat, black_box(2_000), RngPolicy::new(1), opts).unwrap())
        });
    }
    group.finish();
}

fn maxscore_2d(c: &mut Criterion) {
    let lat = build_lattice(2, 3.0, 12).unwrap();
    let atoms = vec![
        MixtureAtom::new(0.5, vec![1.0, 0.0], 0.4),
        MixtureAtom::new(0.3, vec![0.0, 1.0], 0.3),
        MixtureAtom::new(0.2, vec![1.0, 1.0], 0.2),
    ];
    let k = CovSpec::MixtureBm { atoms };
    let m = MeanSpec::SeparableQuadratic { kappa: vec![0.2, 0.15] };
    let mut group = c.benchmark_group("mc_argmax_d2");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{execution:?}")), &execution, |b, &execution| {
            let opts = McOptions { execution, ..Default::default() };
            b.iter(|| mc_argmax(&k, &m, &lat, black_box(200), RngPolicy::new(1), opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chernoff, maxscore_2d);
criterion_main!(benches);
