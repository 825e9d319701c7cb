use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nbrig::fit::fit_nbrig_mle;
use nbrig::{CountData, Execution, FitOptions, NbrigParams, PmfTable};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn params() -> NbrigParams {
    NbrigParams::new(3.3999, 61.4973, 35.8961).unwrap()
}

fn sampling(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("sample_1e6");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(p.sample_with(1_000_000, 7, exec).unwrap()))
        });
    }
    g.finish();
}

fn pmf_table(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("pmf_table_500");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(PmfTable::new(p, 500, exec).unwrap()))
        });
    }
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let data = CountData::from_pairs([
        (0, 103_704),
        (1, 14_075),
        (2, 1_766),
        (3, 255),
        (4, 45),
        (5, 6),
        (6, 2),
    ])
    .unwrap();
    let mut g = c.benchmark_group("fit_nbrig");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = FitOptions {
            exec,
            ..FitOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(fit_nbrig_mle(&data, &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, pmf_table, fitting);
criterion_main!(benches);
