use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xyfisher::exec::Executor;
use xyfisher::scan::{self, Mode, ScanSpec};

fn spec(mode: Mode) -> ScanSpec {
    ScanSpec {
        j: "0.05:2:0.05".parse().unwrap(),
        d: "0:0.3:0.3".parse().unwrap(),
        ..ScanSpec::new(mode)
    }
}

fn bench_scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    for mode in [Mode::PairCurves, Mode::Multiparam] {
        let spec = spec(mode);
        for (label, exec) in [
            ("sequential", Executor::sequential()),
            ("parallel", Executor::default()),
        ] {
            group.bench_with_input(BenchmarkId::new(mode.name(), label), &spec, |b, spec| {
                b.iter(|| black_box(scan::run(spec, &exec).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_scans);
criterion_main!(benches);
