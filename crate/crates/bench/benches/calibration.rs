use criterion::{criterion_group, criterion_main, Criterion};
use svcal::calibration::{calibrate_tenor, TenorRules};
use svcal::{CalibrationOptions, Conventions};
use svcal_bench::quote_3m;

fn tenor(c: &mut Criterion) {
    let (q, s) = quote_3m();
    let rules = TenorRules::default();
    let conv = Conventions::default();
    let opts = CalibrationOptions::default();
    c.bench_function("calibrate_tenor_3m", |b| {
        b.iter(|| calibrate_tenor(&q, &s, &rules, &conv, &opts).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = tenor
}
criterion_main!(benches);
