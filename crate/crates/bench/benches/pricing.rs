use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use svcal::pricing::cf_vanilla_prices;
use svcal::{CharacteristicFunction, OptionKind, OptionSpec, QuadratureConfig};
use svcal_bench::{heston, quote_3m};

fn cf(c: &mut Criterion) {
    let p = heston();
    c.bench_function("cf_heston", |b| {
        b.iter(|| p.cf(black_box(Complex64::new(3.0, -0.5)), black_box(0.25)))
    });
}

fn vanilla(c: &mut Criterion) {
    let p = heston();
    let (_, slice) = quote_3m();
    let cfg = QuadratureConfig::default();
    let one = [OptionSpec::new(1.0, slice.expiry, OptionKind::Call).unwrap()];
    c.bench_function("cf_vanilla_price", |b| {
        b.iter(|| cf_vanilla_prices(&p, black_box(&slice), &one, &cfg).unwrap())
    });
    let strip: Vec<OptionSpec> = (0..21)
        .map(|i| OptionSpec::new(0.8 + 0.02 * i as f64, slice.expiry, OptionKind::Call).unwrap())
        .collect();
    c.bench_function("cf_vanilla_prices_21_strikes", |b| {
        b.iter(|| cf_vanilla_prices(&p, black_box(&slice), &strip, &cfg).unwrap())
    });
}

criterion_group!(benches, cf, vanilla);
criterion_main!(benches);
