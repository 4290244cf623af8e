use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use priceflow_core::certify::{certify_series, estimate_constants, Constants};
use priceflow_core::dual::num_oracle;
use priceflow_core::engine::{run, DelayModel, EngineConfig};
use priceflow_core::model::{fixtures::chain3, validate_network};
use priceflow_core::spectra::{charpoly_direct, charpoly_schur, numeric_eigenvalues};

fn engine(c: &mut Criterion) {
    let net = validate_network(&chain3()).unwrap();
    let sync = EngineConfig::synchronous(0.01, 10_000);
    let delayed = EngineConfig {
        gamma: 0.01,
        t0: 5,
        steps: 10_000,
        seed: 42,
        delay_model: DelayModel::Uniform,
    };
    c.bench_function("run chain t0=0 10k", |b| b.iter(|| run(&net, black_box(&sync), &[1.0; 3]).unwrap()));
    c.bench_function("run chain t0=5 10k", |b| b.iter(|| run(&net, black_box(&delayed), &[1.0; 3]).unwrap()));
    c.bench_function("oracle chain", |b| b.iter(|| num_oracle(black_box(&net)).unwrap()));
}

fn certify(c: &mut Criterion) {
    let net = validate_network(&chain3()).unwrap();
    let cfg = EngineConfig {
        gamma: 0.01,
        t0: 3,
        steps: 10_000,
        seed: 42,
        delay_model: DelayModel::Uniform,
    };
    let trace = run(&net, &cfg, &[1.0; 3]).unwrap();
    let d = trace.dual_series();
    let pis = trace.pi_norm_sq_series();
    c.bench_function("fit constants 10k", |b| {
        b.iter(|| estimate_constants(black_box(&d), black_box(&pis), 3, 0.01).unwrap())
    });
    let k = Constants::new(1.0, 0.5, 3, 0.01).unwrap();
    c.bench_function("certify series 10k", |b| {
        b.iter(|| certify_series(black_box(&d), black_box(&pis), &k, 1e-9).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    c.bench_function("charpoly direct n=64", |b| b.iter(|| charpoly_direct(64, black_box(0.7)).unwrap()));
    c.bench_function("charpoly schur n=64", |b| b.iter(|| charpoly_schur(64, black_box(0.7)).unwrap()));
    c.bench_function("numeric eigenvalues n=64", |b| b.iter(|| numeric_eigenvalues(black_box(64)).unwrap()));
}

criterion_group!(benches, engine, certify, spectra);
criterion_main!(benches);
