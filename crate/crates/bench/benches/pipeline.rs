use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sqmem_bench::{default_setup, SAMPLE_RATE};
use sqmem_core::analysis::{Method1Config, ModeFunction, ModeProjector, WindowPlan};
use sqmem_core::rng::{normals, Domain};
use sqmem_core::spectra::Transfer;
use sqmem_core::synth::{build_sequence_operator, Scenario};

fn synthesis(c: &mut Criterion) {
    let setup = default_setup();
    let op = build_sequence_operator(&setup, Scenario::StoreRetrieve, 0.0).unwrap();
    let w = normals(1, Domain::Optical, 0, op.len());
    c.bench_function("operator build (store/retrieve)", |b| {
        b.iter(|| build_sequence_operator(black_box(&setup), Scenario::StoreRetrieve, 0.0).unwrap())
    });
    c.bench_function("sequence synthesis (2200 samples)", |b| b.iter(|| op.apply(black_box(&w))));
}

fn estimators(c: &mut Criterion) {
    let n = 2200;
    let x = normals(2, Domain::Optical, 0, n);
    let plan = WindowPlan::new(SAMPLE_RATE, n, &Method1Config::default()).unwrap();
    c.bench_function("window band powers", |b| b.iter(|| plan.window_powers(black_box(&x))));
    let projector = ModeProjector::new(&ModeFunction::new(250e-9, 3e-6, 750e-9), SAMPLE_RATE, -1.48e-6, n).unwrap();
    c.bench_function("mode projection", |b| b.iter(|| projector.project(black_box(&x))));
}

fn medium(c: &mut Criterion) {
    let setup = default_setup();
    let freqs: Vec<f64> = (0..1024).map(|k| k as f64 * 1e4).collect();
    c.bench_function("EIT transfer (1024 points)", |b| {
        b.iter(|| freqs.iter().map(|&f| setup.medium.response(black_box(f)).re).sum::<f64>())
    });
}

criterion_group!(benches, synthesis, estimators, medium);
criterion_main!(benches);
