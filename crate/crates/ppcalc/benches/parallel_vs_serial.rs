//! Criterion benches comparing the rayon data-parallel batch paths against
//! their sequential twins: partition-sum moments, CRP batch sampling, the
//! weighted-restaurant batch, and the posterior simulation pipeline.

use criterion::{criterion_group, criterion_main, Criterion};
use ppcalc::base::BaseMeasure;
use ppcalc::eppf::{self, EppfSpec};
use ppcalc::levy::LevyIntensity;
use ppcalc::levycox::{self, IntensityModel, Kernel, StepFn};
use ppcalc::moments;
use ppcalc::wcr::{self, PdSeating};
use std::hint::black_box;

fn bench_partition_sums(c: &mut Criterion) {
    let li = LevyIntensity::gamma_process(BaseMeasure::uniform(0.0, 1.0, 1.5).unwrap()).unwrap();
    let mut group = c.benchmark_group("measure_moment_n10");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| moments::measure_moment(black_box(&li), moments::Region::All, 10).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| moments::measure_moment_seq(black_box(&li), moments::Region::All, 10).unwrap())
    });
    group.finish();
}

fn bench_crp_batch(c: &mut Criterion) {
    let spec = EppfSpec::two_param(0.5, 1.0).unwrap();
    let mut group = c.benchmark_group("crp_batch_50k_n8");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| eppf::sample_crp_batch(black_box(&spec), 8, 50_000, 7))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| eppf::sample_crp_batch_seq(black_box(&spec), 8, 50_000, 7))
    });
    group.finish();
}

fn bench_wcr_batch(c: &mut Criterion) {
    let seating = PdSeating::new(EppfSpec::ewens(1.0).unwrap());
    let mut group = c.benchmark_group("wcr_batch_20k_n6");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| wcr::sample_batch(black_box(&seating), 6, 20_000, 11).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| wcr::sample_batch_seq(black_box(&seating), 6, 20_000, 11).unwrap())
    });
    group.finish();
}

fn bench_posterior_fit(c: &mut Criterion) {
    let model = IntensityModel::new(
        Kernel::UniformWindow { width: 1.0 },
        LevyIntensity::gamma_process(BaseMeasure::uniform(0.0, 2.0, 1.0).unwrap()).unwrap(),
        StepFn::constant(1.0, 0.0, 3.0),
        (0.0, 3.0),
    )
    .unwrap();
    let fitted = model.fit(&[0.8, 1.1, 1.6]).unwrap();
    // warm the block-integral and grid caches so the bench measures draws
    let _ = levycox::fit_posterior(&fitted, 16, 1e-3, 3).unwrap();
    let mut group = c.benchmark_group("fit_posterior_2k_n3");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| levycox::fit_posterior(black_box(&fitted), 2_000, 1e-3, 3).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| levycox::fit_posterior_seq(black_box(&fitted), 2_000, 1e-3, 3).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_partition_sums,
    bench_crp_batch,
    bench_wcr_batch,
    bench_posterior_fit
);
criterion_main!(benches);
