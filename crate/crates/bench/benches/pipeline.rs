use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qzmetro_core::dynamics::{master_equation_coherence, simulate_ramsey, DephasingConvention};
use qzmetro_core::fitting::fit_ramsey_curve;
use qzmetro_core::metrology::{sensitivity_sweep, SweepMode};
use qzmetro_core::noise::{empirical_decoherence_with, PhaseMethod};
use qzmetro_core::{
    DecoherenceLaw, EnsembleConfig, NoiseModel, Parameterization, ProbeKind, ProbeSpec,
};

fn grid(stop: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| stop * i as f64 / (points - 1) as f64).collect()
}

fn analytic(c: &mut Criterion) {
    let model = NoiseModel::calibrated_default();
    let times = grid(1.5, 301);
    c.bench_function("decoherence_factor/301", |b| {
        b.iter(|| {
            times
                .iter()
                .map(|&t| model.decoherence_factor(black_box(t)).unwrap())
                .sum::<f64>()
        })
    });
    let law = DecoherenceLaw::Spectral(model.clone());
    let ns: Vec<usize> = (2..=7).collect();
    c.bench_function("sensitivity_sweep/n2-7", |b| {
        b.iter(|| sensitivity_sweep(&law, black_box(&ns), 10.0, 10.0, SweepMode::Optimal, None).unwrap())
    });
    c.bench_function("master_equation/n7", |b| {
        b.iter(|| {
            master_equation_coherence(&model, 7, 10.0, black_box(&times), DephasingConvention::Stochastic)
                .unwrap()
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let model = NoiseModel::calibrated_default();
    let times = grid(1.5, 301);
    let config = EnsembleConfig::new(20, 1000, 20230417, 7).unwrap();
    let probe = ProbeSpec::new(ProbeKind::Ghz, 7, 10.0).unwrap();

    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("ramsey_ghz/m20", |b| {
        b.iter(|| simulate_ramsey(&probe, &model, black_box(&config), &times).unwrap())
    });
    group.bench_function("gamma_hat_exact/m20", |b| {
        b.iter(|| empirical_decoherence_with(&model, black_box(&config), &times, PhaseMethod::Exact).unwrap())
    });
    // every time point gets its own slice grid, so keep this one short
    let coarse = grid(1.5, 31);
    group.bench_function("gamma_hat_sliced/m20_t31", |b| {
        b.iter(|| empirical_decoherence_with(&model, black_box(&config), &coarse, PhaseMethod::Sliced).unwrap())
    });
    group.finish();

    let curve = simulate_ramsey(&probe, &model, &config, &times).unwrap();
    c.bench_function("fit_ramsey_curve/jackknife", |b| {
        b.iter(|| fit_ramsey_curve(black_box(&curve), Parameterization::QuadraticGamma).unwrap())
    });
}

criterion_group!(benches, analytic, monte_carlo);
criterion_main!(benches);
