use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use odfc_core::{
    eps_from_alpha, make_system, period_map_derivative, simulate, stability_raster, tau_star,
    ControlParams, MethodKind, Plant, RasterMode, SimConfig,
};

fn design(c: &mut Criterion) {
    c.bench_function("eps_from_alpha", |b| {
        b.iter(|| {
            eps_from_alpha(
                MethodKind::States,
                black_box(2.0),
                black_box(-0.4),
                black_box(0.2),
            )
        })
    });
    c.bench_function("tau_star/states", |b| {
        b.iter(|| tau_star(MethodKind::States, black_box(2.0), black_box(-0.4)))
    });
}

fn integrate(c: &mut Criterion) {
    let spec = make_system(Plant::CubicMinus { slope: 2.0 }, 0.0).unwrap();
    let mut group = c.benchmark_group("simulate_10_periods");
    for method in MethodKind::ALL {
        let p = ControlParams::from_alpha(method, 2.0, -0.4, 0.2).unwrap();
        group.bench_function(method.as_str(), |b| {
            b.iter(|| simulate(&spec, &p, &SimConfig::new(black_box(0.5), 10)))
        });
    }
    group.finish();
    let p = ControlParams::from_alpha(MethodKind::Velocity, 2.0, -0.4, 0.2).unwrap();
    c.bench_function("period_map_derivative", |b| {
        b.iter(|| period_map_derivative(&spec, &p, black_box(1e-5), 256))
    });
}

fn raster(c: &mut Criterion) {
    let mut group = c.benchmark_group("raster");
    group.sample_size(10);
    group.bench_function("velocity_32x32_both", |b| {
        b.iter(|| {
            stability_raster(
                MethodKind::Velocity,
                2.0,
                (-25.0, 0.0),
                (0.0, 2.0),
                (32, 32),
                RasterMode::Both,
            )
        })
    });
    group.finish();
}

criterion_group!(benches, design, integrate, raster);
criterion_main!(benches);
