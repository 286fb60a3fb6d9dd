use std::hint::black_box;
use std::sync::Arc;

use capflow_core::flow::{flow_rhs_divergence, make_initial_condition, FlowState};
use capflow_core::{
    compute_area, compute_volume, flow_rhs, minkowski_residuals, step, FlowConfig, GridMode, HemisphereGrid,
    InitialCondition, RadialField,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn zonal() -> InitialCondition {
    InitialCondition::Zonal {
        gamma0: 0.3,
        amplitude: 0.15,
        k: 1,
    }
}

fn field(mode: GridMode, nphi: usize) -> RadialField {
    let grid = match mode {
        GridMode::Axisymmetric => HemisphereGrid::axisymmetric(2, nphi),
        GridMode::Full2d => HemisphereGrid::full2d(nphi, 2 * nphi),
    };
    make_initial_condition(&zonal(), Arc::new(grid.unwrap())).unwrap()
}

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_rhs");
    for (mode, nphi) in [
        (GridMode::Axisymmetric, 128),
        (GridMode::Axisymmetric, 1024),
        (GridMode::Full2d, 32),
        (GridMode::Full2d, 64),
    ] {
        let f = field(mode, nphi);
        group.bench_with_input(BenchmarkId::new(mode.as_str(), nphi), &f, |b, f| {
            b.iter(|| flow_rhs(black_box(f)))
        });
    }
    group.finish();

    let f = field(GridMode::Axisymmetric, 128);
    c.bench_function("flow_rhs_divergence/axisymmetric/128", |b| {
        b.iter(|| flow_rhs_divergence(black_box(&f)))
    });
}

fn stepping(c: &mut Criterion) {
    let config = FlowConfig::new(2, GridMode::Axisymmetric, 128, zonal());
    let state = FlowState::new(field(GridMode::Axisymmetric, 128));
    c.bench_function("step/axisymmetric/128", |b| {
        b.iter_batched(
            || state.clone(),
            |s| step(s, &config).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

fn functionals(c: &mut Criterion) {
    let f = field(GridMode::Axisymmetric, 128);
    c.bench_function("compute_volume/axisymmetric/128", |b| {
        b.iter(|| compute_volume(black_box(&f)).unwrap())
    });
    c.bench_function("compute_area/axisymmetric/128", |b| {
        b.iter(|| compute_area(black_box(&f)))
    });
    c.bench_function("minkowski_residuals/axisymmetric/128", |b| {
        b.iter(|| minkowski_residuals(black_box(&f)).unwrap())
    });
}

criterion_group!(benches, rhs, stepping, functionals);
criterion_main!(benches);
