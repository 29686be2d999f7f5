use std::hint::black_box;

use bisbs_core::{
    atlas, backward_orbit, classify, forward_conjugation, forward_orbit, BackwardOptions,
    Complex64, Grid, Model, ModelPoint, SelfMap,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn iteration(c: &mut Criterion) {
    let m = atlas("iib_2").unwrap().map;
    let z0 = ModelPoint::half_plane(Complex64::new(0.5, 2.0)).unwrap();
    c.bench_function("forward_orbit iib_2 10^4", |b| {
        b.iter(|| forward_orbit(&m, black_box(&z0), 10_000).unwrap())
    });

    let w0 = ModelPoint::half_plane(Complex64::new(0.0, 1.0).sqrt()).unwrap();
    let opts = BackwardOptions::default();
    c.bench_function("backward_orbit iib_2 10^4", |b| {
        b.iter(|| backward_orbit(&m, black_box(&w0), 10_000, &opts).unwrap())
    });

    // Wrapped without its inverse so every step goes through Newton.
    let dilation = bisbs_core::parse_map("disk-dilation:2").unwrap();
    let d = SelfMap::user("dilation-newton", Model::Disk, move |z| dilation.eval(z));
    let d0 = ModelPoint::disk(Complex64::new(0.0, 0.0)).unwrap();
    c.bench_function("backward_orbit disk-dilation newton 20", |b| {
        b.iter(|| backward_orbit(&d, black_box(&d0), 20, &opts).unwrap())
    });
}

fn fields(c: &mut Criterion) {
    let mut group = c.benchmark_group("fields");
    group.sample_size(10);
    let m = atlas("iib_1").unwrap().map;
    let grid = Grid::new(-1.0, 1.0, 0.5, 1.5, 1.0 / 8.0).unwrap();
    let z0 = ModelPoint::half_plane(Complex64::new(0.0, 1.0)).unwrap();
    group.bench_function("forward_conjugation iib_1 depth 1024", |b| {
        b.iter(|| forward_conjugation(&m, &z0, 1024, black_box(&grid)).unwrap())
    });
    group.bench_function("classify ia_1", |b| {
        b.iter(|| classify(black_box(&atlas("ia_1").unwrap().map)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, iteration, fields);
criterion_main!(benches);
