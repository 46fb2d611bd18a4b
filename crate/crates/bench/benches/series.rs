use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use uipt_core::enumeration::{boundary_counts_int, h_series};
use uipt_core::laws::{hull_volume_gf_closed, hull_volume_gf_iterate, hull_volume_pmf, layer_volume_gf};
use uipt_core::skeleton::phi_coeffs;
use uipt_core::{Series, Q};

fn ring_ops(c: &mut Criterion) {
    let mut g = c.benchmark_group("series_q");
    for order in [50usize, 100, 200] {
        let h: Series<Q> = h_series(order);
        let f = h.div_x().unwrap();
        g.bench_with_input(BenchmarkId::new("mul", order), &f, |b, f| {
            b.iter(|| black_box(f.mul(f)))
        });
        g.bench_with_input(BenchmarkId::new("inv", order), &f, |b, f| {
            b.iter(|| black_box(f.inv().unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("sqrt", order), &f, |b, f| {
            b.iter(|| black_box(f.sqrt().unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("series_f64");
    for order in [1000usize, 4000] {
        let f = phi_coeffs(200).unwrap().to_f64();
        let mut coeffs = f.coeffs().to_vec();
        coeffs.resize(order + 1, 0.0);
        let f = Series::new(coeffs);
        g.bench_with_input(BenchmarkId::new("powi_16", order), &f, |b, f| {
            b.iter(|| black_box(f.powi(16)))
        });
    }
    g.finish();
}

fn tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("tables");
    g.sample_size(10);
    g.bench_function("h_series_200", |b| b.iter(|| black_box(h_series::<Q>(200))));
    g.bench_function("theta_100", |b| b.iter(|| black_box(phi_coeffs(100).unwrap())));
    g.bench_function("counts_200x10", |b| {
        b.iter(|| black_box(boundary_counts_int(10, 200).unwrap()))
    });
    g.bench_function("hull_pmf_r3_n40", |b| {
        b.iter(|| black_box(hull_volume_pmf(3, 40).unwrap()))
    });
    g.finish();
}

fn gf(c: &mut Criterion) {
    let mut g = c.benchmark_group("hull_gf");
    g.bench_function("closed", |b| {
        b.iter(|| black_box(hull_volume_gf_closed(black_box(0.99), 50).unwrap()))
    });
    g.bench_function("iterate", |b| {
        b.iter(|| black_box(hull_volume_gf_iterate(black_box(0.99), 50).unwrap()))
    });
    g.bench_function("layer_p20_q40", |b| {
        b.iter(|| black_box(layer_volume_gf(0.99, 5, 20, 40).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, ring_ops, tables, gf);
criterion_main!(benches);
