use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcfb_core::quantizer::{quantize_angles, train_lloyd_theta, CodebookCache, LLOYD_MAX_ITERS, LLOYD_TOL};
use pcfb_core::spectral::{capacity_full_csi, waterfill_threshold};
use pcfb_core::{decompose_postcoder, reconstruct_postcoder, sample_channel, sample_postcoder, svd_canonical, BitAllocation, Streams};

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd_canonical");
    for (r, t) in [(2, 4), (4, 8)] {
        let h = sample_channel(r, t, &mut Streams::new(1).trial(0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{t}x{r}")), &h, |b, h| b.iter(|| svd_canonical(black_box(h)).unwrap()));
    }
    group.finish();
}

fn codec(c: &mut Criterion) {
    let mut group = c.benchmark_group("givens");
    for r in [2, 4, 8] {
        let u = sample_postcoder(r, &mut Streams::new(2).trial(r as u64)).unwrap();
        let angles = decompose_postcoder(&u).unwrap();
        group.bench_with_input(BenchmarkId::new("decompose", r), &u, |b, u| b.iter(|| decompose_postcoder(black_box(u)).unwrap()));
        group.bench_with_input(BenchmarkId::new("reconstruct", r), &angles, |b, a| {
            b.iter(|| reconstruct_postcoder(black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn lloyd(c: &mut Criterion) {
    let mut group = c.benchmark_group("lloyd_train");
    group.sample_size(10);
    for bits in [3, 6, 9] {
        group.bench_with_input(BenchmarkId::from_parameter(bits), &bits, |b, &bits| {
            b.iter(|| train_lloyd_theta(2, bits, LLOYD_TOL, LLOYD_MAX_ITERS).unwrap())
        });
    }
    group.finish();
}

fn quantize(c: &mut Criterion) {
    let cache = CodebookCache::new();
    let books = cache.books(4, &BitAllocation::uniform(4, 6)).unwrap();
    let u = sample_postcoder(4, &mut Streams::new(3).trial(0)).unwrap();
    let angles = decompose_postcoder(&u).unwrap();
    c.bench_function("quantize_angles/r4_b6", |b| b.iter(|| quantize_angles(&books, black_box(&angles)).unwrap()));
}

fn waterfill(c: &mut Criterion) {
    let mut group = c.benchmark_group("waterfill");
    group.sample_size(20);
    for (r, t) in [(2, 4), (4, 8)] {
        group.bench_function(format!("{t}x{r}"), |b| {
            b.iter(|| capacity_full_csi(&waterfill_threshold(r, t, black_box(10.0)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, svd, codec, lloyd, quantize, waterfill);
criterion_main!(benches);
