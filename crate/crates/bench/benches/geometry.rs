use criterion::{criterion_group, criterion_main, Criterion};

use anng_core::geometry::{
    cap_volume_exact, wedge_volume_mc, CapParams, WedgeParams,
};
use anng_core::tradeoffs::sieving_optimum;

fn bench_cap_exact(c: &mut Criterion) {
    c.bench_function("cap_volume_exact_d1000", |b| {
        let p = CapParams::new(0.3, 1000).unwrap();
        b.iter(|| cap_volume_exact(std::hint::black_box(p)).unwrap());
    });
}

fn bench_wedge_mc(c: &mut Criterion) {
    let mut group = c.benchmark_group("wedge_mc_10k_samples");
    group.sample_size(20);
    for &d in &[64u32, 256] {
        group.bench_function(format!("d{d}"), |b| {
            let p = WedgeParams::new(0.2, 0.2, 0.4, d).unwrap();
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                wedge_volume_mc(p, 10_000, seed).unwrap()
            });
        });
    }
    group.finish();
}

fn bench_sieving_optimum(c: &mut Criterion) {
    c.bench_function("sieving_optimum_1e-4_grid", |b| {
        b.iter(|| sieving_optimum(std::hint::black_box(1e-4)).unwrap());
    });
}

criterion_group!(benches, bench_cap_exact, bench_wedge_mc, bench_sieving_optimum);
criterion_main!(benches);
