//! Criterion benchmarks for the hot paths: Mori cones, MMP runs, section
//! polytopes, and full chamber decompositions.

use criterion::{criterion_group, criterion_main, Criterion};
use morifan::corpus;
use morifan::divisor::{canonical_divisor, section_polytope};
use morifan::geography::{auto_slice_param, chamber_decomposition};
use morifan::mmp::{mori_cone, run_mmp, Strategy};

fn bench_mori_cone(c: &mut Criterion) {
    let models = [
        ("F1", corpus::hirzebruch(1)),
        ("Bl2P2", corpus::blowup_p2_two_points()),
        ("P1xP1xP1", corpus::p1_cubed()),
        ("QuadricFlop3fold", corpus::quadric_cone_resolution()),
    ];
    let mut group = c.benchmark_group("mori_cone");
    for (name, z) in &models {
        group.bench_function(*name, |b| b.iter(|| mori_cone(std::hint::black_box(z))));
    }
    group.finish();
}

fn bench_run_mmp(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_mmp_canonical");
    for (name, z) in corpus::slice_corpus() {
        let k = canonical_divisor(&z.fan);
        group.bench_function(name, |b| {
            b.iter(|| {
                run_mmp(
                    std::hint::black_box(&z),
                    std::hint::black_box(&k),
                    &Strategy::DeterministicLex,
                    10_000,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_section_polytope(c: &mut Criterion) {
    let z = corpus::s_cross_p1();
    let k = canonical_divisor(&z.fan);
    c.bench_function("section_polytope_4fold", |b| {
        b.iter(|| {
            let p = section_polytope(std::hint::black_box(&z.fan), std::hint::black_box(&k));
            p.vrep().vertices.len()
        })
    });
}

fn bench_chamber_decomposition(c: &mut Criterion) {
    let z = corpus::hirzebruch(1);
    let k = canonical_divisor(&z.fan);
    let param = auto_slice_param(&z, &k, 13, 3).unwrap();
    c.bench_function("chamber_decomposition_f1", |b| {
        b.iter(|| {
            chamber_decomposition(std::hint::black_box(&z), std::hint::black_box(&param)).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_mori_cone,
    bench_run_mmp,
    bench_section_polytope,
    bench_chamber_decomposition
);
criterion_main!(benches);
