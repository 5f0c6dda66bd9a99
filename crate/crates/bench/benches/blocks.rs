use arisac::oracle::{mc_radar_snr, McConfig};
use arisac::solver::beamformer::{build_w_data, mm_update_w, MmOptions};
use arisac::solver::filter::{build_filter_matrices, update_filter};
use arisac::solver::reflection::{update_phi, PhiOptions};
use arisac::{optimize, BcdOptions};
use arisac_bench::instance;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("filter");
    for m in [8, 16, 32] {
        let s = instance(8, 4, m, 0);
        group.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| {
            b.iter(|| {
                update_filter(
                    &build_filter_matrices(&s.cfg, &s.ch, &s.w, &s.phi).unwrap(),
                    s.cfg.rcs_var,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn beamformer_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("beamformer_step");
    group.sample_size(20);
    for n in [4, 8] {
        let s = instance(n, 2, 16, 0);
        let data = build_w_data(&s.cfg, &s.ch, &s.phi, &s.u).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| {
                mm_update_w(&data, &s.cfg, black_box(&s.w), &MmOptions::single_step()).unwrap()
            })
        });
    }
    group.finish();
}

fn reflection_update(c: &mut Criterion) {
    let mut group = c.benchmark_group("reflection_update");
    group.sample_size(10);
    for m in [8, 16] {
        let s = instance(8, 4, m, 0);
        group.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| {
            b.iter(|| {
                update_phi(
                    &s.cfg,
                    &s.ch,
                    &s.w,
                    &s.u,
                    black_box(&s.phi),
                    &PhiOptions::single_update(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    let s = instance(4, 2, 8, 0);
    let mc = McConfig {
        n_samples: 1 << 16,
        ..McConfig::default()
    };
    group.bench_function("radar_snr_65536", |b| {
        b.iter(|| mc_radar_snr(&s.cfg, &s.ch, &s.w, &s.phi, &s.u, &mc).unwrap())
    });
    group.finish();
}

fn full_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("bcd");
    group.sample_size(10);
    let s = instance(4, 2, 8, 0);
    group.bench_function("n4_k2_m8", |b| {
        b.iter(|| optimize(&s.cfg, &s.ch, &BcdOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    filter,
    beamformer_step,
    reflection_update,
    monte_carlo,
    full_design
);
criterion_main!(benches);
