use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use unimodular_core::lattice::{lagrange_gauss, semaev_reduce};
use unimodular_core::num_complex::Complex64;
use unimodular_core::rng::stream_rng;
use unimodular_core::sampler::{assemble_matrix, dirichlet_initial, mcmc_sv, sample_sv_n2};
use unimodular_core::specfun::log_gamma_complex;
use unimodular_core::volumes::{j_contour, j_default_contour};
use unimodular_core::{ChainConfig, LatticeBasis, SingularValues, Truncation};

fn special_functions(c: &mut Criterion) {
    c.bench_function("log_gamma_complex", |b| {
        b.iter(|| log_gamma_complex(black_box(Complex64::new(2.5, 37.0))).unwrap())
    });
    let spec = j_default_contour();
    c.bench_function("j_contour N=4 R=3", |b| b.iter(|| j_contour(4, black_box(3.0), &spec).unwrap()));
}

fn reduction(c: &mut Criterion) {
    let mut rng = stream_rng(1, 0);
    let trunc = Truncation::operator(100.0);
    let planar: Vec<LatticeBasis> = (0..256)
        .map(|_| {
            let sv = sample_sv_n2(&trunc, &mut rng).unwrap();
            LatticeBasis::new(assemble_matrix(sv, &mut rng).m).unwrap()
        })
        .collect();
    c.bench_function("lagrange_gauss x256", |b| {
        b.iter(|| planar.iter().map(|m| lagrange_gauss(m).unwrap().lengths[0]).sum::<f64>())
    });
    let spatial: Vec<LatticeBasis> = (0..256)
        .map(|k| {
            let a = 2.0 + (k % 40) as f64;
            let sv = SingularValues::from_leading(&[a, 1.0]).unwrap();
            LatticeBasis::new(assemble_matrix(sv, &mut rng).m).unwrap()
        })
        .collect();
    c.bench_function("semaev_reduce x256", |b| {
        b.iter(|| spatial.iter().map(|m| semaev_reduce(m).unwrap().lengths[0]).sum::<f64>())
    });
}

fn chain(c: &mut Criterion) {
    let trunc = Truncation::operator(4.0);
    let init = dirichlet_initial(3, &trunc, &mut stream_rng(3, 0)).unwrap();
    c.bench_function("mcmc N=3 10k steps", |b| {
        b.iter(|| {
            let cfg = ChainConfig { thin: 100, ..ChainConfig::new(10_000, 3) };
            mcmc_sv(trunc, cfg, init.clone(), 0).unwrap().count()
        })
    });
}

criterion_group!(benches, special_functions, reduction, chain);
criterion_main!(benches);
