use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use unimodular_core::analytics::{self, hexagonal_length, Density};
use unimodular_core::charpoly::{charpoly_coefficients, charpoly_zeros, expand_zeros};
use unimodular_core::harness::{two_sample_ks, EmpiricalDistribution};
use unimodular_core::lattice::{self, is_minkowski_reduced, LatticeBasis};
use unimodular_core::rng::stream_rng;
use unimodular_core::sampler::{
    assemble_matrix, dirichlet_initial, mcmc_sv, sample_sv_n2, ChainConfig, SingularValues, Truncation,
};
use unimodular_core::specfun::{log_gamma_complex, ContourSpec};
use unimodular_core::volumes::{
    asymptotic_constants, group_volume_coefficient, i_hat_closed_n2, i_hat_contour, j_closed, j_contour,
    j_default_contour, j_kernel, Norm,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn log_gamma_recurrence(re in -6.0f64..12.0, im in -60.0f64..60.0) {
        let z = Complex64::new(re, im);
        // stay away from the poles on the negative real axis
        prop_assume!(im.abs() > 0.05 || re > 0.05 || (re - re.round()).abs() > 0.05);
        let a = log_gamma_complex(z + 1.0).unwrap();
        let b = log_gamma_complex(z).unwrap();
        let d = a - b - z.ln();
        let scale = a.norm().max(b.norm()).max(1.0);
        prop_assert!(d.norm() <= 1e-12 * scale, "z = {z}, gap {d}");
    }

    #[test]
    fn kernel_conjugate_symmetry(n in 2usize..6, r in 1.1f64..20.0, x in 0.5f64..3.0, t in -40.0f64..40.0) {
        let f = j_kernel(n, r);
        let s = Complex64::new(x, t);
        let a = f(s.conj());
        let b = f(s).conj();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1e-300));
    }

    #[test]
    fn hist_mass_conservation(xs in prop::collection::vec(-5.0f64..5.0, 1..400), bins in 1usize..60) {
        let h = EmpiricalDistribution::over_data(&xs, bins).unwrap();
        prop_assert_eq!(h.total as usize, xs.len());
        prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, xs.len());
        prop_assert!((h.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_cdfs_monotone(which in prop::sample::select(Density::ALL.to_vec()), a in -1.0f64..5.0, b in -1.0f64..5.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(which.cdf(lo) <= which.cdf(hi) + 1e-14);
        prop_assert!(which.pdf(lo) >= 0.0);
    }

    #[test]
    fn density_supports(s in -3.0f64..3.0) {
        if !(s > 0.0 && s < hexagonal_length()) {
            prop_assert_eq!(analytics::pdf_shortest_n2(s), 0.0);
        }
        if s.abs() >= 0.5 {
            prop_assert_eq!(analytics::pdf_cosine_n2(s), 0.0);
        }
        if s <= 1.0 {
            prop_assert_eq!(analytics::pdf_second_n2(s), 0.0);
        }
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn contour_independence(n in 2usize..5, r in 1.2f64..8.0) {
        let a = j_contour(n, r, &j_default_contour()).unwrap();
        let spec = j_default_contour().with_abscissa(1.5, 0.0).unwrap();
        let b = j_contour(n, r, &spec).unwrap();
        let slack = a.abs_error + b.abs_error + 1e-8 * a.value.abs();
        prop_assert!((a.value - b.value).abs() <= slack, "{a:?} vs {b:?}");
    }

    #[test]
    fn volumes_monotone_and_dominated(n in 2usize..4, r in 1.1f64..15.0, dr in 0.05f64..3.0) {
        let j1 = j_closed(n, r).unwrap().value;
        let j2 = j_closed(n, r + dr).unwrap().value;
        prop_assert!(j1 < j2);
        let spec = ContourSpec::auto(0.0);
        let hat = |x: f64| if n == 2 { i_hat_closed_n2(x).value } else { i_hat_contour(n, x, &spec).unwrap().value };
        let (h1, h2) = (hat(r), hat(r + dr));
        prop_assert!(h1 <= h2);
        prop_assert!(h1 < j1 || h1 == 0.0);
    }

    #[test]
    fn prefactor_matches_gamma_expression(n in 2usize..13, two in any::<bool>()) {
        let norm = if two { Norm::TwoNorm } else { Norm::Operator };
        let a = asymptotic_constants(n, norm).unwrap();
        let k = group_volume_coefficient(n, norm).unwrap();
        prop_assert!((a.full_prefactor / k - 1.0).abs() < 1e-12, "N = {n}: {} vs {k}", a.full_prefactor);
    }

    #[test]
    fn charpoly_duality_support_product(n in 2usize..7, r in 1.3f64..4.0) {
        let poly = charpoly_zeros(charpoly_coefficients(n, r, &ContourSpec::auto(0.0)).unwrap()).unwrap();
        let zeros = poly.zeros.clone().unwrap();
        prop_assert!(zeros.iter().all(|&z| z > 0.0 && z < r * r));
        let product: f64 = zeros.iter().product();
        prop_assert!((product - 1.0).abs() < 1e-6);
        let back = expand_zeros(&zeros);
        for (a, b) in back.iter().zip(&poly.coefficients) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{back:?} vs {:?}", poly.coefficients);
        }
    }

    #[test]
    fn planar_reduction_properties(seed in any::<u64>(), radius in 1.5f64..200.0) {
        let mut rng = stream_rng(seed, 0);
        let sv = sample_sv_n2(&Truncation::operator(radius), &mut rng).unwrap();
        let m = assemble_matrix(sv, &mut rng).m;
        let basis = LatticeBasis::new(m.clone()).unwrap();
        let red = lattice::lagrange_gauss(&basis).unwrap();
        prop_assert!(red.same_lattice_as(&basis));
        prop_assert!(is_minkowski_reduced(&red, 2));
        let shortest_in = m.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(red.lengths[0] <= shortest_in * (1.0 + 1e-12));
        prop_assert!(red.lengths[0] <= hexagonal_length() + 1e-9);
        prop_assert!(red.cosines[0].abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn spatial_reduction_properties(seed in any::<u64>(), s1 in 1.0f64..60.0, s2 in 0.05f64..1.0, shears in prop::collection::vec((0usize..3, 0usize..3, -20i64..=20), 0..6)) {
        // σ₂ as a fraction of σ₁, σ₃ from the unit product
        let a = s1 + 0.01;
        let b = (a * s2).max(1.0 / a.sqrt() * 1.001);
        prop_assume!(b < a && 1.0 / (a * b) < b);
        let mut rng = stream_rng(seed, 1);
        let sv = SingularValues::from_leading(&[a, b]).unwrap();
        let mut m = assemble_matrix(sv, &mut rng).m;
        for (i, j, c) in shears {
            if i != j {
                let cj = m.column(j).clone_owned();
                m.column_mut(i).axpy(c as f64, &cj, 1.0);
            }
        }
        let basis = LatticeBasis::new(m.clone()).unwrap();
        let red = lattice::semaev_reduce(&basis).unwrap();
        prop_assert!(red.same_lattice_as(&basis));
        prop_assert!(is_minkowski_reduced(&red, 2));
        let shortest_in = m.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(red.lengths[0] <= shortest_in * (1.0 + 1e-12));
        // Hermite bound in dimension 3: λ₁ <= 2^{1/6}
        prop_assert!(red.lengths[0] <= 2f64.powf(1.0 / 6.0) + 1e-9);
        prop_assert!(red.lengths[2] >= 1.0 - 1e-9);
        prop_assert!(red.cosines[0].abs() <= 0.5 + 0.01);
        let c3 = 1.0 / 3f64.sqrt() + 0.01;
        prop_assert!(red.cosines[1].abs() <= c3 && red.cosines[2].abs() <= c3);
    }

    #[test]
    fn sl2z_symmetry(r in 1.5f64..25.0, two in any::<bool>()) {
        let norm = if two { Norm::TwoNorm } else { Norm::Operator };
        let c = analytics::enumerate_sl2z(r, norm, 200.0).unwrap();
        prop_assert_eq!(c % 4, 0);
    }

    #[test]
    fn chain_truncation_and_energy(seed in any::<u64>(), radius in 1.5f64..30.0) {
        let trunc = Truncation::operator(radius);
        let mut rng = stream_rng(seed, 0);
        let init = dirichlet_initial(3, &trunc, &mut rng).unwrap();
        let cfg = ChainConfig { thin: 1, ..ChainConfig::new(30_000, seed) };
        let mut chain = mcmc_sv(trunc, cfg, init, 0).unwrap();
        for sv in chain.by_ref() {
            prop_assert!(sv.largest() < radius);
        }
        prop_assert!(chain.stats().max_energy_drift < 1e-9);
    }
}

/// Chains started from a random point and from the averaged characteristic
/// polynomial zeros sample the same σ₁ distribution.
#[test]
fn chains_forget_their_start() {
    let radius = 4.0;
    let trunc = Truncation::operator(radius);
    let zeros = charpoly_zeros(charpoly_coefficients(3, radius, &ContourSpec::auto(0.0)).unwrap())
        .unwrap()
        .zeros
        .unwrap();
    let from_zeros = SingularValues::from_squared(&zeros).unwrap();
    let mut rng = stream_rng(11, 99);
    let from_random = dirichlet_initial(3, &trunc, &mut rng).unwrap();
    let run = |init: SingularValues, stream: u64| -> Vec<f64> {
        let cfg = ChainConfig {
            thin: 20,
            ..ChainConfig::new(400_000, 11)
        };
        mcmc_sv(trunc, cfg, init, stream).unwrap().map(|sv| sv.largest()).collect()
    };
    let a = run(from_zeros, 1);
    let b = run(from_random, 2);
    let ks = two_sample_ks(&a, &b);
    assert!(ks.pass, "{ks:?}");
}

#[test]
fn identity_matrix_counts() {
    let z = DMatrix::identity(2, 2);
    let red = lattice::ReducedBasis::unreduced(&LatticeBasis::new(z).unwrap());
    let n = lattice::count_points_in_ball(&red, 3.0, lattice::CountConvention::AllVectors, 1_000_000).unwrap();
    // integer points with x² + y² <= 9, minus the origin
    assert_eq!(n, 28);
}
