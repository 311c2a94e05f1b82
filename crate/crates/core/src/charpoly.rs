//! Averaged characteristic polynomial of the squared singular values.
//!
//! `p_N(x) = ⟨∏(x - σ_l²)⟩` over the operator-norm truncated ensemble. Each
//! coefficient is one inverse Mellin integral divided by the normalising
//! integral; zeros come from the companion matrix with Newton polishing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sampler::{self, ChainConfig, SingularValues, Truncation};
use crate::specfun::{inverse_mellin, ln_gamma, log_gamma_complex, ContourSpec, Decay};
use crate::volumes::j_kernel;

/// Largest dimension accepted for coefficient evaluation.
pub const MAX_N: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedCharPoly {
    pub n: usize,
    pub r: f64,
    /// `c₀, …, c_N` in increasing degree.
    pub coefficients: Vec<f64>,
    pub coefficient_errors: Vec<f64>,
    /// Ascending real zeros, once extracted.
    pub zeros: Option<Vec<f64>>,
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn lg(z: Complex64) -> Complex64 {
    log_gamma_complex(z).expect("contour avoids gamma poles")
}

/// Kernel of the `k`-th coefficient:
/// `R^{N(s+2)} Γ(s)Γ(N+s+1+k)/(Γ(s+k)Γ(N+s+1)) ∏_j Γ((s+j)/2+1)/Γ((s+N+1+j)/2+1)`.
pub fn coefficient_kernel(n: usize, r: f64, k: usize) -> impl Fn(Complex64) -> Complex64 + Sync {
    let ln_r = r.ln();
    move |s: Complex64| {
        let nf = n as f64;
        let kf = k as f64;
        let mut acc = (s + 2.0) * (nf * ln_r) + lg(s) + lg(s + nf + 1.0 + kf)
            - lg(s + kf)
            - lg(s + nf + 1.0);
        for j in 0..n {
            let jf = j as f64;
            acc += lg((s + jf) / 2.0 + 1.0) - lg((s + nf + 1.0 + jf) / 2.0 + 1.0);
        }
        acc.exp()
    }
}

fn check_inputs(n: usize, r: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("need N >= 2, got {n}")));
    }
    if n > MAX_N {
        return Err(Error::domain(format!(
            "N = {n} exceeds the supported maximum {MAX_N}: coefficient cancellation \
             outruns double precision"
        )));
    }
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("need R > 1, got {r}")));
    }
    Ok(())
}

/// Coefficients `c₀..c_N` by contour quadrature, evaluated concurrently.
///
/// `c_N` is computed like the others and must come out as 1.
pub fn charpoly_coefficients(n: usize, r: f64, spec: &ContourSpec) -> Result<AveragedCharPoly> {
    check_inputs(n, r)?;
    if spec.abscissa() <= 0.0 {
        return Err(Error::domain("contour abscissa must be positive"));
    }
    let nf = n as f64;
    let decay = Decay::oscillating(nf * (nf + 1.0) / 2.0, nf * r.ln());
    let norm = inverse_mellin(j_kernel(n, r), spec, decay)?;
    let raw: Vec<Result<(f64, f64)>> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let m = inverse_mellin(coefficient_kernel(n, r, k), spec, decay)?;
            let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            let scale = (ln_binomial(n, k) - 2.0 * k as f64 * r.ln()).exp() / norm.value;
            let value = sign * scale * m.value;
            let err = scale * m.abs_error + value.abs() * norm.abs_error / norm.value;
            Ok((value, err))
        })
        .collect();
    let mut coefficients = Vec::with_capacity(n + 1);
    let mut coefficient_errors = Vec::with_capacity(n + 1);
    for item in raw {
        let (v, e) = item?;
        coefficients.push(v);
        coefficient_errors.push(e);
    }
    let lead = coefficients[n];
    if (lead - 1.0).abs() > 1e-8 {
        return Err(Error::NonConvergence(format!(
            "leading coefficient came out as {lead}, not 1; contour under-resolved"
        )));
    }
    Ok(AveragedCharPoly {
        n,
        r,
        coefficients,
        coefficient_errors,
        zeros: None,
    })
}

/// Horner evaluation of `p` and `p'`.
fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Relative imaginary part above which an eigenvalue counts as a complex zero.
const COMPLEX_TOL: f64 = 1e-6;

/// Real zeros of the polynomial with coefficients `coeffs` (increasing degree).
pub fn real_zeros(coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let companion = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == 0 {
            -monic[n - 1 - j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = companion.complex_eigenvalues();
    let mut zeros = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > COMPLEX_TOL * z.re.abs().max(1.0) {
            return Err(Error::ComplexRoots { re: z.re, im: z.im.abs() });
        }
        let mut x = z.re;
        for _ in 0..2 {
            let (p, dp) = eval_with_derivative(&monic, x);
            if dp != 0.0 {
                x -= p / dp;
            }
        }
        zeros.push(x);
    }
    zeros.sort_by(f64::total_cmp);
    Ok(zeros)
}

/// Extract and validate the zeros: real, simple, inside `(0, R²)`, unit product.
pub fn charpoly_zeros(mut poly: AveragedCharPoly) -> Result<AveragedCharPoly> {
    let zeros = real_zeros(&poly.coefficients)?;
    let r2 = poly.r * poly.r;
    if let Some(z) = zeros.iter().find(|z| !(**z > 0.0 && **z < r2)) {
        return Err(Error::NonConvergence(format!(
            "zero {z} outside the support (0, {r2})"
        )));
    }
    if zeros.windows(2).any(|w| w[1] - w[0] <= 1e-10 * w[1]) {
        return Err(Error::NonConvergence("repeated zero; contour under-resolved".into()));
    }
    let product: f64 = zeros.iter().product();
    if (product - 1.0).abs() > 1e-6 {
        return Err(Error::NonConvergence(format!("zeros multiply to {product}, not 1")));
    }
    poly.zeros = Some(zeros);
    Ok(poly)
}

/// Coefficients of `∏(x - zᵢ)`, increasing degree.
pub fn expand_zeros(zeros: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for z in zeros {
        let mut next = vec![0.0; c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= z * ci;
        }
        c = next;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCharPoly {
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

const BATCHES: usize = 50;

/// Monte Carlo estimate of the averaged coefficients with batch-means errors.
///
/// N = 2 uses the exact singular-value sampler; larger N a thinned chain.
pub fn mc_charpoly_oracle(n: usize, r: f64, samples: usize, seed: u64) -> Result<McCharPoly> {
    check_inputs(n, r)?;
    if samples < BATCHES {
        return Err(Error::domain(format!("need at least {BATCHES} samples")));
    }
    let trunc = Truncation::operator(r);
    let mut rng = stream_rng(seed, 0);
    let draws: Vec<Vec<f64>> = if n == 2 {
        (0..samples)
            .map(|_| sampler::sample_sv_n2(&trunc, &mut rng).map(|s| s.as_slice().to_vec()))
            .collect::<Result<_>>()?
    } else {
        let init = sampler::dirichlet_initial(n, &trunc, &mut rng)?;
        let thin = 10;
        let burn = samples * thin / 10;
        let cfg = ChainConfig {
            steps: burn + samples * thin,
            burn_in: burn,
            thin,
            ..ChainConfig::new(1, seed)
        };
        sampler::mcmc_sv(trunc, cfg, init, 1)?
            .map(|s: SingularValues| s.as_slice().to_vec())
            .collect()
    };
    let per = draws.len() / BATCHES;
    let mut batch_means = vec![vec![0.0; n + 1]; BATCHES];
    for (b, chunk) in draws.chunks(per).take(BATCHES).enumerate() {
        for sigma in chunk {
            let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
            for (acc, c) in batch_means[b].iter_mut().zip(expand_zeros(&sq)) {
                *acc += c / per as f64;
            }
        }
    }
    let mut mean = vec![0.0; n + 1];
    let mut standard_error = vec![0.0; n + 1];
    for k in 0..=n {
        let m = batch_means.iter().map(|b| b[k]).sum::<f64>() / BATCHES as f64;
        let var = batch_means.iter().map(|b| (b[k] - m).powi(2)).sum::<f64>()
            / (BATCHES as f64 - 1.0);
        mean[k] = m;
        standard_error[k] = (var / BATCHES as f64).sqrt();
    }
    Ok(McCharPoly {
        mean,
        standard_error,
        samples: per * BATCHES,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ContourSpec {
        ContourSpec::auto(0.0)
    }

    /// Independent route: coefficients as ratios of shifted Selberg averages,
    /// `c_k ∝ ∫ R^{Ns} G(s) ∏_{i<=N-k} (s+N-i)/(s+2N+1-i) ds`.
    fn aomoto_coefficients(n: usize, r: f64) -> Vec<f64> {
        let base = j_kernel(n, r);
        let nf = n as f64;
        let decay = Decay::oscillating(nf * (nf + 1.0) / 2.0, nf * r.ln());
        let norm = inverse_mellin(base, &spec(), decay).unwrap().value;
        (0..=n)
            .map(|k| {
                let f = move |s: Complex64| {
                    let mut v = base(s);
                    for i in 1..=n - k {
                        v *= (s + (n - i) as f64) / (s + (2 * n + 1 - i) as f64);
                    }
                    v
                };
                let m = inverse_mellin(f, &spec(), decay).unwrap().value;
                let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * (ln_binomial(n, k) + 2.0 * (n - k) as f64 * r.ln()).exp() * m / norm
            })
            .collect()
    }

    #[test]
    fn n2_monic_with_unit_constant() {
        let p = charpoly_coefficients(2, 2.0, &spec()).unwrap();
        assert!((p.coefficients[2] - 1.0).abs() < 1e-8);
        assert!((p.coefficients[0].abs() - 1.0).abs() < 1e-6);
        let p = charpoly_zeros(p).unwrap();
        let z = p.zeros.unwrap();
        assert!((z[0] * z[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn n6_against_high_precision_reference() {
        // mpmath at 30 digits, both routes
        let want = [
            1.0,
            -25.988_017_206_691_204,
            81.766_620_253_099_45,
            -92.789_553_262_684_35,
            47.602_207_013_048_19,
            -11.265_618_591_628_549,
            1.0,
        ];
        let p = charpoly_coefficients(6, 2.0, &spec()).unwrap();
        for (k, (got, w)) in p.coefficients.iter().zip(want).enumerate() {
            assert!((got - w).abs() < 1e-7 * w.abs(), "c{k}: {got} vs {w}");
        }
        let aom = aomoto_coefficients(6, 2.0);
        for (a, b) in aom.iter().zip(&p.coefficients) {
            assert!((a - b).abs() < 1e-7 * b.abs().max(1.0));
        }
        let z = charpoly_zeros(p).unwrap().zeros.unwrap();
        let reference = [0.04436, 0.57774, 1.41726, 2.33579, 3.15342, 3.73701];
        for (a, b) in z.iter().zip(reference) {
            assert!((a - b).abs() < 5e-5, "{z:?}");
        }
    }

    #[test]
    fn root_coefficient_duality() {
        let p = charpoly_zeros(charpoly_coefficients(4, 3.0, &spec()).unwrap()).unwrap();
        let back = expand_zeros(p.zeros.as_ref().unwrap());
        for (a, b) in back.iter().zip(&p.coefficients) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(matches!(
            charpoly_coefficients(16, 2.0, &spec()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn complex_pair_detected() {
        // x² + 1
        assert!(matches!(real_zeros(&[1.0, 0.0, 1.0]), Err(Error::ComplexRoots { .. })));
        let z = real_zeros(&[6.0, -5.0, 1.0]).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-12 && (z[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees_n2() {
        let p = charpoly_coefficients(2, 2.0, &spec()).unwrap();
        let mc = mc_charpoly_oracle(2, 2.0, 100_000, 17).unwrap();
        let d = (mc.mean[1] - p.coefficients[1]).abs();
        assert!(d < 3.0 * mc.standard_error[1], "{mc:?} vs {p:?}");
    }
}
