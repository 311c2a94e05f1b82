//! Volumes of norm-truncated subsets of GL_N(ℝ) and SL_N(ℝ).
//!
//! The SL_N volumes reduce, after integrating out the orthogonal factors, to
//! singular-value integrals with a unit-product constraint. Those are
//! evaluated here in closed form (N = 2, 3), as a single inverse Mellin
//! integral (any N), or by nested quadrature with the constraint resolved onto
//! the smallest singular value.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{Nested, Tolerance};
use crate::specfun::{
    inverse_mellin, ln_factorial, ln_gamma, log_gamma_complex, riemann_zeta_int, ContourSpec,
    Decay,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    /// Largest singular value.
    Operator,
    /// Frobenius norm, `(Σσ²)^{1/2}`.
    TwoNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Contour,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeResult {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    /// The constraint set is empty (or numerically at its boundary).
    pub empty_domain: bool,
}

impl VolumeResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            abs_error: 0.0,
            method: Method::ClosedForm,
            empty_domain: false,
        }
    }

    fn empty(method: Method) -> Self {
        Self {
            value: 0.0,
            abs_error: 0.0,
            method,
            empty_domain: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstant {
    pub n: usize,
    pub norm: Norm,
    /// Coefficient of `R^{N(N-1)}` in the singular-value integral.
    pub coefficient: f64,
    pub exponent: u32,
    /// `2^{-N-1} vol O(N)^2 × coefficient`: leading coefficient of the group volume.
    pub full_prefactor: f64,
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::domain(format!("dimension must be >= {min}, got {n}")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be finite and >= 1, got {r}")));
    }
    Ok(())
}

/// `log vol O(N)`.
pub fn ln_vol_orthogonal(n: usize) -> f64 {
    (1..=n)
        .map(|k| {
            let h = k as f64 / 2.0;
            std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)
        })
        .sum()
}

/// Volume of O(N) in the invariant measure `(OᵀdO)`.
pub fn vol_orthogonal(n: usize) -> Result<f64> {
    check_n(n, 1)?;
    Ok(ln_vol_orthogonal(n).exp())
}

/// Volume of SL_N(ℝ)/SL_N(ℤ): `ζ(2)ζ(3)⋯ζ(N)`.
pub fn vol_fundamental(n: usize) -> Result<f64> {
    check_n(n, 2)?;
    (2..=n as u32).map(riemann_zeta_int).product()
}

/// Closed-form operator-norm singular-value integral for N = 2, 3.
pub fn j_closed(n: usize, r: f64) -> Result<VolumeResult> {
    check_radius(r)?;
    let value = match n {
        2 => 0.5 * (r - 1.0 / r).powi(2),
        3 => {
            let r3 = r.powi(3);
            (r3 * r3 - 1.0 / (r3 * r3)) / 24.0 - (r3 - 1.0 / r3) / 3.0 + 1.5 * r.ln()
        }
        _ => {
            return Err(Error::domain(format!(
                "closed form available only for N = 2, 3 (got {n})"
            )))
        }
    };
    Ok(VolumeResult::exact(value.max(0.0)))
}

/// `Σ_{j=0}^{N-1} [log Γ(1 + j/2) + log Γ(3/2 + j/2) - log Γ(3/2)]`.
fn ln_selberg_weights(n: usize) -> f64 {
    let g32 = ln_gamma(1.5);
    (0..n)
        .map(|j| {
            let h = j as f64 / 2.0;
            ln_gamma(1.0 + h) + ln_gamma(1.5 + h) - g32
        })
        .sum()
}

/// `log` of the prefactor multiplying the Mellin integral for the operator norm.
pub fn ln_j_prefactor(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    -nf * std::f64::consts::LN_2 + (nf * nf - nf) * r.ln() - ln_factorial(n) + ln_selberg_weights(n)
}

/// Gamma-ratio kernel `R^{Ns} ∏_{j<N} Γ((s+j)/2)/Γ((s+N+1+j)/2)`, without prefactor.
pub fn j_kernel(n: usize, r: f64) -> impl Fn(Complex64) -> Complex64 + Sync + Copy {
    let ln_r = r.ln();
    move |s: Complex64| {
        let nf = n as f64;
        let mut acc = s * (nf * ln_r);
        for j in 0..n {
            let jf = j as f64;
            acc += lg((s + jf) / 2.0) - lg((s + nf + 1.0 + jf) / 2.0);
        }
        acc.exp()
    }
}

fn lg(z: Complex64) -> Complex64 {
    // contour points stay right of every pole; a failure here is a caller bug
    log_gamma_complex(z).expect("contour avoids gamma poles")
}

/// Declared decay of [`j_kernel`] on a vertical line.
pub fn j_decay(n: usize, r: f64) -> Decay {
    let nf = n as f64;
    Decay::oscillating(nf * (nf + 1.0) / 2.0, nf * r.ln())
}

/// Default contour for the operator-norm kernel: poles at `s <= 0`.
pub fn j_default_contour() -> ContourSpec {
    ContourSpec::auto(0.0)
}

/// Operator-norm singular-value integral by inverse Mellin quadrature.
pub fn j_contour(n: usize, r: f64, spec: &ContourSpec) -> Result<VolumeResult> {
    check_n(n, 2)?;
    check_radius(r)?;
    if r == 1.0 {
        return Ok(VolumeResult::empty(Method::Contour));
    }
    if spec.abscissa() <= 0.0 {
        return Err(Error::domain("contour abscissa must be positive"));
    }
    let m = inverse_mellin(j_kernel(n, r), spec, j_decay(n, r))?;
    let pre = ln_j_prefactor(n, r).exp();
    Ok(VolumeResult {
        value: (pre * m.value).max(0.0),
        abs_error: pre * m.abs_error,
        method: Method::Contour,
        empty_domain: false,
    })
}

/// Constant in front of the rational form of the operator-norm Mellin integral.
pub fn ln_rational_prefactor(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) / 2.0 * std::f64::consts::LN_2 - ln_factorial(n) + ln_selberg_weights(n)
}

/// Rational kernel `w^{-[(N+1)/2]} R^{Nw} / ∏_{r<N} (w² - (N-r)²)^{[(r+1)/2]}`
/// in the shifted variable `w = s + N - 1`.
pub fn j_rational_kernel(n: usize, r: f64) -> impl Fn(Complex64) -> Complex64 + Sync + Copy {
    let ln_r = r.ln();
    move |w: Complex64| {
        let nf = n as f64;
        let mut acc = w * (nf * ln_r) - w.ln() * n.div_ceil(2) as f64;
        for k in 1..n {
            let shift = (n - k) as f64;
            acc -= (w * w - shift * shift).ln() * k.div_ceil(2) as f64;
        }
        acc.exp()
    }
}

/// Operator-norm integral through the rational kernel; contour must sit right of `N - 1`.
pub fn j_contour_rational(n: usize, r: f64, spec: &ContourSpec) -> Result<VolumeResult> {
    check_n(n, 2)?;
    check_radius(r)?;
    if spec.abscissa() <= (n - 1) as f64 {
        return Err(Error::domain(format!(
            "rational form needs abscissa > {} (got {})",
            n - 1,
            spec.abscissa()
        )));
    }
    let m = inverse_mellin(j_rational_kernel(n, r), spec, j_decay(n, r))?;
    let pre = ln_rational_prefactor(n).exp();
    Ok(VolumeResult {
        value: (pre * m.value).max(0.0),
        abs_error: pre * m.abs_error,
        method: Method::Contour,
        empty_domain: false,
    })
}

/// `log` of the prefactor of the 2-norm Mellin integral.
pub fn ln_i_hat_prefactor(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let g32 = ln_gamma(1.5);
    (nf * nf - nf) * r.ln() - nf * std::f64::consts::LN_2 - ln_factorial(n)
        + (1..=n).map(|j| ln_gamma(1.0 + j as f64 / 2.0) - g32).sum::<f64>()
}

/// `R^{sN} ∏_{j=1}^N Γ(s/2 + (N-j)/2) / Γ(sN/2 + N(N-1)/2 + 1)`.
pub fn i_hat_kernel(n: usize, r: f64) -> impl Fn(Complex64) -> Complex64 + Sync + Copy {
    let ln_r = r.ln();
    move |s: Complex64| {
        let nf = n as f64;
        let mut acc = s * (nf * ln_r) - lg(s * (nf / 2.0) + nf * (nf - 1.0) / 2.0 + 1.0);
        for j in 1..=n {
            acc += lg(s / 2.0 + (n - j) as f64 / 2.0);
        }
        acc.exp()
    }
}

pub fn i_hat_decay(n: usize, r: f64) -> Decay {
    let nf = n as f64;
    Decay::oscillating((nf * nf + nf + 2.0) / 4.0, nf / 2.0 * (r * r / nf).ln())
}

/// Below this phase velocity the tail cannot be pushed under tolerance at any practical height.
const BOUNDARY_FREQUENCY: f64 = 0.05;
const BOUNDARY_HALF_HEIGHT: f64 = 4096.0;

/// 2-norm singular-value integral by inverse Mellin quadrature.
///
/// Returns zero with `empty_domain` set when `R² <= N`. Just above that
/// boundary the kernel barely oscillates; the estimate is returned with the
/// tail bound folded into its error instead of failing.
pub fn i_hat_contour(n: usize, r: f64, spec: &ContourSpec) -> Result<VolumeResult> {
    check_n(n, 2)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if r * r <= n as f64 * (1.0 + 1e-12) {
        return Ok(VolumeResult::empty(Method::Contour));
    }
    if spec.abscissa() <= 0.0 {
        return Err(Error::domain("contour abscissa must be positive"));
    }
    let decay = i_hat_decay(n, r);
    let near_boundary = decay.frequency.is_none_or(|w| w < BOUNDARY_FREQUENCY);
    let mut spec = *spec;
    if near_boundary {
        spec.max_half_height = spec.max_half_height.min(BOUNDARY_HALF_HEIGHT);
    }
    let pre = ln_i_hat_prefactor(n, r).exp();
    match inverse_mellin(i_hat_kernel(n, r), &spec, decay) {
        Ok(m) => Ok(VolumeResult {
            value: (pre * m.value).max(0.0),
            abs_error: pre * m.abs_error,
            method: Method::Contour,
            empty_domain: false,
        }),
        Err(Error::TailBound {
            bound, estimate, ..
        }) if near_boundary => Ok(VolumeResult {
            value: (pre * estimate).max(0.0),
            abs_error: pre * bound,
            method: Method::Contour,
            empty_domain: true,
        }),
        Err(e) => Err(e),
    }
}

/// Closed form of the N = 2 two-norm integral, `R²/2 - 1`.
pub fn i_hat_closed_n2(r: f64) -> VolumeResult {
    if r * r <= 2.0 * (1.0 + 1e-12) {
        return VolumeResult::empty(Method::ClosedForm);
    }
    VolumeResult::exact(r * r / 2.0 - 1.0)
}

/// Leading large-`R` coefficients of the SL_N volumes.
pub fn asymptotic_constants(n: usize, norm: Norm) -> Result<AsymptoticConstant> {
    check_n(n, 2)?;
    let nf = n as f64;
    let g32 = ln_gamma(1.5);
    let head = std::f64::consts::LN_2 - 2.0 * nf * std::f64::consts::LN_2 - ln_gamma(nf / 2.0);
    let ln_coef = match norm {
        Norm::Operator => {
            head + (0..n)
                .map(|j| {
                    let jf = j as f64;
                    ln_gamma(1.0 + jf / 2.0) - g32 + 2.0 * ln_gamma((1.0 + jf) / 2.0)
                        - ln_gamma((nf + 1.0 + jf) / 2.0)
                })
                .sum::<f64>()
        }
        Norm::TwoNorm => {
            head - ln_gamma(nf * (nf - 1.0) / 2.0 + 1.0)
                + (1..=n)
                    .map(|j| 2.0 * ln_gamma(j as f64 / 2.0) - g32)
                    .sum::<f64>()
        }
    };
    let ln_full = -(nf + 1.0) * std::f64::consts::LN_2 + 2.0 * ln_vol_orthogonal(n) + ln_coef;
    Ok(AsymptoticConstant {
        n,
        norm,
        coefficient: ln_coef.exp(),
        exponent: (n * (n - 1)) as u32,
        full_prefactor: ln_full.exp(),
    })
}

/// Leading coefficient of the group volume written directly in gamma functions.
pub fn group_volume_coefficient(n: usize, norm: Norm) -> Result<f64> {
    check_n(n, 2)?;
    let nf = n as f64;
    let base = nf * nf / 2.0 * PI.ln() - ln_gamma(nf / 2.0);
    let ln_k = match norm {
        Norm::TwoNorm => base - ln_gamma(nf * (nf - 1.0) / 2.0 + 1.0),
        Norm::Operator => {
            base + (0..n)
                .map(|j| {
                    let jf = j as f64;
                    ln_gamma(1.0 + jf / 2.0) - ln_gamma((nf + 1.0 + jf) / 2.0)
                })
                .sum::<f64>()
        }
    };
    Ok(ln_k.exp())
}

/// Coefficient of `R^{N(N-1)}` in the asymptotic count of SL_N(ℤ) elements of norm `<= R`.
pub fn counting_constant(n: usize, norm: Norm) -> Result<f64> {
    Ok(group_volume_coefficient(n, norm)? / vol_fundamental(n)?)
}

fn default_tol() -> Tolerance {
    Tolerance::new(1e-300, 1e-9)
}

/// GL_N singular-value integral over `R1 > σ₁ > ⋯ > σ_N > 1/R2`, N = 2, 3.
///
/// Integrated in logarithmic variables `σ = e^u`.
pub fn gl_volume_quadrature(n: usize, r1: f64, r2: f64) -> Result<VolumeResult> {
    if !(r1 > 0.0 && r2 > 0.0) || !(r1 * r2 >= 1.0) {
        return Err(Error::domain(format!("need R1·R2 >= 1, got R1={r1}, R2={r2}")));
    }
    let (hi, lo) = (r1.ln(), -r2.ln());
    if hi <= lo {
        return Ok(VolumeResult::empty(Method::Quadrature));
    }
    let tol = default_tol();
    let est = match n {
        2 => {
            // σ^{-2} per factor, times σ from dσ = σ du
            let f = |u1: f64, u2: f64| {
                let (a, b) = (u1.exp(), u2.exp());
                (a * a - b * b) / (a * b)
            };
            let nest = Nested::new();
            nest.outer(|u1| nest.inner(|u2| f(u1, u2), lo, u1, tol.inner()), lo, hi, tol)?
        }
        3 => {
            let f = |u1: f64, u2: f64, u3: f64| {
                let (a, b, c) = (u1.exp(), u2.exp(), u3.exp());
                let (a2, b2, c2) = (a * a, b * b, c * c);
                (a2 - b2) * (a2 - c2) * (b2 - c2) / (a2 * b2 * c2)
            };
            let outer = Nested::new();
            let middle = Nested::new();
            outer.outer(
                |u1| {
                    outer.inner(
                        |u2| middle.inner(|u3| f(u1, u2, u3), lo, u2, tol.inner().inner()),
                        lo,
                        u1,
                        tol.inner(),
                    )
                },
                lo,
                hi,
                tol,
            )?
        }
        _ => return Err(Error::domain(format!("GL quadrature implemented for N = 2, 3 (got {n})"))),
    };
    Ok(VolumeResult {
        value: est.value.max(0.0),
        abs_error: est.abs_error,
        method: Method::Quadrature,
        empty_domain: false,
    })
}

/// Leading growth of the GL_N integral in the product `R1·R2`: `x` for N = 2,
/// `x² log x / 4` for N = 3.
pub fn gl_asymptotic_target(n: usize, r1: f64, r2: f64) -> Result<f64> {
    let x = r1 * r2;
    match n {
        2 => Ok(x),
        3 => Ok(x * x * x.ln() / 4.0),
        _ => Err(Error::domain(format!("target given for N = 2, 3 only (got {n})"))),
    }
}

/// Unit-product singular-value integral truncated on both sides,
/// `R > σ₁ > σ₂ > σ₃ > 1/R`, for N = 3.
pub fn condition_truncated_quadrature(n: usize, r: f64) -> Result<VolumeResult> {
    if n != 3 {
        return Err(Error::domain(format!("two-sided truncation implemented for N = 3 only (got {n})")));
    }
    check_radius(r)?;
    if r == 1.0 {
        return Ok(VolumeResult::empty(Method::Quadrature));
    }
    // σ₃ = 1/(σ₁σ₂), delta Jacobian 1/(σ₁σ₂); log variables add σ₁σ₂
    let f = |u1: f64, u2: f64| {
        let (a, b) = (u1.exp(), u2.exp());
        let c = 1.0 / (a * b);
        let (a2, b2, c2) = (a * a, b * b, c * c);
        (a2 - b2) * (a2 - c2) * (b2 - c2)
    };
    let ln_r = r.ln();
    let tol = default_tol();
    let nest = Nested::new();
    let est = nest.outer(
        |u1| {
            // σ₂ > σ₁^{-1/2} keeps σ₂ > σ₃; σ₁σ₂ < R keeps σ₃ > 1/R
            let lo = -0.5 * u1;
            let hi = u1.min(ln_r - u1);
            nest.inner(|u2| f(u1, u2), lo, hi, tol.inner())
        },
        0.0,
        ln_r,
        tol,
    )?;
    Ok(VolumeResult {
        value: est.value.max(0.0),
        abs_error: est.abs_error,
        method: Method::Quadrature,
        empty_domain: false,
    })
}

/// Ratio of `∫_{ℝ₊^N} ∏σ^{-1/2} e^{-σ} ∏|σⱼ - σₖ|` (by quadrature) to
/// `π^{-N/2} N! ∏_{j≤N} Γ(j/2)²`, for N = 2, 3.
pub fn selberg_laguerre_check(n: usize) -> Result<f64> {
    let closed = selberg_laguerre_closed(n)?;
    // σ = u², ordered u₁ > ⋯ > u_N > 0: N!·2^N ∫ e^{-Σu²} ∏(uⱼ² - uₖ²)
    const CUT: f64 = 9.0;
    let tol = Tolerance::new(1e-14, 1e-10);
    let ordered = match n {
        2 => {
            let nest = Nested::new();
            nest.outer(
                |a| {
                    nest.inner(
                        |b| (-(a * a + b * b)).exp() * (a * a - b * b),
                        0.0,
                        a,
                        tol.inner(),
                    )
                },
                0.0,
                CUT,
                tol,
            )?
        }
        3 => {
            let outer = Nested::new();
            let middle = Nested::new();
            outer.outer(
                |a| {
                    outer.inner(
                        |b| {
                            middle.inner(
                                |c| {
                                    let (a2, b2, c2) = (a * a, b * b, c * c);
                                    (-(a2 + b2 + c2)).exp() * (a2 - b2) * (a2 - c2) * (b2 - c2)
                                },
                                0.0,
                                b,
                                tol.inner().inner(),
                            )
                        },
                        0.0,
                        a,
                        tol.inner(),
                    )
                },
                0.0,
                CUT,
                tol,
            )?
        }
        _ => unreachable!("checked by selberg_laguerre_closed"),
    };
    let full = ordered.value * (ln_factorial(n) + n as f64 * std::f64::consts::LN_2).exp();
    Ok(full / closed)
}

/// `π^{-N/2} N! ∏_{j=1}^N Γ(j/2)²`.
pub fn selberg_laguerre_closed(n: usize) -> Result<f64> {
    if !(n == 2 || n == 3) {
        return Err(Error::domain(format!("Laguerre check implemented for N = 2, 3 (got {n})")));
    }
    let nf = n as f64;
    let ln = -nf / 2.0 * PI.ln()
        + ln_factorial(n)
        + (1..=n).map(|j| 2.0 * ln_gamma(j as f64 / 2.0)).sum::<f64>();
    Ok(ln.exp())
}
