//! Exact densities for reduced two-dimensional unimodular lattices, the
//! associated fundamental-domain volume, floor-function integrals behind the
//! mean lattice-point count, and exact SL₂(ℤ) counting.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_panels, Nested, Tolerance};
use crate::specfun::riemann_zeta_int;
use crate::volumes::Norm;

/// Largest possible shortest-vector length in a unimodular planar lattice.
pub fn hexagonal_length() -> f64 {
    (4.0f64 / 3.0).powf(0.25)
}

/// Which statistic of a reduced planar basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    Shortest,
    Second,
    Cosine,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Shortest, Density::Second, Density::Cosine];

    pub fn pdf(self, s: f64) -> f64 {
        match self {
            Density::Shortest => pdf_shortest_n2(s),
            Density::Second => pdf_second_n2(s),
            Density::Cosine => pdf_cosine_n2(s),
        }
    }

    pub fn cdf(self, s: f64) -> f64 {
        match self {
            Density::Shortest => cdf_shortest_n2(s),
            Density::Second => cdf_second_n2(s),
            Density::Cosine => cdf_cosine_n2(s),
        }
    }

    /// Support as a list of open intervals; the upper end may be infinite.
    pub fn support(self) -> Vec<(f64, f64)> {
        match self {
            Density::Shortest => vec![(0.0, hexagonal_length())],
            Density::Second => vec![(1.0, f64::INFINITY)],
            Density::Cosine => vec![(-0.5, 0.0), (0.0, 0.5)],
        }
    }

    /// Finite range used for histograms.
    pub fn plotting_range(self) -> (f64, f64) {
        match self {
            Density::Shortest => (0.0, hexagonal_length()),
            Density::Second => (1.0, 4.0),
            Density::Cosine => (-0.5, 0.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Density::Shortest => "shortest",
            Density::Second => "second",
            Density::Cosine => "cosine",
        }
    }
}

/// A density together with its numerically checked normalisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub which: Density,
    pub support: Vec<(f64, f64)>,
    pub normalization: f64,
}

impl DensityCurve {
    pub fn new(which: Density) -> Result<Self> {
        Ok(Self {
            which,
            support: which.support(),
            normalization: normalization(which)?,
        })
    }

    pub fn pdf(&self, s: f64) -> f64 {
        self.which.pdf(s)
    }

    pub fn cdf(&self, s: f64) -> f64 {
        self.which.cdf(s)
    }
}

/// Density of the shortest basis length.
pub fn pdf_shortest_n2(s: f64) -> f64 {
    if !(s > 0.0 && s < hexagonal_length()) {
        return 0.0;
    }
    let cut = if s > 1.0 { (s * s - 1.0 / (s * s)).sqrt() } else { 0.0 };
    (12.0 / PI * (s / 2.0 - cut)).max(0.0)
}

/// `√(u²-1) - arccos(1/u)` for `u >= 1`.
fn sec_primitive(u: f64) -> f64 {
    (u * u - 1.0).max(0.0).sqrt() - (1.0 / u).min(1.0).acos()
}

pub fn cdf_shortest_n2(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= hexagonal_length() {
        return 1.0;
    }
    let mut f = 3.0 * s * s / PI;
    if s > 1.0 {
        f -= 6.0 / PI * sec_primitive(s * s);
    }
    f.clamp(0.0, 1.0)
}

/// The two printed branches of the second-length density, evaluated
/// regardless of range: `(near, far)`.
pub fn second_density_branches(s: f64) -> (f64, f64) {
    let root = (s.powi(4) - 1.0).max(0.0).sqrt();
    let near = 12.0 / (PI * s) * root;
    // (2s²(s² - √(s⁴-1)) - 1)^{1/2} = s² - √(s⁴-1), written stably
    let far = 12.0 / (PI * s) / (s * s + root);
    (near, far)
}

/// Density of the second basis length.
pub fn pdf_second_n2(s: f64) -> f64 {
    if !(s > 1.0) || !s.is_finite() {
        return 0.0;
    }
    let (near, far) = second_density_branches(s);
    if s < hexagonal_length() {
        near
    } else {
        far
    }
}

pub fn cdf_second_n2(s: f64) -> f64 {
    if s <= 1.0 {
        return 0.0;
    }
    if s.is_infinite() {
        return 1.0;
    }
    let u = s * s;
    if s < hexagonal_length() {
        return 6.0 / PI * sec_primitive(u);
    }
    // mass beyond s: (6/π)(π/2 - arccos(1/u) - (u - √(u²-1)))
    let gap = 1.0 / (u + (u * u - 1.0).sqrt());
    let above = 6.0 / PI * ((1.0 / u).asin() - gap);
    (1.0 - above).clamp(0.0, 1.0)
}

/// Point past which the second-length density stays below `threshold`.
pub fn second_tail_cutoff(threshold: f64) -> f64 {
    let (mut lo, mut hi) = (hexagonal_length(), 2.0);
    while pdf_second_n2(hi) >= threshold {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pdf_second_n2(mid) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// Density of the cosine of the angle between the reduced basis vectors.
///
/// The change of variable `r₁₂ → cos θ` at fixed `r₁₁` has Jacobian
/// `1/(r₁₁(1-s²)^{3/2})`, hence the power 3/2 below.
pub fn pdf_cosine_n2(s: f64) -> f64 {
    let a = s.abs();
    if !(a > 0.0 && a < 0.5) {
        return 0.0;
    }
    -3.0 / (2.0 * PI) * (4.0 * a * a).ln() / (1.0 - a * a).powf(1.5)
}

/// Variant with `(1-s²)^{1/2}` in the denominator. Its total mass is about
/// 0.969, so it is not a probability density; kept for comparison.
pub fn pdf_cosine_n2_sqrt_variant(s: f64) -> f64 {
    let a = s.abs();
    if !(a > 0.0 && a < 0.5) {
        return 0.0;
    }
    -3.0 / (2.0 * PI) * (4.0 * a * a).ln() / (1.0 - a * a).sqrt()
}

/// Below this the cosine density is integrated analytically.
pub const COSINE_SPLIT: f64 = 1e-4;

/// `∫₀^a` of the cosine density for `0 <= a <= COSINE_SPLIT`, with
/// `(1-s²)^{-3/2} ≈ 1 + 3s²/2`.
fn cosine_inner(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let l = (4.0 * a * a).ln();
    let head = a * l - 2.0 * a;
    let second = 1.5 * (a.powi(3) / 3.0 * l - 2.0 * a.powi(3) / 9.0);
    -3.0 / (2.0 * PI) * (head + second)
}

fn cosine_half_mass(a: f64) -> f64 {
    let a = a.min(0.5);
    if a <= COSINE_SPLIT {
        return cosine_inner(a);
    }
    let outer = integrate(pdf_cosine_n2, COSINE_SPLIT, a, Tolerance::new(1e-15, 1e-13))
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
    cosine_inner(COSINE_SPLIT) + outer
}

pub fn cdf_cosine_n2(s: f64) -> f64 {
    if s <= -0.5 {
        return 0.0;
    }
    if s >= 0.5 {
        return 1.0;
    }
    let half = cosine_half_mass(s.abs());
    (0.5 + s.signum() * half).clamp(0.0, 1.0)
}

/// Total mass of a density by quadrature.
pub fn normalization(which: Density) -> Result<f64> {
    let tol = Tolerance::new(1e-14, 1e-12);
    let c = hexagonal_length();
    Ok(match which {
        Density::Shortest => {
            integrate(pdf_shortest_n2, 0.0, 1.0, tol)?.value
                + integrate(pdf_shortest_n2, 1.0, c, tol)?.value
        }
        Density::Second => {
            let cutoff = second_tail_cutoff(1e-12);
            let near = integrate(pdf_second_n2, 1.0, c, tol)?.value;
            // logarithmic variable for the algebraic tail
            let far = integrate_panels(
                |t: f64| {
                    let s = t.exp();
                    pdf_second_n2(s) * s
                },
                c.ln(),
                cutoff.ln(),
                8,
                tol,
                crate::quad::MAX_PANELS,
            )?
            .value;
            near + far
        }
        Density::Cosine => 2.0 * cosine_half_mass(0.5),
    })
}

/// Fundamental-domain volume for the reduction region including reflections.
pub fn vol_tilde_gamma() -> f64 {
    PI * PI / 3.0
}

/// Two-dimensional quadrature of the reduction region in `(r₁₁, r₁₂)`.
pub fn vol_tilde_gamma_quadrature() -> Result<f64> {
    let c = hexagonal_length();
    let tol = Tolerance::new(1e-13, 1e-11);
    let nested = Nested::new();
    let width = |r: f64| {
        let lower = if r >= 1.0 { (r * r - 1.0 / (r * r)).max(0.0).sqrt() } else { 0.0 };
        let upper = r / 2.0;
        // both signs of r₁₂
        2.0 * nested.inner(|_| 1.0, lower, upper, tol.inner())
    };
    let a = nested.outer(width, 0.0, 1.0, tol)?.value;
    let b = nested.outer(width, 1.0, c, tol)?.value;
    Ok(2.0 * PI * (a + b))
}

/// Result of a floor-function integral summed piecewise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorIntegral {
    pub partial_sum: f64,
    pub tail: f64,
    pub value: f64,
    pub terms: u64,
}

/// `∫₀¹ ⌊1/s⌋ s^k ds` for `k = 1, 2` as a sum over the unit intervals of
/// `⌊1/s⌋`, with the remainder beyond `p_max` replaced by a midpoint
/// integral of the summand.
pub fn floor_integral(power: u32, p_max: u64) -> Result<FloorIntegral> {
    if p_max == 0 {
        return Err(Error::domain("p_max must be at least 1"));
    }
    let term = |p: f64| -> f64 {
        let q = p + 1.0;
        match power {
            1 => 0.5 * (1.0 / p - 1.0 / q + 1.0 / (q * q)),
            _ => (1.0 / (p * p) - 1.0 / (q * q) + 1.0 / (q * q * q)) / 3.0,
        }
    };
    if !(power == 1 || power == 2) {
        return Err(Error::domain(format!("floor integral implemented for powers 1, 2 (got {power})")));
    }
    // smallest terms first
    let partial_sum: f64 = (1..=p_max).rev().map(|p| term(p as f64)).sum();
    let a = p_max as f64 + 0.5;
    let tail = match power {
        1 => 0.5 * ((1.0 / a).ln_1p() + 1.0 / (a + 1.0)),
        _ => (1.0 / a - 1.0 / (a + 1.0) + 0.5 / ((a + 1.0) * (a + 1.0))) / 3.0,
    };
    Ok(FloorIntegral {
        partial_sum,
        tail,
        value: partial_sum + tail,
        terms: p_max,
    })
}

/// Default number of summed terms.
pub const FLOOR_TERMS: u64 = 1_000_000;

/// `∫₀¹ ⌊1/s⌋ s ds` divided by `π²/12`.
pub fn siegel_integral_identity() -> Result<f64> {
    Ok(floor_integral(1, FLOOR_TERMS)?.value / (PI * PI / 12.0))
}

/// `∫₀¹ ⌊1/s⌋ s² ds` divided by `ζ(3)/3`.
pub fn siegel_cubic_identity() -> Result<f64> {
    Ok(floor_integral(2, FLOOR_TERMS)?.value / (riemann_zeta_int(3)? / 3.0))
}

/// Default upper limit on the radius for exact SL₂(ℤ) enumeration.
pub const SL2Z_RADIUS_CAP: f64 = 200.0;

/// Number of `γ ∈ SL₂(ℤ)` with `‖γ‖ <= R`.
///
/// Both norms reduce to a bound on the sum of squared entries: the operator
/// norm of a determinant-one 2×2 matrix satisfies `σ₁² + σ₁⁻² = Σ entries²`.
pub fn enumerate_sl2z(radius: f64, norm: Norm, cap: f64) -> Result<u64> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("radius must be finite and >= 0, got {radius}")));
    }
    if radius > cap {
        return Err(Error::CapExceeded(format!("radius {radius} above enumeration cap {cap}")));
    }
    let bound = match norm {
        Norm::TwoNorm => radius * radius,
        Norm::Operator if radius < 1.0 => return Ok(0),
        Norm::Operator => radius * radius + 1.0 / (radius * radius),
    };
    let bound = bound * (1.0 + 1e-12);
    let fmax = bound.floor() as i64;
    let m = (bound.sqrt().floor()) as i64;
    let within = |x: i64| x <= fmax;
    let count = (-m..=m)
        .into_par_iter()
        .map(|a| {
            let mut n = 0u64;
            let ra = fmax - a * a;
            let mb = isqrt(ra);
            for b in -mb..=mb {
                let rb = ra - b * b;
                let mc = isqrt(rb);
                for c in -mc..=mc {
                    let rc = rb - c * c;
                    if a != 0 {
                        let num = 1 + b * c;
                        if num % a == 0 {
                            let d = num / a;
                            if within(a * a + b * b + c * c + d * d) {
                                n += 1;
                            }
                        }
                    } else if b * c == -1 {
                        n += 2 * isqrt(rc) as u64 + 1;
                    }
                }
            }
            n
        })
        .sum();
    Ok(count)
}

fn isqrt(x: i64) -> i64 {
    if x < 0 {
        return -1;
    }
    let mut r = (x as f64).sqrt() as i64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}
