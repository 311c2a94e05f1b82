//! Vertical-line inverse Mellin quadrature.
//!
//! Evaluates `(1/2πi) ∫_{c-i∞}^{c+i∞} f(s) ds = (1/2π) ∫ f(c + it) dt` for
//! integrands that are analytic on the line and decay polynomially in `|t|`.
//! The infinite line is truncated at `|t| = T` and the discarded tail is
//! bounded from the caller's declared decay exponent (and, when present, the
//! oscillation frequency of the integrand).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Trapezoid,
    AdaptiveBisection,
}

/// Where and how finely to sample the integration line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    abscissa: f64,
    half_height: f64,
    nodes: usize,
    rule: QuadratureRule,
    /// Relative target for the truncated tail.
    pub tail_tol: f64,
    /// Relative target for successive node-doubling estimates.
    pub step_tol: f64,
    /// Raise `T` and the node count until both targets are met.
    pub refine: bool,
    pub max_half_height: f64,
    pub max_nodes: usize,
}

impl ContourSpec {
    /// `abscissa` must lie strictly right of `pole_bound`, the rightmost
    /// integrand pole declared by the caller.
    pub fn new(
        abscissa: f64,
        pole_bound: f64,
        half_height: f64,
        nodes: usize,
        rule: QuadratureRule,
    ) -> Result<Self> {
        if !(abscissa > pole_bound) || !abscissa.is_finite() {
            return Err(Error::domain(format!(
                "contour abscissa {abscissa} must exceed the rightmost pole {pole_bound}"
            )));
        }
        if !(half_height > 0.0) {
            return Err(Error::domain(format!("half height must be positive, got {half_height}")));
        }
        if nodes < 3 || nodes.is_multiple_of(2) {
            return Err(Error::domain(format!("node count must be odd and >= 3, got {nodes}")));
        }
        Ok(Self {
            abscissa,
            half_height,
            nodes,
            rule,
            tail_tol: 1e-10,
            step_tol: 1e-9,
            refine: false,
            max_half_height: 2e6,
            max_nodes: 1 << 24,
        })
    }

    /// Self-refining trapezoid contour: `c = max(1, pole_bound + 1)`.
    pub fn auto(pole_bound: f64) -> Self {
        let c = if pole_bound < 0.5 { 1.0 } else { pole_bound + 1.0 };
        let mut spec = Self::new(c, pole_bound, 16.0, 129, QuadratureRule::Trapezoid)
            .expect("default contour is valid");
        spec.refine = true;
        spec
    }

    pub fn with_abscissa(mut self, abscissa: f64, pole_bound: f64) -> Result<Self> {
        let fresh = Self::new(abscissa, pole_bound, self.half_height, self.nodes, self.rule)?;
        self.abscissa = fresh.abscissa;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tail_tol: f64, step_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self.step_tol = step_tol;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }
    pub fn half_height(&self) -> f64 {
        self.half_height
    }
    pub fn nodes(&self) -> usize {
        self.nodes
    }
    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }
}

/// Declared large-`|t|` behaviour of the integrand on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    /// `|f(c + it)| = O(|t|^-exponent)`; must exceed 1.
    pub exponent: f64,
    /// Asymptotic phase velocity of `f(c + it)` in `t`, if it oscillates.
    pub frequency: Option<f64>,
}

impl Decay {
    pub fn power(exponent: f64) -> Self {
        Self {
            exponent,
            frequency: None,
        }
    }

    pub fn oscillating(exponent: f64, frequency: f64) -> Self {
        Self {
            exponent,
            frequency: (frequency > 0.0).then_some(frequency),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MellinValue {
    pub value: f64,
    pub abs_error: f64,
    pub tail_bound: f64,
    pub discretization_error: f64,
    pub half_height: f64,
    pub nodes: usize,
}

/// `(1/2πi) ∫ f(s) ds` along `Re s = c`, real part only.
pub fn inverse_mellin<F>(f: F, spec: &ContourSpec, decay: Decay) -> Result<MellinValue>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    if !(decay.exponent > 1.0) {
        return Err(Error::NonDecaying(format!(
            "declared decay exponent {} must exceed 1",
            decay.exponent
        )));
    }
    let c = spec.abscissa;
    let line = |t: f64| f(Complex64::new(c, t));
    check_decay(&line, spec.half_height)?;

    let mut half_height = spec.half_height;
    let mut tail = tail_bound(&line, half_height, decay);
    if spec.refine {
        // the tail scale is set by the integral itself; a coarse pass gives it
        let mut scale = coarse_scale(&line, half_height);
        while tail > spec.tail_tol * scale && half_height < spec.max_half_height {
            half_height *= 2.0;
            tail = tail_bound(&line, half_height, decay);
            scale = scale.max(coarse_scale(&line, half_height.min(64.0)));
        }
    }

    let asymptotic = match (spec.rule, decay.frequency) {
        (QuadratureRule::Trapezoid, Some(omega)) if spec.refine && half_height > CORE_HALF_HEIGHT => {
            (omega * CORE_HALF_HEIGHT >= MIN_TAIL_PHASE)
                .then(|| oscillatory_tails(&line, CORE_HALF_HEIGHT, omega))
                .flatten()
        }
        _ => None,
    };
    if let Some((_, err)) = asymptotic {
        half_height = CORE_HALF_HEIGHT;
        tail = err;
    }
    let (raw, disc, nodes) = match (spec.rule, asymptotic) {
        (QuadratureRule::Trapezoid, Some((wings, _))) => {
            let (core, disc, nodes) = trapezoid(&line, half_height, spec)?;
            (core + wings, disc, nodes + 10)
        }
        (QuadratureRule::Trapezoid, _) if spec.refine && half_height > CORE_HALF_HEIGHT => {
            trapezoid_with_wings(&line, half_height, spec, decay)?
        }
        (QuadratureRule::Trapezoid, _) => trapezoid(&line, half_height, spec)?,
        (QuadratureRule::AdaptiveBisection, _) => adaptive(&line, half_height, spec)?,
    };
    let value = raw.re / (2.0 * PI);
    let imag = raw.im / (2.0 * PI);
    let scale = value.abs().max(f64::MIN_POSITIVE);
    if imag.abs() > 1e-8 * value.abs() + 1e-13 * l1_scale(&line, half_height) {
        return Err(Error::ConjugateSymmetry { real: value, imag });
    }
    if tail > spec.tail_tol * scale.max(1e-300) && tail > 1e-300 {
        return Err(Error::TailBound {
            bound: tail,
            tolerance: spec.tail_tol * scale,
            estimate: value,
        });
    }
    Ok(MellinValue {
        value,
        abs_error: tail + disc,
        tail_bound: tail,
        discretization_error: disc,
        half_height,
        nodes,
    })
}

fn check_decay<G: Fn(f64) -> Complex64>(line: &G, half_height: f64) -> Result<()> {
    let far = line(half_height).norm().max(line(-half_height).norm());
    let near = line(0.5 * half_height).norm().max(line(-0.5 * half_height).norm());
    if !far.is_finite() || !near.is_finite() {
        return Err(Error::NonDecaying("integrand is not finite on the contour".into()));
    }
    if far > near && far > 0.0 {
        return Err(Error::NonDecaying(format!(
            "|f| grows from {near:.3e} at T/2 to {far:.3e} at T = {half_height}"
        )));
    }
    Ok(())
}

/// Bound on `(1/2π)|∫_{|t|>T} f|`, the part of the line discarded by truncation.
fn tail_bound<G: Fn(f64) -> Complex64>(line: &G, half_height: f64, decay: Decay) -> f64 {
    let amp = line(half_height).norm().max(line(-half_height).norm());
    let p = decay.exponent;
    // |f(t)| <= amp (T/t)^p for t >= T, both half-lines
    let monotone = 2.0 * amp * half_height / (p - 1.0);
    let bound = match decay.frequency {
        // second mean value theorem on each half-line: |∫_T^∞ a cos φ| <= 2 a(T)/φ'(T).
        // gamma ratios pull the phase velocity below its limit by about p/t; allow twice that
        Some(omega) if omega - 2.0 * p / half_height > 0.0 => {
            monotone.min(2.0 * 2.0 * amp / (omega - 2.0 * p / half_height))
        }
        Some(_) => monotone,
        None => monotone,
    };
    bound / (2.0 * PI)
}

fn coarse_scale<G: Fn(f64) -> Complex64>(line: &G, half_height: f64) -> f64 {
    let n = 257;
    let h = 2.0 * half_height / (n - 1) as f64;
    let sum: f64 = (0..n)
        .map(|k| line(-half_height + h * k as f64).re)
        .sum();
    (sum * h / (2.0 * PI)).abs().max(1e-300)
}

fn l1_scale<G: Fn(f64) -> Complex64>(line: &G, half_height: f64) -> f64 {
    let n = 513;
    let h = 2.0 * half_height / (n - 1) as f64;
    (0..n)
        .map(|k| line(-half_height + h * k as f64).norm())
        .sum::<f64>()
        * h
        / (2.0 * PI)
}

/// Nested trapezoid on `[-T, T]`, halving the step until successive sums agree.
fn trapezoid<G>(line: &G, half_height: f64, spec: &ContourSpec) -> Result<(Complex64, f64, usize)>
where
    G: Fn(f64) -> Complex64 + Sync,
{
    let mut intervals = spec.nodes - 1;
    if spec.refine {
        // never start coarser than h = 1/2, where successive sums could agree by accident
        let fine = (4.0 * half_height).ceil() as usize;
        intervals = intervals.max(fine + fine % 2);
    }
    let mut h = 2.0 * half_height / intervals as f64;
    let mut sum = (0..=intervals)
        .map(|k| {
            let w = if k == 0 || k == intervals { 0.5 } else { 1.0 };
            w * line(-half_height + h * k as f64)
        })
        .sum::<Complex64>();
    let mut estimate = sum * h;
    if !spec.refine {
        // one halving gives the discretization estimate without changing the node budget
        let coarse = {
            let hc = 2.0 * h;
            let m = intervals / 2;
            if m >= 1 && intervals.is_multiple_of(2) {
                let s: Complex64 = (0..=m)
                    .map(|k| {
                        let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                        w * line(-half_height + hc * k as f64)
                    })
                    .sum();
                Some(s * hc)
            } else {
                None
            }
        };
        let disc = coarse.map_or(0.0, |c| (estimate.re - c.re).abs() / (2.0 * PI));
        return Ok((estimate, disc, spec.nodes));
    }
    loop {
        if intervals * 2 + 1 > spec.max_nodes {
            return Err(Error::NonConvergence(format!(
                "trapezoid contour needs more than {} nodes",
                spec.max_nodes
            )));
        }
        // new midpoints only
        let mid_h = h / 2.0;
        let mids = par_sum(intervals, |k| line(-half_height + mid_h * (2 * k + 1) as f64));
        sum += mids;
        intervals *= 2;
        h = mid_h;
        let next = sum * h;
        let diff = (next.re - estimate.re).abs();
        estimate = next;
        if diff <= spec.step_tol * next.re.abs() + 1e-300 {
            return Ok((estimate, diff / (2.0 * PI), intervals + 1));
        }
    }
}

/// Beyond this height the trapezoid hands over to adaptive quadrature.
const CORE_HALF_HEIGHT: f64 = 512.0;

/// Trapezoid on `[-T₀, T₀]` plus adaptive Gauss–Kronrod on the wings
/// `T₀ < |t| < T`, where the integrand is smooth and the fine trapezoid step
/// would waste nodes. Conjugate symmetry pairs `t` with `-t`, so the wings
/// contribute to the real part only.
fn trapezoid_with_wings<G>(
    line: &G,
    half_height: f64,
    spec: &ContourSpec,
    decay: Decay,
) -> Result<(Complex64, f64, usize)>
where
    G: Fn(f64) -> Complex64 + Sync,
{
    let (core, core_disc, core_nodes) = trapezoid(line, CORE_HALF_HEIGHT, spec)?;
    let tol = Tolerance::new(spec.step_tol * core.re.abs() / 10.0, spec.step_tol / 10.0);
    let paired = |t: f64| (line(t) + line(-t)).re;
    let wings = match decay.frequency {
        Some(omega) => {
            let period = 2.0 * PI / omega;
            let panels = ((half_height - CORE_HALF_HEIGHT) / period).ceil() as usize + 16;
            quad::integrate_panels(paired, CORE_HALF_HEIGHT, half_height, panels, tol, 4 * panels + quad::MAX_PANELS)?
        }
        None => quad::integrate_panels(
            |u: f64| {
                let t = u.exp();
                paired(t) * t
            },
            CORE_HALF_HEIGHT.ln(),
            half_height.ln(),
            64,
            tol,
            quad::MAX_PANELS,
        )?,
    };
    Ok((
        core + Complex64::new(wings.value, 0.0),
        core_disc + wings.abs_error / (2.0 * PI),
        core_nodes + wings.evaluations,
    ))
}

/// Smallest `ω T₀` for which the integration-by-parts tail is trusted.
const MIN_TAIL_PHASE: f64 = 100.0;

/// `∫_{|t|>T} f` for an oscillating integrand, from three terms of repeated
/// integration by parts on each half-line:
/// `∫_T^∞ e^L = -e^{L(T)} [1/L' + L''/L'³ + (3L''² - L'L''')/L'⁵]`.
/// Derivatives of `L = log f` come from finite differences of
/// ratios close to one, so no phase unwrapping is needed. Returns the sum and
/// the size of the last term, or `None` when the expansion is not small.
fn oscillatory_tails<G: Fn(f64) -> Complex64>(line: &G, t0: f64, omega: f64) -> Option<(Complex64, f64)> {
    let h = (0.5 / omega).min(0.5);
    let half_line = |sign: f64| -> Option<(Complex64, f64)> {
        let g = |t: f64| line(sign * t);
        let f0 = g(t0);
        if f0.norm() == 0.0 || !f0.norm().is_finite() {
            return None;
        }
        let d = |k: f64| (g(t0 + k * h) / f0).ln();
        let (p1, m1, p2, m2) = (d(1.0), d(-1.0), d(2.0), d(-2.0));
        let l1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        let l2 = (-p2 + 16.0 * p1 + 16.0 * m1 - m2) / (12.0 * h * h);
        let l3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
        let small = (l2 / (l1 * l1)).norm();
        if !(small < 1e-2) {
            return None;
        }
        let t1 = 1.0 / l1;
        let t2 = l2 / (l1 * l1 * l1);
        let t3 = (3.0 * l2 * l2 - l1 * l3) / l1.powi(5);
        Some((-f0 * (t1 + t2 + t3), (f0 * t3).norm() + (f0 * t2).norm() * small))
    };
    let (a, ea) = half_line(1.0)?;
    let (b, eb) = half_line(-1.0)?;
    Some((a + b, (ea + eb) / (2.0 * PI)))
}

fn par_sum<G>(count: usize, term: G) -> Complex64
where
    G: Fn(usize) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    if count < 4 * CHUNK {
        return (0..count).map(term).sum();
    }
    (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(count);
            (lo..hi).map(&term).sum::<Complex64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn adaptive<G: Fn(f64) -> Complex64>(
    line: &G,
    half_height: f64,
    spec: &ContourSpec,
) -> Result<(Complex64, f64, usize)> {
    let panels = (spec.nodes - 1) / 2;
    let tol = Tolerance::new(1e-300, spec.step_tol);
    let max_panels = (spec.max_nodes / 15).max(panels * 4);
    let re = quad::integrate_panels(|t| line(t).re, -half_height, half_height, panels, tol, max_panels)?;
    let im = quad::integrate_best_effort(
        &|t| line(t).im,
        -half_height,
        half_height,
        panels,
        Tolerance::new(1e-12 * re.value.abs(), 0.0),
        max_panels,
    );
    Ok((
        Complex64::new(re.value, im.value),
        re.abs_error / (2.0 * PI),
        re.evaluations + im.evaluations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::log_gamma_complex;

    fn gamma_c(s: Complex64) -> Complex64 {
        log_gamma_complex(s).unwrap().exp()
    }

    #[test]
    fn oscillatory_tail_matches_lorentzian() {
        // ∫ cos(ωt)/(1+t²) dt over the line is π e^{-ω}
        let omega = 3.0;
        let t0 = 512.0;
        let line = |t: f64| Complex64::new(0.0, omega * t).exp() / (1.0 + t * t);
        let (tail, err) = oscillatory_tails(&line, t0, omega).unwrap();
        let core = quad::integrate_panels(
            |t| (omega * t).cos() / (1.0 + t * t),
            -t0,
            t0,
            2048,
            Tolerance::new(1e-15, 1e-13),
            quad::MAX_PANELS,
        )
        .unwrap();
        let exact = PI * (-omega).exp() - core.value;
        assert!((tail.re - exact).abs() < 1e-11, "{} vs {exact}", tail.re);
        assert!(tail.im.abs() < 1e-12);
        assert!(err < 1e-9);
    }

    #[test]
    fn gamma_is_mellin_pair_of_exp() {
        // Γ(s) = ∫ e^{-t} t^{s-1} dt, so the inverse at t = 1 is e^{-1}
        let spec = ContourSpec::auto(0.0);
        let v = inverse_mellin(gamma_c, &spec, Decay::power(2.0)).unwrap();
        assert!((v.value - (-1f64).exp()).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn adaptive_rule_agrees() {
        let spec = ContourSpec::new(1.0, 0.0, 40.0, 41, QuadratureRule::AdaptiveBisection).unwrap();
        let v = inverse_mellin(gamma_c, &spec, Decay::power(2.0)).unwrap();
        assert!((v.value - (-1f64).exp()).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn rational_kernel_residues() {
        // (1/2πi)∫ x^s / (s (s+1)) ds = 1 - 1/x for x > 1
        let x: f64 = 2.5;
        let f = |s: Complex64| (s * x.ln()).exp() / (s * (s + 1.0));
        let spec = ContourSpec::auto(0.0);
        let v = inverse_mellin(f, &spec, Decay::oscillating(2.0, x.ln())).unwrap();
        assert!((v.value - (1.0 - 1.0 / x)).abs() < 1e-9, "{v:?}");
        // contour independence
        let shifted = spec.with_abscissa(1.5, 0.0).unwrap();
        let w = inverse_mellin(f, &shifted, Decay::oscillating(2.0, x.ln())).unwrap();
        assert!((v.value - w.value).abs() < v.abs_error + w.abs_error + 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ContourSpec::new(0.0, 0.0, 10.0, 11, QuadratureRule::Trapezoid).is_err());
        assert!(ContourSpec::new(1.0, 0.0, 10.0, 10, QuadratureRule::Trapezoid).is_err());
        assert!(ContourSpec::new(1.0, 0.0, -1.0, 11, QuadratureRule::Trapezoid).is_err());
        let spec = ContourSpec::auto(0.0);
        let flat = |_s: Complex64| Complex64::new(1.0, 0.0);
        assert!(matches!(
            inverse_mellin(flat, &spec, Decay::power(0.5)),
            Err(Error::NonDecaying(_))
        ));
        let growing = |s: Complex64| s * s;
        assert!(matches!(
            inverse_mellin(growing, &spec, Decay::power(2.0)),
            Err(Error::NonDecaying(_))
        ));
    }

    #[test]
    fn fixed_contour_too_short_reports_tail() {
        let x: f64 = 2.0;
        let f = |s: Complex64| (s * x.ln()).exp() / (s * (s + 1.0));
        let spec = ContourSpec::new(1.0, 0.0, 5.0, 101, QuadratureRule::Trapezoid).unwrap();
        assert!(matches!(
            inverse_mellin(f, &spec, Decay::power(2.0)),
            Err(Error::TailBound { .. })
        ));
    }
}
