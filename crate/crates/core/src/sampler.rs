//! Haar sampling of norm-truncated SL_N(ℝ).
//!
//! A Haar element is assembled as `O₁ diag(σ) O₂ᵀ` from two Haar orthogonal
//! factors and a singular-value vector drawn from the truncated
//! singular-value density. For N = 2 the singular values are sampled exactly
//! by CDF inversion; for N >= 3 a constrained Metropolis chain is used.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::volumes::Norm;

/// Norm constraint `‖M‖ <= radius` on sampled matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub norm: Norm,
    pub radius: f64,
}

impl Truncation {
    pub fn operator(radius: f64) -> Self {
        Self {
            norm: Norm::Operator,
            radius,
        }
    }

    pub fn two_norm(radius: f64) -> Self {
        Self {
            norm: Norm::TwoNorm,
            radius,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let feasible = match self.norm {
            Norm::Operator => self.radius > 1.0,
            // unit product forces Σσ² >= N
            Norm::TwoNorm => self.radius * self.radius > n as f64,
        };
        if !feasible || !self.radius.is_finite() {
            return Err(Error::domain(format!(
                "truncation {:?} at radius {} leaves no room for N = {n}",
                self.norm, self.radius
            )));
        }
        Ok(())
    }

    /// Strict for the operator norm, as the ordering constraint `R > σ₁` is.
    fn admits(&self, sigma: &[f64]) -> bool {
        match self.norm {
            Norm::Operator => sigma[0] < self.radius,
            Norm::TwoNorm => sigma.iter().map(|s| s * s).sum::<f64>() <= self.radius * self.radius,
        }
    }
}

/// Strictly decreasing positive reals with unit product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularValues {
    sigma: Vec<f64>,
}

const PRODUCT_TOL: f64 = 1e-12;

impl SingularValues {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::domain("empty singular-value vector"));
        }
        if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::domain("singular values must be positive and finite"));
        }
        if sigma.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::domain("singular values must be strictly decreasing"));
        }
        let log_product: f64 = sigma.iter().map(|s| s.ln()).sum();
        if log_product.abs() > PRODUCT_TOL {
            return Err(Error::domain(format!(
                "singular values must have unit product (log product {log_product:.3e})"
            )));
        }
        Ok(Self { sigma })
    }

    /// Completes `σ₁ > ⋯ > σ_{N-1}` with `σ_N = 1/∏σ`.
    pub fn from_leading(leading: &[f64]) -> Result<Self> {
        let mut sigma = leading.to_vec();
        sigma.push(1.0 / leading.iter().product::<f64>());
        Self::new(sigma)
    }

    /// Square roots of characteristic-polynomial zeros, reordered and
    /// renormalised to unit product.
    pub fn from_squared(zeros: &[f64]) -> Result<Self> {
        let mut sigma: Vec<f64> = zeros.iter().map(|x| x.sqrt()).collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        sigma.pop();
        Self::from_leading(&sigma)
    }

    /// The degenerate spectrum `(1, …, 1)` of an orthogonal matrix.
    pub fn identity(n: usize) -> Self {
        Self {
            sigma: vec![1.0; n.max(1)],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.sigma[0]
    }

    pub fn satisfies(&self, trunc: &Truncation) -> bool {
        trunc.admits(&self.sigma)
    }
}

/// Haar element of O(N): Gram–Schmidt on a Gaussian matrix.
pub fn sample_haar_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    assert!(n >= 1, "orthogonal group needs N >= 1");
    loop {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        if let Some(q) = gram_schmidt(g) {
            return q;
        }
    }
}

/// Modified Gram–Schmidt with one reorthogonalisation pass; `None` if rank-deficient.
fn gram_schmidt(mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.ncols();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = a.column(k).dot(&a.column(j));
                let qk = a.column(k).clone_owned();
                a.column_mut(j).axpy(-proj, &qk, 1.0);
            }
        }
        let norm = a.column(j).norm();
        if norm < 1e-10 {
            return None;
        }
        a.column_mut(j).unscale_mut(norm);
    }
    Some(a)
}

/// Largest singular value of the N = 2 exact sampler at uniform variate `u`.
pub fn sv_n2_from_uniform(radius: f64, u: f64) -> f64 {
    let w = radius - 1.0 / radius;
    let r = (w * u.sqrt() + (w * w * u + 4.0).sqrt()) / 2.0;
    r.clamp(1.0, radius)
}

/// Operator-norm bound equivalent to the 2-norm bound `R` for N = 2.
pub fn n2_effective_radius(trunc: &Truncation) -> Result<f64> {
    trunc.validate(2)?;
    Ok(match trunc.norm {
        Norm::Operator => trunc.radius,
        Norm::TwoNorm => {
            let r2 = trunc.radius * trunc.radius;
            (0.5 * (r2 + (r2 * r2 - 4.0).sqrt())).sqrt()
        }
    })
}

/// Exact N = 2 singular values by CDF inversion.
pub fn sample_sv_n2(trunc: &Truncation, rng: &mut Rng) -> Result<SingularValues> {
    let radius = n2_effective_radius(trunc)?;
    loop {
        let r = sv_n2_from_uniform(radius, rng.gen::<f64>());
        // u = 0 exactly gives the degenerate σ₁ = σ₂ = 1; redraw
        if r > 1.0 && r < radius {
            return SingularValues::new(vec![r, 1.0 / r]);
        }
    }
}

/// Unit-product configuration from nonnegative weights: log-σ are the
/// normalised weights shifted by `1/N` and scaled into `(-∞, log R)`.
pub fn dirichlet_from_weights(weights: &[f64], radius: f64) -> Vec<f64> {
    let n = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    let ln_r = radius.ln();
    let mut sigma: Vec<f64> = weights
        .iter()
        .map(|y| ((y / total - 1.0 / n) / (1.0 - 1.0 / n) * ln_r).exp())
        .collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma
}

/// Random admissible starting point for the singular-value chain.
pub fn dirichlet_initial(n: usize, trunc: &Truncation, rng: &mut Rng) -> Result<SingularValues> {
    if n < 2 {
        return Err(Error::domain(format!("need N >= 2, got {n}")));
    }
    trunc.validate(n)?;
    // σ < R/√N is enough for Σσ² < R²
    let radius = match trunc.norm {
        Norm::Operator => trunc.radius,
        Norm::TwoNorm => trunc.radius / (n as f64).sqrt(),
    };
    loop {
        let weights: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let sigma = dirichlet_from_weights(&weights, radius);
        if let Ok(sv) = SingularValues::from_leading(&sigma[..n - 1]) {
            if sv.satisfies(trunc) {
                return Ok(sv);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConfig {
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_sigma: f64,
    pub target_rejection: f64,
    pub seed: u64,
    /// Adapt `step_sigma` during burn-in; off reproduces a fixed proposal width.
    pub tune: bool,
}

impl ChainConfig {
    /// Burn-in 10%, thin 10, initial proposal width 1, tuned to 50% rejection.
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            burn_in: steps / 10,
            thin: 10,
            step_sigma: 1.0,
            target_rejection: 0.5,
            seed,
            tune: true,
        }
    }

    pub fn fixed_step(mut self, step_sigma: f64) -> Self {
        self.step_sigma = step_sigma;
        self.tune = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::domain("thin must be >= 1"));
        }
        if self.burn_in >= self.steps {
            return Err(Error::domain(format!(
                "burn-in {} must be below total steps {}",
                self.burn_in, self.steps
            )));
        }
        if !(self.step_sigma > 0.0) {
            return Err(Error::domain("proposal width must be positive"));
        }
        if !(self.target_rejection > 0.0 && self.target_rejection < 1.0) {
            return Err(Error::domain("target rejection must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Number of states the chain will emit.
    pub fn emitted(&self) -> usize {
        (self.steps - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ChainStats {
    pub steps: usize,
    pub emitted: usize,
    /// Post-burn-in proposals and acceptances.
    pub proposals: usize,
    pub accepted: usize,
    pub ordering_rejections: usize,
    pub step_sigma: f64,
    /// Largest gap between running and recomputed energy at checkpoints.
    pub max_energy_drift: f64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }
}

const TUNE_WINDOW: usize = 500;
const ENERGY_CHECK: usize = 10_000;

/// Metropolis chain on `(σ₁, …, σ_{N-1})` with `σ_N = 1/∏σ`.
///
/// Iterating yields every `thin`-th state after burn-in.
pub struct Chain {
    sigma: Vec<f64>,
    proposal: Vec<f64>,
    energy: f64,
    trunc: Truncation,
    cfg: ChainConfig,
    rng: Rng,
    step: usize,
    window_rejections: usize,
    stats: ChainStats,
}

/// `-Σ_{j<k} log|σⱼ² - σₖ²|`.
pub fn energy(sigma: &[f64]) -> f64 {
    let mut e = 0.0;
    for j in 0..sigma.len() {
        for k in j + 1..sigma.len() {
            e -= (sigma[j] * sigma[j] - sigma[k] * sigma[k]).abs().ln();
        }
    }
    e
}

/// Energy terms that involve index `a` or `b`.
fn partial_energy(sigma: &[f64], a: usize, b: usize) -> f64 {
    let mut e = 0.0;
    for (k, sk) in sigma.iter().enumerate() {
        if k != a {
            e -= (sigma[a] * sigma[a] - sk * sk).abs().ln();
        }
        if k != a && k != b {
            e -= (sigma[b] * sigma[b] - sk * sk).abs().ln();
        }
    }
    e
}

impl Chain {
    pub fn new(init: SingularValues, trunc: Truncation, cfg: ChainConfig, rng: Rng) -> Result<Self> {
        cfg.validate()?;
        let n = init.len();
        if n < 3 {
            return Err(Error::domain(format!("chain needs N >= 3, got {n}")));
        }
        trunc.validate(n)?;
        if !init.satisfies(&trunc) {
            return Err(Error::domain("initial state violates the norm truncation"));
        }
        let sigma = init.sigma;
        Ok(Self {
            energy: energy(&sigma),
            proposal: sigma.clone(),
            sigma,
            trunc,
            cfg,
            rng,
            step: 0,
            window_rejections: 0,
            stats: ChainStats {
                step_sigma: cfg.step_sigma,
                ..ChainStats::default()
            },
        })
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn state(&self) -> &[f64] {
        &self.sigma
    }

    /// One Metropolis update; returns whether the proposal was accepted.
    fn advance(&mut self) -> bool {
        let n = self.sigma.len();
        let last = n - 1;
        let j = self.rng.gen_range(0..last);
        let gamma: f64 = StandardNormal.sample(&mut self.rng);
        let moved = self.sigma[j] + self.cfg.step_sigma * gamma;

        self.proposal.copy_from_slice(&self.sigma);
        self.proposal[j] = moved;
        self.proposal[last] = 1.0 / self.proposal[..last].iter().product::<f64>();
        let p = &self.proposal;
        let ordered = moved > 0.0
            && (j == 0 || p[j - 1] > moved)
            && p[j] > p[j + 1]
            && p[last - 1] > p[last]
            && p[last] > 0.0
            && self.trunc.admits(p);
        let post_burn = self.step >= self.cfg.burn_in;
        if post_burn {
            self.stats.proposals += 1;
        }
        if !ordered {
            self.stats.ordering_rejections += usize::from(post_burn);
            return false;
        }
        let delta = partial_energy(&self.proposal, j, last) - partial_energy(&self.sigma, j, last);
        let log_ratio = (self.proposal[last] / self.sigma[last]).ln() - delta;
        let accept = log_ratio >= 0.0 || self.rng.gen::<f64>().ln() < log_ratio;
        if accept {
            std::mem::swap(&mut self.sigma, &mut self.proposal);
            self.energy += delta;
            if post_burn {
                self.stats.accepted += 1;
            }
        }
        accept
    }

    fn bookkeeping(&mut self, accepted: bool) {
        self.step += 1;
        if self.cfg.tune && self.step <= self.cfg.burn_in {
            self.window_rejections += usize::from(!accepted);
            if self.step.is_multiple_of(TUNE_WINDOW) {
                let rate = self.window_rejections as f64 / TUNE_WINDOW as f64;
                self.cfg.step_sigma *= if rate > self.cfg.target_rejection { 0.9 } else { 1.1 };
                self.window_rejections = 0;
                self.stats.step_sigma = self.cfg.step_sigma;
            }
        }
        if self.step.is_multiple_of(ENERGY_CHECK) {
            let full = energy(&self.sigma);
            let drift = (full - self.energy).abs() / full.abs().max(1.0);
            self.stats.max_energy_drift = self.stats.max_energy_drift.max(drift);
            self.energy = full;
        }
        self.stats.steps = self.step;
    }
}

impl Iterator for Chain {
    type Item = SingularValues;

    fn next(&mut self) -> Option<SingularValues> {
        loop {
            if self.step >= self.cfg.steps {
                return None;
            }
            let accepted = self.advance();
            self.bookkeeping(accepted);
            if self.step > self.cfg.burn_in && (self.step - self.cfg.burn_in).is_multiple_of(self.cfg.thin) {
                self.stats.emitted += 1;
                return Some(SingularValues {
                    sigma: self.sigma.clone(),
                });
            }
        }
    }
}

/// Metropolis singular-value chain for N >= 3.
pub fn mcmc_sv(
    trunc: Truncation,
    cfg: ChainConfig,
    init: SingularValues,
    stream: u64,
) -> Result<Chain> {
    Chain::new(init, trunc, cfg, crate::rng::stream_rng(cfg.seed, stream))
}

/// Density of the largest singular value for N = 3 under the operator-norm bound `R`.
pub fn p3_density(s: f64, radius: f64) -> f64 {
    if !(s > 1.0 && s < radius) {
        return 0.0;
    }
    let norm = crate::volumes::j_closed(3, radius).map(|v| v.value).unwrap_or(0.0);
    if norm <= 0.0 {
        return 0.0;
    }
    let numer = 0.25 * (s.powi(5) + s.powi(-7)) - (s * s + s.powi(-4)) + 1.5 / s;
    (numer / norm).max(0.0)
}

/// CDF of [`p3_density`].
pub fn p3_cdf(s: f64, radius: f64) -> f64 {
    if s <= 1.0 {
        return 0.0;
    }
    if s >= radius {
        return 1.0;
    }
    let j = |x: f64| crate::volumes::j_closed(3, x).map(|v| v.value).unwrap_or(0.0);
    j(s) / j(radius)
}

/// CDF of the largest N = 2 singular value under operator bound `R`.
pub fn n2_cdf(r: f64, radius: f64) -> f64 {
    if r <= 1.0 {
        return 0.0;
    }
    if r >= radius {
        return 1.0;
    }
    ((r - 1.0 / r) / (radius - 1.0 / radius)).powi(2)
}

/// Haar matrix `O₁ diag(σ) O₂ᵀ` with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub m: DMatrix<f64>,
    pub o1: DMatrix<f64>,
    pub o2: DMatrix<f64>,
    pub sv: SingularValues,
}

/// Assemble a unit-determinant matrix from singular values and Haar factors.
pub fn assemble_matrix(sv: SingularValues, rng: &mut Rng) -> SampleMatrix {
    let n = sv.len();
    let mut o1 = sample_haar_orthogonal(n, rng);
    let o2 = sample_haar_orthogonal(n, rng);
    if o1.determinant() * o2.determinant() < 0.0 {
        o1.column_mut(0).neg_mut();
    }
    let mut scaled = o1.clone();
    for (j, s) in sv.as_slice().iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    let m = scaled * o2.transpose();
    SampleMatrix { m, o1, o2, sv }
}

/// Unit-product singular values for N = 2 or chain output for N >= 3 never
/// drift: recomputing the product gives exactly the stored last entry.
pub fn spectrum_is_exact(sv: &SingularValues) -> bool {
    let s = sv.as_slice();
    let (lead, last) = s.split_at(s.len() - 1);
    (1.0 / lead.iter().product::<f64>() - last[0]).abs() <= 1e-15 * last[0].max(1.0)
}
