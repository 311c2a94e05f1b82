//! Histograms, goodness-of-fit statistics and the end-to-end sampling
//! pipelines (singular values → Haar matrix → reduced lattice basis).
//!
//! Pipelines split their work over a fixed number of logical workers, each
//! with its own random stream, and concatenate results in worker order. Output
//! therefore depends only on the seed and configuration.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytics::{hexagonal_length, Density};
use crate::error::{Error, Result};
use crate::lattice::{self, CountConvention, LatticeBasis};
use crate::rng::{split_counts, stream_rng};
use crate::sampler::{
    assemble_matrix, dirichlet_initial, mcmc_sv, p3_cdf, sample_sv_n2, ChainConfig, ChainStats, Truncation,
};
use crate::specfun::riemann_zeta_int;

/// Crate version stamped on every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Logical workers (independent random streams) per pipeline.
pub const WORKERS: usize = 16;

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 50;

/// Two-sided 1% critical value of the Kolmogorov distribution.
const KS_CRITICAL_1PCT: f64 = 1.627_624;

/// Minimum expected count per chi-squared cell.
const MIN_EXPECTED: f64 = 5.0;

const SIGNIFICANCE: f64 = 0.01;

/// Equal-width histogram normalised as a density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub normalized_heights: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Histogram of `samples` over `[lo, hi]`; points outside are an error.
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let slack = 1e-12 * (hi - lo).max(hi.abs());
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(x >= lo - slack && x <= hi + slack) {
                return Err(Error::domain(format!("sample {x} outside histogram range [{lo}, {hi}]")));
            }
            let k = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let bin_edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        Ok(Self::from_counts(bin_edges, counts))
    }

    /// Histogram over the observed range.
    pub fn over_data(samples: &[f64], bins: usize) -> Result<Self> {
        let (lo, hi) = min_max(samples).ok_or_else(|| Error::domain("no samples"))?;
        let hi = if hi > lo { hi } else { lo + 1.0 };
        Self::new(samples, lo, hi, bins)
    }

    fn from_counts(bin_edges: Vec<f64>, counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let normalized_heights = counts
            .iter()
            .zip(bin_edges.windows(2))
            .map(|(&c, e)| if total == 0 { 0.0 } else { c as f64 / (total as f64 * (e[1] - e[0])) })
            .collect();
        Self {
            bin_edges,
            counts,
            total,
            normalized_heights,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centres(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Riemann sum of the heights; 1 for any non-empty histogram.
    pub fn mass(&self) -> f64 {
        self.normalized_heights
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(h, e)| h * (e[1] - e[0]))
            .sum()
    }

    /// Add the counts of a histogram with identical edges.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::domain("cannot merge histograms with different edges"));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        *self = Self::from_counts(std::mem::take(&mut self.bin_edges), counts);
        Ok(())
    }
}

fn min_max(xs: &[f64]) -> Option<(f64, f64)> {
    xs.iter().fold(None, |acc, &x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}

/// Kolmogorov–Smirnov and chi-squared comparison against a model CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofReport {
    pub samples: usize,
    pub ks_statistic: f64,
    pub ks_threshold_1pct: f64,
    pub chi2_statistic: f64,
    pub chi2_dof: usize,
    pub chi2_pvalue: f64,
    pub pass: bool,
}

impl GofReport {
    fn assemble(samples: usize, ks: f64, chi2: f64, dof: usize) -> Result<Self> {
        let ks_threshold_1pct = ks_threshold(samples);
        let chi2_pvalue = chi2_survival(chi2, dof)?;
        Ok(Self {
            samples,
            ks_statistic: ks,
            ks_threshold_1pct,
            chi2_statistic: chi2,
            chi2_dof: dof,
            chi2_pvalue,
            pass: ks < ks_threshold_1pct && chi2_pvalue > SIGNIFICANCE,
        })
    }
}

/// 1% critical value of the one-sample KS statistic, with Stephens'
/// finite-sample correction.
pub fn ks_threshold(n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    KS_CRITICAL_1PCT / (rn + 0.12 + 0.11 / rn)
}

fn chi2_survival(stat: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Ok(if stat > 0.0 { 0.0 } else { 1.0 });
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// One-sample KS statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64 + Sync>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .reduce(|| 0.0, f64::max)
}

/// Two-sample KS statistic and its 1% critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSampleKs {
    pub statistic: f64,
    pub threshold_1pct: f64,
    pub pass: bool,
}

pub fn two_sample_ks(a: &[f64], b: &[f64]) -> TwoSampleKs {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let threshold = KS_CRITICAL_1PCT * ((na + nb) / (na * nb)).sqrt();
    TwoSampleKs {
        statistic: d,
        threshold_1pct: threshold,
        pass: d < threshold,
    }
}

/// Observed and expected cell counts, merged so each expected count is at least 5.
fn merged_cells(observed: &[f64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= MIN_EXPECTED {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    cells
}

fn chi2_from_cells(cells: &[(f64, f64)]) -> f64 {
    cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum()
}

/// KS and chi-squared tests of `samples` (histogrammed as `hist`) against a
/// model with CDF `cdf`. The outermost bins absorb model mass beyond the
/// histogram range.
pub fn goodness_of_fit<F: Fn(f64) -> f64 + Sync>(
    samples: &[f64],
    hist: &EmpiricalDistribution,
    cdf: F,
) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::domain("goodness of fit needs at least one sample"));
    }
    let n = samples.len() as f64;
    let k = hist.bins();
    let inner: Vec<f64> = hist.bin_edges[1..k].iter().map(|&e| cdf(e)).collect();
    let mut expected = Vec::with_capacity(k);
    let mut prev = 0.0;
    for f in inner.iter().chain(std::iter::once(&1.0)) {
        expected.push(n * (f - prev).max(0.0));
        prev = *f;
    }
    let observed: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let cells = merged_cells(&observed, &expected);
    let chi2 = chi2_from_cells(&cells);
    let ks = ks_statistic(samples, &cdf);
    GofReport::assemble(samples.len(), ks, chi2, cells.len().saturating_sub(1))
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (window `M` is the first lag with `M >= 5 τ(M)`).
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let c0 = centred.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for lag in 1..n / 2 {
        let c: f64 = centred[..n - lag].iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum::<f64>()
            / n as f64;
        tau += c / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Largest-singular-value check against the exact N = 3 density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Report {
    pub seed: u64,
    pub steps: usize,
    pub radius: f64,
    pub autocorrelation_time: f64,
    pub thin: usize,
    pub gof: GofReport,
    pub histogram: EmpiricalDistribution,
    pub chain: ChainStats,
}

pub const FIG1_RADIUS: f64 = 4.0;
pub const FIG1_STEPS: usize = 500_000;

/// N = 3 chain under `σ₁ < 4`; the σ₁ trace is thinned by twice its
/// integrated autocorrelation time before testing.
pub fn reproduce_fig1(seed: u64, steps: usize) -> Result<Fig1Report> {
    let trunc = Truncation::operator(FIG1_RADIUS);
    let mut rng = stream_rng(seed, WORKERS as u64);
    let init = dirichlet_initial(3, &trunc, &mut rng)?;
    let cfg = ChainConfig {
        thin: 1,
        ..ChainConfig::new(steps, seed)
    };
    let mut chain = mcmc_sv(trunc, cfg, init, 0)?;
    let trace: Vec<f64> = chain.by_ref().map(|sv| sv.largest()).collect();
    let stats = chain.stats();
    if trace.is_empty() {
        return Err(Error::domain("chain emitted no states"));
    }
    let tau = integrated_autocorrelation(&trace);
    let thin = (2.0 * tau).ceil().max(1.0) as usize;
    let kept: Vec<f64> = trace.iter().step_by(thin).cloned().collect();
    let histogram = EmpiricalDistribution::new(&kept, 1.0, FIG1_RADIUS, DEFAULT_BINS)?;
    let gof = goodness_of_fit(&kept, &histogram, |s| p3_cdf(s, FIG1_RADIUS))?;
    Ok(Fig1Report {
        seed,
        steps,
        radius: FIG1_RADIUS,
        autocorrelation_time: tau,
        thin,
        gof,
        histogram,
        chain: stats,
    })
}

/// Reduced planar basis statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarSample {
    pub shortest: f64,
    pub second: f64,
    pub cosine: f64,
}

/// One density compared with its histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityFit {
    pub which: Density,
    pub gof: GofReport,
    pub histogram: EmpiricalDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Report {
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    pub fits: Vec<DensityFit>,
    pub max_shortest: f64,
    pub max_abs_cosine: f64,
    /// Positive cosines against mirrored negative ones.
    pub cosine_symmetry: TwoSampleKs,
    pub pass: bool,
}

pub const FIG2_SAMPLES: usize = 100_000;
pub const REDUCTION_RADIUS: f64 = 100.0;

/// Haar N = 2 lattices with `σ₁ < radius`, reduced by Lagrange–Gauss.
pub fn sample_planar(samples: usize, radius: f64, seed: u64) -> Result<Vec<PlanarSample>> {
    let trunc = Truncation::operator(radius);
    let parts: Vec<Result<Vec<PlanarSample>>> = split_counts(samples, WORKERS)
        .into_par_iter()
        .enumerate()
        .map(|(w, count)| {
            let mut rng = stream_rng(seed, w as u64);
            (0..count)
                .map(|_| {
                    let sv = sample_sv_n2(&trunc, &mut rng)?;
                    let m = assemble_matrix(sv, &mut rng);
                    let red = lattice::lagrange_gauss(&LatticeBasis::new(m.m)?)?;
                    Ok(PlanarSample {
                        shortest: red.lengths[0],
                        second: red.lengths[1],
                        cosine: red.cosines[0],
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn reproduce_fig2(seed: u64, samples: usize, radius: f64) -> Result<Fig2Report> {
    let data = sample_planar(samples, radius, seed)?;
    let mut fits = Vec::new();
    for which in Density::ALL {
        let xs: Vec<f64> = data
            .iter()
            .map(|p| match which {
                Density::Shortest => p.shortest,
                Density::Second => p.second,
                Density::Cosine => p.cosine,
            })
            .collect();
        let histogram = match which {
            Density::Second => EmpiricalDistribution::over_data(&xs, DEFAULT_BINS)?,
            _ => {
                let (lo, hi) = which.plotting_range();
                EmpiricalDistribution::new(&xs, lo, hi, DEFAULT_BINS)?
            }
        };
        let gof = goodness_of_fit(&xs, &histogram, |s| which.cdf(s))?;
        fits.push(DensityFit { which, gof, histogram });
    }
    let max_shortest = data.iter().map(|p| p.shortest).fold(0.0, f64::max);
    let max_abs_cosine = data.iter().map(|p| p.cosine.abs()).fold(0.0, f64::max);
    let pos: Vec<f64> = data.iter().filter(|p| p.cosine > 0.0).map(|p| p.cosine).collect();
    let neg: Vec<f64> = data.iter().filter(|p| p.cosine < 0.0).map(|p| -p.cosine).collect();
    let cosine_symmetry = two_sample_ks(&pos, &neg);
    let pass = fits.iter().all(|f| f.gof.pass)
        && max_shortest <= hexagonal_length()
        && max_abs_cosine <= 0.5;
    Ok(Fig2Report {
        seed,
        samples,
        radius,
        fits,
        max_shortest,
        max_abs_cosine,
        cosine_symmetry,
        pass,
    })
}

/// Lengths and pairwise cosines of a reduced three-dimensional basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialSample {
    pub lengths: [f64; 3],
    /// Pairs (1,2), (1,3), (2,3).
    pub cosines: [f64; 3],
}

/// Burn-in for N = 3 chains feeding lattice pipelines; long enough for the
/// proposal width to adapt from 1 to the scale of the truncation radius.
pub const LATTICE_CHAIN_BURN_IN: usize = 50_000;
/// Chain states between consecutive emitted samples.
pub const LATTICE_CHAIN_THIN: usize = 10;

/// Haar N = 3 lattices with `σ₁ < radius`, singular values from the
/// Metropolis chain, reduced by the greedy three-dimensional algorithm.
pub fn sample_spatial(samples: usize, radius: f64, seed: u64) -> Result<(Vec<SpatialSample>, ChainStats)> {
    let trunc = Truncation::operator(radius);
    let parts: Vec<Result<(Vec<SpatialSample>, ChainStats)>> = split_counts(samples, WORKERS)
        .into_par_iter()
        .enumerate()
        .map(|(w, count)| {
            let mut rng = stream_rng(seed, (WORKERS + w) as u64);
            if count == 0 {
                return Ok((Vec::new(), ChainStats::default()));
            }
            let init = dirichlet_initial(3, &trunc, &mut rng)?;
            let cfg = ChainConfig {
                steps: LATTICE_CHAIN_BURN_IN + count * LATTICE_CHAIN_THIN,
                burn_in: LATTICE_CHAIN_BURN_IN,
                thin: LATTICE_CHAIN_THIN,
                ..ChainConfig::new(1, seed)
            };
            let mut chain = mcmc_sv(trunc, cfg, init, w as u64)?;
            let mut out = Vec::with_capacity(count);
            for sv in chain.by_ref() {
                let m = assemble_matrix(sv, &mut rng);
                let red = lattice::semaev_reduce(&LatticeBasis::new(m.m)?)?;
                out.push(SpatialSample {
                    lengths: [red.lengths[0], red.lengths[1], red.lengths[2]],
                    cosines: [red.cosines[0], red.cosines[1], red.cosines[2]],
                });
            }
            Ok((out, chain.stats()))
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    let mut stats = ChainStats::default();
    for p in parts {
        let (s, st) = p?;
        out.extend(s);
        stats.steps += st.steps;
        stats.emitted += st.emitted;
        stats.proposals += st.proposals;
        stats.accepted += st.accepted;
        stats.ordering_rejections += st.ordering_rejections;
        stats.max_energy_drift = stats.max_energy_drift.max(st.max_energy_drift);
        stats.step_sigma = stats.step_sigma.max(st.step_sigma);
    }
    Ok((out, stats))
}

/// Extremes observed over a run of reduced three-dimensional bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialExtremes {
    pub max_shortest: f64,
    pub min_second: f64,
    pub min_third: f64,
    pub max_abs_cosines: [f64; 3],
}

impl SpatialExtremes {
    pub fn of(data: &[SpatialSample]) -> Self {
        let mut e = Self {
            max_shortest: 0.0,
            min_second: f64::INFINITY,
            min_third: f64::INFINITY,
            max_abs_cosines: [0.0; 3],
        };
        for s in data {
            e.max_shortest = e.max_shortest.max(s.lengths[0]);
            e.min_second = e.min_second.min(s.lengths[1]);
            e.min_third = e.min_third.min(s.lengths[2]);
            for k in 0..3 {
                e.max_abs_cosines[k] = e.max_abs_cosines[k].max(s.cosines[k].abs());
            }
        }
        e
    }
}

/// Upper end of the range where the shortest length follows `C s²`.
pub const SMALL_S_LIMIT: f64 = 1.0 / 3.0;

/// Coefficient `C = 2π/ζ(3)` of the small-length law `p(s) = C s²`.
pub fn small_s_coefficient() -> Result<f64> {
    Ok(2.0 * PI / riemann_zeta_int(3)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Report {
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    /// Shortest, second and third lengths.
    pub lengths: Vec<EmpiricalDistribution>,
    /// Cosines of pairs (1,2), (1,3), (2,3).
    pub cosines: Vec<EmpiricalDistribution>,
    pub extremes: SpatialExtremes,
    /// Shortest lengths below [`SMALL_S_LIMIT`] against `C s²`.
    pub small_s: GofReport,
    pub small_s_histogram: EmpiricalDistribution,
    pub chain: ChainStats,
}

pub const FIG3_SAMPLES: usize = 100_000;

/// Chi-squared of the small-length window against the absolute law `C s²`
/// (the window total is not conditioned on, so every cell is a degree of
/// freedom); KS of the conditional shape `(s/μ)³`.
pub fn small_s_test(shortest: &[f64], bins: usize) -> Result<(GofReport, EmpiricalDistribution)> {
    let c = small_s_coefficient()?;
    let mu = SMALL_S_LIMIT;
    let n = shortest.len() as f64;
    let window: Vec<f64> = shortest.iter().cloned().filter(|&s| s < mu).collect();
    let hist = EmpiricalDistribution::new(&window, 0.0, mu, bins)?;
    let expected: Vec<f64> = hist
        .bin_edges
        .windows(2)
        .map(|e| n * c * (e[1].powi(3) - e[0].powi(3)) / 3.0)
        .collect();
    let observed: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let cells = merged_cells(&observed, &expected);
    let chi2 = chi2_from_cells(&cells);
    let ks = if window.is_empty() {
        1.0
    } else {
        ks_statistic(&window, |s| (s / mu).clamp(0.0, 1.0).powi(3))
    };
    Ok((GofReport::assemble(window.len(), ks, chi2, cells.len())?, hist))
}

pub fn reproduce_fig3(seed: u64, samples: usize, radius: f64) -> Result<Fig3Report> {
    let (data, chain) = sample_spatial(samples, radius, seed)?;
    let column = |f: &dyn Fn(&SpatialSample) -> f64| -> Vec<f64> { data.iter().map(f).collect() };
    let mut lengths = Vec::new();
    let mut cosines = Vec::new();
    for k in 0..3 {
        lengths.push(EmpiricalDistribution::over_data(&column(&|s| s.lengths[k]), DEFAULT_BINS)?);
        cosines.push(EmpiricalDistribution::new(&column(&|s| s.cosines[k]), -0.5, 0.5, DEFAULT_BINS)
            .or_else(|_| EmpiricalDistribution::over_data(&column(&|s| s.cosines[k]), DEFAULT_BINS))?);
    }
    let (small_s, small_s_histogram) = small_s_test(&column(&|s| s.lengths[0]), DEFAULT_BINS)?;
    Ok(Fig3Report {
        seed,
        samples,
        radius,
        lengths,
        cosines,
        extremes: SpatialExtremes::of(&data),
        small_s,
        small_s_histogram,
        chain,
    })
}

/// Mean lattice-point count in a ball against the ball's volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiegelReport {
    pub n: usize,
    pub radius: f64,
    pub lattices: usize,
    pub seed: u64,
    pub convention: CountConvention,
    pub sampling_radius: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub target: f64,
    pub z_score: f64,
    pub within_3se: bool,
}

/// Default truncation radius for the Haar lattices of the mean-value check.
/// The cusp region missed by truncation shifts the N = 2 mean by about
/// `1/R`, so the cap must be large compared with the inverse standard error.
pub const SIEGEL_SAMPLING_RADIUS: f64 = 1e4;

pub fn siegel_check(n: usize, radius: f64, lattices: usize, seed: u64) -> Result<SiegelReport> {
    siegel_check_with(n, radius, lattices, seed, SIEGEL_SAMPLING_RADIUS, CountConvention::AllVectors)
}

pub fn siegel_check_with(
    n: usize,
    radius: f64,
    lattices: usize,
    seed: u64,
    sampling_radius: f64,
    convention: CountConvention,
) -> Result<SiegelReport> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
    }
    if lattices < 2 {
        return Err(Error::domain("need at least two lattices for a standard error"));
    }
    let counts: Vec<f64> = match n {
        2 => {
            let trunc = Truncation::operator(sampling_radius);
            let parts: Vec<Result<Vec<f64>>> = split_counts(lattices, WORKERS)
                .into_par_iter()
                .enumerate()
                .map(|(w, count)| {
                    let mut rng = stream_rng(seed, w as u64);
                    (0..count)
                        .map(|_| {
                            let sv = sample_sv_n2(&trunc, &mut rng)?;
                            let m = assemble_matrix(sv, &mut rng);
                            count_reduced(m.m, radius, convention)
                        })
                        .collect()
                })
                .collect();
            parts.into_iter().collect::<Result<Vec<_>>>()?.concat()
        }
        3 => {
            let trunc = Truncation::operator(sampling_radius);
            let parts: Vec<Result<Vec<f64>>> = split_counts(lattices, WORKERS)
                .into_par_iter()
                .enumerate()
                .map(|(w, count)| {
                    let mut rng = stream_rng(seed, (WORKERS + w) as u64);
                    if count == 0 {
                        return Ok(Vec::new());
                    }
                    let init = dirichlet_initial(3, &trunc, &mut rng)?;
                    let cfg = ChainConfig {
                        steps: LATTICE_CHAIN_BURN_IN + count * LATTICE_CHAIN_THIN,
                        burn_in: LATTICE_CHAIN_BURN_IN,
                        thin: LATTICE_CHAIN_THIN,
                        ..ChainConfig::new(1, seed)
                    };
                    let chain = mcmc_sv(trunc, cfg, init, w as u64)?;
                    let mut out = Vec::with_capacity(count);
                    for sv in chain {
                        let m = assemble_matrix(sv, &mut rng);
                        out.push(count_reduced(m.m, radius, convention)?);
                    }
                    Ok(out)
                })
                .collect();
            parts.into_iter().collect::<Result<Vec<_>>>()?.concat()
        }
        _ => return Err(Error::domain(format!("mean-value check implemented for N = 2, 3 (got {n})"))),
    };
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / m;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (m - 1.0);
    let standard_error = (var / m).sqrt();
    let volume = match n {
        2 => PI * radius * radius,
        _ => 4.0 / 3.0 * PI * radius.powi(3),
    };
    let target = match convention {
        CountConvention::AllVectors => volume,
        CountConvention::PairsOnce => volume / 2.0,
    };
    let z_score = if standard_error > 0.0 { (mean - target) / standard_error } else { f64::INFINITY };
    Ok(SiegelReport {
        n,
        radius,
        lattices,
        seed,
        convention,
        sampling_radius,
        mean,
        standard_error,
        target,
        z_score,
        within_3se: z_score.abs() < 3.0,
    })
}

fn count_reduced(m: nalgebra::DMatrix<f64>, radius: f64, convention: CountConvention) -> Result<f64> {
    let basis = LatticeBasis::new(m)?;
    let red = lattice::reduce(&basis)?;
    Ok(lattice::count_points_in_ball(&red, radius, convention, lattice::DEFAULT_NODE_CAP)? as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_mass() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let h = EmpiricalDistribution::new(&xs, 0.0, 1.0, 7).unwrap();
        assert_eq!(h.total, 1000);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert!((h.mass() - 1.0).abs() < 1e-12);
        assert!(EmpiricalDistribution::new(&[2.0], 0.0, 1.0, 3).is_err());
        let mut a = h.clone();
        a.merge(&h).unwrap();
        assert_eq!(a.total, 2000);
    }

    #[test]
    fn uniform_gof() {
        let mut rng = stream_rng(3, 0);
        use rand::Rng as _;
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let h = EmpiricalDistribution::new(&xs, 0.0, 1.0, 50).unwrap();
        let r = goodness_of_fit(&xs, &h, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.chi2_dof, 49);
        let bad = goodness_of_fit(&xs, &h, |x| x.clamp(0.0, 1.0).powf(1.1)).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn chi2_cells_merge() {
        let cells = merged_cells(&[1.0, 1.0, 10.0, 0.0], &[3.0, 2.0, 10.0, 0.5]);
        assert_eq!(cells, vec![(2.0, 5.0), (10.0, 10.5)]);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        let mut rng = stream_rng(5, 0);
        use rand_distr::{Distribution, StandardNormal};
        let rho: f64 = 0.8;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + e;
                x
            })
            .collect();
        let tau = integrated_autocorrelation(&xs);
        // exact: (1+ρ)/(2(1-ρ)) = 4.5
        assert!((tau - 4.5).abs() < 0.4, "{tau}");
    }

    #[test]
    fn two_sample_identical() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = two_sample_ks(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn small_fig2_is_deterministic() {
        let a = reproduce_fig2(9, 2000, 100.0).unwrap();
        let b = reproduce_fig2(9, 2000, 100.0).unwrap();
        assert_eq!(a, b);
        for f in &a.fits {
            assert_eq!(f.histogram.total, 2000);
        }
        assert!(a.max_shortest <= hexagonal_length());
    }

    #[test]
    fn short_fig1_is_well_formed() {
        let r = reproduce_fig1(1, 1000).unwrap();
        assert!(r.gof.samples > 0);
        assert_eq!(r.histogram.total as usize, r.gof.samples);
    }
}
