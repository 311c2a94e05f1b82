//! `unimodular-lab`: volumes, sampling, reduction and figure pipelines from
//! the command line.
//!
//! Exit codes: 0 success, 1 goodness-of-fit failure, 2 input error,
//! 3 numerical non-convergence.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{fmt_float, Format, Sink, Table};
use unimodular_core::analytics::{self, Density};
use unimodular_core::charpoly::{self, McCharPoly};
use unimodular_core::harness::{self, GofReport};
use unimodular_core::lattice::{self, CountConvention, LatticeBasis};
use unimodular_core::rng::{self, stream_rng};
use unimodular_core::sampler::{self, ChainConfig, Truncation};
use unimodular_core::specfun::ContourSpec;
use unimodular_core::volumes::{self, Method, Norm};
use unimodular_core::{AveragedCharPoly, DMatrix, Error};

const SCHEMA_VERSION: u32 = 1;
const DEFAULT_SEED: u64 = 2024;

#[derive(Parser)]
#[command(name = "unimodular-lab", version, about = "Volumes, Haar sampling and lattice reduction for SL_N(R)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Random seed; every stochastic output is a function of it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; reports default to JSON, tables to CSV.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Norm-truncated volume of SL_N(R) or GL_N(R).
    Volume(VolumeArgs),
    /// Haar-distributed singular values (and optionally matrices).
    Sample(SampleArgs),
    /// Averaged characteristic polynomial of MᵀM and its zeros.
    Charpoly(CharpolyArgs),
    /// Reduce lattice bases read from CSV (one matrix per row, row-major).
    Reduce(ReduceArgs),
    /// Exact densities for reduced planar lattices on a grid.
    Density(DensityArgs),
    /// Count SL2(Z) elements of bounded norm.
    Count(CountArgs),
    /// Largest singular value histogram for N = 3 against its exact density.
    Fig1(Fig1Args),
    /// Reduced planar lattice statistics against their exact densities.
    Fig2(Fig2Args),
    /// Reduced three-dimensional lattice statistics.
    Fig3(Fig3Args),
    /// Mean lattice-point count in a ball against the ball volume.
    Siegel(SiegelArgs),
    /// Fast self-check of the deterministic identities.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Group {
    Sl,
    Gl,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum NormArg {
    Op,
    L2,
    Cond,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Closed,
    Contour,
    Quadrature,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long, value_enum, default_value_t = Group::Sl)]
    group: Group,
    #[arg(long, value_enum, default_value_t = NormArg::Op)]
    norm: NormArg,
    #[arg(long)]
    n: usize,
    /// Norm bound (SL_N and the condition-number truncation).
    #[arg(long)]
    r: Option<f64>,
    /// Bound on ‖M‖ (GL_N).
    #[arg(long)]
    r1: Option<f64>,
    /// Bound on ‖M⁻¹‖ (GL_N).
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Contour)]
    method: MethodArg,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum SimpleNorm {
    Op,
    L2,
}

impl SimpleNorm {
    fn norm(self) -> Norm {
        match self {
            SimpleNorm::Op => Norm::Operator,
            SimpleNorm::L2 => Norm::TwoNorm,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: f64,
    #[arg(long, value_enum, default_value_t = SimpleNorm::Op)]
    norm: SimpleNorm,
    /// Chain length for N >= 3; number of exact draws for N = 2.
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    /// Also emit the assembled matrix entries (row-major), readable by `reduce`.
    #[arg(long)]
    matrices: bool,
}

#[derive(Args)]
struct CharpolyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: f64,
    /// Cross-check the coefficients by Monte Carlo with this many samples.
    #[arg(long)]
    verify_mc: Option<usize>,
}

#[derive(Args)]
struct ReduceArgs {
    /// CSV with a header row; each record holds N² entries in row-major order
    /// (extra leading columns named seed, step, version, generator or sigma* are ignored).
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Shortest,
    Second,
    Cosine,
}

impl Which {
    fn density(self) -> Density {
        match self {
            Which::Shortest => Density::Shortest,
            Which::Second => Density::Second,
            Which::Cosine => Density::Cosine,
        }
    }
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, value_enum)]
    which: Which,
    /// Number of grid points.
    #[arg(long, default_value_t = 201)]
    grid: usize,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    r: f64,
    #[arg(long, value_enum, default_value_t = SimpleNorm::L2)]
    norm: SimpleNorm,
    #[arg(long, default_value_t = analytics::SL2Z_RADIUS_CAP)]
    cap: f64,
}

#[derive(Args)]
struct Fig1Args {
    #[arg(long, default_value_t = harness::FIG1_STEPS)]
    steps: usize,
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long, default_value_t = harness::FIG2_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = harness::REDUCTION_RADIUS)]
    radius: f64,
}

#[derive(Args)]
struct Fig3Args {
    #[arg(long, default_value_t = harness::FIG3_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = harness::REDUCTION_RADIUS)]
    radius: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    All,
    Pairs,
}

#[derive(Args)]
struct SiegelArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0.8)]
    r: f64,
    #[arg(long, default_value_t = 100_000)]
    lattices: usize,
    /// Operator-norm truncation of the sampled Haar matrices.
    #[arg(long, default_value_t = harness::SIEGEL_SAMPLING_RADIUS)]
    sampling_radius: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::All)]
    convention: ConventionArg,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run the goodness-of-fit smoke tests at full figure sizes.
    #[arg(long)]
    full: bool,
}

/// Result of a subcommand: whether its statistical checks passed.
struct Outcome {
    pass: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self { pass: true }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    version: &'a str,
    generator: &'a str,
    seed: u64,
    result: T,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_input_error() => 2,
        Some(Error::CapExceeded(_)) => 2,
        Some(_) => 3,
        // I/O, parsing and argument problems
        None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let c = cli.common;
    match cli.command {
        Command::Volume(a) => volume(&c, a),
        Command::Sample(a) => sample(&c, a),
        Command::Charpoly(a) => charpoly_cmd(&c, a),
        Command::Reduce(a) => reduce(&c, a),
        Command::Density(a) => density(&c, a),
        Command::Count(a) => count(&c, a),
        Command::Fig1(a) => fig1(&c, a),
        Command::Fig2(a) => fig2(&c, a),
        Command::Fig3(a) => fig3(&c, a),
        Command::Siegel(a) => siegel(&c, a),
        Command::Verify(a) => verify(&c, a.full),
    }
}

fn report<T: Serialize>(c: &Common, command: &str, result: T) -> anyhow::Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        version: harness::VERSION,
        generator: rng::GENERATOR_NAME,
        seed: c.seed,
        result,
    };
    let mut sink = Sink::open(c.out.as_deref())?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&env)?,
        Format::Csv => sink.flat_csv(&serde_json::to_value(&env)?, c.seed)?,
    }
    Ok(())
}

fn table(c: &Common, t: Table) -> anyhow::Result<()> {
    let mut sink = Sink::open(c.out.as_deref())?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => sink.table_csv(&t)?,
        Format::Json => sink.table_json(&t, SCHEMA_VERSION)?,
    }
    Ok(())
}

fn need(v: Option<f64>, name: &str) -> anyhow::Result<f64> {
    v.ok_or_else(|| anyhow::anyhow!("--{name} is required for this combination"))
}

#[derive(Serialize)]
struct VolumeOut {
    group: Group,
    norm: NormArg,
    n: usize,
    r: Option<f64>,
    r1: Option<f64>,
    r2: Option<f64>,
    value: f64,
    abs_error: f64,
    method: Method,
    empty_domain: bool,
    /// Leading asymptotic form at the same radii, where one is available.
    asymptotic: Option<f64>,
}

fn volume(c: &Common, a: VolumeArgs) -> anyhow::Result<Outcome> {
    let spec = ContourSpec::auto(0.0);
    let mut asymptotic = None;
    let v = match (a.group, a.norm, a.method) {
        (Group::Sl, NormArg::Op, MethodArg::Closed) => volumes::j_closed(a.n, need(a.r, "r")?)?,
        (Group::Sl, NormArg::Op, MethodArg::Contour) => volumes::j_contour(a.n, need(a.r, "r")?, &spec)?,
        (Group::Sl, NormArg::L2, MethodArg::Closed) => {
            if a.n != 2 {
                anyhow::bail!(Error::Domain("two-norm closed form available for N = 2 only".into()));
            }
            volumes::i_hat_closed_n2(need(a.r, "r")?)
        }
        (Group::Sl, NormArg::L2, MethodArg::Contour) => volumes::i_hat_contour(a.n, need(a.r, "r")?, &spec)?,
        (Group::Gl, NormArg::Op, MethodArg::Quadrature) => {
            let (r1, r2) = (need(a.r1, "r1")?, need(a.r2, "r2")?);
            asymptotic = Some(volumes::gl_asymptotic_target(a.n, r1, r2)?);
            volumes::gl_volume_quadrature(a.n, r1, r2)?
        }
        (_, NormArg::Cond, MethodArg::Quadrature) => {
            let r = need(a.r, "r")?;
            asymptotic = Some(r.powi(4) / 4.0);
            volumes::condition_truncated_quadrature(a.n, r)?
        }
        _ => anyhow::bail!(Error::Domain(
            "unsupported combination; use sl/op or sl/l2 with closed|contour, gl/op or */cond with quadrature"
                .into()
        )),
    };
    if a.group == Group::Sl && a.norm != NormArg::Cond {
        let norm = if a.norm == NormArg::Op { Norm::Operator } else { Norm::TwoNorm };
        let k = volumes::asymptotic_constants(a.n, norm)?;
        asymptotic = a.r.map(|r| k.coefficient * r.powi(k.exponent as i32));
    }
    report(
        c,
        "volume",
        VolumeOut {
            group: a.group,
            norm: a.norm,
            n: a.n,
            r: a.r,
            r1: a.r1,
            r2: a.r2,
            value: v.value,
            abs_error: v.abs_error,
            method: v.method,
            empty_domain: v.empty_domain,
            asymptotic,
        },
    )?;
    Ok(Outcome::ok())
}

fn sample(c: &Common, a: SampleArgs) -> anyhow::Result<Outcome> {
    let trunc = match a.norm {
        SimpleNorm::Op => Truncation::operator(a.r),
        SimpleNorm::L2 => Truncation::two_norm(a.r),
    };
    let n = a.n;
    let mut header: Vec<String> = vec!["seed".into(), "step".into()];
    header.extend((1..=n).map(|j| format!("sigma{j}")));
    if a.matrices {
        for i in 1..=n {
            header.extend((1..=n).map(|j| format!("m{i}{j}")));
        }
    }
    header.extend(["version".into(), "generator".into()]);
    let mut t = Table::new(header);
    let mut matrix_rng = stream_rng(c.seed, harness::WORKERS as u64 * 4);
    let mut push = |step: usize, sv: sampler::SingularValues| {
        let mut row = vec![c.seed.to_string(), step.to_string()];
        row.extend(sv.as_slice().iter().map(|&s| fmt_float(s)));
        if a.matrices {
            let m = sampler::assemble_matrix(sv, &mut matrix_rng).m;
            for i in 0..n {
                row.extend((0..n).map(|j| fmt_float(m[(i, j)])));
            }
        }
        row.extend([harness::VERSION.to_string(), rng::GENERATOR_NAME.to_string()]);
        t.push(row);
    };
    match n {
        2 => {
            let mut r = stream_rng(c.seed, 0);
            for step in 0..a.steps {
                push(step, sampler::sample_sv_n2(&trunc, &mut r)?);
            }
        }
        _ => {
            let mut r = stream_rng(c.seed, harness::WORKERS as u64);
            let init = sampler::dirichlet_initial(n, &trunc, &mut r)?;
            let mut cfg = ChainConfig::new(a.steps, c.seed);
            cfg.thin = a.thin;
            if let Some(b) = a.burn_in {
                cfg.burn_in = b;
            }
            let chain = sampler::mcmc_sv(trunc, cfg, init, 0)?;
            for (k, sv) in chain.enumerate() {
                push(cfg.burn_in + (k + 1) * cfg.thin, sv);
            }
        }
    }
    table(c, t)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct CharpolyOut {
    #[serde(flatten)]
    poly: AveragedCharPoly,
    mc_check: Option<McCheck>,
}

#[derive(Serialize)]
struct McCheck {
    #[serde(flatten)]
    mc: McCharPoly,
    /// Largest |contour - MC| in units of the MC standard error.
    max_z: f64,
    pass: bool,
}

fn charpoly_cmd(c: &Common, a: CharpolyArgs) -> anyhow::Result<Outcome> {
    let poly = charpoly::charpoly_zeros(charpoly::charpoly_coefficients(a.n, a.r, &ContourSpec::auto(0.0))?)?;
    let mc_check = match a.verify_mc {
        Some(samples) => {
            let mc = charpoly::mc_charpoly_oracle(a.n, a.r, samples, c.seed)?;
            // the end coefficients are ±1 exactly, so the MC error alone can vanish
            let max_z = (0..poly.coefficients.len())
                .map(|k| {
                    let (p, m) = (poly.coefficients[k], mc.mean[k]);
                    let scale = mc.standard_error[k].hypot(poly.coefficient_errors[k]) + 1e-8 * p.abs();
                    (p - m).abs() / scale
                })
                .fold(0.0, f64::max);
            // Bonferroni-style allowance over N+1 coefficients
            Some(McCheck { mc, max_z, pass: max_z < 4.0 })
        }
        None => None,
    };
    let pass = mc_check.as_ref().is_none_or(|m| m.pass);
    report(c, "charpoly", CharpolyOut { poly, mc_check })?;
    Ok(Outcome { pass })
}

fn reduce(c: &Common, a: ReduceArgs) -> anyhow::Result<Outcome> {
    let mut reader = csv::Reader::from_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let headers = reader.headers()?.clone();
    let skip = |h: &str| {
        matches!(h, "seed" | "step" | "version" | "generator") || h.starts_with("sigma")
    };
    let cols: Vec<usize> = headers.iter().enumerate().filter(|(_, h)| !skip(h)).map(|(i, _)| i).collect();
    let n = (cols.len() as f64).sqrt().round() as usize;
    if n * n != cols.len() || !(2..=3).contains(&n) {
        anyhow::bail!(Error::Domain(format!("expected 4 or 9 matrix columns, found {}", cols.len())));
    }
    let mut header = vec!["row".to_string()];
    header.extend((1..=n).map(|j| format!("length{j}")));
    for j in 1..=n {
        for k in j + 1..=n {
            header.push(format!("cos{j}{k}"));
        }
    }
    header.extend(["iterations".into(), "version".into()]);
    let mut t = Table::new(header);
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = cols
            .iter()
            .map(|&i| rec[i].trim().parse::<f64>().with_context(|| format!("row {row}: bad number {:?}", &rec[i])))
            .collect::<anyhow::Result<_>>()?;
        let m = DMatrix::from_row_slice(n, n, &vals);
        let red = lattice::reduce(&LatticeBasis::new(m)?)?;
        let mut out = vec![row.to_string()];
        out.extend(red.lengths.iter().map(|&x| fmt_float(x)));
        out.extend(red.cosines.iter().map(|&x| fmt_float(x)));
        out.extend([red.iterations.to_string(), harness::VERSION.to_string()]);
        t.push(out);
    }
    table(c, t)?;
    Ok(Outcome::ok())
}

fn density(c: &Common, a: DensityArgs) -> anyhow::Result<Outcome> {
    if a.grid < 2 {
        anyhow::bail!(Error::Domain("grid needs at least 2 points".into()));
    }
    let which = a.which.density();
    let (lo, hi) = which.plotting_range();
    let mut t = Table::new(vec!["s".into(), "pdf".into(), "cdf".into()]);
    for k in 0..a.grid {
        let s = lo + (hi - lo) * k as f64 / (a.grid - 1) as f64;
        t.push(vec![fmt_float(s), fmt_float(which.pdf(s)), fmt_float(which.cdf(s))]);
    }
    table(c, t)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct CountOut {
    r: f64,
    norm: Norm,
    count: u64,
    asymptotic: f64,
    ratio: f64,
}

fn count(c: &Common, a: CountArgs) -> anyhow::Result<Outcome> {
    let norm = a.norm.norm();
    let count = analytics::enumerate_sl2z(a.r, norm, a.cap)?;
    let asymptotic = volumes::counting_constant(2, norm)? * a.r * a.r;
    report(
        c,
        "count",
        CountOut {
            r: a.r,
            norm,
            count,
            asymptotic,
            ratio: count as f64 / asymptotic,
        },
    )?;
    Ok(Outcome::ok())
}

fn histogram_rows(
    t: &mut Table,
    seed: u64,
    panel: &str,
    h: &harness::EmpiricalDistribution,
    model: Option<&dyn Fn(f64) -> f64>,
) {
    for (k, centre) in h.centres().into_iter().enumerate() {
        t.push(vec![
            panel.to_string(),
            fmt_float(h.bin_edges[k]),
            fmt_float(h.bin_edges[k + 1]),
            h.counts[k].to_string(),
            fmt_float(h.normalized_heights[k]),
            model.map_or(String::new(), |f| fmt_float(f(centre))),
            seed.to_string(),
            harness::VERSION.to_string(),
        ]);
    }
}

fn histogram_table() -> Table {
    Table::new(
        ["panel", "bin_lo", "bin_hi", "count", "height", "model", "seed", "version"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )
}

fn fig1(c: &Common, a: Fig1Args) -> anyhow::Result<Outcome> {
    let r = harness::reproduce_fig1(c.seed, a.steps)?;
    let pass = r.gof.pass;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => report(c, "fig1", &r)?,
        Format::Csv => {
            let mut t = histogram_table();
            let model = |s: f64| sampler::p3_density(s, r.radius);
            histogram_rows(&mut t, c.seed, "sigma1", &r.histogram, Some(&model));
            table(c, t)?;
        }
    }
    Ok(Outcome { pass })
}

fn fig2(c: &Common, a: Fig2Args) -> anyhow::Result<Outcome> {
    let r = harness::reproduce_fig2(c.seed, a.samples, a.radius)?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => report(c, "fig2", &r)?,
        Format::Csv => {
            let mut t = histogram_table();
            for f in &r.fits {
                let which = f.which;
                let model = move |s: f64| which.pdf(s);
                histogram_rows(&mut t, c.seed, which.name(), &f.histogram, Some(&model));
            }
            table(c, t)?;
        }
    }
    Ok(Outcome { pass: r.pass })
}

#[derive(Serialize)]
struct Fig3Out<'a> {
    #[serde(flatten)]
    report: &'a harness::Fig3Report,
    small_s_coefficient: f64,
}

fn fig3(c: &Common, a: Fig3Args) -> anyhow::Result<Outcome> {
    let r = harness::reproduce_fig3(c.seed, a.samples, a.radius)?;
    let coef = harness::small_s_coefficient()?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => report(
            c,
            "fig3",
            Fig3Out {
                report: &r,
                small_s_coefficient: coef,
            },
        )?,
        Format::Csv => {
            let mut t = histogram_table();
            for (k, h) in r.lengths.iter().enumerate() {
                histogram_rows(&mut t, c.seed, &format!("length{}", k + 1), h, None);
            }
            for (h, name) in r.cosines.iter().zip(["cos12", "cos13", "cos23"]) {
                histogram_rows(&mut t, c.seed, name, h, None);
            }
            let law = |s: f64| coef * s * s;
            histogram_rows(&mut t, c.seed, "small-s", &r.small_s_histogram, Some(&law));
            table(c, t)?;
        }
    }
    Ok(Outcome { pass: r.small_s.pass })
}

fn siegel(c: &Common, a: SiegelArgs) -> anyhow::Result<Outcome> {
    let convention = match a.convention {
        ConventionArg::All => CountConvention::AllVectors,
        ConventionArg::Pairs => CountConvention::PairsOnce,
    };
    let r = harness::siegel_check_with(a.n, a.r, a.lattices, c.seed, a.sampling_radius, convention)?;
    let pass = r.within_3se;
    report(c, "siegel", r)?;
    Ok(Outcome { pass })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    expected: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        expected,
        tolerance,
        pass: (value - expected).abs() <= tolerance,
    }
}

#[derive(Serialize)]
struct VerifyOut {
    checks: Vec<Check>,
    /// Brief goodness-of-fit smoke runs (small sizes).
    smoke: Vec<(String, GofReport)>,
    pass: bool,
}

fn verify(c: &Common, full: bool) -> anyhow::Result<Outcome> {
    let spec = ContourSpec::auto(0.0);
    let mut checks = vec![
        check(
            "J_3(2) contour vs closed form",
            volumes::j_contour(3, 2.0, &spec)?.value,
            volumes::j_closed(3, 2.0)?.value,
            1e-6 * volumes::j_closed(3, 2.0)?.value,
        ),
        check("I-hat_2(5) contour vs R^2/2 - 1", volumes::i_hat_contour(2, 5.0, &spec)?.value, 11.5, 11.5e-6),
        check("C_3 operator", volumes::asymptotic_constants(3, Norm::Operator)?.coefficient, 1.0 / 24.0, 1e-12),
        check("C_3 two-norm", volumes::asymptotic_constants(3, Norm::TwoNorm)?.coefficient, 1.0 / 48.0, 1e-12),
        check("Selberg-Laguerre N=2", volumes::selberg_laguerre_check(2)?, 1.0, 1e-4),
        check("Selberg-Laguerre N=3", volumes::selberg_laguerre_check(3)?, 1.0, 1e-4),
        check("floor integral / (pi^2/12)", analytics::siegel_integral_identity()?, 1.0, 1e-8),
        check(
            "planar reduction volume / 2 vol fundamental",
            analytics::vol_tilde_gamma() / volumes::vol_fundamental(2)?,
            2.0,
            1e-12,
        ),
        check("shortest-length density mass", analytics::normalization(Density::Shortest)?, 1.0, 1e-9),
        check("second-length density mass", analytics::normalization(Density::Second)?, 1.0, 1e-6),
        check("cosine density mass", analytics::normalization(Density::Cosine)?, 1.0, 1e-9),
        check("SL2(Z) constant (two-norm)", volumes::counting_constant(2, Norm::TwoNorm)?, 6.0, 1e-12),
    ];
    let zeros = charpoly::charpoly_zeros(charpoly::charpoly_coefficients(6, 2.0, &spec)?)?
        .zeros
        .unwrap_or_default();
    for (z, (name, r)) in zeros.iter().zip([
        ("N=6 zero 1", 0.04436),
        ("N=6 zero 2", 0.57774),
        ("N=6 zero 3", 1.41726),
        ("N=6 zero 4", 2.33579),
        ("N=6 zero 5", 3.15342),
        ("N=6 zero 6", 3.73701),
    ]) {
        checks.push(check(name, *z, r, 5e-5));
    }
    let (planar, steps) = if full {
        (harness::FIG2_SAMPLES, harness::FIG1_STEPS)
    } else {
        (20_000, 100_000)
    };
    let f2 = harness::reproduce_fig2(c.seed, planar, harness::REDUCTION_RADIUS)?;
    let mut smoke: Vec<(String, GofReport)> = f2.fits.iter().map(|f| (format!("fig2 {}", f.which.name()), f.gof)).collect();
    let f1 = harness::reproduce_fig1(c.seed, steps)?;
    smoke.push(("fig1 sigma1".into(), f1.gof));
    let pass = checks.iter().all(|c| c.pass);
    let gof_pass = smoke.iter().all(|(_, g)| g.pass);
    report(c, "verify", VerifyOut { checks, smoke, pass: pass && gof_pass })?;
    if !pass {
        anyhow::bail!(Error::NonConvergence("deterministic self-check failed".into()));
    }
    Ok(Outcome { pass: gof_pass })
}
