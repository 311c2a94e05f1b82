//! Reduction of unimodular lattice bases in dimensions 2 and 3, and
//! lattice-point counting in balls.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-vector basis of a covolume-one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    vectors: DMatrix<f64>,
    det_sign: i8,
}

impl LatticeBasis {
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        if !vectors.is_square() || vectors.nrows() == 0 {
            return Err(Error::domain("basis must be a non-empty square matrix"));
        }
        let det = vectors.determinant();
        let scale: f64 = vectors.column_iter().map(|c| c.norm()).product::<f64>().max(1.0);
        if (det.abs() - 1.0).abs() > 1e-9 * scale {
            return Err(Error::domain(format!("basis is not unimodular: det = {det}")));
        }
        Ok(Self {
            vectors,
            det_sign: if det < 0.0 { -1 } else { 1 },
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }
}

/// Reduced basis ordered by length, with its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    pub vectors: DMatrix<f64>,
    pub lengths: Vec<f64>,
    /// Cosines for pairs `(0,1)`, `(0,2)`, `(1,2)`, …, in lexicographic order.
    pub cosines: Vec<f64>,
    pub iterations: usize,
    /// Integer change of basis: `input · transform = vectors`.
    pub transform: DMatrix<f64>,
}

impl ReducedBasis {
    fn from_parts(vectors: DMatrix<f64>, transform: DMatrix<f64>, iterations: usize) -> Self {
        let n = vectors.ncols();
        let lengths: Vec<f64> = vectors.column_iter().map(|c| c.norm()).collect();
        let mut cosines = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for k in j + 1..n {
                cosines.push(vectors.column(j).dot(&vectors.column(k)) / (lengths[j] * lengths[k]));
            }
        }
        Self {
            vectors,
            lengths,
            cosines,
            iterations,
            transform,
        }
    }

    /// Reduce the given vectors only by reordering; used for already-short bases.
    pub fn unreduced(basis: &LatticeBasis) -> Self {
        let n = basis.dim();
        Self::from_parts(basis.vectors.clone(), DMatrix::identity(n, n), 0)
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Check that `transform` is an integer matrix of determinant ±1 mapping
    /// `input` onto the reduced vectors.
    pub fn same_lattice_as(&self, input: &LatticeBasis) -> bool {
        let t = &self.transform;
        if t.iter().any(|x| (x - x.round()).abs() > 1e-6) {
            return false;
        }
        let rounded = t.map(f64::round);
        if (rounded.determinant().abs() - 1.0).abs() > 1e-6 {
            return false;
        }
        let back = input.vectors() * &rounded;
        let scale = self.lengths.iter().cloned().fold(1.0, f64::max);
        // cancellation in the product when the input basis is very skewed
        let roundoff = 64.0 * f64::EPSILON * (input.vectors().abs() * rounded.abs()).max();
        (back - &self.vectors).abs().max() <= 1e-8 * scale + roundoff
    }
}

/// Nearest integer with exact halves rounded toward zero.
pub fn closest_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        x.trunc()
    } else {
        r
    }
}

fn swap_cols(m: &mut DMatrix<f64>, a: usize, b: usize) {
    if a != b {
        m.swap_columns(a, b);
    }
}

/// Lagrange–Gauss reduction of columns `i`, `j` of `vecs` (tracking `tr`).
/// Leaves the shorter vector in column `i`. Returns the number of steps.
fn gauss_pair(vecs: &mut DMatrix<f64>, tr: &mut DMatrix<f64>, i: usize, j: usize) -> usize {
    // u: shortest, v: longest
    if vecs.column(j).norm_squared() < vecs.column(i).norm_squared() {
        swap_cols(vecs, i, j);
        swap_cols(tr, i, j);
    }
    let (mut u, mut v) = (i, j);
    let mut steps = 0;
    loop {
        steps += 1;
        let uu = vecs.column(u).norm_squared();
        let alpha = closest_integer(vecs.column(u).dot(&vecs.column(v)) / uu);
        if alpha != 0.0 {
            let cu = vecs.column(u).clone_owned();
            vecs.column_mut(v).axpy(-alpha, &cu, 1.0);
            let tu = tr.column(u).clone_owned();
            tr.column_mut(v).axpy(-alpha, &tu, 1.0);
        }
        // r now sits in column v; v := u, u := r
        std::mem::swap(&mut u, &mut v);
        if !(vecs.column(u).norm_squared() < vecs.column(v).norm_squared()) {
            break;
        }
    }
    // shorter one is v
    if v != i {
        swap_cols(vecs, i, j);
        swap_cols(tr, i, j);
    }
    steps
}

/// Lagrange–Gauss reduction of a two-dimensional basis.
pub fn lagrange_gauss(basis: &LatticeBasis) -> Result<ReducedBasis> {
    if basis.dim() != 2 {
        return Err(Error::domain(format!("Lagrange-Gauss needs N = 2, got {}", basis.dim())));
    }
    let mut vecs = basis.vectors.clone();
    let mut tr = DMatrix::identity(2, 2);
    let steps = gauss_pair(&mut vecs, &mut tr, 0, 1);
    Ok(ReducedBasis::from_parts(vecs, tr, steps))
}

fn sort_by_length(vecs: &mut DMatrix<f64>, tr: &mut DMatrix<f64>) {
    let n = vecs.ncols();
    for a in 0..n {
        let mut best = a;
        for b in a + 1..n {
            if vecs.column(b).norm_squared() < vecs.column(best).norm_squared() {
                best = b;
            }
        }
        swap_cols(vecs, a, best);
        swap_cols(tr, a, best);
    }
}

/// Cap on outer iterations of the three-dimensional reduction.
pub const SEMAEV_MAX_ITERATIONS: usize = 10_000;
const DEGENERATE_GRAM: f64 = 1e-12;

/// Greedy reduction of a three-dimensional basis.
///
/// Alternates a Lagrange–Gauss step on the two shortest vectors with a
/// nearest-plane step for the third. The nearest-plane coefficients are the
/// rounded projection coefficients, refined over their 3×3 integer
/// neighbourhood so the new third vector is the shortest available.
pub fn semaev_reduce(basis: &LatticeBasis) -> Result<ReducedBasis> {
    if basis.dim() != 3 {
        return Err(Error::domain(format!("three-dimensional reduction needs N = 3, got {}", basis.dim())));
    }
    let mut vecs = basis.vectors.clone();
    let mut tr = DMatrix::identity(3, 3);
    sort_by_length(&mut vecs, &mut tr);
    let mut steps = 0;
    for _ in 0..SEMAEV_MAX_ITERATIONS {
        steps += gauss_pair(&mut vecs, &mut tr, 0, 1);
        let mut gram = pair_gram(&vecs);
        if gram.c <= DEGENERATE_GRAM {
            steps += gauss_pair(&mut vecs, &mut tr, 0, 1);
            gram = pair_gram(&vecs);
            if gram.c <= DEGENERATE_GRAM {
                return Err(Error::Degenerate(format!(
                    "first two vectors nearly collinear (1 - cos² = {:.3e})",
                    gram.c
                )));
            }
        }
        let (b1, b2, b3) = (vecs.column(0), vecs.column(1), vecs.column(2));
        let (p13, p23) = (b1.dot(&b3), b2.dot(&b3));
        let x2 = -closest_integer((p23 / gram.n2 - gram.p12 / gram.n2 * p13 / gram.n1) / gram.c);
        let x1 = -closest_integer((p13 / gram.n1 - gram.p12 / gram.n1 * p23 / gram.n2) / gram.c);
        let mut best = (x1, x2, f64::INFINITY);
        for d1 in -1..=1 {
            for d2 in -1..=1 {
                let (y1, y2) = (x1 + d1 as f64, x2 + d2 as f64);
                let a = b3 + b2 * y2 + b1 * y1;
                let len = a.norm_squared();
                if len < best.2 {
                    best = (y1, y2, len);
                }
            }
        }
        let (y1, y2, len) = best;
        if len >= b3.norm_squared() {
            let out = ReducedBasis::from_parts(vecs, tr, steps);
            return Ok(out);
        }
        let a = b3 + b2 * y2 + b1 * y1;
        let ta = tr.column(2) + tr.column(1) * y2 + tr.column(0) * y1;
        vecs.set_column(2, &a);
        tr.set_column(2, &ta);
        sort_by_length(&mut vecs, &mut tr);
    }
    Err(Error::NonConvergence(format!(
        "three-dimensional reduction exceeded {SEMAEV_MAX_ITERATIONS} iterations"
    )))
}

struct PairGram {
    n1: f64,
    n2: f64,
    p12: f64,
    c: f64,
}

fn pair_gram(vecs: &DMatrix<f64>) -> PairGram {
    let n1 = vecs.column(0).norm_squared();
    let n2 = vecs.column(1).norm_squared();
    let p12 = vecs.column(0).dot(&vecs.column(1));
    PairGram {
        n1,
        n2,
        p12,
        c: 1.0 - p12 * p12 / (n1 * n2),
    }
}

/// Reduce a basis of dimension 2 or 3.
pub fn reduce(basis: &LatticeBasis) -> Result<ReducedBasis> {
    match basis.dim() {
        2 => lagrange_gauss(basis),
        3 => semaev_reduce(basis),
        n => Err(Error::domain(format!("reduction implemented for N = 2, 3 (got {n})"))),
    }
}

const REDUCED_TOL: f64 = 1e-12;

/// Minkowski conditions: exact for N = 2, over `|nᵢ| <= coeff_bound` for N = 3.
pub fn is_minkowski_reduced(basis: &ReducedBasis, coeff_bound: i64) -> bool {
    let v = &basis.vectors;
    let len2: Vec<f64> = v.column_iter().map(|c| c.norm_squared()).collect();
    let slack = |x: f64| REDUCED_TOL * x.max(1.0);
    if len2.windows(2).any(|w| w[1] < w[0] - slack(w[0])) {
        return false;
    }
    match basis.dim() {
        2 => 2.0 * v.column(0).dot(&v.column(1)).abs() <= len2[0] + slack(len2[0]),
        3 => {
            let b = coeff_bound;
            for n1 in -b..=b {
                let w = v.column(1) + v.column(0) * n1 as f64;
                if w.norm_squared() < len2[1] - slack(len2[1]) {
                    return false;
                }
                for n2 in -b..=b {
                    let w = v.column(2) + v.column(1) * n2 as f64 + v.column(0) * n1 as f64;
                    if w.norm_squared() < len2[2] - slack(len2[2]) {
                        return false;
                    }
                }
            }
            true
        }
        _ => false,
    }
}

/// How `±v` pairs enter a lattice-point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CountConvention {
    /// Every nonzero vector, so `v` and `-v` count twice. Matches ball volume on average.
    #[default]
    AllVectors,
    /// One per `±v` pair.
    PairsOnce,
}

/// Default cap on enumeration-tree nodes.
pub const DEFAULT_NODE_CAP: usize = 50_000_000;

/// Nonzero lattice vectors of norm `<= radius`, by Fincke–Pohst enumeration.
pub fn count_points_in_ball(
    basis: &ReducedBasis,
    radius: f64,
    convention: CountConvention,
    node_cap: usize,
) -> Result<u64> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("radius must be finite and >= 0, got {radius}")));
    }
    let n = basis.dim();
    let r = basis.vectors.clone().qr().r();
    let mut state = Enum {
        r: &r,
        bound: radius * radius * (1.0 + 1e-12),
        coords: vec![0.0; n],
        count: 0,
        nodes: 0,
        cap: node_cap,
    };
    state.descend(n, 0.0)?;
    // the origin is always inside
    let all = state.count - 1;
    Ok(match convention {
        CountConvention::AllVectors => all,
        CountConvention::PairsOnce => all / 2,
    })
}

struct Enum<'a> {
    r: &'a DMatrix<f64>,
    bound: f64,
    coords: Vec<f64>,
    count: u64,
    nodes: usize,
    cap: usize,
}

impl Enum<'_> {
    /// Fix coordinates `level..n`; `partial` is the squared norm they contribute.
    fn descend(&mut self, level: usize, partial: f64) -> Result<()> {
        if level == 0 {
            self.count += 1;
            return Ok(());
        }
        let i = level - 1;
        let n = self.coords.len();
        let rii = self.r[(i, i)].abs();
        let sign = self.r[(i, i)].signum();
        // row i of R·x without the diagonal term
        let offset: f64 = (i + 1..n).map(|k| self.r[(i, k)] * self.coords[k]).sum::<f64>() * sign;
        let room = (self.bound - partial).max(0.0).sqrt() / rii;
        let centre = -offset / rii;
        let lo = (centre - room).ceil() as i64;
        let hi = (centre + room).floor() as i64;
        for x in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::CapExceeded(format!(
                    "lattice enumeration visited more than {} nodes",
                    self.cap
                )));
            }
            let t = rii * x as f64 + offset;
            let next = partial + t * t;
            if next <= self.bound {
                self.coords[i] = x as f64;
                self.descend(level - 1, next)?;
            }
        }
        self.coords[i] = 0.0;
        Ok(())
    }
}

/// Lengths of the shortest vectors over the coefficient box `|nᵢ| <= bound`
/// forming successive minima; for testing against reductions.
pub fn brute_force_minima(basis: &DMatrix<f64>, bound: i64) -> Vec<f64> {
    let n = basis.ncols();
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut coeffs = vec![-bound; n];
    loop {
        if coeffs.iter().any(|c| *c != 0) {
            let v = (0..n).fold(nalgebra::DVector::zeros(n), |acc, k| {
                acc + basis.column(k) * coeffs[k] as f64
            });
            candidates.push((v.norm(), v.iter().cloned().collect()));
        }
        let mut k = 0;
        while k < n {
            coeffs[k] += 1;
            if coeffs[k] <= bound {
                break;
            }
            coeffs[k] = -bound;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut minima = Vec::new();
    for (len, v) in candidates {
        let mut trial = chosen.clone();
        trial.push(v.clone());
        let m = DMatrix::from_fn(n, trial.len(), |i, j| trial[j][i]);
        if m.rank(1e-9) == trial.len() {
            chosen.push(v);
            minima.push(len);
            if minima.len() == n {
                break;
            }
        }
    }
    minima
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(cols: &[&[f64]]) -> LatticeBasis {
        let n = cols.len();
        LatticeBasis::new(DMatrix::from_fn(n, n, |i, j| cols[j][i])).unwrap()
    }

    #[test]
    fn rounding_ties_toward_zero() {
        assert_eq!(closest_integer(0.5), 0.0);
        assert_eq!(closest_integer(-0.5), 0.0);
        assert_eq!(closest_integer(1.5), 1.0);
        assert_eq!(closest_integer(-2.5), -2.0);
        assert_eq!(closest_integer(2.6), 3.0);
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(LatticeBasis::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).is_err());
        let b = basis(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(b.det_sign(), -1);
    }

    #[test]
    fn identity_unchanged() {
        let b = basis(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = lagrange_gauss(&b).unwrap();
        assert_eq!(r.vectors, DMatrix::identity(2, 2));
        let b3 = LatticeBasis::new(DMatrix::identity(3, 3)).unwrap();
        let r3 = semaev_reduce(&b3).unwrap();
        assert_eq!(r3.vectors, DMatrix::identity(3, 3));
    }

    #[test]
    fn large_shear() {
        let k = 1.0e6;
        let b = basis(&[&[1.0, 0.0], &[k + 0.5, 1.0]]);
        let r = lagrange_gauss(&b).unwrap();
        assert!(r.lengths[0] <= (4.0f64 / 3.0).powf(0.25) + 1e-12);
        assert!(is_minkowski_reduced(&r, 2));
        assert!(r.same_lattice_as(&b));
        // shortest vectors of this lattice: (1,0), ±(0.5,1) up to sign
        assert!((r.lengths[0] - 1.0).abs() < 1e-9);
        assert!((r.lengths[1] - 1.25f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hexagonal() {
        let s = (2.0 / 3f64.sqrt()).sqrt();
        let b = basis(&[&[s, 0.0], &[s / 2.0, s * 3f64.sqrt() / 2.0]]);
        let r = lagrange_gauss(&b).unwrap();
        assert!((r.cosines[0].abs() - 0.5).abs() < 1e-12);
        assert!((r.lengths[0] - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-12);
        assert!(is_minkowski_reduced(&r, 2));
    }

    #[test]
    fn violation_detected() {
        let b = basis(&[&[1.0, 0.0], &[0.8, 1.0]]);
        let r = ReducedBasis::unreduced(&b);
        assert!(!is_minkowski_reduced(&r, 2));
    }

    #[test]
    fn fcc_shortest_vector() {
        // face-centred cubic, covolume 1
        let s = 2f64.powf(2.0 / 3.0);
        let b = basis(&[&[0.0, s / 2.0, s / 2.0], &[s / 2.0, 0.0, s / 2.0], &[s / 2.0, s / 2.0, 0.0]]);
        let r = semaev_reduce(&b).unwrap();
        let minima = brute_force_minima(b.vectors(), 5);
        for (a, m) in r.lengths.iter().zip(&minima) {
            assert!((a - m).abs() < 1e-12);
        }
        assert!((r.lengths[0] - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn integer_shear_matches_successive_minima() {
        let mut rng = crate::rng::stream_rng(4, 0);
        use rand::Rng as _;
        for _ in 0..50 {
            // random unimodular integer matrix from elementary shears
            let mut u = DMatrix::<f64>::identity(3, 3);
            for _ in 0..6 {
                let (i, j) = (rng.gen_range(0..3), rng.gen_range(0..3));
                if i != j {
                    let c = rng.gen_range(-30..=30) as f64;
                    let cj = u.column(j).clone_owned();
                    u.column_mut(i).axpy(c, &cj, 1.0);
                }
            }
            if u.iter().any(|x| x.abs() > 1e3) {
                continue;
            }
            let base = crate::sampler::assemble_matrix(
                crate::sampler::SingularValues::from_leading(&[1.6, 1.1]).unwrap(),
                &mut rng,
            );
            let b = LatticeBasis::new(&base.m * &u).unwrap();
            let r = semaev_reduce(&b).unwrap();
            assert!(r.same_lattice_as(&b));
            assert!(is_minkowski_reduced(&r, 3));
            let minima = brute_force_minima(&base.m, 4);
            for (a, m) in r.lengths.iter().zip(&minima) {
                assert!((a - m).abs() < 1e-9, "{:?} vs {minima:?}", r.lengths);
            }
        }
    }

    #[test]
    fn counting_integer_lattice() {
        let z2 = ReducedBasis::unreduced(&basis(&[&[1.0, 0.0], &[0.0, 1.0]]));
        let all = CountConvention::AllVectors;
        assert_eq!(count_points_in_ball(&z2, 0.5, all, DEFAULT_NODE_CAP).unwrap(), 0);
        assert_eq!(count_points_in_ball(&z2, 1.0, all, DEFAULT_NODE_CAP).unwrap(), 4);
        assert_eq!(
            count_points_in_ball(&z2, 1.0, CountConvention::PairsOnce, DEFAULT_NODE_CAP).unwrap(),
            2
        );
        assert_eq!(count_points_in_ball(&z2, 2.0, all, DEFAULT_NODE_CAP).unwrap(), 12);
        let z3 = ReducedBasis::unreduced(&LatticeBasis::new(DMatrix::identity(3, 3)).unwrap());
        assert_eq!(count_points_in_ball(&z3, 1.5, all, DEFAULT_NODE_CAP).unwrap(), 18);
        assert!(matches!(
            count_points_in_ball(&z3, 100.0, all, 1000),
            Err(Error::CapExceeded(_))
        ));
    }
}
