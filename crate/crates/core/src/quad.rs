//! Adaptive Gauss–Kronrod (7/15) quadrature with global bisection.
//!
//! Nested (iterated) integrals are built by calling [`integrate`] from inside
//! an outer integrand; [`Nested`] tracks the worst inner error so the outer
//! estimate can carry it.

use std::cell::Cell;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        // below ~100 ulp the target is unreachable by bisection
        self.abs.max(self.rel.max(100.0 * f64::EPSILON) * value.abs())
    }

    /// Tightened tolerance handed to an inner integral of a nested pair.
    pub fn inner(&self) -> Self {
        Self {
            abs: self.abs / 10.0,
            rel: self.rel / 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs() + 2.0 * f64::EPSILON * value.abs();
    Panel { a, b, value, error }
}

/// Default cap on the number of panels per adaptive integral.
pub const MAX_PANELS: usize = 20_000;

/// Integrate `f` over `[a, b]` to the requested tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_panels(f, a, b, 1, tol, MAX_PANELS)
}

/// Integrate starting from `initial` equal panels, with an explicit panel cap.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial: usize,
    tol: Tolerance,
    max_panels: usize,
) -> Result<Estimate> {
    let est = integrate_best_effort(&f, a, b, initial, tol, max_panels);
    if est.abs_error <= tol.target(est.value) {
        Ok(est)
    } else {
        Err(Error::NonConvergence(format!(
            "Gauss-Kronrod on [{a}, {b}]: error {:.3e} after {} evaluations",
            est.abs_error, est.evaluations
        )))
    }
}

/// Like [`integrate_panels`] but always returns the best estimate reached.
pub fn integrate_best_effort<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    initial: usize,
    tol: Tolerance,
    max_panels: usize,
) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    let initial = initial.max(1);
    let width = (b - a) / initial as f64;
    let mut heap = BinaryHeap::with_capacity(initial * 2);
    let (mut value, mut error) = (0.0, 0.0);
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { lo + width };
        let p = kronrod(f, lo, hi);
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    let mut evaluations = 15 * initial;
    while error > tol.target(value) && heap.len() < max_panels {
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod(f, worst.a, mid);
        let right = kronrod(f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Estimate {
        value,
        abs_error: error,
        evaluations,
    }
}

/// Error bookkeeping for iterated integrals.
///
/// Inner integrals report through [`Nested::inner`]; failures are remembered
/// and the largest inner error is exposed for the outer estimate.
#[derive(Debug, Default)]
pub struct Nested {
    worst_error: Cell<f64>,
    failed: Cell<bool>,
    max_panels: usize,
}

impl Nested {
    pub fn new() -> Self {
        Self {
            worst_error: Cell::new(0.0),
            failed: Cell::new(false),
            max_panels: MAX_PANELS,
        }
    }

    pub fn inner<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: Tolerance) -> f64 {
        if b <= a {
            return 0.0;
        }
        let est = integrate_best_effort(&f, a, b, 1, tol, self.max_panels);
        if est.abs_error > tol.target(est.value) {
            self.failed.set(true);
        }
        if est.abs_error > self.worst_error.get() {
            self.worst_error.set(est.abs_error);
        }
        est.value
    }

    /// Run the outer integral and fold in the inner error budget.
    pub fn outer<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        tol: Tolerance,
    ) -> Result<Estimate> {
        let est = integrate_best_effort(&f, a, b, 1, tol, self.max_panels);
        let inner = self.worst_error.get() * (b - a).abs();
        let total = Estimate {
            abs_error: est.abs_error + inner,
            ..est
        };
        if self.failed.get() || est.abs_error > tol.target(est.value) {
            return Err(Error::NonConvergence(format!(
                "nested quadrature on [{a}, {b}]: outer error {:.3e}, inner error {:.3e}",
                est.abs_error, inner
            )));
        }
        Ok(total)
    }
}
