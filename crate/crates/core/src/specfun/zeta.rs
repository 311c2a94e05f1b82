use crate::error::{Error, Result};

// B_{2j} / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3_617.0 / 10_670_622_842_880_000.0,
];

const HEAD_TERMS: usize = 16;

/// Riemann zeta at an integer `n >= 2`.
///
/// Direct head sum plus an Euler–Maclaurin tail correction.
pub fn riemann_zeta_int(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("zeta(n) needs n >= 2, got {n}")));
    }
    let s = n as f64;
    // beyond this the head sum alone is exact in double precision
    if n > 60 {
        return Ok(1.0 + 2f64.powf(-s));
    }
    let m = HEAD_TERMS as f64;
    let head: f64 = (1..HEAD_TERMS).rev().map(|k| (k as f64).powf(-s)).sum();
    let mut tail = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut power = m.powf(-s - 1.0);
    for (j, b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let k = 2.0 * j as f64;
            rising *= (s + k - 1.0) * (s + k);
            power /= m * m;
        }
        tail += b * rising * power;
    }
    Ok(head + tail)
}
