use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Principal-branch `log Γ(z)`, analytic off the negative real axis.
///
/// Lanczos (g = 7, 9 terms) on `Re z >= 0.5`, reflection elsewhere.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("log_gamma of non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(z.re));
    }
    Ok(if z.re >= 0.5 {
        lanczos(z)
    } else {
        // log Γ(z) = log π − log sin(πz) − log Γ(1 − z), shifted onto the analytic branch.
        let branch = (2.0 * PI).copysign(z.im) * (0.5 * z.re + 0.25).floor();
        Complex64::new(LN_PI, branch) - ln_sin_pi(z) - lanczos(Complex64::new(1.0, 0.0) - z)
    })
}

fn lanczos(z: Complex64) -> Complex64 {
    let x = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + series.ln()
}

/// Principal `log sin(πz)`, stable for large `|Im z|` where `sin` itself overflows.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    let i = Complex64::i();
    let raw = if z.im > 0.0 {
        // sin(πz) = (i/2) e^{-iπz} (1 - e^{2iπz})
        Complex64::new(-std::f64::consts::LN_2, PI / 2.0) - i * PI * z
            + (Complex64::new(1.0, 0.0) - (2.0 * i * PI * z).exp()).ln()
    } else {
        Complex64::new(-std::f64::consts::LN_2, -PI / 2.0) + i * PI * z
            + (Complex64::new(1.0, 0.0) - (-2.0 * i * PI * z).exp()).ln()
    };
    Complex64::new(raw.re, wrap_angle(raw.im))
}

fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t -= two_pi;
    }
    t
}

/// `log Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs x > 0, got {x}");
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx), all factors positive on (0, 1/2)
        return LN_PI - (PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + series.ln()
}

/// `Γ(x)` for real `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `log n!`
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn trivial_values() {
        assert!(log_gamma_complex(c(1.0, 0.0)).unwrap().norm() < 1e-14);
        assert!(log_gamma_complex(c(2.0, 0.0)).unwrap().norm() < 1e-14);
        let half = log_gamma_complex(c(0.5, 0.0)).unwrap();
        assert!((half.re - 0.572_364_942_924_700_1).abs() < 1e-13);
        assert!(half.im.abs() < 1e-15);
    }

    // Reference values from mpmath.loggamma at 25 digits.
    #[test]
    fn matches_high_precision_reference() {
        let cases = [
            (c(3.0, 4.0), c(-1.756_626_784_603_784_1, 4.742_664_438_034_658)),
            (c(0.25, -30.0), c(-47.055_241_933_994_32, -71.643_569_596_014_94)),
            (c(1.0, 450.0), c(-702.884_784_733_116_6, 2_299.946_625_222_146_2)),
            (c(150.0, -400.0), c(271.668_026_954_007, -2_204.098_743_402_904_4)),
            (c(-2.5, 1.5), c(-3.717_513_451_191_791_8, -7.713_065_525_834_192_5)),
            (c(-7.3, -0.2), c(-8.037_972_572_918_985, 24.337_286_753_302_47)),
        ];
        for (z, want) in cases {
            let got = log_gamma_complex(z).unwrap();
            assert!(close(got, want, 1e-12), "z={z}: got {got}, want {want}");
        }
    }

    #[test]
    fn poles_rejected() {
        assert_eq!(log_gamma_complex(c(0.0, 0.0)), Err(Error::Pole(0.0)));
        assert_eq!(log_gamma_complex(c(-3.0, 0.0)), Err(Error::Pole(-3.0)));
        assert!(log_gamma_complex(c(-3.0, 1e-3)).is_ok());
    }

    #[test]
    fn real_gamma() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-11);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(0.1) - 9.513_507_698_668_732).abs() < 1e-12);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
    }
}
