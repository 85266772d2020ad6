use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

// B_{2k} / (2k (2k - 1)), k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const SHIFT_TO: f64 = 10.0;

/// Principal branch of `log Gamma(z)`: analytic continuation from the
/// positive real axis with the cut along the negative real axis.
///
/// Stirling's series at `Re w >= 10`, reached by the upward recurrence
/// `log Gamma(z) = log Gamma(z + m) - sum log(z + k)`. Summing principal
/// logarithms term by term keeps the imaginary part on the principal branch.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::FormulaDomain {
            what: "ln_gamma argument",
            value: f64::NAN,
        });
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::GammaPole(z));
    }
    let mut w = z;
    let mut shift = Complex64::ZERO;
    while w.re < SHIFT_TO {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

fn stirling(w: Complex64) -> Complex64 {
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::ZERO;
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series
}

/// `log Gamma(1 + r / (2 pi i))` for real `r`; never hits a pole.
pub fn ln_gamma_shifted(r: f64) -> Complex64 {
    let z = Complex64::new(1.0, -r / (2.0 * PI));
    ln_gamma(z).expect("Re z = 1 is pole free")
}

/// `|Gamma(1 + r / (2 pi i))|^2 = (r/2) / sinh(r/2)`, by the reflection formula.
pub fn gamma_modulus_sq(r: f64) -> f64 {
    let h = 0.5 * r;
    if h.abs() < 1e-8 {
        1.0 - h * h / 6.0
    } else {
        h / h.sinh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[allow(clippy::excessive_precision)]
    // mpmath.loggamma at 30 digits
    const REFERENCE: [(f64, f64, f64, f64); 8] = [
        (1.0, 0.0, 0.0, 0.0),
        (0.5, 0.0, 0.572_364_942_924_700_1, 0.0),
        (2.5, -3.1, -1.569_701_300_504_592_3, -2.951_890_141_832_668_3),
        (-1.7, 0.4, 0.154_476_566_118_292_78, -6.515_691_973_344_313),
        (0.3, 12.0, -18.427_550_051_957_29, 17.506_526_607_888_509),
        (1.0, -0.8, -0.445_978_783_548_763_2, 0.304_225_602_976_183_6),
        (10.2, 45.0, -32.768_368_162_812_42, 140.499_925_926_716_06),
        (-4.5, -2.0, -8.014_299_703_267_404, 12.435_275_982_207_051),
    ];

    #[test]
    fn matches_reference_values() {
        for (re, im, lre, lim) in REFERENCE {
            let v = ln_gamma(c(re, im)).unwrap();
            let scale = 1.0 + lre.abs().max(lim.abs());
            assert!((v.re - lre).abs() < 1e-13 * scale, "{re}+{im}i: {v}");
            assert!((v.im - lim).abs() < 1e-13 * scale, "{re}+{im}i: {v}");
        }
    }

    #[test]
    fn poles_are_rejected() {
        for k in 0..5 {
            assert!(matches!(ln_gamma(c(-(k as f64), 0.0)), Err(Error::GammaPole(_))));
        }
        assert!(ln_gamma(c(-1.0, 1e-9)).is_ok());
    }

    #[test]
    fn modulus_on_imaginary_line() {
        // |Gamma(1 + iy)|^2 = pi y / sinh(pi y); independent check through the
        // Euler product prod_k (1 + y^2/k^2)^{-1}, truncated with a tail correction.
        for y in [0.1_f64, 1.0, 5.0] {
            let lg = ln_gamma(c(1.0, y)).unwrap();
            let direct = (2.0 * lg.re).exp();
            let closed = PI * y / (PI * y).sinh();
            assert!((direct - closed).abs() < 1e-13 * closed);
            let m = 200_000;
            let mut log_prod = 0.0;
            for k in 1..=m {
                let kf = k as f64;
                log_prod -= (y * y / (kf * kf)).ln_1p();
            }
            // tail: sum_{k>m} y^2/k^2 ~ y^2/m
            log_prod -= y * y / m as f64;
            assert!((log_prod.exp() - closed).abs() < 1e-9 * closed);
        }
    }

    #[test]
    fn shifted_modulus_identity() {
        for r in [-7.3, -1.0, -1e-3, 0.0, 0.5, 3.0, 12.0] {
            let lg = ln_gamma_shifted(r);
            assert!(((2.0 * lg.re).exp() - gamma_modulus_sq(r)).abs() < 1e-13);
        }
    }
}
