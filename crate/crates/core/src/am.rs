//! The explicit Alekseev-Meinrenken diffeomorphism
//! `Gamma_AM(A) = psi(A) e^{A_n} psi(A)^{-1}`, its phase transformation
//! `theta`, and the closed form for `n = 2`.

use num_complex::Complex64;

use crate::caterpillar::{d_left, d_right, rh_of_frame};
use crate::error::{Error, Result};
use crate::gt::{thimm_act_full, wrap_angle, GtFrame, TorusElement, MOD_TOL};
use crate::linalg::{c64, diag_real, identity, minor_det, CMatrix, HermitianMatrix, UnitaryMatrix};

#[derive(Debug, Clone)]
pub struct AmFactorization {
    /// `psi^(1), ..., psi^(n)`; `psi^(1)` is the identity.
    pub psi_factors: Vec<UnitaryMatrix>,
    pub psi: UnitaryMatrix,
    pub gamma: HermitianMatrix,
}

/// Signed product of `sinh(x/2)` over `xs`, kept as `(sign, log|.|)`.
fn log_sinh_half(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let mut sign = 1.0;
    let mut log = 0.0;
    for x in xs {
        let y = 0.5 * x.abs();
        // ln sinh y = y + ln(1 - e^{-2y}) - ln 2
        log += y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2;
        if x < 0.0 {
            sign = -sign;
        }
    }
    (sign, log)
}

fn except(xs: &[f64], skip: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    xs.iter().copied().enumerate().filter(move |&(v, _)| v != skip)
}

pub(crate) fn psi_block(f: &GtFrame, k: usize) -> Result<CMatrix> {
    let n = f.n();
    let mut psi = identity(n);
    if k == 1 {
        return Ok(psi);
    }
    let a = f.matrix().matrix();
    let mu = f.lambda(k);
    let nu = f.lambda(k - 1);
    let rho: &[f64] = if k >= 3 { f.lambda(k - 2) } else { &[] };
    let akk = a[(k - 1, k - 1)].re;

    // a^(k-1)_i / |a^(k-1)_i| from the minor formula
    let rows: Vec<usize> = (0..k - 1).collect();
    let mut cols: Vec<usize> = (0..k.saturating_sub(2)).collect();
    cols.push(k - 1);
    let mut phase = Vec::with_capacity(k - 1);
    for (i, &nui) in nu.iter().enumerate() {
        let shifted = a - diag_real(&vec![nui; n]);
        let d = minor_det(&shifted, &rows, &cols)?;
        let q = -mu.iter().map(|&x| nui - x).product::<f64>() * rho.iter().map(|&x| nui - x).product::<f64>();
        if !(q > 0.0) {
            return Err(Error::FormulaDomain {
                what: "phase normalizer",
                value: q,
            });
        }
        // (-1)^{k-1+i} with 1-based i
        let sign = if (k + i).is_multiple_of(2) { 1.0 } else { -1.0 };
        let z = d * (sign / q.sqrt());
        if z.norm() < MOD_TOL {
            return Err(Error::AngleUndefined {
                level: k - 1,
                index: i + 1,
                modulus: z.norm(),
            });
        }
        phase.push(z);
    }

    for j in 0..k {
        let (sd, ld) = log_sinh_half(except(mu, j).map(|(_, x)| x - mu[j]));
        for i in 0..k - 1 {
            let (s1, l1) = log_sinh_half(except(nu, i).map(|(_, x)| x - mu[j]));
            let (s2, l2) = log_sinh_half(except(mu, j).map(|(_, x)| nu[i] - x));
            let (s3, l3) = log_sinh_half(except(nu, i).map(|(_, x)| nu[i] - x));
            if s1 * s2 * sd * s3 > 0.0 {
                return Err(Error::FormulaDomain {
                    what: "sinh ratio of an upper row",
                    value: (l1 + l2 - ld - l3).exp(),
                });
            }
            let modulus = ((nu[i] - mu[j]) / 4.0 + 0.5 * (l1 + l2 - ld - l3)).exp();
            let s = if mu[j] > nu[i] { 1.0 } else { -1.0 };
            psi[(i, j)] = phase[i] * (s * modulus);
        }
        let (sn, ln) = log_sinh_half(nu.iter().map(|&x| x - mu[j]));
        if sn * sd < 0.0 {
            return Err(Error::FormulaDomain {
                what: "sinh ratio of the last row",
                value: -(ln - ld).exp(),
            });
        }
        psi[(k - 1, j)] = c64(((mu[j] - akk) / 4.0 + 0.5 * (ln - ld)).exp(), 0.0);
    }
    Ok(psi)
}

/// `psi^(k)(A)`, `1 <= k <= n`.
pub fn psi_factor(a: &HermitianMatrix, k: usize) -> Result<UnitaryMatrix> {
    if k < 1 || k > a.dim() {
        return Err(Error::IndexOutOfRange { index: k, max: a.dim() });
    }
    let f = GtFrame::new(a)?;
    Ok(UnitaryMatrix::from_construction(psi_block(&f, k)?))
}

pub(crate) fn gamma_of_frame(f: &GtFrame) -> Result<AmFactorization> {
    let n = f.n();
    let mut factors = Vec::with_capacity(n);
    let mut psi = identity(n);
    for k in 1..=n {
        let p = psi_block(f, k)?;
        psi *= &p;
        factors.push(UnitaryMatrix::from_construction(p));
    }
    let e: Vec<f64> = f.lambda(n).iter().map(|x| x.exp()).collect();
    let gamma = HermitianMatrix::symmetrized(&psi * diag_real(&e) * psi.adjoint());
    Ok(AmFactorization {
        psi_factors: factors,
        psi: UnitaryMatrix::from_construction(psi),
        gamma,
    })
}

pub fn gamma_am(a: &HermitianMatrix) -> Result<AmFactorization> {
    let f = GtFrame::new(a)?;
    gamma_of_frame(&f)
}

/// Closed form of `Gamma_AM` on `[[a, b], [conj b, c]]`.
pub fn gamma_am_2x2(a: f64, b: Complex64, c: f64) -> Result<HermitianMatrix> {
    if b.norm() < MOD_TOL {
        return Err(Error::AngleUndefined {
            level: 1,
            index: 1,
            modulus: b.norm(),
        });
    }
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
    let (l1, l2) = (mid + rad, mid - rad);
    let under = (a + l1).exp() + (a + l2).exp() - (2.0 * a).exp() - (l1 + l2).exp();
    let off = Complex64::from_polar(under.max(0.0).sqrt(), b.arg());
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            c64(a.exp(), 0.0),
            off,
            off.conj(),
            c64(l1.exp() + l2.exp() - a.exp(), 0.0),
        ],
    );
    Ok(HermitianMatrix::symmetrized(m))
}

pub(crate) fn theta_of_frame(f: &GtFrame) -> TorusElement {
    let angles = (1..f.n())
        .map(|i| {
            d_right(f, i)
                .iter()
                .zip(d_left(f, i))
                .map(|(r, l)| wrap_angle(-(r * l).arg()))
                .collect()
        })
        .collect();
    TorusElement::new(angles).expect("levels have the right lengths")
}

/// `theta^(i)_j = -Arg(D_R,jj^(i) D_L,jj^(i))` in `[0, 2 pi)`.
///
/// There is no additional `-pi`: with the connection matrices carrying
/// `-a^(k)_i`, only this choice makes `Gamma_AM = nu(u_cat) o X_theta`.
pub fn phase_theta(a: &HermitianMatrix) -> Result<TorusElement> {
    let f = GtFrame::new(a)?;
    Ok(theta_of_frame(&f))
}

/// `nu(u_cat, X_theta(A))`; must agree with [`gamma_am`].
pub fn am_via_rh(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let f = GtFrame::new(a)?;
    let theta = theta_of_frame(&f);
    let b = thimm_act_full(&theta, a)?;
    let g = GtFrame::new(&b)?;
    Ok(rh_of_frame(&g)?.nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gt::{gt_coordinates, gt_map};
    use crate::linalg::max_abs_diff;

    fn sample(n: usize, seed: u64) -> HermitianMatrix {
        let mut s = seed.wrapping_add(3);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        };
        HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |_, _| c64(next(), next())))
    }

    #[test]
    fn one_by_one() {
        let g = gamma_am(&HermitianMatrix::from_real_diagonal(&[-0.3])).unwrap();
        assert!((g.gamma.matrix()[(0, 0)].re - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn factors_unitary_and_identity_outside() {
        let a = sample(4, 1);
        let g = gamma_am(&a).unwrap();
        assert_eq!(g.psi_factors[0].matrix(), &identity(4));
        for (k, p) in g.psi_factors.iter().enumerate() {
            assert!(p.residual() < 1e-12, "k={}", k + 1);
            for i in (k + 1)..4 {
                assert_eq!(p.matrix()[(i, i)], Complex64::ONE);
            }
        }
    }

    #[test]
    fn centered_two_by_two() {
        let g = gamma_am_2x2(0.0, c64(1.0, 0.0), 0.0).unwrap();
        let e = std::f64::consts::E;
        assert!((g.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((g.matrix()[(1, 1)].re - (e + 1.0 / e - 1.0)).abs() < 1e-14);
        assert!((g.matrix()[(0, 1)].re - (e + 1.0 / e - 2.0).sqrt()).abs() < 1e-14);
        let a = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)],
        ))
        .unwrap();
        assert!(max_abs_diff(gamma_am(&a).unwrap().gamma.matrix(), g.matrix()) < 1e-14);
    }

    #[test]
    fn closed_form_determinant() {
        let g = gamma_am_2x2(0.4, c64(-0.3, 0.9), -1.2).unwrap();
        let det = g.matrix().determinant().re;
        assert!((det - (0.4f64 - 1.2).exp()).abs() < 1e-14);
    }

    #[test]
    fn two_paths_agree() {
        for n in 2..=5 {
            let a = sample(n, n as u64);
            let x = gamma_am(&a).unwrap().gamma;
            let y = am_via_rh(&a).unwrap();
            assert!(max_abs_diff(x.matrix(), y.matrix()) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn intertwines_gt_maps() {
        let a = sample(4, 9);
        let g = gamma_am(&a).unwrap().gamma;
        let t = gt_map(&a);
        let s = gt_map(&g);
        for k in 1..=4 {
            for (x, y) in t.level(k).iter().zip(s.level(k)) {
                assert!((x - y.ln()).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn theta_is_action_only() {
        let a = sample(3, 4);
        let phi = TorusElement::new(vec![vec![0.3], vec![2.0, -1.0]]).unwrap();
        let b = thimm_act_full(&phi, &a).unwrap();
        assert!(phase_theta(&a).unwrap().distance(&phase_theta(&b).unwrap()) < 1e-12);
    }

    #[test]
    fn real_input_with_zero_angles_gives_zero_angles() {
        // a real symmetric matrix whose a-coefficients are all positive
        let mut a = sample(3, 12);
        for _ in 0..3 {
            a = HermitianMatrix::symmetrized(a.matrix().map(|z| c64(z.re, 0.0)));
        }
        let coords = gt_coordinates(&a).unwrap();
        let flip = coords.angles_as_torus().inverse();
        let a0 = thimm_act_full(&flip, &a).unwrap();
        let b = am_via_rh(&a0).unwrap();
        let c = gt_coordinates(&b).unwrap();
        for row in &c.angles {
            for &x in row {
                assert!(x.min(2.0 * std::f64::consts::PI - x) < 1e-10);
            }
        }
    }
}
