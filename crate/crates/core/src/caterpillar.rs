//! Normalized connection matrices of the rank-`k` subsystems, the
//! Riemann-Hilbert map `nu(u_cat)` and Stokes data at the caterpillar point.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gt::GtFrame;
use crate::linalg::{
    c64, cholesky_upper, diag_real, embed, identity, inverse, ln_gamma, ln_gamma_shifted, minor_det,
    unitarity_residual, CMatrix, HermitianMatrix, UnitaryMatrix, TWO_PI_I,
};

/// `C~(E_k, delta_k(A_{k-1}))` embedded in `U(n)`.
#[derive(Debug, Clone)]
pub struct NormalizedConnection {
    pub k: usize,
    pub matrix: UnitaryMatrix,
}

/// Upper-triangular `S_+` and lower-triangular `S_- = S_+^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesPair {
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

impl StokesPair {
    pub fn from_plus(s_plus: CMatrix) -> Self {
        let s_minus = s_plus.adjoint();
        StokesPair { s_plus, s_minus }
    }

    /// `S_- S_+`.
    pub fn product(&self) -> CMatrix {
        &self.s_minus * &self.s_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct CaterpillarDiagnostics {
    /// `||C~ C~^dagger - I||`.
    pub unitarity: f64,
    /// `||diag(S_+) - e^{[A]/2}||`.
    pub stokes_diagonal: f64,
    /// `||S_- S_+ - nu||`.
    pub factorization: f64,
}

#[derive(Debug, Clone)]
pub struct CaterpillarResult {
    pub nu: HermitianMatrix,
    /// `C~(u_cat, A)`, with `nu = C~ e^{diag lambda^(n)} C~^{-1}`.
    pub c_tilde: UnitaryMatrix,
    /// Connection matrix `C~ P_n^{-1}`, so that `nu = C e^A C^{-1}`.
    pub connection: CMatrix,
    pub stokes: StokesPair,
    pub diagnostics: CaterpillarDiagnostics,
}

fn sum_lg1(xs: impl IntoIterator<Item = f64>) -> Complex64 {
    xs.into_iter().map(ln_gamma_shifted).sum()
}

fn level_index(f: &GtFrame, k1: usize) -> Result<()> {
    if k1 < 2 || k1 > f.n() {
        return Err(Error::IndexOutOfRange { index: k1, max: f.n() });
    }
    Ok(())
}

/// Entries of the normalized connection matrix at level `k1`. The upper
/// rows carry `-a^(k1-1)_i`; that sign is what the ODE oracle produces.
pub(crate) fn connection_block(f: &GtFrame, k1: usize) -> CMatrix {
    let n = f.n();
    let mu = f.lambda(k1);
    let nu = f.lambda(k1 - 1);
    let a = f.a_coeffs(k1 - 1);
    let akk = f.matrix().matrix()[(k1 - 1, k1 - 1)].re;
    let mut c = CMatrix::zeros(k1, k1);
    for j in 0..k1 {
        let nj = f.normalizer(k1, j + 1);
        let top = sum_lg1(mu.iter().map(|&x| x - mu[j]));
        for i in 0..k1 - 1 {
            let d = nu[i] - mu[j];
            let lg = top + sum_lg1(nu.iter().map(|&x| x - nu[i]))
                - sum_lg1(nu.iter().enumerate().filter(|&(v, _)| v != i).map(|(_, &x)| x - mu[j]))
                - sum_lg1(mu.iter().enumerate().filter(|&(v, _)| v != j).map(|(_, &x)| x - nu[i]));
            c[(i, j)] = (lg + d / 4.0).exp() * (-a[i]) / (d * nj);
        }
        let lg = top - sum_lg1(nu.iter().map(|&x| x - mu[j]));
        c[(k1 - 1, j)] = (lg + (mu[j] - akk) / 4.0).exp() / nj;
    }
    embed(&c, n)
}

pub fn normalized_connection(a: &HermitianMatrix, k1: usize) -> Result<NormalizedConnection> {
    let f = GtFrame::new(a)?;
    level_index(&f, k1)?;
    Ok(NormalizedConnection {
        k: k1,
        matrix: UnitaryMatrix::from_construction(connection_block(&f, k1)),
    })
}

/// Factors of `C~(E_i, delta_i(A)) = D_L diag(-a, 1..) R D_R`.
#[derive(Debug, Clone)]
pub struct DlrDecomposition {
    pub level: usize,
    /// Diagonal of `D_L^(i-1)`.
    pub d_left: Vec<Complex64>,
    /// `(-a^(i-1)_1, ..., -a^(i-1)_{i-1}, 1, ..., 1)`.
    pub sign_diag: Vec<Complex64>,
    /// Depends on the action variables only.
    pub r: CMatrix,
    /// Diagonal of `D_R^(i)`.
    pub d_right: Vec<Complex64>,
}

impl DlrDecomposition {
    pub fn product(&self) -> CMatrix {
        let l = crate::linalg::diag_complex(&self.d_left);
        let s = crate::linalg::diag_complex(&self.sign_diag);
        let r = crate::linalg::diag_complex(&self.d_right);
        l * s * &self.r * r
    }
}

/// `D_L^(i)`: diagonal entries `k <= i`, in terms of levels `i` and `i + 1`.
pub(crate) fn d_left(f: &GtFrame, i: usize) -> Vec<Complex64> {
    let nu = f.lambda(i);
    let mu = f.lambda(i + 1);
    (0..i)
        .map(|k| (sum_lg1(nu.iter().map(|&x| x - nu[k])) - sum_lg1(mu.iter().map(|&x| x - nu[k]))).exp())
        .collect()
}

/// `D_R^(i)`: diagonal entries `k <= i`, in terms of levels `i - 1` and `i`.
pub(crate) fn d_right(f: &GtFrame, i: usize) -> Vec<Complex64> {
    let mu = f.lambda(i);
    let lo: &[f64] = if i >= 2 { f.lambda(i - 1) } else { &[] };
    (0..i)
        .map(|k| (sum_lg1(mu.iter().map(|&x| x - mu[k])) - sum_lg1(lo.iter().map(|&x| x - mu[k]))).exp())
        .collect()
}

pub fn decompose_dlr(a: &HermitianMatrix, i: usize) -> Result<DlrDecomposition> {
    let f = GtFrame::new(a)?;
    level_index(&f, i)?;
    Ok(dlr_of_frame(&f, i))
}

pub(crate) fn dlr_of_frame(f: &GtFrame, i: usize) -> DlrDecomposition {
    let n = f.n();
    let mu = f.lambda(i);
    let nu = f.lambda(i - 1);
    // A_ii through traces keeps R a function of the actions alone.
    let aii: f64 = mu.iter().sum::<f64>() - nu.iter().sum::<f64>();
    let mut r = identity(n);
    for j in 0..i {
        let nj = f.normalizer(i, j + 1);
        for k in 0..i - 1 {
            let d = nu[k] - mu[j];
            r[(k, j)] = c64((d / 4.0).exp() / (2.0 * nj * (d / 2.0).sinh()), 0.0);
        }
        r[(i - 1, j)] = c64(((mu[j] - aii) / 4.0).exp() / nj, 0.0);
    }
    let mut d_l = vec![Complex64::ONE; n];
    for (k, v) in d_left(f, i - 1).into_iter().enumerate() {
        d_l[k] = v;
    }
    let mut sign = vec![Complex64::ONE; n];
    for (k, &v) in f.a_coeffs(i - 1).iter().enumerate() {
        sign[k] = -v;
    }
    let mut d_r = vec![Complex64::ONE; n];
    for (k, v) in d_right(f, i).into_iter().enumerate() {
        d_r[k] = v;
    }
    DlrDecomposition {
        level: i,
        d_left: d_l,
        sign_diag: sign,
        r,
        d_right: d_r,
    }
}

pub(crate) fn connection_product_of_frame(f: &GtFrame) -> CMatrix {
    let mut t = identity(f.n());
    for k1 in 2..=f.n() {
        t *= connection_block(f, k1);
    }
    t
}

/// `C~(u_cat, A) = C~(E_2, .) ... C~(E_n, .)`.
pub fn connection_product(a: &HermitianMatrix) -> Result<UnitaryMatrix> {
    let f = GtFrame::new(a)?;
    Ok(UnitaryMatrix::from_construction(connection_product_of_frame(&f)))
}

pub(crate) fn rh_of_frame(f: &GtFrame) -> Result<CaterpillarResult> {
    let t = connection_product_of_frame(f);
    let lam = f.lambda(f.n());
    let nu =
        HermitianMatrix::symmetrized(&t * diag_real(&lam.iter().map(|x| x.exp()).collect::<Vec<_>>()) * t.adjoint());
    let (stokes, stokes_diagonal) = extract_stokes(&nu, &f.matrix().diagonal())?;
    let factorization = (stokes.product() - nu.matrix()).norm();
    let connection = &t * f.p(f.n()).adjoint();
    Ok(CaterpillarResult {
        diagnostics: CaterpillarDiagnostics {
            unitarity: unitarity_residual(&t),
            stokes_diagonal,
            factorization,
        },
        nu,
        c_tilde: UnitaryMatrix::from_construction(t),
        connection,
        stokes,
    })
}

/// `nu(u_cat, A) = C~ e^{A_n} C~^{-1}` with its Stokes factorization.
pub fn rh_caterpillar(a: &HermitianMatrix) -> Result<CaterpillarResult> {
    let f = GtFrame::new(a)?;
    rh_of_frame(&f)
}

/// Closed-form sub-diagonals `((S_+)_{k,k+1}, (S_-)_{k+1,k})`, `k = 1..n-1`.
///
/// The terms of the sum over `i` are added without an alternating sign;
/// with the sign `(-1)^{k+i}` the values disagree with the Cholesky factor of
/// `nu(u_cat)` for every `k >= 2`.
pub fn stokes_subdiag(phi0: &HermitianMatrix) -> Result<Vec<(Complex64, Complex64)>> {
    let f = GtFrame::new(phi0)?;
    stokes_subdiag_of_frame(&f)
}

pub(crate) fn stokes_subdiag_of_frame(f: &GtFrame) -> Result<Vec<(Complex64, Complex64)>> {
    let n = f.n();
    let phi = f.matrix().matrix();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let mu = f.lambda(k);
        let up = f.lambda(k + 1);
        let lo: &[f64] = if k >= 2 { f.lambda(k - 1) } else { &[] };
        let pref = TWO_PI_I * ((phi[(k - 1, k - 1)].re + phi[(k, k)].re) / 4.0).exp();
        let mut rows: Vec<usize> = (0..k).collect();
        let mut cols: Vec<usize> = (0..k - 1).collect();
        cols.push(k);
        let mut plus = Complex64::ZERO;
        let mut minus = Complex64::ZERO;
        for i in 0..k {
            let others = || {
                mu.iter()
                    .enumerate()
                    .filter(move |&(l, _)| l != i)
                    .map(|(_, &x)| (x - mu[i]) / TWO_PI_I)
            };
            let mut lg = Complex64::ZERO;
            let mut lgm = Complex64::ZERO;
            for z in others() {
                lg += ln_gamma(1.0 + z)? + ln_gamma(z)?;
                lgm += ln_gamma(1.0 - z)? + ln_gamma(-z)?;
            }
            for &x in up {
                let z = (x - mu[i]) / TWO_PI_I;
                lg -= ln_gamma(1.0 + z)?;
                lgm -= ln_gamma(1.0 - z)?;
            }
            for &x in lo {
                let z = (x - mu[i]) / TWO_PI_I;
                lg -= ln_gamma(1.0 + z)?;
                lgm -= ln_gamma(1.0 - z)?;
            }
            let shifted = (phi - diag_real(&vec![mu[i]; n])) / TWO_PI_I;
            plus += lg.exp() * minor_det(&shifted, &rows, &cols)?;
            let neg = -shifted;
            std::mem::swap(&mut rows, &mut cols);
            minus += lgm.exp() * minor_det(&neg, &rows, &cols)?;
            std::mem::swap(&mut rows, &mut cols);
        }
        out.push((pref * plus, -pref * minus));
    }
    Ok(out)
}

/// Splits a positive definite `M = S_- S_+` with `S_+` upper triangular,
/// positive diagonal. Returns the pair and `||diag(S_+) - e^{diag_a/2}||`.
pub fn extract_stokes(m: &HermitianMatrix, diag_a: &[f64]) -> Result<(StokesPair, f64)> {
    if diag_a.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: diag_a.len(),
        });
    }
    let s_plus = cholesky_upper(m.matrix())?;
    let dev = diag_a
        .iter()
        .enumerate()
        .map(|(i, &x)| (s_plus[(i, i)].re - (x / 2.0).exp()).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((StokesPair::from_plus(s_plus), dev))
}

/// `||C e^A C^{-1} - S_- S_+||`; infinite when `C` is singular.
pub fn verify_monodromy(c: &CMatrix, a: &HermitianMatrix, s: &StokesPair) -> f64 {
    match inverse(c) {
        Ok(ci) => (c * a.exp() * ci - s.product()).norm(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gt::thimm_act_full;
    use crate::linalg::max_abs_diff;

    fn sample(n: usize, seed: u64) -> HermitianMatrix {
        let mut s = seed.wrapping_add(17);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        };
        HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |_, _| c64(next(), next())))
    }

    #[test]
    fn connections_are_unitary_and_identity_below() {
        let a = sample(4, 1);
        for k1 in 2..=4 {
            let c = normalized_connection(&a, k1).unwrap();
            assert!(c.matrix.residual() < 1e-12, "k1={k1}");
            for i in k1..4 {
                assert_eq!(c.matrix.matrix()[(i, i)], Complex64::ONE);
            }
        }
    }

    #[test]
    fn dlr_reconstructs() {
        let a = sample(4, 2);
        for i in 2..=4 {
            let d = decompose_dlr(&a, i).unwrap();
            let c = normalized_connection(&a, i).unwrap();
            assert!(max_abs_diff(&d.product(), c.matrix.matrix()) < 1e-12);
        }
    }

    #[test]
    fn one_by_one() {
        let a = HermitianMatrix::from_real_diagonal(&[0.7]);
        let r = rh_caterpillar(&a).unwrap();
        assert!((r.nu.matrix()[(0, 0)].re - 0.7f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn caterpillar_monodromy_consistent() {
        let a = sample(3, 5);
        let r = rh_caterpillar(&a).unwrap();
        assert!(verify_monodromy(&r.connection, &a, &r.stokes) < 1e-12);
        assert!(r.diagnostics.stokes_diagonal < 1e-12);
    }

    #[test]
    fn identity_stokes_for_zero() {
        let (s, dev) = extract_stokes(&HermitianMatrix::from_real_diagonal(&[1.0, 1.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(s.s_plus, identity(2));
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn subdiag_matches_cholesky() {
        for n in 2..=5 {
            let a = sample(n, 30 + n as u64);
            let r = rh_caterpillar(&a).unwrap();
            let sub = stokes_subdiag(&a).unwrap();
            for k in 1..n {
                let want = r.stokes.s_plus[(k - 1, k)];
                assert!(
                    (sub[k - 1].0 - want).norm() < 1e-10,
                    "n={n} k={k}: {} vs {want}",
                    sub[k - 1].0
                );
                assert!((sub[k - 1].1 - want.conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn r_depends_on_actions_only() {
        let a = sample(3, 8);
        let theta = crate::gt::TorusElement::new(vec![vec![1.1], vec![-0.4, 2.5]]).unwrap();
        let b = thimm_act_full(&theta, &a).unwrap();
        for i in 2..=3 {
            let x = decompose_dlr(&a, i).unwrap();
            let y = decompose_dlr(&b, i).unwrap();
            assert!(max_abs_diff(&x.r, &y.r) < 1e-11);
        }
    }
}
