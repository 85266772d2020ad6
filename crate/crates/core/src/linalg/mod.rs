//! Dense complex linear algebra and the complex log-Gamma function.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; the newtypes here only carry
//! validated structure (Hermitian, unitary) on top of that storage.

mod gamma;
pub mod json;

pub use gamma::{gamma_modulus_sq, ln_gamma, ln_gamma_shifted};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * std::f64::consts::PI);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag_real(d: &[f64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c64(d[i], 0.0) } else { Complex64::ZERO })
}

pub fn diag_complex(d: &[Complex64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { Complex64::ZERO })
}

/// Top-left `k x k` block.
pub fn leading_block(m: &CMatrix, k: usize) -> CMatrix {
    m.view((0, 0), (k, k)).into_owned()
}

/// Places `block` in the top-left corner of an `n x n` identity.
pub fn embed(block: &CMatrix, n: usize) -> CMatrix {
    let mut out = identity(n);
    let k = block.nrows();
    out.view_mut((0, 0), (k, k)).copy_from(block);
    out
}

/// Frobenius norm of `M - M^dagger`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius norm of `M M^dagger - I`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    (m * m.adjoint() - identity(m.nrows())).norm()
}

/// Frobenius norm of the strictly lower triangle.
pub fn strict_lower_norm(m: &CMatrix) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    m.clone().lu().try_inverse().ok_or(Error::Singular)
}

/// Solves `A X = B`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.clone().lu().solve(b).ok_or(Error::Singular)
}

/// Determinant of the submatrix with the given (0-based) rows and columns,
/// by LU with partial pivoting. Empty index sets give 1.
pub fn minor_det(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Result<Complex64> {
    if rows.len() != cols.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: cols.len(),
        });
    }
    for &r in rows {
        if r >= m.nrows() {
            return Err(Error::IndexOutOfRange {
                index: r + 1,
                max: m.nrows(),
            });
        }
    }
    for &c in cols {
        if c >= m.ncols() {
            return Err(Error::IndexOutOfRange {
                index: c + 1,
                max: m.ncols(),
            });
        }
    }
    if rows.is_empty() {
        return Ok(Complex64::ONE);
    }
    let k = rows.len();
    let sub = CMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
    Ok(sub.lu().determinant())
}

/// Upper-triangular `R` with positive diagonal and `M = R^dagger R`.
pub fn cholesky_upper(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        let mut d = m[(i, i)].re;
        for k in 0..i {
            d -= r[(k, i)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: i + 1, value: d });
        }
        let rii = d.sqrt();
        r[(i, i)] = c64(rii, 0.0);
        for j in (i + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..i {
                s -= r[(k, i)].conj() * r[(k, j)];
            }
            r[(i, j)] = s / rii;
        }
    }
    Ok(r)
}

/// A Hermitian matrix. Construction symmetrizes the input after checking
/// `||M - M^dagger|| <= tol (1 + ||M||)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Self::DEFAULT_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let residual = hermitian_residual(&m);
        if residual > tol * (1.0 + m.norm()) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::symmetrized(m))
    }

    /// Wraps `(M + M^dagger)/2` without a tolerance check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj) * c64(0.5, 0.0))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        HermitianMatrix(diag_real(d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn leading(&self, k: usize) -> HermitianMatrix {
        HermitianMatrix(leading_block(&self.0, k))
    }

    /// `U A U^dagger`, re-symmetrized.
    pub fn conjugate(&self, u: &CMatrix) -> HermitianMatrix {
        Self::symmetrized(u * &self.0 * u.adjoint())
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let (w, _) = self.eigen_desc();
        w.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues in descending order and the matching unitary eigenvectors.
    pub fn eigen_desc(&self) -> (Vec<f64>, CMatrix) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), CMatrix::zeros(0, 0));
        }
        let eig = self.0.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        self.eigen_desc().0
    }

    /// `f(A)` through the eigendecomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let (w, v) = self.eigen_desc();
        let d: Vec<Complex64> = w.iter().map(|&x| f(x)).collect();
        &v * diag_complex(&d) * v.adjoint()
    }

    pub fn exp(&self) -> CMatrix {
        self.map_spectrum(|x| c64(x.exp(), 0.0))
    }

    /// `x^{A / 2 pi i}` for real `x > 0`; unitary.
    pub fn ratio_power(&self, x: f64) -> CMatrix {
        let l = x.ln() / (2.0 * std::f64::consts::PI);
        self.map_spectrum(|w| Complex64::from_polar(1.0, -l * w))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.0.iter().all(|z| z.im.abs() <= tol)
    }
}

/// A unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let residual = unitarity_residual(&m);
        if residual > tol {
            return Err(Error::NotUnitary { residual });
        }
        Ok(UnitaryMatrix(m))
    }

    /// For matrices that are unitary by construction; tests measure the residual.
    pub(crate) fn from_construction(m: CMatrix) -> Self {
        UnitaryMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn residual(&self) -> f64 {
        unitarity_residual(&self.0)
    }

    pub fn inverse(&self) -> CMatrix {
        self.0.adjoint()
    }
}

/// A real diagonal matrix stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDiagonal(pub Vec<f64>);

impl RealDiagonal {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exp(&self) -> RealDiagonal {
        RealDiagonal(self.0.iter().map(|x| x.exp()).collect())
    }

    pub fn to_matrix(&self) -> CMatrix {
        diag_real(&self.0)
    }
}
