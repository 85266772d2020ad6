//! Series solutions of `F' = (i U + B / z) F`, `B = -A / (2 pi i)`.
//!
//! At infinity: the formal solution `H(z) z^{[B]} e^{i u z}` with
//! `H = sum h_m z^{-m}`, summed to its smallest term. At zero: the convergent
//! `H_0(z) z^B` with `H_0 = sum g_m z^m`, solved in the eigenbasis of `B`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, diag_complex, identity, CMatrix, HermitianMatrix, I};

const MAX_TERMS: usize = 400;

/// `-A / (2 pi i) = i A / (2 pi)`.
pub fn residue(a: &HermitianMatrix) -> CMatrix {
    a.matrix() * c64(0.0, 1.0 / (2.0 * std::f64::consts::PI))
}

/// Coefficients `h_0 = I, h_1, ...` of the formal series at infinity.
///
/// Entries with `u_j != u_k` come from `ad_u`; entries inside a block of equal
/// `u` are fixed one order later, which needs `B` diagonal on those blocks.
#[derive(Debug, Clone)]
pub struct FormalSeries {
    u: Vec<f64>,
    diag_b: Vec<Complex64>,
    coeffs: Vec<CMatrix>,
}

impl FormalSeries {
    /// Builds coefficients until they have clearly outgrown any useful radius
    /// beyond `min_radius`.
    pub fn new(u: &[f64], b: &CMatrix, min_radius: f64) -> Result<Self> {
        let n = u.len();
        let same = |j: usize, k: usize| u[j] == u[k];
        for j in 0..n {
            for k in 0..n {
                if j != k && same(j, k) && b[(j, k)].norm() > 1e-12 * (1.0 + b.norm()) {
                    return Err(Error::Series(format!(
                        "residue entry ({}, {}) couples equal u; it must vanish",
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
        let diag_b: Vec<Complex64> = (0..n).map(|j| b[(j, j)]).collect();
        let lambda = diag_complex(&diag_b);
        let mut coeffs = vec![identity(n)];
        let mut best = f64::INFINITY;
        for m in 0..MAX_TERMS {
            let h = &coeffs[m];
            let rhs = h * &lambda - b * h - h * c64(m as f64, 0.0);
            let mut next = CMatrix::zeros(n, n);
            for j in 0..n {
                for k in 0..n {
                    if !same(j, k) {
                        next[(j, k)] = rhs[(j, k)] / (I * (u[j] - u[k]));
                    }
                }
            }
            for j in 0..n {
                for k in 0..n {
                    if same(j, k) {
                        let mut s = Complex64::ZERO;
                        for l in 0..n {
                            if !same(l, j) {
                                s += b[(j, l)] * next[(l, k)];
                            }
                        }
                        next[(j, k)] = -s / (c64((m + 1) as f64, 0.0) + diag_b[j] - diag_b[k]);
                    }
                }
            }
            let size = next.norm() / min_radius.powi(m as i32 + 1);
            coeffs.push(next);
            if size < 1e-18 {
                break;
            }
            if size > 1e3 * best {
                break;
            }
            best = best.min(size);
        }
        Ok(FormalSeries {
            u: u.to_vec(),
            diag_b,
            coeffs,
        })
    }

    /// Optimally truncated `H(z)`; returns the sum and the last term's size.
    pub fn h(&self, z: Complex64) -> (CMatrix, f64) {
        let n = self.u.len();
        let w = z.inv();
        let mut sum = identity(n);
        let mut p = Complex64::ONE;
        let mut prev = f64::INFINITY;
        let mut last = 0.0;
        for h in &self.coeffs[1..] {
            p *= w;
            let term = h * p;
            let size = term.norm();
            if size > prev {
                break;
            }
            sum += term;
            last = size;
            prev = size;
            if size < 1e-18 {
                break;
            }
        }
        (sum, last)
    }

    /// `H(z) z^{[B]} e^{i u z}`, with `log z` supplied by the caller.
    pub fn solution(&self, z: Complex64, log_z: Complex64) -> CMatrix {
        let (h, _) = self.h(z);
        let d: Vec<Complex64> = (0..self.u.len())
            .map(|j| (self.diag_b[j] * log_z + I * self.u[j] * z).exp())
            .collect();
        h * diag_complex(&d)
    }
}

/// `F_0(z) = H_0(z) z^B`, normalized by `F_0 z^{-B} -> I` at zero.
#[derive(Debug, Clone)]
pub struct ZeroSeries {
    iu: CMatrix,
    v: CMatrix,
    v_inv: CMatrix,
    w: Vec<Complex64>,
}

impl ZeroSeries {
    pub fn new(u: &[f64], a: &HermitianMatrix) -> Self {
        // B = i A / 2 pi shares eigenvectors with A.
        let (alpha, v) = a.eigen_desc();
        let w = alpha
            .iter()
            .map(|&x| c64(0.0, x / (2.0 * std::f64::consts::PI)))
            .collect();
        let iu = diag_complex(&u.iter().map(|&x| c64(0.0, x)).collect::<Vec<_>>());
        let v_inv = v.adjoint();
        ZeroSeries {
            iu: &v_inv * iu * &v,
            v,
            v_inv,
            w,
        }
    }

    pub fn evaluate(&self, z: Complex64, log_z: Complex64) -> CMatrix {
        let n = self.w.len();
        let mut g = identity(n);
        let mut sum = identity(n);
        let mut zp = Complex64::ONE;
        for m in 0..MAX_TERMS {
            let ug = &self.iu * &g;
            let mut next = CMatrix::zeros(n, n);
            for j in 0..n {
                for k in 0..n {
                    next[(j, k)] = ug[(j, k)] / (c64((m + 1) as f64, 0.0) + self.w[k] - self.w[j]);
                }
            }
            g = next;
            zp *= z;
            let term = &g * zp;
            let size = term.norm();
            sum += term;
            if size < 1e-18 * sum.norm() && m > 2 {
                break;
            }
        }
        let zb: Vec<Complex64> = self.w.iter().map(|&x| (x * log_z).exp()).collect();
        &self.v * sum * diag_complex(&zb) * &self.v_inv
    }
}
