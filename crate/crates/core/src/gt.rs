//! Gelfand-Tsetlin map, action-angle coordinates, the diagonalizers `P_k`,
//! ladder matrices and the Thimm torus actions.
//!
//! Levels `k` and eigenvalue indices are 1-based in the public API, as in the
//! usual notation `lambda^(k)_i`; storage is 0-based.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, diag_complex, diag_real, embed, leading_block, minor_det, CMatrix, HermitianMatrix, UnitaryMatrix,
};

/// Relative factor of the default cone-gap tolerance `1e-8 (1 + ||A||)`.
pub const GAP_TOL_FACTOR: f64 = 1e-8;

/// Below this modulus an angle `Arg a^(k)_i` is reported as undefined.
pub const MOD_TOL: f64 = 1e-10;

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Triangular array `rows[k-1] = (lambda^(k)_1 >= ... >= lambda^(k)_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectrumTable {
    rows: Vec<Vec<f64>>,
}

impl SpectrumTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: row.len(),
                });
            }
        }
        Ok(SpectrumTable { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.rows[k - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Smallest interlacing gap between levels `k - 1` and `k`; infinite for `k < 2`.
    pub fn level_gap(&self, k: usize) -> f64 {
        if k < 2 {
            return f64::INFINITY;
        }
        let lo = self.level(k - 1);
        let hi = self.level(k);
        let mut g = f64::INFINITY;
        for i in 0..k - 1 {
            g = g.min(hi[i] - lo[i]).min(lo[i] - hi[i + 1]);
        }
        g
    }

    /// Minimum interlacing gap over all levels, with the level attaining it.
    pub fn cone_gap(&self) -> (f64, usize) {
        (2..=self.n())
            .map(|k| (self.level_gap(k), k))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// Fails with the first level `<= upto` whose gap is not above `gap_tol`.
    pub fn check_cone(&self, upto: usize, gap_tol: f64) -> Result<()> {
        for k in 2..=upto.min(self.n()) {
            let gap = self.level_gap(k);
            if !(gap > gap_tol) {
                return Err(Error::ConeViolation {
                    level: k,
                    gap,
                    tol: gap_tol,
                });
            }
        }
        Ok(())
    }

    /// Spectral norm of the top level, the largest `|lambda^(n)_i|`.
    pub fn norm(&self) -> f64 {
        self.rows
            .last()
            .map(|r| r.iter().map(|x| x.abs()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    pub fn default_gap_tol(&self) -> f64 {
        GAP_TOL_FACTOR * (1.0 + self.norm())
    }
}

pub fn gt_map(a: &HermitianMatrix) -> SpectrumTable {
    let rows = (1..=a.dim()).map(|k| a.leading(k).eigenvalues_desc()).collect();
    SpectrumTable { rows }
}

pub fn in_open_cone(t: &SpectrumTable, gap_tol: f64) -> bool {
    t.check_cone(t.n(), gap_tol).is_ok()
}

/// `N_j^(k1)` from the closed form in the eigenvalues alone.
fn normalizer_closed(lo: &[f64], hi: &[f64], j: usize) -> f64 {
    let mut num = 1.0;
    for (v, &x) in hi.iter().enumerate() {
        if v != j {
            num *= hi[j] - x;
        }
    }
    let den: f64 = lo.iter().map(|&x| hi[j] - x).product();
    (num / den).sqrt()
}

/// `|a^(k)_i|^2` in terms of levels `k` (`lo`) and `k + 1` (`hi`).
fn a_modulus_sq_closed(lo: &[f64], hi: &[f64], i: usize) -> f64 {
    let num: f64 = hi.iter().map(|&x| lo[i] - x).product();
    let mut den = 1.0;
    for (v, &x) in lo.iter().enumerate() {
        if v != i {
            den *= lo[i] - x;
        }
    }
    -num / den
}

/// Normalizer value with the disagreement between its two formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub value: f64,
    pub cross_check: f64,
}

/// `N_j^(k1)`, `2 <= k1 <= n`, `1 <= j <= k1`.
pub fn normalizer_n(t: &SpectrumTable, k1: usize, j: usize) -> Result<Normalizer> {
    if k1 < 2 || k1 > t.n() {
        return Err(Error::IndexOutOfRange { index: k1, max: t.n() });
    }
    if j < 1 || j > k1 {
        return Err(Error::IndexOutOfRange { index: j, max: k1 });
    }
    t.check_cone(k1, 0.0)?;
    let lo = t.level(k1 - 1);
    let hi = t.level(k1);
    let value = normalizer_closed(lo, hi, j - 1);
    let mut s = 1.0;
    for l in 0..k1 - 1 {
        let d = lo[l] - hi[j - 1];
        s += a_modulus_sq_closed(lo, hi, l) / (d * d);
    }
    Ok(Normalizer {
        value,
        cross_check: (s.sqrt() - value).abs(),
    })
}

/// `|a^(k)_i|^2` from the spectra alone.
pub fn a_modulus_sq(t: &SpectrumTable, k: usize, i: usize) -> f64 {
    a_modulus_sq_closed(t.level(k), t.level(k + 1), i - 1)
}

/// Unitary `L^(k1)` with `P_k1 = P_{k1-1} L^(k1)`, built from the level
/// `k1 - 1` and `k1` spectra and the coefficients `a^(k1-1)`.
pub fn ladder_from_data(lo: &[f64], hi: &[f64], a: &[Complex64], n: usize) -> CMatrix {
    let k1 = hi.len();
    let mut l = CMatrix::zeros(k1, k1);
    for j in 0..k1 {
        let nj = normalizer_closed(lo, hi, j);
        for i in 0..k1 - 1 {
            l[(i, j)] = a[i] / (nj * (hi[j] - lo[i]));
        }
        l[(k1 - 1, j)] = c64(1.0 / nj, 0.0);
    }
    embed(&l, n)
}

/// Per-matrix data shared by everything downstream: the spectrum table,
/// all `P_k` and all coefficient vectors `a^(k)`.
#[derive(Debug, Clone)]
pub struct GtFrame {
    a: HermitianMatrix,
    table: SpectrumTable,
    p: Vec<CMatrix>,
    coeffs: Vec<Vec<Complex64>>,
}

impl GtFrame {
    /// Requires `A` in the open cone with the default gap tolerance.
    pub fn new(a: &HermitianMatrix) -> Result<Self> {
        let table = gt_map(a);
        let tol = table.default_gap_tol();
        Self::build(a, table, a.dim(), tol)
    }

    pub fn with_gap_tol(a: &HermitianMatrix, gap_tol: f64) -> Result<Self> {
        let table = gt_map(a);
        Self::build(a, table, a.dim(), gap_tol)
    }

    /// Only levels `1..=upto` are checked and diagonalized.
    fn build(a: &HermitianMatrix, table: SpectrumTable, upto: usize, gap_tol: f64) -> Result<Self> {
        table.check_cone(upto, gap_tol)?;
        let n = a.dim();
        let mut p = Vec::with_capacity(upto);
        let mut coeffs = Vec::with_capacity(upto);
        for k in 1..=upto {
            let pk = eigen_diagonalizer(a, k);
            if k < n {
                let ak = pk.adjoint() * a.matrix() * &pk;
                coeffs.push((0..k).map(|i| ak[(i, k)]).collect());
            }
            p.push(pk);
        }
        Ok(GtFrame {
            a: a.clone(),
            table,
            p,
            coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.a
    }

    pub fn table(&self) -> &SpectrumTable {
        &self.table
    }

    pub fn lambda(&self, k: usize) -> &[f64] {
        self.table.level(k)
    }

    pub fn p(&self, k: usize) -> &CMatrix {
        &self.p[k - 1]
    }

    /// `a^(k)`, `1 <= k <= n - 1`.
    pub fn a_coeffs(&self, k: usize) -> &[Complex64] {
        &self.coeffs[k - 1]
    }

    pub fn normalizer(&self, k1: usize, j: usize) -> f64 {
        normalizer_closed(self.lambda(k1 - 1), self.lambda(k1), j - 1)
    }

    pub fn ladder(&self, k1: usize) -> CMatrix {
        ladder_from_data(self.lambda(k1 - 1), self.lambda(k1), self.a_coeffs(k1 - 1), self.n())
    }
}

fn eigen_diagonalizer(a: &HermitianMatrix, k: usize) -> CMatrix {
    let (_, mut v) = a.leading(k).eigen_desc();
    for j in 0..k {
        let x = v[(k - 1, j)];
        let phase = x.conj() / x.norm();
        for i in 0..k {
            v[(i, j)] *= phase;
        }
        v[(k - 1, j)] = c64(v[(k - 1, j)].re, 0.0);
    }
    embed(&v, a.dim())
}

fn frame_upto(a: &HermitianMatrix, k: usize) -> Result<GtFrame> {
    if k < 1 || k > a.dim() {
        return Err(Error::IndexOutOfRange { index: k, max: a.dim() });
    }
    let table = gt_map(a);
    let tol = table.default_gap_tol();
    GtFrame::build(a, table, k, tol)
}

/// `P_k(A)`: unitary, `k`-th row positive, conjugates the leading `k x k`
/// block of `A` to `diag(lambda^(k))`.
pub fn diagonalizer_p(a: &HermitianMatrix, k: usize) -> Result<UnitaryMatrix> {
    let f = frame_upto(a, k)?;
    Ok(UnitaryMatrix::from_construction(f.p(k).clone()))
}

/// `P_k(A)` from the closed minor formula; an independent path to
/// [`diagonalizer_p`].
pub fn diagonalizer_p_minors(a: &HermitianMatrix, k: usize) -> Result<CMatrix> {
    let f = frame_upto(a, k)?;
    let n = a.dim();
    if k == 1 {
        return Ok(crate::linalg::identity(n));
    }
    let lam = f.lambda(k);
    let lo = f.lambda(k - 1);
    let rows: Vec<usize> = (0..k - 1).collect();
    let mut p = CMatrix::zeros(k, k);
    for j in 0..k {
        let shifted = a.matrix() - diag_real(&vec![lam[j]; n]);
        let mut den = 1.0;
        for (l, &x) in lam.iter().enumerate() {
            if l != j {
                den *= lam[j] - x;
            }
        }
        for &x in lo {
            den *= lam[j] - x;
        }
        let den = den.sqrt();
        for i in 0..k {
            let cols: Vec<usize> = (0..k).filter(|&c| c != i).collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            p[(i, j)] = minor_det(&shifted, &rows, &cols)? * (sign / den);
        }
    }
    Ok(embed(&p, n))
}

/// `a^(k)_i = (P_k^{-1} A P_k)_{i,k+1}`, `1 <= k <= n - 1`.
pub fn gt_a_coeffs(a: &HermitianMatrix, k: usize) -> Result<Vec<Complex64>> {
    if k < 1 || k >= a.dim() {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: a.dim().saturating_sub(1),
        });
    }
    Ok(frame_upto(a, k)?.a_coeffs(k).to_vec())
}

/// `a^(k)` from the closed minor formula.
pub fn gt_a_coeffs_minors(a: &HermitianMatrix, k: usize) -> Result<Vec<Complex64>> {
    if k < 1 || k >= a.dim() {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: a.dim().saturating_sub(1),
        });
    }
    let f = frame_upto(a, k)?;
    let n = a.dim();
    let lam = f.lambda(k);
    let lo: &[f64] = if k >= 2 { f.lambda(k - 1) } else { &[] };
    let rows: Vec<usize> = (0..k).collect();
    let mut cols: Vec<usize> = (0..k - 1).collect();
    cols.push(k);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let shifted = a.matrix() - diag_real(&vec![lam[i]; n]);
        let mut den = 1.0;
        for (l, &x) in lam.iter().enumerate() {
            if l != i {
                den *= lam[i] - x;
            }
        }
        for &x in lo {
            den *= lam[i] - x;
        }
        let sign = if (k + 1 + i).is_multiple_of(2) { 1.0 } else { -1.0 };
        out.push(minor_det(&shifted, &rows, &cols)? * (sign / den.sqrt()));
    }
    Ok(out)
}

/// `L^(k1)(A)`, `2 <= k1 <= n`.
pub fn ladder_l(a: &HermitianMatrix, k1: usize) -> Result<UnitaryMatrix> {
    if k1 < 2 || k1 > a.dim() {
        return Err(Error::IndexOutOfRange {
            index: k1,
            max: a.dim(),
        });
    }
    Ok(UnitaryMatrix::from_construction(frame_upto(a, k1)?.ladder(k1)))
}

/// Element of `T(1) x ... x T(n-1)`; `angles[k-1]` has `k` entries in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusElement {
    angles: Vec<Vec<f64>>,
}

impl TorusElement {
    pub fn new(angles: Vec<Vec<f64>>) -> Result<Self> {
        for (k, row) in angles.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: row.len(),
                });
            }
        }
        Ok(TorusElement {
            angles: angles
                .into_iter()
                .map(|r| r.into_iter().map(wrap_angle).collect())
                .collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        TorusElement {
            angles: (1..n).map(|k| vec![0.0; k]).collect(),
        }
    }

    /// Number of matrix dimensions the element acts on.
    pub fn n(&self) -> usize {
        self.angles.len() + 1
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.angles[k - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.angles
    }

    pub fn inverse(&self) -> Self {
        TorusElement {
            angles: self
                .angles
                .iter()
                .map(|r| r.iter().map(|&x| wrap_angle(-x)).collect())
                .collect(),
        }
    }

    pub fn compose(&self, other: &TorusElement) -> Self {
        TorusElement {
            angles: self
                .angles
                .iter()
                .zip(&other.angles)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| wrap_angle(x + y)).collect())
                .collect(),
        }
    }

    /// Largest angular distance between corresponding entries, on the circle.
    pub fn distance(&self, other: &TorusElement) -> f64 {
        self.angles
            .iter()
            .flatten()
            .zip(other.angles.iter().flatten())
            .map(|(x, y)| {
                let d = wrap_angle(x - y);
                d.min(2.0 * PI - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Acts by the level-`k` torus: `W A W^dagger` with
/// `W = P_k diag(e^{i theta}, 1, ...) P_k^dagger`.
pub fn thimm_act(a: &HermitianMatrix, k: usize, theta: &[f64]) -> Result<HermitianMatrix> {
    if theta.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: theta.len(),
        });
    }
    let f = frame_upto(a, k)?;
    Ok(thimm_with_p(a, f.p(k), theta))
}

fn thimm_unitary(pk: &CMatrix, theta: &[f64]) -> CMatrix {
    let mut t = vec![Complex64::ONE; pk.nrows()];
    for (j, &x) in theta.iter().enumerate() {
        t[j] = Complex64::from_polar(1.0, x);
    }
    pk * diag_complex(&t) * pk.adjoint()
}

fn thimm_with_p(a: &HermitianMatrix, pk: &CMatrix, theta: &[f64]) -> HermitianMatrix {
    a.conjugate(&thimm_unitary(pk, theta))
}

/// The gauge map `X_theta`: level actions applied for `k = 1..n-1`.
pub fn thimm_act_full(theta: &TorusElement, a: &HermitianMatrix) -> Result<HermitianMatrix> {
    if theta.n() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: theta.n(),
        });
    }
    // The level-k action W fixes P_j for j <= k and sends P_j to W P_j for j > k.
    let f = GtFrame::new(a)?;
    let mut p: Vec<CMatrix> = (1..=a.dim()).map(|k| f.p(k).clone()).collect();
    let mut out = a.clone();
    for k in 1..a.dim() {
        let w = thimm_unitary(&p[k - 1], theta.level(k));
        out = out.conjugate(&w);
        for pj in p.iter_mut().skip(k) {
            *pj = &w * &*pj;
        }
    }
    Ok(out)
}

/// Action variables, angles `Arg a^(k)_i` in `[0, 2 pi)` and moduli `|a^(k)_i|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtCoordinates {
    pub actions: SpectrumTable,
    pub angles: Vec<Vec<f64>>,
    pub moduli: Vec<Vec<f64>>,
}

impl GtCoordinates {
    pub fn angles_as_torus(&self) -> TorusElement {
        TorusElement {
            angles: self.angles.clone(),
        }
    }
}

pub fn gt_coordinates(a: &HermitianMatrix) -> Result<GtCoordinates> {
    let f = GtFrame::new(a)?;
    coordinates_of_frame(&f)
}

pub fn coordinates_of_frame(f: &GtFrame) -> Result<GtCoordinates> {
    let n = f.n();
    let mut angles = Vec::with_capacity(n.saturating_sub(1));
    let mut moduli = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let mut ang = Vec::with_capacity(k);
        let mut m = Vec::with_capacity(k);
        for (i, z) in f.a_coeffs(k).iter().enumerate() {
            let r = z.norm();
            if r < MOD_TOL {
                return Err(Error::AngleUndefined {
                    level: k,
                    index: i + 1,
                    modulus: r,
                });
            }
            ang.push(wrap_angle(z.arg()));
            m.push(r);
        }
        angles.push(ang);
        moduli.push(m);
    }
    Ok(GtCoordinates {
        actions: f.table().clone(),
        angles,
        moduli,
    })
}

/// Inverse of [`gt_coordinates`]: assembles `P_n` from the ladder matrices
/// and returns `P_n diag(lambda^(n)) P_n^dagger`.
pub fn rebuild(coords: &GtCoordinates) -> Result<HermitianMatrix> {
    let t = &coords.actions;
    let n = t.n();
    if coords.angles.len() + 1 != n || coords.moduli.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: coords.angles.len(),
        });
    }
    t.check_cone(n, 0.0)?;
    let mut p = crate::linalg::identity(n);
    for k in 1..n {
        let a: Vec<Complex64> = coords.moduli[k - 1]
            .iter()
            .zip(&coords.angles[k - 1])
            .map(|(&r, &phi)| Complex64::from_polar(r, phi))
            .collect();
        p *= ladder_from_data(t.level(k), t.level(k + 1), &a, n);
    }
    Ok(HermitianMatrix::symmetrized(&p * diag_real(t.level(n)) * p.adjoint()))
}

/// Leading `k x k` block of `P^dagger A P`; handy in tests and diagnostics.
pub fn conjugated_block(a: &HermitianMatrix, p: &CMatrix, k: usize) -> CMatrix {
    leading_block(&(p.adjoint() * a.matrix() * p), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_residual};

    fn m(rows: &[&[(f64, f64)]]) -> HermitianMatrix {
        let n = rows.len();
        HermitianMatrix::new(CMatrix::from_fn(n, n, |i, j| c64(rows[i][j].0, rows[i][j].1))).unwrap()
    }

    fn sample3() -> HermitianMatrix {
        m(&[
            &[(0.3, 0.0), (0.7, -0.4), (0.2, 0.5)],
            &[(0.7, 0.4), (-0.6, 0.0), (-0.9, 0.1)],
            &[(0.2, -0.5), (-0.9, -0.1), (1.1, 0.0)],
        ])
    }

    #[test]
    fn gt_map_of_diagonal() {
        let t = gt_map(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 0.0]));
        assert_eq!(t.rows(), &[vec![3.0], vec![3.0, 1.0], vec![3.0, 1.0, 0.0]]);
        assert!(!in_open_cone(&t, 1e-8));
    }

    #[test]
    fn gt_map_of_swap() {
        let t = gt_map(&m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]));
        assert_eq!(t.level(1), &[0.0]);
        assert!((t.level(2)[0] - 1.0).abs() < 1e-15 && (t.level(2)[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cone_membership() {
        let boundary = SpectrumTable::new(vec![vec![3.0], vec![3.0, 1.0]]).unwrap();
        assert!(!in_open_cone(&boundary, 1e-8));
        let inside = SpectrumTable::new(vec![vec![2.0], vec![3.0, 1.0]]).unwrap();
        assert!(in_open_cone(&inside, 1e-8));
        assert!(matches!(
            boundary.check_cone(2, 1e-8),
            Err(Error::ConeViolation { level: 2, .. })
        ));
    }

    #[test]
    fn p1_is_identity_and_p2_of_swap() {
        let a = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        assert_eq!(diagonalizer_p(&a, 1).unwrap().matrix(), &crate::linalg::identity(2));
        let p = diagonalizer_p(&a, 2).unwrap();
        let d = conjugated_block(&a, p.matrix(), 2);
        assert!(max_abs_diff(&d, &diag_real(&[1.0, -1.0])) < 1e-14);
        assert!(p.matrix()[(1, 0)].re > 0.0 && p.matrix()[(1, 1)].re > 0.0);
        assert!(p.matrix()[(1, 0)].im == 0.0 && p.matrix()[(1, 1)].im == 0.0);
    }

    #[test]
    fn minor_paths_agree() {
        let a = sample3();
        for k in 1..=3 {
            let p = diagonalizer_p(&a, k).unwrap();
            let q = diagonalizer_p_minors(&a, k).unwrap();
            assert!(max_abs_diff(p.matrix(), &q) < 1e-12, "k={k}");
        }
        for k in 1..=2 {
            let x = gt_a_coeffs(&a, k).unwrap();
            let y = gt_a_coeffs_minors(&a, k).unwrap();
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).norm() < 1e-12, "k={k}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn first_coefficient_is_a12() {
        let a = sample3();
        let x = gt_a_coeffs(&a, 1).unwrap();
        assert!((x[0] - a.matrix()[(0, 1)]).norm() < 1e-15);
        let c = gt_coordinates(&a).unwrap();
        assert!((c.angles[0][0] - wrap_angle(a.matrix()[(0, 1)].arg())).abs() < 1e-15);
    }

    #[test]
    fn centered_normalizer() {
        let t = SpectrumTable::new(vec![vec![0.0], vec![1.0, -1.0]]).unwrap();
        let nrm = normalizer_n(&t, 2, 1).unwrap();
        assert!((nrm.value - 2f64.sqrt()).abs() < 1e-15);
        assert!(nrm.cross_check < 1e-15);
    }

    #[test]
    fn ladder_two_by_two_is_p2() {
        let a = m(&[&[(0.4, 0.0), (0.3, 0.8)], &[(0.3, -0.8), (-1.0, 0.0)]]);
        let l = ladder_l(&a, 2).unwrap();
        let p = diagonalizer_p(&a, 2).unwrap();
        assert!(max_abs_diff(l.matrix(), p.matrix()) < 1e-14);
        assert!(unitarity_residual(l.matrix()) < 1e-14);
    }

    #[test]
    fn zero_coefficient_has_no_angle() {
        let a = m(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]]);
        let t = gt_map(&a);
        // the cone check fires first: lambda^(1) = lambda^(2)_1
        assert!(!in_open_cone(&t, 1e-8));
        assert!(matches!(gt_coordinates(&a), Err(Error::ConeViolation { .. })));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(-0.5) - (2.0 * PI - 0.5)).abs() < 1e-15);
        assert!(wrap_angle(-1e-18) < 2.0 * PI);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }
}
