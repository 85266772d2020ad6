//! Canonical solutions, connection and Stokes matrices of
//! `dF/dz = (i u - A / (2 pi i z)) F`, computed by direct integration.
//!
//! `F_+` and `F_-` are matched to the truncated formal series on the real
//! axis at `z = R` and `z = -R` (where the exponentials only oscillate), then
//! carried inward along the axis and around short arcs of radius `r1`. `F_0`
//! comes from its convergent series near zero. All comparisons happen on the
//! circle `|z| = r1`.
//!
//! Branch of `log z`: real on the positive axis with the cut along `i R>=0`,
//! so `arg z` runs over `(-3 pi / 2, pi / 2]` and the negative axis has
//! `Im log z = -pi`.

pub mod dop853;
pub mod series;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::caterpillar::StokesPair;
use crate::error::{Error, Result};
use crate::linalg::{
    c64, diag_complex, diag_real, inverse, strict_lower_norm, unitarity_residual, CMatrix, HermitianMatrix, I,
};
use dop853::{Dop853Options, StepStats};
use series::{residue, FormalSeries, ZeroSeries};

/// `u` together with the residue `A`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    u: Vec<f64>,
    a: HermitianMatrix,
    b: CMatrix,
}

impl LinearSystem {
    /// A system with `u` in the chamber: strictly increasing, gaps above
    /// `gap_tol`.
    pub fn new(u: Vec<f64>, a: HermitianMatrix, gap_tol: f64) -> Result<Self> {
        for i in 1..u.len() {
            let gap = u[i] - u[i - 1];
            if !(gap > gap_tol) {
                return Err(Error::ChamberViolation { index: i, gap });
            }
        }
        Self::with_any_u(u, a)
    }

    /// Any real `u`, e.g. the degenerate `E_k`. Equal entries of `u` need a
    /// residue that is diagonal on each block; that is checked when `F_+-`
    /// are built.
    pub fn with_any_u(u: Vec<f64>, a: HermitianMatrix) -> Result<Self> {
        if u.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: u.len(),
            });
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let b = residue(&a);
        Ok(LinearSystem { u, a, b })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn a(&self) -> &HermitianMatrix {
        &self.a
    }

    /// Smallest and largest nonzero `|u_i - u_j|`; `None` when all `u` agree.
    pub fn gaps(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (i, x) in self.u.iter().enumerate() {
            for y in &self.u[i + 1..] {
                let d = (x - y).abs();
                if d > 0.0 {
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        (hi > 0.0).then_some((lo, hi))
    }

    /// `i U + B / z`.
    pub fn coefficient(&self, z: Complex64) -> CMatrix {
        let mut m = &self.b / z;
        for (j, &x) in self.u.iter().enumerate() {
            m[(j, j)] += I * x;
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Matching radius; default `40 / min gap`.
    pub radius: Option<f64>,
    /// Where the series at zero is evaluated before integrating outward.
    pub r0: f64,
    /// Radius of the comparison circle; default `min(1, 1 / max gap)`.
    pub inner_radius: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Also match at `2R` and report the change.
    pub doubling_check: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            radius: None,
            r0: 1e-3,
            inner_radius: None,
            rtol: 1e-10,
            atol: 1e-13,
            doubling_check: true,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidConfig(s.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.r0 > 0.0) {
            return bad("r0 must be positive");
        }
        if let Some(r) = self.radius {
            if !(r > self.r0) {
                return bad("radius must exceed r0");
            }
        }
        if let Some(r) = self.inner_radius {
            if !(r >= self.r0) {
                return bad("inner radius must be at least r0");
            }
        }
        Ok(())
    }

    fn radii(&self, sys: &LinearSystem) -> (f64, f64) {
        let (lo, hi) = sys.gaps().unwrap_or((1.0, 1.0));
        let r = self.radius.unwrap_or(40.0 / lo);
        let r1 = self.inner_radius.unwrap_or((1.0 / hi).min(1.0)).max(self.r0).min(r);
        (r, r1)
    }

    fn ode(&self) -> Dop853Options {
        Dop853Options {
            rtol: self.rtol,
            atol: self.atol,
            ..Dop853Options::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathSegment {
    Line {
        from: Complex64,
        to: Complex64,
    },
    /// `z = radius e^{i phi}`, `phi` from `from` to `to` (radians, either way).
    Arc {
        radius: f64,
        from: f64,
        to: f64,
    },
}

impl PathSegment {
    fn check(&self) -> Result<()> {
        match *self {
            PathSegment::Line { from, to } => {
                let d = to - from;
                let t = if d.norm_sqr() > 0.0 {
                    (-(from.conj() * d).re / d.norm_sqr()).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                if (from + d * t).norm() <= 1e-300 {
                    return Err(Error::PathThroughOrigin);
                }
            }
            PathSegment::Arc { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::PathThroughOrigin);
                }
            }
        }
        Ok(())
    }
}

/// Carries `F_init` along one segment.
pub fn integrate_linear(
    sys: &LinearSystem,
    path: PathSegment,
    f_init: CMatrix,
    opts: &Dop853Options,
) -> Result<(CMatrix, StepStats)> {
    path.check()?;
    if f_init.nrows() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            got: f_init.nrows(),
        });
    }
    match path {
        PathSegment::Line { from, to } => {
            let d = to - from;
            dop853::integrate(
                |t, y| (sys.coefficient(from + d * t) * d) * y,
                0.0,
                1.0,
                f_init,
                opts,
                None,
            )
        }
        PathSegment::Arc { radius, from, to } => {
            // dF/dphi = i z (iU + B/z) F = (-z U + i B) F
            let rhs = |phi: f64, y: &CMatrix| {
                let z = Complex64::from_polar(radius, phi);
                let mut m = &sys.b * I;
                for (j, &x) in sys.u.iter().enumerate() {
                    m[(j, j)] -= z * x;
                }
                m * y
            };
            dop853::integrate(rhs, from, to, f_init, opts, None)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Plus,
    Minus,
}

/// A fundamental solution known at one point `r e^{i arg}`, evaluable
/// elsewhere by integration (arc at fixed radius, then radially).
#[derive(Debug, Clone)]
pub struct SolutionHandle<'a> {
    sys: &'a LinearSystem,
    opts: Dop853Options,
    r: f64,
    arg: f64,
    value: CMatrix,
}

impl<'a> SolutionHandle<'a> {
    pub fn anchor(&self) -> (f64, f64, &CMatrix) {
        (self.r, self.arg, &self.value)
    }

    /// Value at `r e^{i arg}`, with `arg` tracked continuously from the anchor.
    pub fn evaluate(&self, r: f64, arg: f64) -> Result<CMatrix> {
        let mut f = self.value.clone();
        if arg != self.arg {
            f = integrate_linear(
                self.sys,
                PathSegment::Arc {
                    radius: self.r,
                    from: self.arg,
                    to: arg,
                },
                f,
                &self.opts,
            )?
            .0;
        }
        if r != self.r {
            let dir = Complex64::from_polar(1.0, arg);
            f = integrate_linear(
                self.sys,
                PathSegment::Line {
                    from: dir * self.r,
                    to: dir * r,
                },
                f,
                &self.opts,
            )?
            .0;
        }
        Ok(f)
    }
}

/// Canonical solution on `Sect_+` (`which = Plus`) or `Sect_-`, anchored on
/// the comparison circle. Also returns the last series term at the match.
fn canonical_at<'a>(
    sys: &'a LinearSystem,
    which: Sector,
    radius: f64,
    r1: f64,
    opts: Dop853Options,
) -> Result<(SolutionHandle<'a>, f64)> {
    let series = FormalSeries::new(&sys.u, &sys.b, radius)?;
    let arg = match which {
        Sector::Plus => 0.0,
        Sector::Minus => -PI,
    };
    let z = Complex64::from_polar(radius, arg);
    let log_z = c64(radius.ln(), arg);
    let (_, tail) = series.h(z);
    let value = series.solution(z, log_z);
    let far = SolutionHandle {
        sys,
        opts,
        r: radius,
        arg,
        value,
    };
    let value = far.evaluate(r1, arg)?;
    Ok((
        SolutionHandle {
            sys,
            opts,
            r: r1,
            arg,
            value,
        },
        tail,
    ))
}

pub fn canonical_plus<'a>(sys: &'a LinearSystem, cfg: &OracleConfig) -> Result<SolutionHandle<'a>> {
    cfg.validate()?;
    let (r, r1) = cfg.radii(sys);
    Ok(canonical_at(sys, Sector::Plus, r, r1, cfg.ode())?.0)
}

pub fn canonical_minus<'a>(sys: &'a LinearSystem, cfg: &OracleConfig) -> Result<SolutionHandle<'a>> {
    cfg.validate()?;
    let (r, r1) = cfg.radii(sys);
    Ok(canonical_at(sys, Sector::Minus, r, r1, cfg.ode())?.0)
}

/// `F_0` with `F_0 z^{A / 2 pi i} -> I`, anchored on the comparison circle at
/// `arg z = -pi / 2`.
pub fn solution_at_zero<'a>(sys: &'a LinearSystem, cfg: &OracleConfig) -> Result<SolutionHandle<'a>> {
    zero_from(sys, cfg, cfg.r0)
}

fn zero_from<'a>(sys: &'a LinearSystem, cfg: &OracleConfig, r0: f64) -> Result<SolutionHandle<'a>> {
    cfg.validate()?;
    let (_, r1) = cfg.radii(sys);
    let series = ZeroSeries::new(&sys.u, &sys.a);
    let arg = -FRAC_PI_2;
    let start = SolutionHandle {
        sys,
        opts: cfg.ode(),
        r: r0,
        arg,
        value: series.evaluate(Complex64::from_polar(r0, arg), c64(r0.ln(), arg)),
    };
    let value = start.evaluate(r1, arg)?;
    Ok(SolutionHandle {
        sys,
        opts: cfg.ode(),
        r: r1,
        arg,
        value,
    })
}

fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / a.norm().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct OracleResiduals {
    /// `||C C^dagger - I||`.
    pub unitarity: f64,
    /// Norm of the strict lower triangle of `S_+`, relative to `||S_+||`.
    pub triangularity: f64,
    /// `||C e^A C^{-1} - S_+^dagger S_+||`.
    pub monodromy: f64,
    /// `||S_- - S_+^dagger||`, with `S_-` from the continuation through `e^{-2 pi i}`.
    pub hermitian: f64,
    /// `||diag S_+ - e^{[A]/2}||`.
    pub diagonal: f64,
    /// Relative change of `F_+-` on the circle when matching at `2R` instead of `R`.
    pub matching: f64,
    /// Relative change of `F_0` on the circle when `r0` is halved.
    pub halving: f64,
    /// Largest last-kept formal-series term at the match.
    pub series_tail: f64,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    /// `S_+` and the independently computed `S_-`.
    pub stokes: StokesPair,
    pub connection: CMatrix,
    pub radius: f64,
    pub inner_radius: f64,
    pub residuals: OracleResiduals,
}

impl OracleReport {
    pub fn s_plus(&self) -> &CMatrix {
        &self.stokes.s_plus
    }

    /// `S_+^dagger S_+`, the oracle value of `nu(u, A)`.
    pub fn nu(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(self.stokes.s_plus.adjoint() * &self.stokes.s_plus)
    }
}

/// `C = F_+^{-1} F_0` at `arg z = -pi / 2`.
pub fn connection_numeric(sys: &LinearSystem, cfg: &OracleConfig) -> Result<CMatrix> {
    let (r1, arg) = (cfg.radii(sys).1, -FRAC_PI_2);
    let fp = canonical_plus(sys, cfg)?.evaluate(r1, arg)?;
    let f0 = solution_at_zero(sys, cfg)?.evaluate(r1, arg)?;
    crate::linalg::solve(&fp, &f0)
}

/// `S_+ = e^{[A]/2} F_-^{-1} F_+` at `arg z = -pi / 2`, `S_- = S_+^dagger`.
pub fn stokes_numeric(sys: &LinearSystem, cfg: &OracleConfig) -> Result<StokesPair> {
    let (r1, arg) = (cfg.radii(sys).1, -FRAC_PI_2);
    let fp = canonical_plus(sys, cfg)?.evaluate(r1, arg)?;
    let fm = canonical_minus(sys, cfg)?.evaluate(r1, arg)?;
    let half = diag_real(&sys.a.diagonal().iter().map(|x| (x / 2.0).exp()).collect::<Vec<_>>());
    Ok(StokesPair::from_plus(half * crate::linalg::solve(&fm, &fp)?))
}

/// Everything at once: both Stokes matrices, the connection matrix and the
/// self-consistency residuals.
pub fn run_oracle(sys: &LinearSystem, cfg: &OracleConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let (r, r1) = cfg.radii(sys);
    let opts = cfg.ode();
    let (plus, tail_p) = canonical_at(sys, Sector::Plus, r, r1, opts)?;
    let (minus, tail_m) = canonical_at(sys, Sector::Minus, r, r1, opts)?;
    let zero = zero_from(sys, cfg, cfg.r0)?;

    let low = -FRAC_PI_2;
    let fp_low = plus.evaluate(r1, low)?;
    let fm_low = minus.evaluate(r1, low)?;
    let f0_low = zero.value.clone();
    let fp_up = plus.evaluate(r1, FRAC_PI_2)?;
    // F_-(z e^{-2 pi i}) on the ray arg z = pi / 2
    let fm_up = minus.evaluate(r1, -1.5 * PI)?;

    let diag = sys.a.diagonal();
    let half = diag_real(&diag.iter().map(|x| (x / 2.0).exp()).collect::<Vec<_>>());
    let half_inv = diag_real(&diag.iter().map(|x| (-x / 2.0).exp()).collect::<Vec<_>>());
    let s_plus = &half * crate::linalg::solve(&fm_low, &fp_low)?;
    let s_minus = crate::linalg::solve(&fp_up, &fm_up)? * &half_inv;
    let c = crate::linalg::solve(&fp_low, &f0_low)?;

    let mut res = OracleResiduals {
        unitarity: unitarity_residual(&c),
        triangularity: strict_lower_norm(&s_plus) / s_plus.norm(),
        hermitian: (&s_minus - s_plus.adjoint()).norm(),
        diagonal: (0..sys.n())
            .map(|i| (s_plus[(i, i)] - half[(i, i)]).norm_sqr())
            .sum::<f64>()
            .sqrt(),
        series_tail: tail_p.max(tail_m),
        ..OracleResiduals::default()
    };
    res.monodromy = match inverse(&c) {
        Ok(ci) => (&c * sys.a.exp() * ci - s_plus.adjoint() * &s_plus).norm(),
        Err(_) => f64::INFINITY,
    };
    res.halving = rel_diff(&f0_low, &zero_from(sys, cfg, cfg.r0 / 2.0)?.value);
    if cfg.doubling_check {
        let p2 = canonical_at(sys, Sector::Plus, 2.0 * r, r1, opts)?.0;
        let m2 = canonical_at(sys, Sector::Minus, 2.0 * r, r1, opts)?.0;
        res.matching = rel_diff(&plus.value, &p2.value).max(rel_diff(&minus.value, &m2.value));
    }
    Ok(OracleReport {
        stokes: StokesPair { s_plus, s_minus },
        connection: c,
        radius: r,
        inner_radius: r1,
        residuals: res,
    })
}

/// `e^{i U z}` as a diagonal matrix.
pub fn exp_iuz(u: &[f64], z: Complex64) -> CMatrix {
    diag_complex(&u.iter().map(|&x| (I * x * z).exp()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caterpillar::normalized_connection;
    use crate::gt::{ladder_l, GtFrame};
    use crate::linalg::{identity, max_abs_diff};

    fn sample(n: usize, seed: u64, scale: f64) -> HermitianMatrix {
        let mut s = seed.wrapping_add(3);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        };
        let m = HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |_, _| c64(next(), next())));
        let k = scale / m.norm();
        HermitianMatrix::symmetrized(m.matrix() * c64(k, 0.0))
    }

    #[test]
    fn zero_residue_is_a_pure_exponential() {
        let u = vec![0.0, 1.0, 2.0];
        let sys = LinearSystem::new(u.clone(), HermitianMatrix::from_real_diagonal(&[0.0; 3]), 1e-12).unwrap();
        let (z0, z1) = (c64(2.0, -1.0), c64(-0.5, -3.0));
        let f = integrate_linear(
            &sys,
            PathSegment::Line { from: z0, to: z1 },
            identity(3),
            &Dop853Options::default(),
        )
        .unwrap()
        .0;
        let want = exp_iuz(&u, z1 - z0);
        assert!(
            max_abs_diff(&f, &want) < 1e-9 * want.norm(),
            "{}",
            max_abs_diff(&f, &want)
        );
    }

    #[test]
    fn zero_u_is_a_power() {
        let a = sample(2, 1, 1.5);
        let sys = LinearSystem::with_any_u(vec![0.0, 0.0], a.clone()).unwrap();
        let f = integrate_linear(
            &sys,
            PathSegment::Arc {
                radius: 2.0,
                from: 0.0,
                to: -2.0,
            },
            identity(2),
            &Dop853Options::default(),
        )
        .unwrap()
        .0;
        // (z / z0)^{-A / 2 pi i} with log(z / z0) = -2i
        let want = a.map_spectrum(|x| (c64(0.0, x / (2.0 * PI)) * c64(0.0, -2.0)).exp());
        assert!(max_abs_diff(&f, &want) < 1e-9);
    }

    #[test]
    fn round_trip_returns_to_start() {
        let sys = LinearSystem::new(vec![0.0, 1.0], sample(2, 2, 1.0), 1e-12).unwrap();
        let opts = Dop853Options::default();
        let (z0, z1) = (c64(0.5, -0.5), c64(3.0, 1.0));
        let f = integrate_linear(&sys, PathSegment::Line { from: z0, to: z1 }, identity(2), &opts)
            .unwrap()
            .0;
        let g = integrate_linear(&sys, PathSegment::Line { from: z1, to: z0 }, f, &opts)
            .unwrap()
            .0;
        assert!(max_abs_diff(&g, &identity(2)) < 10.0 * opts.rtol * 10.0);
    }

    #[test]
    fn path_through_origin_is_rejected() {
        let sys = LinearSystem::new(vec![0.0, 1.0], sample(2, 2, 1.0), 1e-12).unwrap();
        let r = integrate_linear(
            &sys,
            PathSegment::Line {
                from: c64(-1.0, 0.0),
                to: c64(1.0, 0.0),
            },
            identity(2),
            &Dop853Options::default(),
        );
        assert_eq!(r.unwrap_err(), Error::PathThroughOrigin);
    }

    #[test]
    fn chamber_is_enforced() {
        assert!(matches!(
            LinearSystem::new(vec![0.0, 0.0], sample(2, 1, 1.0), 1e-12),
            Err(Error::ChamberViolation { .. })
        ));
    }

    #[test]
    fn trivial_residue_gives_trivial_data() {
        let sys = LinearSystem::new(
            vec![0.0, 1.0, 3.0],
            HermitianMatrix::from_real_diagonal(&[0.0; 3]),
            1e-12,
        )
        .unwrap();
        let rep = run_oracle(&sys, &OracleConfig::default()).unwrap();
        // global phase error over ~20 oscillations at rtol 1e-10
        assert!(max_abs_diff(&rep.connection, &identity(3)) < 1e-7, "{}", rep.connection);
        assert!(max_abs_diff(rep.s_plus(), &identity(3)) < 1e-7);
    }

    #[test]
    fn oracle_residuals_are_small() {
        for (n, seed) in [(2, 5), (3, 6)] {
            let u = if n == 2 { vec![0.0, 1.0] } else { vec![0.0, 1.0, 3.0] };
            let sys = LinearSystem::new(u, sample(n, seed, 2.0), 1e-12).unwrap();
            let rep = run_oracle(&sys, &OracleConfig::default()).unwrap();
            let r = rep.residuals;
            assert!(r.unitarity < 1e-5, "{r:?}");
            assert!(r.monodromy < 1e-5, "{r:?}");
            assert!(r.triangularity < 1e-5, "{r:?}");
            assert!(r.hermitian < 1e-4, "{r:?}");
            assert!(r.diagonal < 1e-8, "{r:?}");
            assert!(r.matching < 1e-6, "{r:?}");
            assert!(r.halving < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn degenerate_systems_match_the_normalized_connection() {
        let a = sample(3, 9, 1.5);
        let f = GtFrame::new(&a).unwrap();
        for k1 in 2..=3 {
            // residue delta_k1(A_{k1-1}) with A_{k1-1} = P^dagger A P
            let ak = a.conjugate(&f.p(k1 - 1).adjoint());
            let mut d = CMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    if i == j || (i < k1 && j < k1) {
                        d[(i, j)] = ak.matrix()[(i, j)];
                    }
                }
            }
            let mut u = vec![0.0; 3];
            u[k1 - 1] = 1.0;
            let sys = LinearSystem::with_any_u(u, HermitianMatrix::symmetrized(d)).unwrap();
            let c = connection_numeric(&sys, &OracleConfig::default()).unwrap();
            let lhs = c * ladder_l(&a, k1).unwrap().matrix();
            let want = normalized_connection(&a, k1).unwrap();
            assert!(max_abs_diff(&lhs, want.matrix.matrix()) < 1e-5, "k1={k1}");
        }
    }
}
