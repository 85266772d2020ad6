//! The isomonodromy flow `dPhi/du_k = (1 / 2 pi i)[Phi, ad_u^{-1} ad_{E_k} Phi]`,
//! its asymptotics near the caterpillar point, the diffeomorphism `psi(u)`
//! and the decay check of `Gamma_AM(psi(u, A))` against `nu(u, A)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::am::{gamma_am, phase_theta};
use crate::error::{Error, Result};
use crate::gt::{gt_map, thimm_act_full, TorusElement};
use crate::linalg::{c64, hermitian_residual, CMatrix, HermitianMatrix, UnitaryMatrix, TWO_PI_I};
use crate::oracle::dop853::{self, Dop853Options, StepStats};
use crate::oracle::{run_oracle, LinearSystem, OracleConfig, OracleResiduals};

/// A point of the chamber `u_1 < ... < u_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DeformationPoint(Vec<f64>);

impl DeformationPoint {
    pub fn new(u: Vec<f64>, gap_tol: f64) -> Result<Self> {
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        for i in 1..u.len() {
            let gap = u[i] - u[i - 1];
            if !(gap > gap_tol) {
                return Err(Error::ChamberViolation { index: i, gap });
            }
        }
        Ok(DeformationPoint(u))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `(u_{k+1} - u_k) / (u_k - u_{k-1})` for `k = 2..n-1`.
    pub fn ratios(&self) -> Vec<f64> {
        let u = &self.0;
        (1..u.len().saturating_sub(1))
            .map(|k| (u[k + 1] - u[k]) / (u[k] - u[k - 1]))
            .collect()
    }

    /// Smallest ratio; for `n <= 2` there are none and the gap `u_2 - u_1`
    /// plays that role.
    pub fn min_ratio(&self) -> f64 {
        let r = self.ratios();
        if r.is_empty() {
            if self.0.len() == 2 {
                self.0[1] - self.0[0]
            } else {
                f64::INFINITY
            }
        } else {
            r.into_iter().fold(f64::INFINITY, f64::min)
        }
    }
}

/// `Phi` at the point `u`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: DeformationPoint,
    pub phi: HermitianMatrix,
}

/// Points with increasing smallest ratio.
#[derive(Debug, Clone)]
pub struct RatioSchedule(Vec<DeformationPoint>);

impl RatioSchedule {
    pub fn new(points: Vec<DeformationPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("empty schedule".into()));
        }
        let n = points[0].n();
        for (i, p) in points.iter().enumerate() {
            if p.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
            if i > 0 && !(p.min_ratio() > points[i - 1].min_ratio()) {
                return Err(Error::InvalidConfig(format!(
                    "schedule point {} does not increase the smallest ratio",
                    i + 1
                )));
            }
        }
        Ok(RatioSchedule(points))
    }

    /// `u = (0, 1, s)` for each `s`.
    pub fn three_point(s: &[f64]) -> Result<Self> {
        let pts = s
            .iter()
            .map(|&x| DeformationPoint::new(vec![0.0, 1.0, x], 0.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts)
    }

    pub fn points(&self) -> &[DeformationPoint] {
        &self.0
    }
}

fn check_dims(u: &[f64], phi: &CMatrix) -> Result<()> {
    if u.len() != phi.nrows() {
        return Err(Error::DimensionMismatch {
            expected: phi.nrows(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Derivative of `Phi` along the direction `du`:
/// `sum_k du_k (1 / 2 pi i)[Phi, ad_u^{-1} ad_{E_k} Phi]`.
pub fn iso_rhs(u: &[f64], phi: &CMatrix, du: &[f64]) -> Result<CMatrix> {
    check_dims(u, phi)?;
    check_dims(du, phi)?;
    let n = u.len();
    let mut x = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                if d == 0.0 {
                    return Err(Error::ChamberViolation {
                        index: i.max(j),
                        gap: 0.0,
                    });
                }
                x[(i, j)] = phi[(i, j)] * ((du[i] - du[j]) / d);
            }
        }
    }
    Ok((phi * &x - &x * phi) / TWO_PI_I)
}

/// `dPhi / du_k` (0-based `k`).
pub fn iso_partial(u: &[f64], phi: &CMatrix, k: usize) -> Result<CMatrix> {
    if k >= u.len() {
        return Err(Error::IndexOutOfRange { index: k, max: u.len() });
    }
    let mut du = vec![0.0; u.len()];
    du[k] = 1.0;
    iso_rhs(u, phi, &du)
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowReport {
    pub state: FlowState,
    /// Largest Hermitian residual seen before re-symmetrizing a step.
    pub max_step_drift: f64,
    /// `max |lambda_i(end) - lambda_i(start)|`.
    pub spectrum_drift: f64,
    /// `max |Phi_ii(end) - Phi_ii(start)|`.
    pub diagonal_drift: f64,
    pub stats: StepStats,
}

/// Follows the straight segment from `state.u` to `target`.
pub fn iso_flow(state: &FlowState, target: &DeformationPoint, opts: &FlowOptions) -> Result<FlowReport> {
    let u0 = state.u.as_slice();
    let u1 = target.as_slice();
    check_dims(u1, state.phi.matrix())?;
    // the chamber is convex, so both endpoints inside suffice
    let du: Vec<f64> = u1.iter().zip(u0).map(|(b, a)| b - a).collect();
    let mut drift: f64 = 0.0;
    let mut hook = |_: f64, y: &mut CMatrix| {
        drift = drift.max(hermitian_residual(y));
        *y = (&*y + y.adjoint()) * c64(0.5, 0.0);
    };
    let ode = Dop853Options {
        rtol: opts.rtol,
        atol: opts.atol,
        ..Dop853Options::default()
    };
    let mut failure = None;
    let rhs = |t: f64, y: &CMatrix| {
        let u: Vec<f64> = u0.iter().zip(&du).map(|(a, d)| a + t * d).collect();
        match iso_rhs(&u, y, &du) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                CMatrix::zeros(y.nrows(), y.ncols())
            }
        }
    };
    let (phi, stats) = dop853::integrate(rhs, 0.0, 1.0, state.phi.matrix().clone(), &ode, Some(&mut hook))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let phi = HermitianMatrix::symmetrized(phi);
    let spectrum_drift = max_diff(&state.phi.eigenvalues_desc(), &phi.eigenvalues_desc());
    let diagonal_drift = max_diff(&state.phi.diagonal(), &phi.diagonal());
    Ok(FlowReport {
        state: FlowState { u: target.clone(), phi },
        max_step_drift: drift,
        spectrum_drift,
        diagonal_drift,
        stats,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Leading `k` block of `A` plus its diagonal.
pub fn delta_k(a: &HermitianMatrix, k: usize) -> HermitianMatrix {
    let m = a.matrix();
    HermitianMatrix::symmetrized(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j || (i < k && j < k) {
            m[(i, j)]
        } else {
            c64(0.0, 0.0)
        }
    }))
}

fn ratio_powers(u: &DeformationPoint, a: &HermitianMatrix, invert: bool) -> Result<CMatrix> {
    let n = u.n();
    if n != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: n,
        });
    }
    let v = u.as_slice();
    let mut g = crate::linalg::identity(n);
    if n < 2 {
        return Ok(g);
    }
    let mut factors = vec![(v[1] - v[0], 1)];
    for (k, r) in u.ratios().into_iter().enumerate() {
        factors.push((r, k + 2));
    }
    for (x, k) in factors {
        if !(x > 0.0) {
            return Err(Error::FormulaDomain {
                what: "ratio in g(u; A)",
                value: x,
            });
        }
        let x = if invert { 1.0 / x } else { x };
        g *= delta_k(a, k).ratio_power(x);
    }
    Ok(g)
}

/// `g(u; A) = (1 / (u_2 - u_1))^{delta_1(A) / 2 pi i}
///   prod_{k=2}^{n-1} ((u_k - u_{k-1}) / (u_{k+1} - u_k))^{delta_k(A) / 2 pi i}`.
pub fn g_factor(u: &DeformationPoint, a: &HermitianMatrix) -> Result<UnitaryMatrix> {
    UnitaryMatrix::new(ratio_powers(u, a, true)?, 1e-9)
}

/// The leading term of `Phi(u; Phi_0)` near the caterpillar point:
/// `Ad((u_2 - u_1)^{delta_1 / 2 pi i} prod ratio_k^{delta_k / 2 pi i}) Phi_0`.
pub fn asymptotic_phi(u: &DeformationPoint, phi0: &HermitianMatrix) -> Result<HermitianMatrix> {
    let h = ratio_powers(u, phi0, false)?;
    Ok(phi0.conjugate(&h))
}

/// Torus element `theta_1(u, A)` with `Ad_{g(u; A)} = X_{theta_1}`.
pub fn ratio_angles(u: &DeformationPoint, a: &HermitianMatrix) -> Result<TorusElement> {
    let n = a.dim();
    if u.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.n(),
        });
    }
    let t = gt_map(a);
    let d = a.diagonal();
    let v = u.as_slice();
    let levels = (1..n)
        .map(|k| {
            t.level(k)
                .iter()
                .map(|&l| {
                    let mut c = -(d[k] - l) * (v[k] - v[k - 1]).ln() / (2.0 * PI);
                    if k >= 2 {
                        c -= (l - d[k - 1]) * (v[k - 1] - v[k - 2]).ln() / (2.0 * PI);
                    }
                    c
                })
                .collect()
        })
        .collect();
    TorusElement::new(levels)
}

/// `psi(u, A) = X_theta^{-1}(g A g^{-1})`.
pub fn psi_u(u: &DeformationPoint, a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let g = g_factor(u, a)?;
    let b = a.conjugate(g.matrix());
    let theta = phase_theta(a)?;
    thimm_act_full(&theta.inverse(), &b)
}

/// The same map as a single Thimm transformation with angles `theta_1 - theta`.
pub fn psi_u_thimm(u: &DeformationPoint, a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let phi = ratio_angles(u, a)?.compose(&phase_theta(a)?.inverse());
    thimm_act_full(&phi, a)
}

#[derive(Debug, Clone)]
pub struct BoundaryFit {
    /// `Ad_{g(u; Phi(u))} Phi(u)` for each sample.
    pub estimates: Vec<HermitianMatrix>,
    /// Richardson extrapolation in `1 / min ratio` of the last two estimates.
    pub phi0: HermitianMatrix,
    /// `||estimate_i - phi0||`.
    pub residuals: Vec<f64>,
}

/// Strips the ratio-power dressing off each sample and extrapolates.
///
/// Only the smallest ratio is treated as the controlling parameter.
pub fn boundary_fit(samples: &[FlowState]) -> Result<BoundaryFit> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("boundary_fit needs at least one sample".into()));
    }
    let estimates = samples
        .iter()
        .map(|s| Ok(s.phi.conjugate(g_factor(&s.u, &s.phi)?.matrix())))
        .collect::<Result<Vec<_>>>()?;
    let phi0 = if samples.len() == 1 {
        estimates[0].clone()
    } else {
        let m = samples.len();
        let (r1, r2) = (samples[m - 2].u.min_ratio(), samples[m - 1].u.min_ratio());
        if !(r1.is_finite() && r2.is_finite() && r2 > r1) {
            estimates[m - 1].clone()
        } else {
            let e1 = estimates[m - 2].matrix();
            let e2 = estimates[m - 1].matrix();
            HermitianMatrix::symmetrized((e2 * c64(r2, 0.0) - e1 * c64(r1, 0.0)) / c64(r2 - r1, 0.0))
        }
    };
    let residuals = estimates.iter().map(|e| (e.matrix() - phi0.matrix()).norm()).collect();
    Ok(BoundaryFit {
        estimates,
        phi0,
        residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPoint {
    pub u: DeformationPoint,
    pub min_ratio: f64,
    pub error: f64,
    pub oracle: OracleResiduals,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub points: Vec<DecayPoint>,
    /// Least-squares slope of `ln error` against `ln min_ratio`.
    pub slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `E(u) = ||Gamma_AM(psi(u, A)) - nu(u, A)||` along the schedule, with
/// `nu(u, A)` from the ODE oracle.
pub fn verify_mainthm(a: &HermitianMatrix, schedule: &RatioSchedule, cfg: &OracleConfig) -> Result<DecayReport> {
    if a.dim() < 2 {
        return Err(Error::InvalidConfig("need n >= 2".into()));
    }
    let mut points = Vec::new();
    for u in schedule.points() {
        points.push(decay_point(a, u, cfg)?);
    }
    let slope = if points.len() >= 2 {
        let x: Vec<f64> = points.iter().map(|p| p.min_ratio).collect();
        let y: Vec<f64> = points.iter().map(|p| p.error).collect();
        log_log_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(DecayReport { points, slope })
}

/// One schedule point of [`verify_mainthm`].
pub fn decay_point(a: &HermitianMatrix, u: &DeformationPoint, cfg: &OracleConfig) -> Result<DecayPoint> {
    let approx = gamma_am(&psi_u(u, a)?)?.gamma;
    let sys = LinearSystem::new(u.as_slice().to_vec(), a.clone(), 0.0)?;
    let rep = run_oracle(&sys, cfg)?;
    Ok(DecayPoint {
        u: u.clone(),
        min_ratio: u.min_ratio(),
        error: (approx.matrix() - rep.nu().matrix()).norm(),
        oracle: rep.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gt::gt_map;
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

    fn pt(u: &[f64]) -> DeformationPoint {
        DeformationPoint::new(u.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn diagonal_phi_is_stationary() {
        let phi = HermitianMatrix::from_real_diagonal(&[0.3, -1.0, 2.0]);
        assert_eq!(
            iso_rhs(&[0.0, 1.0, 2.0], phi.matrix(), &[0.2, 0.5, 1.0]).unwrap(),
            CMatrix::zeros(3, 3)
        );
    }

    #[test]
    fn diagonal_entries_do_not_move() {
        let a = sample(4, 1, 2.0);
        let u = [0.0, 0.7, 1.5, 4.0];
        for k in 0..4 {
            let d = iso_partial(&u, a.matrix(), k).unwrap();
            for i in 0..4 {
                assert!(d[(i, i)].norm() < 1e-14);
            }
            assert!(hermitian_residual(&d) < 1e-14);
        }
    }

    #[test]
    fn partials_add_up() {
        let a = sample(3, 2, 1.0);
        let u = [0.0, 1.0, 2.5];
        let du = [0.3, -0.2, 0.9];
        let total = iso_rhs(&u, a.matrix(), &du).unwrap();
        let mut sum = CMatrix::zeros(3, 3);
        for k in 0..3 {
            sum += iso_partial(&u, a.matrix(), k).unwrap() * c64(du[k], 0.0);
        }
        assert!(max_abs_diff(&total, &sum) < 1e-15);
    }

    #[test]
    fn partial_matches_finite_difference_of_flow() {
        let a = sample(3, 4, 1.0);
        let st = FlowState {
            u: pt(&[0.0, 1.0, 2.0]),
            phi: a.clone(),
        };
        let h = 1e-4;
        let fwd = iso_flow(&st, &pt(&[0.0, 1.0, 2.0 + h]), &FlowOptions::default()).unwrap();
        let fd = (fwd.state.phi.matrix() - a.matrix()) / c64(h, 0.0);
        let d = iso_partial(&[0.0, 1.0, 2.0], a.matrix(), 2).unwrap();
        assert!(max_abs_diff(&fd, &d) < 1e-3);
    }

    #[test]
    fn flow_conserves_spectrum_and_diagonal() {
        let a = sample(3, 5, 1.5);
        let st = FlowState {
            u: pt(&[0.0, 1.0, 2.0]),
            phi: a,
        };
        let rep = iso_flow(&st, &pt(&[0.0, 1.5, 2.8]), &FlowOptions::default()).unwrap();
        assert!(rep.spectrum_drift < 1e-8, "{}", rep.spectrum_drift);
        assert!(rep.diagonal_drift < 1e-8);
        assert!(rep.max_step_drift < 1e-9);
    }

    #[test]
    fn n2_flow_is_the_ratio_power() {
        let phi0 = sample(2, 6, 1.0);
        let st = FlowState {
            u: pt(&[0.0, 1.0]),
            phi: asymptotic_phi(&pt(&[0.0, 1.0]), &phi0).unwrap(),
        };
        let end = iso_flow(&st, &pt(&[0.0, 30.0]), &FlowOptions::default()).unwrap();
        let want = asymptotic_phi(&pt(&[0.0, 30.0]), &phi0).unwrap();
        assert!(max_abs_diff(end.state.phi.matrix(), want.matrix()) < 1e-9);
    }

    #[test]
    fn g_is_unitary_and_equal_gaps_drop_ratios() {
        let a = sample(4, 7, 2.0);
        let g = g_factor(&pt(&[0.0, 1.5, 3.0, 4.5]), &a).unwrap();
        assert!(g.residual() < 1e-10);
        let only = delta_k(&a, 1).ratio_power(1.0 / 1.5);
        assert!(max_abs_diff(g.matrix(), &only) < 1e-12);
    }

    #[test]
    fn ad_g_is_a_thimm_transformation() {
        for n in 2..=4 {
            let a = sample(n, 10 + n as u64, 1.5);
            let u = pt(&[0.0, 0.8, 3.1, 11.0][..n]);
            let lhs = a.conjugate(g_factor(&u, &a).unwrap().matrix());
            let rhs = thimm_act_full(&ratio_angles(&u, &a).unwrap(), &a).unwrap();
            assert!(max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn psi_paths_agree_and_keep_actions() {
        for n in 2..=5 {
            let a = sample(n, 20 + n as u64, 2.0);
            let u = pt(&[0.0, 1.0, 2.5, 9.0, 40.0][..n]);
            let p1 = psi_u(&u, &a).unwrap();
            let p2 = psi_u_thimm(&u, &a).unwrap();
            assert!(max_abs_diff(p1.matrix(), p2.matrix()) < 1e-8, "n={n}");
            let (t1, t0) = (gt_map(&p1), gt_map(&a));
            for k in 1..=n {
                for (x, y) in t1.level(k).iter().zip(t0.level(k)) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn boundary_fit_recovers_diagonal_and_n2_data() {
        let d = HermitianMatrix::from_real_diagonal(&[1.0, -0.5, 0.2]);
        let fit = boundary_fit(&[FlowState {
            u: pt(&[0.0, 1.0, 3.0]),
            phi: d.clone(),
        }])
        .unwrap();
        assert!(max_abs_diff(fit.phi0.matrix(), d.matrix()) < 1e-14);

        let phi0 = sample(2, 8, 1.0);
        let start = FlowState {
            u: pt(&[0.0, 1.0]),
            phi: asymptotic_phi(&pt(&[0.0, 1.0]), &phi0).unwrap(),
        };
        let mut samples = Vec::new();
        for s in [10.0, 100.0, 1000.0] {
            samples.push(iso_flow(&start, &pt(&[0.0, s]), &FlowOptions::default()).unwrap().state);
        }
        let fit = boundary_fit(&samples).unwrap();
        assert!(max_abs_diff(fit.phi0.matrix(), phi0.matrix()) < 1e-3);
        for (e, s) in fit.estimates.iter().zip(&samples) {
            let (x, y) = (e.eigenvalues_desc(), s.phi.eigenvalues_desc());
            assert!(max_diff(&x, &y) < 1e-12);
        }
    }

    #[test]
    fn n1_has_trivial_g() {
        let a = HermitianMatrix::from_real_diagonal(&[0.4]);
        assert_eq!(g_factor(&pt(&[2.0]), &a).unwrap().matrix(), &identity(1));
    }

    #[test]
    fn schedule_must_increase() {
        assert!(RatioSchedule::three_point(&[10.0, 5.0]).is_err());
        assert!(RatioSchedule::three_point(&[10.0, 20.0]).is_ok());
    }
}
