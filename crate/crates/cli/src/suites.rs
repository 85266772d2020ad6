//! `verify <suite>`: each suite runs the invariants of one library module on
//! seeded random samples. Residuals are maxima over samples.

use std::f64::consts::PI;
use std::time::Instant;

use gtstokes::am::{am_via_rh, gamma_am, gamma_am_2x2, phase_theta};
use gtstokes::caterpillar::{
    connection_product, decompose_dlr, extract_stokes, normalized_connection, rh_caterpillar, stokes_subdiag,
    verify_monodromy,
};
use gtstokes::gt::{
    a_modulus_sq, diagonalizer_p, diagonalizer_p_minors, gt_a_coeffs, gt_a_coeffs_minors, gt_coordinates, gt_map,
    ladder_l, normalizer_n, rebuild, thimm_act_full, GtFrame, SpectrumTable, TorusElement,
};
use gtstokes::iso::{
    g_factor, iso_flow, psi_u, psi_u_thimm, verify_mainthm, DecayReport, DeformationPoint, FlowOptions, FlowState,
    RatioSchedule,
};
use gtstokes::linalg::{
    c64, cholesky_upper, ln_gamma, max_abs_diff, minor_det, strict_lower_norm, unitarity_residual, CMatrix,
    HermitianMatrix,
};
use gtstokes::oracle::{connection_numeric, run_oracle, LinearSystem, OracleConfig, OracleReport};
use gtstokes::sampling::{herm0, herm0_capped, sym0, torus};
use gtstokes::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::report::Report;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub n: usize,
    pub samples: Option<usize>,
    pub tol_unitary: f64,
    pub tol_rh: f64,
    pub tol_oracle: f64,
    pub tol_iso: f64,
    pub tol_conserve: f64,
    pub max_slope: f64,
    pub min_slope: f64,
    pub oracle: OracleConfig,
    pub ratios: Vec<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n < 1 {
            return Err("--n must be at least 1".into());
        }
        let tols = [
            self.tol_unitary,
            self.tol_rh,
            self.tol_oracle,
            self.tol_iso,
            self.tol_conserve,
            self.oracle.rtol,
            self.oracle.atol,
        ];
        if tols.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err("tolerances must be positive".into());
        }
        if self.samples == Some(0) {
            return Err("--samples must be positive".into());
        }
        Ok(())
    }

    fn count(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn herm0_set(&self, default: usize) -> Vec<HermitianMatrix> {
        let mut rng = self.rng(0);
        (0..self.count(default)).map(|_| herm0(&mut rng, self.n)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Gt,
    Caterpillar,
    Am,
    OracleXcheck,
    Iso,
    Mainthm,
}

/// One row of the decay CSV.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub sample: usize,
    pub u: String,
    pub min_ratio: f64,
    pub error: f64,
    pub slope: f64,
}

pub fn decay_rows(sample: usize, rep: &DecayReport) -> Vec<DecayRow> {
    rep.points
        .iter()
        .map(|p| DecayRow {
            sample,
            u: p.u
                .as_slice()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            min_ratio: p.min_ratio,
            error: p.error,
            slope: rep.slope,
        })
        .collect()
}

pub struct SuiteOutput {
    pub report: Report,
    pub decay: Option<Vec<DecayRow>>,
}

pub fn run(suite: Suite, cfg: &RunConfig) -> SuiteOutput {
    let mut decay = None;
    let report = match suite {
        Suite::Gt => gt_suite(cfg),
        Suite::Caterpillar => caterpillar_suite(cfg),
        Suite::Am => am_suite(cfg),
        Suite::OracleXcheck => oracle_suite(cfg),
        Suite::Iso => iso_suite(cfg),
        Suite::Mainthm => {
            let (r, rows) = mainthm_suite(cfg);
            decay = Some(rows);
            r
        }
    };
    SuiteOutput { report, decay }
}

fn needs_n(rep: &mut Report, cfg: &RunConfig, min: usize) -> bool {
    if cfg.n < min {
        rep.record(
            "dimension",
            f64::INFINITY,
            0.0,
            Instant::now(),
            Some(format!("suite {} needs n >= {min}", rep.suite)),
        );
        return false;
    }
    true
}

fn with_torus(cfg: &RunConfig, set: &[HermitianMatrix]) -> Vec<(HermitianMatrix, TorusElement)> {
    let mut rng = cfg.rng(1);
    set.iter().map(|a| (a.clone(), torus(&mut rng, a.dim()))).collect()
}

fn level_max(n: usize, from: usize, f: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    let mut e: f64 = 0.0;
    for k in from..n {
        e = e.max(f(k)?);
    }
    Ok(e)
}

fn table_diff(a: &SpectrumTable, b: &SpectrumTable) -> f64 {
    (1..=a.n())
        .flat_map(|k| a.level(k).iter().zip(b.level(k)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Largest violation of strict interlacing plus `slack`; zero when interlaced.
fn interlacing_violation(t: &SpectrumTable, slack: f64) -> f64 {
    let mut e: f64 = 0.0;
    for k in 1..t.n() {
        let (lo, hi) = (t.level(k), t.level(k + 1));
        for i in 0..k {
            e = e.max(lo[i] - hi[i] - slack).max(hi[i + 1] - lo[i] - slack);
        }
    }
    e
}

fn gt_suite(cfg: &RunConfig) -> Report {
    let set = cfg.herm0_set(100);
    let mut rep = Report::new("gt", cfg.n, cfg.seed, set.len());
    let n = cfg.n;
    let (tu, tr) = (cfg.tol_unitary, cfg.tol_rh);

    // dense linear algebra underneath
    rep.max_over("eigen_reconstruction", 1e-11, &set, |a| {
        let (l, v) = a.eigen_desc();
        let d = CMatrix::from_diagonal(&l.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>().into());
        Ok((&v * d * v.adjoint() - a.matrix()).norm() / (1.0 + a.norm()))
    });
    rep.max_over("minor_det_full", 1e-12, &set, |a| {
        let idx: Vec<usize> = (0..n).collect();
        let d = minor_det(a.matrix(), &idx, &idx)?;
        let lu = a.matrix().clone().lu().determinant();
        Ok((d - lu).norm() / lu.norm().max(f64::MIN_POSITIVE))
    });
    let zs: Vec<_> = {
        let mut rng = cfg.rng(2);
        let mut zs = Vec::new();
        while zs.len() < 100 {
            let z = c64(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            if z.norm() <= 5.0 && (z.re - z.re.round()).abs().max(z.im.abs()) > 0.1 {
                zs.push(z);
            }
        }
        zs
    };
    rep.max_over("gamma_reflection", 1e-10, &zs, |&z| {
        let lhs = (ln_gamma(z)? + ln_gamma(c64(1.0, 0.0) - z)?).exp();
        let rhs = c64(PI, 0.0) / (z * PI).sin();
        Ok((lhs - rhs).norm())
    });
    rep.max_over("cholesky_round_trip", 1e-12, &set, |a| {
        let m = a.exp();
        let r = cholesky_upper(&m)?;
        Ok((r.adjoint() * &r - &m).norm() / m.norm())
    });

    rep.max_over("interlacing", 1e-10, &set, |a| {
        Ok(interlacing_violation(&gt_map(a), 0.0))
    });
    rep.max_over("p_unitarity", tu, &set, |a| {
        level_max(n + 1, 1, |k| Ok(unitarity_residual(diagonalizer_p(a, k)?.matrix())))
    });
    rep.max_over("p_row_positivity", tu, &set, |a| {
        level_max(n + 1, 1, |k| {
            let p = diagonalizer_p(a, k)?;
            let row = p.matrix().row(k - 1);
            Ok((0..k).map(|j| row[j].im.abs().max(-row[j].re)).fold(0.0, f64::max))
        })
    });
    rep.max_over("p_minor_formula", tr, &set, |a| {
        level_max(n + 1, 1, |k| {
            let p = diagonalizer_p(a, k)?;
            Ok(max_abs_diff(p.matrix(), &diagonalizer_p_minors(a, k)?))
        })
    });
    rep.max_over("a_minor_formula", tr, &set, |a| {
        level_max(n, 1, |k| {
            let x = gt_a_coeffs(a, k)?;
            let y = gt_a_coeffs_minors(a, k)?;
            Ok(x.iter()
                .zip(&y)
                .map(|(p, q)| (p - q).norm() / (1.0 + p.norm()))
                .fold(0.0, f64::max))
        })
    });
    rep.max_over("a_modulus_identity", tr, &set, |a| {
        let t = gt_map(a);
        level_max(n, 1, |k| {
            let x = gt_a_coeffs(a, k)?;
            Ok((0..k)
                .map(|i| (x[i].norm_sqr() - a_modulus_sq(&t, k, i + 1)).abs())
                .fold(0.0, f64::max))
        })
    });
    rep.max_over("normalizer_identity", tr, &set, |a| {
        let t = gt_map(a);
        level_max(n + 1, 2, |k1| {
            let mut e: f64 = 0.0;
            for j in 1..=k1 {
                e = e.max(normalizer_n(&t, k1, j)?.cross_check);
            }
            Ok(e)
        })
    });
    rep.max_over("ladder_unitarity", tu, &set, |a| {
        level_max(n + 1, 2, |k1| Ok(unitarity_residual(ladder_l(a, k1)?.matrix())))
    });
    rep.max_over("rebuild_round_trip", 1e-7, &set, |a| {
        Ok(max_abs_diff(rebuild(&gt_coordinates(a)?)?.matrix(), a.matrix()))
    });
    let pairs = with_torus(cfg, &set);
    rep.max_over("thimm_preserves_actions", 1e-10, &pairs, |(a, t)| {
        Ok(table_diff(&gt_map(a), &gt_map(&thimm_act_full(t, a)?)))
    });
    rep.max_over("thimm_shifts_angles", tr, &pairs, |(a, t)| {
        let before = gt_coordinates(a)?.angles_as_torus();
        let after = gt_coordinates(&thimm_act_full(t, a)?)?.angles_as_torus();
        Ok(after.distance(&before.compose(t)))
    });
    rep
}

fn caterpillar_suite(cfg: &RunConfig) -> Report {
    let set = cfg.herm0_set(100);
    let mut rep = Report::new("caterpillar", cfg.n, cfg.seed, set.len());
    let n = cfg.n;
    let (tu, tr) = (1e-9, cfg.tol_rh);

    rep.max_over("normalized_connection_unitarity", tu, &set, |a| {
        level_max(n + 1, 2, |k1| {
            Ok(unitarity_residual(normalized_connection(a, k1)?.matrix.matrix()))
        })
    });
    rep.max_over("connection_product_unitarity", tu, &set, |a| {
        Ok(unitarity_residual(connection_product(a)?.matrix()))
    });
    rep.max_over("nu_positive_definite", 0.0, &set, |a| {
        Ok(if cholesky_upper(rh_caterpillar(a)?.nu.matrix()).is_ok() {
            0.0
        } else {
            1.0
        })
    });
    rep.max_over("nu_log_spectra", tr, &set, |a| {
        let t = gt_map(&rh_caterpillar(a)?.nu);
        let log = SpectrumTable::new(t.rows().iter().map(|r| r.iter().map(|x| x.ln()).collect()).collect())?;
        Ok(table_diff(&log, &gt_map(a)))
    });
    let pairs = with_torus(cfg, &set);
    rep.max_over("nu_thimm_equivariance", tr, &pairs, |(a, t)| {
        let lhs = rh_caterpillar(&thimm_act_full(t, a)?)?.nu;
        let rhs = thimm_act_full(t, &rh_caterpillar(a)?.nu)?;
        Ok((lhs.matrix() - rhs.matrix()).norm())
    });
    rep.max_over("stokes_subdiag_formula", tr, &set, |a| {
        let rh = rh_caterpillar(a)?;
        let sub = stokes_subdiag(a)?;
        let mut e: f64 = 0.0;
        for (k, (p, m)) in sub.iter().enumerate() {
            e = e.max((rh.stokes.s_plus[(k, k + 1)] - p).norm());
            e = e.max((rh.stokes.s_minus[(k + 1, k)] - m).norm());
        }
        Ok(e)
    });
    rep.max_over("stokes_diagonal", tr, &set, |a| {
        let rh = rh_caterpillar(a)?;
        Ok(extract_stokes(&rh.nu, &a.diagonal())?.1)
    });
    rep.max_over("stokes_triangularity", 0.0, &set, |a| {
        Ok(strict_lower_norm(&rh_caterpillar(a)?.stokes.s_plus))
    });
    rep.max_over("monodromy", tr, &set, |a| {
        let rh = rh_caterpillar(a)?;
        Ok(verify_monodromy(&rh.connection, a, &rh.stokes) / rh.nu.norm())
    });
    rep.max_over("dlr_reconstruction", 1e-9, &set, |a| {
        level_max(n + 1, 2, |i| {
            let d = decompose_dlr(a, i)?;
            Ok(max_abs_diff(&d.product(), normalized_connection(a, i)?.matrix.matrix()))
        })
    });
    rep.max_over("dlr_thimm_invariance", 1e-9, &pairs, |(a, t)| {
        let b = thimm_act_full(t, a)?;
        level_max(n + 1, 2, |i| {
            let (x, y) = (decompose_dlr(a, i)?, decompose_dlr(&b, i)?);
            let mut e = max_abs_diff(&x.r, &y.r);
            for (p, q) in x.d_left.iter().zip(&y.d_left).chain(x.d_right.iter().zip(&y.d_right)) {
                e = e.max((p.norm() - q.norm()).abs());
            }
            Ok(e)
        })
    });
    rep
}

/// Sign vector of the real parts of all `a^(k)_i`.
fn a_signs(a: &HermitianMatrix) -> Result<Vec<bool>> {
    let mut s = Vec::new();
    for k in 1..a.dim() {
        s.extend(gt_a_coeffs(a, k)?.iter().map(|z| z.re > 0.0));
    }
    Ok(s)
}

fn am_suite(cfg: &RunConfig) -> Report {
    let set = cfg.herm0_set(100);
    let mut rep = Report::new("am", cfg.n, cfg.seed, set.len());
    let tr = cfg.tol_rh;

    rep.max_over("psi_unitarity", cfg.tol_unitary, &set, |a| {
        let f = gamma_am(a)?;
        Ok(f.psi_factors
            .iter()
            .map(|p| unitarity_residual(p.matrix()))
            .fold(0.0, f64::max))
    });
    rep.max_over("gamma_positive_definite", 0.0, &set, |a| {
        Ok(if cholesky_upper(gamma_am(a)?.gamma.matrix()).is_ok() {
            0.0
        } else {
            1.0
        })
    });
    rep.max_over("gt_intertwining", tr, &set, |a| {
        let t = gt_map(&gamma_am(a)?.gamma);
        let ta = gt_map(a);
        Ok((1..=a.dim())
            .flat_map(|k| {
                t.level(k)
                    .iter()
                    .zip(ta.level(k))
                    .map(|(x, y)| (x - y.exp()).abs() / y.exp())
            })
            .fold(0.0, f64::max))
    });
    let reals: Vec<HermitianMatrix> = {
        let mut rng = cfg.rng(3);
        (0..rep.samples).map(|_| sym0(&mut rng, cfg.n)).collect()
    };
    rep.max_over("real_symmetric_component", tr, &reals, |a| {
        let g = gamma_am(a)?.gamma;
        Ok(g.matrix().iter().map(|z| z.im.abs()).fold(0.0, f64::max))
    });
    rep.max_over("sign_vector_mismatches", 0.0, &reals, |a| {
        let (x, y) = (a_signs(a)?, a_signs(&gamma_am(a)?.gamma)?);
        Ok(x.iter().zip(&y).filter(|(p, q)| p != q).count() as f64)
    });
    let pairs = with_torus(cfg, &set);
    rep.max_over("thimm_equivariance", tr, &pairs, |(a, t)| {
        let lhs = gamma_am(&thimm_act_full(t, a)?)?.gamma;
        let rhs = thimm_act_full(t, &gamma_am(a)?.gamma)?;
        Ok((lhs.matrix() - rhs.matrix()).norm())
    });
    rep.max_over("theta_on_actions_only", tr, &pairs, |(a, t)| {
        Ok(phase_theta(a)?.distance(&phase_theta(&thimm_act_full(t, a)?)?))
    });
    rep.max_over("two_path_identity", tr, &set, |a| {
        Ok((gamma_am(a)?.gamma.matrix() - am_via_rh(a)?.matrix()).norm())
    });
    let small: Vec<HermitianMatrix> = {
        let mut rng = cfg.rng(4);
        (0..rep.samples).map(|_| herm0(&mut rng, 2)).collect()
    };
    rep.max_over("closed_form_2x2", 1e-10, &small, |a| {
        let m = a.matrix();
        let closed = gamma_am_2x2(m[(0, 0)].re, m[(0, 1)], m[(1, 1)].re)?;
        Ok(max_abs_diff(gamma_am(a)?.gamma.matrix(), closed.matrix()))
    });
    rep
}

/// `u = (0, 1, 3, 6, ...)`: consecutive gaps `1, 2, 3, ...`.
fn triangular_u(n: usize) -> Vec<f64> {
    (0..n).map(|k| (k * (k + 1) / 2) as f64).collect()
}

/// Oracle `C(E_k, delta_k(A_{k-1})) L^(k)` against the closed-form
/// normalized connection matrices.
fn connection_formula_error(a: &HermitianMatrix, cfg: &OracleConfig) -> Result<f64> {
    let n = a.dim();
    let f = GtFrame::new(a)?;
    level_max(n + 1, 2, |k1| {
        let ak = a.conjugate(&f.p(k1 - 1).adjoint());
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j || (i < k1 && j < k1) {
                ak.matrix()[(i, j)]
            } else {
                c64(0.0, 0.0)
            }
        });
        let mut u = vec![0.0; n];
        u[k1 - 1] = 1.0;
        let sys = LinearSystem::with_any_u(u, HermitianMatrix::symmetrized(d))?;
        let c = connection_numeric(&sys, cfg)? * ladder_l(a, k1)?.matrix();
        Ok(max_abs_diff(&c, normalized_connection(a, k1)?.matrix.matrix()))
    })
}

fn oracle_suite(cfg: &RunConfig) -> Report {
    let mut rep = Report::new("oracle-xcheck", cfg.n, cfg.seed, cfg.count(10));
    if !needs_n(&mut rep, cfg, 2) {
        return rep;
    }
    let set: Vec<HermitianMatrix> = {
        let mut rng = cfg.rng(0);
        (0..rep.samples).map(|_| herm0_capped(&mut rng, cfg.n, 2.0)).collect()
    };
    let u = triangular_u(cfg.n);
    let t = Instant::now();
    let runs: Vec<Result<OracleReport>> = set
        .par_iter()
        .map(|a| run_oracle(&LinearSystem::new(u.clone(), a.clone(), 0.0)?, &cfg.oracle))
        .collect();
    let (ok, err): (Vec<_>, Vec<_>) = runs.into_iter().partition(|r| r.is_ok());
    let reports: Vec<OracleReport> = ok.into_iter().map(|r| r.unwrap()).collect();
    if let Some(Err(e)) = err.into_iter().next() {
        rep.record("oracle_runs", f64::INFINITY, 0.0, t, Some(e.to_string()));
        return rep;
    }
    rep.record("oracle_runs", 0.0, 0.0, t, None);
    let to = cfg.tol_oracle;
    let field = |name: &str, tol: f64, get: fn(&OracleReport) -> f64, rep: &mut Report| {
        let t = Instant::now();
        let v = reports.iter().map(get).fold(0.0, f64::max);
        rep.record(name, v, tol, t, None);
    };
    field("connection_unitarity", to, |r| r.residuals.unitarity, &mut rep);
    field("monodromy", to, |r| r.residuals.monodromy, &mut rep);
    field("stokes_triangularity", to, |r| r.residuals.triangularity, &mut rep);
    field(
        "stokes_hermitian_symmetry",
        cfg.tol_iso,
        |r| r.residuals.hermitian,
        &mut rep,
    );
    field("stokes_diagonal", to, |r| r.residuals.diagonal, &mut rep);
    field("radius_doubling", to, |r| r.residuals.matching, &mut rep);
    field("r0_halving", to, |r| r.residuals.halving, &mut rep);

    let refined = OracleConfig {
        radius: None,
        r0: cfg.oracle.r0 / 2.0,
        rtol: cfg.oracle.rtol / 10.0,
        ..cfg.oracle
    };
    let pairs: Vec<_> = set.iter().zip(&reports).collect();
    rep.max_over("refinement_stability", to, &pairs, |(a, r)| {
        let fine = run_oracle(
            &LinearSystem::new(u.clone(), (*a).clone(), 0.0)?,
            &OracleConfig {
                radius: Some(2.0 * r.radius),
                ..refined
            },
        )?;
        Ok(max_abs_diff(r.s_plus(), fine.s_plus()).max(max_abs_diff(&r.connection, &fine.connection)))
    });
    rep.max_over("connection_formula", to, &set, |a| {
        connection_formula_error(a, &cfg.oracle)
    });
    rep
}

fn iso_suite(cfg: &RunConfig) -> Report {
    let mut rep = Report::new("iso", cfg.n, cfg.seed, cfg.count(5));
    if !needs_n(&mut rep, cfg, 2) {
        return rep;
    }
    let set: Vec<HermitianMatrix> = {
        let mut rng = cfg.rng(0);
        (0..rep.samples).map(|_| herm0_capped(&mut rng, cfg.n, 2.0)).collect()
    };
    // unit-length path: the last point moves right by one
    let u0 = triangular_u(cfg.n);
    let mut u1 = u0.clone();
    *u1.last_mut().unwrap() += 1.0;
    let (p0, p1) = match (DeformationPoint::new(u0, 0.0), DeformationPoint::new(u1, 0.0)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => unreachable!("triangular points are increasing"),
    };
    let t = Instant::now();
    let flows = set
        .par_iter()
        .map(|a| {
            iso_flow(
                &FlowState {
                    u: p0.clone(),
                    phi: a.clone(),
                },
                &p1,
                &FlowOptions::default(),
            )
        })
        .collect::<Result<Vec<_>>>();
    let flows = match flows {
        Ok(f) => f,
        Err(e) => {
            rep.record("flow_runs", f64::INFINITY, 0.0, t, Some(e.to_string()));
            return rep;
        }
    };
    let tc = cfg.tol_conserve;
    let mut add = |name: &str, tol: f64, v: f64| rep.record(name, v, tol, Instant::now(), None);
    add(
        "spectrum_conservation",
        tc,
        flows.iter().map(|f| f.spectrum_drift).fold(0.0, f64::max),
    );
    add(
        "diagonal_conservation",
        tc,
        flows.iter().map(|f| f.diagonal_drift).fold(0.0, f64::max),
    );
    add(
        "step_hermiticity_drift",
        1e-9,
        flows.iter().map(|f| f.max_step_drift).fold(0.0, f64::max),
    );

    let pairs: Vec<_> = set.iter().zip(&flows).collect();
    rep.max_over("stokes_invariance", cfg.tol_iso, &pairs, |(a, f)| {
        let s0 = run_oracle(
            &LinearSystem::new(p0.as_slice().to_vec(), (*a).clone(), 0.0)?,
            &cfg.oracle,
        )?;
        let s1 = run_oracle(
            &LinearSystem::new(p1.as_slice().to_vec(), f.state.phi.clone(), 0.0)?,
            &cfg.oracle,
        )?;
        Ok(max_abs_diff(s0.s_plus(), s1.s_plus()))
    });
    rep.max_over("g_factor_unitarity", cfg.tol_unitary, &set, |a| {
        Ok(g_factor(&p0, a)?.residual())
    });
    rep.max_over("psi_preserves_actions", 1e-9, &set, |a| {
        Ok(table_diff(&gt_map(a), &gt_map(&psi_u(&p0, a)?)))
    });
    rep.max_over("psi_is_thimm_action", cfg.tol_rh, &set, |a| {
        Ok(max_abs_diff(psi_u(&p0, a)?.matrix(), psi_u_thimm(&p0, a)?.matrix()))
    });
    rep
}

/// `u = (0, s)` for `n = 2`, otherwise gaps `1, s - 1, (s - 1)^2, ...` so that
/// `n = 3` gives `(0, 1, s)` and every consecutive ratio is `s - 1`.
pub fn decay_point_for(n: usize, s: f64) -> Result<DeformationPoint> {
    if n == 2 {
        return DeformationPoint::new(vec![0.0, s], 0.0);
    }
    let mut u = vec![0.0, 1.0];
    let mut gap = 1.0;
    for _ in 2..n {
        gap *= s - 1.0;
        u.push(u.last().unwrap() + gap);
    }
    DeformationPoint::new(u, 0.0)
}

pub fn schedule_for(n: usize, ratios: &[f64]) -> Result<RatioSchedule> {
    RatioSchedule::new(
        ratios
            .iter()
            .map(|&s| decay_point_for(n, s))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn mainthm_suite(cfg: &RunConfig) -> (Report, Vec<DecayRow>) {
    let mut rep = Report::new("mainthm", cfg.n, cfg.seed, cfg.count(10));
    if !needs_n(&mut rep, cfg, 2) {
        return (rep, Vec::new());
    }
    let t = Instant::now();
    let schedule = match schedule_for(cfg.n, &cfg.ratios) {
        Ok(s) => s,
        Err(e) => {
            rep.record("schedule", f64::INFINITY, 0.0, t, Some(e.to_string()));
            return (rep, Vec::new());
        }
    };
    let set: Vec<HermitianMatrix> = {
        let mut rng = cfg.rng(0);
        (0..rep.samples).map(|_| herm0_capped(&mut rng, cfg.n, 1.5)).collect()
    };
    let runs: Vec<Result<DecayReport>> = set
        .par_iter()
        .map(|a| verify_mainthm(a, &schedule, &cfg.oracle))
        .collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Ok(r) => {
                rows.extend(decay_rows(i, &r));
                reports.push(r);
            }
            Err(e) => {
                rep.record("decay_runs", f64::INFINITY, 0.0, t, Some(format!("sample {i}: {e}")));
                return (rep, rows);
            }
        }
    }
    rep.record("decay_runs", 0.0, 0.0, t, None);
    let t = Instant::now();
    let worst_oracle = reports
        .iter()
        .flat_map(|r| r.points.iter())
        .map(|p| p.oracle.unitarity.max(p.oracle.monodromy).max(p.oracle.triangularity))
        .fold(0.0, f64::max);
    if cfg.n == 2 {
        // no ratio enters for n = 2: the error is oracle noise and has no slope
        let worst = reports
            .iter()
            .flat_map(|r| r.points.iter())
            .map(|p| p.error)
            .fold(0.0, f64::max);
        rep.record("exact_error", worst, cfg.tol_oracle, t, None);
        rep.record("oracle_residuals", worst_oracle, cfg.tol_oracle, t, None);
        return (rep, rows);
    }
    let slopes: Vec<f64> = reports.iter().map(|r| r.slope).collect();
    rep.record(
        "slope_max",
        slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        cfg.max_slope,
        t,
        None,
    );
    // reported as a negated value so that `residual <= tolerance` reads min slope >= -tol
    rep.record(
        "slope_min_negated",
        -slopes.iter().cloned().fold(f64::INFINITY, f64::min),
        -cfg.min_slope,
        t,
        None,
    );
    rep.record("oracle_residuals", worst_oracle, cfg.tol_oracle, t, None);
    (rep, rows)
}
