use gtstokes::caterpillar::stokes_subdiag;
use gtstokes::error::Error;
use gtstokes::iso::{
    asymptotic_phi, boundary_fit, g_factor, iso_flow, verify_mainthm, DeformationPoint, FlowOptions, FlowState,
    RatioSchedule,
};
use gtstokes::linalg::{c64, max_abs_diff, CMatrix, HermitianMatrix};
use gtstokes::oracle::{canonical_plus, run_oracle, LinearSystem, OracleConfig};
use gtstokes::sampling::herm0_capped;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn capped(n: usize, seed: u64, cap: f64) -> HermitianMatrix {
    herm0_capped(&mut ChaCha8Rng::seed_from_u64(seed), n, cap)
}

fn pt(u: &[f64]) -> DeformationPoint {
    DeformationPoint::new(u.to_vec(), 0.0).unwrap()
}

#[test]
fn oracle_is_stable_under_refinement() {
    for (u, seed) in [(vec![0.0, 1.0], 1), (vec![0.0, 1.0, 3.0], 2)] {
        let a = capped(u.len(), seed, 2.0);
        let sys = LinearSystem::new(u, a, 0.0).unwrap();
        let base = OracleConfig::default();
        let coarse = run_oracle(&sys, &base).unwrap();
        let r = coarse.radius;
        let fine = run_oracle(
            &sys,
            &OracleConfig {
                radius: Some(2.0 * r),
                r0: base.r0 / 2.0,
                rtol: base.rtol / 10.0,
                ..base
            },
        )
        .unwrap();
        assert!(max_abs_diff(coarse.s_plus(), fine.s_plus()) < 1e-6);
        assert!(max_abs_diff(&coarse.connection, &fine.connection) < 1e-6);
        let res = coarse.residuals;
        assert!(res.hermitian < 1e-4, "{res:?}");
        assert!(
            res.triangularity < 1e-5 && res.matching < 1e-6 && res.halving < 1e-6,
            "{res:?}"
        );
    }
}

#[test]
fn decoupled_two_by_two_has_closed_form() {
    let a = HermitianMatrix::from_real_diagonal(&[0.7, -1.2]);
    let u = [0.0, 1.0];
    let sys = LinearSystem::new(u.to_vec(), a.clone(), 0.0).unwrap();
    let plus = canonical_plus(&sys, &OracleConfig::default()).unwrap();
    for (r, arg) in [(0.5, -1.0), (2.0, 0.3), (0.2, -2.5)] {
        let z = Complex64::from_polar(r, arg);
        let log_z = c64(r.ln(), arg);
        let want = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                let b = c64(0.0, a.diagonal()[i] / (2.0 * std::f64::consts::PI));
                (c64(0.0, u[i]) * z + b * log_z).exp()
            } else {
                c64(0.0, 0.0)
            }
        });
        let got = plus.evaluate(r, arg).unwrap();
        assert!(max_abs_diff(&got, &want) < 1e-8 * want.norm(), "r={r} arg={arg}");
    }
}

#[test]
fn two_by_two_stokes_match_caterpillar_after_gauge() {
    // for n = 2 the caterpillar limit involves no ratio, so the gauge is exact
    let a = capped(2, 3, 1.5);
    for s in [1.0, 4.0] {
        let u = pt(&[0.0, s]);
        let rep = run_oracle(
            &LinearSystem::new(u.as_slice().to_vec(), a.clone(), 0.0).unwrap(),
            &OracleConfig::default(),
        )
        .unwrap();
        let gauged = a.conjugate(g_factor(&u, &a).unwrap().matrix());
        let (p, m) = stokes_subdiag(&gauged).unwrap()[0];
        assert!((rep.s_plus()[(0, 1)] - p).norm() < 1e-6, "s={s}");
        assert!((rep.stokes.s_minus[(1, 0)] - m).norm() < 1e-6, "s={s}");
    }
}

#[test]
fn stokes_data_is_constant_along_the_flow_for_n3() {
    let a = capped(3, 4, 1.5);
    let (u0, u1) = (pt(&[0.0, 1.0, 3.0]), pt(&[0.0, 1.5, 3.8]));
    let cfg = OracleConfig::default();
    let end = iso_flow(
        &FlowState {
            u: u0.clone(),
            phi: a.clone(),
        },
        &u1,
        &FlowOptions::default(),
    )
    .unwrap();
    let s0 = run_oracle(&LinearSystem::new(u0.as_slice().to_vec(), a, 0.0).unwrap(), &cfg).unwrap();
    let s1 = run_oracle(
        &LinearSystem::new(u1.as_slice().to_vec(), end.state.phi, 0.0).unwrap(),
        &cfg,
    )
    .unwrap();
    assert!(max_abs_diff(s0.s_plus(), s1.s_plus()) < 1e-4);
}

#[test]
fn boundary_fit_round_trip_n2() {
    let phi0 = capped(2, 5, 1.5);
    let start = FlowState {
        u: pt(&[0.0, 1.0]),
        phi: asymptotic_phi(&pt(&[0.0, 1.0]), &phi0).unwrap(),
    };
    let samples: Vec<FlowState> = [30.0, 1000.0]
        .iter()
        .map(|&s| iso_flow(&start, &pt(&[0.0, s]), &FlowOptions::default()).unwrap().state)
        .collect();
    let fit = boundary_fit(&samples).unwrap();
    assert!(max_abs_diff(fit.phi0.matrix(), phi0.matrix()) < 1e-3);
}

#[test]
fn boundary_fit_improves_with_ratio_n3() {
    let phi0 = capped(3, 6, 1.0);
    let start = FlowState {
        u: pt(&[0.0, 1.0, 20.0]),
        phi: asymptotic_phi(&pt(&[0.0, 1.0, 20.0]), &phi0).unwrap(),
    };
    let samples: Vec<FlowState> = [40.0, 80.0, 160.0]
        .iter()
        .map(|&s| {
            iso_flow(&start, &pt(&[0.0, 1.0, s]), &FlowOptions::default())
                .unwrap()
                .state
        })
        .collect();
    let fit = boundary_fit(&samples).unwrap();
    for (e, s) in fit.estimates.iter().zip(&samples) {
        let (x, y) = (e.eigenvalues_desc(), s.phi.eigenvalues_desc());
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-10));
    }
    assert!(fit.residuals[2] < fit.residuals[0]);
}

#[test]
fn mainthm_n2_is_exact() {
    let a = capped(2, 7, 1.5);
    let sched = RatioSchedule::new(vec![pt(&[0.0, 2.0]), pt(&[0.0, 8.0])]).unwrap();
    let rep = verify_mainthm(&a, &sched, &OracleConfig::default()).unwrap();
    for p in &rep.points {
        assert!(p.error < 1e-6, "{}", p.error);
    }
}

#[test]
fn mainthm_n3_decays_like_inverse_ratio() {
    let a = capped(3, 8, 1.5);
    let sched = RatioSchedule::three_point(&[10.0, 20.0, 40.0, 80.0]).unwrap();
    let rep = verify_mainthm(&a, &sched, &OracleConfig::default()).unwrap();
    assert!(rep.slope <= -0.8, "{}", rep.slope);
}

#[test]
fn diagonal_input_is_rejected() {
    let a = HermitianMatrix::from_real_diagonal(&[0.3, -0.2, 0.5]);
    let sched = RatioSchedule::three_point(&[10.0, 20.0]).unwrap();
    assert!(matches!(
        verify_mainthm(&a, &sched, &OracleConfig::default()),
        Err(Error::ConeViolation { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flow_conserves_spectrum_and_diagonal(seed in any::<u64>(), du in prop::collection::vec(-0.3f64..0.3, 3)) {
        let a = capped(3, seed, 1.5);
        let u0 = pt(&[0.0, 1.0, 2.0]);
        let u1 = pt(&[du[0], 1.0 + du[1], 2.0 + du[2]]);
        let rep = iso_flow(&FlowState { u: u0, phi: a }, &u1, &FlowOptions::default()).unwrap();
        prop_assert!(rep.spectrum_drift < 1e-8);
        prop_assert!(rep.diagonal_drift < 1e-8);
        prop_assert!(rep.max_step_drift < 1e-9);
    }

    #[test]
    fn oracle_connection_is_unitary(seed in any::<u64>(), n in 2usize..=3) {
        let u = if n == 2 { vec![0.0, 1.0] } else { vec![0.0, 1.0, 3.0] };
        let sys = LinearSystem::new(u, capped(n, seed, 2.0), 0.0).unwrap();
        let cfg = OracleConfig { doubling_check: false, ..OracleConfig::default() };
        let r = run_oracle(&sys, &cfg).unwrap().residuals;
        prop_assert!(r.unitarity < 1e-5 && r.monodromy < 1e-5 && r.triangularity < 1e-5);
    }
}
