use keen_core::conserved::{first_integral, PlanarFlow};
use keen_core::continuation::locate_hopf;
use keen_core::integrate::{
    find_section_crossings, integrate, integrate_system, model_options, IntegratorOptions,
    KeenFlow, PlaneSection,
};
use keen_core::model::{Calibration, State};
use keen_core::orbits::{shoot_orbit, shoot_orbit_at_anchor, ShootingOptions};
use keen_core::spectral::critical_kappa2;
use keen_core::ModelParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn planar_drift(h: f64, t_end: f64) -> f64 {
    let p0 = ModelParams::benchmark().with_r(0.0);
    let fi = first_integral(&p0).unwrap();
    let x0 = [fi.omega0 + 0.02, fi.lambda0];
    let sol = integrate_system(&PlanarFlow { params: &p0 }, 0.0, x0, t_end, IntegratorOptions::fixed(h)).unwrap();
    let i0 = fi.value(x0[0], x0[1]).unwrap();
    let last = sol.last();
    (fi.value(last[0], last[1]).unwrap() - i0).abs()
}

#[test]
fn first_integral_is_conserved_without_interest() {
    let p0 = ModelParams::benchmark().with_r(0.0);
    let fi = first_integral(&p0).unwrap();
    for offset in [0.005, 0.02, 0.04] {
        let x0 = [fi.omega0 + offset, fi.lambda0];
        let sol = integrate_system(&PlanarFlow { params: &p0 }, 0.0, x0, 100.0, model_options(1e-11)).unwrap();
        let i0 = fi.value(x0[0], x0[1]).unwrap();
        for s in &sol.states {
            assert!((fi.value(s[0], s[1]).unwrap() - i0).abs() < 1e-8);
        }
    }
}

#[test]
fn fixed_step_order_on_the_planar_flow() {
    // conserved-quantity error after a fixed horizon
    let e1 = planar_drift(0.2, 20.0);
    let e2 = planar_drift(0.1, 20.0);
    let order = (e1 / e2).log2();
    assert!(order > 4.5, "observed order {order}");
}

#[test]
fn halving_the_step_cuts_drift_at_least_fourfold() {
    for h in [0.4, 0.2] {
        let coarse = planar_drift(h, 50.0);
        let fine = planar_drift(h / 2.0, 50.0);
        assert!(coarse >= 4.0 * fine, "h {h}: {coarse:e} vs {fine:e}");
    }
}

#[test]
fn section_times_are_stable_across_tolerances() {
    let p = ModelParams::benchmark();
    let eq = p.interior_equilibrium().unwrap().point;
    let section = PlaneSection::employment(eq.lambda, eq.omega);
    let x0 = State::new(eq.omega + 0.03, eq.lambda, eq.d);
    let times = |tol: f64| -> Vec<f64> {
        let sol = integrate_system(&KeenFlow { params: &p }, 0.0, x0.to_array(), 60.0, model_options(tol)).unwrap();
        find_section_crossings(&sol, &section).iter().map(|e| e.time).filter(|t| *t > 1e-6).collect()
    };
    let (a, b) = (times(1e-12), times(1e-13));
    assert!(a.len() >= 8);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn bisection_matches_the_closed_form_for_random_investment_bounds() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 20 {
        let cal = Calibration {
            kappa0: rng.gen_range(0.06..0.12),
            kappa1: rng.gen_range(0.08..0.16),
            ..Calibration::benchmark()
        };
        let Ok(p) = cal.build() else { continue };
        let Ok(k) = critical_kappa2(&p) else { continue };
        let hopf = locate_hopf(&p, (0.5 * k, 2.0 * k)).unwrap();
        assert!(hopf.relative_difference < 1e-8, "{cal:?}: {hopf:?}");
        checked += 1;
    }
}

#[test]
fn anchored_shooting_reproduces_plain_shooting() {
    let p = ModelParams::benchmark();
    let eq = p.interior_equilibrium().unwrap().point;
    let seed = State::new(0.87162, eq.lambda, 0.03877);
    let plain = shoot_orbit(seed, 6.829, &p, &ShootingOptions::default()).unwrap();
    let start = p.with_kappa2(13.0).unwrap();
    let anchored = shoot_orbit_at_anchor(
        plain.anchor.omega,
        plain.anchor.d + 1e-3,
        plain.period + 0.01,
        13.0,
        &start,
        &ShootingOptions::default(),
    )
    .unwrap();
    assert!((anchored.params.kappa2 - p.kappa2).abs() < 1e-6);
    assert!((anchored.period - plain.period).abs() < 1e-6);
    assert!((anchored.anchor.d - plain.anchor.d).abs() < 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trajectories_stay_admissible(dw in -0.05..0.05f64, dl in -0.02..0.02f64, dd in -0.1..0.3f64) {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap().point;
        let x0 = State::new(eq.omega + dw, eq.lambda + dl, eq.d + dd);
        let traj = integrate(x0, (0.0, 40.0), &p, 1e-10).unwrap();
        for s in &traj.states {
            prop_assert!(s[0] > 0.0 && s[1] > 0.0 && s[1] < 1.0);
        }
    }

    #[test]
    fn debt_free_first_integral_is_invariant(dw in -0.04..0.04f64, dl in -0.015..0.015f64) {
        let p0 = ModelParams::benchmark().with_r(0.0);
        let fi = first_integral(&p0).unwrap();
        let x0 = [fi.omega0 + dw, fi.lambda0 + dl];
        let sol = integrate_system(&PlanarFlow { params: &p0 }, 0.0, x0, 30.0, model_options(1e-11)).unwrap();
        let i0 = fi.value(x0[0], x0[1]).unwrap();
        let last = sol.last();
        prop_assert!((fi.value(last[0], last[1]).unwrap() - i0).abs() < 1e-8);
    }
}
