use trajexp::engine::compute_expansion;
use trajexp::fixtures::{self, BeyondAllOrders};
use trajexp::oracle::{
    estimate_limit, fit_decay_rate, integrate_dense, integrate_trajectory, verify_expansion, verify_with_velocity,
    FnField, IntegratorOptions, OrderStatus, VerifyOptions,
};
use trajexp::{Error, PolyVec, Rational};

fn zero() -> Rational {
    Rational::from_integer(0.into())
}

#[test]
fn zero_velocity_keeps_position() {
    let u = FnField::new(2, |_: &[f64], _| vec![0.0, 0.0]);
    let s = integrate_trajectory(&u, &[0.5, -1.0], 0.0, 10.0, 1e-10).unwrap();
    assert!(s.positions.iter().all(|p| p == &vec![0.5, -1.0]));
    let lim = estimate_limit(&s, 1.0).unwrap();
    assert_eq!(lim.x_star, vec![0.5, -1.0]);
    assert_eq!(lim.bound, 0.0);
}

#[test]
fn constant_velocity_translates() {
    let u = FnField::new(2, |_: &[f64], _| vec![1.0, 0.0]);
    let s = integrate_trajectory(&u, &[0.0, 0.0], 0.0, 3.0, 1e-10).unwrap();
    let end = s.last_position();
    assert!((end[0] - 3.0).abs() < 1e-10 && end[1].abs() < 1e-10);
}

#[test]
fn closed_form_trajectory_within_ten_tol() {
    let fe = fixtures::closed_form_1d::<Rational>(4).unwrap();
    let x0 = fixtures::Fixture::ClosedForm1d.x0();
    for tol in [1e-8, 1e-10, 1e-12] {
        let s = integrate_trajectory(&fe, &x0, 0.0, 20.0, tol).unwrap();
        let err = s
            .times
            .iter()
            .zip(&s.positions)
            .map(|(t, x)| (x[0] - ((-(-t).exp()).exp() - 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 10.0 * tol, "tol {tol}: err {err}");
    }
}

#[test]
fn limit_of_closed_form() {
    let fe = fixtures::closed_form_1d::<Rational>(4).unwrap();
    let x0 = fixtures::Fixture::ClosedForm1d.x0();
    let s = integrate_trajectory(&fe, &x0, 0.0, 30.0, 1e-12).unwrap();
    let lim = estimate_limit(&s, 1.0).unwrap();
    assert!(lim.x_star[0].abs() < 1e-12, "{:?}", lim);
    assert!(lim.bound < 1e-12);
    assert!(matches!(lim.clone().require(1e-20), Err(Error::HorizonInsufficient { .. })));
    // shorter windows give larger bounds
    let short = integrate_trajectory(&fe, &x0, 0.0, 15.0, 1e-12).unwrap();
    let b = estimate_limit(&short, 1.0).unwrap();
    assert!(b.bound > lim.bound);
    let half = integrate_trajectory(&fe, &x0, 0.0, 7.5, 1e-12).unwrap();
    assert!((half.last_position()[0] - short.last_position()[0]).abs() <= estimate_limit(&half, 1.0).unwrap().bound);
}

#[test]
fn fit_examples() {
    let t: Vec<f64> = (1..=10).map(f64::from).collect();
    let v: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
    let f = fit_decay_rate(&t, &v, None).unwrap();
    assert!((f.slope - 3.0).abs() < 1e-6);

    let t: Vec<f64> = (0..=100).map(|i| 10.0 + i as f64 / 10.0).collect();
    let v: Vec<f64> = t.iter().map(|t| t * (-2.0 * t).exp()).collect();
    let f = fit_decay_rate(&t, &v, Some(0.0)).unwrap();
    assert!((1.8..=2.0).contains(&f.slope), "{}", f.slope);

    let c = vec![5.0; 10];
    assert!(fit_decay_rate(&t[..10], &c, None).unwrap().slope.abs() < 1e-12);
    assert!(matches!(
        fit_decay_rate(&t[..9], &c[..9], None),
        Err(Error::TooFewPoints { .. })
    ));
}

#[test]
fn dense_output_matches_step_points() {
    let fe = fixtures::closed_form_1d::<f64>(2).unwrap();
    let x0 = fixtures::Fixture::ClosedForm1d.x0();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.137).collect();
    let s = integrate_dense(&fe, &x0, 0.0, &times, IntegratorOptions::new(1e-11)).unwrap();
    for (t, x) in s.times.iter().zip(&s.positions) {
        assert!((x[0] - fixtures::closed_form_1d_solution(x0[0], *t)).abs() < 1e-9);
    }
}

#[test]
fn non_finite_velocity_reported() {
    let u = FnField::new(1, |x: &[f64], _| vec![x[0] * x[0]]);
    let err = integrate_trajectory(&u, &[1.0], 0.0, 2.0, 1e-10).unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. } | Error::StepSizeUnderflow { .. }), "{err:?}");
}

#[test]
fn closed_form_verifies_with_next_rate() {
    let fe = fixtures::closed_form_1d::<Rational>(8).unwrap();
    let te = compute_expansion(&fe, &[zero()], 5).unwrap();
    let x0 = fixtures::Fixture::ClosedForm1d.x0();
    let report = verify_expansion(&fe, &te, &x0, &VerifyOptions::new(40.0, 1e-12)).unwrap();
    for o in &report.orders {
        let slope = o.slope().unwrap();
        eprintln!("N={} slope={slope} window={:?} status={:?}", o.order, o.window, o.status);
        assert_eq!(o.status, OrderStatus::Pass);
        assert!((slope - (o.order + 1) as f64).abs() / (o.order + 1) as f64 <= 0.05);
    }
    assert!(report.passed);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("t,e_1,e_2,e_3,e_4,e_5"));
}

#[test]
fn perturbed_zeta_fails() {
    let fe = fixtures::closed_form_1d::<Rational>(8).unwrap();
    let te = compute_expansion(&fe, &[zero()], 4).unwrap();
    let bump = Rational::new(1.into(), 1000.into());
    let z2 = te.zetas[1].add(&PolyVec::constant(vec![bump])).unwrap();
    let bad = te.with_zeta(2, z2).unwrap();
    let x0 = fixtures::Fixture::ClosedForm1d.x0();
    let report = verify_expansion(&fe, &bad, &x0, &VerifyOptions::new(40.0, 1e-12)).unwrap();
    assert!(report.order(1).unwrap().passed());
    let o2 = report.order(2).unwrap();
    assert_eq!(o2.status, OrderStatus::Fail);
    // the injected e^{-2t} term pulls the fit well below the e^{-3t} target
    let tail = o2.tail_fit.unwrap().slope;
    assert!(tail < o2.slope().unwrap() && o2.slope().unwrap() < 0.95 * 3.0, "{tail}");
    assert!(!report.passed);
}

#[test]
fn degenerate_field_decays_beyond_all_orders() {
    let fe = fixtures::degenerate_1d::<Rational>(5).unwrap();
    let x0 = fixtures::Fixture::Degenerate1d.x0();
    let x_star = fixtures::degenerate_1d_limit(x0[0]);
    let te = compute_expansion(&fe, &[trajexp::scalar::rational_from_f64(x_star).unwrap()], 4).unwrap();
    assert!(te.zetas.iter().all(PolyVec::is_zero));
    let report = verify_with_velocity(&BeyondAllOrders, &te, &x0, &VerifyOptions::new(12.0, 1e-12)).unwrap();
    for o in &report.orders {
        eprintln!("N={} slope={:?} window={:?} status={:?}", o.order, o.slope(), o.window, o.status);
        assert_eq!(o.status, OrderStatus::Pass);
    }
}
