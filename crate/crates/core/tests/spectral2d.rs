use std::f64::consts::TAU;

use trajexp::exec::Execution;
use trajexp::fixtures::taylor_green_velocity;
use trajexp::spectral2d::{
    extract_leading_term, read_checkpoint, simulate, write_checkpoint, InitialCondition, SimulationSpec, Spectral2d,
};
use trajexp::{Error, SpatialField};

fn tg_spec(t_end: f64) -> SimulationSpec {
    SimulationSpec::taylor_green(32, 0.1, t_end)
}

#[test]
fn taylor_green_amplitude_is_exact() {
    let sim = simulate(&tg_spec(25.0), Execution::default()).unwrap();
    let a0 = sim.states[0].coefficient([1, 1]);
    for s in &sim.states {
        let expected = a0 * (-2.0 * 0.1 * s.t).exp();
        let rel = (s.coefficient([1, 1]) - expected).norm() / expected.norm();
        assert!(rel < 1e-6, "t = {}: {rel}", s.t);
        assert!(sim.solver.nonlinear(&s.omega_hat).iter().all(|z| z.norm() < 1e-13));
    }
    let e0 = sim.energies[0];
    assert!((e0 - 0.25).abs() < 1e-14);
    for (s, e) in sim.states.iter().zip(&sim.energies) {
        assert!((e - e0 * (-0.4 * s.t).exp()).abs() <= 1e-12 * e0);
    }
    assert!(sim.warnings.is_empty(), "{:?}", sim.warnings);
}

#[test]
fn single_mode_decays_at_nu() {
    let spec = SimulationSpec {
        initial: InitialCondition::SingleMode { k: [1, 0], amplitude: 0.5 },
        ..SimulationSpec::taylor_green(16, 0.1, 30.0)
    };
    let sim = simulate(&spec, Execution::Sequential).unwrap();
    let lead = extract_leading_term(&sim, 10.0).unwrap();
    assert!((lead.mu1 - 0.1).abs() / 0.1 < 0.01, "{}", lead.mu1);
    assert_eq!(lead.shell_modes, vec![[1, 0]]);
}

#[test]
fn taylor_green_velocity_and_extraction() {
    let sim = simulate(&tg_spec(40.0), Execution::default()).unwrap();
    for (x, t) in [([0.3, 1.7], 0.0), ([2.2, 5.0], 3.33), ([4.0, 0.1], 17.777), ([1.0, 1.0], 40.0)] {
        let v = sim.velocity_at(&x, t).unwrap();
        let w = taylor_green_velocity(1.0, 0.1, &x, t);
        assert!((v[0] - w[0]).abs() < 1e-8 && (v[1] - w[1]).abs() < 1e-8);
        // periodic wrap
        let shifted = sim.velocity_at(&[x[0] + TAU, x[1] - 2.0 * TAU], t).unwrap();
        assert!((shifted[0] - v[0]).abs() < 1e-12 && (shifted[1] - v[1]).abs() < 1e-12);
    }
    assert!(matches!(sim.velocity_at(&[0.0, 0.0], 41.0), Err(Error::TimeOutOfRange { .. })));

    let lead = extract_leading_term(&sim, 10.0).unwrap();
    assert!((lead.mu1 - 0.2).abs() / 0.2 < 0.01);
    assert!((lead.shell_lambda - 2.0).abs() < 1e-12);
    assert!(lead.t_ref_sensitivity < 1e-8);
    for x in [[0.4, 0.9], [3.0, 2.0]] {
        let q = lead.q1.eval_f64(&x);
        let w = taylor_green_velocity(1.0, 0.0, &x, 0.0);
        assert!((q[0] - w[0]).abs() < 1e-8 && (q[1] - w[1]).abs() < 1e-8);
    }
}

#[test]
fn invariants_hold_for_random_flow() {
    let spec = SimulationSpec {
        initial: InitialCondition::Random { seed: 7, amplitude: 0.5, k_max: 4 },
        mean_flow: [1.0, -0.5],
        ..SimulationSpec::taylor_green(32, 0.05, 10.0)
    };
    let sim = simulate(&spec, Execution::default()).unwrap();
    for w in sim.energies.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for s in &sim.states {
        assert!(sim.solver.spectral_divergence(&s.omega_hat) < 1e-13);
        assert_eq!(sim.solver.conjugate_defect(&s.omega_hat), 0.0);
    }
    for u in sim.mean_velocities() {
        assert!((u[0] - 1.0).abs() < 1e-14 && (u[1] + 0.5).abs() < 1e-14);
    }
    let again = simulate(&spec, Execution::Sequential).unwrap();
    let last = |s: &trajexp::spectral2d::Simulation| s.states.last().unwrap().omega_hat.clone();
    let (a, b) = (last(&sim), last(&again));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-15));
}

#[test]
fn random_flow_settles_on_lowest_shell() {
    let spec = SimulationSpec {
        initial: InitialCondition::Random { seed: 3, amplitude: 0.3, k_max: 3 },
        store_stride: 20,
        ..SimulationSpec::taylor_green(16, 0.1, 80.0)
    };
    let sim = simulate(&spec, Execution::default()).unwrap();
    assert!(matches!(
        extract_leading_term(&sim, 0.0),
        Err(Error::TransientNotDecayed { .. })
    ));
    let lead = extract_leading_term(&sim, 50.0).unwrap();
    let stokes = 0.1 * lead.shell_lambda;
    assert!((lead.shell_lambda - 1.0).abs() < 1e-12);
    assert!((lead.mu1 - stokes).abs() / stokes < 0.05, "{}", lead.mu1);
}

#[test]
fn cfl_violation_suggests_step() {
    let spec = SimulationSpec {
        dt: Some(1.0),
        ..SimulationSpec::taylor_green(32, 0.1, 5.0)
    };
    match simulate(&spec, Execution::Sequential) {
        Err(Error::Cfl { dt, suggested }) => assert!(suggested < dt),
        other => panic!("expected a CFL error, got {other:?}"),
    }
}

#[test]
fn coarse_stride_warns() {
    let spec = SimulationSpec {
        initial: InitialCondition::Random { seed: 1, amplitude: 1.0, k_max: 5 },
        store_stride: 200,
        interp_tol: 1e-8,
        ..SimulationSpec::taylor_green(32, 0.02, 20.0)
    };
    let coarse = simulate(&spec, Execution::default()).unwrap();
    let fine = simulate(&SimulationSpec { store_stride: 2, ..spec.clone() }, Execution::default()).unwrap();
    assert!(coarse.interpolation_error.unwrap() > fine.interpolation_error.unwrap());
    assert!(coarse.warnings.iter().any(|w| w.contains("interpolation")));
}

#[test]
fn checkpoint_round_trip() {
    let sim = simulate(&tg_spec(1.0), Execution::Sequential).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.bin");
    let state = sim.states.last().unwrap();
    let side = write_checkpoint(state, &path, *sim.energies.last().unwrap()).unwrap();
    assert_eq!(read_checkpoint(&path).unwrap(), *state);
    assert_eq!(side["bytes"], 64 + 16 * 32 * 32);
    assert!(dir.path().join("state.bin.json").exists());
}

#[test]
fn parallel_and_sequential_steps_agree() {
    let seq = Spectral2d::new(32, [TAU, TAU], 0.01, Execution::Sequential).unwrap();
    let par = Spectral2d::new(32, [TAU, TAU], 0.01, Execution::Parallel).unwrap();
    let ic = InitialCondition::Random { seed: 5, amplitude: 1.0, k_max: 6 };
    let s0 = seq.state(0.0, [0.0, 0.0], ic.omega_hat(&seq).unwrap()).unwrap();
    let a = seq.step(&s0, 0.01).unwrap();
    let b = par.step(&s0, 0.01).unwrap();
    assert_eq!(a, b);
}
