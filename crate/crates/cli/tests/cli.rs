use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use trajexp_cli::commands::{cmd_expand, cmd_semigroup, cmd_simulate, cmd_verify, presets};
use trajexp_cli::{Overrides, RunConfig, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trajexp"))
}

fn write_config(dir: &Path, name: &str, v: Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn resolved(v: Value, out: &Path) -> RunConfig {
    RunConfig::from_json_str(&v.to_string(), "test")
        .unwrap()
        .resolve(&Overrides {
            out: Some(out.to_path_buf()),
            ..Default::default()
        })
        .unwrap()
}

fn semigroup_config(gens: Value, cap: usize) -> Value {
    json!({
        "mode": "analytic-field",
        "semigroup": { "generators": gens },
        "field": { "type": "poly", "dim": 1, "terms": [{ "n": 1, "time_coeffs": [[{ "exp": [1], "coeff": [-1] }]] }] },
        "x0": [0.5],
        "cap": cap,
        "order": 1,
    })
}

#[test]
fn semigroup_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = cmd_semigroup(&resolved(semigroup_config(json!([1]), 5), dir.path())).unwrap();
    assert_eq!(o.report["table"].as_array().unwrap().len(), 5);

    let o = cmd_semigroup(&resolved(semigroup_config(json!(["2", 5]), 6), dir.path())).unwrap();
    let mus: Vec<&str> = o.report["table"].as_array().unwrap().iter().map(|r| r["mu"].as_str().unwrap()).collect();
    assert_eq!(mus, ["2/1", "4/1", "5/1", "6/1", "7/1", "8/1"]);
    assert!(dir.path().join("semigroup.json").exists());

    let cfg = write_config(dir.path(), "cap0.json", semigroup_config(json!([1]), 0));
    let status = bin().args(["semigroup", "--config"]).arg(&cfg).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn expand_closed_form_and_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = resolved(json!({ "mode": "fixture", "fixture": "closed-form-1d", "order": 8 }), dir.path());
    let o = cmd_expand(&cfg).unwrap();
    let terms = o.report["expansion"]["terms"].as_array().unwrap();
    let expected = ["-1/1", "1/2", "-1/6", "1/24", "-1/120", "1/720", "-1/5040", "1/40320"];
    for (t, e) in terms.iter().zip(expected) {
        assert_eq!(t["zeta"]["coeffs"][0][0], json!(e), "{t}");
    }
    assert_eq!(o.report["expansion"]["x_star"], json!(["0/1"]));
    assert!(dir.path().join("expansion.txt").exists());

    let cfg = resolved(json!({ "mode": "fixture", "fixture": "zero", "x0": [0.25, -0.5] }), dir.path());
    let o = cmd_expand(&cfg).unwrap();
    assert_eq!(o.report["expansion"]["x_star"], json!(["1/4", "-1/2"]));
    for t in o.report["expansion"]["terms"].as_array().unwrap() {
        for row in t["zeta"]["coeffs"].as_array().unwrap() {
            assert!(row.as_array().unwrap().iter().all(|c| c == "0/1"), "{t}");
        }
    }
}

#[test]
fn missing_leading_term_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = semigroup_config(json!([1]), 3);
    v["field"]["terms"] = json!([{ "n": 2, "time_coeffs": [[{ "exp": [1], "coeff": [1] }]] }]);
    let cfg = write_config(dir.path(), "noq1.json", v);
    let out = bin().args(["expand", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q_1"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", json!({ "mode": "fixture", "fixture": "closed-form-1d" }));
    let out = dir.path().join("good");
    let status = bin().args(["verify", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_OK));
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "t,e_1,e_2,e_3,e_4"));
    assert!(out.join("verify.meta.json").exists());

    let bad = write_config(
        dir.path(),
        "bad.json",
        json!({ "mode": "fixture", "fixture": "closed-form-1d", "perturb": [{ "n": 2, "delta": "1/1000" }] }),
    );
    let out = dir.path().join("bad");
    let status = bin().args(["verify", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_VERIFY_FAILED));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let orders = report["verification"]["orders"].as_array().unwrap();
    assert_eq!(orders[0]["status"], "pass");
    assert_eq!(orders[1]["status"], "fail");
}

#[test]
fn order_zero_reports_only_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = resolved(json!({ "mode": "fixture", "fixture": "galilean-2d" }), dir.path());
    cfg.order = Some(0);
    let o = cmd_verify(&cfg).unwrap();
    assert!(o.passed);
    assert!(o.report["verification"]["orders"].as_array().unwrap().is_empty());
    assert!(o.report["verification"]["limit"]["bound"].as_f64().unwrap() < 1e-8);
}

#[test]
fn reports_are_deterministic_and_record_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", json!({ "mode": "fixture", "fixture": "galilean-2d" }));
    for sub in ["a", "b"] {
        let status = bin()
            .args(["verify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(EXIT_OK));
    }
    let a = fs::read(dir.path().join("a/verify.json")).unwrap();
    let b = fs::read(dir.path().join("b/verify.json")).unwrap();
    assert_eq!(a, b);
    let report: Value = serde_json::from_slice(&a).unwrap();
    let c = &report["config"];
    for key in ["order", "cap", "tol", "horizon", "x0", "x_star_tol", "numeric"] {
        assert!(!c[key].is_null(), "default {key} not recorded");
    }
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn flags_override_config_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({ "mode": "fixture", "fixture": "closed-form-1d", "order": 2, "tol": 1e-10 });
    let cfg = RunConfig::from_json_str(&v.to_string(), "t")
        .unwrap()
        .resolve(&Overrides {
            order: Some(3),
            tol: Some(1e-11),
            out: Some(dir.path().to_path_buf()),
            seed: None,
        })
        .unwrap();
    assert_eq!((cfg.order, cfg.tol, cfg.cap), (Some(3), Some(1e-11), Some(4)));

    let typo = json!({ "mode": "fixture", "fixture": "zero", "ordre": 2 });
    assert!(RunConfig::from_json_str(&typo.to_string(), "t").is_err());
}

#[test]
fn presets_parse_and_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["fixtures", "--out"]).arg(dir.path()).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_OK));
    for (name, _) in presets() {
        let cfg = RunConfig::load(&dir.path().join(format!("{name}.json"))).unwrap();
        cfg.resolve(&Overrides::default()).unwrap();
    }
}

#[test]
fn simulate_taylor_green_and_handoff() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "mode": "simulate-2d",
        "simulation": { "m": 16, "nu": 0.1, "t_end": 60.0, "initial": { "type": "taylor-green", "amplitude": 1.0 } },
        "order": 1,
        "checkpoints": 3,
    });
    let o = cmd_simulate(&resolved(v, dir.path())).unwrap();
    let mu1 = o.report["leading_term"]["mu1"].as_f64().unwrap();
    assert!((mu1 - 0.2).abs() / 0.2 < 0.01, "{mu1}");
    assert_eq!(o.report["checkpoints"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("checkpoints/state_00000.bin.json").exists());

    // the handoff is a config `expand` accepts unchanged
    let hand = RunConfig::load(&dir.path().join("handoff.json")).unwrap();
    let out = dir.path().join("expand");
    let e = cmd_expand(&hand.resolve(&Overrides { out: Some(out), ..Default::default() }).unwrap()).unwrap();
    let x = e.report["limit"]["oracle_x_star"].as_array().unwrap();
    let zeta = &e.report["expansion"]["terms"][0]["zeta"]["coeffs"][0];
    let q1 = trajexp::fixtures::taylor_green_velocity(1.0, 0.0, &[x[0].as_f64().unwrap(), x[1].as_f64().unwrap()], 0.0);
    for i in 0..2 {
        let expected = -q1[i] / 0.2;
        assert!((zeta[i].as_f64().unwrap() - expected).abs() <= 0.01 * expected.abs());
    }
}

#[test]
fn random_simulation_energy_is_monotone_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "mode": "simulate-2d",
        "simulation": {
            "m": 16, "nu": 0.1, "t_end": 80.0, "store_stride": 20,
            "initial": { "type": "random", "seed": 1, "amplitude": 0.3, "k_max": 3 }
        },
        "extract_t_start": 50.0,
        "checkpoints": 0,
    });
    let cfg = RunConfig::from_json_str(&v.to_string(), "t")
        .unwrap()
        .resolve(&Overrides {
            out: Some(dir.path().to_path_buf()),
            seed: Some(3),
            ..Default::default()
        })
        .unwrap();
    let o = cmd_simulate(&cfg).unwrap();
    assert_eq!(o.report["config"]["simulation"]["initial"]["seed"], 3);
    assert_eq!(o.report["simulation"]["energy_monotone"], true);
    let csv = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    let e: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn coarse_stride_warns_and_cfl_hint() {
    let dir = tempfile::tempdir().unwrap();
    let base = json!({
        "mode": "simulate-2d",
        "simulation": {
            "m": 32, "nu": 0.02, "t_end": 20.0, "store_stride": 200, "interp_tol": 1e-8,
            "initial": { "type": "random", "seed": 1, "amplitude": 1.0, "k_max": 5 }
        },
        "extract_t_start": 0.0,
    });
    let cfg = write_config(dir.path(), "coarse.json", base.clone());
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("c")).output().unwrap();
    // early extraction may or may not succeed; the warning is printed either way
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("halve store_stride"), "{text}");

    let mut cfl = base;
    cfl["simulation"]["dt"] = json!(1.0);
    let cfg = write_config(dir.path(), "cfl.json", cfl);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("d")).output().unwrap();
    assert_ne!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hint: set simulation.dt"));
}
