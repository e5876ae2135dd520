//! The five subcommands. Each returns its report document; the caller
//! decides the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use trajexp::engine::TrajectoryExpansion;
use trajexp::field::FieldScalar;
use trajexp::fixtures::Fixture;
use trajexp::oracle::{verify_with_velocity, LimitEstimate, VerificationReport, VerifyOptions};
use trajexp::scalar::fraction_string;
use trajexp::spectral2d::{write_checkpoint, InitialCondition, SimulationSpec};
use trajexp::{FieldExpansion, Scalar, Semigroup, VERSION};

use crate::config::{Mode, Numeric, RunConfig, SemigroupSpec};
use crate::error::{CliError, CliResult};
use crate::problem::{self, limit_json, locate_limit, Problem};
use crate::with_field;

/// Report envelope: command, versions, config hash, resolved config.
pub fn envelope(command: &str, cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("version".into(), json!(VERSION));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

// ---- semigroup ----

pub struct SemigroupOutput {
    pub report: Value,
    pub table: String,
}

fn semigroup_table(sg: &Semigroup) -> CliResult<(Vec<Value>, String)> {
    let mut rows = Vec::new();
    let mut table = String::new();
    writeln!(table, "{:>4}  {:>14}  {:>22}  {:>8}  {:>8}", "n", "mu_n", "decimal", "ordered", "grouped").unwrap();
    for n in 1..=sg.n_cap() {
        let mu = sg.mu(n)?;
        let exact = sg.is_exact().then(|| fraction_string(&sg.mu_rational(n).expect("n <= cap")));
        let ordered = sg.decompositions(n)?.len();
        let grouped = sg.grouped_decompositions(n)?.len();
        writeln!(
            table,
            "{:>4}  {:>14}  {:>22}  {:>8}  {:>8}",
            n,
            exact.as_deref().unwrap_or("-"),
            format!("{mu}"),
            ordered,
            grouped
        )
        .unwrap();
        rows.push(json!({
            "n": n,
            "mu": exact,
            "mu_decimal": mu,
            "residue": fraction_string(sg.residue(n)?),
            "s_index": sg.s_index(n)?,
            "ordered_decompositions": ordered,
            "grouped_decompositions": grouped,
        }));
    }
    Ok((rows, table))
}

pub fn cmd_semigroup(cfg: &RunConfig) -> CliResult<SemigroupOutput> {
    let sg = match cfg.mode {
        Mode::Simulate2d => {
            return Err(CliError::Usage(
                "a simulated field's exponents are fitted; run `simulate` and use its handoff config".into(),
            ))
        }
        Mode::AnalyticField => {
            let SemigroupSpec { generators, nu, scale } = cfg.semigroup.as_ref().expect("resolved");
            let gens = generators
                .iter()
                .map(|g| trajexp::scalar::parse_rational(g))
                .collect::<trajexp::Result<Vec<_>>>()?;
            Semigroup::new(&gens, trajexp::scalar::parse_rational(nu)?, *scale, cfg.cap())?
        }
        Mode::Fixture => Problem::build(cfg)?.semigroup().clone(),
    };
    let (rows, table) = semigroup_table(&sg)?;
    let mut report = envelope("semigroup", cfg);
    report.insert("semigroup".into(), sg.to_json());
    report.insert("table".into(), Value::Array(rows));
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    let report = Value::Object(report);
    write_json(&out.join("semigroup.json"), &report)?;
    Ok(SemigroupOutput { report, table })
}

// ---- expand ----

pub struct ExpandOutput {
    pub report: Value,
    pub summary: String,
}

fn expansion_summary<S: Scalar>(te: &TrajectoryExpansion<S>, est: &LimitEstimate) -> String {
    let mut s = String::new();
    let fmt = |v: &[S]| v.iter().map(|x| format!("{}", x.to_json())).collect::<Vec<_>>().join(", ");
    writeln!(s, "x* = [{}]  (oracle bound {:.3e})", fmt(&te.x_star), est.bound).unwrap();
    if te.mean_flow.iter().any(|u| u.to_f64() != 0.0) {
        writeln!(s, "U0 = [{}]", fmt(&te.mean_flow)).unwrap();
    }
    for n in 1..=te.order() {
        let z = te.zeta(n).expect("n <= order");
        let mu = te.mu(n).unwrap_or(f64::NAN);
        let mut parts = Vec::new();
        for i in 0..z.dim() {
            let c = z.component(i);
            let terms: Vec<String> = c
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.to_f64() != 0.0)
                .map(|(k, a)| match k {
                    0 => format!("{}", a.to_json()),
                    1 => format!("{} t", a.to_json()),
                    _ => format!("{} t^{k}", a.to_json()),
                })
                .collect();
            parts.push(if terms.is_empty() { "0".to_string() } else { terms.join(" + ") });
        }
        writeln!(s, "zeta_{n} (mu = {mu}): [{}]", parts.join("; ")).unwrap();
    }
    s
}

struct Expanded<S> {
    te: TrajectoryExpansion<S>,
    limit: LimitEstimate,
}

fn expand_generic<S: FieldScalar>(fe: &FieldExpansion<S>, problem: &Problem, cfg: &RunConfig) -> CliResult<Expanded<S>> {
    let limit = locate_limit(problem, cfg)?;
    let x_star = problem::limit_point::<S>(&limit, cfg.tol(), cfg.snap_x_star.unwrap_or(true))?;
    let te = problem::expand(fe, &x_star, cfg)?;
    Ok(Expanded { te, limit })
}

pub fn cmd_expand(cfg: &RunConfig) -> CliResult<ExpandOutput> {
    let problem = Problem::build(cfg)?;
    let cfg = problem.finish_config(cfg.clone())?;
    let (expansion, limit, summary) = with_field!(&problem.field, fe => {
        let ex = expand_generic(fe, &problem, &cfg)?;
        let x: Vec<Value> = ex.te.x_star.iter().map(Scalar::to_json).collect();
        (ex.te.to_json(), limit_json(&ex.limit, &x), expansion_summary(&ex.te, &ex.limit))
    });
    let mut report = envelope("expand", &cfg);
    report.insert("limit".into(), limit);
    report.insert("expansion".into(), expansion);
    if let Some(run) = &problem.simulation {
        report.insert("leading_term".into(), run.lead.to_json());
    }
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    let report = Value::Object(report);
    write_json(&out.join("expansion.json"), &report)?;
    write_text(&out.join("expansion.txt"), &summary)?;
    Ok(ExpandOutput { report, summary })
}

// ---- verify ----

pub struct VerifyOutput {
    pub report: Value,
    pub passed: bool,
    pub summary: String,
}

fn verify_summary(r: &VerificationReport) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "x* bound {:.3e}, noise floor {:.3e}, transient cutoff t = {:.3}",
        r.limit.bound, r.noise_floor, r.transient_cutoff
    )
    .unwrap();
    for o in &r.orders {
        let slope = o.slope().map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        writeln!(
            s,
            "N = {}: {:?} (slope {slope}, need >= {:.4}{})",
            o.order,
            o.status,
            o.required_slope,
            o.target_slope
                .map(|t| format!(", next rate {t:.4}{}", if o.target_enforced { "" } else { " informational" }))
                .unwrap_or_default()
        )
        .unwrap();
    }
    writeln!(s, "{}", if r.passed { "PASS" } else { "FAIL" }).unwrap();
    s
}

fn verify_generic<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    problem: &Problem,
    cfg: &RunConfig,
) -> CliResult<(Value, VerificationReport)> {
    let ex = expand_generic(fe, problem, cfg)?;
    let te = problem::perturb(ex.te, &cfg.perturb)?;
    let mut opts = VerifyOptions::new(cfg.horizon.expect("resolved"), cfg.tol());
    opts.t0 = cfg.t0;
    opts.x_star_bound = ex.limit.bound;
    opts.exec = cfg.exec();
    let report = verify_with_velocity(problem.velocity(), &te, cfg.x0.as_ref().expect("resolved"), &opts)?;
    Ok((te.to_json(), report))
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<VerifyOutput> {
    let problem = Problem::build(cfg)?;
    let cfg = problem.finish_config(cfg.clone())?;
    let (expansion, verification) = with_field!(&problem.field, fe => verify_generic(fe, &problem, &cfg)?);
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    let csv_path = out.join("errors.csv");
    let mut csv = Vec::new();
    verification.write_csv(&mut csv)?;
    fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;

    let summary = verify_summary(&verification);
    let passed = verification.passed;
    let mut report = envelope("verify", &cfg);
    report.insert("expansion".into(), expansion);
    report.insert("verification".into(), serde_json::to_value(&verification).expect("report serializes"));
    if let Some(run) = &problem.simulation {
        report.insert("leading_term".into(), run.lead.to_json());
    }
    let report = Value::Object(report);
    write_json(&out.join("verify.json"), &report)?;
    Ok(VerifyOutput {
        report,
        passed,
        summary,
    })
}

// ---- simulate ----

pub struct SimulateOutput {
    pub report: Value,
    pub summary: String,
}

/// Evenly spaced indices into `0..len`, always including the last.
fn checkpoint_indices(len: usize, count: usize) -> Vec<usize> {
    match (len, count) {
        (0, _) | (_, 0) => vec![],
        (_, 1) => vec![len - 1],
        _ => {
            let mut v: Vec<usize> = (0..count)
                .map(|i| ((i as f64) * (len - 1) as f64 / (count - 1) as f64).round() as usize)
                .collect();
            v.dedup();
            v
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<SimulateOutput> {
    if cfg.mode != Mode::Simulate2d {
        return Err(CliError::Usage("`simulate` needs \"mode\": \"simulate-2d\"".into()));
    }
    let problem = Problem::build(cfg)?;
    let cfg = problem.finish_config(cfg.clone())?;
    let run = problem.simulation.as_ref().expect("simulate-2d mode");
    let (sim, lead) = (&run.sim, &run.lead);
    let out = cfg.output_dir();
    let ckdir = out.join("checkpoints");
    ensure_dir(&ckdir)?;

    let mut checkpoints = Vec::new();
    for i in checkpoint_indices(sim.states.len(), cfg.checkpoints.unwrap_or(0)) {
        let path = ckdir.join(format!("state_{i:05}.bin"));
        let side = write_checkpoint(&sim.states[i], &path, sim.energies[i])?;
        checkpoints.push(json!({ "file": format!("checkpoints/state_{i:05}.bin"), "sidecar": side }));
    }
    let energy_path = out.join("energy.csv");
    let mut csv = Vec::new();
    sim.write_energy_csv(&mut csv)?;
    fs::write(&energy_path, csv).map_err(|e| CliError::io(&energy_path, e))?;

    // handoff: a one-term analytic config that `expand` accepts as is
    let fe_json = problem.field_json();
    let spec = cfg.simulation.as_ref().expect("resolved");
    let mut handoff = RunConfig::empty(Mode::AnalyticField);
    handoff.numeric = Some(Numeric::Float);
    handoff.semigroup = Some(SemigroupSpec {
        generators: vec!["1/1".into()],
        nu: "1/1".into(),
        scale: lead.mu1,
    });
    handoff.field = Some(fe_json);
    handoff.x0 = cfg.x0.clone();
    handoff.t0 = cfg.t0;
    handoff.order = Some(1);
    handoff.cap = Some(cfg.cap());
    handoff.tol = cfg.tol;
    handoff.x_star_tol = cfg.x_star_tol;
    let handoff_value = serde_json::to_value(&handoff).expect("config serializes");
    write_json(&out.join("handoff.json"), &handoff_value)?;

    let energy_monotone = sim.energies.windows(2).all(|w| w[1] <= w[0]);
    let stokes_rate = spec.nu * lead.shell_lambda;
    let mut report = envelope("simulate", &cfg);
    report.insert(
        "simulation".into(),
        json!({
            "dt": sim.dt,
            "steps": sim.steps,
            "stored_states": sim.states.len(),
            "t_end": sim.t_end(),
            "initial_energy": sim.energies.first(),
            "final_energy": sim.energies.last(),
            "energy_monotone": energy_monotone,
            "interpolation_error": sim.interpolation_error,
            "warnings": sim.warnings,
        }),
    );
    report.insert("leading_term".into(), lead.to_json());
    report.insert(
        "stokes_check".into(),
        json!({ "nu_lambda": stokes_rate, "relative_deviation": (lead.mu1 - stokes_rate).abs() / stokes_rate }),
    );
    report.insert("checkpoints".into(), Value::Array(checkpoints));
    report.insert("handoff".into(), json!("handoff.json"));
    let report = Value::Object(report);
    write_json(&out.join("simulate.json"), &report)?;
    write_json(&out.join("leading_term.json"), &lead.to_json())?;

    let mut summary = String::new();
    writeln!(summary, "{} steps of dt = {:.4e} to t = {}", sim.steps, sim.dt, sim.t_end()).unwrap();
    writeln!(
        summary,
        "energy {:.6e} -> {:.6e} ({})",
        sim.energies[0],
        sim.energies.last().unwrap(),
        if energy_monotone { "monotone" } else { "NOT monotone" }
    )
    .unwrap();
    writeln!(
        summary,
        "mu1_hat = {:.8} on shell |k|^2 = {} (nu |k|^2 = {stokes_rate:.8}), dominance {:.6}",
        lead.mu1, lead.shell_lambda, lead.dominance
    )
    .unwrap();
    for w in &sim.warnings {
        writeln!(summary, "warning: {w}").unwrap();
    }
    Ok(SimulateOutput { report, summary })
}

// ---- fixtures ----

/// Preset configs: one per fixture plus two simulation presets.
pub fn presets() -> Vec<(String, RunConfig)> {
    let mut v: Vec<(String, RunConfig)> = Fixture::ALL
        .iter()
        .map(|&f| (f.name().to_string(), RunConfig::fixture(f)))
        .collect();
    let mut tg = RunConfig::empty(Mode::Simulate2d);
    tg.simulation = Some(SimulationSpec::taylor_green(32, 0.1, 200.0));
    tg.order = Some(1);
    v.push(("simulate-taylor-green".into(), tg));
    let mut rnd = RunConfig::empty(Mode::Simulate2d);
    rnd.simulation = Some(SimulationSpec {
        initial: InitialCondition::Random {
            seed: 1,
            amplitude: 0.3,
            k_max: 3,
        },
        store_stride: 20,
        ..SimulationSpec::taylor_green(16, 0.1, 80.0)
    });
    rnd.extract_t_start = Some(50.0);
    rnd.order = Some(1);
    v.push(("simulate-random".into(), rnd));
    v
}

pub fn cmd_fixtures(out: Option<&PathBuf>) -> CliResult<String> {
    let mut s = String::new();
    for f in Fixture::ALL {
        writeln!(
            s,
            "{:<16} exact={:<5} x0={:?}\n    {}",
            f.name(),
            f.supports_exact(),
            f.x0(),
            f.description()
        )
        .unwrap();
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        for (name, cfg) in presets() {
            let v = serde_json::to_value(&cfg).expect("config serializes");
            write_json(&dir.join(format!("{name}.json")), &v)?;
        }
        writeln!(s, "preset configs written to {}", dir.display()).unwrap();
    }
    Ok(s)
}
