//! Run configuration: one JSON document per experiment.
//!
//! Every optional key is filled in by [`RunConfig::resolve`] before any
//! computation, and the resolved document is what reports embed and hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use trajexp::fixtures::Fixture;
use trajexp::scalar::{fraction_string, parse_rational, parse_rational_value};
use trajexp::spectral2d::{InitialCondition, SimulationSpec};

use crate::error::{CliError, CliResult};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_X_STAR_TOL: f64 = 1e-8;
pub const DEFAULT_CHECKPOINTS: usize = 5;
/// Default horizon in units of `1 / mu_1`.
pub const HORIZON_DECAY_TIMES: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AnalyticField,
    #[serde(rename = "simulate-2d")]
    Simulate2d,
    Fixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Numeric {
    Exact,
    Float,
}

/// Rationals are accepted as `"p/q"` strings or JSON numbers and stored
/// as normalized `"p/q"` text.
fn rational_text<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    let v = Value::deserialize(d)?;
    parse_rational_value(&v)
        .map(|r| fraction_string(&r))
        .map_err(serde::de::Error::custom)
}

fn rational_texts<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    let v = Vec::<Value>::deserialize(d)?;
    v.iter()
        .map(|x| parse_rational_value(x).map(|r| fraction_string(&r)))
        .collect::<Result<_, _>>()
        .map_err(serde::de::Error::custom)
}

fn one() -> String {
    "1/1".into()
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSpec {
    #[serde(deserialize_with = "rational_texts")]
    pub generators: Vec<String>,
    #[serde(default = "one", deserialize_with = "rational_text")]
    pub nu: String,
    /// Float factor on every exponent; exact mode needs 1.
    #[serde(default = "unit")]
    pub scale: f64,
}

/// Adds `delta` to every component of the constant coefficient of `zeta_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub n: usize,
    #[serde(deserialize_with = "rational_text")]
    pub delta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<Numeric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<SemigroupSpec>,
    /// Field expansion table (`type`, `dim`, `periods`, `terms`, `mean_flow`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    /// Start of the window used to fit the leading decay of a simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract_t_start: Option<f64>,
    /// Mean flow added to a fixture by Galilean composition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_flow: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Semigroup cap; defaults to `order + 1` so the next rate is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star_tol: Option<f64>,
    /// In exact mode, replace the oracle's `x*` by the simplest rational
    /// inside its error bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_x_star: Option<bool>,
    /// Where outputs go; not part of the experiment, so never serialized.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub perturb: Vec<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
    /// Number of evenly spaced stored states written as checkpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<usize>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub order: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn from_json_str(text: &str, origin: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config {
            path: origin.into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    /// A fixture run with every default left open.
    pub fn fixture(f: Fixture) -> Self {
        RunConfig {
            mode: Mode::Fixture,
            fixture: Some(f),
            ..Self::empty(Mode::Fixture)
        }
    }

    pub fn empty(mode: Mode) -> Self {
        RunConfig {
            mode,
            numeric: None,
            fixture: None,
            semigroup: None,
            field: None,
            simulation: None,
            extract_t_start: None,
            mean_flow: None,
            x0: None,
            t0: 0.0,
            horizon: None,
            tol: None,
            order: None,
            cap: None,
            x_star_tol: None,
            snap_x_star: None,
            output_dir: None,
            seed: None,
            perturb: vec![],
            parallel: None,
            checkpoints: None,
        }
    }

    /// Applies flag overrides, checks the schema, and fills defaults that
    /// do not depend on the field. `horizon` is filled later, once `mu_1`
    /// is known.
    pub fn resolve(mut self, o: &Overrides) -> CliResult<Self> {
        let bad = |m: String| Err(CliError::Usage(m));
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(n) = o.order {
            self.order = Some(n);
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.tol {
            self.tol = Some(t);
        }
        match self.mode {
            Mode::Fixture => {
                let Some(f) = self.fixture else {
                    return bad("mode \"fixture\" needs a \"fixture\" name".into());
                };
                if self.field.is_some() || self.simulation.is_some() || self.semigroup.is_some() {
                    return bad("fixture mode takes no \"field\", \"semigroup\" or \"simulation\"".into());
                }
                let numeric = self.numeric.unwrap_or(if f.supports_exact() { Numeric::Exact } else { Numeric::Float });
                if numeric == Numeric::Exact && !f.supports_exact() {
                    return bad(format!("fixture {} has no exact form; use \"numeric\": \"float\"", f.name()));
                }
                self.numeric = Some(numeric);
                if self.x0.is_none() {
                    self.x0 = Some(f.x0());
                }
            }
            Mode::AnalyticField => {
                let (Some(field), Some(sg)) = (&self.field, &self.semigroup) else {
                    return bad("mode \"analytic-field\" needs \"field\" and \"semigroup\"".into());
                };
                if self.simulation.is_some() || self.fixture.is_some() {
                    return bad("analytic-field mode takes no \"simulation\" or \"fixture\"".into());
                }
                let trig = field.get("type").and_then(Value::as_str) == Some("trig");
                let exact_ok = !trig && sg.scale == 1.0;
                let numeric = self.numeric.unwrap_or(if exact_ok { Numeric::Exact } else { Numeric::Float });
                if numeric == Numeric::Exact && !exact_ok {
                    return bad("exact mode needs a polynomial field and semigroup scale 1".into());
                }
                self.numeric = Some(numeric);
                if self.x0.is_none() {
                    return bad("\"x0\" is required in analytic-field mode".into());
                }
            }
            Mode::Simulate2d => {
                let Some(sim) = &mut self.simulation else {
                    return bad("mode \"simulate-2d\" needs a \"simulation\" block".into());
                };
                if self.field.is_some() || self.fixture.is_some() || self.semigroup.is_some() {
                    return bad("simulate-2d mode takes no \"field\", \"fixture\" or \"semigroup\"".into());
                }
                if self.numeric == Some(Numeric::Exact) {
                    return bad("simulated fields are float-only".into());
                }
                self.numeric = Some(Numeric::Float);
                if let InitialCondition::Random { seed, .. } = &mut sim.initial {
                    match self.seed {
                        Some(s) => *seed = s,
                        None => self.seed = Some(*seed),
                    }
                }
                if self.extract_t_start.is_none() {
                    self.extract_t_start = Some(0.5 * sim.t_end);
                }
                if self.horizon.is_none() {
                    self.horizon = Some(sim.t_end);
                }
                if self.x0.is_none() {
                    self.x0 = Some(Fixture::TaylorGreen.x0());
                }
                if self.checkpoints.is_none() {
                    self.checkpoints = Some(DEFAULT_CHECKPOINTS);
                }
            }
        }
        if self.mean_flow.is_some() && self.mode != Mode::Fixture {
            return bad("\"mean_flow\" shifts fixtures only; put it in the field or simulation block".into());
        }
        let order = *self.order.get_or_insert(DEFAULT_ORDER);
        let cap = *self.cap.get_or_insert(order + 1);
        if cap == 0 {
            return bad("cap must be at least 1".into());
        }
        if cap < order {
            return bad(format!("cap {cap} is below order {order}"));
        }
        let tol = *self.tol.get_or_insert(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return bad(format!("tol {tol} must lie in (0, 1)"));
        }
        let xt = *self.x_star_tol.get_or_insert(DEFAULT_X_STAR_TOL);
        if !(xt > 0.0) {
            return bad("x_star_tol must be positive".into());
        }
        self.snap_x_star.get_or_insert(true);
        self.parallel.get_or_insert(true);
        self.output_dir.get_or_insert_with(|| PathBuf::from("out"));
        if let Some(h) = self.horizon {
            if !(h > self.t0) {
                return bad(format!("horizon {h} must exceed t0 {}", self.t0));
            }
        }
        for p in &self.perturb {
            if p.n == 0 || p.n > order {
                return bad(format!("perturbation index {} outside 1..={order}", p.n));
            }
            parse_rational(&p.delta)?;
        }
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(DEFAULT_ORDER)
    }

    pub fn cap(&self) -> usize {
        self.cap.unwrap_or(self.order() + 1)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn x_star_tol(&self) -> f64 {
        self.x_star_tol.unwrap_or(DEFAULT_X_STAR_TOL)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn exec(&self) -> trajexp::Execution {
        if self.parallel.unwrap_or(true) {
            trajexp::Execution::Parallel
        } else {
            trajexp::Execution::Sequential
        }
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
