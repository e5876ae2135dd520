//! Turns a resolved config into a field expansion plus the velocity the
//! oracle integrates, and runs the oracle / engine steps shared by the
//! subcommands.

use serde_json::{json, Value};
use trajexp::engine::{compute_expansion_with, TrajectoryExpansion};
use trajexp::field::FieldScalar;
use trajexp::fixtures::{self, BeyondAllOrders, Fixture};
use trajexp::oracle::{estimate_limit_with_mean, integrate_dense, log_grid, IntegratorOptions, LimitEstimate, VelocityField};
use trajexp::scalar::{parse_rational, rational_from_f64};
use trajexp::spectral2d::{extract_leading_term, simulate, LeadingTerm, Simulation};
use trajexp::{galilean_compose, Error, FieldExpansion, PolyVec, Rational, Scalar, Semigroup};

use crate::config::{Mode, Numeric, Perturbation, RunConfig, HORIZON_DECAY_TIMES};
use crate::error::{CliError, CliResult};

/// Samples on the oracle grid used to locate `x*`.
pub const LIMIT_SAMPLES: usize = 400;

pub enum Field {
    Exact(FieldExpansion<Rational>),
    Float(FieldExpansion<f64>),
}

pub struct SimulationRun {
    pub sim: Simulation,
    pub lead: LeadingTerm,
}

pub struct Problem {
    pub field: Field,
    /// Trajectories follow [`BeyondAllOrders`] rather than the (zero) field.
    pub beyond_all_orders: bool,
    pub simulation: Option<SimulationRun>,
}

/// Dispatches a generic body over the numeric mode of a [`Field`].
#[macro_export]
macro_rules! with_field {
    ($field:expr, $fe:ident => $body:expr) => {
        match $field {
            $crate::problem::Field::Exact($fe) => $body,
            $crate::problem::Field::Float($fe) => $body,
        }
    };
}

fn fixture_field<S: FieldScalar>(f: Fixture, cap: usize) -> trajexp::Result<FieldExpansion<S>> {
    match f {
        Fixture::ClosedForm1d => fixtures::closed_form_1d(cap),
        Fixture::Galilean2d => fixtures::galilean_2d(cap),
        Fixture::Zero => fixtures::zero_field(2, cap),
        Fixture::Degenerate1d => fixtures::degenerate_1d(cap),
        Fixture::TaylorGreen => Err(Error::InvalidInput("Taylor-Green is float-only".into())),
    }
}

fn shifted<S: FieldScalar>(fe: FieldExpansion<S>, mean: Option<&Vec<f64>>) -> CliResult<FieldExpansion<S>> {
    match mean {
        None => Ok(fe),
        Some(m) => {
            let u0 = m
                .iter()
                .map(|&x| rational_from_f64(x).map(|r| S::from_rational(&r)))
                .collect::<trajexp::Result<Vec<S>>>()?;
            Ok(galilean_compose(&fe, u0)?)
        }
    }
}

fn analytic_field<S: FieldScalar>(cfg: &RunConfig) -> CliResult<FieldExpansion<S>> {
    let spec = cfg.semigroup.as_ref().expect("resolved");
    let gens = spec
        .generators
        .iter()
        .map(|g| parse_rational(g))
        .collect::<trajexp::Result<Vec<_>>>()?;
    let sg = Semigroup::new(&gens, parse_rational(&spec.nu)?, spec.scale, cfg.cap())?;
    let fe = FieldExpansion::<S>::from_json(cfg.field.as_ref().expect("resolved"), sg)?;
    if fe.term(1).is_none() {
        return Err(Error::Schema("field has no q_1 term (\"n\": 1); the leading rate must be present".into()).into());
    }
    Ok(fe)
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> CliResult<Problem> {
        let cap = cfg.cap();
        let exact = cfg.numeric == Some(Numeric::Exact);
        let mut beyond_all_orders = false;
        let mut simulation = None;
        let field = match cfg.mode {
            Mode::Fixture => {
                let f = cfg.fixture.expect("resolved");
                if f == Fixture::Degenerate1d {
                    if cfg.mean_flow.is_some() {
                        return Err(CliError::Usage("degenerate-1d cannot be shifted by a mean flow".into()));
                    }
                    beyond_all_orders = true;
                }
                let mean = cfg.mean_flow.as_ref();
                if f == Fixture::TaylorGreen {
                    let nu = Rational::new(1.into(), 10.into());
                    Field::Float(shifted(fixtures::taylor_green(1.0, nu, cap)?, mean)?)
                } else if exact {
                    Field::Exact(shifted(fixture_field(f, cap)?, mean)?)
                } else {
                    Field::Float(shifted(fixture_field(f, cap)?, mean)?)
                }
            }
            Mode::AnalyticField => {
                if exact {
                    Field::Exact(analytic_field(cfg)?)
                } else {
                    Field::Float(analytic_field(cfg)?)
                }
            }
            Mode::Simulate2d => {
                let spec = cfg.simulation.as_ref().expect("resolved");
                log::info!("simulating {}x{} grid to t = {}", spec.m, spec.m, spec.t_end);
                let sim = simulate(spec, cfg.exec())?;
                for w in &sim.warnings {
                    log::warn!("{w}");
                }
                let lead = extract_leading_term(&sim, cfg.extract_t_start.expect("resolved"))?;
                let fe = lead.field_expansion(spec.mean_flow, cap)?;
                simulation = Some(SimulationRun { sim, lead });
                Field::Float(fe)
            }
        };
        let problem = Problem {
            field,
            beyond_all_orders,
            simulation,
        };
        if let Some(x0) = &cfg.x0 {
            if x0.len() != problem.dim() {
                return Err(CliError::Usage(format!(
                    "x0 has {} components but the field has dimension {}",
                    x0.len(),
                    problem.dim()
                )));
            }
        }
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        with_field!(&self.field, fe => fe.dim())
    }

    pub fn mu1(&self) -> f64 {
        with_field!(&self.field, fe => fe.mu(1).expect("cap >= 1"))
    }

    pub fn mean_flow(&self) -> Vec<f64> {
        with_field!(&self.field, fe => fe.mean_flow_f64())
    }

    pub fn semigroup(&self) -> &Semigroup {
        with_field!(&self.field, fe => fe.semigroup())
    }

    pub fn field_json(&self) -> Value {
        with_field!(&self.field, fe => fe.to_json())
    }

    /// The velocity the oracle integrates.
    pub fn velocity(&self) -> &dyn VelocityField {
        if self.beyond_all_orders {
            return &BeyondAllOrders;
        }
        if let Some(run) = &self.simulation {
            return &run.sim;
        }
        with_field!(&self.field, fe => fe as &dyn VelocityField)
    }

    /// Fills the horizon default (`40 / mu_1` past `t0`).
    pub fn finish_config(&self, mut cfg: RunConfig) -> CliResult<RunConfig> {
        if cfg.horizon.is_none() {
            cfg.horizon = Some(cfg.t0 + HORIZON_DECAY_TIMES / self.mu1());
        }
        if let Some(run) = &self.simulation {
            let h = cfg.horizon.expect("set above");
            if h > run.sim.t_end() {
                return Err(CliError::Usage(format!(
                    "horizon {h} exceeds the simulated interval (t_end = {})",
                    run.sim.t_end()
                )));
            }
        }
        Ok(cfg)
    }
}

/// Integrates from `x0` to the horizon and returns `x*` with its bound,
/// failing when the bound exceeds `x_star_tol`.
pub fn locate_limit(problem: &Problem, cfg: &RunConfig) -> CliResult<LimitEstimate> {
    let x0 = cfg.x0.as_ref().expect("resolved");
    let horizon = cfg.horizon.expect("resolved");
    let times = log_grid(cfg.t0, horizon, LIMIT_SAMPLES);
    let samples = integrate_dense(problem.velocity(), x0, cfg.t0, &times, IntegratorOptions::new(cfg.tol()))?;
    let est = estimate_limit_with_mean(&samples, problem.mu1(), &problem.mean_flow())?;
    Ok(est.require(cfg.x_star_tol())?)
}

/// Simplest rational (smallest denominator, then numerator) in `[lo, hi]`.
pub fn simplest_rational(lo: &Rational, hi: &Rational) -> Rational {
    let zero = <Rational as Scalar>::from_i64(0);
    let one = <Rational as Scalar>::from_i64(1);
    if lo > hi {
        return simplest_rational(hi, lo);
    }
    if *lo <= zero && zero <= *hi {
        return zero;
    }
    if *hi < zero {
        return -simplest_rational(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    let next = fl.clone() + one.clone();
    if next <= *hi {
        return next;
    }
    let inner = simplest_rational(&(one.clone() / (hi.clone() - fl.clone())), &(one / (lo.clone() - fl.clone())));
    fl + inner.recip()
}

/// Largest denominator [`limit_point`] will snap to.
pub const SNAP_MAX_DENOMINATOR: u32 = 1000;

/// Converts the oracle's limit point to the engine's scalar. In exact mode
/// a component is replaced by the simplest rational within the tail bound
/// plus `10 tol max(1, |x|)` when that rational has a small denominator;
/// otherwise the float's exact binary value is used.
pub fn limit_point<S: Scalar>(est: &LimitEstimate, tol: f64, snap: bool) -> CliResult<Vec<S>> {
    let max_den = <Rational as Scalar>::from_i64(SNAP_MAX_DENOMINATOR as i64);
    est.x_star
        .iter()
        .map(|&x| {
            let mut r = rational_from_f64(x)?;
            if S::MODE == trajexp::NumericMode::Exact && snap {
                let width = est.bound + 10.0 * tol * x.abs().max(1.0);
                let simple = simplest_rational(&rational_from_f64(x - width)?, &rational_from_f64(x + width)?);
                if Rational::from_integer(simple.denom().clone()) <= max_den {
                    r = simple;
                }
            }
            Ok(S::from_rational(&r))
        })
        .collect()
}

pub fn expand<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    x_star: &[S],
    cfg: &RunConfig,
) -> CliResult<TrajectoryExpansion<S>> {
    Ok(compute_expansion_with(fe, x_star, cfg.order(), cfg.exec())?)
}

/// Applies the configured fault injections.
pub fn perturb<S: Scalar>(te: TrajectoryExpansion<S>, list: &[Perturbation]) -> CliResult<TrajectoryExpansion<S>> {
    let mut te = te;
    for p in list {
        let delta = S::from_rational(&parse_rational(&p.delta)?);
        let shift = PolyVec::constant(vec![delta; te.dim()]);
        let zeta = te.zeta(p.n).expect("index validated").add(&shift)?;
        te = te.with_zeta(p.n, zeta)?;
    }
    Ok(te)
}

pub fn limit_json(est: &LimitEstimate, x_star_used: &[Value]) -> Value {
    json!({
        "oracle_x_star": est.x_star,
        "bound": est.bound,
        "c0_hat": if est.c0_hat.is_finite() { json!(est.c0_hat) } else { Value::Null },
        "t_end": est.t_end,
        "x_star": x_star_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn simplest_rational_in_interval() {
        assert_eq!(simplest_rational(&r("-1/10"), &r("1/10")), r("0"));
        assert_eq!(simplest_rational(&r("0.3"), &r("0.35")), r("1/3"));
        assert_eq!(simplest_rational(&r("-0.35"), &r("-0.3")), r("-1/3"));
        assert_eq!(simplest_rational(&r("2.5"), &r("3.5")), r("3"));
        assert_eq!(simplest_rational(&r("7/5"), &r("7/5")), r("7/5"));
        assert_eq!(simplest_rational(&r("3.14159"), &r("3.1416")), r("355/113"));
    }
}
