use std::io::Write;

use serde::Serialize;

use super::fit::{fit_decay_rate, DecayFit, MIN_FIT_POINTS};
use super::integrate::{integrate_dense, IntegratorOptions, IntegratorStats, TrajectorySamples};
use super::limit::{estimate_limit_with_mean, LimitEstimate};
use super::VelocityField;
use crate::engine::{evaluate_expansion, TrajectoryExpansion};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{FieldExpansion, FieldScalar};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub t0: f64,
    pub horizon: f64,
    pub tol: f64,
    /// Number of log-spaced sample times.
    pub samples: usize,
    /// Fits start at `t0 + transient_factor / mu_1`.
    pub transient_factor: f64,
    /// Required relative excess of the fitted slope over `mu_N`.
    pub margin_min: f64,
    /// Allowed relative shortfall against `mu_{N+1}` when that check applies.
    pub target_tol: f64,
    /// Known error of the `x*` used by the expansion; raises the noise floor.
    pub x_star_bound: f64,
    pub exec: Execution,
}

impl VerifyOptions {
    pub fn new(horizon: f64, tol: f64) -> Self {
        VerifyOptions {
            t0: 0.0,
            horizon,
            tol,
            samples: 400,
            transient_factor: 2.0,
            margin_min: 0.02,
            target_tol: 0.05,
            x_star_bound: 0.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Pass,
    Fail,
    /// The error stays below the noise floor after the transient: it decays
    /// faster than anything the window can resolve.
    BelowFloor,
    /// Some error is visible but too few points clear the floor for a fit.
    Unresolved,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub order: usize,
    pub mu: f64,
    pub required_slope: f64,
    pub target_slope: Option<f64>,
    pub target_enforced: bool,
    pub fit: Option<DecayFit>,
    /// Fit over the later half of the window, where the asymptotic rate
    /// dominates.
    pub tail_fit: Option<DecayFit>,
    /// Measured `slope - mu_N`.
    pub margin: Option<f64>,
    /// `(slope - mu_{N+1}) / mu_{N+1}`.
    pub target_deviation: Option<f64>,
    pub sup_error: f64,
    pub window: Option<[f64; 2]>,
    pub status: OrderStatus,
}

impl OrderReport {
    pub fn passed(&self) -> bool {
        matches!(self.status, OrderStatus::Pass | OrderStatus::BelowFloor)
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Decay of `|x(t) - x* - U0 t|` against `mu_1` (informational).
#[derive(Debug, Clone, Serialize)]
pub struct LimitDecay {
    pub fit: Option<DecayFit>,
    pub window: Option<[f64; 2]>,
    pub mu1: f64,
    pub relative_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub field_hash: String,
    pub mode: &'static str,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub horizon: f64,
    pub tol: f64,
    pub noise_floor: f64,
    pub transient_cutoff: f64,
    pub x_star: Vec<f64>,
    pub limit: LimitEstimate,
    pub limit_decay: LimitDecay,
    pub orders: Vec<OrderReport>,
    pub integrator: IntegratorStats,
    pub passed: bool,
    #[serde(skip)]
    pub times: Vec<f64>,
    /// `errors[N][i] = e_N(times[i])` for `N = 0..=order`.
    #[serde(skip)]
    pub errors: Vec<Vec<f64>>,
}

impl VerificationReport {
    pub fn order(&self, n: usize) -> Option<&OrderReport> {
        self.orders.iter().find(|o| o.order == n)
    }

    /// Columns `t, e_1, ..., e_N` after a commented header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# field_hash={}", self.field_hash)?;
        writeln!(
            w,
            "# tol={} noise_floor={} transient_cutoff={}",
            self.tol, self.noise_floor, self.transient_cutoff
        )?;
        let mut header = String::from("t");
        for n in 1..self.errors.len() {
            header.push_str(&format!(",e_{n}"));
        }
        writeln!(w, "{header}")?;
        for (i, t) in self.times.iter().enumerate() {
            let mut line = format!("{t}");
            for e in &self.errors[1..] {
                line.push_str(&format!(",{}", e[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Sample times: `t0` followed by a geometric grid in `t - t0` reaching
/// `horizon`.
pub fn log_grid(t0: f64, horizon: f64, n: usize) -> Vec<f64> {
    let span = horizon - t0;
    let s_min = span * 1e-3;
    let mut out = vec![t0];
    for i in 0..n {
        let s = if i + 1 == n {
            span
        } else {
            s_min * (span / s_min).powf(i as f64 / (n - 1) as f64)
        };
        out.push(t0 + s);
    }
    out.dedup();
    out
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Longest run (by duration) of consecutive samples after `cutoff` above `floor`.
fn select_window(times: &[f64], values: &[f64], cutoff: f64, floor: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    let dur = |(a, b): (usize, usize)| times[b] - times[a];
    for i in 0..=times.len() {
        let inside = i < times.len() && times[i] >= cutoff && values[i] > floor;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let run = (s, i - 1);
                if best.is_none_or(|b| dur(run) > dur(b) || (dur(run) == dur(b) && run.1 - run.0 > b.1 - b.0)) {
                    best = Some(run);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

struct WindowFit {
    fit: Option<DecayFit>,
    tail_fit: Option<DecayFit>,
    window: Option<[f64; 2]>,
    sup_error: f64,
    visible: bool,
}

fn fit_window(times: &[f64], values: &[f64], cutoff: f64, floor: f64) -> WindowFit {
    let sup_after = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= cutoff)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    match select_window(times, values, cutoff, floor) {
        Some((a, b)) if b + 1 - a >= MIN_FIT_POINTS => {
            let fit = fit_decay_rate(&times[a..=b], &values[a..=b], Some(floor)).ok();
            let mid = 0.5 * (times[a] + times[b]);
            let m = a + times[a..=b].partition_point(|t| *t < mid);
            let tail_fit = fit_decay_rate(&times[m..=b], &values[m..=b], Some(floor)).ok();
            WindowFit {
                fit,
                tail_fit,
                window: Some([times[a], times[b]]),
                sup_error: values[a..=b].iter().copied().fold(0.0, f64::max),
                visible: true,
            }
        }
        _ => WindowFit {
            fit: None,
            tail_fit: None,
            window: None,
            sup_error: sup_after,
            visible: sup_after > floor,
        },
    }
}

/// Verifies `te` against an oracle trajectory of `fe` itself.
pub fn verify_expansion<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    te: &TrajectoryExpansion<S>,
    x0: &[f64],
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if te.field_hash != fe.hash() {
        return Err(Error::InvalidInput(
            "expansion was computed from a different field".into(),
        ));
    }
    verify_with_velocity(fe, te, x0, opts)
}

/// Verifies `te` against an oracle trajectory of an arbitrary velocity `u`
/// whose expansion is the one `te` was computed from.
pub fn verify_with_velocity<S: Scalar>(
    u: &dyn VelocityField,
    te: &TrajectoryExpansion<S>,
    x0: &[f64],
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if x0.len() != te.dim() {
        return Err(Error::DimensionMismatch {
            expected: te.dim(),
            found: x0.len(),
        });
    }
    if !(opts.horizon > opts.t0) {
        return Err(Error::InvalidInput("horizon must exceed t0".into()));
    }
    let times = log_grid(opts.t0, opts.horizon, opts.samples.max(MIN_FIT_POINTS));
    let samples: TrajectorySamples =
        integrate_dense(u, x0, opts.t0, &times, IntegratorOptions::new(opts.tol))?;
    let mu1 = te.mu(1)?;
    let u0 = te.mean_flow_f64();
    let limit = estimate_limit_with_mean(&samples, mu1, &u0)?;

    let scale = x0.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let floor = (1e-12 * scale).max(100.0 * opts.tol * scale).max(10.0 * opts.x_star_bound);
    let cutoff = opts.t0 + opts.transient_factor / mu1;
    let order = te.order();

    let errors: Vec<Vec<f64>> = opts
        .exec
        .map_range(order + 1, |n| -> Result<Vec<f64>> {
            times
                .iter()
                .zip(&samples.positions)
                .map(|(&t, x)| Ok(norm_diff(x, &evaluate_expansion(te, t, n)?)))
                .collect()
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let sg = &te.sg;
    let time_independent = te.is_time_independent();
    let reports: Vec<Result<OrderReport>> = opts.exec.map_range(order, |i| {
        let n = i + 1;
        let mu = sg.mu(n)?;
        let target = if n < sg.n_cap() { Some(sg.mu(n + 1)?) } else { None };
        let target_enforced = time_independent && target.is_some();
        let wf = fit_window(&times, &errors[n], cutoff, floor);
        let required = mu * (1.0 + opts.margin_min);
        let status = match (&wf.fit, wf.visible) {
            (Some(f), _) => {
                let tail = wf.tail_fit.map_or(f.slope, |t| t.slope);
                let ok_rate = f.slope.min(tail) >= required;
                let ok_target = !target_enforced
                    || f.slope >= target.unwrap() * (1.0 - opts.target_tol);
                if ok_rate && ok_target {
                    OrderStatus::Pass
                } else {
                    OrderStatus::Fail
                }
            }
            (None, false) => OrderStatus::BelowFloor,
            (None, true) => OrderStatus::Unresolved,
        };
        Ok(OrderReport {
            order: n,
            mu,
            required_slope: required,
            target_slope: target,
            target_enforced,
            fit: wf.fit,
            tail_fit: wf.tail_fit,
            margin: wf.fit.map(|f| f.slope - mu),
            target_deviation: wf.fit.zip(target).map(|(f, m)| (f.slope - m) / m),
            sup_error: wf.sup_error,
            window: wf.window,
            status,
        })
    });
    let orders = reports.into_iter().collect::<Result<Vec<_>>>()?;

    let wf0 = fit_window(&times, &errors[0], cutoff, floor);
    let limit_decay = LimitDecay {
        fit: wf0.fit,
        window: wf0.window,
        mu1,
        relative_deviation: wf0.fit.map(|f| (f.slope - mu1) / mu1),
    };
    let passed = orders.iter().all(OrderReport::passed);
    Ok(VerificationReport {
        field_hash: te.field_hash.clone(),
        mode: S::MODE.name(),
        x0: x0.to_vec(),
        t0: opts.t0,
        horizon: opts.horizon,
        tol: opts.tol,
        noise_floor: floor,
        transient_cutoff: cutoff,
        x_star: te.x_star_f64(),
        limit,
        limit_decay,
        orders,
        integrator: samples.stats,
        passed,
        times,
        errors,
    })
}
