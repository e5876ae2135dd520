//! Dormand-Prince 5(4) with the standard continuous extension.

use serde::Serialize;

use super::VelocityField;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub tol: f64,
}

/// Oracle trajectory sampled at increasing times.
#[derive(Debug, Clone)]
pub struct TrajectorySamples {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// `u(x(t), t)` at each sample.
    pub velocities: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
}

impl TrajectorySamples {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("samples are never empty")
    }

    pub fn last_position(&self) -> &[f64] {
        self.positions.last().expect("samples are never empty")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Mixed tolerance: `|err_i| <= tol * (1 + |y_i|)`.
    pub tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    pub max_step: f64,
}

impl IntegratorOptions {
    pub fn new(tol: f64) -> Self {
        IntegratorOptions {
            tol,
            max_steps: 5_000_000,
            initial_step: None,
            max_step: f64::INFINITY,
        }
    }
}

struct Stepper<'a> {
    u: &'a dyn VelocityField,
    dim: usize,
    evaluations: usize,
}

impl Stepper<'_> {
    fn eval(&mut self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.evaluations += 1;
        let v = self.u.velocity(x, t)?;
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(v)
    }
}

fn combo(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (a, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * a * ki;
        }
    }
    out
}

/// Integrates `x' = u(x, t)` from `t0` and reports the state at each of
/// `times` (increasing, all `>= t0`) through the continuous extension.
pub fn integrate_dense(
    u: &dyn VelocityField,
    x0: &[f64],
    t0: f64,
    times: &[f64],
    opts: IntegratorOptions,
) -> Result<TrajectorySamples> {
    if x0.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: x0.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidInput(
            "sample times must be strictly increasing and not before t0".into(),
        ));
    }
    let t_end = *times
        .last()
        .ok_or_else(|| Error::InvalidInput("no sample times".into()))?;
    let dim = x0.len();
    let tol = opts.tol;
    let mut st = Stepper {
        u,
        dim,
        evaluations: 0,
    };
    let mut out = TrajectorySamples {
        times: Vec::with_capacity(times.len()),
        positions: Vec::with_capacity(times.len()),
        velocities: Vec::with_capacity(times.len()),
        stats: IntegratorStats {
            steps: 0,
            rejected: 0,
            evaluations: 0,
            tol,
        },
    };
    let mut next = 0;
    let mut t = t0;
    let mut y = x0.to_vec();
    let mut k1 = st.eval(&y, t)?;
    while next < times.len() && times[next] == t0 {
        out.times.push(t0);
        out.positions.push(y.clone());
        out.velocities.push(k1.clone());
        next += 1;
    }
    if next == times.len() {
        out.stats.evaluations = st.evaluations;
        return Ok(out);
    }

    let scale = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| tol * (1.0 + x.abs().max(y.abs()))).collect()
    };
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => {
            // Hairer's starting-step heuristic, single pass
            let sc = scale(&y, &y);
            let d0 = rms(&y, &sc);
            let d1 = rms(&k1, &sc);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let y1 = combo(&y, h0, &[(1.0, &k1)]);
            let f1 = st.eval(&y1, t + h0)?;
            let diff: Vec<f64> = f1.iter().zip(&k1).map(|(a, b)| a - b).collect();
            let d2 = rms(&diff, &sc) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(opts.max_step)
    .min(t_end - t0);
    let mut last_rejected = false;
    while next < times.len() {
        if out.stats.steps + out.stats.rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, state: y });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, state: y });
        }
        let h_eff = h.min(t_end - t);
        let k2 = st.eval(&combo(&y, h_eff, &[(A21, &k1)]), t + C2 * h_eff)?;
        let k3 = st.eval(&combo(&y, h_eff, &[(A31, &k1), (A32, &k2)]), t + C3 * h_eff)?;
        let k4 = st.eval(
            &combo(&y, h_eff, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            t + C4 * h_eff,
        )?;
        let k5 = st.eval(
            &combo(&y, h_eff, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            t + C5 * h_eff,
        )?;
        let k6 = st.eval(
            &combo(
                &y,
                h_eff,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            t + h_eff,
        )?;
        let y_new = combo(
            &y,
            h_eff,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if h_eff == t_end - t { t_end } else { t + h_eff };
        let k7 = st.eval(&y_new, t_new)?;
        let err_vec: Vec<f64> = (0..dim)
            .map(|i| {
                h_eff
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            })
            .collect();
        let err = rms(&err_vec, &scale(&y, &y_new));
        if !err.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if err <= 1.0 {
            out.stats.steps += 1;
            // continuous extension on [t, t_new]
            let ydiff: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
            let bspl: Vec<f64> = (0..dim).map(|i| h_eff * k1[i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..dim).map(|i| ydiff[i] - h_eff * k7[i] - bspl[i]).collect();
            let r5: Vec<f64> = (0..dim)
                .map(|i| {
                    h_eff
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i])
                })
                .collect();
            while next < times.len() && times[next] <= t_new {
                let ts = times[next];
                let pos = if ts == t_new {
                    y_new.clone()
                } else {
                    let th = (ts - t) / h_eff;
                    let th1 = 1.0 - th;
                    (0..dim)
                        .map(|i| {
                            y[i] + th * (ydiff[i] + th1 * (bspl[i] + th * (r4[i] + th1 * r5[i])))
                        })
                        .collect()
                };
                let vel = if ts == t_new { k7.clone() } else { st.eval(&pos, ts)? };
                out.times.push(ts);
                out.positions.push(pos);
                out.velocities.push(vel);
                next += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h_eff * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            out.stats.rejected += 1;
            h = h_eff * (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    out.stats.evaluations = st.evaluations;
    Ok(out)
}

fn rms(v: &[f64], sc: &[f64]) -> f64 {
    (v.iter().zip(sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Integrates over `[t0, t_end]` and samples on `n` uniformly spaced times.
pub fn integrate_trajectory(
    u: &dyn VelocityField,
    x0: &[f64],
    t0: f64,
    t_end: f64,
    tol: f64,
) -> Result<TrajectorySamples> {
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!(
            "t_end = {t_end} must exceed t0 = {t0}"
        )));
    }
    let n = 1000;
    let times: Vec<f64> = (0..=n)
        .map(|i| if i == n { t_end } else { t0 + (t_end - t0) * i as f64 / n as f64 })
        .collect();
    integrate_dense(u, x0, t0, &times, IntegratorOptions::new(tol))
}
