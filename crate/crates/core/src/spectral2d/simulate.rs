use std::f64::consts::TAU;
use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{InitialCondition, Spectral2d, SpectralState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::oracle::VelocityField;

fn default_periods() -> [f64; 2] {
    [TAU, TAU]
}

fn default_stride() -> usize {
    10
}

fn default_interp_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub m: usize,
    #[serde(default = "default_periods")]
    pub periods: [f64; 2],
    pub nu: f64,
    pub t_end: f64,
    /// Fixed step; by default half the initial CFL limit, capped at 0.05.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Steps between stored states.
    #[serde(default = "default_stride")]
    pub store_stride: usize,
    pub initial: InitialCondition,
    #[serde(default)]
    pub mean_flow: [f64; 2],
    /// Relative interpolation error above which a warning is recorded.
    #[serde(default = "default_interp_tol")]
    pub interp_tol: f64,
}

impl SimulationSpec {
    pub fn taylor_green(m: usize, nu: f64, t_end: f64) -> Self {
        SimulationSpec {
            m,
            periods: default_periods(),
            nu,
            t_end,
            dt: None,
            store_stride: default_stride(),
            initial: InitialCondition::TaylorGreen { amplitude: 1.0 },
            mean_flow: [0.0, 0.0],
            interp_tol: default_interp_tol(),
        }
    }
}

/// Hermite data for one stored interval, per retained mode, in
/// integrating-factor variables.
struct Interval {
    /// `(flat index, lambda, [a, b, c, d])`
    modes: Vec<(usize, f64, [Complex64; 4])>,
}

pub struct Simulation {
    pub spec: SimulationSpec,
    pub solver: Spectral2d,
    pub states: Vec<SpectralState>,
    /// `d omega_hat / dt` at each stored state.
    pub rhs: Vec<Vec<Complex64>>,
    pub energies: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    /// Largest relative error of the interpolant at an interior step,
    /// against the computed state there (`None` when the stride is 1).
    pub interpolation_error: Option<f64>,
    pub warnings: Vec<String>,
    intervals: Vec<OnceLock<Interval>>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("spec", &self.spec)
            .field("states", &self.states.len())
            .field("dt", &self.dt)
            .field("steps", &self.steps)
            .finish()
    }
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Runs the simulation, storing every `store_stride` steps and the final state.
pub fn simulate(spec: &SimulationSpec, exec: Execution) -> Result<Simulation> {
    if !(spec.t_end > 0.0) {
        return Err(Error::InvalidInput("t_end must be positive".into()));
    }
    if spec.store_stride == 0 {
        return Err(Error::InvalidInput("store_stride must be at least 1".into()));
    }
    let solver = Spectral2d::new(spec.m, spec.periods, spec.nu, exec)?;
    let mut state = solver.state(0.0, spec.mean_flow, spec.initial.omega_hat(&solver)?)?;
    let dt_target = match spec.dt {
        Some(dt) => dt,
        None => (0.5 * solver.cfl_limit(&state.omega_hat)).min(0.05),
    };
    if !(dt_target > 0.0) {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let steps = (spec.t_end / dt_target).ceil() as usize;
    let dt = spec.t_end / steps as f64;
    let limit = solver.cfl_limit(&state.omega_hat);
    if dt > limit {
        return Err(Error::Cfl {
            dt,
            suggested: 0.9 * limit,
        });
    }

    let mut states = vec![state.clone()];
    let mut rhs = vec![solver.rhs(&state.omega_hat)];
    let mut energies = vec![solver.energy(&state.omega_hat)];
    let mut interior: Vec<SpectralState> = Vec::new();
    let probe = spec.store_stride / 2;
    for step in 1..=steps {
        state = solver.step(&state, dt)?;
        // pin the clock to the grid to avoid drift over long runs
        state.t = step as f64 * dt;
        let offset = step % spec.store_stride;
        if probe > 0 && offset == probe {
            interior.push(state.clone());
        }
        if offset == 0 || step == steps {
            rhs.push(solver.rhs(&state.omega_hat));
            energies.push(solver.energy(&state.omega_hat));
            states.push(state.clone());
        }
    }
    let mut warnings = Vec::new();
    for (i, w) in energies.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + 1e-12) + 1e-300 {
            warnings.push(format!(
                "energy increased between t = {} and t = {}",
                states[i].t, states[i + 1].t
            ));
            break;
        }
    }
    let mut sim = Simulation {
        spec: spec.clone(),
        intervals: (0..states.len().saturating_sub(1)).map(|_| OnceLock::new()).collect(),
        solver,
        states,
        rhs,
        energies,
        dt,
        steps,
        interpolation_error: None,
        warnings,
    };
    if !interior.is_empty() {
        let errs = exec.map(&interior, |s| -> Result<f64> {
            Ok(rel_diff(&sim.omega_hat_at(s.t)?, &s.omega_hat))
        });
        let mut worst = 0.0f64;
        for e in errs {
            worst = worst.max(e?);
        }
        sim.interpolation_error = Some(worst);
        if worst > spec.interp_tol {
            sim.warnings.push(format!(
                "interpolation error {worst:.3e} exceeds {:.1e}; halve store_stride",
                spec.interp_tol
            ));
        }
    }
    Ok(sim)
}

impl Simulation {
    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().expect("at least one state").t
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    fn interval(&self, i: usize) -> &Interval {
        self.intervals[i].get_or_init(|| {
            let (s0, s1) = (&self.states[i], &self.states[i + 1]);
            let (r0, r1) = (&self.rhs[i], &self.rhs[i + 1]);
            let h = s1.t - s0.t;
            let nu = self.solver.nu();
            let modes = (0..s0.omega_hat.len())
                .filter(|&idx| self.solver.mask()[idx])
                .map(|idx| {
                    let lambda = nu * self.solver.k2()[idx];
                    let grow = (lambda * h).exp();
                    let w0 = s0.omega_hat[idx];
                    let w1 = grow * s1.omega_hat[idx];
                    let d0 = r0[idx] + lambda * s0.omega_hat[idx];
                    let d1 = grow * (r1[idx] + lambda * s1.omega_hat[idx]);
                    (idx, lambda, [w0, h * d0, w1, h * d1])
                })
                .collect();
            Interval { modes }
        })
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (a, b) = (self.t_start(), self.t_end());
        if !(t >= a && t <= b) {
            return Err(Error::TimeOutOfRange { t, start: a, end: b });
        }
        let i = self.states.partition_point(|s| s.t <= t);
        Ok(i.saturating_sub(1).min(self.states.len().saturating_sub(2)))
    }

    /// Vorticity coefficients at `t` by cubic Hermite interpolation in
    /// integrating-factor variables.
    pub fn omega_hat_at(&self, t: f64) -> Result<Vec<Complex64>> {
        if self.states.len() == 1 {
            return self.locate(t).map(|_| self.states[0].omega_hat.clone());
        }
        let i = self.locate(t)?;
        let (t0, t1) = (self.states[i].t, self.states[i + 1].t);
        if t == t0 {
            return Ok(self.states[i].omega_hat.clone());
        }
        if t == t1 {
            return Ok(self.states[i + 1].omega_hat.clone());
        }
        let tau = t - t0;
        let s = tau / (t1 - t0);
        let (s2, s3) = (s * s, s * s * s);
        let h = [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2];
        let mut out = vec![Complex64::new(0.0, 0.0); self.states[i].omega_hat.len()];
        for (idx, lambda, c) in &self.interval(i).modes {
            let w = h[0] * c[0] + h[1] * c[1] + h[2] * c[2] + h[3] * c[3];
            out[*idx] = (-lambda * tau).exp() * w;
        }
        Ok(out)
    }

    /// Full velocity `U0 + v(x - U0 t, t)`; `x` wraps periodically.
    pub fn velocity_at(&self, x: &[f64], t: f64) -> Result<[f64; 2]> {
        if x.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: x.len(),
            });
        }
        let w = self.omega_hat_at(t)?;
        let [u1, u2] = self.solver.velocity_hat(&w);
        let u0 = self.spec.mean_flow;
        let xi = [x[0] - u0[0] * t, x[1] - u0[1] * t];
        let v = self.solver.sum_modes(&u1, &u2, xi);
        Ok([u0[0] + v[0], u0[1] + v[1]])
    }

    /// Grid average of the full velocity at each stored state.
    pub fn mean_velocities(&self) -> Vec<[f64; 2]> {
        self.states.iter().map(|s| self.solver.mean_velocity(s)).collect()
    }

    /// `t,energy` rows with full round-trip precision.
    pub fn write_energy_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,energy")?;
        for (s, e) in self.states.iter().zip(&self.energies) {
            writeln!(w, "{},{}", s.t, e)?;
        }
        Ok(())
    }
}

impl VelocityField for Simulation {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.velocity_at(x, t).map(|v| v.to_vec())
    }
}
