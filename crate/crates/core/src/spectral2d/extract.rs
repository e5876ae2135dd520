use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use super::{wavenumber, Simulation};
use crate::error::{Error, Result};
use crate::field::{FieldExpansion, FieldKind, FieldScalar, SpatialField, TrigField, TrigMode};
use crate::oracle::{fit_decay_rate, DecayFit, MIN_FIT_POINTS};
use crate::scalar::Rational;
use crate::semigroup::Semigroup;

/// Energy fraction the lowest occupied shell must hold over the window.
pub const MIN_DOMINANCE: f64 = 0.9;
/// A lower shell above this energy fraction means the tail has not settled.
const LOWER_SHELL_FRACTION: f64 = 1e-6;

/// Leading decay rate and spatial profile fitted from a simulation tail.
#[derive(Debug, Clone, Serialize)]
pub struct LeadingTerm {
    pub mu1: f64,
    #[serde(skip)]
    pub q1: TrigField,
    /// `|kappa|^2` of the dominant shell; `nu * shell_lambda` is the Stokes rate.
    pub shell_lambda: f64,
    pub shell_modes: Vec<[i64; 2]>,
    pub t_ref: f64,
    pub window: [f64; 2],
    /// Smallest energy fraction of the shell over the window.
    pub dominance: f64,
    pub fit: DecayFit,
    /// RMS residual of the log-linear amplitude fit.
    pub residual: f64,
    /// Relative change of the profile when `t_ref` moves to the window end.
    pub t_ref_sensitivity: f64,
}

impl LeadingTerm {
    /// One-term float expansion `q1 exp(-mu1 t)` on the exponents `n mu1`.
    pub fn field_expansion(&self, mean_flow: [f64; 2], cap: usize) -> Result<FieldExpansion<f64>> {
        let one = Rational::from_integer(1.into());
        let sg = Semigroup::new(&[one.clone()], one, self.mu1, cap)?;
        let mut fe = FieldExpansion::new(
            2,
            FieldKind::Trig,
            Some(self.q1.periods().to_vec()),
            sg,
            mean_flow.to_vec(),
        )?;
        fe.add_term(1, vec![f64::trig_field(self.q1.clone())?])?;
        Ok(fe)
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("plain data serializes");
        v["q1"] = json!(self.q1.to_json());
        v
    }
}

fn upper_half(k: [i64; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

/// Fits the lowest occupied Stokes shell over stored states with `t >= t_start`.
pub fn extract_leading_term(sim: &Simulation, t_start: f64) -> Result<LeadingTerm> {
    let solver = &sim.solver;
    let m = solver.m();
    let window: Vec<usize> = (0..sim.states.len()).filter(|&i| sim.states[i].t >= t_start).collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            found: window.len(),
            required: MIN_FIT_POINTS,
        });
    }
    // shells keyed by |kappa|^2 rounded to 1e-9 relative
    let mut shells: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for idx in 0..m * m {
        if solver.mask()[idx] {
            let key = (solver.k2()[idx] * 1e9).round() as i64;
            shells.entry(key).or_default().push(idx);
        }
    }
    let velocity = |i: usize| solver.velocity_hat(&sim.states[i].omega_hat);
    let shell_energy = |u: &[Vec<Complex64>; 2], idxs: &[usize]| -> f64 {
        0.5 * idxs.iter().map(|&j| u[0][j].norm_sqr() + u[1][j].norm_sqr()).sum::<f64>()
    };

    // the shell holding the most energy at the window start
    let first = velocity(window[0]);
    let total0: f64 = shells.values().map(|s| shell_energy(&first, s)).sum();
    if total0 == 0.0 {
        return Err(Error::TransientNotDecayed {
            fraction: 0.0,
            required: MIN_DOMINANCE,
        });
    }
    let (&key, idxs) = shells
        .iter()
        .max_by(|a, b| shell_energy(&first, a.1).total_cmp(&shell_energy(&first, b.1)))
        .expect("at least one retained mode");

    let mut dominance = f64::INFINITY;
    let mut amps = Vec::with_capacity(window.len());
    let mut times = Vec::with_capacity(window.len());
    let mut lower_fraction = 0.0f64;
    for &i in &window {
        let u = velocity(i);
        let total: f64 = shells.values().map(|s| shell_energy(&u, s)).sum();
        let e = shell_energy(&u, idxs);
        dominance = dominance.min(if total > 0.0 { e / total } else { 0.0 });
        let lower: f64 = shells.range(..key).map(|(_, s)| shell_energy(&u, s)).sum();
        lower_fraction = if total > 0.0 { lower / total } else { 0.0 };
        amps.push(e.sqrt());
        times.push(sim.states[i].t);
    }
    if dominance < MIN_DOMINANCE {
        return Err(Error::TransientNotDecayed {
            fraction: dominance,
            required: MIN_DOMINANCE,
        });
    }
    if lower_fraction > LOWER_SHELL_FRACTION {
        return Err(Error::TransientNotDecayed {
            fraction: 1.0 - lower_fraction,
            required: 1.0 - LOWER_SHELL_FRACTION,
        });
    }
    let fit = fit_decay_rate(&times, &amps, Some(0.0))?;
    let residual = (times
        .iter()
        .zip(&amps)
        .map(|(t, a)| (a.ln() - (fit.intercept - fit.slope * t)).powi(2))
        .sum::<f64>()
        / times.len() as f64)
        .sqrt();

    let profile = |i: usize| -> Vec<([i64; 2], [Complex64; 2])> {
        let u = velocity(i);
        let grow = (fit.slope * sim.states[i].t).exp();
        idxs.iter()
            .map(|&j| ([wavenumber(j / m, m), wavenumber(j % m, m)], j))
            .filter(|(k, _)| upper_half(*k))
            .map(|(k, j)| (k, [u[0][j] * grow, u[1][j] * grow]))
            .collect()
    };
    let at_ref = profile(window[0]);
    let at_end = profile(*window.last().unwrap());
    let norm = |p: &[([i64; 2], [Complex64; 2])]| -> f64 {
        p.iter().map(|(_, c)| c[0].norm_sqr() + c[1].norm_sqr()).sum::<f64>().sqrt()
    };
    let diff: f64 = at_ref
        .iter()
        .zip(&at_end)
        .map(|(a, b)| (a.1[0] - b.1[0]).norm_sqr() + (a.1[1] - b.1[1]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let peak = at_ref
        .iter()
        .map(|(_, c)| c[0].norm().max(c[1].norm()))
        .fold(0.0, f64::max);
    let shell_modes: Vec<[i64; 2]> = at_ref
        .iter()
        .filter(|(_, c)| c[0].norm().max(c[1].norm()) > 1e-12 * peak)
        .map(|(k, _)| *k)
        .collect();
    let q1 = TrigField::new(
        2,
        solver.periods().to_vec(),
        at_ref
            .iter()
            .map(|(k, c)| TrigMode {
                k: k.to_vec(),
                c: c.to_vec(),
            })
            .collect(),
    )?;
    Ok(LeadingTerm {
        mu1: fit.slope,
        shell_lambda: solver.k2()[idxs[0]],
        shell_modes,
        t_ref: times[0],
        window: [times[0], *times.last().unwrap()],
        dominance,
        fit,
        residual,
        t_ref_sensitivity: diff / norm(&at_ref).max(f64::MIN_POSITIVE),
        q1,
    })
}
