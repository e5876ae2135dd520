use serde::Serialize;

use super::TrajectorySamples;
use crate::error::{Error, Result};

/// Endpoint limit estimate with its a posteriori tail bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub x_star: Vec<f64>,
    pub bound: f64,
    /// Measured sup of `|u - U0| exp(mu_1 t)` over the last third of the
    /// window. May be infinite for very long windows; `bound` never is.
    pub c0_hat: f64,
    pub t_end: f64,
}

impl LimitEstimate {
    /// Fails with `HorizonInsufficient` when the bound exceeds `tol`.
    pub fn require(self, tol: f64) -> Result<Self> {
        if self.bound > tol {
            return Err(Error::HorizonInsufficient {
                bound: self.bound,
                tol,
            });
        }
        Ok(self)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `x* = x(t_end)`, `bound = C0 exp(-mu_1 t_end) / mu_1`.
pub fn estimate_limit(samples: &TrajectorySamples, mu1: f64) -> Result<LimitEstimate> {
    estimate_limit_with_mean(samples, mu1, &vec![0.0; samples.dim()])
}

/// As [`estimate_limit`] for a field with mean flow `U0`: the limit is that
/// of `x(t) - U0 t`.
pub fn estimate_limit_with_mean(
    samples: &TrajectorySamples,
    mu1: f64,
    mean_flow: &[f64],
) -> Result<LimitEstimate> {
    if samples.is_empty() {
        return Err(Error::TooFewPoints {
            found: 0,
            required: 1,
        });
    }
    if !(mu1 > 0.0) {
        return Err(Error::InvalidInput("mu_1 must be positive".into()));
    }
    if mean_flow.len() != samples.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            found: mean_flow.len(),
        });
    }
    let t0 = samples.times[0];
    let t_end = samples.last_time();
    let x_star: Vec<f64> = samples
        .last_position()
        .iter()
        .zip(mean_flow)
        .map(|(x, u)| x - u * t_end)
        .collect();
    let cut = t_end - (t_end - t0) / 3.0;
    // sup |u - U0| exp(mu_1 (t - t_end)), kept in range
    let mut scaled_sup = 0.0f64;
    for (t, v) in samples.times.iter().zip(&samples.velocities) {
        if *t >= cut {
            let rel: Vec<f64> = v.iter().zip(mean_flow).map(|(a, b)| a - b).collect();
            scaled_sup = scaled_sup.max(norm(&rel) * (mu1 * (t - t_end)).exp());
        }
    }
    Ok(LimitEstimate {
        x_star,
        bound: scaled_sup / mu1,
        c0_hat: scaled_sup * (mu1 * t_end).exp(),
        t_end,
    })
}
