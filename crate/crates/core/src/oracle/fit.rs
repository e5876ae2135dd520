use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares line through `(t, ln v)`; `slope` is positive for decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `v ~ exp(intercept - slope t)` using the points above `floor`
/// (default `1e-12 * values[0]`).
pub fn fit_decay_rate(times: &[f64], values: &[f64], floor: Option<f64>) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let floor = floor.unwrap_or_else(|| 1e-12 * values.first().copied().unwrap_or(0.0).abs());
    let (ts, ls): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            found: ts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let lm = ls.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let stl: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let sll: f64 = ls.iter().map(|l| (l - lm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InvalidInput("fit times are all equal".into()));
    }
    let beta = stl / stt;
    let r2 = if sll == 0.0 { 1.0 } else { (stl * stl) / (stt * sll) };
    Ok(DecayFit {
        slope: -beta,
        intercept: lm - beta * tm,
        r2,
        points: ts.len(),
    })
}
