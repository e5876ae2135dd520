//! Real trigonometric polynomial vector fields on a periodic box.
//!
//! A field is `f(x) = sum_k 2 Re(c_k exp(i kappa_k . x))` over wave
//! vectors `k` in a half-space, plus `Re(c_0)` for `k = 0`, with
//! `kappa_j = 2 pi k_j / L_j`. The coefficient at `-k` is the conjugate and
//! is never stored.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::tensor::DerivativeTensor;
use super::SpatialField;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub k: Vec<i64>,
    pub c: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    dim: usize,
    periods: Vec<f64>,
    modes: Vec<TrigMode>,
    max_order: usize,
}

fn in_upper_half(k: &[i64]) -> bool {
    match k.iter().find(|&&x| x != 0) {
        Some(&x) => x > 0,
        None => true,
    }
}

impl TrigField {
    /// Canonicalizes modes into the upper half-space, merging duplicates.
    /// A `k = 0` entry must be real.
    pub fn new(dim: usize, periods: Vec<f64>, modes: Vec<TrigMode>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidInput(format!("dimension {dim} not in 1..=3")));
        }
        if periods.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: periods.len(),
            });
        }
        if periods.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidInput("periods must be positive".into()));
        }
        let mut canon: Vec<TrigMode> = Vec::new();
        for m in modes {
            if m.k.len() != dim || m.c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.k.len().min(m.c.len()),
                });
            }
            let (k, c) = if in_upper_half(&m.k) {
                (m.k, m.c)
            } else {
                (
                    m.k.iter().map(|x| -x).collect(),
                    m.c.iter().map(|z| z.conj()).collect(),
                )
            };
            if k.iter().all(|&x| x == 0) && c.iter().any(|z| z.im != 0.0) {
                return Err(Error::InvalidInput(
                    "the k = 0 coefficient of a real field must be real".into(),
                ));
            }
            match canon.iter_mut().find(|e| e.k == k) {
                Some(e) => {
                    for (a, b) in e.c.iter_mut().zip(c) {
                        *a += b;
                    }
                }
                None => canon.push(TrigMode { k, c }),
            }
        }
        canon.retain(|m| m.c.iter().any(|z| z.norm() != 0.0));
        canon.sort_by(|a, b| a.k.cmp(&b.k));
        Ok(TrigField {
            dim,
            periods,
            modes: canon,
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn modes(&self) -> &[TrigMode] {
        &self.modes
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn wavevector(&self, k: &[i64]) -> Vec<f64> {
        k.iter()
            .zip(&self.periods)
            .map(|(&kj, &l)| 2.0 * PI * kj as f64 / l)
            .collect()
    }

    pub fn is_zero_mean(&self) -> bool {
        !self.modes.iter().any(|m| m.k.iter().all(|&x| x == 0))
    }

    /// Largest `|kappa . c_k| / |c_k|` over the modes; zero for a
    /// divergence-free field.
    pub fn divergence_defect(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let kappa = self.wavevector(&m.k);
                let dot: Complex64 = kappa.iter().zip(&m.c).map(|(k, c)| c * k).sum();
                let norm = m.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
                    * kappa.iter().map(|k| k * k).sum::<f64>().sqrt();
                if norm == 0.0 {
                    0.0
                } else {
                    dot.norm() / norm
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_defect() <= 1e-12
    }

    /// Pointwise divergence.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        let d = self
            .derivative(x, 1)
            .expect("first derivatives are always available");
        (0..self.dim).map(|i| d.time_coeffs()[0][i * self.dim + i]).sum()
    }

    fn phase(&self, m: &TrigMode, x: &[f64]) -> Complex64 {
        let arg: f64 = self.wavevector(&m.k).iter().zip(x).map(|(k, xi)| k * xi).sum();
        Complex64::from_polar(1.0, arg)
    }

    /// Parses a mode table `[{"k": [...], "re": [...], "im": [...]}, ...]`.
    pub fn from_json(dim: usize, periods: Vec<f64>, table: &Value) -> Result<Self> {
        let rows = table
            .as_array()
            .ok_or_else(|| Error::Schema("mode table must be an array".into()))?;
        let nums = |row: &Value, key: &str| -> Result<Vec<f64>> {
            row.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Schema(format!("mode needs \"{key}\"")))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Error::Schema(format!("\"{key}\" entries must be numbers"))))
                .collect()
        };
        let modes = rows
            .iter()
            .map(|row| {
                let k = row
                    .get("k")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Schema("mode needs \"k\"".into()))?
                    .iter()
                    .map(|v| v.as_i64().ok_or_else(|| Error::Schema("wave numbers must be integers".into())))
                    .collect::<Result<Vec<_>>>()?;
                let re = nums(row, "re")?;
                let im = match row.get("im") {
                    Some(_) => nums(row, "im")?,
                    None => vec![0.0; re.len()],
                };
                if re.len() != im.len() {
                    return Err(Error::Schema("\"re\" and \"im\" lengths differ".into()));
                }
                Ok(TrigMode {
                    k,
                    c: re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TrigField::new(dim, periods, modes)
    }
}

impl SpatialField<f64> for TrigField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_f64(x)
    }

    fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for m in &self.modes {
            let w = if m.k.iter().all(|&k| k == 0) { 1.0 } else { 2.0 };
            let e = self.phase(m, x);
            for (o, c) in out.iter_mut().zip(&m.c) {
                *o += w * (c * e).re;
            }
        }
        out
    }

    fn derivative(&self, x: &[f64], order: usize) -> Result<DerivativeTensor<f64>> {
        if order > self.max_order {
            return Err(Error::DerivativeOrder {
                order,
                max: self.max_order,
            });
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let d = self.dim;
        let stride = d.pow(order as u32);
        let mut data = vec![0.0; d * stride];
        // i^order
        let i_pow = Complex64::i().powu(order as u32);
        for m in &self.modes {
            let zero_mode = m.k.iter().all(|&k| k == 0);
            if zero_mode && order > 0 {
                continue;
            }
            let w = if zero_mode { 1.0 } else { 2.0 };
            let kappa = self.wavevector(&m.k);
            let mut kprod = vec![1.0];
            for _ in 0..order {
                kprod = kprod
                    .iter()
                    .flat_map(|p| kappa.iter().map(move |k| p * k))
                    .collect();
            }
            let e = self.phase(m, x) * i_pow;
            for (i, c) in m.c.iter().enumerate() {
                let base = w * c * e;
                for (flat, kp) in kprod.iter().enumerate() {
                    data[i * stride + flat] += base.re * kp;
                }
            }
        }
        DerivativeTensor::constant(d, order, data)
    }

    fn max_order(&self) -> Option<usize> {
        Some(self.max_order)
    }

    fn mean(&self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        if let Some(m) = self.modes.iter().find(|m| m.k.iter().all(|&k| k == 0)) {
            for (o, c) in out.iter_mut().zip(&m.c) {
                *o = c.re;
            }
        }
        Some(out)
    }

    fn is_identically_zero(&self) -> bool {
        self.modes.is_empty()
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.modes
                .iter()
                .map(|m| {
                    json!({
                        "k": m.k,
                        "re": m.c.iter().map(|z| z.re).collect::<Vec<_>>(),
                        "im": m.c.iter().map(|z| z.im).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )
    }
}
