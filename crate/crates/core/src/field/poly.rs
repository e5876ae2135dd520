//! Multivariate polynomial vector fields with exact derivatives.
//!
//! These are test fixtures rather than Navier-Stokes fields: they admit
//! closed-form trajectories and keep every derivative tensor exact in
//! rational mode.

use serde_json::{json, Value};

use super::tensor::{multi_indices, DerivativeTensor};
use super::SpatialField;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `coeffs * x^exps` with a vector coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<S> {
    pub exps: Vec<u32>,
    pub coeffs: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyField<S> {
    dim: usize,
    terms: Vec<Monomial<S>>,
    terms_f64: Vec<(Vec<u32>, Vec<f64>)>,
}

impl<S: Scalar> PolyField<S> {
    pub fn new(dim: usize, terms: Vec<Monomial<S>>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidInput(format!("dimension {dim} not in 1..=3")));
        }
        let mut merged: Vec<Monomial<S>> = Vec::new();
        for t in terms {
            if t.exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.exps.len(),
                });
            }
            if t.coeffs.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.coeffs.len(),
                });
            }
            match merged.iter_mut().find(|m| m.exps == t.exps) {
                Some(m) => {
                    for (a, b) in m.coeffs.iter_mut().zip(t.coeffs) {
                        *a = a.clone() + b;
                    }
                }
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coeffs.iter().any(|c| !c.is_zero()));
        merged.sort_by(|a, b| a.exps.cmp(&b.exps));
        let terms_f64 = merged
            .iter()
            .map(|m| (m.exps.clone(), m.coeffs.iter().map(Scalar::to_f64).collect()))
            .collect();
        Ok(PolyField {
            dim,
            terms: merged,
            terms_f64,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, vec![])
    }

    pub fn terms(&self) -> &[Monomial<S>] {
        &self.terms
    }

    pub fn from_json(dim: usize, table: &Value) -> Result<Self> {
        let rows = table
            .as_array()
            .ok_or_else(|| Error::Schema("monomial table must be an array".into()))?;
        let terms = rows
            .iter()
            .map(|row| {
                let exps = row
                    .get("exp")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Schema("monomial needs \"exp\"".into()))?
                    .iter()
                    .map(|e| {
                        e.as_u64()
                            .map(|x| x as u32)
                            .ok_or_else(|| Error::Schema("exponents must be non-negative integers".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let coeffs = row
                    .get("coeff")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Schema("monomial needs \"coeff\"".into()))?
                    .iter()
                    .map(S::from_json)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Monomial { exps, coeffs })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, terms)
    }
}

fn pow<S: Scalar>(x: &S, p: u32) -> S {
    (0..p).fold(S::one(), |acc, _| acc * x.clone())
}

/// `e (e-1) ... (e-c+1)`
fn falling(e: u32, c: u32) -> i64 {
    (0..c).map(|i| (e - i) as i64).product()
}

impl<S: Scalar> SpatialField<S> for PolyField<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for t in &self.terms {
            let mono = t
                .exps
                .iter()
                .zip(x)
                .fold(S::one(), |acc, (&e, xi)| acc * pow(xi, e));
            for (o, c) in out.iter_mut().zip(&t.coeffs) {
                *o = o.clone() + c.clone() * mono.clone();
            }
        }
        out
    }

    fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (exps, coeffs) in &self.terms_f64 {
            let mono: f64 = exps.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product();
            for (o, c) in out.iter_mut().zip(coeffs) {
                *o += c * mono;
            }
        }
        out
    }

    fn derivative(&self, x: &[S], order: usize) -> Result<DerivativeTensor<S>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let d = self.dim;
        let stride = d.pow(order as u32);
        let mut data = vec![S::zero(); d * stride];
        for (flat, alpha) in multi_indices(d, order).iter().enumerate() {
            let mut counts = vec![0u32; d];
            for &a in alpha {
                counts[a] += 1;
            }
            for t in &self.terms {
                if t.exps.iter().zip(&counts).any(|(e, c)| c > e) {
                    continue;
                }
                let mut factor = S::one();
                for j in 0..d {
                    factor = factor
                        * S::from_i64(falling(t.exps[j], counts[j]))
                        * pow(&x[j], t.exps[j] - counts[j]);
                }
                for (i, c) in t.coeffs.iter().enumerate() {
                    let idx = i * stride + flat;
                    data[idx] = data[idx].clone() + c.clone() * factor.clone();
                }
            }
        }
        DerivativeTensor::constant(d, order, data)
    }

    fn is_identically_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|t| {
                    json!({
                        "exp": t.exps,
                        "coeff": t.coeffs.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_bigint::BigInt;

    fn qi(p: i64) -> Rational {
        Rational::from_integer(BigInt::from(p))
    }

    fn one_plus_x() -> PolyField<Rational> {
        PolyField::new(
            1,
            vec![
                Monomial { exps: vec![0], coeffs: vec![qi(1)] },
                Monomial { exps: vec![1], coeffs: vec![qi(1)] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn linear_field_derivatives() {
        let f = one_plus_x();
        let d1 = f.derivative(&[qi(0)], 1).unwrap();
        assert_eq!(d1.time_coeffs(), &[vec![qi(1)]]);
        assert!(f.derivative(&[qi(0)], 2).unwrap().is_zero());
        assert_eq!(f.eval(&[qi(3)]), vec![qi(4)]);
        assert_eq!(f.eval_f64(&[3.0]), vec![4.0]);
    }

    #[test]
    fn mixed_second_derivative_is_symmetric() {
        // f = (x^2 y, x y^3)
        let f = PolyField::new(
            2,
            vec![
                Monomial { exps: vec![2, 1], coeffs: vec![qi(1), qi(0)] },
                Monomial { exps: vec![1, 3], coeffs: vec![qi(0), qi(1)] },
            ],
        )
        .unwrap();
        let x = [qi(2), qi(3)];
        let h = f.derivative(&x, 2).unwrap();
        for i in 0..2 {
            assert_eq!(h.entry(i, &[0, 1]), h.entry(i, &[1, 0]));
        }
        // d^2/dxdy (x^2 y) = 2x = 4 ; d^2/dy^2 (x y^3) = 6 x y = 36
        assert_eq!(h.entry(0, &[0, 1]).coeffs(), &[qi(4)]);
        assert_eq!(h.entry(1, &[1, 1]).coeffs(), &[qi(36)]);
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let f = PolyField::new(
            1,
            vec![
                Monomial { exps: vec![1], coeffs: vec![qi(1)] },
                Monomial { exps: vec![1], coeffs: vec![qi(-1)] },
            ],
        )
        .unwrap();
        assert!(f.is_identically_zero());
    }
}
