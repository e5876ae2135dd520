//! Symmetric multilinear maps with polynomial-in-time entries.
//!
//! Storage is dense: entry `(i; a_1, ..., a_m)` lives at
//! `i * d^m + sum_l a_l d^(m - l)`, last argument least significant.

use crate::error::{Error, Result};
use crate::polyvec::{Poly, PolyVec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTensor<S> {
    dim: usize,
    order: usize,
    /// `time_coeffs[k]` is the coefficient of `t^k`, length `d^(m+1)`.
    time_coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> DerivativeTensor<S> {
    pub fn zero(dim: usize, order: usize) -> Self {
        DerivativeTensor {
            dim,
            order,
            time_coeffs: vec![vec![S::zero(); dim.pow(order as u32 + 1)]],
        }
    }

    /// Constant-in-time tensor from dense data.
    pub fn constant(dim: usize, order: usize, data: Vec<S>) -> Result<Self> {
        Self::from_time_coeffs(dim, order, vec![data])
    }

    pub fn from_time_coeffs(dim: usize, order: usize, time_coeffs: Vec<Vec<S>>) -> Result<Self> {
        let len = dim.pow(order as u32 + 1);
        if let Some(bad) = time_coeffs.iter().find(|c| c.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        let mut t = DerivativeTensor {
            dim,
            order,
            time_coeffs,
        };
        if t.time_coeffs.is_empty() {
            t.time_coeffs.push(vec![S::zero(); len]);
        }
        t.trim();
        Ok(t)
    }

    fn trim(&mut self) {
        let reference = self
            .time_coeffs
            .iter()
            .flatten()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max);
        while self.time_coeffs.len() > 1
            && self
                .time_coeffs
                .last()
                .unwrap()
                .iter()
                .all(|c| c.is_negligible(reference))
        {
            self.time_coeffs.pop();
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Degree in `t`.
    pub fn degree(&self) -> usize {
        self.time_coeffs.len() - 1
    }

    pub fn time_coeffs(&self) -> &[Vec<S>] {
        &self.time_coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.time_coeffs.iter().flatten().all(|c| c.is_zero())
    }

    /// Flat index of `(i; args)`.
    pub fn index(&self, i: usize, args: &[usize]) -> usize {
        args.iter().fold(i, |acc, &a| acc * self.dim + a)
    }

    /// Entry as a scalar polynomial in `t`.
    pub fn entry(&self, i: usize, args: &[usize]) -> Poly<S> {
        let idx = self.index(i, args);
        Poly::new(self.time_coeffs.iter().map(|c| c[idx].clone()).collect())
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut t = DerivativeTensor {
            dim: self.dim,
            order: self.order,
            time_coeffs: self
                .time_coeffs
                .iter()
                .map(|c| c.iter().map(|x| x.clone() * s.clone()).collect())
                .collect(),
        };
        t.trim();
        t
    }

    /// `self + t^power * other`.
    pub fn add_shifted(&self, other: &Self, power: usize) -> Result<Self> {
        if self.dim != other.dim || self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let len = self.time_coeffs.len().max(other.time_coeffs.len() + power);
        let width = self.time_coeffs[0].len();
        let mut out = vec![vec![S::zero(); width]; len];
        for (k, c) in self.time_coeffs.iter().enumerate() {
            out[k] = c.clone();
        }
        for (k, c) in other.time_coeffs.iter().enumerate() {
            for (o, x) in out[k + power].iter_mut().zip(c) {
                *o = o.clone() + x.clone();
            }
        }
        Self::from_time_coeffs(self.dim, self.order, out)
    }

    /// Contraction `Q(t)(p_1(t), ..., p_m(t))` with polynomial
    /// multiplication. For `m = 0` this is the tensor's own vector polynomial.
    pub fn apply(&self, args: &[&PolyVec<S>]) -> Result<PolyVec<S>> {
        if args.len() != self.order {
            return Err(Error::ArityMismatch {
                order: self.order,
                found: args.len(),
            });
        }
        if let Some(bad) = args.iter().find(|a| a.dim() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: bad.dim(),
            });
        }
        let d = self.dim;
        let width = self.time_coeffs[0].len();
        let mut entries: Vec<Poly<S>> = (0..width)
            .map(|e| Poly::new(self.time_coeffs.iter().map(|c| c[e].clone()).collect()))
            .collect();
        for arg in args.iter().rev() {
            let comps: Vec<Poly<S>> = (0..d).map(|a| arg.component(a)).collect();
            entries = entries
                .chunks(d)
                .map(|chunk| {
                    chunk
                        .iter()
                        .zip(&comps)
                        .filter(|(e, c)| !e.is_zero() && !c.is_zero())
                        .fold(Poly::zero(), |acc, (e, c)| acc.add(&e.mul(c)))
                })
                .collect();
        }
        Ok(PolyVec::from_components(&entries))
    }

    /// Constant-coefficient evaluation at time `t` applied to vectors, f64.
    pub fn apply_at(&self, t: f64, args: &[&[f64]]) -> Result<Vec<f64>> {
        if args.len() != self.order {
            return Err(Error::ArityMismatch {
                order: self.order,
                found: args.len(),
            });
        }
        let d = self.dim;
        let mut entries = self.eval_entries(t);
        for arg in args.iter().rev() {
            entries = entries
                .chunks(d)
                .map(|c| c.iter().zip(arg.iter()).map(|(e, a)| e * a).sum())
                .collect();
        }
        Ok(entries)
    }

    fn eval_entries(&self, t: f64) -> Vec<f64> {
        let width = self.time_coeffs[0].len();
        (0..width)
            .map(|e| {
                self.time_coeffs
                    .iter()
                    .rev()
                    .fold(0.0, |acc, c| acc * t + c[e].to_f64())
            })
            .collect()
    }

    /// Euclidean norm of all entries at time `t`; an upper bound of the
    /// multilinear operator norm.
    pub fn frobenius_norm_at(&self, t: f64) -> f64 {
        self.eval_entries(t).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Lower estimate of the operator norm from the given unit-vector
    /// samples (each sample supplies all `m` arguments).
    pub fn sampled_norm_at(&self, t: f64, samples: &[Vec<Vec<f64>>]) -> Result<f64> {
        let mut best: f64 = 0.0;
        for s in samples {
            let refs: Vec<&[f64]> = s.iter().map(Vec::as_slice).collect();
            let v = self.apply_at(t, &refs)?;
            best = best.max(v.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        Ok(best)
    }
}

/// All multi-indices in `0..d` of length `m`, in flat-index order.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_bigint::BigInt;

    fn qi(p: i64) -> Rational {
        Rational::from_integer(BigInt::from(p))
    }

    #[test]
    fn order_zero_returns_own_polynomial() {
        let t = DerivativeTensor::from_time_coeffs(2, 0, vec![vec![qi(1), qi(2)], vec![qi(0), qi(3)]]).unwrap();
        let p = t.apply(&[]).unwrap();
        assert_eq!(p.coeffs(), &[vec![qi(1), qi(2)], vec![qi(0), qi(3)]]);
    }

    #[test]
    fn identity_matrix_is_identity() {
        let t = DerivativeTensor::constant(2, 1, vec![qi(1), qi(0), qi(0), qi(1)]).unwrap();
        let p = PolyVec::new(2, vec![vec![qi(1), qi(-1)], vec![qi(2), qi(5)]]).unwrap();
        assert_eq!(t.apply(&[&p]).unwrap(), p);
    }

    #[test]
    fn second_order_hand_contraction() {
        let t = DerivativeTensor::constant(1, 2, vec![qi(2)]).unwrap();
        let one = PolyVec::constant(vec![qi(1)]);
        assert_eq!(t.apply(&[&one, &one]).unwrap(), PolyVec::constant(vec![qi(2)]));
    }

    #[test]
    fn arity_and_dimension_checked() {
        let t = DerivativeTensor::<Rational>::zero(2, 2);
        let p = PolyVec::zero(2);
        assert!(matches!(t.apply(&[&p]), Err(Error::ArityMismatch { .. })));
        let q = PolyVec::zero(3);
        assert!(matches!(t.apply(&[&p, &q]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn polynomial_entries_multiply() {
        // Q(t) = [t] (1x1 matrix), arg = 1 + t -> t + t^2
        let t = DerivativeTensor::from_time_coeffs(1, 1, vec![vec![qi(0)], vec![qi(1)]]).unwrap();
        let p = PolyVec::new(1, vec![vec![qi(1)], vec![qi(1)]]).unwrap();
        let r = t.apply(&[&p]).unwrap();
        assert_eq!(r.coeffs(), &[vec![qi(0)], vec![qi(1)], vec![qi(1)]]);
        assert_eq!(t.degree(), 1);
    }

    #[test]
    fn multi_index_order_matches_flat_index() {
        let t = DerivativeTensor::<f64>::zero(3, 2);
        for (flat, idx) in multi_indices(3, 2).iter().enumerate() {
            assert_eq!(t.index(0, idx), flat);
        }
    }
}
