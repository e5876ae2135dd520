//! Polynomials in the time variable, scalar ([`Poly`]) and vector valued
//! ([`PolyVec`]), and the resolvent solver for `q' - gamma q = p`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar polynomial `sum_k c_k t^k`, ascending coefficients, at least one
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Poly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(S::zero());
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly {
            coeffs: vec![S::zero()],
        }
    }

    pub fn constant(c: S) -> Self {
        Poly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    fn trim(&mut self) {
        let reference = self
            .coeffs
            .iter()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max);
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().is_negligible(reference) {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, t: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t.clone() + c.clone();
        }
        acc
    }

    pub fn add(&self, other: &Poly<S>) -> Poly<S> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| match (self.coeffs.get(k), other.coeffs.get(k)) {
                (Some(a), Some(b)) => a.clone() + b.clone(),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        Poly::new(coeffs)
    }

    pub fn mul(&self, other: &Poly<S>) -> Poly<S> {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(coeffs)
    }

    pub fn scale(&self, s: &S) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }
}

/// Vector-valued polynomial `sum_k a_k t^k` with `a_k` in `S^dim`.
///
/// The zero polynomial is stored as a single zero vector (degree 0); any
/// other value has a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVec<S> {
    dim: usize,
    coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> PolyVec<S> {
    pub fn new(dim: usize, coeffs: Vec<Vec<S>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for c in &coeffs {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
        }
        let mut p = PolyVec { dim, coeffs };
        if p.coeffs.is_empty() {
            p.coeffs.push(vec![S::zero(); dim]);
        }
        p.trim();
        Ok(p)
    }

    pub fn zero(dim: usize) -> Self {
        PolyVec {
            dim,
            coeffs: vec![vec![S::zero(); dim]],
        }
    }

    pub fn constant(v: Vec<S>) -> Self {
        let dim = v.len();
        let mut p = PolyVec {
            dim,
            coeffs: vec![v],
        };
        p.trim();
        p
    }

    /// Builds from per-component scalar polynomials.
    pub fn from_components(components: &[Poly<S>]) -> Self {
        let dim = components.len();
        let len = components.iter().map(|p| p.coeffs.len()).max().unwrap_or(1);
        let coeffs = (0..len)
            .map(|k| {
                components
                    .iter()
                    .map(|p| p.coeffs.get(k).cloned().unwrap_or_else(S::zero))
                    .collect()
            })
            .collect();
        let mut p = PolyVec { dim, coeffs };
        p.trim();
        p
    }

    pub fn component(&self, i: usize) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(|c| c[i].clone()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<S>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].iter().all(|c| c.is_zero())
    }

    fn trim(&mut self) {
        let reference = self
            .coeffs
            .iter()
            .flatten()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max);
        while self.coeffs.len() > 1
            && self
                .coeffs
                .last()
                .unwrap()
                .iter()
                .all(|c| c.is_negligible(reference))
        {
            self.coeffs.pop();
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, t: &S) -> Vec<S> {
        let mut acc = vec![S::zero(); self.dim];
        for c in self.coeffs.iter().rev() {
            for (a, ci) in acc.iter_mut().zip(c) {
                *a = a.clone() * t.clone() + ci.clone();
            }
        }
        acc
    }

    /// Floating-point evaluation regardless of coefficient mode.
    pub fn eval_f64(&self, t: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for c in self.coeffs.iter().rev() {
            for (a, ci) in acc.iter_mut().zip(c) {
                *a = *a * t + ci.to_f64();
            }
        }
        acc
    }

    pub fn add(&self, other: &PolyVec<S>) -> Result<PolyVec<S>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| match (self.coeffs.get(k), other.coeffs.get(k)) {
                (Some(a), Some(b)) => a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| x.clone() + y.clone())
                    .collect(),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        PolyVec::new(self.dim, coeffs)
    }

    pub fn sub(&self, other: &PolyVec<S>) -> Result<PolyVec<S>> {
        self.add(&other.scale(&-S::one()))
    }

    pub fn scale(&self, s: &S) -> PolyVec<S> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.iter().map(|x| x.clone() * s.clone()).collect())
            .collect();
        let mut p = PolyVec {
            dim: self.dim,
            coeffs,
        };
        p.trim();
        p
    }

    /// Product with a scalar polynomial.
    pub fn mul_scalar_poly(&self, s: &Poly<S>) -> PolyVec<S> {
        let comps: Vec<Poly<S>> = (0..self.dim).map(|i| self.component(i).mul(s)).collect();
        PolyVec::from_components(&comps)
    }

    pub fn derivative(&self) -> PolyVec<S> {
        if self.coeffs.len() == 1 {
            return PolyVec::zero(self.dim);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| {
                let kk = S::from_i64(k as i64);
                c.iter().map(|x| x.clone() * kk.clone()).collect()
            })
            .collect();
        let mut p = PolyVec {
            dim: self.dim,
            coeffs,
        };
        p.trim();
        p
    }

    /// Largest coefficient magnitude, as f64.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.dim,
            "coeffs": self.coeffs.iter()
                .map(|c| c.iter().map(Scalar::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Schema("polynomial needs an integer \"dim\"".into()))?
            as usize;
        let coeffs = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("polynomial needs a \"coeffs\" array".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Schema("coefficient rows must be arrays".into()))?
                    .iter()
                    .map(S::from_json)
                    .collect::<Result<Vec<S>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        PolyVec::new(dim, coeffs)
    }
}

/// Unique polynomial solution `q` of `q' - gamma q = p` for `gamma > 0`:
/// `q = -sum_{j=0}^{deg p} gamma^{-(j+1)} p^{(j)}`, which is the improper
/// integral `-int_t^inf exp(gamma (t - tau)) p(tau) dtau` after repeated
/// integration by parts.
pub fn resolvent_solve<S: Scalar>(gamma: &S, p: &PolyVec<S>) -> Result<PolyVec<S>> {
    if !gamma.is_positive() {
        return Err(Error::InvalidInput(format!(
            "resolvent needs gamma > 0, got {gamma:?}"
        )));
    }
    let inv = S::one() / gamma.clone();
    let mut factor = inv.clone();
    let mut term = p.clone();
    let mut acc = PolyVec::zero(p.dim());
    for _ in 0..=p.degree() {
        acc = acc.add(&term.scale(&factor))?;
        term = term.derivative();
        factor = factor * inv.clone();
    }
    Ok(acc.scale(&-S::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(d))
    }

    fn qi(p: i64) -> Rational {
        q(p, 1)
    }

    fn pv(rows: &[&[i64]]) -> PolyVec<Rational> {
        let dim = rows[0].len();
        PolyVec::new(dim, rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn evaluation() {
        assert_eq!(pv(&[&[1, 0]]).eval(&qi(7)), vec![qi(1), qi(0)]);
        assert_eq!(pv(&[&[0, 0], &[1, 2]]).eval(&qi(2)), vec![qi(2), qi(4)]);
        assert_eq!(pv(&[&[1], &[1], &[1]]).eval(&qi(3)), vec![qi(13)]);
        assert_eq!(pv(&[&[1], &[1], &[1]]).eval_f64(3.0), vec![13.0]);
    }

    #[test]
    fn ring_operations() {
        assert_eq!(pv(&[&[5]]).derivative(), pv(&[&[0]]));
        let sum = pv(&[&[1], &[2]]).add(&pv(&[&[3], &[-2]])).unwrap();
        assert_eq!(sum, pv(&[&[4]]));
        assert_eq!(sum.degree(), 0);
        let s = Poly::new(vec![qi(1), qi(1)]);
        assert_eq!(pv(&[&[1, 0]]).mul_scalar_poly(&s), pv(&[&[1, 0], &[1, 0]]));
        assert!(pv(&[&[1]]).add(&pv(&[&[1, 2]])).is_err());
    }

    #[test]
    fn resolvent_examples() {
        // gamma = 1, constant c -> -c
        assert_eq!(resolvent_solve(&qi(1), &pv(&[&[3, -2]])).unwrap(), pv(&[&[-3, 2]]));
        // gamma = 2, p = t -> -t/2 - 1/4
        let p = pv(&[&[0], &[1]]);
        let sol = resolvent_solve(&qi(2), &p).unwrap();
        assert_eq!(sol.coeffs(), &[vec![q(-1, 4)], vec![q(-1, 2)]]);
        // gamma = 1, p = t^2 -> -(t^2 + 2t + 2)
        let p = pv(&[&[0], &[0], &[1]]);
        assert_eq!(resolvent_solve(&qi(1), &p).unwrap(), pv(&[&[-2], &[-2], &[-1]]));
    }

    #[test]
    fn resolvent_rejects_nonpositive_gamma() {
        assert!(resolvent_solve(&qi(0), &pv(&[&[1]])).is_err());
        assert!(resolvent_solve(&-1.0f64, &PolyVec::constant(vec![1.0])).is_err());
    }

    #[test]
    fn float_trimming_is_relative() {
        let p = PolyVec::new(1, vec![vec![1.0], vec![1e-16]]).unwrap();
        assert_eq!(p.degree(), 0);
        let p = PolyVec::new(1, vec![vec![1e-20], vec![1e-21]]).unwrap();
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn json_round_trip() {
        let p = PolyVec::new(2, vec![vec![q(1, 2), qi(0)], vec![qi(3), q(-7, 5)]]).unwrap();
        let v = p.to_json();
        assert_eq!(v["coeffs"][0][0], "1/2");
        assert_eq!(PolyVec::<Rational>::from_json(&v).unwrap(), p);
    }

    fn rational() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=9).prop_map(|(p, d)| q(p, d))
    }

    fn polyvec() -> impl Strategy<Value = PolyVec<Rational>> {
        (1usize..=3, 0usize..=8).prop_flat_map(|(dim, deg)| {
            proptest::collection::vec(proptest::collection::vec(rational(), dim), deg + 1)
                .prop_map(move |c| PolyVec::new(dim, c).unwrap())
        })
    }

    fn gamma() -> impl Strategy<Value = Rational> {
        (1i64..=30, 1i64..=7).prop_map(|(p, d)| q(p, d))
    }

    proptest! {
        #[test]
        fn resolvent_residual_vanishes(g in gamma(), p in polyvec()) {
            let sol = resolvent_solve(&g, &p).unwrap();
            let residual = sol.derivative().sub(&sol.scale(&g)).unwrap().sub(&p).unwrap();
            prop_assert!(residual.is_zero());
            prop_assert_eq!(sol.degree(), p.degree());
        }

        #[test]
        fn resolvent_is_linear(g in gamma(), a in rational(), p1 in polyvec(), seed in polyvec()) {
            let dim = p1.dim();
            let p2 = PolyVec::from_components(&(0..dim).map(|i| seed.component(i % seed.dim())).collect::<Vec<_>>());
            let lhs = resolvent_solve(&g, &p1.scale(&a).add(&p2).unwrap()).unwrap();
            let rhs = resolvent_solve(&g, &p1).unwrap().scale(&a).add(&resolvent_solve(&g, &p2).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn resolvent_of_zero_is_zero() {
        assert!(resolvent_solve(&q(3, 2), &PolyVec::<Rational>::zero(3)).unwrap().is_zero());
    }
}
