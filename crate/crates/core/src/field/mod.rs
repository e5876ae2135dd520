//! Velocity expansions `u(x,t) ~ U0 + sum_n q_n(x - U0 t, t) exp(-mu_n t)`
//! with `q_n(x,t) = sum_k t^k q_{n,k}(x)`, and the point derivative tensors
//! `Q_{n,m}(x*, t) = (1/m!) D^m q_n(x*, t)` consumed by the recursion.

mod poly;
mod tensor;
mod trig;

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use poly::{Monomial, PolyField};
pub use tensor::{multi_indices, DerivativeTensor};
pub use trig::{TrigField, TrigMode, DEFAULT_MAX_ORDER};

use crate::error::{Error, Result};
use crate::polyvec::PolyVec;
use crate::scalar::{NumericMode, Rational, Scalar};
use crate::semigroup::Semigroup;

/// A smooth vector field on `R^d` with exact point derivatives.
pub trait SpatialField<S: Scalar>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[S]) -> Vec<S>;
    fn eval_f64(&self, x: &[f64]) -> Vec<f64>;
    /// `D^order f(x)`, constant in time. Symmetric in its arguments.
    fn derivative(&self, x: &[S], order: usize) -> Result<DerivativeTensor<S>>;
    /// Highest derivative order available; `None` means unlimited.
    fn max_order(&self) -> Option<usize> {
        None
    }
    /// Domain average, for periodic fields.
    fn mean(&self) -> Option<Vec<f64>> {
        None
    }
    fn is_identically_zero(&self) -> bool;
    /// Monomial or mode table.
    fn to_json(&self) -> Value;
}

/// `D^m f(x*)` as a free function.
pub fn derivative_tensor<S: Scalar>(
    f: &dyn SpatialField<S>,
    x_star: &[S],
    order: usize,
) -> Result<DerivativeTensor<S>> {
    f.derivative(x_star, order)
}

/// Scalars that can host trigonometric fields. Only `f64` can.
pub trait FieldScalar: Scalar {
    fn trig_field(field: TrigField) -> Result<Arc<dyn SpatialField<Self>>>;
}

impl FieldScalar for f64 {
    fn trig_field(field: TrigField) -> Result<Arc<dyn SpatialField<f64>>> {
        Ok(Arc::new(field))
    }
}

impl FieldScalar for Rational {
    fn trig_field(_: TrigField) -> Result<Arc<dyn SpatialField<Rational>>> {
        Err(Error::Schema(
            "trigonometric fields need float mode; exact mode supports poly fields only".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Trig,
    Poly,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Trig => "trig",
            FieldKind::Poly => "poly",
        }
    }
}

/// `q_n(x, t) = sum_k t^k q_{n,k}(x)`.
#[derive(Debug, Clone)]
pub struct TimePolyField<S> {
    coeffs: Vec<Arc<dyn SpatialField<S>>>,
}

impl<S: Scalar> TimePolyField<S> {
    /// Trailing identically-zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<Arc<dyn SpatialField<S>>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("a term needs at least one time coefficient".into()));
        }
        while coeffs.len() > 1 && coeffs.last().unwrap().is_identically_zero() {
            coeffs.pop();
        }
        Ok(TimePolyField { coeffs })
    }

    pub fn coeffs(&self) -> &[Arc<dyn SpatialField<S>>] {
        &self.coeffs
    }

    /// `d_n`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `q_n(x, .)` as a vector polynomial in `t`.
    pub fn at_point(&self, x: &[S]) -> PolyVec<S> {
        let dim = self.coeffs[0].dim();
        PolyVec::new(dim, self.coeffs.iter().map(|f| f.eval(x)).collect())
            .expect("coefficient fields share the dimension")
    }

    pub fn eval_f64(&self, x: &[f64], t: f64) -> Vec<f64> {
        let dim = self.coeffs[0].dim();
        let mut out = vec![0.0; dim];
        for f in self.coeffs.iter().rev() {
            let v = f.eval_f64(x);
            for (o, vi) in out.iter_mut().zip(v) {
                *o = *o * t + vi;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FieldExpansion<S> {
    dim: usize,
    kind: FieldKind,
    periods: Option<Vec<f64>>,
    sg: Semigroup,
    terms: BTreeMap<usize, TimePolyField<S>>,
    mean_flow: Vec<S>,
    mu: Vec<f64>,
}

impl<S: FieldScalar> FieldExpansion<S> {
    pub fn new(
        dim: usize,
        kind: FieldKind,
        periods: Option<Vec<f64>>,
        sg: Semigroup,
        mean_flow: Vec<S>,
    ) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidInput(format!("dimension {dim} not in 1..=3")));
        }
        if mean_flow.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: mean_flow.len(),
            });
        }
        if kind == FieldKind::Trig {
            match &periods {
                Some(p) if p.len() == dim => {}
                _ => return Err(Error::Schema("trig fields need one period per dimension".into())),
            }
        }
        if S::MODE == NumericMode::Exact && !sg.is_exact() {
            return Err(Error::InvalidInput(
                "exact mode needs a semigroup with unit scale".into(),
            ));
        }
        let mu = (1..=sg.n_cap()).map(|n| sg.mu(n)).collect::<Result<_>>()?;
        Ok(FieldExpansion {
            dim,
            kind,
            periods,
            sg,
            terms: BTreeMap::new(),
            mean_flow,
            mu,
        })
    }

    /// Adds `q_n`. Rejects duplicates, indices beyond the semigroup cap,
    /// time-dependent `q_1`, and nonzero-mean coefficients in trig mode.
    pub fn add_term(&mut self, n: usize, coeffs: Vec<Arc<dyn SpatialField<S>>>) -> Result<()> {
        if n == 0 || n > self.sg.n_cap() {
            return Err(Error::IndexOutOfRange {
                index: n,
                cap: self.sg.n_cap(),
            });
        }
        if self.terms.contains_key(&n) {
            return Err(Error::Schema(format!("duplicate term index {n}")));
        }
        if let Some(bad) = coeffs.iter().find(|f| f.dim() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: bad.dim(),
            });
        }
        let term = TimePolyField::new(coeffs)?;
        if n == 1 && term.degree() > 0 {
            return Err(Error::Schema("q_1 must be independent of time".into()));
        }
        if self.kind == FieldKind::Trig {
            for f in term.coeffs() {
                if let Some(m) = f.mean() {
                    if m.iter().any(|x| *x != 0.0) {
                        return Err(Error::Schema(format!(
                            "term {n} has a nonzero mean; put it in mean_flow instead"
                        )));
                    }
                }
            }
        }
        self.terms.insert(n, term);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn periods(&self) -> Option<&[f64]> {
        self.periods.as_deref()
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.sg
    }

    pub fn mean_flow(&self) -> &[S] {
        &self.mean_flow
    }

    pub fn mean_flow_f64(&self) -> Vec<f64> {
        self.mean_flow.iter().map(Scalar::to_f64).collect()
    }

    pub fn term(&self, n: usize) -> Option<&TimePolyField<S>> {
        self.terms.get(&n)
    }

    pub fn term_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    /// Highest stored term index (0 when empty).
    pub fn max_index(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    /// Largest time degree `d_n` over the stored terms.
    pub fn max_time_degree(&self) -> usize {
        self.terms.values().map(TimePolyField::degree).max().unwrap_or(0)
    }

    pub fn mu(&self, n: usize) -> Result<f64> {
        self.mu
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: n,
                cap: self.mu.len(),
            })
    }

    /// Same terms, different mean flow.
    pub fn with_mean_flow(&self, mean_flow: Vec<S>) -> Result<Self> {
        if mean_flow.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: mean_flow.len(),
            });
        }
        let mut out = self.clone();
        out.mean_flow = mean_flow;
        Ok(out)
    }

    /// `U0 + sum_{n <= order} q_n(x - U0 t, t) exp(-mu_n t)`.
    pub fn eval_velocity(&self, x: &[f64], t: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.sg.n_cap() {
            return Err(Error::IndexOutOfRange {
                index: order,
                cap: self.sg.n_cap(),
            });
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let u0 = self.mean_flow_f64();
        let shifted: Vec<f64> = x.iter().zip(&u0).map(|(xi, ui)| xi - ui * t).collect();
        let mut out = u0;
        for (&n, term) in self.terms.range(1..=order) {
            let decay = (-self.mu[n - 1] * t).exp();
            if decay == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(term.eval_f64(&shifted, t)) {
                *o += v * decay;
            }
        }
        Ok(out)
    }

    /// `Q_{n,m}(x*, t) = sum_k t^k D^m q_{n,k}(x*) / m!`.
    pub fn q_tensor_poly(&self, n: usize, m: usize, x_star: &[S]) -> Result<DerivativeTensor<S>> {
        let term = self.terms.get(&n).ok_or(Error::MissingTerm(n))?;
        let inv_fact = S::one() / (1..=m as i64).fold(S::one(), |acc, i| acc * S::from_i64(i));
        let mut acc = DerivativeTensor::zero(self.dim, m);
        for (k, f) in term.coeffs().iter().enumerate() {
            if let Some(max) = f.max_order() {
                if m > max {
                    return Err(Error::DerivativeOrder { order: m, max });
                }
            }
            let d = f.derivative(x_star, m)?;
            acc = acc.add_shifted(&d.scale(&inv_fact), k)?;
        }
        Ok(acc)
    }

    /// Serialized field (schema of the run configuration's `field` block).
    pub fn to_json(&self) -> Value {
        json!({
            "type": self.kind.name(),
            "dim": self.dim,
            "periods": self.periods,
            "terms": self.terms.iter().map(|(n, t)| json!({
                "n": n,
                "time_coeffs": t.coeffs().iter().map(|f| f.to_json()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "mean_flow": self.mean_flow.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    /// SHA-256 of the serialized field and semigroup.
    pub fn hash(&self) -> String {
        let doc = json!({ "field": self.to_json(), "semigroup": self.sg.to_json() });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    /// Parses the field schema. `mean_flow` defaults to zero.
    pub fn from_json(v: &Value, sg: Semigroup) -> Result<Self> {
        let kind = match v.get("type").and_then(Value::as_str) {
            Some("trig") => FieldKind::Trig,
            Some("poly") => FieldKind::Poly,
            other => return Err(Error::Schema(format!("unknown field type {other:?}"))),
        };
        let dim = v
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Schema("field needs an integer \"dim\"".into()))? as usize;
        let periods = match v.get("periods") {
            None | Some(Value::Null) => None,
            Some(p) => Some(
                p.as_array()
                    .ok_or_else(|| Error::Schema("\"periods\" must be an array".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::Schema("periods must be numbers".into())))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let mean_flow = match v.get("mean_flow") {
            None | Some(Value::Null) => vec![S::zero(); dim],
            Some(m) => m
                .as_array()
                .ok_or_else(|| Error::Schema("\"mean_flow\" must be an array".into()))?
                .iter()
                .map(S::from_json)
                .collect::<Result<Vec<_>>>()?,
        };
        let divergence_free = v.get("divergence_free").and_then(Value::as_bool).unwrap_or(false);
        let max_order = v.get("max_order").and_then(Value::as_u64).map(|x| x as usize);
        let mut fe = FieldExpansion::new(dim, kind, periods.clone(), sg, mean_flow)?;
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("field needs a \"terms\" array".into()))?;
        for t in terms {
            let n = t
                .get("n")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Schema("term needs an integer \"n\"".into()))? as usize;
            let tables = t
                .get("time_coeffs")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Schema(format!("term {n} needs \"time_coeffs\"")))?;
            let coeffs = tables
                .iter()
                .map(|table| -> Result<Arc<dyn SpatialField<S>>> {
                    match kind {
                        FieldKind::Poly => Ok(Arc::new(PolyField::<S>::from_json(dim, table)?)),
                        FieldKind::Trig => {
                            let mut f = TrigField::from_json(dim, periods.clone().unwrap_or_default(), table)?;
                            if let Some(m) = max_order {
                                f = f.with_max_order(m);
                            }
                            if divergence_free && !f.is_divergence_free() {
                                return Err(Error::Schema(format!(
                                    "term {n} is flagged divergence-free but has defect {:e}",
                                    f.divergence_defect()
                                )));
                            }
                            S::trig_field(f)
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            fe.add_term(n, coeffs)?;
        }
        if !fe.terms.contains_key(&1) && !fe.terms.is_empty() {
            return Err(Error::Schema("an expansion with terms must include q_1".into()));
        }
        Ok(fe)
    }
}
