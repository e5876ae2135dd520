//! Trajectory coefficients by the lower-triangular recursion
//!
//! ```text
//! zeta_n' - mu_n zeta_n = q_n(x*, t)
//!     + sum_{m >= 1, mu_k + mu_j1 + ... + mu_jm = mu_n} Q_{k,m}(x*, t)(zeta_j1, ..., zeta_jm)
//! ```
//!
//! solved one `n` at a time by [`resolvent_solve`].

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{DerivativeTensor, FieldExpansion, FieldKind, FieldScalar};
use crate::polyvec::{resolvent_solve, PolyVec};
use crate::scalar::Scalar;
use crate::semigroup::{Decomposition, Semigroup};

#[derive(Debug, Clone)]
pub struct TrajectoryExpansion<S> {
    pub x_star: Vec<S>,
    pub mean_flow: Vec<S>,
    /// `zetas[n - 1]` is `zeta_n`.
    pub zetas: Vec<PolyVec<S>>,
    /// Right-hand sides `P_n` of the recursion, kept for residual checks.
    pub rhs: Vec<PolyVec<S>>,
    pub sg: Semigroup,
    pub field_hash: String,
    /// Largest `d_n` of the generating field.
    pub field_time_degree: usize,
}

impl<S: Scalar> TrajectoryExpansion<S> {
    pub fn order(&self) -> usize {
        self.zetas.len()
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    pub fn zeta(&self, n: usize) -> Option<&PolyVec<S>> {
        self.zetas.get(n.wrapping_sub(1))
    }

    pub fn mu(&self, n: usize) -> Result<f64> {
        self.sg.mu(n)
    }

    /// Exact `mu_n` as a scalar of this mode.
    pub fn mu_scalar(&self, n: usize) -> Result<S> {
        mu_scalar(&self.sg, n)
    }

    pub fn x_star_f64(&self) -> Vec<f64> {
        self.x_star.iter().map(Scalar::to_f64).collect()
    }

    pub fn mean_flow_f64(&self) -> Vec<f64> {
        self.mean_flow.iter().map(Scalar::to_f64).collect()
    }

    /// True when every `zeta_n` and every field coefficient is constant in `t`.
    pub fn is_time_independent(&self) -> bool {
        self.field_time_degree == 0 && self.zetas.iter().all(|z| z.degree() == 0)
    }

    /// `zeta_n' - mu_n zeta_n - P_n` for every computed `n`.
    pub fn residuals(&self) -> Result<Vec<PolyVec<S>>> {
        (1..=self.order())
            .map(|n| {
                let z = &self.zetas[n - 1];
                z.derivative()
                    .sub(&z.scale(&self.mu_scalar(n)?))?
                    .sub(&self.rhs[n - 1])
            })
            .collect()
    }

    /// Copy with `zeta_n` replaced, for fault-injection tests.
    pub fn with_zeta(&self, n: usize, zeta: PolyVec<S>) -> Result<Self> {
        if n == 0 || n > self.order() {
            return Err(Error::IndexOutOfRange {
                index: n,
                cap: self.order(),
            });
        }
        let mut out = self.clone();
        out.zetas[n - 1] = zeta;
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let sg = &self.sg;
        json!({
            "provenance": {
                "field_hash": self.field_hash,
                "mode": S::MODE.name(),
                "order": self.order(),
                "version": crate::VERSION,
            },
            "x_star": self.x_star.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "mean_flow": self.mean_flow.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "semigroup": sg.to_json(),
            "terms": (1..=self.order()).map(|n| json!({
                "n": n,
                "exponent": crate::scalar::fraction_string(&sg.mu_rational(n).unwrap()),
                "mu": sg.mu(n).unwrap(),
                "zeta": self.zetas[n - 1].to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn mu_scalar<S: Scalar>(sg: &Semigroup, n: usize) -> Result<S> {
    let exact = sg.mu_rational(n)?;
    if S::MODE == crate::NumericMode::Exact {
        if !sg.is_exact() {
            return Err(Error::InvalidInput(
                "exact mode needs a semigroup with unit scale".into(),
            ));
        }
        Ok(S::from_rational(&exact))
    } else {
        Ok(S::from_rational(&exact) * S::from_rational(&crate::scalar::rational_from_f64(sg.scale())?))
    }
}

/// Memo of `Q_{k,m}(x*, .)` keyed by `(k, m)`.
struct TensorCache<'a, S> {
    fe: &'a FieldExpansion<S>,
    x_star: &'a [S],
    tensors: HashMap<(usize, usize), DerivativeTensor<S>>,
}

impl<'a, S: FieldScalar> TensorCache<'a, S> {
    fn new(fe: &'a FieldExpansion<S>, x_star: &'a [S]) -> Self {
        TensorCache {
            fe,
            x_star,
            tensors: HashMap::new(),
        }
    }

    /// Builds every missing `(k, m)` with `q_k` present, in parallel.
    fn prepare(&mut self, keys: &[(usize, usize)], exec: Execution) -> Result<()> {
        let mut missing: Vec<(usize, usize)> = keys
            .iter()
            .copied()
            .filter(|key| !self.tensors.contains_key(key) && self.fe.term(key.0).is_some())
            .collect();
        missing.sort_unstable();
        missing.dedup();
        let fe = self.fe;
        let x = self.x_star;
        let built = exec.map(&missing, |&(k, m)| fe.q_tensor_poly(k, m, x));
        for (key, t) in missing.into_iter().zip(built) {
            self.tensors.insert(key, t?);
        }
        Ok(())
    }

    fn get(&self, k: usize, m: usize) -> Option<&DerivativeTensor<S>> {
        self.tensors.get(&(k, m))
    }
}

/// `P_n` from an explicit list of `(decomposition, weight)` pairs; `m = 0`
/// contributes `q_n(x*, t)` directly. Terms whose `q_k` is absent vanish.
pub fn assemble_rhs<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    x_star: &[S],
    n: usize,
    zetas: &[PolyVec<S>],
    terms: &[(Decomposition, u64)],
    exec: Execution,
) -> Result<PolyVec<S>> {
    let mut cache = TensorCache::new(fe, x_star);
    assemble_with_cache(&mut cache, n, zetas, terms, exec)
}

fn assemble_with_cache<S: FieldScalar>(
    cache: &mut TensorCache<'_, S>,
    n: usize,
    zetas: &[PolyVec<S>],
    terms: &[(Decomposition, u64)],
    exec: Execution,
) -> Result<PolyVec<S>> {
    let fe = cache.fe;
    let dim = fe.dim();
    let mut rhs = PolyVec::zero(dim);
    if let Some(q) = fe.term(n) {
        if terms.iter().any(|(d, _)| d.m() == 0) {
            rhs = q.at_point(cache.x_star);
        }
    }
    let keys: Vec<(usize, usize)> = terms
        .iter()
        .filter(|(d, _)| d.m() > 0)
        .map(|(d, _)| (d.k, d.m()))
        .collect();
    cache.prepare(&keys, exec)?;
    let cache_ref = &*cache;
    let contributions = exec.map(terms, |(d, weight)| -> Result<Option<PolyVec<S>>> {
        if d.m() == 0 {
            return Ok(None);
        }
        let Some(tensor) = cache_ref.get(d.k, d.m()) else {
            return Ok(None);
        };
        if tensor.is_zero() {
            return Ok(None);
        }
        let args = d
            .js
            .iter()
            .map(|&j| {
                zetas.get(j - 1).ok_or(Error::IndexOutOfRange {
                    index: j,
                    cap: zetas.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let value = tensor.apply(&args)?;
        Ok(Some(if *weight == 1 {
            value
        } else {
            value.scale(&S::from_i64(*weight as i64))
        }))
    });
    for c in contributions {
        if let Some(p) = c? {
            rhs = rhs.add(&p)?;
        }
    }
    Ok(rhs)
}

/// Computes `zeta_1 .. zeta_order` for the limit point `x_star`.
///
/// The recursion runs on the zero-mean part of the field; the mean flow is
/// carried into the result for evaluation.
pub fn compute_expansion<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    x_star: &[S],
    order: usize,
) -> Result<TrajectoryExpansion<S>> {
    compute_expansion_with(fe, x_star, order, Execution::default())
}

pub fn compute_expansion_with<S: FieldScalar>(
    fe: &FieldExpansion<S>,
    x_star: &[S],
    order: usize,
    exec: Execution,
) -> Result<TrajectoryExpansion<S>> {
    let sg = fe.semigroup();
    if order > sg.n_cap() {
        return Err(Error::IndexOutOfRange {
            index: order,
            cap: sg.n_cap(),
        });
    }
    if x_star.len() != fe.dim() {
        return Err(Error::DimensionMismatch {
            expected: fe.dim(),
            found: x_star.len(),
        });
    }
    let mut cache = TensorCache::new(fe, x_star);
    let mut zetas = Vec::with_capacity(order);
    let mut rhs_list = Vec::with_capacity(order);
    for n in 1..=order {
        let terms: Vec<(Decomposition, u64)> = sg
            .grouped_decompositions(n)?
            .into_iter()
            .map(|g| (g.decomposition, g.multiplicity))
            .collect();
        let rhs = assemble_with_cache(&mut cache, n, &zetas, &terms, exec)?;
        let zeta = resolvent_solve(&mu_scalar::<S>(sg, n)?, &rhs)?;
        zetas.push(zeta);
        rhs_list.push(rhs);
    }
    Ok(TrajectoryExpansion {
        x_star: x_star.to_vec(),
        mean_flow: fe.mean_flow().to_vec(),
        zetas,
        rhs: rhs_list,
        sg: sg.clone(),
        field_hash: fe.hash(),
        field_time_degree: fe.max_time_degree(),
    })
}

/// `x* + U0 t + sum_{n <= order} zeta_n(t) exp(-mu_n t)`.
pub fn evaluate_expansion<S: Scalar>(te: &TrajectoryExpansion<S>, t: f64, order: usize) -> Result<Vec<f64>> {
    if order > te.order() {
        return Err(Error::IndexOutOfRange {
            index: order,
            cap: te.order(),
        });
    }
    let mut out: Vec<f64> = te
        .x_star_f64()
        .iter()
        .zip(te.mean_flow_f64())
        .map(|(x, u)| x + u * t)
        .collect();
    for n in 1..=order {
        let decay = (-te.mu(n)? * t).exp();
        if decay == 0.0 {
            break;
        }
        for (o, z) in out.iter_mut().zip(te.zetas[n - 1].eval_f64(t)) {
            *o += z * decay;
        }
    }
    Ok(out)
}

/// The general-mean field `U0 + v(x - U0 t, t)` built from a zero-mean `v`.
pub fn galilean_compose<S: FieldScalar>(v: &FieldExpansion<S>, mean_flow: Vec<S>) -> Result<FieldExpansion<S>> {
    if v.mean_flow().iter().any(|u| !u.is_zero()) {
        return Err(Error::InvalidInput(
            "galilean_compose needs a zero-mean expansion".into(),
        ));
    }
    if v.kind() == FieldKind::Trig {
        for n in v.term_indices() {
            for f in v.term(n).unwrap().coeffs() {
                if f.mean().is_some_and(|m| m.iter().any(|x| *x != 0.0)) {
                    return Err(Error::InvalidInput(format!("term {n} has a nonzero mean")));
                }
            }
        }
    }
    v.with_mean_flow(mean_flow)
}
