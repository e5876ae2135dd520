//! Standard fields with known trajectories.
//!
//! | name | velocity | trajectory |
//! |------|----------|------------|
//! | `closed-form-1d` | `(1 + x) e^{-t}` | `(1 + x0) exp(1 - e^{-t}) - 1` |
//! | `galilean-2d` | `e^{-t}(1 + x1, -x2) + e^{-2t}(x2^2, 0)` | numerical |
//! | `zero` | `0` | `x0` |
//! | `degenerate-1d` | `(1 + x) e^{-t^2}`, every `q_n = 0` | `(1 + x0) exp(int_0^t e^{-s^2} ds) - 1` |
//! | `taylor-green` | `A e^{-2 nu t}(cos x1 sin x2, -sin x1 cos x2)` | numerical |

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldExpansion, FieldKind, FieldScalar, Monomial, PolyField, SpatialField, TrigField, TrigMode};
use crate::oracle::VelocityField;
use crate::scalar::{Rational, Scalar};
use crate::semigroup::{build_semigroup, Semigroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    #[serde(rename = "closed-form-1d")]
    ClosedForm1d,
    #[serde(rename = "galilean-2d")]
    Galilean2d,
    Zero,
    #[serde(rename = "degenerate-1d")]
    Degenerate1d,
    TaylorGreen,
}

impl Fixture {
    pub const ALL: [Fixture; 5] = [
        Fixture::ClosedForm1d,
        Fixture::Galilean2d,
        Fixture::Zero,
        Fixture::Degenerate1d,
        Fixture::TaylorGreen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::ClosedForm1d => "closed-form-1d",
            Fixture::Galilean2d => "galilean-2d",
            Fixture::Zero => "zero",
            Fixture::Degenerate1d => "degenerate-1d",
            Fixture::TaylorGreen => "taylor-green",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::Schema(format!("unknown fixture {name:?}")))
    }

    pub fn description(self) -> &'static str {
        match self {
            Fixture::ClosedForm1d => "u = (1 + x) e^{-t}; zeta_n = (-1)^n / n! at x* = 0",
            Fixture::Galilean2d => "u = e^{-t}(1 + x1, -x2) + e^{-2t}(x2^2, 0), zero mean",
            Fixture::Zero => "u = 0; every zeta_n vanishes and x* = x0",
            Fixture::Degenerate1d => "u = (1 + x) e^{-t^2}; all q_n vanish, decay beyond all orders",
            Fixture::TaylorGreen => "Taylor-Green vortex, A = 1, nu = 1/10, 2 pi periodic",
        }
    }

    /// Default starting point.
    pub fn x0(self) -> Vec<f64> {
        match self {
            Fixture::ClosedForm1d => vec![(-1f64).exp() - 1.0],
            Fixture::Galilean2d => vec![0.3, 0.4],
            Fixture::Zero => vec![0.25, -0.5],
            Fixture::Degenerate1d => vec![-0.5],
            Fixture::TaylorGreen => vec![1.0, 0.5],
        }
    }

    /// Whether exact rational coefficients are available.
    pub fn supports_exact(self) -> bool {
        !matches!(self, Fixture::TaylorGreen)
    }
}

fn int<S: Scalar>(v: i64) -> S {
    S::from_i64(v)
}

fn mono<S: Scalar>(exps: &[u32], coeffs: Vec<S>) -> Monomial<S> {
    Monomial {
        exps: exps.to_vec(),
        coeffs,
    }
}

fn integer_semigroup(cap: usize) -> Result<Semigroup> {
    build_semigroup(&[Rational::from_integer(1.into())], Rational::from_integer(1.into()), cap)
}

/// `u = (1 + x) e^{-t}` on the semigroup of positive integers.
pub fn closed_form_1d<S: FieldScalar>(cap: usize) -> Result<FieldExpansion<S>> {
    let mut fe = FieldExpansion::new(1, FieldKind::Poly, None, integer_semigroup(cap)?, vec![S::zero()])?;
    let q1 = PolyField::new(1, vec![mono(&[0], vec![int(1)]), mono(&[1], vec![int(1)])])?;
    fe.add_term(1, vec![Arc::new(q1)])?;
    Ok(fe)
}

/// Exact trajectory of [`closed_form_1d`] from `x(0) = x0`.
pub fn closed_form_1d_solution(x0: f64, t: f64) -> f64 {
    (1.0 + x0) * (1.0 - (-t).exp()).exp() - 1.0
}

pub fn closed_form_1d_limit(x0: f64) -> f64 {
    (1.0 + x0) * 1f64.exp() - 1.0
}

/// Zero-mean 2D polynomial field with a nonlinear second term.
pub fn galilean_2d<S: FieldScalar>(cap: usize) -> Result<FieldExpansion<S>> {
    let mut fe = FieldExpansion::new(
        2,
        FieldKind::Poly,
        None,
        integer_semigroup(cap)?,
        vec![S::zero(), S::zero()],
    )?;
    let q1 = PolyField::new(
        2,
        vec![
            mono(&[0, 0], vec![int(1), int(0)]),
            mono(&[1, 0], vec![int(1), int(0)]),
            mono(&[0, 1], vec![int(0), int(-1)]),
        ],
    )?;
    let q2 = PolyField::new(2, vec![mono(&[0, 2], vec![int(1), int(0)])])?;
    fe.add_term(1, vec![Arc::new(q1)])?;
    if cap >= 2 {
        fe.add_term(2, vec![Arc::new(q2)])?;
    }
    Ok(fe)
}

/// The identically zero field in `dim` dimensions (with an explicit zero `q_1`).
pub fn zero_field<S: FieldScalar>(dim: usize, cap: usize) -> Result<FieldExpansion<S>> {
    let mut fe = FieldExpansion::new(dim, FieldKind::Poly, None, integer_semigroup(cap)?, vec![S::zero(); dim])?;
    let zero: Arc<dyn SpatialField<S>> = Arc::new(PolyField::zero(dim)?);
    fe.add_term(1, vec![zero])?;
    Ok(fe)
}

/// `u = (1 + x) e^{-t^2}`: smaller than every `e^{-mu t}`, so its expansion
/// on the integer semigroup has every `q_n = 0` while particles still move.
#[derive(Debug, Clone, Copy, Default)]
pub struct BeyondAllOrders;

impl VelocityField for BeyondAllOrders {
    fn dim(&self) -> usize {
        1
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(vec![(1.0 + x[0]) * (-t * t).exp()])
    }
}

/// The expansion of [`BeyondAllOrders`]: the zero field in one dimension.
pub fn degenerate_1d<S: FieldScalar>(cap: usize) -> Result<FieldExpansion<S>> {
    zero_field(1, cap)
}

/// Limit of the [`BeyondAllOrders`] trajectory: `int_0^inf e^{-s^2} ds = sqrt(pi) / 2`.
pub fn degenerate_1d_limit(x0: f64) -> f64 {
    (1.0 + x0) * (PI.sqrt() / 2.0).exp() - 1.0
}

/// Taylor-Green mode pair on `[0, 2 pi)^2` with amplitude `a`:
/// `a (cos x1 sin x2, -sin x1 cos x2)`.
pub fn taylor_green_mode(a: f64) -> Result<TrigField> {
    let q = a / 4.0;
    TrigField::new(
        2,
        vec![TAU, TAU],
        vec![
            TrigMode {
                k: vec![1, 1],
                c: vec![Complex64::new(0.0, -q), Complex64::new(0.0, q)],
            },
            TrigMode {
                k: vec![1, -1],
                c: vec![Complex64::new(0.0, q), Complex64::new(0.0, q)],
            },
        ],
    )
}

/// Analytic Taylor-Green field. The only Stokes eigenvalue present is
/// `|k|^2 = 2`, so the exponents are `mu_n = 2 n nu`.
pub fn taylor_green(a: f64, nu: Rational, cap: usize) -> Result<FieldExpansion<f64>> {
    let sg = build_semigroup(&[Rational::from_integer(2.into())], nu, cap)?;
    let mut fe = FieldExpansion::new(2, FieldKind::Trig, Some(vec![TAU, TAU]), sg, vec![0.0, 0.0])?;
    fe.add_term(1, vec![f64::trig_field(taylor_green_mode(a)?)?])?;
    Ok(fe)
}

/// Closed-form Taylor-Green velocity.
pub fn taylor_green_velocity(a: f64, nu: f64, x: &[f64], t: f64) -> [f64; 2] {
    let amp = a * (-2.0 * nu * t).exp();
    [amp * x[0].cos() * x[1].sin(), -amp * x[0].sin() * x[1].cos()]
}
