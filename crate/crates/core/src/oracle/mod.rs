//! Independent numerical ground truth: adaptive trajectories, limit-point
//! estimates, decay-rate fits, and expansion verification.

mod fit;
mod integrate;
mod limit;
mod verify;

pub use fit::{fit_decay_rate, DecayFit, MIN_FIT_POINTS};
pub use integrate::{integrate_dense, integrate_trajectory, IntegratorOptions, IntegratorStats, TrajectorySamples};
pub use limit::{estimate_limit, estimate_limit_with_mean, LimitEstimate};
pub use verify::{
    log_grid, verify_expansion, verify_with_velocity, LimitDecay, OrderReport, OrderStatus,
    VerificationReport, VerifyOptions,
};

use crate::error::Result;
use crate::exec::Execution;
use crate::field::{FieldExpansion, FieldScalar};

/// A velocity `u(x, t)` the oracle can integrate.
pub trait VelocityField: Sync {
    fn dim(&self) -> usize;
    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;
}

impl<S: FieldScalar> VelocityField for FieldExpansion<S> {
    fn dim(&self) -> usize {
        FieldExpansion::dim(self)
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.eval_velocity(x, t, self.semigroup().n_cap())
    }
}

/// Closure-backed velocity field.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> VelocityField for FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok((self.f)(x, t))
    }
}

/// Integrates several starting points independently.
pub fn integrate_many(
    u: &dyn VelocityField,
    starts: &[Vec<f64>],
    t0: f64,
    times: &[f64],
    opts: IntegratorOptions,
    exec: Execution,
) -> Vec<Result<TrajectorySamples>> {
    exec.map(starts, |x0| integrate_dense(u, x0, t0, times, opts))
}
