use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fft_index, Spectral2d};
use crate::error::{Error, Result};

/// Initial vorticity specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialCondition {
    /// `v = A (kappa2 cos(kappa1 x1) sin(kappa2 x2), -kappa1 sin(kappa1 x1) cos(kappa2 x2))`
    /// with the unit wave vector `kappa = (2 pi / L1, 2 pi / L2)`; on the
    /// `2 pi` box this is `A (cos x1 sin x2, -sin x1 cos x2)`.
    TaylorGreen { amplitude: f64 },
    /// Shear wave `psi = (A / |kappa|) cos(kappa . x)`: speed amplitude `A`.
    SingleMode { k: [i64; 2], amplitude: f64 },
    /// Random phases on `1 <= max(|k1|, |k2|) <= k_max`, amplitudes falling
    /// off as `1 / (1 + |k|^2)`, rescaled to a peak speed of `amplitude`.
    Random { seed: u64, amplitude: f64, k_max: i64 },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::TaylorGreen { .. } => "taylor-green",
            InitialCondition::SingleMode { .. } => "single-mode",
            InitialCondition::Random { .. } => "random",
        }
    }

    /// Vorticity coefficients on the solver's grid.
    pub fn omega_hat(&self, solver: &Spectral2d) -> Result<Vec<Complex64>> {
        let m = solver.m();
        let mut w = vec![Complex64::new(0.0, 0.0); m * m];
        let idx = |k1: i64, k2: i64| fft_index(k1, m) * m + fft_index(k2, m);
        let kmax_ok = |k: i64| (3 * k.unsigned_abs() as usize) < m;
        match *self {
            InitialCondition::TaylorGreen { amplitude } => {
                if !kmax_ok(1) {
                    return Err(Error::InvalidInput("grid too small for Taylor-Green".into()));
                }
                // psi = -A cos(kappa1 x1) cos(kappa2 x2), omega = -Laplacian psi
                let lap = solver.k2()[idx(1, 1)];
                let c = Complex64::new(-amplitude * lap / 4.0, 0.0);
                for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    w[idx(a, b)] = c;
                }
            }
            InitialCondition::SingleMode { k, amplitude } => {
                if k == [0, 0] || !kmax_ok(k[0]) || !kmax_ok(k[1]) {
                    return Err(Error::InvalidInput(format!(
                        "mode {k:?} is zero or removed by dealiasing on a {m}-point grid"
                    )));
                }
                let lap = solver.k2()[idx(k[0], k[1])];
                let c = Complex64::new(amplitude * lap.sqrt() / 2.0, 0.0);
                w[idx(k[0], k[1])] = c;
                w[idx(-k[0], -k[1])] = c;
            }
            InitialCondition::Random {
                seed,
                amplitude,
                k_max,
            } => {
                if k_max < 1 || !kmax_ok(k_max) {
                    return Err(Error::InvalidInput(format!(
                        "k_max = {k_max} must be at least 1 and survive dealiasing on a {m}-point grid"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for k1 in 0..=k_max {
                    for k2 in -k_max..=k_max {
                        if k1 == 0 && k2 <= 0 {
                            continue;
                        }
                        let r: f64 = rng.gen_range(0.5..1.0);
                        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let c = Complex64::from_polar(r / (1.0 + (k1 * k1 + k2 * k2) as f64), phase);
                        w[idx(k1, k2)] = c;
                        w[idx(-k1, -k2)] = c.conj();
                    }
                }
                let speed = solver.max_speed(&w);
                if speed > 0.0 {
                    for z in &mut w {
                        *z *= amplitude / speed;
                    }
                }
            }
        }
        Ok(w)
    }
}
