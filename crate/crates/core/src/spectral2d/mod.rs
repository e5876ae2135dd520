//! Pseudo-spectral 2D Navier-Stokes on a periodic box in vorticity form.
//!
//! Coefficients are normalised so that `omega(x) = sum_k omega_k exp(i kappa_k . x)`
//! with `kappa_j = 2 pi k_j / L_j`. The streamfunction satisfies
//! `-Laplacian psi = omega` and the velocity is `(d2 psi, -d1 psi)`, so it is
//! divergence-free by construction. Only the zero-mean part is stepped; a
//! mean flow `U0` enters through `u(x, t) = U0 + v(x - U0 t, t)`.

mod checkpoint;
mod extract;
mod fft;
mod initial;
mod simulate;

pub use checkpoint::{decode, encode, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, HEADER_BYTES};
pub use extract::{extract_leading_term, LeadingTerm, MIN_DOMINANCE};
pub use fft::Fft2;
pub use initial::InitialCondition;
pub use simulate::{simulate, SimulationSpec, Simulation};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;

pub const MAX_GRID: usize = 256;
pub const CFL_NUMBER: f64 = 0.5;

/// Signed wave number of FFT index `i` on an `m`-point grid.
pub fn wavenumber(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// FFT index of signed wave number `k`.
pub fn fft_index(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Vorticity coefficients at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub m: usize,
    pub periods: [f64; 2],
    pub nu: f64,
    pub t: f64,
    pub mean_flow: [f64; 2],
    /// Row-major `M x M`, index `i1 * M + i2`.
    pub omega_hat: Vec<Complex64>,
}

impl SpectralState {
    pub fn coefficient(&self, k: [i64; 2]) -> Complex64 {
        self.omega_hat[fft_index(k[0], self.m) * self.m + fft_index(k[1], self.m)]
    }
}

/// Grid, wave vectors, dealiasing mask and FFT plans for one configuration.
#[derive(Debug, Clone)]
pub struct Spectral2d {
    m: usize,
    periods: [f64; 2],
    nu: f64,
    fft: Fft2,
    kappa1: Vec<f64>,
    kappa2: Vec<f64>,
    /// `|kappa|^2` per flat index.
    k2: Vec<f64>,
    mask: Vec<bool>,
    exec: Execution,
}

impl Spectral2d {
    pub fn new(m: usize, periods: [f64; 2], nu: f64, exec: Execution) -> Result<Self> {
        if m < 4 || m % 2 != 0 || m > MAX_GRID {
            return Err(Error::InvalidInput(format!(
                "grid size {m} must be even and in 4..={MAX_GRID}"
            )));
        }
        if periods.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidInput("periods must be positive".into()));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidInput("viscosity must be positive".into()));
        }
        let kappa = |i: usize, l: f64| 2.0 * std::f64::consts::PI * wavenumber(i, m) as f64 / l;
        let kappa1: Vec<f64> = (0..m).map(|i| kappa(i, periods[0])).collect();
        let kappa2: Vec<f64> = (0..m).map(|i| kappa(i, periods[1])).collect();
        let mut k2 = vec![0.0; m * m];
        let mut mask = vec![false; m * m];
        for i in 0..m {
            for j in 0..m {
                k2[i * m + j] = kappa1[i] * kappa1[i] + kappa2[j] * kappa2[j];
                let (a, b) = (wavenumber(i, m).abs() as usize, wavenumber(j, m).abs() as usize);
                mask[i * m + j] = 3 * a < m && 3 * b < m && (a, b) != (0, 0);
            }
        }
        Ok(Spectral2d {
            m,
            periods,
            nu,
            fft: Fft2::new(m, exec),
            kappa1,
            kappa2,
            k2,
            mask,
            exec,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn exec(&self) -> Execution {
        self.exec
    }

    pub fn kappa(&self, idx: usize) -> [f64; 2] {
        [self.kappa1[idx / self.m], self.kappa2[idx % self.m]]
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// Retained (dealiased, nonzero) modes.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Builds a state, imposing zero mean, dealiasing and conjugate symmetry.
    pub fn state(&self, t: f64, mean_flow: [f64; 2], mut omega_hat: Vec<Complex64>) -> Result<SpectralState> {
        if omega_hat.len() != self.m * self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m * self.m,
                found: omega_hat.len(),
            });
        }
        self.project(&mut omega_hat);
        Ok(SpectralState {
            m: self.m,
            periods: self.periods,
            nu: self.nu,
            t,
            mean_flow,
            omega_hat,
        })
    }

    pub fn zero_state(&self, t: f64, mean_flow: [f64; 2]) -> SpectralState {
        SpectralState {
            m: self.m,
            periods: self.periods,
            nu: self.nu,
            t,
            mean_flow,
            omega_hat: vec![Complex64::new(0.0, 0.0); self.m * self.m],
        }
    }

    fn partner(&self, idx: usize) -> usize {
        let m = self.m;
        let (i, j) = (idx / m, idx % m);
        ((m - i) % m) * m + (m - j) % m
    }

    /// Zeroes dealiased modes and the mean, and averages each coefficient
    /// with the conjugate of its partner.
    fn project(&self, w: &mut [Complex64]) {
        for idx in 0..w.len() {
            if !self.mask[idx] {
                w[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let p = self.partner(idx);
            if p > idx {
                let avg = 0.5 * (w[idx] + w[p].conj());
                w[idx] = avg;
                w[p] = avg.conj();
            } else if p == idx {
                w[idx] = Complex64::new(w[idx].re, 0.0);
            }
        }
    }

    /// Velocity coefficients `(i kappa2 psi, -i kappa1 psi)`, `psi = omega / |kappa|^2`.
    pub fn velocity_hat(&self, omega_hat: &[Complex64]) -> [Vec<Complex64>; 2] {
        let n = self.m * self.m;
        let mut u1 = vec![Complex64::new(0.0, 0.0); n];
        let mut u2 = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            if self.k2[idx] == 0.0 {
                continue;
            }
            let psi = omega_hat[idx] / self.k2[idx];
            let [k1, k2] = self.kappa(idx);
            u1[idx] = Complex64::new(0.0, k2) * psi;
            u2[idx] = Complex64::new(0.0, -k1) * psi;
        }
        [u1, u2]
    }

    /// Point values on the `M x M` grid.
    pub fn to_grid(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn from_grid(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf
    }

    /// Fluctuation velocity `v` on the grid.
    pub fn velocity_grid(&self, omega_hat: &[Complex64]) -> [Vec<f64>; 2] {
        let [u1, u2] = self.velocity_hat(omega_hat);
        [self.to_grid(&u1), self.to_grid(&u2)]
    }

    pub fn max_speed(&self, omega_hat: &[Complex64]) -> f64 {
        let [a, b] = self.velocity_grid(omega_hat);
        a.iter().zip(&b).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
    }

    /// Largest stable step `CFL_NUMBER * dx / max |v|`.
    pub fn cfl_limit(&self, omega_hat: &[Complex64]) -> f64 {
        let dx = self.periods[0].min(self.periods[1]) / self.m as f64;
        let umax = self.max_speed(omega_hat);
        if umax == 0.0 {
            f64::INFINITY
        } else {
            CFL_NUMBER * dx / umax
        }
    }

    /// Dealiased `-(v . grad) omega`.
    pub fn nonlinear(&self, omega_hat: &[Complex64]) -> Vec<Complex64> {
        let n = self.m * self.m;
        let [u1h, u2h] = self.velocity_hat(omega_hat);
        let mut d1 = vec![Complex64::new(0.0, 0.0); n];
        let mut d2 = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            let [k1, k2] = self.kappa(idx);
            d1[idx] = Complex64::new(0.0, k1) * omega_hat[idx];
            d2[idx] = Complex64::new(0.0, k2) * omega_hat[idx];
        }
        let (u1, u2) = (self.to_grid(&u1h), self.to_grid(&u2h));
        let (w1, w2) = (self.to_grid(&d1), self.to_grid(&d2));
        let adv: Vec<f64> = (0..n).map(|i| -(u1[i] * w1[i] + u2[i] * w2[i])).collect();
        let mut out = self.from_grid(&adv);
        self.project(&mut out);
        out
    }

    /// `d omega_hat / dt = -nu |kappa|^2 omega_hat + N(omega_hat)`.
    pub fn rhs(&self, omega_hat: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.nonlinear(omega_hat);
        for (idx, o) in out.iter_mut().enumerate() {
            *o -= self.nu * self.k2[idx] * omega_hat[idx];
        }
        out
    }

    /// One integrating-factor RK4 step.
    pub fn step(&self, state: &SpectralState, dt: f64) -> Result<SpectralState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        let limit = self.cfl_limit(&state.omega_hat);
        if dt > limit {
            return Err(Error::Cfl {
                dt,
                suggested: 0.9 * limit,
            });
        }
        let w = &state.omega_hat;
        let n = w.len();
        let e_half: Vec<f64> = self.k2.iter().map(|k| (-self.nu * k * dt / 2.0).exp()).collect();
        let e_full: Vec<f64> = e_half.iter().map(|e| e * e).collect();

        let k1: Vec<Complex64> = self.nonlinear(w).into_iter().map(|z| z * dt).collect();
        let w2: Vec<Complex64> = (0..n).map(|i| e_half[i] * (w[i] + 0.5 * k1[i])).collect();
        let k2: Vec<Complex64> = self.nonlinear(&w2).into_iter().map(|z| z * dt).collect();
        let w3: Vec<Complex64> = (0..n).map(|i| e_half[i] * w[i] + 0.5 * k2[i]).collect();
        let k3: Vec<Complex64> = self.nonlinear(&w3).into_iter().map(|z| z * dt).collect();
        let w4: Vec<Complex64> = (0..n).map(|i| e_full[i] * w[i] + e_half[i] * k3[i]).collect();
        let k4: Vec<Complex64> = self.nonlinear(&w4).into_iter().map(|z| z * dt).collect();
        let next: Vec<Complex64> = (0..n)
            .map(|i| {
                e_full[i] * w[i]
                    + (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]) / 6.0
            })
            .collect();
        let t = state.t + dt;
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::BlowUp { t });
        }
        self.state(t, state.mean_flow, next)
    }

    /// Kinetic energy of the fluctuation, `(1/2) mean |v|^2`.
    pub fn energy(&self, omega_hat: &[Complex64]) -> f64 {
        let [u1, u2] = self.velocity_hat(omega_hat);
        0.5 * u1.iter().chain(&u2).map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Grid average of the full velocity `U0 + v`.
    pub fn mean_velocity(&self, state: &SpectralState) -> [f64; 2] {
        let [a, b] = self.velocity_grid(&state.omega_hat);
        let n = (self.m * self.m) as f64;
        [
            state.mean_flow[0] + a.iter().sum::<f64>() / n,
            state.mean_flow[1] + b.iter().sum::<f64>() / n,
        ]
    }

    /// `max |kappa . u_k| / max |u_k|`.
    pub fn spectral_divergence(&self, omega_hat: &[Complex64]) -> f64 {
        let [u1, u2] = self.velocity_hat(omega_hat);
        let mut div = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..u1.len() {
            let [k1, k2] = self.kappa(idx);
            div = div.max((k1 * u1[idx] + k2 * u2[idx]).norm());
            scale = scale.max(u1[idx].norm().max(u2[idx].norm()) * k1.hypot(k2));
        }
        if scale == 0.0 {
            0.0
        } else {
            div / scale
        }
    }

    /// `max |omega_k - conj(omega_{-k})|`.
    pub fn conjugate_defect(&self, omega_hat: &[Complex64]) -> f64 {
        (0..omega_hat.len())
            .map(|i| (omega_hat[i] - omega_hat[self.partner(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Full velocity at `x` by direct Fourier summation.
    pub fn velocity_at_state(&self, state: &SpectralState, x: &[f64]) -> [f64; 2] {
        let [u1, u2] = self.velocity_hat(&state.omega_hat);
        let xi = [x[0] - state.mean_flow[0] * state.t, x[1] - state.mean_flow[1] * state.t];
        let v = self.sum_modes(&u1, &u2, xi);
        [state.mean_flow[0] + v[0], state.mean_flow[1] + v[1]]
    }

    /// `sum_k Re(c_k exp(i kappa . xi))` over the retained modes.
    pub(crate) fn sum_modes(&self, u1: &[Complex64], u2: &[Complex64], xi: [f64; 2]) -> [f64; 2] {
        let m = self.m;
        let ph1: Vec<Complex64> = (0..m).map(|i| Complex64::from_polar(1.0, self.kappa1[i] * xi[0])).collect();
        let ph2: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(1.0, self.kappa2[j] * xi[1])).collect();
        let mut out = [0.0; 2];
        for i in 0..m {
            for j in 0..m {
                let idx = i * m + j;
                if !self.mask[idx] {
                    continue;
                }
                let e = ph1[i] * ph2[j];
                out[0] += (u1[idx] * e).re;
                out[1] += (u2[idx] * e).re;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn solver(m: usize) -> Spectral2d {
        Spectral2d::new(m, [TAU, TAU], 0.1, Execution::Sequential).unwrap()
    }

    #[test]
    fn wavenumbers_wrap() {
        assert_eq!(wavenumber(0, 8), 0);
        assert_eq!(wavenumber(4, 8), 4);
        assert_eq!(wavenumber(5, 8), -3);
        assert_eq!(fft_index(-3, 8), 5);
    }

    #[test]
    fn fft_round_trip() {
        let s = solver(16);
        let grid: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let back = s.to_grid(&s.from_grid(&grid));
        for (a, b) in grid.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_state_is_fixed() {
        let s = solver(16);
        let z = s.zero_state(0.0, [0.0, 0.0]);
        let next = s.step(&z, 0.1).unwrap();
        assert!(next.omega_hat.iter().all(|c| c.norm() == 0.0));
        assert_eq!(next.t, 0.1);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(Spectral2d::new(7, [TAU, TAU], 0.1, Execution::Sequential).is_err());
        assert!(Spectral2d::new(16, [TAU, -1.0], 0.1, Execution::Sequential).is_err());
        assert!(Spectral2d::new(16, [TAU, TAU], 0.0, Execution::Sequential).is_err());
    }
}
