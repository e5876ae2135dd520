use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec::Execution;

const ROWS_PER_TASK: usize = 4;

/// Square 2D FFT built from row transforms and transposes.
///
/// `forward` includes the `1 / M^2` factor, so a grid of point values maps to
/// coefficients of `sum_k c_k exp(i kappa . x)`.
#[derive(Clone)]
pub struct Fft2 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    exec: Execution,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("m", &self.m).field("exec", &self.exec).finish()
    }
}

impl Fft2 {
    pub fn new(m: usize, exec: Execution) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
            exec,
        }
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        if self.exec.is_parallel() {
            self.exec
                .for_each_chunk_mut(data, self.m * ROWS_PER_TASK, |_, chunk| plan.process(chunk));
        } else {
            plan.process(data);
        }
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let m = self.m;
        for i in 0..m {
            for j in i + 1..m {
                data.swap(i * m + j, j * m + i);
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.rows(data, &self.fwd);
        self.transpose(data);
        self.rows(data, &self.fwd);
        self.transpose(data);
        let s = 1.0 / (self.m * self.m) as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.rows(data, &self.inv);
        self.transpose(data);
        self.rows(data, &self.inv);
        self.transpose(data);
    }
}
