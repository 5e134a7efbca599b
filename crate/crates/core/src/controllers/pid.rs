use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parallel PID with a first-order filtered derivative:
/// `k_p + k_i / s + k_d s / (tau_f s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    pub tau_f: f64,
}

impl PidGains {
    pub fn new(k_p: f64, k_i: f64, k_d: f64, tau_f: f64) -> Result<Self> {
        let gains = Self { k_p, k_i, k_d, tau_f };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_f > 0.0 && self.tau_f.is_finite()) {
            return Err(Error::param("tau_f", "must be positive and finite"));
        }
        if ![self.k_p, self.k_i, self.k_d].iter().all(|g| g.is_finite()) {
            return Err(Error::param("gains", "must be finite"));
        }
        Ok(())
    }

    /// Controller frequency response `R(j omega)`.
    pub fn response(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        self.k_p + self.k_i / s + self.k_d * s / (self.tau_f * s + 1.0)
    }
}

/// Sampled PID: forward-accumulated integrator, Tustin-discretized derivative filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    gains: PidGains,
    integral: f64,
    derivative: f64,
    prev_error: f64,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            derivative: 0.0,
            prev_error: 0.0,
        }
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn derivative(&self) -> f64 {
        self.derivative
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.gains);
    }

    /// Advances one sample with tracking error `error` and returns the command.
    pub fn step(&mut self, error: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        let g = &self.gains;
        self.integral += g.k_i * error * dt;
        let den = 2.0 * g.tau_f + dt;
        self.derivative =
            (2.0 * g.tau_f - dt) / den * self.derivative + 2.0 * g.k_d / den * (error - self.prev_error);
        self.prev_error = error;
        Ok(g.k_p * error + self.integral + self.derivative)
    }
}
