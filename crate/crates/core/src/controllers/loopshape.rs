use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pid::PidGains;
use crate::control_math::{evaluate, model_order_reduce, ReducedModel, TransferFunction};
use crate::error::{Error, Result};

/// Loop-shaping targets for the velocity PID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopShapeSpec {
    /// Desired crossover, rad/s.
    pub omega_c: f64,
    /// Low-frequency zero at `a * omega_c`.
    pub a: f64,
    /// High-frequency zero at `b * omega_c`.
    pub b: f64,
    /// Derivative filter time constant, s.
    pub tau_f: f64,
    /// Frequency at which the plant is reduced; `None` means `omega_c`.
    #[serde(default)]
    pub match_freq: Option<f64>,
}

impl Default for LoopShapeSpec {
    fn default() -> Self {
        Self {
            omega_c: 5.0,
            a: 0.1,
            b: 4.0,
            tau_f: 0.022,
            match_freq: None,
        }
    }
}

impl LoopShapeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_c", self.omega_c),
            ("a", self.a),
            ("b", self.b),
            ("tau_f", self.tau_f),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.a < 1.0 && self.b > 1.0) {
            return Err(Error::param("a, b", "need a < 1 < b"));
        }
        if let Some(w) = self.match_freq {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("match_freq", "must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn match_frequency(&self) -> f64 {
        self.match_freq.unwrap_or(self.omega_c)
    }
}

/// Intermediate quantities of a loop-shaping synthesis and the resulting gains.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopShapeDesign {
    pub tau1: f64,
    pub tau2: f64,
    pub mu: f64,
    pub reduced: ReducedModel,
    pub gains: PidGains,
}

/// Places the PID zeros around `omega_c` and scales the integral gain
/// against the integrator-plus-delay reduction of `plant`.
pub fn loopshape_pid(plant: &TransferFunction, spec: &LoopShapeSpec) -> Result<LoopShapeDesign> {
    spec.validate()?;
    let tau1 = 1.0 / (spec.omega_c * spec.a);
    let tau2 = 1.0 / (spec.b * spec.omega_c);
    let mu = spec.omega_c / tau1;
    let w = spec.match_frequency();
    let reduced = model_order_reduce(plant, w, w)?;
    let k_i = mu / reduced.gain;
    let k_p = (tau1 + tau2) * k_i - k_i * spec.tau_f;
    let k_d = tau1 * tau2 * k_i - k_p * spec.tau_f;
    let gains = PidGains::new(k_p, k_i, k_d, spec.tau_f)?;
    Ok(LoopShapeDesign {
        tau1,
        tau2,
        mu,
        reduced,
        gains,
    })
}

/// `R(j omega) G(j omega)`.
pub fn open_loop_response(plant: &TransferFunction, gains: &PidGains, omega: f64) -> Result<Complex64> {
    Ok(gains.response(omega) * evaluate(plant, omega)?)
}
