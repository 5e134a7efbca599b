use std::f64::consts::FRAC_PI_2;

use super::{evaluate, unwrapped_phase, ReducedModel, TransferFunction};
use crate::error::{Error, Result};

/// Frequency at which the full and reduced vertical-velocity models coincide.
pub const DEFAULT_MATCH_FREQ: f64 = 10.0;

/// Point-matching reduction to `gain * exp(-s delay) / s`.
///
/// The gain matches `|G|` at `match_freq_mag`; the delay matches the
/// (unwrapped) phase of `G` at `match_freq_phase`. A negative delay is
/// clamped to zero and flagged.
pub fn model_order_reduce(plant: &TransferFunction, match_freq_mag: f64, match_freq_phase: f64) -> Result<ReducedModel> {
    if !plant.domain().is_continuous() {
        return Err(Error::WrongTimeDomain { expected: "continuous" });
    }
    for (name, w) in [("match_freq_mag", match_freq_mag), ("match_freq_phase", match_freq_phase)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::param(name, "must be positive and finite"));
        }
    }
    let magnitude = evaluate(plant, match_freq_mag)?.norm();
    if !(magnitude.is_finite() && magnitude > 0.0) {
        return Err(Error::DegeneratePlant(format!(
            "|G(j{match_freq_mag})| = {magnitude}, cannot match magnitude"
        )));
    }
    let gain = match_freq_mag * magnitude;
    let phase = unwrapped_phase(plant, match_freq_phase)?;
    let raw_delay = -(phase + FRAC_PI_2) / match_freq_phase;
    let delay_clamped = raw_delay < 0.0;
    if delay_clamped {
        log::warn!("phase matching asked for a negative delay ({raw_delay:.4e} s); clamped to 0");
    }
    Ok(ReducedModel {
        gain,
        delay: raw_delay.max(0.0),
        delay_clamped,
    })
}
