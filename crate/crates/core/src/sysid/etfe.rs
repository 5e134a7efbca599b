use num_complex::Complex64;
use rustfft::FftPlanner;

use super::record::IoRecord;
use crate::control_math::FrequencyResponse;
use crate::error::{Error, Result};

pub const DEFAULT_SEGMENTS: usize = 8;

const LOWEST_FREQUENCY: f64 = 0.1;

/// Averaged cross-spectral estimate `sum(Y U*) / sum(|U|^2)` over
/// `segments` Hann-windowed, non-overlapping blocks.
///
/// The record is first truncated to the largest power of two. Bins below
/// 0.1 rad/s, at or above Nyquist, or with negligible input power are
/// dropped from the result.
pub fn etfe(record: &IoRecord, segments: usize) -> Result<FrequencyResponse> {
    if segments == 0 || !segments.is_power_of_two() {
        return Err(Error::param("segments", "must be a positive power of two"));
    }
    if record.len() < 2 {
        return Err(Error::param("record", "too short"));
    }
    let total = 1usize << (usize::BITS - 1 - record.len().leading_zeros());
    let seg_len = total / segments;
    if seg_len < 8 {
        return Err(Error::param("record", format!("{} samples are too few for {segments} segments", record.len())));
    }
    let window: Vec<f64> = (0..seg_len)
        .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / seg_len as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg_len);
    let bins = seg_len / 2;
    let mut cross = vec![Complex64::new(0.0, 0.0); bins];
    let mut power = vec![0.0; bins];
    for s in 0..segments {
        let range = s * seg_len..(s + 1) * seg_len;
        let mut uf: Vec<Complex64> = record.u()[range.clone()]
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect();
        let mut yf: Vec<Complex64> = record.y()[range]
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect();
        fft.process(&mut uf);
        fft.process(&mut yf);
        for k in 0..bins {
            cross[k] += yf[k] * uf[k].conj();
            power[k] += uf[k].norm_sqr();
        }
    }
    let peak = power.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::DegenerateInput("input has no spectral content".into()));
    }
    let resolution = 2.0 * std::f64::consts::PI / (seg_len as f64 * record.dt());
    let (mut freqs, mut values) = (Vec::new(), Vec::new());
    for k in 1..bins {
        let omega = k as f64 * resolution;
        if omega < LOWEST_FREQUENCY || power[k] <= 1e-12 * peak {
            continue;
        }
        freqs.push(omega);
        values.push(cross[k] / power[k]);
    }
    if freqs.is_empty() {
        return Err(Error::DegenerateInput("no frequency bin has usable input power".into()));
    }
    FrequencyResponse::new(freqs, values)
}
