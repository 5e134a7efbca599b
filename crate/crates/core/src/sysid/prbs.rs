use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feedback taps (1-based register positions) giving maximal-length sequences.
const TAPS: [&[u32]; 14] = [
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrbsConfig {
    pub n_bits: u32,
    pub amplitude: f64,
    /// Samples each bit is held for.
    pub bit_period: usize,
    pub seed: u64,
}

impl PrbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(3..=16).contains(&self.n_bits) {
            return Err(Error::param("n_bits", format!("must be in 3..=16, got {}", self.n_bits)));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("amplitude", "must be positive and finite"));
        }
        if self.bit_period == 0 {
            return Err(Error::param("bit_period", "must be at least 1"));
        }
        Ok(())
    }

    /// Bits before the sequence repeats.
    pub fn period_bits(&self) -> usize {
        (1usize << self.n_bits) - 1
    }
}

/// Fibonacci LFSR output mapped to `+-amplitude`. The seed selects the
/// (nonzero) initial register contents, i.e. the phase of the sequence.
pub fn prbs_generate(config: &PrbsConfig, length: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if length == 0 {
        return Err(Error::param("length", "must be positive"));
    }
    let n = config.n_bits;
    let mask = (1u32 << n) - 1;
    let taps = TAPS[(n - 3) as usize];
    let mut reg = (config.seed % u64::from(mask)) as u32 + 1;
    let mut out = Vec::with_capacity(length);
    let mut bit = reg & 1;
    while out.len() < length {
        for _ in 0..config.bit_period {
            if out.len() == length {
                break;
            }
            out.push(if bit == 1 { config.amplitude } else { -config.amplitude });
        }
        let feedback = taps.iter().fold(0, |acc, &t| acc ^ ((reg >> (n - t)) & 1));
        reg = ((reg >> 1) | (feedback << (n - 1))) & mask;
        bit = reg & 1;
    }
    Ok(out)
}
