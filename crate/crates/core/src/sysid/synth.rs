use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::record::IoRecord;
use crate::error::{Error, Result};
use crate::plant::VerticalPlant;

/// Drives `plant` open loop with `u` and records the noiseless response.
pub fn simulate_record(plant: &mut VerticalPlant, u: &[f64]) -> Result<IoRecord> {
    let y: Vec<f64> = u.iter().enumerate().map(|(k, &uk)| plant.step(uk, k)).collect();
    IoRecord::new(u.to_vec(), y, plant.dt())
}

/// Adds white Gaussian output noise at `snr_db` (signal variance over noise
/// variance, in decibels). Deterministic for a given `seed`.
pub fn add_output_noise(record: &IoRecord, snr_db: f64, seed: u64) -> Result<IoRecord> {
    if !snr_db.is_finite() {
        return Err(Error::param("snr_db", "must be finite"));
    }
    let y = record.y();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sigma = (var / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("snr_db", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = y.iter().map(|v| v + normal.sample(&mut rng)).collect();
    IoRecord::new(record.u().to_vec(), noisy, record.dt())
}
