//! End-to-end identification of the vertical plant from simulated PRBS data.

use nalgebra::DMatrix;

use super::arx::{arx_fit, select_delay, IdentifiedModel};
use super::prbs::{prbs_generate, PrbsConfig};
use super::record::IoRecord;
use super::synth::{add_output_noise, simulate_record};
use crate::control_math::poly::char_poly;
use crate::control_math::{ss_to_tf, StateSpaceModel, TimeDomain, TransferFunction};
use crate::error::{Error, Result};
use crate::plant::VerticalPlant;

/// Excitation and scoring settings for [`identify_vertical`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationSetup {
    pub prbs: PrbsConfig,
    pub estimation_len: usize,
    pub validation_len: usize,
    /// Output SNR in dB; `None` leaves the data noiseless.
    pub snr_db: Option<f64>,
    pub order: usize,
}

impl Default for IdentificationSetup {
    fn default() -> Self {
        Self {
            prbs: PrbsConfig {
                n_bits: 15,
                amplitude: 1.0,
                bit_period: 1,
                seed: 0,
            },
            estimation_len: 65_536,
            validation_len: 32_768,
            snr_db: Some(20.0),
            order: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IdentificationReport {
    pub estimation: IoRecord,
    pub validation: IoRecord,
    pub model: IdentifiedModel,
    /// VAF of the free-run model on the held-out record, percent.
    pub validation_vaf: f64,
    /// Exact ARX coefficients of the generating plant: `[1, a_1, ..]`.
    pub true_a: Vec<f64>,
    /// Exact ARX coefficients of the generating plant: `[b_1, ..]`.
    pub true_b: Vec<f64>,
    pub true_delay: usize,
    /// Largest coefficient error relative to the largest true coefficient.
    pub coefficient_error: f64,
}

/// Record-convention ARX coefficients of `plant` (output read after each step).
pub fn true_arx_coefficients(plant: &VerticalPlant) -> (Vec<f64>, Vec<f64>) {
    let a = char_poly(plant.a());
    // C (zI - A)^-1 B rho, with the numerator's leading zero dropped.
    let closed = plant.a() - plant.b() * plant.c().transpose();
    let shifted = char_poly(&closed);
    let b = shifted
        .iter()
        .zip(&a)
        .skip(1)
        .map(|(s, p)| (s - p) * plant.mass_ratio())
        .collect();
    (a, b)
}

/// PRBS-excites `plant` open loop (estimation and held-out runs with
/// distinct seeds), estimates the delay, fits ARX and scores the result.
pub fn identify_vertical(plant: &VerticalPlant, setup: &IdentificationSetup) -> Result<IdentificationReport> {
    let run = |seed: u64, len: usize, noise_seed: u64| -> Result<IoRecord> {
        let cfg = PrbsConfig { seed, ..setup.prbs };
        let u = prbs_generate(&cfg, len)?;
        let mut p = plant.clone();
        p.reset();
        let clean = simulate_record(&mut p, &u)?;
        match setup.snr_db {
            Some(snr) => add_output_noise(&clean, snr, noise_seed),
            None => Ok(clean),
        }
    };
    let seed = setup.prbs.seed;
    let estimation = run(seed, setup.estimation_len, seed.wrapping_mul(2).wrapping_add(1))?;
    let validation = run(seed.wrapping_add(1), setup.validation_len, seed.wrapping_mul(2).wrapping_add(2))?;

    let delay = select_delay(&estimation, setup.order)?;
    let model = arx_fit(&estimation, setup.order, delay)?;
    let validation_vaf = model.vaf_on(&validation)?;

    let (true_a, true_b) = true_arx_coefficients(plant);
    let coefficient_error = if true_b.len() == model.b.len() {
        let scale = true_a.iter().chain(&true_b).fold(0.0f64, |m, v| m.max(v.abs()));
        true_a
            .iter()
            .zip(&model.a)
            .chain(true_b.iter().zip(&model.b))
            .map(|(t, m)| (t - m).abs() / scale)
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    if !validation_vaf.is_finite() {
        return Err(Error::IllConditioned("validation VAF is not finite".into()));
    }
    Ok(IdentificationReport {
        estimation,
        validation,
        model,
        validation_vaf,
        true_a,
        true_b,
        true_delay: plant.delay_samples(),
        coefficient_error,
    })
}

/// Discrete transfer function of the generating plant, for plotting.
pub fn plant_transfer_function(plant: &VerticalPlant) -> Result<TransferFunction> {
    let model = StateSpaceModel::new(
        plant.a().clone(),
        DMatrix::from_column_slice(plant.b().len(), 1, plant.b().as_slice()),
        DMatrix::from_row_slice(1, plant.c().len(), plant.c().as_slice()),
        DMatrix::zeros(1, 1),
        TimeDomain::Discrete {
            sample_period: plant.dt(),
        },
    )?;
    let tf = ss_to_tf(&model)?;
    let num: Vec<f64> = tf.numerator().iter().map(|v| v * plant.mass_ratio()).collect();
    TransferFunction::new(&num, tf.denominator(), tf.domain())?
        .with_dead_time(plant.input_delay())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_coefficients_reproduce_the_plant() {
        let plant = VerticalPlant::identified(0.002, 0.8).unwrap();
        let (a, b) = true_arx_coefficients(&plant);
        let u: Vec<f64> = (0..400).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let mut p = plant.clone();
        let rec = simulate_record(&mut p, &u).unwrap();
        let d = plant.delay_samples();
        for k in 4 + d..u.len() {
            let lhs = rec.y()[k] + a[1] * rec.y()[k - 1] + a[2] * rec.y()[k - 2];
            let rhs = b[0] * u[k - d] + b[1] * u[k - d - 1];
            assert!((lhs - rhs).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn noiseless_run_recovers_coefficients() {
        let plant = VerticalPlant::identified(0.002, 1.0).unwrap();
        let setup = IdentificationSetup {
            snr_db: None,
            estimation_len: 8192,
            validation_len: 4096,
            ..Default::default()
        };
        let r = identify_vertical(&plant, &setup).unwrap();
        assert_eq!(r.model.estimated_delay, 10);
        assert!(r.coefficient_error < 1e-6, "{}", r.coefficient_error);
        assert!(r.validation_vaf > 99.999);
    }
}
