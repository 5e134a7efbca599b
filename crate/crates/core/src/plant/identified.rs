use crate::control_math::{StateSpaceModel, TimeDomain, TransferFunction};

/// Input-output dead time of the identified vertical-velocity model, s.
pub const GVZ_DEAD_TIME: f64 = 0.02;

/// Sample period of the discrete identified model.
///
/// Chosen so that the fast pole of the continuous model, -13.8055 rad/s,
/// maps onto the discrete pole at 0.75.
pub const GVZ_DISCRETE_SAMPLE_PERIOD: f64 = 0.020_838_18;

/// `e^{-0.02 s} (0.319 s + 29.92) / (s^2 + 14.03 s + 3.099)`.
pub fn gvz_continuous() -> TransferFunction {
    TransferFunction::continuous(&[0.319, 29.92], &[1.0, 14.03, 3.099])
        .and_then(|tf| tf.with_dead_time(GVZ_DEAD_TIME))
        .expect("constant model is valid")
}

/// `z^-1 (-0.0013 z^2 + 0.017 z - 0.005) / (z^2 - 1.75 z + 0.75)`, the
/// one-sample shift carried as dead time.
pub fn gvz_discrete() -> TransferFunction {
    let domain = TimeDomain::Discrete {
        sample_period: GVZ_DISCRETE_SAMPLE_PERIOD,
    };
    TransferFunction::new(&[-0.0013, 0.017, -0.005], &[1.0, -1.75, 0.75], domain)
        .and_then(|tf| tf.with_dead_time(GVZ_DISCRETE_SAMPLE_PERIOD))
        .expect("constant model is valid")
}

/// Second-order discrete identified realization.
pub fn gvz_state_space() -> StateSpaceModel {
    StateSpaceModel::siso_from_slices(
        &[1.01, 0.15, -0.02, 0.74],
        &[0.13, 0.22],
        &[-1.84, 0.31],
        0.0,
        TimeDomain::Discrete {
            sample_period: GVZ_DISCRETE_SAMPLE_PERIOD,
        },
    )
    .expect("constant model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_period_maps_fast_pole() {
        let disc = (14.03f64 * 14.03 - 4.0 * 3.099).sqrt();
        let fast = (14.03 + disc) / 2.0;
        assert!(((-fast * GVZ_DISCRETE_SAMPLE_PERIOD).exp() - 0.75).abs() < 1e-6);
    }

    #[test]
    fn dc_gain() {
        let g = gvz_continuous();
        let dc = g.numerator()[1] / g.denominator()[2];
        assert!((dc - 9.654727).abs() < 1e-6);
    }
}
