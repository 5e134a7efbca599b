use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::identified::{gvz_continuous, GVZ_DEAD_TIME};
use super::rigid_body::QuadrotorParams;
use crate::control_math::{discretize, tf_to_ss, DiscretizationMethod, StateSpaceModel, TimeDomain, TransferFunction};
use crate::error::{Error, Result};

/// Airframe mass used to convert added payload to an input-gain ratio.
/// An assumption for desk-scale experiments, not a measured value.
pub const NOMINAL_MASS_KG: f64 = 0.28;

/// `rho = m / (m + dm)` for a payload of `grams` on a `nominal_kg` airframe.
pub fn mass_ratio_from_grams(grams: f64, nominal_kg: f64) -> Result<f64> {
    if !(nominal_kg > 0.0 && nominal_kg.is_finite()) {
        return Err(Error::param("nominal_kg", "must be positive and finite"));
    }
    if !(grams >= 0.0 && grams.is_finite()) {
        return Err(Error::param("grams", "must be nonnegative and finite"));
    }
    Ok(nominal_kg / (nominal_kg + grams / 1000.0))
}

/// Hover-linearized force to vertical-velocity map, `1 / (m s)`.
pub fn linearize_vertical(params: &QuadrotorParams) -> TransferFunction {
    TransferFunction::continuous(&[1.0 / params.mass()], &[1.0, 0.0]).expect("mass is positive")
}

fn validate_ratio(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("mass_ratio", format!("must lie in (0, 1], got {rho}")))
    }
}

/// Sampled vertical-velocity plant with payload scaling, input delay and an
/// additive force disturbance.
#[derive(Debug, Clone)]
pub struct VerticalPlant {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
    dt: f64,
    mass_ratio: f64,
    delay_line: VecDeque<f64>,
    delay_samples: usize,
    disturbance: Vec<f64>,
    state: DVector<f64>,
}

impl VerticalPlant {
    /// `model` must be a discrete SISO realization; its dead time is ignored in
    /// favor of `input_delay`, which must be a whole number of samples.
    pub fn new(model: &StateSpaceModel, mass_ratio: f64, input_delay: f64) -> Result<Self> {
        let dt = match model.domain() {
            TimeDomain::Discrete { sample_period } => sample_period,
            TimeDomain::Continuous => return Err(Error::WrongTimeDomain { expected: "discrete" }),
        };
        if !model.is_siso() {
            return Err(Error::UnsupportedShape("vertical plant must be SISO".into()));
        }
        validate_ratio(mass_ratio)?;
        let delay_samples = samples_for(input_delay, dt, "input_delay")?;
        Ok(Self {
            a: model.a().clone(),
            b: model.b().column(0).into_owned(),
            c: model.c().row(0).transpose(),
            d: model.d()[(0, 0)],
            dt,
            mass_ratio,
            delay_line: VecDeque::from(vec![0.0; delay_samples]),
            delay_samples,
            disturbance: Vec::new(),
            state: DVector::zeros(model.order()),
        })
    }

    /// The continuous vertical-velocity model realized in controllable
    /// canonical form, sampled with a zero-order hold at `dt`, with its
    /// 0.02 s dead time as input delay.
    pub fn identified(dt: f64, mass_ratio: f64) -> Result<Self> {
        Self::new(&Self::identified_model(dt)?, mass_ratio, GVZ_DEAD_TIME)
    }

    /// Discrete realization used by [`VerticalPlant::identified`], without delay.
    pub fn identified_model(dt: f64) -> Result<StateSpaceModel> {
        let gvz = gvz_continuous().with_dead_time(0.0)?;
        discretize(&tf_to_ss(&gvz)?, dt, DiscretizationMethod::ZeroOrderHold)
    }

    pub fn with_disturbance(mut self, disturbance: Vec<f64>) -> Self {
        self.disturbance = disturbance;
        self
    }

    /// Zero state and empty delay line; payload and disturbance are kept.
    pub fn reset(&mut self) {
        self.state.fill(0.0);
        self.delay_line.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn set_mass_ratio(&mut self, rho: f64) -> Result<()> {
        validate_ratio(rho)?;
        self.mass_ratio = rho;
        Ok(())
    }

    pub fn mass_ratio(&self) -> f64 {
        self.mass_ratio
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn input_delay(&self) -> f64 {
        self.delay_samples as f64 * self.dt
    }

    pub fn delay_samples(&self) -> usize {
        self.delay_samples
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Output row as a vector, so that `v = c . x`.
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Current vertical velocity (the input feedthrough is not included).
    pub fn output(&self) -> f64 {
        self.c.dot(&self.state)
    }

    /// Applies `u` at `step_index` and returns the velocity after the step.
    pub fn step(&mut self, u: f64, step_index: usize) -> f64 {
        let applied = if self.delay_samples == 0 {
            u
        } else {
            self.delay_line.push_back(u);
            self.delay_line.pop_front().unwrap_or(0.0)
        };
        let dist = self.disturbance.get(step_index).copied().unwrap_or(0.0);
        let effective = self.mass_ratio * applied + dist;
        self.state = &self.a * &self.state + &self.b * effective;
        self.output() + self.d * effective
    }
}

pub(crate) fn samples_for(delay: f64, dt: f64, name: &'static str) -> Result<usize> {
    if !(delay >= 0.0 && delay.is_finite()) {
        return Err(Error::param(name, "must be nonnegative and finite"));
    }
    let ratio = delay / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 {
        return Err(Error::param(name, format!("{delay} s is not a multiple of the step {dt} s")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let mut p = VerticalPlant::identified(0.002, 1.0).unwrap();
        for k in 0..1000 {
            assert_eq!(p.step(0.0, k), 0.0);
        }
    }

    #[test]
    fn step_response_reaches_dc_gain() {
        let mut p = VerticalPlant::identified(0.002, 1.0).unwrap();
        let mut y = 0.0;
        for k in 0..15_000 {
            y = p.step(1.0, k);
        }
        assert!((y / (29.92 / 3.099) - 1.0).abs() < 0.02, "y = {y}");
    }

    #[test]
    fn mass_ratio_scales_response() {
        let mut a = VerticalPlant::identified(0.002, 1.0).unwrap();
        let mut b = VerticalPlant::identified(0.002, 0.7).unwrap();
        for k in 0..5000 {
            let ya = a.step(1.0, k);
            let yb = b.step(1.0, k);
            assert!((yb - 0.7 * ya).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_is_ten_samples() {
        let model = VerticalPlant::identified_model(0.002).unwrap();
        let mut delayed = VerticalPlant::new(&model, 1.0, 0.02).unwrap();
        let mut plain = VerticalPlant::new(&model, 1.0, 0.0).unwrap();
        assert_eq!(delayed.delay_samples(), 10);
        let u = |k: usize| ((k as f64) * 0.37).sin();
        let yd: Vec<f64> = (0..200).map(|k| delayed.step(u(k), k)).collect();
        let yp: Vec<f64> = (0..200).map(|k| plain.step(u(k), k)).collect();
        assert!(yd[..10].iter().all(|&y| y == 0.0));
        for k in 10..200 {
            assert_eq!(yd[k], yp[k - 10]);
        }
    }

    #[test]
    fn disturbance_enters_as_force() {
        let model = VerticalPlant::identified_model(0.002).unwrap();
        let mut p = VerticalPlant::new(&model, 0.5, 0.0).unwrap().with_disturbance(vec![1.0]);
        let mut q = VerticalPlant::new(&model, 1.0, 0.0).unwrap();
        assert_eq!(p.step(0.0, 0), q.step(1.0, 0));
    }

    #[test]
    fn rejects_bad_configuration() {
        let model = VerticalPlant::identified_model(0.002).unwrap();
        assert!(VerticalPlant::new(&model, 0.0, 0.0).is_err());
        assert!(VerticalPlant::new(&model, 1.2, 0.0).is_err());
        assert!(VerticalPlant::new(&model, 1.0, 0.003).is_err());
    }

    #[test]
    fn payload_ratios() {
        let expected = [(20.0, 0.933_333), (60.0, 0.823_529), (80.0, 0.777_778), (100.0, 0.736_842), (120.0, 0.7)];
        for (g, rho) in expected {
            assert!((mass_ratio_from_grams(g, NOMINAL_MASS_KG).unwrap() - rho).abs() < 1e-6);
        }
    }

    #[test]
    fn linearized_gain() {
        let p = QuadrotorParams::new(nalgebra::Matrix3::identity(), 2.0, 9.81).unwrap();
        let tf = linearize_vertical(&p);
        assert_eq!(tf.numerator(), &[0.5]);
        assert_eq!(tf.denominator(), &[1.0, 0.0]);
    }
}
