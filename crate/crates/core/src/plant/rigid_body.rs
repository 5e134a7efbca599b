//! Six-degree-of-freedom rigid body in a north-east-down inertial frame.
//!
//! Attitude is stored as `[phi, theta, psi]` in the order the model lists the
//! angles (labeled yaw, pitch, roll). The thrust axis and the Euler-rate
//! kinematics both treat `phi` as the rotation about body x, `theta` about
//! body y and `psi` about inertial z, which is what the thrust-axis formula
//! implies; the kinematics are the standard Z-Y-X Euler-rate map.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Below this `|cos theta|` the Euler-rate map is treated as singular.
const SINGULARITY_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorParams {
    inertia: Matrix3<f64>,
    mass: f64,
    gravity: f64,
}

impl QuadrotorParams {
    pub fn new(inertia: Matrix3<f64>, mass: f64, gravity: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param("mass", "must be positive and finite"));
        }
        if !gravity.is_finite() {
            return Err(Error::param("gravity", "must be finite"));
        }
        if (inertia - inertia.transpose()).norm() > 1e-12 * inertia.norm().max(1.0) {
            return Err(Error::param("inertia", "must be symmetric"));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::param("inertia", "must be positive definite"));
        }
        Ok(Self { inertia, mass, gravity })
    }

    /// Placeholder small-quadrotor parameters (0.28 kg airframe) for demos.
    pub fn nominal() -> Self {
        Self::new(Matrix3::from_diagonal(&Vector3::new(1.2e-3, 1.2e-3, 2.3e-3)), 0.28, 9.81)
            .expect("constant parameters are valid")
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Body rates, attitude, inertial position and inertial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    pub omega: Vector3<f64>,
    pub attitude: Vector3<f64>,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl RigidBodyState {
    fn axpy(&self, h: f64, d: &RigidBodyState) -> RigidBodyState {
        RigidBodyState {
            omega: self.omega + d.omega * h,
            attitude: self.attitude + d.attitude * h,
            position: self.position + d.position * h,
            velocity: self.velocity + d.velocity * h,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.omega, self.attitude, self.position, self.velocity]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Inertial-frame direction of the body vertical axis.
pub fn unit_thrust_axis(attitude: &Vector3<f64>) -> Vector3<f64> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    let (spsi, cpsi) = attitude[2].sin_cos();
    Vector3::new(
        sphi * spsi + cphi * sth * cpsi,
        -sphi * cpsi + cphi * sth * spsi,
        cphi * cth,
    )
}

fn euler_rates(attitude: &Vector3<f64>, omega: &Vector3<f64>) -> Result<Vector3<f64>> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let cth = attitude[1].cos();
    if cth.abs() < SINGULARITY_GUARD {
        return Err(Error::KinematicSingularity { cos_theta: cth });
    }
    let tth = attitude[1].tan();
    let (p, q, r) = (omega[0], omega[1], omega[2]);
    Ok(Vector3::new(
        p + sphi * tth * q + cphi * tth * r,
        cphi * q - sphi * r,
        (sphi * q + cphi * r) / cth,
    ))
}

/// Time derivative of the full state.
///
/// `thrust` acts along the negative body vertical axis, so hover has
/// `thrust = m g` with gravity along +z (down).
pub fn rigid_body_derivative(
    state: &RigidBodyState,
    params: &QuadrotorParams,
    control_torque: &Vector3<f64>,
    external_torque: &Vector3<f64>,
    thrust: f64,
    external_force: &Vector3<f64>,
) -> Result<RigidBodyState> {
    let j = params.inertia();
    let gyro = state.omega.cross(&(j * state.omega));
    let omega_dot = j
        .try_inverse()
        .ok_or_else(|| Error::param("inertia", "singular"))?
        * (control_torque + external_torque - gyro);
    let attitude_dot = euler_rates(&state.attitude, &state.omega)?;
    let m = params.mass();
    let velocity_dot = Vector3::new(0.0, 0.0, params.gravity()) - unit_thrust_axis(&state.attitude) * (thrust / m)
        + external_force / m;
    Ok(RigidBodyState {
        omega: omega_dot,
        attitude: attitude_dot,
        position: state.velocity,
        velocity: velocity_dot,
    })
}

/// One classical Runge-Kutta step with inputs held constant over `dt`.
pub fn rk4_step(
    state: &RigidBodyState,
    params: &QuadrotorParams,
    control_torque: &Vector3<f64>,
    external_torque: &Vector3<f64>,
    thrust: f64,
    external_force: &Vector3<f64>,
    dt: f64,
) -> Result<RigidBodyState> {
    let f = |s: &RigidBodyState| rigid_body_derivative(s, params, control_torque, external_torque, thrust, external_force);
    let k1 = f(state)?;
    let k2 = f(&state.axpy(dt / 2.0, &k1))?;
    let k3 = f(&state.axpy(dt / 2.0, &k2))?;
    let k4 = f(&state.axpy(dt, &k3))?;
    Ok(RigidBodyState {
        omega: state.omega + (k1.omega + k2.omega * 2.0 + k3.omega * 2.0 + k4.omega) * (dt / 6.0),
        attitude: state.attitude + (k1.attitude + k2.attitude * 2.0 + k3.attitude * 2.0 + k4.attitude) * (dt / 6.0),
        position: state.position + (k1.position + k2.position * 2.0 + k3.position * 2.0 + k4.position) * (dt / 6.0),
        velocity: state.velocity + (k1.velocity + k2.velocity * 2.0 + k3.velocity * 2.0 + k4.velocity) * (dt / 6.0),
    })
}
