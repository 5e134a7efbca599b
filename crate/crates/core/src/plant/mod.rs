//! Quadrotor models: the nonlinear rigid body, its hover linearization and
//! the identified vertical-velocity plant used by the simulator.

mod identified;
mod rigid_body;
mod vertical;

pub use identified::{
    gvz_continuous, gvz_discrete, gvz_state_space, GVZ_DEAD_TIME, GVZ_DISCRETE_SAMPLE_PERIOD,
};
pub use rigid_body::{rigid_body_derivative, rk4_step, unit_thrust_axis, QuadrotorParams, RigidBodyState};
pub(crate) use vertical::samples_for;
pub use vertical::{linearize_vertical, mass_ratio_from_grams, VerticalPlant, NOMINAL_MASS_KG};
