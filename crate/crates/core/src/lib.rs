//! Distributed model-reference adaptive control for networked quadrotors.
//!
//! Bottom-up layout: `control_math` (LTI tooling), `plant` (rigid body and
//! vertical-velocity models), `controllers` (loop-shaped PID and MRAC laws),
//! `network` (communication graph and delayed channels), `sysid` (PRBS,
//! ARX, ETFE) and `sim` (scenario runner, metrics, presets).

pub mod control_math;
pub mod controllers;
pub mod error;
pub mod network;
pub mod plant;
pub mod sim;
pub mod sysid;

pub use error::{Error, Result};
