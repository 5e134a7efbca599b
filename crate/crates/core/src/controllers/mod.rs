//! Loop-shaped PID for the leader and direct/indirect MRAC for followers.

mod loopshape;
mod matching;
mod mrac;
mod pid;

pub use loopshape::{loopshape_pid, open_loop_response, LoopShapeDesign, LoopShapeSpec};
pub use matching::{matching_conditions, MatchingForm, MatchingResult};
pub use mrac::{MracDirectState, MracIndirectState};
pub use pid::{PidController, PidGains};
