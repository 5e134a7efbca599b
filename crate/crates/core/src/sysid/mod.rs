//! Identification pipeline: PRBS excitation, dead-time estimation, ARX fit
//! with iterative prefiltering, VAF scoring and a nonparametric frequency
//! response for verification.

mod arx;
mod etfe;
mod prbs;
mod record;
mod synth;
mod workflow;

pub use arx::{arx_fit, estimate_delay, select_delay, vaf, IdentifiedModel, MAX_DELAY_LAG};
pub use etfe::{etfe, DEFAULT_SEGMENTS};
pub use prbs::{prbs_generate, PrbsConfig};
pub use record::IoRecord;
pub use synth::{add_output_noise, simulate_record};
pub use workflow::{identify_vertical, plant_transfer_function, true_arx_coefficients, IdentificationReport, IdentificationSetup};
