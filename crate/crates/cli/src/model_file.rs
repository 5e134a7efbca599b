//! Continuous plant descriptions read by `identify` and `tune`.

use std::path::Path;

use dmrac_core::control_math::TransferFunction;
use dmrac_core::plant::gvz_continuous;
use serde::Deserialize;

/// `numerator`/`denominator` in descending powers of `s`, plus dead time in seconds.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    #[serde(default)]
    dead_time: f64,
}

pub enum ModelSource<'a> {
    Builtin,
    File(&'a Path),
}

pub fn load(source: ModelSource<'_>) -> anyhow::Result<TransferFunction> {
    match source {
        ModelSource::Builtin => Ok(gvz_continuous()),
        ModelSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| dmrac_core::Error::Io(format!("{}: {e}", path.display())))?;
            let m: ModelFile = toml::from_str(&text).map_err(|e| dmrac_core::Error::Parse(e.to_string()))?;
            Ok(TransferFunction::continuous(&m.numerator, &m.denominator)?.with_dead_time(m.dead_time)?)
        }
    }
}
