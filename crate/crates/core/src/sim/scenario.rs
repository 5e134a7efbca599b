use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::{LoopShapeSpec, PidGains};
use crate::error::{Error, Result};
use crate::network::{CommGraph, Edge};
use crate::plant::{samples_for, GVZ_DEAD_TIME};

/// Version written to and expected in scenario files.
pub const SCHEMA_VERSION: u32 = 1;

/// Default adaptation rate for both follower laws.
pub const DEFAULT_GAMMA: f64 = 1000.0;

fn default_dt() -> f64 {
    0.002
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_input_delay() -> f64 {
    GVZ_DEAD_TIME
}

fn default_square_amplitude() -> f64 {
    0.4
}

fn default_square_period() -> f64 {
    8.0
}

/// Velocity reference fed to the leader, m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSignal {
    /// Zero before `time`, `amplitude` from then on.
    Step {
        amplitude: f64,
        #[serde(default)]
        time: f64,
    },
    /// `+amplitude` for the first half of each period, `-amplitude` for the second.
    Square {
        #[serde(default = "default_square_amplitude")]
        amplitude: f64,
        #[serde(default = "default_square_period")]
        period: f64,
    },
    /// One value per step; the last value is held past the end.
    Samples { values: Vec<f64> },
}

impl ReferenceSignal {
    pub fn value(&self, step: usize, dt: f64) -> f64 {
        match self {
            Self::Step { amplitude, time } => {
                // Compare in steps so that a step at a multiple of dt is exact.
                if step as f64 >= (time / dt).round() {
                    *amplitude
                } else {
                    0.0
                }
            }
            Self::Square { amplitude, period } => {
                let period_steps = ((period / dt).round() as usize).max(2);
                if step % period_steps < period_steps / 2 {
                    *amplitude
                } else {
                    -*amplitude
                }
            }
            Self::Samples { values } => values.get(step).or(values.last()).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, dt: f64) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        match self {
            Self::Step { amplitude, time } => {
                finite("reference.amplitude", *amplitude)?;
                samples_for(*time, dt, "reference.time")?;
            }
            Self::Square { amplitude, period } => {
                finite("reference.amplitude", *amplitude)?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::param("reference.period", "must be positive"));
                }
                samples_for(*period, 2.0 * dt, "reference.period")?;
            }
            Self::Samples { values } => {
                if values.is_empty() {
                    return Err(Error::param("reference.values", "must not be empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("reference.values", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// What a PID agent regulates its velocity towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PidTarget {
    #[default]
    Reference,
    /// The (delayed) velocity of the single in-neighbor.
    Parent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Fixed-gain PID. Without explicit `gains` they are loop-shaped from
    /// `loop_shape` (or its defaults) on the identified model.
    Pid {
        #[serde(default)]
        gains: Option<PidGains>,
        #[serde(default)]
        loop_shape: Option<LoopShapeSpec>,
        #[serde(default)]
        target: PidTarget,
    },
    /// Adaptive follower that hears the leader.
    MracDirect {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "yes")]
        use_own_state: bool,
        /// Input effectiveness assumed by the matching diagnostic.
        #[serde(default = "one")]
        lambda: f64,
    },
    /// Adaptive follower that hears another follower.
    MracIndirect {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "one")]
        lambda: f64,
    },
}

impl ControllerSpec {
    pub fn pid() -> Self {
        Self::Pid {
            gains: None,
            loop_shape: None,
            target: PidTarget::Reference,
        }
    }

    pub fn mrac_direct() -> Self {
        Self::MracDirect {
            gamma: DEFAULT_GAMMA,
            use_own_state: true,
            lambda: 1.0,
        }
    }

    pub fn mrac_indirect() -> Self {
        Self::MracIndirect {
            gamma: DEFAULT_GAMMA,
            lambda: 1.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Pid { .. } => "pid",
            Self::MracDirect { .. } => "mrac_direct",
            Self::MracIndirect { .. } => "mrac_indirect",
        }
    }
}

/// Payload change applied from `time` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassStep {
    pub time: f64,
    pub mass_ratio: f64,
}

/// Low-pass filtered Gaussian force disturbance, in normalized force units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    /// Standard deviation of the filtered signal.
    pub std: f64,
    /// First-order filter corner, rad/s.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub controller: ControllerSpec,
    /// Nominal over actual mass at t = 0.
    #[serde(default = "one")]
    pub mass_ratio: f64,
    #[serde(default)]
    pub mass_schedule: Vec<MassStep>,
    /// Plant input delay, s.
    #[serde(default = "default_input_delay")]
    pub input_delay: f64,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
}

impl AgentSpec {
    pub fn new(name: impl Into<String>, controller: ControllerSpec) -> Self {
        Self {
            name: name.into(),
            controller,
            mass_ratio: 1.0,
            mass_schedule: Vec::new(),
            input_delay: GVZ_DEAD_TIME,
            disturbance: None,
        }
    }

    pub fn with_mass_ratio(mut self, rho: f64) -> Self {
        self.mass_ratio = rho;
        self
    }

    pub fn with_disturbance(mut self, disturbance: DisturbanceSpec) -> Self {
        self.disturbance = Some(disturbance);
        self
    }
}

/// A complete, self-contained simulation description. Agent 0 is the leader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    pub reference: ReferenceSignal,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub seed: u64,
    /// `[start, end]` in seconds for the synchronization RMS; defaults to the final quarter.
    #[serde(default)]
    pub sync_window: Option<[f64; 2]>,
}

/// Checked scenario facts the engine relies on.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub graph: CommGraph,
    pub order: Vec<usize>,
    pub steps: usize,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Synchronization window in seconds.
    pub fn window(&self) -> (f64, f64) {
        match self.sync_window {
            Some([a, b]) => (a, b),
            None => (0.75 * self.duration, self.duration),
        }
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<ValidatedScenario> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", "must be positive and finite"));
        }
        samples_for(self.duration, self.dt, "duration")?;
        self.reference.validate(self.dt)?;
        if let Some([a, b]) = self.sync_window {
            if !(a >= 0.0 && a < b && b <= self.duration + 0.5 * self.dt) {
                return Err(Error::param("sync_window", "must satisfy 0 <= start < end <= duration"));
            }
        }
        if self.agents.is_empty() {
            return Err(Error::Validation("a scenario needs at least the leader".into()));
        }
        let mut names = HashSet::new();
        for agent in &self.agents {
            if !valid_name(&agent.name) {
                return Err(Error::Validation(format!(
                    "agent name {:?} must be non-empty ASCII letters, digits, '_' or '-'",
                    agent.name
                )));
            }
            if !names.insert(agent.name.as_str()) {
                return Err(Error::Validation(format!("duplicate agent name {:?}", agent.name)));
            }
        }
        if !matches!(self.agents[0].controller, ControllerSpec::Pid { target: PidTarget::Reference, .. }) {
            return Err(Error::Validation(format!(
                "agent 0 ({}) is the leader and must use a pid controller tracking the reference",
                self.agents[0].name
            )));
        }

        let graph = CommGraph::from_edges(self.agents.len(), self.edges.iter().copied())?;
        for e in graph.edges() {
            samples_for(e.delay, self.dt, "edge delay")?;
        }
        let order = graph
            .validate_assumption1()
            .map_err(|v| Error::Validation(format!("communication graph: {v}")))?;

        for (i, agent) in self.agents.iter().enumerate() {
            self.validate_agent(i, agent, &graph)?;
        }
        Ok(ValidatedScenario {
            graph,
            order,
            steps: self.steps(),
        })
    }

    fn validate_agent(&self, i: usize, agent: &AgentSpec, graph: &CommGraph) -> Result<()> {
        let ctx = |msg: String| Error::Validation(format!("agent {} ({}): {msg}", i, agent.name));
        let in_edges: Vec<&Edge> = graph.in_edges(i).collect();
        check_ratio(agent.mass_ratio).map_err(|e| ctx(e.to_string()))?;
        samples_for(agent.input_delay, self.dt, "input_delay").map_err(|e| ctx(e.to_string()))?;
        let mut last = f64::NEG_INFINITY;
        for step in &agent.mass_schedule {
            check_ratio(step.mass_ratio).map_err(|e| ctx(e.to_string()))?;
            samples_for(step.time, self.dt, "mass_schedule.time").map_err(|e| ctx(e.to_string()))?;
            if step.time <= last {
                return Err(ctx("mass_schedule times must be strictly increasing".into()));
            }
            last = step.time;
        }
        if let Some(d) = agent.disturbance {
            if !(d.std >= 0.0 && d.std.is_finite()) || !(d.bandwidth > 0.0 && d.bandwidth.is_finite()) {
                return Err(ctx("disturbance needs std >= 0 and bandwidth > 0".into()));
            }
        }
        match &agent.controller {
            ControllerSpec::Pid { gains, loop_shape, target } => {
                if let Some(g) = gains {
                    g.validate().map_err(|e| ctx(e.to_string()))?;
                }
                if let Some(s) = loop_shape {
                    s.validate().map_err(|e| ctx(e.to_string()))?;
                }
                if *target == PidTarget::Parent && in_edges.len() != 1 {
                    return Err(ctx(format!(
                        "a pid tracking its parent needs exactly one in-neighbor, has {}",
                        in_edges.len()
                    )));
                }
            }
            ControllerSpec::MracDirect { gamma, lambda, .. } => {
                check_gamma_lambda(*gamma, *lambda).map_err(|e| ctx(e.to_string()))?;
                if in_edges.len() != 1 || in_edges[0].from != 0 {
                    return Err(ctx("mrac_direct needs the leader as its only in-neighbor".into()));
                }
            }
            ControllerSpec::MracIndirect { gamma, lambda } => {
                check_gamma_lambda(*gamma, *lambda).map_err(|e| ctx(e.to_string()))?;
                if in_edges.len() != 1 {
                    return Err(ctx(format!(
                        "mrac_indirect needs exactly one in-neighbor, has {}",
                        in_edges.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the TOML scenario format, checking `schema_version` first.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        match table.remove("schema_version") {
            None => return Err(Error::Parse("missing `schema_version`".into())),
            Some(toml::Value::Integer(v)) if v == SCHEMA_VERSION as i64 => {}
            Some(other) => {
                return Err(Error::Parse(format!(
                    "unsupported schema_version {other}, this build reads {SCHEMA_VERSION}"
                )))
            }
        }
        let unknown: Vec<&str> = table
            .keys()
            .map(String::as_str)
            .filter(|k| !TOP_LEVEL_KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Parse(format!(
                "unknown keys: {}; expected one of: schema_version, {}",
                unknown.join(", "),
                TOP_LEVEL_KEYS.join(", ")
            )));
        }
        table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(format!("schema_version = {SCHEMA_VERSION}\n{body}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

const TOP_LEVEL_KEYS: [&str; 8] = [
    "name",
    "dt",
    "duration",
    "reference",
    "agents",
    "edges",
    "seed",
    "sync_window",
];

fn check_ratio(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("mass_ratio", format!("must lie in (0, 1], got {rho}")))
    }
}

fn check_gamma_lambda(gamma: f64, lambda: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", "must be positive and finite"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(delay: f64) -> Scenario {
        Scenario {
            name: "pair".into(),
            dt: 0.002,
            duration: 4.0,
            reference: ReferenceSignal::Square {
                amplitude: 0.4,
                period: 8.0,
            },
            agents: vec![
                AgentSpec::new("leader", ControllerSpec::pid()),
                AgentSpec::new("f1", ControllerSpec::mrac_direct()),
            ],
            edges: vec![Edge { from: 0, to: 1, delay }],
            seed: 0,
            sync_window: None,
        }
    }

    #[test]
    fn square_wave_starts_high_and_flips_at_half_period() {
        let r = ReferenceSignal::Square {
            amplitude: 0.4,
            period: 8.0,
        };
        assert_eq!(r.value(0, 0.002), 0.4);
        assert_eq!(r.value(1999, 0.002), 0.4);
        assert_eq!(r.value(2000, 0.002), -0.4);
        assert_eq!(r.value(3999, 0.002), -0.4);
        assert_eq!(r.value(4000, 0.002), 0.4);
    }

    #[test]
    fn step_and_samples() {
        let s = ReferenceSignal::Step { amplitude: 1.0, time: 0.01 };
        assert_eq!(s.value(4, 0.002), 0.0);
        assert_eq!(s.value(5, 0.002), 1.0);
        let c = ReferenceSignal::Samples { values: vec![1.0, 2.0] };
        assert_eq!(c.value(0, 0.1), 1.0);
        assert_eq!(c.value(7, 0.1), 2.0);
    }

    #[test]
    fn valid_pair_passes() {
        let v = pair(0.1).validate().unwrap();
        assert_eq!(v.order, vec![0, 1]);
        assert_eq!(v.steps, 2000);
    }

    #[test]
    fn delay_must_be_a_multiple_of_dt() {
        assert!(pair(0.0031).validate().is_err());
    }

    #[test]
    fn leader_must_be_pid() {
        let mut s = pair(0.0);
        s.agents.swap(0, 1);
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn cycle_is_named() {
        let mut s = pair(0.0);
        s.agents.push(AgentSpec::new("f2", ControllerSpec::mrac_indirect()));
        s.edges.push(Edge { from: 1, to: 2, delay: 0.0 });
        s.edges.push(Edge { from: 2, to: 1, delay: 0.0 });
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("cycle"), "{msg}");
    }

    #[test]
    fn indirect_needs_single_parent() {
        let mut s = pair(0.0);
        s.agents.push(AgentSpec::new("f2", ControllerSpec::mrac_indirect()));
        s.edges.push(Edge { from: 1, to: 2, delay: 0.0 });
        s.edges.push(Edge { from: 0, to: 2, delay: 0.0 });
        assert!(s.validate().is_err());
        s.edges.pop();
        assert!(s.validate().is_ok());
    }

    #[test]
    fn direct_must_hear_the_leader() {
        let mut s = pair(0.0);
        s.agents.push(AgentSpec::new("f2", ControllerSpec::mrac_direct()));
        s.edges.push(Edge { from: 1, to: 2, delay: 0.0 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn bad_names_and_ratios() {
        let mut s = pair(0.0);
        s.agents[1].name = "f.1".into();
        assert!(s.validate().is_err());
        let mut s = pair(0.0);
        s.agents[1].mass_ratio = 1.2;
        assert!(s.validate().is_err());
        let mut s = pair(0.0);
        s.agents[1].mass_schedule = vec![MassStep { time: 1.0, mass_ratio: 0.8 }, MassStep { time: 1.0, mass_ratio: 0.7 }];
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = pair(0.1);
        let text = s.to_toml_string().unwrap();
        assert!(text.starts_with("schema_version = 1"));
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn toml_rejects_unknown_and_version() {
        let text = pair(0.1).to_toml_string().unwrap();
        let err = Scenario::from_toml_str(&format!("bogus = 1\nother = 2\n{text}")).unwrap_err().to_string();
        assert!(err.contains("bogus") && err.contains("other"), "{err}");
        let bumped = text.replace("schema_version = 1", "schema_version = 9");
        assert!(Scenario::from_toml_str(&bumped).unwrap_err().to_string().contains("schema_version"));
        let nested = text.replace("use_own_state = true", "use_own_state = true\nspeed = 3");
        assert!(Scenario::from_toml_str(&nested).unwrap_err().to_string().contains("speed"));
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let text = r#"
schema_version = 1
name = "mini"
duration = 2.0
reference = { kind = "step", amplitude = 1.0 }

[[agents]]
name = "leader"
controller = { kind = "pid" }
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        assert_eq!(s.dt, 0.002);
        assert_eq!(s.agents[0].input_delay, GVZ_DEAD_TIME);
        assert!(s.validate().is_ok());
    }
}
