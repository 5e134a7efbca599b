//! Desk-scale analogs of the five flight experiments.

use super::scenario::{AgentSpec, ControllerSpec, DisturbanceSpec, ReferenceSignal, Scenario};
use crate::error::{Error, Result};
use crate::network::{Edge, DEFAULT_EDGE_DELAY};
use crate::plant::{mass_ratio_from_grams, NOMINAL_MASS_KG};

/// Payloads added in the heterogeneity sweep, grams.
pub const PAYLOAD_GRAMS: [f64; 5] = [20.0, 60.0, 80.0, 100.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetInfo {
    pub id: u32,
    pub name: &'static str,
    pub summary: &'static str,
}

pub const PRESETS: [PresetInfo; 5] = [
    PresetInfo {
        id: 1,
        name: "baseline",
        summary: "homogeneous PID leader and direct MRAC follower, square reference, no channel delay",
    },
    PresetInfo {
        id: 2,
        name: "communication",
        summary: "PID leader and direct MRAC follower over a 0.1 s channel",
    },
    PresetInfo {
        id: 3,
        name: "mass-sweep",
        summary: "MRAC and fixed PID followers at 20, 60, 80, 100 and 120 g payloads",
    },
    PresetInfo {
        id: 4,
        name: "effort",
        summary: "long square-wave run with a loaded MRAC and a loaded PID follower under force disturbance",
    },
    PresetInfo {
        id: 5,
        name: "chain",
        summary: "leader -> f1 (direct MRAC) -> f2 (indirect MRAC), 0.1 s channels",
    },
];

fn square() -> ReferenceSignal {
    ReferenceSignal::Square {
        amplitude: 0.4,
        period: 8.0,
    }
}

fn edge(from: usize, to: usize, delay: f64) -> Edge {
    Edge { from, to, delay }
}

fn ratio(grams: f64) -> f64 {
    mass_ratio_from_grams(grams, NOMINAL_MASS_KG).expect("payload list is valid")
}

fn base(name: &str, duration: f64) -> Scenario {
    Scenario {
        name: name.to_string(),
        dt: 0.002,
        duration,
        reference: square(),
        agents: vec![AgentSpec::new("leader", ControllerSpec::pid())],
        edges: Vec::new(),
        seed: 0,
        sync_window: None,
    }
}

/// Scenario for experiment `id` in `1..=5`.
pub fn preset(id: u32) -> Result<Scenario> {
    let info = PRESETS
        .iter()
        .find(|p| p.id == id)
        .ok_or(Error::UnknownPreset(id))?;
    let mut s = base(info.name, 60.0);
    match id {
        1 => {
            s.agents.push(AgentSpec::new("f1", ControllerSpec::mrac_direct()));
            s.edges.push(edge(0, 1, 0.0));
        }
        2 => {
            s.agents.push(AgentSpec::new("f1", ControllerSpec::mrac_direct()));
            s.edges.push(edge(0, 1, DEFAULT_EDGE_DELAY));
        }
        3 => {
            for g in PAYLOAD_GRAMS {
                let rho = ratio(g);
                let k = s.agents.len();
                s.agents
                    .push(AgentSpec::new(format!("mrac_{g:.0}g"), ControllerSpec::mrac_direct()).with_mass_ratio(rho));
                s.agents
                    .push(AgentSpec::new(format!("pid_{g:.0}g"), ControllerSpec::pid()).with_mass_ratio(rho));
                s.edges.push(edge(0, k, 0.0));
                s.edges.push(edge(0, k + 1, 0.0));
            }
        }
        4 => {
            s.duration = 240.0;
            s.seed = 4;
            let rho = ratio(60.0);
            let gust = DisturbanceSpec {
                std: 0.02,
                bandwidth: 20.0,
            };
            s.agents.push(
                AgentSpec::new("mrac", ControllerSpec::mrac_direct())
                    .with_mass_ratio(rho)
                    .with_disturbance(gust),
            );
            s.agents.push(
                AgentSpec::new("pid", ControllerSpec::pid())
                    .with_mass_ratio(rho)
                    .with_disturbance(gust),
            );
            s.edges.push(edge(0, 1, 0.0));
            s.edges.push(edge(0, 2, 0.0));
        }
        5 => {
            s.agents.push(AgentSpec::new("f1", ControllerSpec::mrac_direct()).with_mass_ratio(ratio(20.0)));
            s.agents.push(AgentSpec::new("f2", ControllerSpec::mrac_indirect()).with_mass_ratio(ratio(60.0)));
            s.edges.push(edge(0, 1, DEFAULT_EDGE_DELAY));
            s.edges.push(edge(1, 2, DEFAULT_EDGE_DELAY));
        }
        _ => unreachable!("checked against PRESETS"),
    }
    Ok(s)
}
