use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::trace::TraceLog;
use crate::error::{Error, Result};

/// Half-width of the settling band as a fraction of the step size.
pub const SETTLING_BAND: f64 = 0.02;

/// Fraction of each step segment averaged to obtain its final value.
const FINAL_FRACTION: f64 = 0.1;

/// Response of one signal to one reference step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResponse {
    /// Step index at which the reference changes.
    pub edge: usize,
    /// Signed size of the reference change.
    pub step: f64,
    /// Percent, never negative.
    pub overshoot: f64,
    /// Seconds after the edge; `None` if the tail of the segment leaves the band.
    pub settling_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean overshoot over all steps, percent.
    pub overshoot: Option<f64>,
    /// Mean settling time over the settled steps, s.
    pub settling_time: Option<f64>,
    pub unsettled_steps: usize,
    pub steps: usize,
    pub sync_error_rms: f64,
    pub effort_variance: f64,
    pub energy_proxy: f64,
}

impl Metrics {
    /// Flat `key = value` lines, each prefixed with `[agent]`.
    pub fn to_key_values(&self, agent: &str) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "unsettled".to_string(), |x| x.to_string());
        let overshoot = self.overshoot.map_or_else(|| "none".to_string(), |x| x.to_string());
        format!(
            "[{agent}] overshoot_pct = {overshoot}\n\
             [{agent}] settling_time_s = {}\n\
             [{agent}] unsettled_steps = {}\n\
             [{agent}] steps = {}\n\
             [{agent}] sync_error_rms = {}\n\
             [{agent}] effort_variance = {}\n\
             [{agent}] energy_proxy = {}\n",
            opt(self.settling_time),
            self.unsettled_steps,
            self.steps,
            self.sync_error_rms,
            self.effort_variance,
            self.energy_proxy,
        )
    }
}

/// One metrics row per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub agent: String,
    pub overshoot_pct: Option<f64>,
    pub settling_time_s: Option<f64>,
    pub unsettled_steps: usize,
    pub steps: usize,
    pub sync_error_rms: f64,
    pub effort_variance: f64,
    pub energy_proxy: f64,
}

impl MetricsRow {
    pub fn new(agent: &str, m: &Metrics) -> Self {
        Self {
            agent: agent.to_string(),
            overshoot_pct: m.overshoot,
            settling_time_s: m.settling_time,
            unsettled_steps: m.unsettled_steps,
            steps: m.steps,
            sync_error_rms: m.sync_error_rms,
            effort_variance: m.effort_variance,
            energy_proxy: m.energy_proxy,
        }
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Indices where the reference changes, counting a nonzero start as a step from 0.
pub fn step_edges(reference: &[f64]) -> Vec<usize> {
    let mut prev = 0.0;
    let mut edges = Vec::new();
    for (k, &r) in reference.iter().enumerate() {
        if r != prev {
            edges.push(k);
        }
        prev = r;
    }
    edges
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Overshoot and settling of `signal` for each reference edge.
///
/// Each edge's segment runs to the next edge. Its final value is the mean of
/// the last tenth of the segment.
pub fn step_responses(signal: &[f64], reference: &[f64], edges: &[usize], dt: f64) -> Vec<StepResponse> {
    let n = signal.len().min(reference.len());
    let mut out = Vec::new();
    for (i, &edge) in edges.iter().enumerate() {
        let end = edges.get(i + 1).copied().unwrap_or(n).min(n);
        if edge >= end {
            continue;
        }
        let before = if edge == 0 { 0.0 } else { reference[edge - 1] };
        let step = reference[edge] - before;
        if step == 0.0 {
            continue;
        }
        let segment = &signal[edge..end];
        let tail = ((segment.len() as f64 * FINAL_FRACTION).ceil() as usize).clamp(1, segment.len());
        let final_value = mean(&segment[segment.len() - tail..]);
        let dir = step.signum();
        let peak = segment.iter().map(|y| dir * (y - final_value)).fold(0.0, f64::max);
        let overshoot = 100.0 * peak / step.abs();
        let band = SETTLING_BAND * step.abs();
        let outside = |y: &f64| (y - final_value).abs() > band;
        let last_out = segment.iter().rposition(outside);
        let tail_ok = !segment[segment.len() - tail..].iter().any(outside);
        let settling_time = if !tail_ok {
            None
        } else {
            Some(last_out.map_or(0.0, |k| (k + 1) as f64 * dt))
        };
        out.push(StepResponse {
            edge,
            step,
            overshoot,
            settling_time,
        });
    }
    out
}

fn window_range(trace: &TraceLog, window: (f64, f64)) -> (usize, usize) {
    let n = trace.len();
    let lo = ((window.0 / trace.dt).round().max(0.0) as usize).min(n);
    let hi = ((window.1 / trace.dt).round().max(0.0) as usize).min(n);
    (lo, hi.max(lo))
}

/// Metrics of `agent` over the given reference edges. Requires at least one edge.
pub fn step_metrics(trace: &TraceLog, agent: usize, edges: &[usize], window: (f64, f64)) -> Result<Metrics> {
    if edges.is_empty() {
        return Err(Error::Validation("step metrics need at least one reference step".into()));
    }
    compute(trace, agent, edges, window)
}

/// Like [`step_metrics`] with edges taken from the trace; step fields are
/// `None` when the reference never changes.
pub fn agent_metrics(trace: &TraceLog, agent: usize, window: (f64, f64)) -> Result<Metrics> {
    compute(trace, agent, &step_edges(&trace.reference), window)
}

fn compute(trace: &TraceLog, agent: usize, edges: &[usize], window: (f64, f64)) -> Result<Metrics> {
    let a = trace
        .agents
        .get(agent)
        .ok_or_else(|| Error::param("agent", format!("index {agent} out of range")))?;
    let responses = step_responses(&a.velocity, &trace.reference, edges, trace.dt);
    let settled: Vec<f64> = responses.iter().filter_map(|r| r.settling_time).collect();
    let overshoots: Vec<f64> = responses.iter().map(|r| r.overshoot).collect();
    let (lo, hi) = window_range(trace, window);
    Ok(Metrics {
        overshoot: (!overshoots.is_empty()).then(|| mean(&overshoots)),
        settling_time: (!settled.is_empty()).then(|| mean(&settled)),
        unsettled_steps: responses.len() - settled.len(),
        steps: responses.len(),
        sync_error_rms: rms(&a.error[lo..hi]),
        effort_variance: sample_variance(&a.control),
        energy_proxy: a.control.iter().map(|u| u * u).sum::<f64>() * trace.dt,
    })
}
