use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Per-agent time series, one entry per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentTrace {
    pub name: String,
    /// Vertical velocity, m/s.
    pub velocity: Vec<f64>,
    /// Commanded normalized force deviation.
    pub control: Vec<f64>,
    /// Velocity minus whatever the agent tracks (reference or delayed neighbor).
    pub error: Vec<f64>,
    /// `states[i][k]` is state component `i` at step `k`.
    pub states: Vec<Vec<f64>>,
    pub gain_names: Vec<String>,
    /// `gains[i][k]` is gain `gain_names[i]` at step `k`.
    pub gains: Vec<Vec<f64>>,
}

impl AgentTrace {
    pub(crate) fn new(name: &str, state_dim: usize, gain_names: Vec<String>, capacity: usize) -> Self {
        let series = |n: usize| (0..n).map(|_| Vec::with_capacity(capacity)).collect();
        Self {
            name: name.to_string(),
            velocity: Vec::with_capacity(capacity),
            control: Vec::with_capacity(capacity),
            error: Vec::with_capacity(capacity),
            states: series(state_dim),
            gains: series(gain_names.len()),
            gain_names,
        }
    }

    pub fn gain(&self, name: &str) -> Option<&[f64]> {
        self.gain_names.iter().position(|g| g == name).map(|i| self.gains[i].as_slice())
    }

    fn columns(&self) -> Vec<(String, &[f64])> {
        let mut cols: Vec<(String, &[f64])> = vec![
            (format!("{}.v", self.name), &self.velocity),
            (format!("{}.u", self.name), &self.control),
            (format!("{}.e", self.name), &self.error),
        ];
        for (i, s) in self.states.iter().enumerate() {
            cols.push((format!("{}.x{i}", self.name), s));
        }
        for (g, s) in self.gain_names.iter().zip(&self.gains) {
            cols.push((format!("{}.{g}", self.name), s));
        }
        cols
    }
}

/// Uniformly sampled record of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub dt: f64,
    pub reference: Vec<f64>,
    pub agents: Vec<AgentTrace>,
}

impl TraceLog {
    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn agent(&self, name: &str) -> Option<&AgentTrace> {
        self.agents.iter().find(|a| a.name == name)
    }

    /// Header `time,ref,<agent>.v,<agent>.u,<agent>.e,<agent>.x0,...,<agent>.<gain>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let cols: Vec<(String, &[f64])> = self.agents.iter().flat_map(AgentTrace::columns).collect();
        let mut header = vec!["time".to_string(), "ref".to_string()];
        header.extend(cols.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for k in 0..self.len() {
            row.clear();
            row.push(self.time(k).to_string());
            row.push(self.reference[k].to_string());
            row.extend(cols.iter().map(|(_, s)| s[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`TraceLog::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "time" || header[1] != "ref" {
            return Err(Error::Parse("trace header must start with time,ref".into()));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for record in r.records() {
            let record = record?;
            for (i, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {field:?} in column {}", header[i])))?;
                columns[i].push(v);
            }
        }
        let time = &columns[0];
        let dt = if time.len() >= 2 { time[1] - time[0] } else { 0.0 };
        for (k, t) in time.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(Error::Parse(format!("non-uniform time at row {k}")));
            }
        }

        let mut agents: Vec<AgentTrace> = Vec::new();
        for (name, series) in header.iter().zip(columns.iter()).skip(2) {
            let (agent, field) = name
                .split_once('.')
                .ok_or_else(|| Error::Parse(format!("column {name:?} is not <agent>.<field>")))?;
            if agents.last().is_none_or(|a| a.name != agent) {
                agents.push(AgentTrace {
                    name: agent.to_string(),
                    ..Default::default()
                });
            }
            let a = agents.last_mut().expect("pushed above");
            match field {
                "v" => a.velocity = series.clone(),
                "u" => a.control = series.clone(),
                "e" => a.error = series.clone(),
                f if f.starts_with('x') && f[1..].parse::<usize>().is_ok() => a.states.push(series.clone()),
                f => {
                    a.gain_names.push(f.to_string());
                    a.gains.push(series.clone());
                }
            }
        }
        Ok(Self {
            dt,
            reference: columns.swap_remove(1),
            agents,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
