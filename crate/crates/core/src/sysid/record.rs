use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Uniformly sampled input/output data. `y[k]` is the output measured after
/// `u[k]` has been applied for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IoRecord {
    u: Vec<f64>,
    y: Vec<f64>,
    dt: f64,
}

const HEADER: [&str; 3] = ["time", "u", "y"];

impl IoRecord {
    pub fn new(u: Vec<f64>, y: Vec<f64>, dt: f64) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Dimension(format!("u has {} samples, y has {}", u.len(), y.len())));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if u.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::param("record", "contains non-finite samples"));
        }
        Ok(Self { u, y, dt })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Splits at sample `at` into estimation and validation parts.
    pub fn split(&self, at: usize) -> Result<(IoRecord, IoRecord)> {
        if at == 0 || at >= self.len() {
            return Err(Error::param("at", format!("must lie strictly inside 0..{}", self.len())));
        }
        Ok((
            IoRecord::new(self.u[..at].to_vec(), self.y[..at].to_vec(), self.dt)?,
            IoRecord::new(self.u[at..].to_vec(), self.y[at..].to_vec(), self.dt)?,
        ))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(HEADER)?;
        for (k, (u, y)) in self.u.iter().zip(&self.y).enumerate() {
            w.write_record([(k as f64 * self.dt).to_string(), u.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(Error::Parse(format!("expected header time,u,y, got {}", header.iter().collect::<Vec<_>>().join(","))));
        }
        let (mut t, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column {}", line + 2, HEADER[i])))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {}: {e}", line + 2, HEADER[i])))
            };
            t.push(field(0)?);
            u.push(field(1)?);
            y.push(field(2)?);
        }
        if t.len() < 2 {
            return Err(Error::Parse("need at least two rows to infer the sample period".into()));
        }
        let dt = t[1] - t[0];
        let uniform = t
            .iter()
            .enumerate()
            .all(|(k, &tk)| (tk - t[0] - k as f64 * dt).abs() <= 1e-9 * (1.0 + tk.abs()));
        if !uniform {
            return Err(Error::Parse("time column is not uniformly sampled".into()));
        }
        IoRecord::new(u, y, dt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let rec = IoRecord::new(vec![0.1, -0.05, 1.0 / 3.0], vec![0.0, 1e-17, -2.5], 0.002).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("time,u,y\n"));
        assert_eq!(IoRecord::read_csv(buf.as_slice()).unwrap(), rec);
    }

    #[test]
    fn rejects_mismatch_and_bad_csv() {
        assert!(IoRecord::new(vec![1.0], vec![], 0.1).is_err());
        assert!(IoRecord::read_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
        assert!(IoRecord::read_csv("time,u,y\n0,1,2\n0.1,1,x\n".as_bytes()).is_err());
        assert!(IoRecord::read_csv("time,u,y\n0,1,2\n0.1,1,2\n0.3,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn split_parts() {
        let rec = IoRecord::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], 1.0).unwrap();
        let (a, b) = rec.split(1).unwrap();
        assert_eq!(a.u(), &[1.0]);
        assert_eq!(b.y(), &[5.0, 6.0]);
        assert!(rec.split(3).is_err());
    }
}
