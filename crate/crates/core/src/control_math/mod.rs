//! Linear time-invariant systems: realizations, conversions, frequency
//! response, discretization, Lyapunov solving and point-matching model
//! order reduction.

mod convert;
mod discretize;
mod freq;
mod lyapunov;
pub mod poly;
mod reduce;

pub use convert::{ss_to_tf, tf_to_ss};
pub use discretize::{discretize, DiscretizationMethod};
pub use freq::{evaluate, freq_response, logspace, unwrapped_phase, LtiSystem};
pub use lyapunov::{is_hurwitz, lyapunov_solve, max_real_eigenvalue};
pub use reduce::{model_order_reduce, DEFAULT_MATCH_FREQ};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Continuous or sampled time base of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDomain {
    Continuous,
    Discrete { sample_period: f64 },
}

impl TimeDomain {
    pub fn is_continuous(&self) -> bool {
        matches!(self, TimeDomain::Continuous)
    }

    pub fn sample_period(&self) -> Option<f64> {
        match *self {
            TimeDomain::Continuous => None,
            TimeDomain::Discrete { sample_period } => Some(sample_period),
        }
    }

    fn validate(&self) -> Result<()> {
        if let TimeDomain::Discrete { sample_period } = *self {
            if !(sample_period > 0.0 && sample_period.is_finite()) {
                return Err(Error::param("sample_period", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

fn validate_dead_time(dead_time: f64) -> Result<()> {
    if dead_time >= 0.0 && dead_time.is_finite() {
        Ok(())
    } else {
        Err(Error::param("dead_time", "must be finite and >= 0"))
    }
}

/// State-space realization `(A, B, C, D)` with an optional output dead time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    domain: TimeDomain,
    dead_time: f64,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        domain: TimeDomain,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, A is {n}x{n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        domain.validate()?;
        let all_finite = a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::param("matrices", "entries must be finite"));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            domain,
            dead_time: 0.0,
        })
    }

    /// Builds a SISO model from row-major slices.
    pub fn siso_from_slices(a: &[f64], b: &[f64], c: &[f64], d: f64, domain: TimeDomain) -> Result<Self> {
        let n = b.len();
        if a.len() != n * n || c.len() != n {
            return Err(Error::Dimension(format!(
                "expected {} entries in A and {n} in C, got {} and {}",
                n * n,
                a.len(),
                c.len()
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, 1, b),
            DMatrix::from_row_slice(1, n, c),
            DMatrix::from_element(1, 1, d),
            domain,
        )
    }

    pub fn with_dead_time(mut self, dead_time: f64) -> Result<Self> {
        validate_dead_time(dead_time)?;
        self.dead_time = dead_time;
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }
}

/// Rational transfer function with descending-power coefficients and dead time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    dead_time: f64,
    domain: TimeDomain,
}

impl TransferFunction {
    pub fn new(numerator: &[f64], denominator: &[f64], domain: TimeDomain) -> Result<Self> {
        if numerator.is_empty() || denominator.is_empty() {
            return Err(Error::param("coefficients", "numerator and denominator must be non-empty"));
        }
        if numerator.iter().chain(denominator).any(|c| !c.is_finite()) {
            return Err(Error::param("coefficients", "must be finite"));
        }
        let numerator = poly::trim_leading_zeros(numerator);
        let denominator = poly::trim_leading_zeros(denominator);
        if denominator == [0.0] {
            return Err(Error::param("denominator", "leading coefficient must be nonzero"));
        }
        let (num_deg, den_deg) = (numerator.len() - 1, denominator.len() - 1);
        if num_deg > den_deg && numerator != [0.0] {
            return Err(Error::Improper {
                num: num_deg,
                den: den_deg,
            });
        }
        domain.validate()?;
        Ok(Self {
            numerator,
            denominator,
            dead_time: 0.0,
            domain,
        })
    }

    pub fn continuous(numerator: &[f64], denominator: &[f64]) -> Result<Self> {
        Self::new(numerator, denominator, TimeDomain::Continuous)
    }

    pub fn with_dead_time(mut self, dead_time: f64) -> Result<Self> {
        validate_dead_time(dead_time)?;
        self.dead_time = dead_time;
        Ok(self)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn order(&self) -> usize {
        self.denominator.len() - 1
    }

    /// Copy scaled so the leading denominator coefficient is one.
    pub fn normalized(&self) -> Self {
        let lead = self.denominator[0];
        Self {
            numerator: self.numerator.iter().map(|c| c / lead).collect(),
            denominator: self.denominator.iter().map(|c| c / lead).collect(),
            dead_time: self.dead_time,
            domain: self.domain,
        }
    }

    /// Numerator left-padded to the denominator length.
    pub fn padded_numerator(&self) -> Vec<f64> {
        poly::pad_to(&self.numerator, self.denominator.len())
    }
}

/// Sampled frequency response on a strictly increasing positive grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} frequencies but {} values",
                frequencies.len(),
                values.len()
            )));
        }
        validate_grid(&frequencies)?;
        Ok(Self { frequencies, values })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }

    /// Phase in radians, unwrapped along the grid.
    pub fn phases(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for v in &self.values {
            let raw = v.arg();
            if let Some(p) = prev {
                let mut delta = raw + offset - p;
                while delta > std::f64::consts::PI {
                    offset -= 2.0 * std::f64::consts::PI;
                    delta -= 2.0 * std::f64::consts::PI;
                }
                while delta < -std::f64::consts::PI {
                    offset += 2.0 * std::f64::consts::PI;
                    delta += 2.0 * std::f64::consts::PI;
                }
            }
            let unwrapped = raw + offset;
            out.push(unwrapped);
            prev = Some(unwrapped);
        }
        out
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "frequency grid is empty"));
    }
    if grid.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::param("grid", "frequencies must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Integrator-plus-delay surrogate `gain * exp(-s * delay) / s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    pub gain: f64,
    pub delay: f64,
    /// Set when the phase condition asked for a negative delay and it was clamped to zero.
    pub delay_clamped: bool,
}

impl ReducedModel {
    pub fn transfer_function(&self) -> TransferFunction {
        TransferFunction {
            numerator: vec![self.gain],
            denominator: vec![1.0, 0.0],
            dead_time: self.delay,
            domain: TimeDomain::Continuous,
        }
    }
}
