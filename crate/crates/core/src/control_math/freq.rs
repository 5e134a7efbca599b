use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{poly, validate_grid, FrequencyResponse, StateSpaceModel, TimeDomain, TransferFunction};
use crate::error::{Error, Result};

/// Anything with a SISO rational response plus dead time.
pub trait LtiSystem {
    fn time_domain(&self) -> TimeDomain;
    fn delay(&self) -> f64;
    /// Rational part evaluated at `s` (continuous) or `z` (discrete).
    fn rational_at(&self, point: Complex64) -> Result<Complex64>;
}

impl LtiSystem for TransferFunction {
    fn time_domain(&self) -> TimeDomain {
        self.domain()
    }

    fn delay(&self) -> f64 {
        self.dead_time()
    }

    fn rational_at(&self, point: Complex64) -> Result<Complex64> {
        let den = poly::eval(self.denominator(), point);
        if den.norm() == 0.0 {
            return Err(Error::DegeneratePlant(format!("evaluation at a pole ({point})")));
        }
        Ok(poly::eval(self.numerator(), point) / den)
    }
}

impl LtiSystem for StateSpaceModel {
    fn time_domain(&self) -> TimeDomain {
        self.domain()
    }

    fn delay(&self) -> f64 {
        self.dead_time()
    }

    fn rational_at(&self, point: Complex64) -> Result<Complex64> {
        if !self.is_siso() {
            return Err(Error::UnsupportedShape("frequency response needs a SISO model".into()));
        }
        let n = self.order();
        let d = Complex64::new(self.d()[(0, 0)], 0.0);
        if n == 0 {
            return Ok(d);
        }
        let resolvent = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { point } else { Complex64::new(0.0, 0.0) };
            diag - self.a()[(i, j)]
        });
        let b = DMatrix::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(self.b()[(i, 0)], 0.0));
        let x = resolvent
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::DegeneratePlant(format!("evaluation at a pole ({point})")))?;
        let cx: Complex64 = (0..n).map(|i| x[(i, 0)] * self.c()[(0, i)]).sum();
        Ok(cx + d)
    }
}

/// `G(jw) e^{-jw tau}` for continuous systems, `G(e^{jwT}) e^{-jw tau}` for discrete ones.
pub fn evaluate<S: LtiSystem + ?Sized>(system: &S, omega: f64) -> Result<Complex64> {
    let delay = Complex64::from_polar(1.0, -omega * system.delay());
    match system.time_domain() {
        TimeDomain::Continuous => Ok(system.rational_at(Complex64::new(0.0, omega))? * delay),
        TimeDomain::Discrete { sample_period } => {
            let nyquist = std::f64::consts::PI / sample_period;
            if omega >= nyquist {
                return Err(Error::AboveNyquist { omega, nyquist });
            }
            let z = Complex64::from_polar(1.0, omega * sample_period);
            Ok(system.rational_at(z)? * delay)
        }
    }
}

pub fn freq_response<S: LtiSystem + ?Sized>(system: &S, grid: &[f64]) -> Result<FrequencyResponse> {
    validate_grid(grid)?;
    let values = grid
        .iter()
        .map(|&w| evaluate(system, w))
        .collect::<Result<Vec<_>>>()?;
    FrequencyResponse::new(grid.to_vec(), values)
}

/// Phase at `omega` unwrapped by continuation from a frequency four decades lower.
pub fn unwrapped_phase<S: LtiSystem + ?Sized>(system: &S, omega: f64) -> Result<f64> {
    const POINTS: usize = 4001;
    let lo = omega * 1e-4;
    let grid = logspace(lo, omega, POINTS);
    let response = freq_response(system, &grid)?;
    Ok(*response.phases().last().expect("non-empty grid"))
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut out: Vec<f64> = (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect();
    out[n - 1] = hi;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn integrator_at_unit_frequency() {
        let tf = TransferFunction::continuous(&[1.0], &[1.0, 0.0]).unwrap();
        let v = evaluate(&tf, 1.0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((v.arg() + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn pure_delay() {
        let tf = TransferFunction::continuous(&[1.0], &[1.0]).unwrap().with_dead_time(0.02).unwrap();
        let v = evaluate(&tf, 10.0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((v.arg() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn discrete_above_nyquist_is_rejected() {
        let tf = TransferFunction::new(&[1.0], &[1.0, -0.5], TimeDomain::Discrete { sample_period: 0.1 }).unwrap();
        assert!(evaluate(&tf, 31.0).is_ok());
        assert!(matches!(evaluate(&tf, 32.0), Err(Error::AboveNyquist { .. })));
    }

    #[test]
    fn state_space_and_tf_agree() {
        let m = StateSpaceModel::siso_from_slices(&[0.0, 1.0, -2.0, -3.0], &[0.0, 1.0], &[1.0, 0.0], 0.0, TimeDomain::Continuous)
            .unwrap();
        let tf = TransferFunction::continuous(&[1.0], &[1.0, 3.0, 2.0]).unwrap();
        for w in [0.1, 1.0, 7.0, 40.0] {
            let diff = evaluate(&m, w).unwrap() - evaluate(&tf, w).unwrap();
            assert!(diff.norm() < 1e-14);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let tf = TransferFunction::continuous(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(freq_response(&tf, &[]).is_err());
    }

    #[test]
    fn unwrapped_phase_beyond_pi() {
        let tf = TransferFunction::continuous(&[1.0], &[1.0, 0.0]).unwrap().with_dead_time(1.0).unwrap();
        let phase = unwrapped_phase(&tf, 10.0).unwrap();
        assert!((phase - (-FRAC_PI_2 - 10.0)).abs() < 1e-9);
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(0.1, 100.0, 4);
        assert!((g[0] - 0.1).abs() < 1e-15);
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert_eq!(g[3], 100.0);
    }
}
