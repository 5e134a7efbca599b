//! Adaptive laws for followers.
//!
//! A direct follower receives the leader's state `x_m` and input `r`; an
//! indirect follower receives its parent's state and input. Both integrate
//! their gradient laws with explicit Euler at the controller step.

use nalgebra::{DMatrix, DVector};

use crate::control_math::lyapunov_solve;
use crate::error::{Error, Result};

fn check_common(gamma: f64, p: &DMatrix<f64>, b_m: &DVector<f64>) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", "must be nonnegative and finite"));
    }
    let n = b_m.len();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Dimension(format!("P is {}x{}, B_m has {n} entries", p.nrows(), p.ncols())));
    }
    if (p - p.transpose()).norm() > 1e-9 * p.norm().max(1.0) || p.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("P must be symmetric positive definite".into()));
    }
    Ok(())
}

fn check_len(name: &'static str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Dimension(format!("{name} has {} entries, expected {n}", v.len())));
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::param("dt", "must be positive and finite"))
    }
}

/// Gains of a follower that hears the leader directly.
#[derive(Debug, Clone, PartialEq)]
pub struct MracDirectState {
    pub k_m: DVector<f64>,
    pub k_r: f64,
    gamma: f64,
    p: DMatrix<f64>,
    b_m: DVector<f64>,
    /// Feed back the follower's own state (`true`) or the leader's (`false`).
    pub use_own_state: bool,
}

impl MracDirectState {
    /// Zero initial gains.
    pub fn new(gamma: f64, p: DMatrix<f64>, b_m: DVector<f64>, use_own_state: bool) -> Result<Self> {
        check_common(gamma, &p, &b_m)?;
        Ok(Self {
            k_m: DVector::zeros(b_m.len()),
            k_r: 0.0,
            gamma,
            p,
            b_m,
            use_own_state,
        })
    }

    /// Solves `P A_m + A_m^T P = -I` and starts from zero gains.
    pub fn for_reference_model(gamma: f64, a_m: &DMatrix<f64>, b_m: DVector<f64>) -> Result<Self> {
        let p = lyapunov_solve(a_m, &DMatrix::identity(a_m.nrows(), a_m.nrows()))?;
        Self::new(gamma, p, b_m, true)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn b_m(&self) -> &DVector<f64> {
        &self.b_m
    }

    pub fn control(&self, x_self: &DVector<f64>, x_m: &DVector<f64>, r: f64) -> Result<f64> {
        let n = self.b_m.len();
        check_len("x_self", x_self, n)?;
        check_len("x_m", x_m, n)?;
        let x = if self.use_own_state { x_self } else { x_m };
        Ok(self.k_m.dot(x) + self.k_r * r)
    }

    pub fn update(&mut self, x_self: &DVector<f64>, x_m: &DVector<f64>, r: f64, dt: f64) -> Result<()> {
        check_dt(dt)?;
        let n = self.b_m.len();
        check_len("x_self", x_self, n)?;
        check_len("x_m", x_m, n)?;
        let e = x_self - x_m;
        let s = -self.gamma * self.b_m.dot(&(&self.p * e)) * dt;
        self.k_m.axpy(s, x_self, 1.0);
        self.k_r += s * r;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.k_r.is_finite() && self.k_m.iter().all(|v| v.is_finite())
    }
}

/// Gains of a follower that hears another follower (its parent).
#[derive(Debug, Clone, PartialEq)]
pub struct MracIndirectState {
    pub k_21: DVector<f64>,
    pub k_m2: DVector<f64>,
    pub k_r21: f64,
    gamma: f64,
    p: DMatrix<f64>,
    b_m: DVector<f64>,
}

impl MracIndirectState {
    pub fn new(gamma: f64, p: DMatrix<f64>, b_m: DVector<f64>) -> Result<Self> {
        check_common(gamma, &p, &b_m)?;
        let n = b_m.len();
        Ok(Self {
            k_21: DVector::zeros(n),
            k_m2: DVector::zeros(n),
            k_r21: 0.0,
            gamma,
            p,
            b_m,
        })
    }

    pub fn for_reference_model(gamma: f64, a_m: &DMatrix<f64>, b_m: DVector<f64>) -> Result<Self> {
        let p = lyapunov_solve(a_m, &DMatrix::identity(a_m.nrows(), a_m.nrows()))?;
        Self::new(gamma, p, b_m)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn b_m(&self) -> &DVector<f64> {
        &self.b_m
    }

    pub fn control(&self, x_self: &DVector<f64>, x_parent: &DVector<f64>, u_parent: f64) -> Result<f64> {
        let n = self.b_m.len();
        check_len("x_self", x_self, n)?;
        check_len("x_parent", x_parent, n)?;
        Ok(self.k_21.dot(x_parent) + self.k_m2.dot(&(x_self - x_parent)) + self.k_r21 * u_parent)
    }

    pub fn update(&mut self, x_self: &DVector<f64>, x_parent: &DVector<f64>, u_parent: f64, dt: f64) -> Result<()> {
        check_dt(dt)?;
        let n = self.b_m.len();
        check_len("x_self", x_self, n)?;
        check_len("x_parent", x_parent, n)?;
        let e = x_self - x_parent;
        let s = -self.gamma * self.b_m.dot(&(&self.p * &e)) * dt;
        self.k_21.axpy(s, x_self, 1.0);
        self.k_m2.axpy(s, &e, 1.0);
        self.k_r21 += s * u_parent;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.k_r21.is_finite() && self.k_21.iter().chain(self.k_m2.iter()).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn scalar_direct(gamma: f64) -> MracDirectState {
        MracDirectState::new(gamma, DMatrix::from_element(1, 1, 1.0), v(&[1.0]), true).unwrap()
    }

    #[test]
    fn zero_gains_give_zero_control() {
        let s = MracDirectState::new(1.0, DMatrix::identity(2, 2), v(&[0.0, 1.0]), true).unwrap();
        assert_eq!(s.control(&v(&[1.0, 2.0]), &v(&[3.0, 4.0]), 5.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_feedforward() {
        let mut s = scalar_direct(1.0);
        s.k_r = 1.0;
        assert_eq!(s.control(&v(&[0.3]), &v(&[0.1]), 0.5).unwrap(), 0.5);
    }

    #[test]
    fn state_variant_selects_feedback_signal() {
        let mut s = scalar_direct(1.0);
        s.k_m = v(&[2.0]);
        assert_eq!(s.control(&v(&[1.0]), &v(&[3.0]), 0.0).unwrap(), 2.0);
        s.use_own_state = false;
        assert_eq!(s.control(&v(&[1.0]), &v(&[3.0]), 0.0).unwrap(), 6.0);
    }

    #[test]
    fn hand_evaluated_direct_update() {
        // dk_m = -2 * (1 * 1 * 0.5) * 1 * 0.01
        let mut s = scalar_direct(2.0);
        s.update(&v(&[1.0]), &v(&[0.5]), 0.0, 0.01).unwrap();
        assert!((s.k_m[0] + 0.01).abs() < 1e-15);
        assert_eq!(s.k_r, 0.0);
    }

    #[test]
    fn no_adaptation_without_error_or_rate() {
        let mut s = scalar_direct(2.0);
        s.update(&v(&[0.7]), &v(&[0.7]), 1.0, 0.01).unwrap();
        assert_eq!((s.k_m[0], s.k_r), (0.0, 0.0));
        let mut frozen = scalar_direct(0.0);
        frozen.update(&v(&[1.0]), &v(&[0.0]), 1.0, 0.01).unwrap();
        assert_eq!((frozen.k_m[0], frozen.k_r), (0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = scalar_direct(1.0);
        assert!(matches!(s.control(&v(&[1.0, 2.0]), &v(&[0.0]), 0.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn indirect_control_terms() {
        let mut s = MracIndirectState::new(1.0, DMatrix::from_element(1, 1, 1.0), v(&[1.0])).unwrap();
        assert_eq!(s.control(&v(&[1.0]), &v(&[2.0]), 3.0).unwrap(), 0.0);
        s.k_r21 = 1.0;
        assert_eq!(s.control(&v(&[1.0]), &v(&[2.0]), 3.0).unwrap(), 3.0);
        s.k_m2 = v(&[5.0]);
        assert_eq!(s.control(&v(&[2.0]), &v(&[2.0]), 3.0).unwrap(), 3.0);
    }

    #[test]
    fn hand_evaluated_indirect_update() {
        // e = 0.5, s = -2 * 0.5 * 0.01 = -0.01
        let mut s = MracIndirectState::new(2.0, DMatrix::from_element(1, 1, 1.0), v(&[1.0])).unwrap();
        s.update(&v(&[1.0]), &v(&[0.5]), 0.0, 0.01).unwrap();
        assert!((s.k_21[0] + 0.01).abs() < 1e-15);
        assert!((s.k_m2[0] + 0.005).abs() < 1e-15);
        assert_eq!(s.k_r21, 0.0);
        s.update(&v(&[0.5]), &v(&[0.5]), 4.0, 0.01).unwrap();
        assert!((s.k_21[0] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(MracDirectState::new(-1.0, DMatrix::identity(1, 1), v(&[1.0]), true).is_err());
        assert!(MracDirectState::new(1.0, -DMatrix::identity(1, 1), v(&[1.0]), true).is_err());
        assert!(MracIndirectState::new(1.0, DMatrix::identity(2, 2), v(&[1.0]), ).is_err());
        let unstable = DMatrix::from_element(1, 1, 1.0);
        assert!(MracDirectState::for_reference_model(1.0, &unstable, v(&[1.0])).is_err());
    }

    #[test]
    fn converged_ideal_gains_reproduce_reference() {
        // Follower x' = a x + rho b u, reference x_m' = a x_m + b r.
        // With k_m = 0 and k_r = 1/rho the follower is the reference model.
        let (a, b, rho, dt) = (-2.0, 1.5, 0.7, 1e-3);
        let mut s = scalar_direct(0.0);
        s.k_r = 1.0 / rho;
        let (mut x, mut xm) = (0.0f64, 0.0f64);
        for k in 0..5000 {
            let r = if (k / 1000) % 2 == 0 { 1.0 } else { -1.0 };
            let u = s.control(&v(&[x]), &v(&[xm]), r).unwrap();
            x += dt * (a * x + rho * b * u);
            xm += dt * (a * xm + b * r);
            assert!((x - xm).abs() < 1e-12);
        }
    }
}
