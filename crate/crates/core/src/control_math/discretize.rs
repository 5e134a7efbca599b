use nalgebra::DMatrix;

use super::{StateSpaceModel, TimeDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizationMethod {
    ZeroOrderHold,
    Bilinear,
}

/// Samples a continuous model at `sample_period`. Dead time is carried over unchanged.
pub fn discretize(
    system: &StateSpaceModel,
    sample_period: f64,
    method: DiscretizationMethod,
) -> Result<StateSpaceModel> {
    if !system.domain().is_continuous() {
        return Err(Error::WrongTimeDomain { expected: "continuous" });
    }
    if !(sample_period > 0.0 && sample_period.is_finite()) {
        return Err(Error::param("sample_period", "must be positive and finite"));
    }
    let n = system.order();
    let p = system.inputs();
    let domain = TimeDomain::Discrete { sample_period };
    let (a, b, c, d) = match method {
        DiscretizationMethod::ZeroOrderHold => {
            let mut aug = DMatrix::<f64>::zeros(n + p, n + p);
            aug.view_mut((0, 0), (n, n)).copy_from(&(system.a() * sample_period));
            aug.view_mut((0, n), (n, p)).copy_from(&(system.b() * sample_period));
            let e = aug.exp();
            (
                e.view((0, 0), (n, n)).into_owned(),
                e.view((0, n), (n, p)).into_owned(),
                system.c().clone(),
                system.d().clone(),
            )
        }
        DiscretizationMethod::Bilinear => {
            let half = sample_period / 2.0;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - system.a() * half;
            let inv = left
                .try_inverse()
                .ok_or_else(|| Error::IllConditioned("I - A T/2 is singular".into()))?;
            let a = &inv * (&eye + system.a() * half);
            let b = &inv * system.b() * sample_period;
            let c = system.c() * &inv;
            let d = system.d() + system.c() * &inv * system.b() * half;
            (a, b, c, d)
        }
    };
    StateSpaceModel::new(a, b, c, d, domain)?.with_dead_time(system.dead_time())
}
