use nalgebra::DMatrix;

use super::{poly, StateSpaceModel, TransferFunction};
use crate::error::{Error, Result};

/// `C (sI - A)^-1 B + D` as a polynomial ratio (SISO only).
///
/// The numerator uses the determinant identity
/// `C adj(sI - A) B = det(sI - A + B C) - det(sI - A)`.
pub fn ss_to_tf(model: &StateSpaceModel) -> Result<TransferFunction> {
    if !model.is_siso() {
        return Err(Error::UnsupportedShape(format!(
            "ss_to_tf needs a SISO model, got {} inputs and {} outputs",
            model.inputs(),
            model.outputs()
        )));
    }
    let d = model.d()[(0, 0)];
    let den = poly::char_poly(model.a());
    let closed = model.a() - model.b() * model.c();
    let shifted = poly::char_poly(&closed);
    let num: Vec<f64> = shifted
        .iter()
        .zip(&den)
        .map(|(s, p)| s - p + d * p)
        .collect();
    TransferFunction::new(&num, &den, model.domain())?.with_dead_time(model.dead_time())
}

/// Controllable canonical realization of a proper transfer function.
pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpaceModel> {
    let tf = tf.normalized();
    let den = tf.denominator();
    let n = den.len() - 1;
    let num = tf.padded_numerator();
    if num.len() > den.len() {
        return Err(Error::Improper {
            num: num.len() - 1,
            den: n,
        });
    }
    let d = num[0];
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, 1);
    let mut c = DMatrix::<f64>::zeros(1, n);
    for i in 0..n {
        a[(0, i)] = -den[i + 1];
        c[(0, i)] = num[i + 1] - d * den[i + 1];
        if i + 1 < n {
            a[(i + 1, i)] = 1.0;
        }
    }
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    StateSpaceModel::new(a, b, c, DMatrix::from_element(1, 1, d), tf.domain())?.with_dead_time(tf.dead_time())
}
