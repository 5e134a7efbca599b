use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Which input matrix multiplies the ideal feedback gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchingForm {
    /// `A_i + lambda B_m k^T = A_m`, `lambda k_r B_m = B_m`.
    #[default]
    ModelInput,
    /// `A_i + lambda B_i k^T = A_m`, `lambda k_r B_i = B_m`.
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub k_m: DVector<f64>,
    /// `None` when the input condition has no solution (zero input vector).
    pub k_r: Option<f64>,
    /// Frobenius norm of the unmatched part of both conditions.
    pub residual: f64,
}

impl MatchingResult {
    pub fn feasible(&self, tol: f64) -> bool {
        self.k_r.is_some() && self.residual <= tol
    }
}

/// Least-squares ideal gains for the feedback matching conditions.
pub fn matching_conditions(
    a_i: &DMatrix<f64>,
    b_i: &DVector<f64>,
    a_m: &DMatrix<f64>,
    b_m: &DVector<f64>,
    lambda: f64,
    form: MatchingForm,
) -> Result<MatchingResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    let n = a_m.nrows();
    let shapes_ok = a_m.ncols() == n
        && a_i.nrows() == n
        && a_i.ncols() == n
        && b_i.len() == n
        && b_m.len() == n;
    if !shapes_ok {
        return Err(Error::Dimension(format!(
            "A_i {}x{}, B_i {}, A_m {}x{}, B_m {}",
            a_i.nrows(),
            a_i.ncols(),
            b_i.len(),
            a_m.nrows(),
            a_m.ncols(),
            b_m.len()
        )));
    }
    let b = match form {
        MatchingForm::ModelInput => b_m,
        MatchingForm::Classical => b_i,
    };
    let bb = b.norm_squared();
    let gap = a_m - a_i;
    let (k_m, k_r) = if bb == 0.0 {
        (DVector::zeros(n), None)
    } else {
        let k_m = gap.transpose() * b / (lambda * bb);
        let k_r = b.dot(b_m) / (lambda * bb);
        (k_m, Some(k_r))
    };
    let state_residual = (a_i + b * k_m.transpose() * lambda - a_m).norm_squared();
    let input_residual = match k_r {
        Some(k) => (b * (lambda * k) - b_m).norm_squared(),
        None => 0.0,
    };
    Ok(MatchingResult {
        k_m,
        k_r,
        residual: (state_residual + input_residual).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, v.len() / rows, v)
    }

    #[test]
    fn homogeneous_case() {
        let a = m(2, &[0.0, 1.0, -2.0, -3.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let r = matching_conditions(&a, &b, &a, &b, 1.0, MatchingForm::ModelInput).unwrap();
        assert_eq!(r.k_m, DVector::zeros(2));
        assert_eq!(r.k_r, Some(1.0));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn scalar_case() {
        let r = matching_conditions(
            &m(1, &[-1.0]),
            &DVector::from_vec(vec![1.0]),
            &m(1, &[-3.0]),
            &DVector::from_vec(vec![2.0]),
            1.0,
            MatchingForm::ModelInput,
        )
        .unwrap();
        assert!((r.k_m[0] + 1.0).abs() < 1e-15);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn zero_input_vector_is_infeasible() {
        let a_i = m(2, &[-1.0, 0.0, 0.0, -2.0]);
        let a_m = m(2, &[-3.0, 1.0, 0.0, -2.0]);
        let zero = DVector::zeros(2);
        let r = matching_conditions(&a_i, &zero, &a_m, &zero, 1.0, MatchingForm::ModelInput).unwrap();
        assert!(r.k_r.is_none());
        assert!((r.residual - (&a_m - &a_i).norm()).abs() < 1e-15);
        assert!(!r.feasible(1e-9));
    }

    #[test]
    fn classical_form_uses_follower_input() {
        let a = m(1, &[-1.0]);
        let r = matching_conditions(
            &a,
            &DVector::from_vec(vec![0.5]),
            &a,
            &DVector::from_vec(vec![1.0]),
            1.0,
            MatchingForm::Classical,
        )
        .unwrap();
        assert_eq!(r.k_r, Some(2.0));
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let a = m(1, &[-1.0]);
        let b = DVector::from_vec(vec![1.0]);
        assert!(matching_conditions(&a, &b, &a, &b, 0.0, MatchingForm::ModelInput).is_err());
    }
}
