//! Continuous Lyapunov equation `P A + A^T P = -Q`.
//!
//! Solved directly over the n(n+1)/2 independent entries of the symmetric
//! unknown. Intended for the small state dimensions used here (n <= ~8).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalue of `a` with the largest real part, as `(re, im)`.
pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> Option<(f64, f64)> {
    if a.nrows() == 0 {
        return None;
    }
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .max_by(|x, y| x.0.total_cmp(&y.0))
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    max_real_eigenvalue(a).is_none_or(|(re, _)| re < 0.0)
}

fn symmetric_tolerance(q: &DMatrix<f64>) -> f64 {
    1e-12 * q.norm().max(1.0)
}

fn check_spd(q: &DMatrix<f64>, what: &str) -> Result<()> {
    let asym = (q - q.transpose()).norm();
    if asym > symmetric_tolerance(q) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what} is not symmetric (||Q - Q^T||_F = {asym:.3e})"
        )));
    }
    if q.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(format!("{what} is not positive definite")));
    }
    Ok(())
}

/// Index of the packed unknown for entry `(i, j)` of a symmetric `n x n` matrix.
fn packed(i: usize, j: usize, n: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * n - r * (r + 1) / 2 + c
}

/// Solves `P A + A^T P = -Q` for symmetric positive definite `P`.
///
/// `a` must be Hurwitz and `q` symmetric positive definite.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension(format!("A must be square and non-empty, got {}x{}", a.nrows(), a.ncols())));
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!("Q is {}x{}, expected {n}x{n}", q.nrows(), q.ncols())));
    }
    if let Some((re, im)) = max_real_eigenvalue(a) {
        if re >= 0.0 {
            return Err(Error::NotHurwitz { re, im });
        }
    }
    check_spd(q, "Q")?;

    let m = n * (n + 1) / 2;
    let mut lhs = DMatrix::<f64>::zeros(m, m);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    // Row (i, j), i <= j:  sum_k P_ik A_kj + sum_k A_ki P_kj = -Q_ij
    for i in 0..n {
        for j in i..n {
            let row = packed(i, j, n);
            for k in 0..n {
                lhs[(row, packed(i, k, n))] += a[(k, j)];
                lhs[(row, packed(k, j, n))] += a[(k, i)];
            }
            rhs[row] = -q[(i, j)];
        }
    }
    let solution = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("Lyapunov system is singular".into()))?;

    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = solution[packed(i, j, n)];
        }
    }
    check_spd(&p, "P").map_err(|_| Error::IllConditioned("computed P is not positive definite".into()))?;
    Ok(p)
}
