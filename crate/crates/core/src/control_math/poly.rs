//! Small dense-polynomial helpers. Coefficients are stored in descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Horner evaluation at a complex point.
pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Drops leading zeros, keeping at least one coefficient.
pub fn trim_leading_zeros(coeffs: &[f64]) -> Vec<f64> {
    let first = coeffs.iter().position(|&c| c != 0.0);
    match first {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

/// Degree after trimming; the zero polynomial has degree 0 here.
pub fn degree(coeffs: &[f64]) -> usize {
    trim_leading_zeros(coeffs).len() - 1
}

/// Product of two polynomials.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Left-pads with zeros to `len` coefficients.
pub fn pad_to(coeffs: &[f64], len: usize) -> Vec<f64> {
    if coeffs.len() >= len {
        return coeffs.to_vec();
    }
    let mut out = vec![0.0; len - coeffs.len()];
    out.extend_from_slice(coeffs);
    out
}

/// Characteristic polynomial det(sI - A), monic, via Faddeev-LeVerrier.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let identity = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &identity * coeffs[k - 1];
        let am = a * &m;
        coeffs[k] = -am.trace() / k as f64;
    }
    coeffs
}
