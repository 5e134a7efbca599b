use nalgebra::{DMatrix, DVector};

use super::record::IoRecord;
use crate::control_math::{tf_to_ss, StateSpaceModel, TimeDomain, TransferFunction};
use crate::error::{Error, Result};

/// Largest lag searched by [`estimate_delay`].
pub const MAX_DELAY_LAG: usize = 50;

const MIN_DELAY_SAMPLES: usize = 100;
const REFINEMENT_ITERATIONS: usize = 20;

fn differenced(x: &[f64]) -> Vec<f64> {
    let mut d = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &v in x {
        d.push(v - prev);
        prev = v;
    }
    d
}

/// Dead time in samples: the lag in `0..=50` maximizing the normalized
/// cross-correlation of the input increments with the output increments.
///
/// Differencing whitens a held (bit-period > 1) excitation and removes the
/// slow build-up of an integrating-like response that would otherwise pull
/// the peak of a plain input/output correlation far past the dead time.
/// Ties go to the smaller lag.
pub fn estimate_delay(record: &IoRecord) -> Result<usize> {
    let n = record.len();
    if n < MIN_DELAY_SAMPLES {
        return Err(Error::param("record", format!("need at least {MIN_DELAY_SAMPLES} samples, got {n}")));
    }
    let du = differenced(record.u());
    if du[1..].iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput("input is constant".into()));
    }
    let dy = differenced(record.y());
    let max_lag = MAX_DELAY_LAG.min(n - 2);
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in 0..=max_lag {
        let terms = n - lag;
        let c = (0..terms).map(|k| du[k] * dy[k + lag]).sum::<f64>() / terms as f64;
        if c > best.1 {
            best = (lag, c);
        }
    }
    Ok(best.0)
}

/// `100 * max(0, 1 - var(y - y_hat) / var(y))`.
pub fn vaf(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::Dimension(format!("y has {} samples, y_hat has {}", y.len(), y_hat.len())));
    }
    if y.is_empty() {
        return Err(Error::param("y", "must not be empty"));
    }
    let var = |v: &mut dyn Iterator<Item = f64>| {
        let data: Vec<f64> = v.collect();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / data.len() as f64
    };
    let vy = var(&mut y.iter().copied());
    if vy == 0.0 {
        return Err(Error::DegenerateInput("output has zero variance".into()));
    }
    let ve = var(&mut y.iter().zip(y_hat).map(|(a, b)| a - b));
    Ok(100.0 * (1.0 - ve / vy).max(0.0))
}

/// ARX model `A(q) y[k] = B(q) u[k - d]` and its state-space form.
///
/// `model` uses the standard convention `x+ = A x + B u`, `y = C x`, so its
/// output leads the record's `y` by one sample; its dead time is `d * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedModel {
    pub model: StateSpaceModel,
    pub transfer_function: TransferFunction,
    /// `[1, a_1, .., a_n]`.
    pub a: Vec<f64>,
    /// `[b_1, .., b_n]`.
    pub b: Vec<f64>,
    pub estimated_delay: usize,
    /// Simulation VAF on the estimation data, percent.
    pub fit_vaf: f64,
    /// One-step prediction residual variance of the final fit.
    pub residual_variance: f64,
    /// Akaike criterion `N ln(sigma^2) + 2 (2n)` of the one-step residuals.
    pub aic: f64,
}

impl IdentifiedModel {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// Free-run simulation in the record convention, from zero initial conditions.
    pub fn simulate(&self, u: &[f64]) -> Vec<f64> {
        free_run(&self.a, &self.b, self.estimated_delay, u)
    }

    pub fn vaf_on(&self, record: &IoRecord) -> Result<f64> {
        vaf(record.y(), &self.simulate(record.u()))
    }
}

fn free_run(a: &[f64], b: &[f64], delay: usize, u: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; u.len()];
    for k in 0..u.len() {
        let mut acc = 0.0;
        for i in 1..=n {
            if k >= i {
                acc -= a[i] * y[k - i];
            }
            if k + 1 >= delay + i {
                acc += b[i - 1] * u[k + 1 - delay - i];
            }
        }
        y[k] = acc;
    }
    y
}

/// Dead time in samples chosen by output error: for each lag in `0..=50`,
/// a plain least-squares ARX(`order`) fit is simulated free-run and the lag
/// with the smallest simulation residual wins (ties go to the smaller lag).
///
/// Unlike [`estimate_delay`], this uses the accumulated response rather than
/// single-sample increments, so it stays exact when output noise is large
/// next to the plant's per-sample input effect.
pub fn select_delay(record: &IoRecord, order: usize) -> Result<usize> {
    if order == 0 {
        return Err(Error::param("order", "must be at least 1"));
    }
    let n = record.len();
    if n < MIN_DELAY_SAMPLES.max(8 * order) {
        return Err(Error::param("record", format!("{n} samples are too few for order {order}")));
    }
    let (u, y) = (record.u(), record.y());
    if u.iter().all(|&v| v == u[0]) {
        return Err(Error::DegenerateInput("input is constant".into()));
    }
    let p = 2 * order;
    let max_lag = MAX_DELAY_LAG.min(n / 4 - order);
    let mut best: Option<(usize, f64)> = None;
    let mut phi = vec![0.0; p];
    for lag in 0..=max_lag {
        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        for k in order + lag..n {
            for i in 1..=order {
                phi[i - 1] = -y[k - i];
                phi[order + i - 1] = u[k + 1 - lag - i];
            }
            for r in 0..p {
                rhs[r] += phi[r] * y[k];
                for c in r..p {
                    gram[r * p + c] += phi[r] * phi[c];
                }
            }
        }
        let gram = DMatrix::from_fn(p, p, |r, c| gram[r.min(c) * p + r.max(c)]);
        let tol = 1e-12 * gram.amax();
        let Ok(pinv) = gram.pseudo_inverse(tol) else {
            continue;
        };
        let theta = pinv * DVector::from_vec(rhs);
        let (a, b) = split_theta(&theta, order);
        let loss: f64 = free_run(&a, &b, lag, u).iter().zip(y).map(|(s, v)| (v - s).powi(2)).sum();
        if loss.is_finite() && best.is_none_or(|(_, l)| loss < l) {
            best = Some((lag, loss));
        }
    }
    best.map(|(lag, _)| lag)
        .ok_or_else(|| Error::IllConditioned("no candidate delay gave a usable fit".into()))
}

/// Rows `k = start..N` of the ARX regression.
fn regression(u: &[f64], y: &[f64], order: usize, delay: usize) -> (DMatrix<f64>, DVector<f64>) {
    let start = order + delay;
    let rows = y.len() - start;
    let mut phi = DMatrix::zeros(rows, 2 * order);
    let mut target = DVector::zeros(rows);
    for (r, k) in (start..y.len()).enumerate() {
        for i in 1..=order {
            phi[(r, i - 1)] = -y[k - i];
            phi[(r, order + i - 1)] = u[k + 1 - delay - i];
        }
        target[r] = y[k];
    }
    (phi, target)
}

fn least_squares(phi: DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = phi.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax.is_finite() && smax > 0.0) || smin <= smax * 1e-13 {
        return Err(Error::IllConditioned(format!(
            "regressor is rank deficient (singular values {smin:.3e} .. {smax:.3e})"
        )));
    }
    svd.solve(target, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))
}

/// `x / A(q)` with zero initial conditions; `a = [1, a_1, ..]`.
fn inverse_filter(x: &[f64], a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for k in 0..x.len() {
        let mut v = x[k];
        for (i, ai) in a.iter().enumerate().skip(1) {
            if k >= i {
                v -= ai * out[k - i];
            }
        }
        out[k] = v;
    }
    out
}

fn split_theta(theta: &DVector<f64>, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![1.0];
    a.extend(theta.iter().take(order));
    (a, theta.iter().skip(order).copied().collect())
}

/// Least-squares ARX(`order`, `order`) fit on `delay`-compensated data,
/// refined by iterative prefiltering with the current `1 / A(q)`
/// (Steiglitz-McBride) to remove the bias that output noise causes in
/// plain equation-error least squares.
pub fn arx_fit(record: &IoRecord, order: usize, delay: usize) -> Result<IdentifiedModel> {
    if order == 0 {
        return Err(Error::param("order", "must be at least 1"));
    }
    let n = record.len();
    if n < 20 * order || n <= 4 * (order + delay) {
        return Err(Error::param("record", format!("{n} samples are too few for order {order} and delay {delay}")));
    }
    let (u, y) = (record.u(), record.y());
    if u.iter().all(|&v| v == u[0]) {
        return Err(Error::DegenerateInput("input is constant".into()));
    }
    let (phi, target) = regression(u, y, order, delay);
    let mut theta = least_squares(phi, &target)?;

    for _ in 0..REFINEMENT_ITERATIONS {
        let (a, _) = split_theta(&theta, order);
        let uf = inverse_filter(u, &a);
        let yf = inverse_filter(y, &a);
        if uf.iter().chain(&yf).any(|v| !v.is_finite() || v.abs() > 1e12) {
            log::warn!("prefilter went unstable; keeping the previous estimate");
            break;
        }
        let (phi, target) = regression(&uf, &yf, order, delay);
        let next = match least_squares(phi, &target) {
            Ok(t) => t,
            Err(_) => break,
        };
        let change = (&next - &theta).norm() / theta.norm().max(1e-300);
        theta = next;
        if change < 1e-13 {
            break;
        }
    }

    let (phi, target) = regression(u, y, order, delay);
    let residuals = target - phi * &theta;
    let residual_variance = residuals.norm_squared() / residuals.len() as f64;
    let aic = residuals.len() as f64 * residual_variance.max(f64::MIN_POSITIVE).ln() + 4.0 * order as f64;

    let (a, b) = split_theta(&theta, order);
    let domain = TimeDomain::Discrete { sample_period: record.dt() };
    let transfer_function = TransferFunction::new(&b, &a, domain)?.with_dead_time(delay as f64 * record.dt())?;
    let model = tf_to_ss(&transfer_function)?;
    let mut identified = IdentifiedModel {
        model,
        transfer_function,
        a,
        b,
        estimated_delay: delay,
        fit_vaf: 0.0,
        residual_variance,
        aic,
    };
    identified.fit_vaf = identified.vaf_on(record)?;
    Ok(identified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::{prbs_generate, PrbsConfig};

    fn prbs(len: usize, bit_period: usize) -> Vec<f64> {
        let c = PrbsConfig {
            n_bits: 10,
            amplitude: 1.0,
            bit_period,
            seed: 11,
        };
        prbs_generate(&c, len).unwrap()
    }

    fn shifted(u: &[f64], d: usize) -> Vec<f64> {
        (0..u.len()).map(|k| if k >= d { u[k - d] } else { 0.0 }).collect()
    }

    #[test]
    fn pure_shift_recovered_for_every_lag() {
        for bit_period in [1, 3] {
            let u = prbs(2000, bit_period);
            for d in 0..=MAX_DELAY_LAG {
                let rec = IoRecord::new(u.clone(), shifted(&u, d), 0.01).unwrap();
                assert_eq!(estimate_delay(&rec).unwrap(), d, "bit period {bit_period}");
            }
        }
    }

    #[test]
    fn output_error_delay_on_pure_shifts() {
        let u = prbs(2000, 1);
        for d in [0, 1, 7, 23, MAX_DELAY_LAG] {
            let rec = IoRecord::new(u.clone(), shifted(&u, d), 0.01).unwrap();
            assert_eq!(select_delay(&rec, 2).unwrap(), d);
        }
    }

    #[test]
    fn delay_rejects_constant_or_short_input() {
        let rec = IoRecord::new(vec![1.0; 200], vec![0.0; 200], 0.01).unwrap();
        assert!(matches!(estimate_delay(&rec), Err(Error::DegenerateInput(_))));
        let short = IoRecord::new(vec![1.0; 50], vec![0.0; 50], 0.01).unwrap();
        assert!(estimate_delay(&short).is_err());
    }

    #[test]
    fn vaf_definition() {
        let y = [1.0, -1.0, 2.0, -2.0];
        assert_eq!(vaf(&y, &y).unwrap(), 100.0);
        assert_eq!(vaf(&y, &[0.0; 4]).unwrap(), 0.0);
        assert!(vaf(&[1.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(vaf(&y, &[0.0]).is_err());
    }

    #[test]
    fn vaf_with_four_percent_error_variance() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let e = [0.2, -0.2, -0.2, 0.2];
        let y_hat: Vec<f64> = y.iter().zip(e).map(|(a, b)| a + b).collect();
        assert!((vaf(&y, &y_hat).unwrap() - 96.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_second_order_recovered() {
        let (a1, a2, b1, b2, d) = (-1.5, 0.7, 0.3, 0.1, 3);
        let u = prbs(600, 1);
        let mut y = vec![0.0; u.len()];
        for k in 0..u.len() {
            let at = |i: usize| if k >= i { y[k - i] } else { 0.0 };
            let ut = |i: usize| if k + 1 >= d + i { u[k + 1 - d - i] } else { 0.0 };
            y[k] = -a1 * at(1) - a2 * at(2) + b1 * ut(1) + b2 * ut(2);
        }
        let rec = IoRecord::new(u, y, 0.05).unwrap();
        let m = arx_fit(&rec, 2, d).unwrap();
        for (got, want) in m.a.iter().zip([1.0, a1, a2]).chain(m.b.iter().zip([b1, b2])) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(m.fit_vaf > 99.999_999);
        assert!((m.model.dead_time() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn constant_input_is_rejected() {
        let rec = IoRecord::new(vec![1.0; 200], (0..200).map(|k| k as f64).collect(), 0.01).unwrap();
        assert!(arx_fit(&rec, 2, 0).is_err());
    }
}
