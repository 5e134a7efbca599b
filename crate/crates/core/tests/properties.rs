//! Property tests over the numerical building blocks.

use dmrac_core::control_math::{
    discretize, evaluate, lyapunov_solve, model_order_reduce, ss_to_tf, tf_to_ss, DiscretizationMethod,
    StateSpaceModel, TimeDomain, TransferFunction,
};
use dmrac_core::network::{CommGraph, Edge};
use dmrac_core::sim::{AgentTrace, TraceLog};
use dmrac_core::sysid::{arx_fit, estimate_delay, prbs_generate, vaf, IoRecord, PrbsConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn square_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

/// Shifts a random matrix left of the imaginary axis by more than its norm.
fn hurwitz(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (square_matrix(n), 0.2f64..2.0).prop_map(move |(m, margin)| {
        let shift = m.norm() + margin;
        m - DMatrix::identity(n, n) * shift
    })
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_real_part(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Monic polynomial with roots drawn from the open left half-plane.
fn stable_poly(max_degree: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..8.0, 1..=max_degree).prop_map(|roots| {
        roots.iter().fold(vec![1.0], |p, r| {
            let mut out = vec![0.0; p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                out[i] += c;
                out[i + 1] += c * r;
            }
            out
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_residual_is_small(a in (2usize..=4).prop_flat_map(hurwitz)) {
        let n = a.nrows();
        let q = DMatrix::identity(n, n);
        let p = lyapunov_solve(&a, &q).unwrap();
        let residual = (&p * &a + a.transpose() * &p + &q).norm();
        prop_assert!(residual <= 1e-9 * (1.0 + p.norm()), "residual {residual}");
        prop_assert!(p.clone().cholesky().is_some(), "P is not positive definite");
    }

    #[test]
    fn tf_ss_round_trip(den in stable_poly(4), num_seed in prop::collection::vec(-5.0f64..5.0, 1..=5)) {
        let num: Vec<f64> = num_seed.into_iter().take(den.len()).collect();
        let tf = TransferFunction::continuous(&num, &den).unwrap();
        let back = ss_to_tf(&tf_to_ss(&tf).unwrap()).unwrap();
        for w in [0.1, 1.0, 7.0, 50.0] {
            let (a, b) = (evaluate(&tf, w).unwrap(), evaluate(&back, w).unwrap());
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()), "w {w}: {a} vs {b}");
        }
    }

    #[test]
    fn reduction_matches_magnitude_and_phase(
        den in stable_poly(3),
        k in 0.5f64..50.0,
        delay in 0.0f64..0.1,
        w in 0.5f64..20.0,
    ) {
        let plant = TransferFunction::continuous(&[k], &den).unwrap().with_dead_time(delay).unwrap();
        let r = model_order_reduce(&plant, w, w).unwrap();
        let full = evaluate(&plant, w).unwrap();
        let reduced = evaluate(&r.transfer_function(), w).unwrap();
        prop_assert!((reduced.norm() - full.norm()).abs() <= 1e-10 * full.norm());
        if !r.delay_clamped {
            prop_assert!((reduced - full).norm() <= 1e-8 * full.norm(), "{reduced} vs {full}");
        }
        prop_assert!(r.delay >= 0.0);
    }

    #[test]
    fn discretization_preserves_stability(a in (1usize..=4).prop_flat_map(hurwitz), t in 0.001f64..0.5) {
        let n = a.nrows();
        prop_assert!(max_real_part(&a) < 0.0);
        let sys = StateSpaceModel::new(
            a,
            DMatrix::from_element(n, 1, 1.0),
            DMatrix::from_element(1, n, 1.0),
            DMatrix::zeros(1, 1),
            TimeDomain::Continuous,
        )
        .unwrap();
        for method in [DiscretizationMethod::ZeroOrderHold, DiscretizationMethod::Bilinear] {
            let d = discretize(&sys, t, method).unwrap();
            prop_assert!(spectral_radius(d.a()) < 1.0, "{method:?}");
        }
    }

    #[test]
    fn arx_recovers_noiseless_coefficients(
        r1 in -0.9f64..0.9,
        r2 in -0.9f64..0.9,
        b0 in 0.1f64..2.0,
        b1 in -2.0f64..2.0,
        delay in 0usize..=10,
        seed in 0u64..1000,
    ) {
        let (a1, a2) = (-(r1 + r2), r1 * r2);
        let cfg = PrbsConfig { n_bits: 10, amplitude: 1.0, bit_period: 1, seed };
        let u = prbs_generate(&cfg, 2000).unwrap();
        let at = |v: &[f64], k: isize| if k < 0 { 0.0 } else { v[k as usize] };
        let mut y = vec![0.0; u.len()];
        for k in 0..u.len() as isize {
            let d = delay as isize;
            y[k as usize] = -a1 * at(&y, k - 1) - a2 * at(&y, k - 2) + b0 * at(&u, k - d) + b1 * at(&u, k - d - 1);
        }
        let rec = IoRecord::new(u, y, 0.01).unwrap();
        let m = arx_fit(&rec, 2, delay).unwrap();
        let expected = [1.0, a1, a2, b0, b1];
        let got = [m.a[0], m.a[1], m.a[2], m.b[0], m.b[1]];
        for (e, g) in expected.iter().zip(&got) {
            prop_assert!((e - g).abs() < 1e-6, "expected {expected:?}, got {got:?}");
        }
    }

    #[test]
    fn vaf_decreases_with_residual(
        y in prop::collection::vec(-1.0f64..1.0, 20..200),
        noise_seed in prop::collection::vec(-1.0f64..1.0, 200),
        s1 in 0.0f64..1.0,
        s2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let with = |s: f64| -> Vec<f64> { y.iter().zip(&noise_seed).map(|(v, n)| v + s * n).collect() };
        let (v_lo, v_hi) = (vaf(&y, &with(lo)).unwrap(), vaf(&y, &with(hi)).unwrap());
        prop_assert!(v_hi <= v_lo + 1e-9, "{v_hi} > {v_lo}");
        prop_assert!((0.0..=100.0).contains(&v_hi));
        prop_assert!((vaf(&y, &y).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(n in 1usize..8, picks in prop::collection::vec((0usize..8, 0usize..8), 0..20)) {
        let mut g = CommGraph::new(n);
        for (i, j) in picks {
            let (i, j) = (i % n, j % n);
            if i != j && !g.edges().iter().any(|e| e.from == i && e.to == j) {
                g.add_edge(i, j, 0.0).unwrap();
            }
        }
        let l = g.laplacian();
        prop_assert!(l.row_iter().all(|r| r.sum() == 0.0));
        let balanced = l.column_iter().all(|c| c.sum() == 0.0);
        prop_assert_eq!(g.weight_balanced(), balanced);
    }

    #[test]
    fn trace_csv_round_trips(
        steps in 1usize..40,
        dt in prop::sample::select(vec![0.001, 0.002, 0.01, 0.05]),
        values in prop::collection::vec(-1e3f64..1e3, 40 * 8),
    ) {
        let series = |offset: usize| values[offset * 40..offset * 40 + steps].to_vec();
        let trace = TraceLog {
            dt,
            reference: series(0),
            agents: vec![
                AgentTrace {
                    name: "leader".into(),
                    velocity: series(1),
                    control: series(2),
                    error: series(3),
                    states: vec![series(4), series(5)],
                    gain_names: Vec::new(),
                    gains: Vec::new(),
                },
                AgentTrace {
                    name: "f1".into(),
                    velocity: series(5),
                    control: series(6),
                    error: series(7),
                    states: vec![series(4), series(2)],
                    gain_names: vec!["k_m0".into(), "k_r".into()],
                    gains: vec![series(1), series(3)],
                },
            ],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let back = TraceLog::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.reference, &trace.reference);
        prop_assert_eq!(&back.agents, &trace.agents);
        if steps >= 2 {
            prop_assert!((back.dt - dt).abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn delay_estimate_is_exact_on_shifts(lag in 0usize..=50, seed in 0u64..10_000, gain in 0.1f64..10.0) {
        let cfg = PrbsConfig { n_bits: 12, amplitude: 1.0, bit_period: 1, seed };
        let u = prbs_generate(&cfg, 4000).unwrap();
        let y: Vec<f64> = (0..u.len()).map(|k| if k >= lag { gain * u[k - lag] } else { 0.0 }).collect();
        let rec = IoRecord::new(u, y, 0.002).unwrap();
        prop_assert_eq!(estimate_delay(&rec).unwrap(), lag);
    }
}

#[test]
fn every_lag_up_to_fifty_is_recovered() {
    let cfg = PrbsConfig {
        n_bits: 12,
        amplitude: 1.0,
        bit_period: 1,
        seed: 7,
    };
    let u = prbs_generate(&cfg, 4000).unwrap();
    for lag in 0..=50 {
        let y: Vec<f64> = (0..u.len()).map(|k| if k >= lag { u[k - lag] } else { 0.0 }).collect();
        let rec = IoRecord::new(u.clone(), y, 0.002).unwrap();
        assert_eq!(estimate_delay(&rec).unwrap(), lag);
    }
}

#[test]
fn single_edge_graph_is_valid() {
    let g = CommGraph::from_edges(2, [Edge { from: 0, to: 1, delay: 0.1 }]).unwrap();
    assert_eq!(g.validate_assumption1(), Ok(vec![0, 1]));
}
