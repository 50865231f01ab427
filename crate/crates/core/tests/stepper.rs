use epbm_core::expansion::{
    eab_coefficients, generate_coefficients, legendre_spec, MethodSpec, Partitioning, Strategy,
};
use epbm_core::linalg::{expm, DenseOperator};
use epbm_core::nodes::legendre_epbm_nodes;
use epbm_core::phi::phi_scalar;
use epbm_core::stepper::{
    integrate, integrate_unpartitioned, BlockState, MethodConfig, Semilinear, Stepper, Unpartitioned,
    UnpartitionedStepper,
};
use epbm_core::{CMatrix, CVector, Complex64, LinearOperator};
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn scalar(x: f64) -> CVector {
    CVector::from_element(1, c(x))
}

fn coeffs(q: usize, alpha: f64) -> epbm_core::expansion::MethodCoefficients {
    generate_coefficients(&legendre_spec(q, alpha, Partitioning::Partitioned).unwrap()).unwrap()
}

/// 5-point Gauss-Legendre rule on [a, b], `panels` panels.
fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for i in 0..5 {
            s += W[i] * f(mid + 0.5 * h * X[i]);
        }
    }
    s * 0.5 * h
}

#[test]
fn zero_nonlinearity_propagates_first_input() {
    let diag = CVector::from_vec(vec![c(-1.0), Complex64::new(-0.5, 2.0), c(0.3)]);
    let prob = Semilinear::new(diag.clone(), |_, y: &CVector| CVector::zeros(y.len())).unwrap();
    let m = coeffs(4, 2.0);
    let r = 0.2;
    let mut stepper = Stepper::new(&prob, r, 1).unwrap();
    let y: Vec<CVector> = (0..4)
        .map(|j| CVector::from_fn(3, |i, _| Complex64::new(1.0 + i as f64, j as f64)))
        .collect();
    let state = BlockState::new(y.clone(), 0.0, r).unwrap();
    let next = stepper.step_partitioned(&m, &state).unwrap();
    for (j, out) in next.y.iter().enumerate() {
        let eta = m.outputs[j].eta;
        for i in 0..3 {
            let want = (diag[i] * eta * r).exp() * y[0][i];
            assert!((out[i] - want).norm() < 1e-14 * want.norm());
        }
    }
    assert!((next.t - r * 2.0).abs() < 1e-15);
}

#[test]
fn constant_forcing_without_linear_part() {
    let prob = Semilinear::new(scalar(0.0), |_, _: &CVector| scalar(3.0)).unwrap();
    let m = coeffs(2, 2.0);
    let r = 0.25;
    let mut stepper = Stepper::new(&prob, r, 1).unwrap();
    let state = BlockState::new(vec![scalar(1.0), scalar(1.75)], 0.0, r).unwrap();
    let next = stepper.step_partitioned(&m, &state).unwrap();
    for (j, out) in next.y.iter().enumerate() {
        let want = 1.0 + r * m.outputs[j].eta.re * 3.0;
        assert!((out[0] - c(want)).norm() < 1e-14);
    }
}

#[test]
fn linear_forcing_matches_closed_form() {
    // y' = -y + t, y = t - 1 + C e^{-t}
    let exact = |t: f64| t - 1.0 + 2.0 * (-t).exp();
    let prob = Semilinear::new(scalar(-1.0), |t: Complex64, _: &CVector| CVector::from_element(1, t)).unwrap();
    let m = coeffs(3, 2.0);
    let r = 0.3;
    let tn = 0.7;
    let z = m.nodes().to_vec();
    let y = z.iter().map(|zj| scalar(exact(tn + r * zj.re))).collect();
    let mut stepper = Stepper::new(&prob, r, 1).unwrap();
    let next = stepper.step_partitioned(&m, &BlockState::new(y, tn, r).unwrap()).unwrap();
    for (j, out) in next.y.iter().enumerate() {
        let want = exact(tn + r * (z[j].re + 2.0));
        assert!((out[0].re - want).abs() < 1e-11 * want.abs().max(1.0), "j={j}");
    }
}

#[test]
fn parallel_runs_are_bitwise_identical() {
    let n = 64;
    let diag = CVector::from_fn(n, |i, _| Complex64::new(-(i as f64), 0.5 * i as f64));
    let prob = Semilinear::new(diag, |t: Complex64, y: &CVector| {
        y.map(|v| v * v * c(0.1) + (t * 0.3).sin())
    })
    .unwrap();
    for q in [3usize, 4, 6] {
        let m = coeffs(q, 2.0);
        let run = |threads: usize| {
            let mut stepper = Stepper::new(&prob, 0.01, threads).unwrap();
            let y0 = CVector::from_fn(n, |i, _| c((i as f64 * 0.1).cos()));
            let mut s = BlockState::constant(&y0, q, 0.0, 0.01).unwrap();
            for _ in 0..20 {
                s = stepper.step_partitioned(&m, &s).unwrap();
            }
            s
        };
        let a = run(1);
        for threads in [2, q] {
            let b = run(threads);
            assert_eq!(a.checksum(), b.checksum());
            assert_eq!(a.y, b.y);
        }
    }
}

#[test]
fn evaluation_counts_match_cost_model() {
    let prob = Semilinear::new(scalar(-1.0), |_, y: &CVector| y.map(|v| v * v)).unwrap();
    for q in 2..=6 {
        let m = coeffs(q, 2.0);
        let mut stepper = Stepper::new(&prob, 0.01, 1).unwrap();
        let mut s = BlockState::constant(&scalar(0.5), q, 0.0, 0.01).unwrap();
        for k in 1..=5 {
            s = stepper.step_partitioned(&m, &s).unwrap();
            assert_eq!(stepper.evaluations(), k * (q - 1));
        }
    }
    let out = integrate(&prob, &MethodConfig::Eab { p: 3 }, &scalar(0.5), 0.0, 1.0, 0.01, 1).unwrap();
    assert_eq!(out.evaluations, out.steps - 1);
}

#[test]
fn composite_with_zero_sweeps_is_the_propagator() {
    let prob = Semilinear::new(CVector::from_vec(vec![c(-2.0), Complex64::new(0.0, 3.0)]), |_, y: &CVector| {
        y.map(|v| v * v * c(0.5))
    })
    .unwrap();
    let prop = coeffs(4, 2.0);
    let iter = coeffs(4, 0.0);
    let y0 = CVector::from_vec(vec![c(0.3), c(0.2)]);
    let mut a = Stepper::new(&prob, 0.05, 1).unwrap();
    let mut b = Stepper::new(&prob, 0.05, 1).unwrap();
    let s = BlockState::constant(&y0, 4, 0.0, 0.05).unwrap();
    let x = a.step_composite(&prop, &iter, 0, &s).unwrap();
    let y = b.step_partitioned(&prop, &s).unwrap();
    assert_eq!(x, y);

    let other = generate_coefficients(&MethodSpec::new(
        epbm_core::nodes::NodeSet::custom(vec![c(-1.0), c(-0.5), c(0.0), c(0.5)]).unwrap(),
        Strategy::Pmfc(2),
        vec![0; 4],
        0.0,
        Partitioning::Partitioned,
    ).unwrap())
    .unwrap();
    assert!(a.step_composite(&prop, &other, 1, &s).is_err());
}

#[test]
fn iterator_fixed_point_is_preserved() {
    let prob = Semilinear::new(scalar(-1.5), |t: Complex64, y: &CVector| y.map(|v| (v * v).sin() * c(0.7) + t)).unwrap();
    let iter = coeffs(5, 0.0);
    let mut stepper = Stepper::new(&prob, 0.1, 1).unwrap();
    let mut s = stepper.bootstrap_initial_block(&iter, &scalar(0.4), 0.0, 0).unwrap();
    for _ in 0..200 {
        s = stepper.step_partitioned(&iter, &s).unwrap();
    }
    let again = stepper.step_partitioned(&iter, &s).unwrap();
    for (a, b) in s.y.iter().zip(&again.y) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn bootstrap_examples() {
    let prob = Semilinear::new(scalar(0.0), |_, y: &CVector| CVector::zeros(y.len())).unwrap();
    let iter = coeffs(4, 0.0);
    let mut stepper = Stepper::new(&prob, 0.1, 1).unwrap();
    for k in [0, 1, 4] {
        let s = stepper.bootstrap_initial_block(&iter, &scalar(2.5), 1.0, k).unwrap();
        assert!(s.y.iter().all(|v| v[0] == c(2.5)));
        assert!((s.t - 1.1).abs() < 1e-15);
    }
}

/// Error at the far node of the bootstrap block for `y' = y`.
fn bootstrap_errors(q: usize, r: f64, sweeps: usize) -> Vec<f64> {
    let prob = Semilinear::new(scalar(0.0), |_, y: &CVector| y.clone()).unwrap();
    let iter = coeffs(q, 0.0);
    let mut stepper = Stepper::new(&prob, r, 1).unwrap();
    let zq = iter.nodes()[q - 1].re;
    let exact = (r * (1.0 + zq)).exp();
    (0..=sweeps)
        .map(|k| {
            let s = stepper.bootstrap_initial_block(&iter, &scalar(1.0), 0.0, k).unwrap();
            (s.y[q - 1][0].re - exact).abs()
        })
        .collect()
}

#[test]
fn bootstrap_gains_a_factor_of_r_per_sweep() {
    let errs = bootstrap_errors(4, 0.1, 4);
    for k in 1..4 {
        let ratio = errs[k] / errs[k - 1];
        assert!((0.02..=0.3).contains(&ratio), "sweep {k}: {errs:?}");
    }
}

#[test]
fn eab2_matches_expanded_formula() {
    let prob = Semilinear::new(scalar(-1.0), |_, y: &CVector| y.clone()).unwrap();
    let m = eab_coefficients(2).unwrap();
    let mut stepper = Stepper::new(&prob, 0.1, 1).unwrap();
    let out = stepper.step_eab(&m, &[scalar(0.0), scalar(1.0)], &scalar(1.0)).unwrap();
    let z = c(-0.1);
    let want = phi_scalar(0, z).unwrap() + phi_scalar(1, z).unwrap() * 0.1 + phi_scalar(2, z).unwrap() * 0.1;
    assert!((out[0] - want).norm() < 1e-15);

    let zero = Semilinear::new(scalar(-2.0), |_, y: &CVector| CVector::zeros(y.len())).unwrap();
    let mut stepper = Stepper::new(&zero, 0.1, 1).unwrap();
    let out = stepper.step_eab(&m, &[scalar(0.0), scalar(0.0)], &scalar(1.5)).unwrap();
    assert!((out[0] - c(1.5 * (-0.2f64).exp())).norm() < 1e-15);

    let flat = Semilinear::new(scalar(0.0), |_, _: &CVector| scalar(4.0)).unwrap();
    let mut stepper = Stepper::new(&flat, 0.1, 1).unwrap();
    let out = stepper.step_eab(&m, &[scalar(4.0), scalar(4.0)], &scalar(1.0)).unwrap();
    assert!((out[0] - c(1.4)).norm() < 1e-15);

    assert!(stepper.step_eab(&m, &[scalar(4.0)], &scalar(1.0)).is_err());
}

#[test]
fn etdrk2_examples() {
    let zero = Semilinear::new(scalar(-2.0), |_, y: &CVector| CVector::zeros(y.len())).unwrap();
    let mut stepper = Stepper::new(&zero, 0.1, 1).unwrap();
    let out = stepper.step_etdrk2(&scalar(1.5), 0.0).unwrap();
    assert!((out[0] - c(1.5 * (-0.2f64).exp())).norm() < 1e-15);

    let f = |t: f64, y: f64| y.sin() + t;
    let prob = Semilinear::new(scalar(0.0), move |t: Complex64, y: &CVector| scalar(f(t.re, y[0].re))).unwrap();
    let h = 0.1;
    let mut stepper = Stepper::new(&prob, h, 1).unwrap();
    let (t, y) = (0.3, 0.8);
    let out = stepper.step_etdrk2(&scalar(y), t).unwrap();
    let n0 = f(t, y);
    let heun = y + h / 2.0 * (n0 + f(t + h, y + h * n0));
    assert!((out[0].re - heun).abs() < 1e-15);
}

/// `y' = -y + (u² - y²)/4 + cos t + u`, `u = 2 + sin t`.
fn smooth_problem() -> impl epbm_core::stepper::SemilinearProblem {
    Semilinear::new(scalar(-1.0), |t: Complex64, y: &CVector| {
        let u = t.sin() + 2.0;
        y.map(|v| (u * u - v * v) * 0.25 + t.cos() + u)
    })
    .unwrap()
}

fn fitted_order(method: MethodConfig, hs: &[f64], t_final: f64) -> f64 {
    let prob = smooth_problem();
    let exact = 2.0 + t_final.sin();
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| {
            let out = integrate(&prob, &method, &scalar(2.0), 0.0, t_final, h, 1).unwrap();
            (h.ln(), (out.y[0].re - exact).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn convergence_orders_on_smooth_problem() {
    for q in [2usize, 3, 4] {
        let hs: Vec<f64> = (0..5).map(|i| 0.2 / 2f64.powi(i)).collect();
        let order = fitted_order(MethodConfig::epbm(q, 2.0), &hs, 2.0);
        assert!(order >= q as f64 - 0.5 && order <= q as f64 + 0.7, "q={q}: {order}");
    }
    let hs: Vec<f64> = (0..5).map(|i| 0.1 / 2f64.powi(i)).collect();
    for method in [MethodConfig::Eab { p: 2 }, MethodConfig::Etdrk2] {
        let order = fitted_order(method, &hs, 2.0);
        assert!((1.5..=2.7).contains(&order), "{method}: {order}");
    }
    let order = fitted_order(MethodConfig::Eab { p: 4 }, &hs, 2.0);
    assert!((3.5..=4.7).contains(&order), "eab4: {order}");
}

#[test]
fn classical_limit_matches_block_adams_quadrature() {
    // With L = 0 each output is y_1 + ∫_{-1}^{z_j+α} P(s) ds, where P
    // interpolates r N at the Legendre nodes.
    let g = |t: f64, y: f64| (t * 1.3).cos() * y + 0.2 * y * y;
    let prob = Semilinear::new(scalar(0.0), move |t: Complex64, y: &CVector| scalar(g(t.re, y[0].re))).unwrap();
    for q in 2..=6 {
        let m = coeffs(q, 2.0);
        let r = 0.15;
        let tn = 0.4;
        let z: Vec<f64> = m.nodes().iter().map(|v| v.re).collect();
        let y: Vec<f64> = (0..q).map(|j| 1.0 + 0.1 * j as f64).collect();
        let data: Vec<f64> = (1..q).map(|k| r * g(tn + r * z[k], y[k])).collect();
        let interp = |s: f64| {
            (1..q)
                .map(|k| {
                    let mut l = 1.0;
                    for i in 1..q {
                        if i != k {
                            l *= (s - z[i]) / (z[k] - z[i]);
                        }
                    }
                    l * data[k - 1]
                })
                .sum::<f64>()
        };
        let state = BlockState::new(y.iter().map(|&v| scalar(v)).collect(), tn, r).unwrap();
        let mut stepper = Stepper::new(&prob, r, 1).unwrap();
        let next = stepper.step_partitioned(&m, &state).unwrap();
        for j in 0..q {
            let want = y[0] + gauss(interp, -1.0, z[j] + 2.0, 4);
            assert!((next.y[j][0].re - want).abs() < 1e-12, "q={q} j={j}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polynomial_forcing_is_integrated_exactly(
        q in 2usize..=5,
        lam in prop::collection::vec(-50.0f64..0.0, 3),
        coef in prop::collection::vec(-1.0f64..1.0, 4),
        r in 0.05f64..0.5,
        tn in 0.0f64..1.0,
        serial in any::<bool>(),
    ) {
        let deg = q - 2;
        let coef = std::sync::Arc::new(coef[..=deg].to_vec());
        let make_poly = |cf: std::sync::Arc<Vec<f64>>| move |t: f64| cf.iter().rev().fold(0.0, |acc, a| acc * t + a);
        let poly = make_poly(coef.clone());
        let forcing = make_poly(coef);
        let diag = CVector::from_iterator(3, lam.iter().map(|&l| c(l)));
        let prob = Semilinear::new(diag, move |t: Complex64, y: &CVector| CVector::from_element(y.len(), c(forcing(t.re)))).unwrap();
        // exact solution through y(0) = 1 for each component
        let exact = |l: f64, t: f64| (l * t).exp() + gauss(|s| (l * (t - s)).exp() * poly(s), 0.0, t, 64);
        let strategy = if serial { Strategy::Smfc(2) } else { Strategy::Pmfc(2) };
        let spec = MethodSpec::new(legendre_epbm_nodes(q).unwrap(), strategy, vec![0; q], 2.0, Partitioning::Partitioned).unwrap();
        let m = generate_coefficients(&spec).unwrap();
        let z: Vec<f64> = m.nodes().iter().map(|v| v.re).collect();
        let y: Vec<CVector> = z.iter().map(|zj| CVector::from_iterator(3, lam.iter().map(|&l| c(exact(l, tn + r * zj))))).collect();
        let mut stepper = Stepper::new(&prob, r, 1).unwrap();
        let next = stepper.step_partitioned(&m, &BlockState::new(y, tn, r).unwrap()).unwrap();
        for j in 0..q {
            for (i, &l) in lam.iter().enumerate() {
                let want = exact(l, tn + r * (z[j] + 2.0));
                prop_assert!((next.y[j][i].re - want).abs() <= 1e-10 * want.abs().max(1.0), "q={} j={} l={}", q, j, l);
            }
        }
    }
}

fn dense_lambda() -> CMatrix {
    // V diag(-1, -3, 2i, -0.5+i) V^{-1}
    let v = CMatrix::from_fn(4, 4, |i, j| c(if i == j { 2.0 } else { 0.3 * (i as f64 - j as f64) }));
    let d = CMatrix::from_diagonal(&CVector::from_vec(vec![
        c(-1.0),
        c(-3.0),
        Complex64::new(0.0, 2.0),
        Complex64::new(-0.5, 1.0),
    ]));
    &v * d * v.clone().try_inverse().unwrap()
}

#[test]
fn unpartitioned_linear_problem_is_exact() {
    let lam = dense_lambda();
    let op = DenseOperator(lam.clone());
    let prob = Unpartitioned::new(4, |y: &CVector| op.apply(y), |_: &CVector, v: &CVector| op.apply(v));
    let y0 = CVector::from_vec(vec![c(1.0), c(-0.5), c(0.25), Complex64::new(0.0, 1.0)]);
    for q in [2usize, 3, 4] {
        for alpha in [1.0, 2.0] {
            let h = 0.05;
            let out = integrate_unpartitioned(&prob, &MethodConfig::epbm(q, alpha), &y0, 100.0 * h, h, None).unwrap();
            let want = expm(&(&lam * c(100.0 * h))).unwrap() * &y0;
            assert!((&out.y - &want).norm() < 1e-12 * want.norm(), "q={q} alpha={alpha}");
        }
    }
}

#[test]
fn unpartitioned_constant_rhs() {
    let prob = Unpartitioned::new(2, |_: &CVector| CVector::from_vec(vec![c(1.0), c(-2.0)]), |_: &CVector, v: &CVector| v * c(0.0));
    let m = generate_coefficients(&legendre_spec(3, 2.0, Partitioning::Unpartitioned).unwrap()).unwrap();
    let r = 0.1;
    let mut stepper = UnpartitionedStepper::new(&prob, r).unwrap();
    let y = vec![CVector::from_vec(vec![c(0.5), c(0.5)]); 3];
    let next = stepper.step_unpartitioned(&m, &BlockState::new(y, 0.0, r).unwrap()).unwrap();
    for (j, out) in next.y.iter().enumerate() {
        let s = r * m.outputs[j].eta.re;
        assert!((out[0] - c(0.5 + s)).norm() < 1e-14);
        assert!((out[1] - c(0.5 - 2.0 * s)).norm() < 1e-14);
    }
}

/// Local linearization leaves a remainder quadratic in `y - y_b`, so these
/// runs may converge faster than the nominal order. Only the lower bound is
/// checked, against a sixth-order run at a much smaller step.
#[test]
fn unpartitioned_nonlinear_order() {
    let prob = Unpartitioned::new(
        2,
        |y: &CVector| CVector::from_vec(vec![y[1] * y[1], -y[0]]),
        |b: &CVector, v: &CVector| CVector::from_vec(vec![b[1] * v[1] * 2.0, -v[0]]),
    );
    let y0 = CVector::from_vec(vec![c(0.5), c(1.0)]);
    let t_final = 1.0;
    let reference = integrate_unpartitioned(&prob, &MethodConfig::epbm(6, 2.0), &y0, t_final, 0.0025, Some(1e-14))
        .unwrap()
        .y;
    for q in [2usize, 3, 4] {
        let err = |h: f64| {
            let out = integrate_unpartitioned(&prob, &MethodConfig::epbm(q, 2.0), &y0, t_final, h, Some(1e-14)).unwrap();
            (&out.y - &reference).norm()
        };
        let (e1, e2) = (err(0.05), err(0.025));
        let order = (e1 / e2).log2();
        assert!(order > q as f64 - 0.3, "q={q} order {order} ({e1:e}, {e2:e})");
    }
}

#[test]
fn state_validation() {
    let prob = Semilinear::new(scalar(-1.0), |_, y: &CVector| y.clone()).unwrap();
    let m = coeffs(3, 2.0);
    let mut stepper = Stepper::new(&prob, 0.1, 1).unwrap();
    let wrong_q = BlockState::constant(&scalar(1.0), 2, 0.0, 0.1).unwrap();
    assert!(stepper.step_partitioned(&m, &wrong_q).is_err());
    let wrong_r = BlockState::constant(&scalar(1.0), 3, 0.0, 0.2).unwrap();
    assert!(stepper.step_partitioned(&m, &wrong_r).is_err());
    let wrong_dim = BlockState::constant(&CVector::zeros(2), 3, 0.0, 0.1).unwrap();
    assert!(stepper.step_partitioned(&m, &wrong_dim).is_err());
    assert!(BlockState::constant(&scalar(1.0), 3, 0.0, 0.0).is_err());
}

#[test]
fn divergence_carries_step_index() {
    let prob = Semilinear::new(scalar(0.0), |_, y: &CVector| y.map(|v| v * v)).unwrap();
    let err = integrate(&prob, &MethodConfig::epbm(3, 2.0), &scalar(10.0), 0.0, 20.0, 0.5, 1).unwrap_err();
    match err {
        epbm_core::Error::Divergence { step, method } => {
            assert!(step >= 1);
            assert!(method.unwrap().starts_with("epbm"));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn method_strings_round_trip() {
    for s in ["epbm-legendre:q=4,alpha=2,kappa=1", "eab:p=2", "etdrk2", "epbm-imag:q=3,alpha=2,kappa=0"] {
        let m: MethodConfig = s.parse().unwrap();
        let again: MethodConfig = m.to_string().parse().unwrap();
        assert_eq!(m, again);
    }
    assert!("epbm:alpha=2".parse::<MethodConfig>().is_err());
    assert!("rk4".parse::<MethodConfig>().is_err());
    assert!("eab:p=two".parse::<MethodConfig>().is_err());
}

#[test]
fn imaginary_node_method_converges() {
    let prob = smooth_problem();
    let exact = 2.0 + 1f64.sin();
    let m: MethodConfig = "epbm-imag:q=4,alpha=2".parse().unwrap();
    let e1 = (integrate(&prob, &m, &scalar(2.0), 0.0, 1.0, 0.1, 1).unwrap().y[0] - c(exact)).norm();
    let e2 = (integrate(&prob, &m, &scalar(2.0), 0.0, 1.0, 0.05, 1).unwrap().y[0] - c(exact)).norm();
    assert!(e2 < e1 / 4.0, "{e1:e} {e2:e}");
}
