use proptest::prelude::*;

use periodyn::certify::{
    alpha_residual, certify, check_condition_2_1, find_xi, row_residual, search_thm_a_3_1, weighted_norm, CertifyOptions,
    ConstantDelayForm, ThmASearch,
};
use periodyn::ensemble::instance;
use periodyn::integrate::{simulate, InitialCondition, SimOptions};
use periodyn::kernels::{DelayKernel, DensityShape};
use periodyn::model::{Activation, NetworkModel, PeriodicExpr, Term, Wave};

fn wave_strategy() -> impl Strategy<Value = Wave> {
    prop::sample::select(Wave::ALL.to_vec())
}

fn expr_strategy() -> impl Strategy<Value = PeriodicExpr> {
    (
        -3.0f64..3.0,
        prop::collection::vec((-2.0f64..2.0, wave_strategy(), 1u32..6), 0..4),
    )
        .prop_map(|(c, waves)| {
            let mut terms = vec![Term::Const(c)];
            terms.extend(waves.into_iter().map(|(amp, wave, k)| Term::Wave { amp, wave, k }));
            PeriodicExpr::from_terms(terms)
        })
}

fn shape_strategy() -> impl Strategy<Value = DensityShape> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|rate| DensityShape::Exponential { rate }),
        (0.1f64..3.0).prop_map(|width| DensityShape::Uniform { width }),
        (0.2f64..3.0, prop::collection::vec(0.0f64..2.0, 2..8)).prop_map(|(width, values)| DensityShape::Table { width, values }),
    ]
}

proptest! {
    #[test]
    fn expressions_repeat_with_detected_period(e in expr_strategy(), t in -50.0f64..50.0, k in 1u32..4) {
        // every term has period 2 / k' or 1 / k', so 2 is always a period
        prop_assert!(e.has_period(2.0));
        let shifted = e.eval(t + 2.0 * k as f64);
        prop_assert!((shifted - e.eval(t)).abs() <= 1e-10 * (1.0 + e.eval(t).abs()));
    }

    #[test]
    fn abs_bound_dominates(e in expr_strategy(), t in -10.0f64..10.0) {
        prop_assert!(e.eval(t).abs() <= e.abs_bound() + 1e-12);
    }

    #[test]
    fn builtin_activations_are_lipschitz(x in -50.0f64..50.0, h in -5.0f64..5.0) {
        for act in [Activation::tanh(), Activation::arctan(), Activation::identity()] {
            let diff = (act.eval(x + h) - act.eval(x)).abs();
            prop_assert!(diff <= act.lipschitz * h.abs() * (1.0 + 1e-12) + 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn exp_moment_is_monotone_and_reduces_to_mass(
        shape in shape_strategy(),
        w in 0.1f64..2.0,
        a1 in 0.0f64..0.15,
        a2 in 0.0f64..0.15,
    ) {
        let k = DelayKernel::density(shape, w.into());
        let m0 = k.exp_moment(0.0, 0.0);
        prop_assert!((m0.value - k.total_variation(0.0)).abs() <= 1e-12);
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let (m_lo, m_hi) = (k.exp_moment(0.0, lo), k.exp_moment(0.0, hi));
        prop_assert!(m_lo.finite && m_hi.finite);
        prop_assert!(m_lo.value <= m_hi.value * (1.0 + 1e-12));
    }

    #[test]
    fn row_residual_is_homogeneous(index in 0u64..500, c in 0.01f64..100.0, t in 0.0f64..2.0) {
        let m = instance(3, index);
        let xi: Vec<f64> = (0..m.n).map(|i| 1.0 + i as f64 * 0.3).collect();
        let scaled: Vec<f64> = xi.iter().map(|x| c * x).collect();
        for i in 0..m.n {
            let r = row_residual(&m, &xi, t, i);
            prop_assert!((row_residual(&m, &scaled, t, i) - c * r).abs() <= 1e-12 * c.max(1.0) * (1.0 + r.abs()));
        }
    }

    #[test]
    fn alpha_residual_is_monotone(index in 0u64..500, a1 in 0.0f64..1.0, a2 in 0.0f64..1.0, t in 0.0f64..2.0) {
        let m = instance(5, index);
        let xi = vec![1.0; m.n];
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        for i in 0..m.n {
            prop_assert!(alpha_residual(&m, &xi, t, i, lo) <= alpha_residual(&m, &xi, t, i, hi) + 1e-12);
            prop_assert!((alpha_residual(&m, &xi, t, i, 0.0) - row_residual(&m, &xi, t, i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn quadratic_form_criterion_implies_weights_exist(index in 0u64..10_000) {
        let m = instance(17, index);
        let form = ConstantDelayForm::from_model(&m, 512).unwrap();
        let search = ThmASearch { draws: 40, seed: index };
        if search_thm_a_3_1(&form, 0.0, &[], search).satisfied {
            prop_assert!(find_xi(&m, 512).is_ok());
        }
    }

    #[test]
    fn weight_certificate_is_scale_free(index in 0u64..300, c in 0.1f64..10.0) {
        let m = instance(23, index);
        if let Ok(cert) = find_xi(&m, 256) {
            let min = cert.xi.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((min - 1.0).abs() < 1e-12);
            let scaled: Vec<f64> = cert.xi.iter().map(|x| c * x).collect();
            let base = check_condition_2_1(&m, &cert.xi, 256);
            let check = check_condition_2_1(&m, &scaled, 256);
            prop_assert!(base.satisfied && check.satisfied);
            prop_assert!((check.eta - c * base.eta).abs() <= 1e-9 * c * base.eta.abs().max(1.0));
            prop_assert!(base.eta >= cert.eta - 1e-9);
        }
    }

    #[test]
    fn linear_networks_superpose(d in 1.0f64..3.0, b in -0.8f64..0.8, tau in 0.1f64..1.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let mut m = NetworkModel::zeros(1, 1.0);
        m.d[0] = d.into();
        m.g[0] = Activation::zero();
        m.f[0] = Activation::identity();
        m.kernels[(0, 0)] = DelayKernel::atom(b.into());
        m.tau[(0, 0)] = tau.into();
        let opts = SimOptions::new(3.0, 1e-2);
        let run = |c: f64| simulate(&m, &InitialCondition::Constant(vec![c]), &opts).unwrap();
        let (u1, u2, u12) = (run(c1), run(c2), run(c1 + c2));
        for k in 0..u1.len() {
            let sum = u1.state(k)[0] + u2.state(k)[0];
            prop_assert!((sum - u12.state(k)[0]).abs() <= 1e-12 * (1.0 + c1.abs() + c2.abs()));
        }
    }
}

#[test]
fn certified_solutions_contract_at_certified_rate() {
    let opts = CertifyOptions {
        grid_points: 1024,
        ..CertifyOptions::default()
    };
    let mut checked = 0;
    for index in 0..200 {
        let m = instance(29, index);
        let Ok(cert) = certify(&m, &opts) else { continue };
        let phi_u: Vec<f64> = (0..m.n).map(|i| 0.5 * cert.xi[i]).collect();
        let phi_v: Vec<f64> = (0..m.n).map(|i| -0.7 * cert.xi[i]).collect();
        let initial_gap = weighted_norm(
            &phi_u.iter().zip(&phi_v).map(|(a, b)| a - b).collect::<Vec<_>>(),
            &cert.xi,
        );
        let sim = SimOptions::new(8.0, 1e-2);
        let u = simulate(&m, &InitialCondition::Constant(phi_u), &sim).unwrap();
        let v = simulate(&m, &InitialCondition::Constant(phi_v), &sim).unwrap();
        for k in 0..u.len() {
            let diff: Vec<f64> = u.state(k).iter().zip(v.state(k)).map(|(a, b)| a - b).collect();
            let scaled = (cert.alpha * u.time(k)).exp() * weighted_norm(&diff, &cert.xi);
            assert!(scaled <= (1.0 + 1e-3) * initial_gap, "instance {index} at t={}", u.time(k));
        }
        checked += 1;
        if checked == 20 {
            break;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn rhs_examples() {
    let mut m = NetworkModel::zeros(1, 1.0);
    m.d[0] = 1.0.into();
    let mut out = [0.0];
    periodyn::integrate::rhs(&m, 0.3, &[2.0], |_, _| Ok(0.0), 1e-8, 1e-3, &mut out).unwrap();
    assert_eq!(out, [-2.0]);

    let mut m = NetworkModel::zeros(1, 1.0);
    m.f[0] = Activation::identity();
    m.kernels[(0, 0)] = DelayKernel::atom(1.0.into());
    periodyn::integrate::rhs(&m, 0.3, &[0.0], |_, _| Ok(1.25), 1e-8, 1e-3, &mut out).unwrap();
    assert_eq!(out, [1.25]);
}
