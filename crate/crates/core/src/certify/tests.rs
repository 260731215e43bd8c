use super::*;
use crate::kernels::DelayKernel;
use crate::model::{builtin_example, Activation, PeriodicExpr};

fn scalar(d: f64, a: f64) -> NetworkModel {
    let mut m = NetworkModel::zeros(1, 1.0);
    m.d[0] = d.into();
    m.a[(0, 0)] = a.into();
    m
}

/// u' = -2u + f(u(t-1)) with f the identity: rate solves e^a + a = 2.
pub(crate) fn scalar_delay_benchmark() -> NetworkModel {
    let mut m = NetworkModel::zeros(1, 1.0);
    m.d[0] = 2.0.into();
    m.kernels[(0, 0)] = DelayKernel::atom_at(1.0, 1.0.into());
    m.g = vec![Activation::zero()];
    m.f = vec![Activation::identity()];
    m
}

#[test]
fn row_residual_builtin_row_one_at_zero() {
    let m = builtin_example();
    let e = (-1.0f64).exp();
    // -2.51 + (0 + 1 + 0) + e^-1 (0 + 1 + 0.5), evaluated by hand
    let expected = -2.51 + 1.0 + e * 1.5;
    let r = row_residual(&m, &[1.0, 1.0, 1.0], 0.0, 0);
    assert!((r - expected).abs() < 1e-14, "{r} vs {expected}");
    assert!((r + 0.9582).abs() < 1e-4);
}

#[test]
fn row_residual_trivial_and_homogeneous() {
    let m = scalar(1.0, 0.0);
    assert_eq!(row_residual(&m, &[1.0], 0.3, 0), -1.0);
    let b = builtin_example();
    let xi = [1.0, 2.0, 0.5];
    let scaled = [3.0, 6.0, 1.5];
    for t in [0.0, 0.4, 1.3] {
        for i in 0..3 {
            let r = row_residual(&b, &xi, t, i);
            let rs = row_residual(&b, &scaled, t, i);
            assert!((rs - 3.0 * r).abs() < 1e-13);
        }
    }
}

#[test]
fn builtin_margin_with_unit_weights() {
    // dense-grid oracle (2^20 points) gives 0.07199; 4096 points give 0.07200
    let check = check_condition_2_1(&builtin_example(), &[1.0, 1.0, 1.0], 4096);
    assert!(check.satisfied);
    assert!((check.eta - 0.071996).abs() < 1e-5, "{}", check.eta);
    assert_eq!(check.worst_row, 2);
}

#[test]
fn unstable_and_decoupled_margins() {
    let check = check_condition_2_1(&scalar(1.0, 2.0), &[1.0], 64);
    assert!(!check.satisfied);
    assert!((check.eta + 1.0).abs() < 1e-15);

    let mut m = NetworkModel::zeros(2, 1.0);
    m.d = vec![
        PeriodicExpr::constant(1.5).plus(PeriodicExpr::wave(0.5, crate::model::Wave::Sin2, 1)),
        0.8.into(),
    ];
    let check = check_condition_2_1(&m, &[1.0, 1.0], 256);
    assert!(check.satisfied);
    assert!((check.eta - 0.8).abs() < 1e-15);
}

#[test]
fn find_xi_scalar_cases() {
    let cert = find_xi(&scalar(1.0, 0.5), 64).unwrap();
    assert_eq!(cert.xi, vec![1.0]);
    assert!((cert.eta - 0.5).abs() < 1e-12);

    let err = find_xi(&scalar(1.0, 1.5), 64).unwrap_err();
    match err {
        CertifyError::Infeasible { best_eta, .. } => assert!((best_eta + 0.5).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn find_xi_builtin_beats_unit_weights() {
    let cert = find_xi(&builtin_example(), 4096).unwrap();
    assert!(cert.xi.iter().all(|&x| x >= 1.0));
    assert!((cert.xi.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0).abs() < 1e-15);
    let check = check_condition_2_1(&builtin_example(), &cert.xi, 4096);
    assert!(check.eta >= 0.0719, "{}", check.eta);
    assert!((check.eta - cert.eta).abs() < 1e-12);
}

#[test]
fn find_xi_needs_nonuniform_weights() {
    // Unit weights fail row 2; any 1.25 < xi_2/xi_1 < 5 works.
    let mut m = NetworkModel::zeros(2, 1.0);
    m.d = vec![1.0.into(), 2.0.into()];
    m.a[(0, 1)] = 0.2.into();
    m.a[(1, 0)] = 2.5.into();
    m.g = vec![Activation::identity(); 2];
    assert!(!check_condition_2_1(&m, &[1.0, 1.0], 16).satisfied);
    let cert = find_xi(&m, 16).unwrap();
    assert!(check_condition_2_1(&m, &cert.xi, 16).satisfied);
    // the margin optimum balances both rows: 1 - 0.2 r = 2 r - 2.5
    let ratio = cert.xi[1] / cert.xi[0];
    let eta_1 = 1.0 - 0.2 * ratio;
    let eta_2 = 2.0 * ratio - 2.5;
    assert!((eta_1 - eta_2).abs() < 1e-9, "{ratio}");
}

#[test]
fn alpha_for_scalar_delay_benchmark() {
    // bisection oracle on e^a + a = 2
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.exp() + mid <= 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = scalar_delay_benchmark();
    let alpha = find_alpha(&m, &[1.0], 16, 1e-9);
    assert!((alpha - lo).abs() < 2e-9, "{alpha} vs {lo}");
    assert!((alpha - 0.4429).abs() < 1e-4);
}

#[test]
fn alpha_builtin_postcondition() {
    let m = builtin_example();
    let xi = [1.0, 1.0, 1.0];
    let tol = 1e-6;
    let alpha = find_alpha(&m, &xi, 4096, tol);
    assert!(alpha > 0.0 && alpha <= 0.0721, "{alpha}");
    assert!(max_alpha_residual(&m, &xi, alpha, 4096) <= 0.0);
    assert!(max_alpha_residual(&m, &xi, alpha + 2.0 * tol, 4096) > 0.0);
    // independent numpy bisection on the same grid gave 0.0690007
    assert!((alpha - 0.0690007).abs() < 2e-6, "{alpha}");
}

#[test]
fn alpha_capped_below_exponential_rate() {
    let mut m = NetworkModel::zeros(1, 1.0);
    m.d[0] = 10.0.into();
    m.kernels[(0, 0)] = DelayKernel::density(crate::kernels::DensityShape::Exponential { rate: 0.5 }, 0.01.into());
    let alpha = find_alpha(&m, &[1.0], 8, 1e-9);
    assert!(alpha < 0.5 && alpha > 0.49, "{alpha}");
}

#[test]
fn rate_residual_reduces_to_existence_residual_at_zero() {
    let m = builtin_example();
    let xi = [1.0, 1.7, 0.6];
    for k in 0..50 {
        let t = k as f64 * 0.0391;
        for i in 0..3 {
            assert_eq!(alpha_residual(&m, &xi, t, i, 0.0), row_residual(&m, &xi, t, i));
        }
    }
}

#[test]
fn rate_residual_monotone_in_alpha() {
    let m = builtin_example();
    let xi = [1.0, 1.0, 1.0];
    for k in 0..20 {
        let t = k as f64 * 0.097;
        for i in 0..3 {
            let mut prev = f64::NEG_INFINITY;
            for a in 0..30 {
                let r = alpha_residual(&m, &xi, t, i, a as f64 * 0.05);
                assert!(r >= prev);
                prev = r;
            }
        }
    }
}

#[test]
fn bounds_for_builtin() {
    let m = builtin_example();
    let xi = [1.0, 1.0, 1.0];
    let eta = check_condition_2_1(&m, &xi, 4096).eta;
    let b = compute_bounds(&m, &xi, eta, 4096);
    assert_eq!(b.j, 2.0);
    assert!((b.m - 1.01 * 2.0 / eta).abs() < 1e-12);
    assert!(b.m > b.j / eta);
    assert!(b.n > 0.0);
}

#[test]
fn bounds_zero_input() {
    let b = compute_bounds(&scalar(1.0, 0.5), &[1.0], 0.5, 8);
    assert_eq!(b.j, 0.0);
    assert_eq!(b.m, 1.0);
    // (d_hat + a_hat + k_hat) M + c_hat = (1 + 0.5 + 0) * 1 + 0
    assert_eq!(b.n, 1.5);
}

#[test]
fn certificate_homogeneous_under_scaling() {
    let m = builtin_example();
    let cert = find_xi(&m, 1024).unwrap();
    let scaled: Vec<f64> = cert.xi.iter().map(|x| 7.5 * x).collect();
    let base = check_condition_2_1(&m, &cert.xi, 1024);
    let big = check_condition_2_1(&m, &scaled, 1024);
    assert_eq!(base.satisfied, big.satisfied);
    assert!((big.eta / 7.5 - base.eta).abs() < 1e-12);
}

mod rival_checks {
    use super::*;

    fn form(m: &NetworkModel) -> ConstantDelayForm {
        ConstantDelayForm::from_model(m, 4096).unwrap()
    }

    #[test]
    fn builtin_fails_sup_based_rows() {
        let m = builtin_example();
        let f = form(&m);
        let e = (-1.0f64).exp();
        let r = check_condition_3_3(&f, &[1.0, 1.0, 1.0], 0.0);
        assert!(!r.satisfied);
        // row 1: -2.51 + 3 + 2.5 e^-1, by hand
        let rows = f.sup_rows(&[1.0, 1.0, 1.0], 0.0);
        assert!((rows[0] - (-2.51 + 3.0 + 2.5 * e)).abs() < 1e-12);
        assert!(!search_condition_3_3(&f, 0.0).satisfied);
    }

    #[test]
    fn builtin_fails_quadratic_and_period_criteria() {
        let m = builtin_example();
        let f = form(&m);
        let cert = find_xi(&m, 4096).unwrap();
        let r = search_thm_a_3_1(&f, 0.0, &[cert.xi], ThmASearch::default());
        assert!(!r.satisfied);
        assert!(!check_l_3_4(&f).satisfied);
        assert!(f.time_varying_delays);
    }

    #[test]
    fn decoupled_model_passes_everything() {
        let m = scalar(1.0, 0.0);
        let f = form(&m);
        let half = SquareMatrix::filled(1, 0.5);
        let r = check_thm_a_3_1(&f, &[1.0], 0.5, &half, &half);
        assert!(r.satisfied);
        assert_eq!(r.worst_row_residual, -0.5);
        assert!(check_condition_3_3(&f, &[1.0], 0.0).satisfied);
        let l = check_l_3_4(&f);
        assert!(l.satisfied);
        assert_eq!(l.worst_row_residual, -1.0);
    }

    #[test]
    fn period_scaled_scalar_example() {
        let f = form(&scalar(1.0, 0.4));
        let l = check_l_3_4(&f);
        assert!((l.worst_row_residual + 0.2).abs() < 1e-15);
        assert!(l.satisfied);
    }

    #[test]
    fn constant_coefficients_sup_rows_match_pointwise() {
        let mut m = NetworkModel::zeros(2, 1.0);
        m.d = vec![2.0.into(), 1.5.into()];
        m.a[(0, 1)] = (-0.4).into();
        m.a[(1, 0)] = 0.3.into();
        m.kernels[(0, 0)] = DelayKernel::atom(0.2.into());
        m.kernels[(1, 1)] = DelayKernel::atom((-0.5).into());
        m.tau[(0, 0)] = 0.7.into();
        let theta = [1.0, 1.3];
        let sup = check_condition_3_3(&form(&m), &theta, 0.0);
        let cor = check_cor1_2_14(&m, &theta, 64).unwrap();
        assert_eq!(sup.satisfied, cor.satisfied);
        assert!((sup.worst_row_residual - cor.worst_row_residual).abs() < 1e-14);
    }

    #[test]
    fn corollaries_agree_with_general_condition() {
        let m = builtin_example();
        let xi = [1.0, 1.2, 0.9];
        let general = check_condition_2_1(&m, &xi, 2048);
        let cor = check_cor1_2_14(&m, &xi, 2048).unwrap();
        assert!((general.eta + cor.worst_row_residual).abs() < 1e-14);

        let mut d = NetworkModel::zeros(2, 2.0);
        d.d = vec![1.0.into(), 1.2.into()];
        d.kernels[(0, 1)] = DelayKernel::density(
            crate::kernels::DensityShape::Exponential { rate: 1.5 },
            PeriodicExpr::wave(0.4, crate::model::Wave::Cos, 1),
        );
        d.kernels[(1, 0)] = DelayKernel::density(
            crate::kernels::DensityShape::Table { width: 2.0, values: vec![0.1, -0.3, 0.2] },
            0.5.into(),
        );
        let general = check_condition_2_1(&d, &[1.0, 1.0], 512);
        let cor2 = check_cor2_2_18(&d, &[1.0, 1.0], 512).unwrap();
        assert!((general.eta + cor2.worst_row_residual).abs() < 1e-14);
        assert!(check_cor1_2_14(&d, &[1.0, 1.0], 8).is_err());
        assert!(check_cor2_2_18(&m, &xi, 8).is_err());
    }

    #[test]
    fn density_kernels_rejected_by_constant_delay_form() {
        let mut m = NetworkModel::zeros(1, 1.0);
        m.d[0] = 1.0.into();
        m.kernels[(0, 0)] = DelayKernel::density(crate::kernels::DensityShape::Uniform { width: 1.0 }, 1.0.into());
        assert_eq!(ConstantDelayForm::from_model(&m, 8), Err(ShapeError::Density(0, 0)));
    }
}
