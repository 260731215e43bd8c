//! Periodic network description: coefficients, activations, validation.

mod activation;
mod example;
mod expr;
mod network;

pub use activation::{Activation, ActivationKind, ConstantViolation};
pub use example::builtin_example;
pub use expr::{PeriodicExpr, Term, Wave};
pub use network::{
    CoefficientSlice, NetworkModel, SquareMatrix, ValidationOptions, ValidationReport, Violation,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DelayKernel;

    #[test]
    fn zero_model_coefficients_vanish() {
        let m = NetworkModel::zeros(2, 1.0);
        let s = m.coefficients(0.37);
        assert!(s.d.iter().chain(&s.inputs).all(|&v| v == 0.0));
        assert!(s.a.iter().all(|(_, &v)| v == 0.0));
    }

    #[test]
    fn sign_changing_self_inhibition_reported_at_minimum() {
        let mut m = NetworkModel::zeros(1, 1.0);
        m.d[0] = PeriodicExpr::wave(1.0, Wave::Sin, 2);
        let report = m.validate();
        let v = report
            .violations
            .iter()
            .find_map(|v| match v {
                Violation::NonPositiveSelfInhibition { i, t, .. } => Some((*i, *t)),
                _ => None,
            })
            .expect("violation");
        assert_eq!(v, (0, 0.75));
        assert!(report.to_string().contains("d_1 not positive at t=0.75"));
    }

    #[test]
    fn negative_delay_reported() {
        let mut m = NetworkModel::zeros(2, 1.0);
        m.d = vec![1.0.into(), 1.0.into()];
        m.tau[(0, 1)] = PeriodicExpr::constant(-1.0);
        m.kernels[(0, 1)] = DelayKernel::atom(0.5.into());
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(report.to_string().contains("negative delay"));
    }

    #[test]
    fn period_mismatch_reported() {
        let mut m = NetworkModel::zeros(1, 1.0);
        m.d[0] = PeriodicExpr::constant(2.0).plus(PeriodicExpr::wave(0.5, Wave::Cos, 1));
        let report = m.validate();
        assert!(matches!(report.violations[0], Violation::PeriodMismatch { .. }));
    }

    #[test]
    fn bad_activation_constant_reported() {
        let mut m = NetworkModel::zeros(1, 1.0);
        m.d[0] = 1.0.into();
        m.g[0] = Activation::with_constants(ActivationKind::Tanh, 0.9, 0.0);
        let report = m.validate_with(&ValidationOptions {
            activation_samples: 10_000,
            ..Default::default()
        });
        assert!(matches!(report.violations[0], Violation::Activation { .. }));
    }
}
