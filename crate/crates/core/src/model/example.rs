use std::f64::consts::PI;

use super::{Activation, NetworkModel, PeriodicExpr, Wave};
use crate::kernels::DelayKernel;

fn c(v: f64) -> PeriodicExpr {
    PeriodicExpr::constant(v)
}

fn w(amp: f64, wave: Wave, k: u32) -> PeriodicExpr {
    PeriodicExpr::wave(amp, wave, k)
}

/// Three-neuron delayed network with period 2: `tanh` instantaneous
/// couplings, `arctan` delayed couplings through delays `|sin(2 pi t)|`,
/// `(pi/2)|cos(2 pi t)|` and `1` (one per source neuron).
pub fn builtin_example() -> NetworkModel {
    use Wave::*;
    let e = (-1.0f64).exp();
    let mut m = NetworkModel::zeros(3, 2.0);

    m.d = vec![
        c(2.51).plus(w(0.5, Sin2, 1)),
        c(0.91).plus(w(0.1, Sin2, 1)).plus(w(0.5, Sin2, 4)),
        c(0.51)
            .plus(w(0.2, Cos2, 1))
            .plus(w(0.2, Sin2, 2))
            .plus(w(0.1, Sin2, 4)),
    ];

    let a = [
        [w(1.0, Sin2, 2), w(1.0, Cos2, 2), w(1.0, Sin2, 1)],
        [w(-0.5, Sin2, 2), w(0.2, Cos2, 4), w(0.3, Sin2, 1)],
        [w(-0.4, Cos2, 1), w(0.3, Sin2, 2), w(0.2, Cos2, 4)],
    ];
    let b = [
        [w(e, Sin2, 4), w(e, Cos2, 4), w(-(e / 2.0), Cos2, 1)],
        [w(-(0.7 * e), Sin2, 4), w(0.5 * e, Cos2, 2), w(0.2 * e, Cos2, 1)],
        [w(0.2 * e, Sin2, 1), w(0.1 * e, Cos2, 2), w(0.3 * e, Sin2, 4)],
    ];
    let tau = [w(1.0, AbsSin, 2), w(PI / 2.0, AbsCos, 2), c(1.0)];

    for i in 0..3 {
        for j in 0..3 {
            m.a[(i, j)] = a[i][j].clone();
            m.kernels[(i, j)] = DelayKernel::atom(b[i][j].clone());
            m.tau[(i, j)] = tau[j].clone();
        }
    }
    m.inputs = vec![w(1.0, Sin, 2), w(2.0, Cos, 1), w(2.0, Sin, 2)];
    m.g = vec![Activation::tanh(); 3];
    m.f = vec![Activation::arctan(); 3];
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_period() {
        let m = builtin_example();
        assert_eq!(m.n, 3);
        assert_eq!(m.omega, 2.0);
    }

    #[test]
    fn coefficients_at_reference_times() {
        let m = builtin_example();
        let s0 = m.coefficients(0.0);
        assert_eq!(s0.d[0], 2.51);
        assert_eq!(s0.inputs, vec![0.0, 2.0, 0.0]);
        let s = m.coefficients(0.5);
        assert!((s.d[0] - 3.01).abs() < 1e-15);
    }

    #[test]
    fn builtin_is_admissible() {
        let report = builtin_example().validate();
        assert!(report.is_admissible(), "{report}");
    }
}
