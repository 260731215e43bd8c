use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActivationKind {
    Tanh,
    Arctan,
    Identity,
    /// `clamp(slope * s, -cap, cap)`
    SatLin { slope: f64, cap: f64 },
    Zero,
}

/// Activation together with its declared growth constants:
/// `|sigma(s)| <= lipschitz*|s| + offset` and
/// `|sigma(x+h) - sigma(x)| <= lipschitz*|h|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub lipschitz: f64,
    pub offset: f64,
}

/// A sampled point where a declared constant is violated.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstantViolation {
    Growth { s: f64, value: f64, bound: f64 },
    Lipschitz { x: f64, h: f64, diff: f64, bound: f64 },
}

const CHECK_TOL: f64 = 1e-9;

impl Activation {
    /// Activation with the tightest builtin constants.
    pub fn new(kind: ActivationKind) -> Self {
        let (lipschitz, offset) = match kind {
            ActivationKind::Tanh | ActivationKind::Arctan | ActivationKind::Identity => (1.0, 0.0),
            ActivationKind::SatLin { slope, .. } => (slope.abs(), 0.0),
            ActivationKind::Zero => (0.0, 0.0),
        };
        Self {
            kind,
            lipschitz,
            offset,
        }
    }

    /// Activation with user-declared constants; not checked here.
    pub fn with_constants(kind: ActivationKind, lipschitz: f64, offset: f64) -> Self {
        Self {
            kind,
            lipschitz,
            offset,
        }
    }

    pub fn tanh() -> Self {
        Self::new(ActivationKind::Tanh)
    }

    pub fn arctan() -> Self {
        Self::new(ActivationKind::Arctan)
    }

    pub fn identity() -> Self {
        Self::new(ActivationKind::Identity)
    }

    pub fn zero() -> Self {
        Self::new(ActivationKind::Zero)
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            ActivationKind::Tanh => s.tanh(),
            ActivationKind::Arctan => s.atan(),
            ActivationKind::Identity => s,
            ActivationKind::SatLin { slope, cap } => (slope * s).clamp(-cap, cap),
            ActivationKind::Zero => 0.0,
        }
    }

    /// Dense sampling of the growth bound on `[-100, 100]`.
    pub fn check_growth(&self, samples: usize) -> Option<ConstantViolation> {
        let samples = samples.max(2);
        (0..samples).find_map(|k| {
            let s = -100.0 + 200.0 * k as f64 / (samples - 1) as f64;
            let value = self.eval(s).abs();
            let bound = self.lipschitz * s.abs() + self.offset;
            (value > bound + CHECK_TOL * (1.0 + bound)).then_some(ConstantViolation::Growth {
                s,
                value,
                bound,
            })
        })
    }

    /// Random `(x, h)` pairs checking the Lipschitz bound.
    pub fn check_lipschitz<R: Rng>(&self, rng: &mut R, samples: usize) -> Option<ConstantViolation> {
        (0..samples).find_map(|_| {
            let x: f64 = rng.gen_range(-20.0..20.0);
            // mix of tiny and large increments
            let h: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(-1e-3..1e-3)
            } else {
                rng.gen_range(-10.0..10.0)
            };
            let diff = (self.eval(x + h) - self.eval(x)).abs();
            let bound = self.lipschitz * h.abs();
            // x + h itself is rounded
            let slack = 4.0 * f64::EPSILON * (1.0 + x.abs() + h.abs()) * self.lipschitz;
            (diff > bound + slack + CHECK_TOL * (1e-6 + bound)).then_some(ConstantViolation::Lipschitz {
                x,
                h,
                diff,
                bound,
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_constants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [
            Activation::tanh(),
            Activation::arctan(),
            Activation::identity(),
            Activation::zero(),
            Activation::new(ActivationKind::SatLin { slope: 2.0, cap: 1.0 }),
        ] {
            assert_eq!(act.check_growth(100_001), None, "{act:?}");
            assert_eq!(act.check_lipschitz(&mut rng, 100_000), None, "{act:?}");
        }
    }

    #[test]
    fn understated_constants_are_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let act = Activation::with_constants(ActivationKind::Tanh, 0.5, 0.0);
        assert!(matches!(act.check_growth(1001), Some(ConstantViolation::Growth { .. })));
        assert!(matches!(
            act.check_lipschitz(&mut rng, 10_000),
            Some(ConstantViolation::Lipschitz { .. })
        ));
    }

    #[test]
    fn offset_can_absorb_growth() {
        let act = Activation::with_constants(ActivationKind::Arctan, 0.0, std::f64::consts::FRAC_PI_2);
        assert_eq!(act.check_growth(10_001), None);
    }
}
