//! Closed-form periodic scalar functions of time.
//!
//! Every coefficient of a network (self-inhibition, weights, delays, inputs,
//! kernel weights) is a finite sum of primitive terms `c * w(k*pi*t)` where
//! `w` is one of a small set of trigonometric waves. Keeping the closed form
//! around means suprema, infima and derivatives never pick up interpolation
//! error.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Primitive waveform evaluated at `k*pi*t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wave {
    Sin,
    Cos,
    Sin2,
    Cos2,
    AbsSin,
    AbsCos,
}

impl Wave {
    pub const ALL: [Wave; 6] = [
        Wave::Sin,
        Wave::Cos,
        Wave::Sin2,
        Wave::Cos2,
        Wave::AbsSin,
        Wave::AbsCos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Wave::Sin => "sin",
            Wave::Cos => "cos",
            Wave::Sin2 => "sin2",
            Wave::Cos2 => "cos2",
            Wave::AbsSin => "abssin",
            Wave::AbsCos => "abscos",
        }
    }

    pub fn from_name(name: &str) -> Option<Wave> {
        Wave::ALL.into_iter().find(|w| w.name() == name)
    }

    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Wave::Sin => x.sin(),
            Wave::Cos => x.cos(),
            Wave::Sin2 => {
                let s = x.sin();
                s * s
            }
            Wave::Cos2 => {
                let c = x.cos();
                c * c
            }
            Wave::AbsSin => x.sin().abs(),
            Wave::AbsCos => x.cos().abs(),
        }
    }

    /// d/dx of the wave. The absolute-value waves use the one-sided
    /// derivative from the right at their kinks.
    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Wave::Sin => x.cos(),
            Wave::Cos => -x.sin(),
            Wave::Sin2 => 2.0 * x.sin() * x.cos(),
            Wave::Cos2 => -2.0 * x.sin() * x.cos(),
            Wave::AbsSin => {
                let s = x.sin();
                if s > 0.0 || (s == 0.0 && x.cos() > 0.0) {
                    x.cos()
                } else {
                    -x.cos()
                }
            }
            Wave::AbsCos => {
                let c = x.cos();
                if c > 0.0 || (c == 0.0 && x.sin() < 0.0) {
                    -x.sin()
                } else {
                    x.sin()
                }
            }
        }
    }

    /// Fundamental period of `w(pi*t)` in time units.
    fn unit_period(self) -> f64 {
        match self {
            Wave::Sin | Wave::Cos => 2.0,
            _ => 1.0,
        }
    }

    fn range(self) -> (f64, f64) {
        match self {
            Wave::Sin | Wave::Cos => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }
}

/// One summand of a [`PeriodicExpr`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Const(f64),
    Wave { amp: f64, wave: Wave, k: u32 },
}

impl Term {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Term::Const(c) => c,
            Term::Wave { amp, wave, k } => amp * wave.eval(k as f64 * PI * t),
        }
    }

    #[inline]
    fn derivative(&self, t: f64) -> f64 {
        match *self {
            Term::Const(_) => 0.0,
            Term::Wave { amp, wave, k } => {
                let w = k as f64 * PI;
                amp * w * wave.derivative(w * t)
            }
        }
    }

    /// Smallest positive period, `None` for constants.
    pub fn period(&self) -> Option<f64> {
        match *self {
            Term::Const(_) => None,
            Term::Wave { wave, k, .. } => Some(wave.unit_period() / k as f64),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Term::Const(c) => (c, c),
            Term::Wave { amp, wave, .. } => {
                let (lo, hi) = wave.range();
                if amp >= 0.0 {
                    (amp * lo, amp * hi)
                } else {
                    (amp * hi, amp * lo)
                }
            }
        }
    }
}

/// Finite sum of [`Term`]s. The empty sum is the zero function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicExpr {
    terms: Vec<Term>,
}

impl PeriodicExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![Term::Const(c)],
        }
    }

    pub fn wave(amp: f64, wave: Wave, k: u32) -> Self {
        Self {
            terms: vec![Term::Wave { amp, wave, k }],
        }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    /// Builder-style append.
    pub fn plus(mut self, other: PeriodicExpr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| match *t {
            Term::Const(c) => c == 0.0,
            Term::Wave { amp, .. } => amp == 0.0,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, Term::Const(_)) || matches!(t, Term::Wave { amp, .. } if *amp == 0.0))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.derivative(t)).sum()
    }

    /// Interval guaranteed to contain every value, from per-term ranges.
    pub fn range_bound(&self) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(lo, hi), term| {
            let (a, b) = term.bounds();
            (lo + a, hi + b)
        })
    }

    /// Upper bound on `sup_t |e(t)|`.
    pub fn abs_bound(&self) -> f64 {
        let (lo, hi) = self.range_bound();
        lo.abs().max(hi.abs())
    }

    /// True when every term repeats after `omega`.
    pub fn has_period(&self, omega: f64) -> bool {
        self.terms.iter().all(|term| match term.period() {
            None => true,
            Some(p) => {
                let ratio = omega / p;
                (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) && ratio.round() >= 1.0
            }
        })
    }
}

impl From<f64> for PeriodicExpr {
    fn from(c: f64) -> Self {
        PeriodicExpr::constant(c)
    }
}

/// Canonical text form, read back by the config parser:
/// `2.51 + 0.5*sin2(1) - 0.25*cos(2)`.
impl fmt::Display for PeriodicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, term) in self.terms.iter().enumerate() {
            let (coef, wave) = match *term {
                Term::Const(c) => (c, None),
                Term::Wave { amp, wave, k } => (amp, Some((wave, k))),
            };
            let negative = coef.is_sign_negative();
            let mag = coef.abs();
            match (idx, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            match wave {
                None => write!(f, "{mag:?}")?,
                Some((w, k)) => write!(f, "{mag:?}*{}({k})", w.name())?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_waves_match_identities() {
        let e = PeriodicExpr::wave(1.0, Wave::Sin2, 3).plus(PeriodicExpr::wave(1.0, Wave::Cos2, 3));
        for i in 0..100 {
            let t = i as f64 * 0.0137;
            assert!((e.eval(t) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let e = PeriodicExpr::constant(0.3)
            .plus(PeriodicExpr::wave(0.7, Wave::Sin, 2))
            .plus(PeriodicExpr::wave(-1.2, Wave::Cos2, 1))
            .plus(PeriodicExpr::wave(0.4, Wave::AbsSin, 2));
        let eps = 1e-6;
        for t in [0.1, 0.33, 0.77, 1.41] {
            let fd = (e.eval(t + eps) - e.eval(t - eps)) / (2.0 * eps);
            assert!((fd - e.derivative(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn period_detection() {
        let e = PeriodicExpr::wave(1.0, Wave::Cos, 1);
        assert!(e.has_period(2.0));
        assert!(!e.has_period(1.0));
        assert!(PeriodicExpr::wave(1.0, Wave::Sin2, 1).has_period(1.0));
        assert!(PeriodicExpr::wave(1.0, Wave::AbsCos, 2).has_period(0.5));
        assert!(PeriodicExpr::constant(4.0).has_period(0.37));
    }

    #[test]
    fn abs_bound_covers_samples() {
        let e = PeriodicExpr::constant(-0.2).plus(PeriodicExpr::wave(0.5, Wave::Sin, 1));
        assert_eq!(e.range_bound(), (-0.7, 0.3));
        assert!((e.abs_bound() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn display_is_canonical() {
        let e = PeriodicExpr::constant(2.51).plus(PeriodicExpr::wave(-0.5, Wave::Sin2, 1));
        assert_eq!(e.to_string(), "2.51 - 0.5*sin2(1)");
        assert_eq!(PeriodicExpr::zero().to_string(), "0");
    }
}
