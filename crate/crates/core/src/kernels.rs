//! Delay measures `d_s K_ij(t, s)`: point masses plus an optional density.
//!
//! Atoms model discrete delays, densities model distributed delays. The
//! stability conditions only ever need the total variation of the measure and
//! its exponential moment, both available in closed form for the exponential
//! and uniform shapes and exactly (piecewise) for tabulated densities.

use serde::{Deserialize, Serialize};

use crate::model::PeriodicExpr;

/// Default tail mass discarded when truncating infinite-support densities.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Delay offset `s >= 0` at which the mass sits.
    pub location: f64,
    pub weight: PeriodicExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityShape {
    /// `k(s) = rate * exp(-rate * s)` on `[0, inf)`.
    Exponential { rate: f64 },
    /// `k(s) = 1 / width` on `[0, width]`.
    Uniform { width: f64 },
    /// Linear interpolation of `values` on a uniform grid over `[0, width]`.
    Table { width: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub shape: DensityShape,
    pub weight: PeriodicExpr,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayKernel {
    pub atoms: Vec<Atom>,
    pub density: Option<Density>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoment {
    pub alpha: f64,
    pub value: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("atom location {0} is negative or not finite")]
    NegativeLocation(f64),
    #[error("atom locations must be strictly increasing")]
    UnsortedAtoms,
    #[error("exponential rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("density width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("table density needs at least two finite values")]
    BadTable,
}

impl DensityShape {
    /// `int_0^inf |k(s)| ds`.
    pub fn abs_mass(&self) -> f64 {
        match self {
            DensityShape::Exponential { .. } | DensityShape::Uniform { .. } => 1.0,
            DensityShape::Table { width, values } => table_exp_moment(*width, values, 0.0),
        }
    }

    /// `int_0^inf e^{alpha s} |k(s)| ds`, `None` when divergent.
    pub fn abs_exp_moment(&self, alpha: f64) -> Option<f64> {
        if alpha == 0.0 {
            return Some(self.abs_mass());
        }
        match *self {
            DensityShape::Exponential { rate } => (alpha < rate).then(|| rate / (rate - alpha)),
            DensityShape::Uniform { width } => {
                let x = alpha * width;
                Some(x.exp_m1() / x)
            }
            DensityShape::Table { width, ref values } => Some(table_exp_moment(width, values, alpha)),
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match *self {
            DensityShape::Exponential { rate } => rate * (-rate * s).exp(),
            DensityShape::Uniform { width } => {
                if s <= width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            DensityShape::Table { width, ref values } => {
                if s > width {
                    return 0.0;
                }
                let cells = values.len() - 1;
                let x = s / width * cells as f64;
                let idx = (x.floor() as usize).min(cells - 1);
                let frac = x - idx as f64;
                values[idx] * (1.0 - frac) + values[idx + 1] * frac
            }
        }
    }

    /// Support length after discarding `tail_tol` of mass.
    pub fn cutoff(&self, tail_tol: f64) -> f64 {
        match *self {
            DensityShape::Exponential { rate } => (1.0 / tail_tol).ln() / rate,
            DensityShape::Uniform { width } | DensityShape::Table { width, .. } => width,
        }
    }

    /// Largest `alpha` for which the exponential moment stays finite.
    pub fn moment_abscissa(&self) -> f64 {
        match *self {
            DensityShape::Exponential { rate } => rate,
            _ => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        match *self {
            DensityShape::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(KernelError::NonPositiveRate(rate))
            }
            DensityShape::Uniform { width } if !(width > 0.0 && width.is_finite()) => {
                Err(KernelError::NonPositiveWidth(width))
            }
            DensityShape::Table { width, ref values } => {
                if !(width > 0.0 && width.is_finite()) {
                    Err(KernelError::NonPositiveWidth(width))
                } else if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    Err(KernelError::BadTable)
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Exact `int e^{alpha s} |p(s)|` over a piecewise-linear table.
fn table_exp_moment(width: f64, values: &[f64], alpha: f64) -> f64 {
    let cells = values.len() - 1;
    let dx = width / cells as f64;
    let mut total = 0.0;
    for c in 0..cells {
        let (s0, v0, v1) = (c as f64 * dx, values[c], values[c + 1]);
        if v0 * v1 < 0.0 {
            // split at the sign change
            let root = dx * v0 / (v0 - v1);
            total += linear_exp_integral(s0, root, v0.abs(), 0.0, alpha);
            total += linear_exp_integral(s0 + root, dx - root, 0.0, v1.abs(), alpha);
        } else {
            total += linear_exp_integral(s0, dx, v0.abs(), v1.abs(), alpha);
        }
    }
    total
}

/// `int_{s0}^{s0+len} e^{alpha s} (p + (q-p)(s-s0)/len) ds`.
fn linear_exp_integral(s0: f64, len: f64, p: f64, q: f64, alpha: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let x = alpha * len;
    if x.abs() < 1e-4 {
        // series in x avoids cancellation near alpha = 0
        let base = 0.5 * (p + q);
        let first = (p + 2.0 * q) / 6.0;
        let second = (p + 3.0 * q) / 24.0;
        return (alpha * s0).exp() * len * (base + x * first + x * x * second);
    }
    let e = x.exp();
    // int_0^1 e^{x u} (p + (q-p) u) du
    let i0 = x.exp_m1() / x;
    let i1 = (e * (x - 1.0) + 1.0) / (x * x);
    (alpha * s0).exp() * len * (p * i0 + (q - p) * i1)
}

impl DelayKernel {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Single point mass at delay offset 0: the discrete-delay case.
    pub fn atom(weight: PeriodicExpr) -> Self {
        Self::atom_at(0.0, weight)
    }

    pub fn atom_at(location: f64, weight: PeriodicExpr) -> Self {
        Self {
            atoms: vec![Atom { location, weight }],
            density: None,
        }
    }

    pub fn density(shape: DensityShape, weight: PeriodicExpr) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(Density { shape, weight }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.is_zero())
            && self.density.as_ref().is_none_or(|d| d.weight.is_zero())
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let mut prev: Option<f64> = None;
        for atom in &self.atoms {
            if !(atom.location >= 0.0 && atom.location.is_finite()) {
                return Err(KernelError::NegativeLocation(atom.location));
            }
            if prev.is_some_and(|p| atom.location <= p) {
                return Err(KernelError::UnsortedAtoms);
            }
            prev = Some(atom.location);
        }
        if let Some(d) = &self.density {
            d.shape.validate()?;
        }
        Ok(())
    }

    /// `int_0^inf |d_s K(t, s)|`.
    pub fn total_variation(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight.eval(t).abs()).sum();
        let density = self
            .density
            .as_ref()
            .map_or(0.0, |d| d.weight.eval(t).abs() * d.shape.abs_mass());
        atoms + density
    }

    /// `int_0^inf e^{alpha s} |d_s K(t, s)|`.
    pub fn exp_moment(&self, t: f64, alpha: f64) -> KernelMoment {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let w = a.weight.eval(t).abs();
                if alpha == 0.0 {
                    w
                } else {
                    w * (alpha * a.location).exp()
                }
            })
            .sum();
        let (density, finite) = match &self.density {
            None => (0.0, true),
            Some(d) => {
                let w = d.weight.eval(t).abs();
                match d.shape.abs_exp_moment(alpha) {
                    Some(m) => (w * m, true),
                    None => (f64::INFINITY, false),
                }
            }
        };
        KernelMoment {
            alpha,
            value: atoms + density,
            finite,
        }
    }

    /// Finite moments exist strictly below this rate.
    pub fn moment_abscissa(&self) -> f64 {
        self.density
            .as_ref()
            .map_or(f64::INFINITY, |d| d.shape.moment_abscissa())
    }

    /// Longest delay offset the kernel reaches (after tail truncation).
    pub fn support(&self, tail_tol: f64) -> f64 {
        let atoms = self.atoms.last().map_or(0.0, |a| a.location);
        let density = self.density.as_ref().map_or(0.0, |d| d.shape.cutoff(tail_tol));
        atoms.max(density)
    }

    /// `int_0^inf lookup(s) d_s K(t, s)`.
    ///
    /// Atoms are evaluated exactly. The density is integrated with composite
    /// Simpson on `[0, cutoff]` using panels no wider than `max_step`.
    pub fn convolve<E, F>(&self, t: f64, mut lookup: F, tail_tol: f64, max_step: f64) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        let mut acc = 0.0;
        for atom in &self.atoms {
            let w = atom.weight.eval(t);
            if w != 0.0 {
                acc += w * lookup(atom.location)?;
            }
        }
        if let Some(d) = &self.density {
            let w = d.weight.eval(t);
            if w != 0.0 {
                let cut = d.shape.cutoff(tail_tol);
                acc += w * simpson(|s| Ok(d.shape.eval(s) * lookup(s)?), cut, max_step)?;
            }
        }
        Ok(acc)
    }
}

/// Composite Simpson on `[0, len]` with an even number of panels of width
/// at most `max_step`.
pub(crate) fn simpson<E, F>(mut f: F, len: f64, max_step: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut panels = (len / max_step).ceil().max(2.0) as usize;
    if panels % 2 == 1 {
        panels += 1;
    }
    let dx = len / panels as f64;
    let mut sum = f(0.0)? + f(len)?;
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(k as f64 * dx)?;
    }
    Ok(sum * dx / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Wave;
    use std::convert::Infallible;

    fn ok(v: f64) -> Result<f64, Infallible> {
        Ok(v)
    }

    #[test]
    fn atom_total_variation() {
        let k = DelayKernel::atom(PeriodicExpr::wave((-1.0f64).exp(), Wave::Sin2, 4));
        assert!((k.total_variation(0.125) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(DelayKernel::empty().total_variation(0.3), 0.0);
    }

    #[test]
    fn exponential_mass_and_moments() {
        let k = DelayKernel::density(DensityShape::Exponential { rate: 2.0 }, 0.5.into());
        assert_eq!(k.total_variation(1.0), 0.5);
        let k1 = DelayKernel::density(DensityShape::Exponential { rate: 2.0 }, 1.0.into());
        let m = k1.exp_moment(0.0, 1.0);
        assert!(m.finite);
        assert!((m.value - 2.0).abs() < 1e-15);
        let m = k1.exp_moment(0.0, 2.0);
        assert!(!m.finite);
    }

    #[test]
    fn atom_moment() {
        let k = DelayKernel::atom_at(1.0, 0.3.into());
        assert_eq!(k.exp_moment(0.0, 0.0).value, 0.3);
        assert!((k.exp_moment(0.0, 0.5).value - 0.3 * 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn uniform_moment_closed_form() {
        let shape = DensityShape::Uniform { width: 2.0 };
        let m = shape.abs_exp_moment(0.7).unwrap();
        let expected = ((0.7f64 * 2.0).exp() - 1.0) / (0.7 * 2.0);
        assert!((m - expected).abs() < 1e-14);
    }

    #[test]
    fn table_moment_matches_fine_quadrature() {
        let shape = DensityShape::Table {
            width: 3.0,
            values: vec![0.5, -0.25, 1.0, 0.0],
        };
        for alpha in [0.0, 1e-6, 0.3, 1.2] {
            let n = 600_000;
            let dx = 3.0 / n as f64;
            // midpoint rule oracle
            let oracle: f64 = (0..n)
                .map(|k| {
                    let s = (k as f64 + 0.5) * dx;
                    (alpha * s).exp() * shape.eval(s).abs() * dx
                })
                .sum();
            let exact = shape.abs_exp_moment(alpha).unwrap();
            assert!((exact - oracle).abs() < 1e-8, "alpha={alpha}: {exact} vs {oracle}");
        }
    }

    #[test]
    fn validation_errors() {
        let bad = DelayKernel::atom_at(-1.0, 1.0.into());
        assert_eq!(bad.validate(), Err(KernelError::NegativeLocation(-1.0)));
        let unsorted = DelayKernel {
            atoms: vec![
                Atom { location: 1.0, weight: 1.0.into() },
                Atom { location: 0.5, weight: 1.0.into() },
            ],
            density: None,
        };
        assert_eq!(unsorted.validate(), Err(KernelError::UnsortedAtoms));
        let k = DelayKernel::density(DensityShape::Exponential { rate: 0.0 }, 1.0.into());
        assert_eq!(k.validate(), Err(KernelError::NonPositiveRate(0.0)));
    }

    #[test]
    fn convolve_atom_and_constant_density() {
        let k = DelayKernel::atom(1.0.into());
        assert_eq!(k.convolve(0.0, |_| ok(3.0), 1e-8, 1e-3).unwrap(), 3.0);

        let tol = 1e-8;
        let k = DelayKernel::density(DensityShape::Exponential { rate: 1.0 }, 1.0.into());
        let c = 2.5;
        let v = k.convolve(0.0, |_| ok(c), tol, 1e-2).unwrap();
        assert!((v - c).abs() <= 2.0 * tol * c, "{v}");
    }

    #[test]
    fn convolve_exponential_against_product() {
        let k = DelayKernel::density(DensityShape::Exponential { rate: 1.0 }, 1.0.into());
        let v = k.convolve(0.0, |s| ok((-s).exp()), 1e-8, 1e-2).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn convolve_propagates_lookup_errors() {
        let k = DelayKernel::density(DensityShape::Uniform { width: 1.0 }, 1.0.into());
        let r: Result<f64, &str> = k.convolve(0.0, |s| if s > 0.5 { Err("underrun") } else { Ok(1.0) }, 1e-8, 0.1);
        assert_eq!(r, Err("underrun"));
    }
}
