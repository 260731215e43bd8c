use std::fmt;
use std::ops::{Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{Activation, ConstantViolation};
use super::expr::PeriodicExpr;
use crate::kernels::{DelayKernel, KernelError};

/// Row-major `n x n` storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone> SquareMatrix<T> {
    pub fn filled(n: usize, value: T) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }
}

impl<T> SquareMatrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let n = self.n;
        self.data.iter().enumerate().map(move |(k, v)| ((k / n, k % n), v))
    }
}

impl<T> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for SquareMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// The general periodic delayed network
///
/// ```text
/// du_i/dt = -d_i(t) u_i + sum_j a_ij(t) g_j(u_j(t))
///           + sum_j int_0^inf f_j(u_j(t - tau_ij(t) - s)) d_s K_ij(t, s) + I_i(t)
/// ```
///
/// Discrete delays are kernels with a single atom at `s = 0`; distributed
/// delays carry their weight `b_ij(t)` on a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub n: usize,
    pub omega: f64,
    pub d: Vec<PeriodicExpr>,
    pub a: SquareMatrix<PeriodicExpr>,
    pub kernels: SquareMatrix<DelayKernel>,
    pub tau: SquareMatrix<PeriodicExpr>,
    pub inputs: Vec<PeriodicExpr>,
    pub g: Vec<Activation>,
    pub f: Vec<Activation>,
}

/// Coefficient values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSlice {
    pub t: f64,
    pub d: Vec<f64>,
    pub a: SquareMatrix<f64>,
    pub tau: SquareMatrix<f64>,
    pub inputs: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub grid_points: usize,
    pub activation_samples: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            activation_samples: 100_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension(String),
    NonPositivePeriod(f64),
    NonPositiveSelfInhibition { i: usize, t: f64, value: f64 },
    NegativeDelay { i: usize, j: usize, t: f64, value: f64 },
    PeriodMismatch { what: String },
    NotPeriodic { what: String, t: f64 },
    Kernel { i: usize, j: usize, error: KernelError },
    Activation { which: String, violation: ConstantViolation },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Violation::NonPositivePeriod(w) => write!(f, "period must be positive, got {w}"),
            Violation::NonPositiveSelfInhibition { i, t, value } => {
                write!(f, "d_{} not positive at t={t} (value {value})", i + 1)
            }
            Violation::NegativeDelay { i, j, t, value } => {
                write!(f, "negative delay tau_{}{} = {value} at t={t}", i + 1, j + 1)
            }
            Violation::PeriodMismatch { what } => write!(f, "{what} does not repeat with the declared period"),
            Violation::NotPeriodic { what, t } => write!(f, "{what} differs from its shift by one period at t={t}"),
            Violation::Kernel { i, j, error } => write!(f, "kernel K_{}{}: {error}", i + 1, j + 1),
            Violation::Activation { which, violation } => write!(f, "activation {which}: {violation:?}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl NetworkModel {
    /// All coefficients zero, `tanh` instantaneous and `arctan` delayed
    /// activations. Not admissible until `d` is set positive.
    pub fn zeros(n: usize, omega: f64) -> Self {
        Self {
            n,
            omega,
            d: vec![PeriodicExpr::zero(); n],
            a: SquareMatrix::filled(n, PeriodicExpr::zero()),
            kernels: SquareMatrix::filled(n, DelayKernel::empty()),
            tau: SquareMatrix::filled(n, PeriodicExpr::zero()),
            inputs: vec![PeriodicExpr::zero(); n],
            g: vec![Activation::tanh(); n],
            f: vec![Activation::arctan(); n],
        }
    }

    pub fn coefficients(&self, t: f64) -> CoefficientSlice {
        CoefficientSlice {
            t,
            d: self.d.iter().map(|e| e.eval(t)).collect(),
            a: SquareMatrix::from_fn(self.n, |i, j| self.a[(i, j)].eval(t)),
            tau: SquareMatrix::from_fn(self.n, |i, j| self.tau[(i, j)].eval(t)),
            inputs: self.inputs.iter().map(|e| e.eval(t)).collect(),
        }
    }

    /// Uniform grid of `points` instants covering one period `[0, omega)`.
    pub fn period_grid(&self, points: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        let points = points.max(1);
        (0..points).map(move |k| self.omega * k as f64 / points as f64)
    }

    /// Every periodic expression in the model with a printable name.
    pub fn named_exprs(&self) -> Vec<(String, &PeriodicExpr)> {
        let mut out = Vec::new();
        for (i, e) in self.d.iter().enumerate() {
            out.push((format!("d_{}", i + 1), e));
        }
        for ((i, j), e) in self.a.iter() {
            out.push((format!("a_{}{}", i + 1, j + 1), e));
        }
        for ((i, j), e) in self.tau.iter() {
            out.push((format!("tau_{}{}", i + 1, j + 1), e));
        }
        for (i, e) in self.inputs.iter().enumerate() {
            out.push((format!("I_{}", i + 1), e));
        }
        for ((i, j), k) in self.kernels.iter() {
            for (m, atom) in k.atoms.iter().enumerate() {
                out.push((format!("K_{}{} atom {}", i + 1, j + 1, m + 1), &atom.weight));
            }
            if let Some(d) = &k.density {
                out.push((format!("K_{}{} density weight", i + 1, j + 1), &d.weight));
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&ValidationOptions::default())
    }

    pub fn validate_with(&self, opts: &ValidationOptions) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n;
        let dims_ok = self.d.len() == n
            && self.inputs.len() == n
            && self.g.len() == n
            && self.f.len() == n
            && self.a.dim() == n
            && self.tau.dim() == n
            && self.kernels.dim() == n;
        if !dims_ok || n == 0 {
            violations.push(Violation::Dimension(format!("model declares n={n}")));
            return ValidationReport { violations };
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            violations.push(Violation::NonPositivePeriod(self.omega));
            return ValidationReport { violations };
        }

        for (name, e) in self.named_exprs() {
            if !e.has_period(self.omega) {
                violations.push(Violation::PeriodMismatch { what: name });
            } else if let Some(t) = self
                .period_grid(opts.grid_points)
                .find(|&t| {
                    let v = e.eval(t);
                    (v - e.eval(t + self.omega)).abs() > 1e-12 * (1.0 + v.abs())
                })
            {
                violations.push(Violation::NotPeriodic { what: name, t });
            }
        }

        let grid: Vec<f64> = self.period_grid(opts.grid_points).collect();
        for (i, e) in self.d.iter().enumerate() {
            let (t, value) = argmin(&grid, e);
            if value <= 0.0 {
                violations.push(Violation::NonPositiveSelfInhibition { i, t, value });
            }
        }
        for ((i, j), e) in self.tau.iter() {
            let (t, value) = argmin(&grid, e);
            if value < 0.0 {
                violations.push(Violation::NegativeDelay { i, j, t, value });
            }
        }
        for ((i, j), k) in self.kernels.iter() {
            if let Err(error) = k.validate() {
                violations.push(Violation::Kernel { i, j, error });
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let acts = self
            .g
            .iter()
            .enumerate()
            .map(|(j, a)| (format!("g_{}", j + 1), a))
            .chain(self.f.iter().enumerate().map(|(j, a)| (format!("f_{}", j + 1), a)));
        for (which, act) in acts {
            let found = act
                .check_growth(opts.activation_samples)
                .or_else(|| act.check_lipschitz(&mut rng, opts.activation_samples));
            if let Some(violation) = found {
                violations.push(Violation::Activation { which, violation });
            }
        }
        ValidationReport { violations }
    }
}

fn argmin(grid: &[f64], e: &PeriodicExpr) -> (f64, f64) {
    grid.iter()
        .map(|&t| (t, e.eval(t)))
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}
