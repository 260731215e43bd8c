use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::PeriodicExpr;

/// Cubic Hermite basis on `theta in [0, 1]` (also used for extrapolation).
#[inline]
fn hermite(theta: f64, h: f64, y0: f64, f0: f64, y1: f64, f1: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
}

#[inline]
fn hermite_derivative(theta: f64, h: f64, y0: f64, f0: f64, y1: f64, f1: f64) -> f64 {
    let t2 = theta * theta;
    let d00 = 6.0 * t2 - 6.0 * theta;
    let d10 = 3.0 * t2 - 4.0 * theta + 1.0;
    let d01 = -6.0 * t2 + 6.0 * theta;
    let d11 = 3.0 * t2 - 2.0 * theta;
    (d00 * y0 + d01 * y1) / h + d10 * f0 + d11 * f1
}

/// Values and derivatives of an `n`-dimensional function on a uniform grid
/// `t0, t0 + step, ...`, evaluated by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSamples {
    pub n: usize,
    pub t0: f64,
    pub step: f64,
    /// Node-major: `values[k * n + i]`.
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl HermiteSamples {
    pub fn nodes(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.nodes() - 1) as f64 * self.step
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn node_derivative(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.n..(k + 1) * self.n]
    }

    /// Interval index and local coordinate, clamped to the sampled range.
    fn locate(&self, t: f64) -> (usize, f64) {
        let nodes = self.nodes();
        if nodes < 2 {
            return (0, 0.0);
        }
        let x = ((t - self.t0) / self.step).clamp(0.0, (nodes - 1) as f64);
        let k = (x.floor() as usize).min(nodes - 2);
        (k, x - k as f64)
    }

    pub fn eval(&self, t: f64, i: usize) -> f64 {
        if self.nodes() < 2 {
            return self.values[i];
        }
        let (k, theta) = self.locate(t);
        let n = self.n;
        hermite(
            theta,
            self.step,
            self.values[k * n + i],
            self.derivs[k * n + i],
            self.values[(k + 1) * n + i],
            self.derivs[(k + 1) * n + i],
        )
    }

    pub fn eval_derivative(&self, t: f64, i: usize) -> f64 {
        if self.nodes() < 2 {
            return self.derivs[i];
        }
        let (k, theta) = self.locate(t);
        let n = self.n;
        hermite_derivative(
            theta,
            self.step,
            self.values[k * n + i],
            self.derivs[k * n + i],
            self.values[(k + 1) * n + i],
            self.derivs[(k + 1) * n + i],
        )
    }
}

/// History on `(-inf, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    Constant(Vec<f64>),
    Functions(Vec<PeriodicExpr>),
    /// Samples ending at time 0; constant extension before the first node.
    Sampled(HermiteSamples),
    /// Samples over one period `[0, period]`, extended periodically.
    Periodic { samples: HermiteSamples, period: f64 },
}

impl InitialCondition {
    pub fn zeros(n: usize) -> Self {
        InitialCondition::Constant(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::Constant(v) => v.len(),
            InitialCondition::Functions(f) => f.len(),
            InitialCondition::Sampled(s) | InitialCondition::Periodic { samples: s, .. } => s.n,
        }
    }

    pub fn value(&self, t: f64, i: usize) -> f64 {
        match self {
            InitialCondition::Constant(v) => v[i],
            InitialCondition::Functions(f) => f[i].eval(t),
            InitialCondition::Sampled(s) => {
                if t <= s.t0 {
                    s.values[i]
                } else {
                    s.eval(t, i)
                }
            }
            InitialCondition::Periodic { samples, period } => samples.eval(samples.t0 + t.rem_euclid(*period), i),
        }
    }

    pub fn derivative(&self, t: f64, i: usize) -> f64 {
        match self {
            InitialCondition::Constant(_) => 0.0,
            InitialCondition::Functions(f) => f[i].derivative(t),
            InitialCondition::Sampled(s) => {
                if t < s.t0 {
                    0.0
                } else {
                    s.eval_derivative(t, i)
                }
            }
            InitialCondition::Periodic { samples, period } => {
                samples.eval_derivative(samples.t0 + t.rem_euclid(*period), i)
            }
        }
    }

    /// `sup_{s <= 0} max_i |phi_i(s)| / xi_i`, exact for constants and
    /// sampled data, grid-estimated for closed-form functions.
    pub fn weighted_sup(&self, xi: &[f64]) -> f64 {
        let n = self.dim();
        let of = |vals: &mut dyn Iterator<Item = (usize, f64)>| {
            vals.map(|(i, v)| v.abs() / xi[i]).fold(0.0, f64::max)
        };
        match self {
            InitialCondition::Constant(v) => of(&mut v.iter().cloned().enumerate()),
            InitialCondition::Functions(f) => of(&mut (0..4096)
                .flat_map(|k| (0..n).map(move |i| (i, k)))
                .map(|(i, k)| (i, f[i].eval(-(k as f64) * 1e-3)))),
            InitialCondition::Sampled(s) | InitialCondition::Periodic { samples: s, .. } => {
                of(&mut s.values.iter().enumerate().map(|(k, v)| (k % n, *v)))
            }
        }
    }
}

/// Past of a running simulation: the initial condition followed by solver
/// nodes on `0, h, 2h, ...`.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    n: usize,
    h: f64,
    initial: InitialCondition,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl HistoryBuffer {
    pub fn new(initial: InitialCondition, h: f64) -> Self {
        let n = initial.dim();
        let values = (0..n).map(|i| initial.value(0.0, i)).collect();
        Self {
            n,
            h,
            initial,
            values,
            derivs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.n
    }

    /// Nodes with a known derivative.
    pub fn complete(&self) -> usize {
        self.derivs.len() / self.n
    }

    pub fn last_time(&self) -> f64 {
        (self.nodes() - 1) as f64 * self.h
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn node_derivative(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.n..(k + 1) * self.n]
    }

    pub(crate) fn push_node(&mut self, u: &[f64]) {
        debug_assert_eq!(self.complete(), self.nodes());
        self.values.extend_from_slice(u);
    }

    pub(crate) fn set_last_derivative(&mut self, du: &[f64]) {
        debug_assert_eq!(self.complete() + 1, self.nodes());
        self.derivs.extend_from_slice(du);
    }

    /// Value at `t`. Inside the covered range this is the Hermite interpolant
    /// (quadratic on the newest interval while its end derivative is still
    /// pending); never extrapolates.
    pub fn lookup(&self, t: f64, i: usize) -> Result<f64, SimError> {
        if t <= 0.0 {
            return Ok(self.initial.value(t, i));
        }
        let last = self.last_time();
        if t > last * (1.0 + 1e-14) + 1e-14 {
            return Err(SimError::HistoryUnderrun { t, covered: last });
        }
        Ok(self.interpolate(t, i))
    }

    fn interpolate(&self, t: f64, i: usize) -> f64 {
        let nodes = self.nodes();
        let n = self.n;
        if nodes == 1 {
            return self.values[i];
        }
        let x = (t / self.h).min((nodes - 1) as f64);
        let k = (x.floor() as usize).min(nodes - 2);
        let theta = x - k as f64;
        let y0 = self.values[k * n + i];
        let y1 = self.values[(k + 1) * n + i];
        let f0 = self.derivs[k * n + i];
        if k + 1 < self.complete() {
            hermite(theta, self.h, y0, f0, y1, self.derivs[(k + 1) * n + i])
        } else {
            y0 + theta * self.h * f0 + theta * theta * (y1 - y0 - self.h * f0)
        }
    }

    /// Lookup used for Runge-Kutta stages: times up to one step past the
    /// newest node come from extrapolating the newest complete Hermite piece.
    pub(crate) fn lookup_running(&self, t: f64, i: usize) -> Result<f64, SimError> {
        let last = self.last_time();
        if t <= last {
            return self.lookup(t, i);
        }
        if t > last + self.h * (1.0 + 1e-9) {
            return Err(SimError::HistoryUnderrun { t, covered: last });
        }
        let nodes = self.nodes();
        let n = self.n;
        let k = nodes - 1;
        if self.complete() < nodes {
            return Ok(self.values[k * n + i]);
        }
        if nodes == 1 {
            return Ok(self.values[i] + t * self.derivs[i]);
        }
        let theta = (t - (k - 1) as f64 * self.h) / self.h;
        Ok(hermite(
            theta,
            self.h,
            self.values[(k - 1) * n + i],
            self.derivs[(k - 1) * n + i],
            self.values[k * n + i],
            self.derivs[k * n + i],
        ))
    }

    /// Samples on `count` nodes ending at `end_time` (a node time), re-based
    /// so the last node sits at time 0. Times before 0 come from the initial
    /// condition.
    pub fn window(&self, end_time: f64, count: usize) -> HermiteSamples {
        let n = self.n;
        let end_idx = (end_time / self.h).round() as i64;
        let mut values = Vec::with_capacity(count * n);
        let mut derivs = Vec::with_capacity(count * n);
        for m in 0..count {
            let idx = end_idx - (count - 1 - m) as i64;
            if idx >= 0 {
                let idx = idx as usize;
                values.extend_from_slice(self.node(idx));
                derivs.extend_from_slice(self.node_derivative(idx));
            } else {
                let t = idx as f64 * self.h;
                values.extend((0..n).map(|i| self.initial.value(t, i)));
                derivs.extend((0..n).map(|i| self.initial.derivative(t, i)));
            }
        }
        HermiteSamples {
            n,
            t0: -((count - 1) as f64) * self.h,
            step: self.h,
            values,
            derivs,
        }
    }
}
