//! Fixed-step classical Runge-Kutta for the delayed network, with a dense
//! cubic Hermite history for delayed lookups.

mod history;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use history::{HermiteSamples, HistoryBuffer, InitialCondition};

use crate::kernels::DEFAULT_TAIL_TOL;
use crate::model::NetworkModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("delayed lookup at t={t} beyond computed history (covered up to {covered})")]
    HistoryUnderrun { t: f64, covered: f64 },
    #[error("solution became non-finite at t={t}")]
    Divergence { t: f64 },
    #[error("initial condition has {got} components, model has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("step {h} must be positive and finite")]
    BadStep { h: f64 },
    #[error("end time {t_end} is not a non-negative multiple of the step {h}")]
    EndNotMultipleOfStep { t_end: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    pub h: f64,
    /// Tail mass dropped when truncating infinite-support delay densities.
    pub tail_tol: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_end: 20.0,
            h: 1e-3,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl SimOptions {
    pub fn new(t_end: f64, h: f64) -> Self {
        Self {
            t_end,
            h,
            ..Self::default()
        }
    }

    pub fn steps(&self) -> Result<usize, SimError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SimError::BadStep { h: self.h });
        }
        let k = self.t_end / self.h;
        let steps = k.round();
        if !(self.t_end >= 0.0) || (k - steps).abs() > 1e-9 * k.max(1.0) {
            return Err(SimError::EndNotMultipleOfStep {
                t_end: self.t_end,
                h: self.h,
            });
        }
        Ok(steps as usize)
    }
}

/// Right-hand side of the network at time `t` for state `u`, with delayed
/// values supplied by `past`.
pub fn rhs<F>(model: &NetworkModel, t: f64, u: &[f64], past: F, tail_tol: f64, max_step: f64, out: &mut [f64]) -> Result<(), SimError>
where
    F: Fn(f64, usize) -> Result<f64, SimError>,
{
    let n = model.n;
    let gu: Vec<f64> = (0..n).map(|j| model.g[j].eval(u[j])).collect();
    for i in 0..n {
        let mut acc = -model.d[i].eval(t) * u[i] + model.inputs[i].eval(t);
        for j in 0..n {
            let a = &model.a[(i, j)];
            if !a.is_zero() {
                acc += a.eval(t) * gu[j];
            }
            let kernel = &model.kernels[(i, j)];
            if kernel.is_empty() {
                continue;
            }
            let base = t - model.tau[(i, j)].eval(t);
            let f = &model.f[j];
            acc += kernel.convolve(t, |s| Ok(f.eval(past(base - s, j)?)), tail_tol, max_step)?;
        }
        out[i] = acc;
    }
    Ok(())
}

/// Smallest delay the model can produce, if every coupling is delayed.
fn min_positive_delay(model: &NetworkModel) -> Option<f64> {
    let mut min = f64::INFINITY;
    for ((i, j), kernel) in model.kernels.iter() {
        if kernel.is_empty() {
            continue;
        }
        let (tau_lo, _) = model.tau[(i, j)].range_bound();
        let offset = if kernel.density.is_some() {
            0.0
        } else {
            kernel.atoms.first().map_or(0.0, |a| a.location)
        };
        min = min.min(tau_lo.max(0.0) + offset);
    }
    (min.is_finite() && min > 0.0).then_some(min)
}

/// Integrates the model on `[0, t_end]` from history `initial`.
pub fn simulate(model: &NetworkModel, initial: &InitialCondition, opts: &SimOptions) -> Result<Trajectory, SimError> {
    let n = model.n;
    if initial.dim() != n {
        return Err(SimError::Dimension {
            expected: n,
            got: initial.dim(),
        });
    }
    let steps = opts.steps()?;
    let h = opts.h;
    if let Some(delay) = min_positive_delay(model) {
        if h >= delay {
            log::warn!("step {h} is not below the smallest delay {delay}; delayed terms will be extrapolated");
        }
    }
    let mut buf = HistoryBuffer::new(initial.clone(), h);
    let mut u: Vec<f64> = buf.node(0).to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let tail = opts.tail_tol;
    for step in 0..steps {
        let t = step as f64 * h;
        rhs(model, t, &u, |s, j| buf.lookup(s, j), tail, h, &mut k1)?;
        buf.set_last_derivative(&k1);
        let past = |s: f64, j: usize| buf.lookup_running(s, j);
        for i in 0..n {
            stage[i] = u[i] + 0.5 * h * k1[i];
        }
        rhs(model, t + 0.5 * h, &stage, past, tail, h, &mut k2)?;
        for i in 0..n {
            stage[i] = u[i] + 0.5 * h * k2[i];
        }
        rhs(model, t + 0.5 * h, &stage, past, tail, h, &mut k3)?;
        for i in 0..n {
            stage[i] = u[i] + h * k3[i];
        }
        rhs(model, t + h, &stage, past, tail, h, &mut k4)?;
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(SimError::Divergence { t: t + h });
        }
        buf.push_node(&u);
    }
    let t = steps as f64 * h;
    rhs(model, t, &u, |s, j| buf.lookup(s, j), tail, h, &mut k1)?;
    buf.set_last_derivative(&k1);
    Ok(Trajectory { steps, buffer: buf })
}

/// Solver output on the grid `0, h, ..., t_end` together with the history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: usize,
    buffer: HistoryBuffer,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.buffer.dim()
    }

    pub fn step(&self) -> f64 {
        self.buffer.step()
    }

    /// Number of grid points (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.buffer.step()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        self.buffer.node(k)
    }

    pub fn derivative(&self, k: usize) -> &[f64] {
        self.buffer.node_derivative(k)
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.steps)
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.buffer
    }

    /// Dense output at any `t <= t_end` (initial condition for `t <= 0`).
    pub fn value_at(&self, t: f64, i: usize) -> Result<f64, SimError> {
        self.buffer.lookup(t, i)
    }

    /// Index of the grid point nearest `t`, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.step()).round().max(0.0) as usize).min(self.steps)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write_csv_header(&mut w, self.dim())?;
        for k in 0..self.len() {
            write_csv_row(&mut w, self.time(k), self.state(k))?;
        }
        Ok(())
    }
}

pub(crate) fn write_csv_header<W: Write>(w: &mut W, n: usize) -> io::Result<()> {
    write!(w, "t")?;
    for i in 1..=n {
        write!(w, ",u_{i}")?;
    }
    writeln!(w)
}

pub(crate) fn write_csv_row<W: Write>(w: &mut W, t: f64, u: &[f64]) -> io::Result<()> {
    write!(w, "{t:.16e}")?;
    for v in u {
        write!(w, ",{v:.16e}")?;
    }
    writeln!(w)
}

/// Observed order `log2(e(h) / e(h/2))`, where `e(h)` is the max-norm gap
/// between the runs at `h` and `h/2` on the coarse grid inside `window`.
pub fn convergence_order(
    model: &NetworkModel,
    initial: &InitialCondition,
    t_end: f64,
    h: f64,
    window: (f64, f64),
) -> Result<f64, SimError> {
    let runs = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&step| simulate(model, initial, &SimOptions::new(t_end, step)))
        .collect::<Result<Vec<_>, _>>()?;
    let gap = |coarse: &Trajectory, fine: &Trajectory| {
        let mut worst = 0.0f64;
        for k in 0..coarse.len() {
            let t = coarse.time(k);
            if t < window.0 - 1e-12 || t > window.1 + 1e-12 {
                continue;
            }
            let a = coarse.state(k);
            let b = fine.state(2 * k);
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    };
    let e1 = gap(&runs[0], &runs[1]);
    let e2 = gap(&runs[1], &runs[2]);
    Ok((e1 / e2).log2())
}
