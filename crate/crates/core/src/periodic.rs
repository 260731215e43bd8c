//! Periodic orbit as a fixed point of the period map `T: phi -> x_omega(phi)`
//! and empirical decay rates towards it.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::integrate::{simulate, write_csv_header, write_csv_row, HermiteSamples, InitialCondition, SimError, SimOptions, Trajectory};
use crate::kernels::DEFAULT_TAIL_TOL;
use crate::model::NetworkModel;

/// Values below this are left out of decay fits.
pub const FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PeriodicError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("step {h} does not divide the period {omega}")]
    StepNotDividingPeriod { h: f64, omega: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {last:e})", last = residual_history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { iterations: usize, residual_history: Vec<f64> },
    #[error("decay fit on [{}, {}] has too few usable points", window.0, window.1)]
    DegenerateFit { window: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOptions {
    pub h: f64,
    pub fp_tol: f64,
    pub max_iters: usize,
    pub tail_tol: f64,
    /// Weights of the sup norm; all ones when absent.
    pub xi: Option<Vec<f64>>,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self {
            h: 1e-3,
            fp_tol: 1e-10,
            max_iters: 1000,
            tail_tol: DEFAULT_TAIL_TOL,
            xi: None,
        }
    }
}

impl PeriodicOptions {
    fn weights(&self, n: usize) -> Vec<f64> {
        self.xi.clone().unwrap_or_else(|| vec![1.0; n])
    }

    fn sim(&self, t_end: f64) -> SimOptions {
        SimOptions {
            t_end,
            h: self.h,
            tail_tol: self.tail_tol,
        }
    }
}

/// One period of a periodic solution, sampled on `0, h, ..., omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSegment {
    pub samples: HermiteSamples,
    pub omega: f64,
}

impl PeriodSegment {
    pub fn dim(&self) -> usize {
        self.samples.n
    }

    /// Grid points per period.
    pub fn nodes(&self) -> usize {
        self.samples.nodes() - 1
    }

    pub fn state(&self, k: usize) -> &[f64] {
        self.samples.node(k % self.nodes())
    }

    pub fn eval(&self, t: f64, i: usize) -> f64 {
        self.samples.eval(t.rem_euclid(self.omega), i)
    }

    /// Max gap between the states at `0` and `omega`.
    pub fn seam_gap(&self) -> f64 {
        let last = self.nodes();
        self.samples
            .node(0)
            .iter()
            .zip(self.samples.node(last))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The last whole period of `traj` that ends on a multiple of `omega`.
    pub fn final_period(traj: &Trajectory, omega: f64) -> Result<Self, PeriodicError> {
        let h = traj.step();
        let k = (omega / h).round() as usize;
        if k == 0 || ((omega / h) - k as f64).abs() > 1e-9 * k as f64 {
            return Err(PeriodicError::StepNotDividingPeriod { h, omega });
        }
        let end = (traj.len() - 1) / k * k;
        if end < k {
            return Err(PeriodicError::Sim(SimError::HistoryUnderrun {
                t: -omega,
                covered: traj.t_end(),
            }));
        }
        let nodes = end - k..=end;
        Ok(Self {
            samples: HermiteSamples {
                n: traj.dim(),
                t0: 0.0,
                step: h,
                values: nodes.clone().flat_map(|m| traj.state(m).to_vec()).collect(),
                derivs: nodes.flat_map(|m| traj.derivative(m).to_vec()).collect(),
            },
            omega,
        })
    }

    pub fn as_initial_condition(&self) -> InitialCondition {
        InitialCondition::Periodic {
            samples: self.samples.clone(),
            period: self.omega,
        }
    }

    /// Rows `t, u_1..u_n` over `[0, omega)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write_csv_header(&mut w, self.dim())?;
        for k in 0..self.nodes() {
            write_csv_row(&mut w, k as f64 * self.samples.step, self.samples.node(k))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha_emp: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct OrbitSearch {
    pub segment: PeriodSegment,
    /// Weighted sup distance between the last two iterates on the window nodes.
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// The converged history `phi*`.
    pub history: InitialCondition,
}

fn steps_per_period(model: &NetworkModel, h: f64) -> Result<usize, PeriodicError> {
    let k = model.omega / h;
    let r = k.round();
    if !(h > 0.0) || r < 1.0 || (k - r).abs() > 1e-9 * k {
        return Err(PeriodicError::StepNotDividingPeriod { h, omega: model.omega });
    }
    Ok(r as usize)
}

/// Nodes of the trailing window kept by the period map: the longest lookback
/// of any coupling, rounded up to whole steps, plus the endpoint.
pub fn history_nodes(model: &NetworkModel, h: f64, tail_tol: f64) -> usize {
    let lookback = model
        .kernels
        .iter()
        .filter(|(_, k)| !k.is_empty())
        .map(|((i, j), k)| model.tau[(i, j)].abs_bound() + k.support(tail_tol))
        .fold(0.0, f64::max);
    (lookback / h * (1.0 - 1e-12)).ceil() as usize + 2
}

fn period_step(model: &NetworkModel, ic: &InitialCondition, opts: &PeriodicOptions) -> Result<(InitialCondition, Trajectory), PeriodicError> {
    steps_per_period(model, opts.h)?;
    let traj = simulate(model, ic, &opts.sim(model.omega))?;
    let window = traj
        .history()
        .window(traj.t_end(), history_nodes(model, opts.h, opts.tail_tol));
    Ok((InitialCondition::Sampled(window), traj))
}

/// `T phi`: the solution history one period later, as sampled data on the
/// trailing lookback window, re-based to end at time 0.
pub fn period_map(model: &NetworkModel, ic: &InitialCondition, opts: &PeriodicOptions) -> Result<InitialCondition, PeriodicError> {
    period_step(model, ic, opts).map(|(next, _)| next)
}

/// Values of `ic` on the window nodes `-(count-1) h, ..., 0`.
fn window_values(ic: &InitialCondition, count: usize, h: f64) -> Vec<f64> {
    if let InitialCondition::Sampled(s) = ic {
        if s.nodes() == count && s.step == h {
            return s.values.clone();
        }
    }
    let n = ic.dim();
    (0..count)
        .flat_map(|m| {
            let t = -((count - 1 - m) as f64) * h;
            (0..n).map(move |i| ic.value(t, i))
        })
        .collect()
}

fn weighted_gap(a: &[f64], b: &[f64], xi: &[f64]) -> f64 {
    let n = xi.len();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| (x - y).abs() / xi[k % n])
        .fold(0.0, f64::max)
}

/// Picard iteration of the period map from `ic0`.
pub fn find_periodic_orbit(model: &NetworkModel, ic0: &InitialCondition, opts: &PeriodicOptions) -> Result<OrbitSearch, PeriodicError> {
    let k = steps_per_period(model, opts.h)?;
    let count = history_nodes(model, opts.h, opts.tail_tol);
    let xi = opts.weights(model.n);
    let mut current = ic0.clone();
    let mut current_values = window_values(&current, count, opts.h);
    let mut residual_history = Vec::new();
    for iteration in 1..=opts.max_iters {
        let (next, traj) = period_step(model, &current, opts)?;
        let next_values = window_values(&next, count, opts.h);
        let residual = weighted_gap(&current_values, &next_values, &xi);
        residual_history.push(residual);
        log::debug!("period map iteration {iteration}: residual {residual:e}");
        if residual <= opts.fp_tol {
            let history = traj.history();
            let segment = PeriodSegment {
                samples: HermiteSamples {
                    n: model.n,
                    t0: 0.0,
                    step: opts.h,
                    values: (0..=k).flat_map(|m| history.node(m).to_vec()).collect(),
                    derivs: (0..=k).flat_map(|m| history.node_derivative(m).to_vec()).collect(),
                },
                omega: model.omega,
            };
            return Ok(OrbitSearch {
                segment,
                residual,
                iterations: iteration,
                residual_history,
                history: next,
            });
        }
        let m = residual_history.len();
        if m > 20 && residual > 0.99 * residual_history[m - 21] {
            return Err(PeriodicError::NoConvergence {
                iterations: iteration,
                residual_history,
            });
        }
        current = next;
        current_values = next_values;
    }
    Err(PeriodicError::NoConvergence {
        iterations: opts.max_iters,
        residual_history,
    })
}

/// Max weighted gap `|u(t + omega) - u(t)|` over the grid points `t` with
/// `t >= from` and `t + omega <= t_end`.
pub fn trajectory_periodicity(traj: &Trajectory, omega: f64, from: f64, xi: &[f64]) -> f64 {
    let shift = (omega / traj.step()).round() as usize;
    let start = traj.index_of(from);
    let mut worst = 0.0f64;
    for k in start..traj.len().saturating_sub(shift) {
        worst = worst.max(weighted_gap(traj.state(k), traj.state(k + shift), xi));
    }
    worst
}

/// Simulates `k_periods` from the segment used as history and returns the
/// largest one-period gap on the grid.
pub fn verify_periodicity(model: &NetworkModel, segment: &PeriodSegment, k_periods: usize, opts: &PeriodicOptions) -> Result<f64, PeriodicError> {
    steps_per_period(model, opts.h)?;
    let traj = simulate(model, &segment.as_initial_condition(), &opts.sim(k_periods as f64 * model.omega))?;
    Ok(trajectory_periodicity(&traj, model.omega, 0.0, &opts.weights(model.n)))
}

/// Least-squares slope of `ln e` against `t`, reported as a decay rate.
pub fn fit_decay<I>(points: I, window: (f64, f64)) -> Result<RateFit, PeriodicError>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(t, e)| t >= window.0 && t <= window.1 && e >= FIT_FLOOR && e.is_finite())
        .map(|(t, e)| (t, e.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 3 {
        return Err(PeriodicError::DegenerateFit { window });
    }
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if stt <= 0.0 {
        return Err(PeriodicError::DegenerateFit { window });
    }
    let slope = sty / stt;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    Ok(RateFit {
        alpha_emp: -slope,
        r_squared,
        window,
        points: pts.len(),
    })
}

/// Decay rate of the weighted distance between two trajectories on the same
/// grid, fitted over `[t_end / 4, t_end]`.
pub fn fit_trajectory_gap(a: &Trajectory, b: &Trajectory, xi: &[f64]) -> Result<RateFit, PeriodicError> {
    let t_end = a.t_end().min(b.t_end());
    let len = a.len().min(b.len());
    fit_decay(
        (0..len).map(|k| (a.time(k), weighted_gap(a.state(k), b.state(k), xi))),
        (t_end / 4.0, t_end),
    )
}

/// Simulates from `ic` and fits the decay of its weighted distance to the
/// periodic orbit `segment` over `[t_end / 4, t_end]`.
pub fn estimate_decay_rate(
    model: &NetworkModel,
    segment: &PeriodSegment,
    ic: &InitialCondition,
    t_end: f64,
    opts: &PeriodicOptions,
) -> Result<RateFit, PeriodicError> {
    let traj = simulate(model, ic, &opts.sim(t_end))?;
    let xi = opts.weights(model.n);
    let k_per = segment.nodes();
    let gaps = (0..traj.len()).map(|k| {
        let e = weighted_gap(traj.state(k), segment.state(k % k_per), &xi);
        (traj.time(k), e)
    });
    fit_decay(gaps, (t_end / 4.0, t_end))
}
