//! Sufficient conditions for existence and exponential attraction of a
//! periodic solution.
//!
//! For weights `xi > 0` the row residual at `(t, i)` is
//!
//! ```text
//! r_i(t; alpha) = -xi_i (d_i(t) - alpha) + sum_j xi_j G_j |a_ij(t)|
//!                 + sum_j xi_j F_j e^{alpha tau_ij(t)} int_0^inf e^{alpha s} |d_s K_ij(t, s)|
//! ```
//!
//! Existence needs `r_i(t; 0) <= -eta < 0` for every `t`; exponential
//! attraction at rate `alpha` needs `r_i(t; alpha) <= 0`. Both are linear in
//! `xi`, so once `t` is restricted to a grid the weight search is a linear
//! program.

mod perron;
mod rivals;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::model::{NetworkModel, SquareMatrix};

pub use perron::{perron_vector, PerronEstimate};
pub use rivals::{
    check_condition_3_3, check_cor1_2_14, check_cor2_2_18, check_l_3_4, check_thm_a_3_1, search_condition_3_3,
    search_thm_a_3_1, ConstantDelayForm, Criterion, CriterionReport, ShapeError, ThmASearch, Witness,
};
pub use simplex::{LinearProgram, LpOutcome};

/// Strict inequalities `< 0` are checked as `<= -STRICT_TOL`.
pub const STRICT_TOL: f64 = 1e-12;

/// Weight box upper bound (lower bound is 1).
pub const XI_BOX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub grid_points: usize,
    pub alpha_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            alpha_tol: 1e-6,
        }
    }
}

/// A-priori bounds of the invariant-set construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `max_i max_t { sum_j |a_ij| C_j + sum_j D_j TV_ij + |I_i| }`
    pub j: f64,
    /// Trajectory bound, `M > J / eta`.
    pub m: f64,
    /// Derivative bound `(d_hat + a_hat + k_hat) M + c_hat`.
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Weights, normalized so that `min xi = 1`.
    pub xi: Vec<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub bounds: Bounds,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    /// `-max_{t, i} r_i(t)`; positive means the condition holds.
    pub eta: f64,
    pub satisfied: bool,
    pub worst_row: usize,
    pub worst_t: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error(
        "no weights satisfy the existence condition on a {grid_points}-point grid \
         (best margin {best_eta:.6e}, tightest at row {} t={worst_t})", worst_row + 1
    )]
    Infeasible {
        best_eta: f64,
        worst_row: usize,
        worst_t: f64,
        grid_points: usize,
    },
    #[error("weight linear program failed: {0}")]
    Solver(String),
}

impl CertifyError {
    pub fn best_eta(&self) -> Option<f64> {
        match self {
            CertifyError::Infeasible { best_eta, .. } => Some(*best_eta),
            CertifyError::Solver(_) => None,
        }
    }
}

/// Coefficients `c_j` with `r_i(t; alpha) = sum_j c_j xi_j`. Infinite
/// entries signal a divergent kernel moment.
pub fn row_coefficients(model: &NetworkModel, t: f64, i: usize, alpha: f64) -> Vec<f64> {
    let mut c = vec![0.0; model.n];
    row_coefficients_into(model, t, i, alpha, &mut c);
    c
}

fn row_coefficients_into(model: &NetworkModel, t: f64, i: usize, alpha: f64, out: &mut [f64]) {
    for (j, c) in out.iter_mut().enumerate() {
        let inst = model.g[j].lipschitz * model.a[(i, j)].eval(t).abs();
        let kernel = &model.kernels[(i, j)];
        let delayed = if kernel.atoms.is_empty() && kernel.density.is_none() {
            0.0
        } else {
            let moment = kernel.exp_moment(t, alpha);
            if !moment.finite {
                f64::INFINITY
            } else if alpha == 0.0 {
                model.f[j].lipschitz * moment.value
            } else {
                model.f[j].lipschitz * (alpha * model.tau[(i, j)].eval(t)).exp() * moment.value
            }
        };
        *c = inst + delayed;
    }
    out[i] -= model.d[i].eval(t) - alpha;
}

/// Left side of the rate condition at `(t, i)`.
pub fn alpha_residual(model: &NetworkModel, xi: &[f64], t: f64, i: usize, alpha: f64) -> f64 {
    row_coefficients(model, t, i, alpha)
        .iter()
        .zip(xi)
        .map(|(c, x)| c * x)
        .sum()
}

/// Left side of the existence condition at `(t, i)`.
pub fn row_residual(model: &NetworkModel, xi: &[f64], t: f64, i: usize) -> f64 {
    alpha_residual(model, xi, t, i, 0.0)
}

/// Row coefficients sampled on a period grid.
struct RowSystem {
    n: usize,
    grid: Vec<f64>,
    /// `[grid][row][col]` flattened.
    coeffs: Vec<f64>,
}

impl RowSystem {
    fn build(model: &NetworkModel, grid_points: usize, alpha: f64) -> Self {
        let n = model.n;
        let grid: Vec<f64> = model.period_grid(grid_points).collect();
        let mut coeffs = vec![0.0; grid.len() * n * n];
        for (k, &t) in grid.iter().enumerate() {
            for i in 0..n {
                let base = (k * n + i) * n;
                row_coefficients_into(model, t, i, alpha, &mut coeffs[base..base + n]);
            }
        }
        Self { n, grid, coeffs }
    }

    fn row(&self, k: usize, i: usize) -> &[f64] {
        let base = (k * self.n + i) * self.n;
        &self.coeffs[base..base + self.n]
    }

    fn residual(&self, k: usize, i: usize, xi: &[f64]) -> f64 {
        self.row(k, i).iter().zip(xi).map(|(c, x)| c * x).sum()
    }

    /// `(max residual, row, grid index)`.
    fn worst(&self, xi: &[f64]) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for k in 0..self.grid.len() {
            for i in 0..self.n {
                let r = self.residual(k, i, xi);
                if r > best.0 || r.is_nan() {
                    best = (r, i, k);
                }
            }
        }
        best
    }

    /// Indices `(k, i)` sorted by decreasing residual, truncated.
    fn top(&self, xi: &[f64], count: usize) -> Vec<(usize, usize)> {
        let mut all: Vec<(f64, usize, usize)> = (0..self.grid.len())
            .flat_map(|k| (0..self.n).map(move |i| (k, i)))
            .map(|(k, i)| (self.residual(k, i, xi), k, i))
            .collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0));
        all.into_iter().take(count).map(|(_, k, i)| (k, i)).collect()
    }
}

pub fn check_condition_2_1(model: &NetworkModel, xi: &[f64], grid_points: usize) -> ConditionCheck {
    let sys = RowSystem::build(model, grid_points, 0.0);
    let (worst, row, k) = sys.worst(xi);
    ConditionCheck {
        eta: -worst,
        satisfied: worst <= -STRICT_TOL,
        worst_row: row,
        worst_t: sys.grid[k],
        grid_points,
    }
}

/// `max_{t, i} r_i(t; alpha)` on the grid.
pub fn max_alpha_residual(model: &NetworkModel, xi: &[f64], alpha: f64, grid_points: usize) -> f64 {
    let mut c = vec![0.0; model.n];
    let mut worst = f64::NEG_INFINITY;
    for t in model.period_grid(grid_points) {
        for i in 0..model.n {
            row_coefficients_into(model, t, i, alpha, &mut c);
            let r: f64 = c.iter().zip(xi).map(|(c, x)| c * x).sum();
            worst = worst.max(r);
        }
    }
    worst
}

/// Outcome of the conservative comparison-matrix warm start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub spectral_radius_bound: f64,
    pub xi: Vec<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSearch {
    pub xi: Vec<f64>,
    pub eta: f64,
    pub warm_start: WarmStart,
    pub lp_rounds: usize,
    pub worst_row: usize,
    pub worst_t: f64,
}

/// Worst-case comparison matrix `diag(inf d)^{-1} P` with
/// `P_ij = sup_t (G_j |a_ij(t)| + F_j TV_ij(t))`.
fn warm_start(model: &NetworkModel, grid_points: usize, alpha: f64) -> WarmStart {
    let n = model.n;
    let mut p = SquareMatrix::filled(n, 0.0f64);
    let mut delta = vec![f64::INFINITY; n];
    for t in model.period_grid(grid_points) {
        for i in 0..n {
            let c = row_coefficients(model, t, i, alpha);
            let d = model.d[i].eval(t) - alpha;
            delta[i] = delta[i].min(d);
            for j in 0..n {
                let off = if i == j { c[j] + d } else { c[j] };
                p[(i, j)] = f64::max(p[(i, j)], off);
            }
        }
    }
    if delta.iter().any(|&d| d <= 0.0) || p.iter().any(|(_, v)| !v.is_finite()) {
        return WarmStart {
            spectral_radius_bound: f64::INFINITY,
            xi: vec![1.0; n],
            accepted: false,
        };
    }
    let b = SquareMatrix::from_fn(n, |i, j| p[(i, j)] / delta[i]);
    let est = perron_vector(&b, 500, 1e-12);
    WarmStart {
        spectral_radius_bound: est.rho_upper,
        accepted: est.rho_upper < 1.0,
        xi: est.vector,
    }
}

/// Searches weights maximizing the margin of the rate condition at a fixed
/// `alpha` (the existence condition when `alpha = 0`).
///
/// Stage 1 tries the Perron vector of the worst-case comparison matrix.
/// Stage 2 solves `max eta  s.t.  r_i(t_k; alpha)(xi) + eta <= 0`,
/// `1 <= xi <= XI_BOX` by cutting planes over the grid: a dense simplex on
/// the active rows, then add the most violated grid rows and repeat.
pub fn find_xi_at_rate(model: &NetworkModel, alpha: f64, grid_points: usize) -> Result<XiSearch, CertifyError> {
    let n = model.n;
    let sys = RowSystem::build(model, grid_points, alpha);
    if sys.coeffs.iter().any(|c| !c.is_finite()) {
        let (_, worst_row, k) = sys.worst(&vec![1.0; n]);
        return Err(CertifyError::Infeasible {
            best_eta: f64::NEG_INFINITY,
            worst_row,
            worst_t: sys.grid[k],
            grid_points,
        });
    }
    let warm = warm_start(model, grid_points, alpha);

    // Work with xi' = xi / XI_BOX in [1/XI_BOX, 1]; homogeneity makes this
    // the same problem with better scaling.
    let lo = 1.0 / XI_BOX;
    let mut active: Vec<(usize, usize)> = Vec::new();
    let push = |set: &mut Vec<(usize, usize)>, cand: Vec<(usize, usize)>| {
        for c in cand {
            if !set.contains(&c) {
                set.push(c);
            }
        }
    };
    push(&mut active, sys.top(&vec![1.0; n], 4 * n));
    push(&mut active, sys.top(&warm.xi, 4 * n));
    let stride = (sys.grid.len() / 16).max(1);
    for k in (0..sys.grid.len()).step_by(stride) {
        push(&mut active, (0..n).map(|i| (k, i)).collect());
    }

    let mut rounds = 0;
    let (xi_scaled, lp_eta) = loop {
        rounds += 1;
        // variables: y_0..y_{n-1} (xi' = lo + y), e_plus, e_minus
        let nv = n + 2;
        let mut rows = Vec::with_capacity(active.len() + n);
        for &(k, i) in &active {
            let c = sys.row(k, i);
            let mut coeffs = c.to_vec();
            coeffs.push(1.0);
            coeffs.push(-1.0);
            let rhs = -lo * c.iter().sum::<f64>();
            rows.push((coeffs, rhs));
        }
        for j in 0..n {
            let mut coeffs = vec![0.0; nv];
            coeffs[j] = 1.0;
            rows.push((coeffs, 1.0 - lo));
        }
        let mut objective = vec![0.0; nv];
        objective[n] = 1.0;
        objective[n + 1] = -1.0;
        let lp = LinearProgram { objective, rows };
        let (x, eta) = match lp.solve() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => return Err(CertifyError::Solver(format!("{other:?} at round {rounds}"))),
        };
        let xi: Vec<f64> = x[..n].iter().map(|y| lo + y).collect();
        let violated: Vec<(usize, usize)> = sys
            .top(&xi, 2 * n)
            .into_iter()
            .filter(|&(k, i)| sys.residual(k, i, &xi) + eta > 1e-13)
            .filter(|c| !active.contains(c))
            .collect();
        if violated.is_empty() || rounds >= 200 {
            break (xi, eta);
        }
        push(&mut active, violated);
    };
    log::debug!("weight LP converged after {rounds} rounds with {} rows (eta'={lp_eta:e})", active.len());

    let min = xi_scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let xi: Vec<f64> = xi_scaled.iter().map(|x| x / min).collect();
    let (worst, worst_row, k) = sys.worst(&xi);
    let eta = -worst;
    if eta >= STRICT_TOL || (alpha > 0.0 && eta >= 0.0) {
        Ok(XiSearch {
            xi,
            eta,
            warm_start: warm,
            lp_rounds: rounds,
            worst_row,
            worst_t: sys.grid[k],
        })
    } else {
        Err(CertifyError::Infeasible {
            best_eta: eta,
            worst_row,
            worst_t: sys.grid[k],
            grid_points,
        })
    }
}

/// Weights for the existence condition, returned as a certificate with
/// `alpha = 0` and the a-priori bounds filled in.
pub fn find_xi(model: &NetworkModel, grid_points: usize) -> Result<Certificate, CertifyError> {
    let search = find_xi_at_rate(model, 0.0, grid_points)?;
    let bounds = compute_bounds(model, &search.xi, search.eta, grid_points);
    Ok(Certificate {
        xi: search.xi,
        eta: search.eta,
        alpha: 0.0,
        bounds,
        grid_points,
    })
}

/// Upper end of the bisection bracket: the rate can never exceed the
/// smallest self-inhibition, and must stay below every density's moment
/// abscissa.
pub fn alpha_ceiling(model: &NetworkModel, grid_points: usize) -> f64 {
    let d_min = model
        .d
        .iter()
        .flat_map(|e| model.period_grid(grid_points).map(move |t| e.eval(t)))
        .fold(f64::INFINITY, f64::min);
    let abscissa = model
        .kernels
        .iter()
        .map(|(_, k)| k.moment_abscissa())
        .fold(f64::INFINITY, f64::min);
    let cap = if abscissa.is_finite() {
        abscissa * (1.0 - 1e-9)
    } else {
        f64::INFINITY
    };
    d_min.min(cap).max(0.0)
}

/// Largest `alpha` on `[0, alpha_ceiling]` with `r_i(t; alpha) <= 0` on the
/// grid, by bisection. The residual is nondecreasing in `alpha`.
pub fn find_alpha(model: &NetworkModel, xi: &[f64], grid_points: usize, tol: f64) -> f64 {
    let ok = |alpha: f64| max_alpha_residual(model, xi, alpha, grid_points) <= 0.0;
    let mut hi = alpha_ceiling(model, grid_points);
    if ok(hi) {
        return hi;
    }
    let mut lo = 0.0;
    if !ok(lo) {
        return 0.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn compute_bounds(model: &NetworkModel, xi: &[f64], eta: f64, grid_points: usize) -> Bounds {
    let n = model.n;
    let mut j_bound: f64 = 0.0;
    let (mut d_hat, mut a_hat, mut k_hat, mut c_hat): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for t in model.period_grid(grid_points) {
        for i in 0..n {
            let inv = 1.0 / xi[i];
            let input = model.inputs[i].eval(t).abs();
            let mut row = input;
            d_hat = d_hat.max(model.d[i].eval(t).abs() * inv);
            c_hat = c_hat.max(input * inv);
            for jj in 0..n {
                let a = model.a[(i, jj)].eval(t).abs();
                let tv = model.kernels[(i, jj)].total_variation(t);
                row += a * model.g[jj].offset + model.f[jj].offset * tv;
                a_hat = a_hat.max(a * inv * model.g[jj].lipschitz);
                k_hat = k_hat.max(tv * model.f[jj].lipschitz * inv);
            }
            j_bound = j_bound.max(row);
        }
    }
    let m = if j_bound > 0.0 { 1.01 * j_bound / eta } else { 1.0 };
    Bounds {
        j: j_bound,
        m,
        n: (d_hat + a_hat + k_hat) * m + c_hat,
    }
}

/// Full pipeline: weights, decay rate, bounds.
pub fn certify(model: &NetworkModel, opts: &CertifyOptions) -> Result<Certificate, CertifyError> {
    let mut cert = find_xi(model, opts.grid_points)?;
    cert.alpha = find_alpha(model, &cert.xi, opts.grid_points, opts.alpha_tol);
    Ok(cert)
}

/// `max_i |x_i| / xi_i`.
pub fn weighted_norm(x: &[f64], xi: &[f64]) -> f64 {
    x.iter().zip(xi).map(|(v, w)| v.abs() / w).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
