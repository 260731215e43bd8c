//! Dense two-phase tableau simplex for small problems
//! `maximize c.x  s.t.  A x <= b, x >= 0`.
//!
//! Uses Bland's rule throughout, which is slow on big problems but never
//! cycles; the weight search only ever feeds it a few hundred rows.

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

pub struct LinearProgram {
    /// Objective coefficients, one per variable.
    pub objective: Vec<f64>,
    /// Constraint rows `(coefficients, rhs)` meaning `coeffs.x <= rhs`.
    pub rows: Vec<(Vec<f64>, f64)>,
}

struct Tableau {
    /// `rows x (cols + 1)`; last column is the right-hand side.
    data: Vec<f64>,
    width: usize,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize, obj: &mut [f64]) {
        let w = self.width;
        let p = self.at(pr, pc);
        let prow: Vec<f64> = self.data[pr * w..(pr + 1) * w].iter().map(|v| v / p).collect();
        self.data[pr * w..(pr + 1) * w].copy_from_slice(&prow);
        for r in 0..self.basis.len() {
            if r == pr {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            let f = row[pc];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on reduced costs `obj` (maximization form:
    /// entering columns have positive reduced cost). Returns false if
    /// unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> bool {
        let max_iters = 50_000;
        for _ in 0..max_iters {
            let Some(pc) = (0..allowed).find(|&c| obj[c] > PIVOT_TOL) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.basis.len() {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((br, bratio)) => {
                            ratio < bratio - 1e-15 || (ratio <= bratio + 1e-15 && self.basis[r] < self.basis[br])
                        }
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((pr, _)) => self.pivot(pr, pc, obj),
            }
        }
        log::warn!("simplex iteration cap reached");
        true
    }
}

impl LinearProgram {
    pub fn solve(&self) -> LpOutcome {
        let nv = self.objective.len();
        let m = self.rows.len();
        let negative: Vec<usize> = (0..m).filter(|&r| self.rows[r].1 < 0.0).collect();
        let na = negative.len();
        // columns: structural | slacks | artificials | rhs
        let cols = nv + m + na;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut art = 0;
        for (r, (coeffs, rhs)) in self.rows.iter().enumerate() {
            assert_eq!(coeffs.len(), nv, "row {r} has wrong length");
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[r * width..(r + 1) * width];
            for (c, v) in coeffs.iter().enumerate() {
                row[c] = sign * v;
            }
            row[nv + r] = sign;
            row[cols] = sign * rhs;
            if sign < 0.0 {
                row[nv + m + art] = 1.0;
                basis[r] = nv + m + art;
                art += 1;
            } else {
                basis[r] = nv + r;
            }
        }
        let mut tab = Tableau { data, width, basis };

        if na > 0 {
            // phase 1: maximize -sum(artificials)
            let mut obj = vec![0.0; width];
            for &r in &negative {
                for c in 0..width {
                    obj[c] += tab.at(r, c);
                }
            }
            for c in nv + m..cols {
                obj[c] = 0.0;
            }
            tab.optimize(&mut obj, nv + m);
            if obj[cols] > FEAS_TOL * (1.0 + max_abs_rhs(&self.rows)) {
                return LpOutcome::Infeasible;
            }
            // drive remaining artificials out of the basis
            for r in 0..m {
                if tab.basis[r] >= nv + m {
                    if let Some(pc) = (0..nv + m).find(|&c| tab.at(r, c).abs() > PIVOT_TOL) {
                        let mut dummy = vec![0.0; width];
                        tab.pivot(r, pc, &mut dummy);
                    }
                }
            }
        }

        // phase 2 reduced costs: c - c_B B^-1 A
        let mut obj = vec![0.0; width];
        obj[..nv].copy_from_slice(&self.objective);
        for r in 0..m {
            let b = tab.basis[r];
            if b < nv {
                let cb = self.objective[b];
                if cb != 0.0 {
                    for c in 0..width {
                        obj[c] -= cb * tab.at(r, c);
                    }
                }
            }
        }
        if !tab.optimize(&mut obj, nv + m) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; nv];
        for r in 0..m {
            if tab.basis[r] < nv {
                x[tab.basis[r]] = tab.rhs(r).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, objective }
    }
}

fn max_abs_rhs(rows: &[(Vec<f64>, f64)]) -> f64 {
    rows.iter().map(|(_, b)| b.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y; x <= 4; 2y <= 12; 3x + 2y <= 18 -> (2, 6), 36
        let lp = LinearProgram {
            objective: vec![3.0, 5.0],
            rows: vec![
                (vec![1.0, 0.0], 4.0),
                (vec![0.0, 2.0], 12.0),
                (vec![3.0, 2.0], 18.0),
            ],
        };
        match lp.solve() {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 36.0).abs() < 1e-12);
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_phase_one() {
        // max -x - y; x + y >= 2 (as -x - y <= -2); x <= 5
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0],
            rows: vec![(vec![-1.0, -1.0], -2.0), (vec![1.0, 0.0], 5.0)],
        };
        match lp.solve() {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LinearProgram {
            objective: vec![1.0],
            rows: vec![(vec![1.0], 1.0), (vec![-1.0], -2.0)],
        };
        assert_eq!(infeasible.solve(), LpOutcome::Infeasible);
        let unbounded = LinearProgram {
            objective: vec![1.0, 0.0],
            rows: vec![(vec![0.0, 1.0], 1.0)],
        };
        assert_eq!(unbounded.solve(), LpOutcome::Unbounded);
    }

    /// Vertex enumeration over all pairs of tight constraints in 2D.
    fn brute_force(obj: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
        let mut all: Vec<([f64; 2], f64)> = rows.to_vec();
        all.push(([-1.0, 0.0], 0.0));
        all.push(([0.0, -1.0], 0.0));
        let mut best: Option<f64> = None;
        for p in 0..all.len() {
            for q in p + 1..all.len() {
                let (a, b) = (all[p], all[q]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-9 {
                    continue;
                }
                let x = (a.1 * b.0[1] - a.0[1] * b.1) / det;
                let y = (a.0[0] * b.1 - a.1 * b.0[0]) / det;
                if all.iter().all(|(c, r)| c[0] * x + c[1] * y <= r + 1e-7) {
                    let v = obj[0] * x + obj[1] * y;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            obj in prop::array::uniform2(-3.0f64..3.0),
            rows in prop::collection::vec((prop::array::uniform2(-2.0f64..2.0), -1.0f64..4.0), 1..6),
        ) {
            // bounding box keeps the oracle finite
            let mut rows = rows;
            rows.push(([1.0, 0.0], 10.0));
            rows.push(([0.0, 1.0], 10.0));
            let lp = LinearProgram {
                objective: obj.to_vec(),
                rows: rows.iter().map(|(c, r)| (c.to_vec(), *r)).collect(),
            };
            let oracle = brute_force(obj, &rows);
            match (lp.solve(), oracle) {
                (LpOutcome::Optimal { objective, .. }, Some(best)) => {
                    prop_assert!((objective - best).abs() < 1e-6, "{} vs {}", objective, best);
                }
                (LpOutcome::Infeasible, None) => {}
                (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
            }
        }
    }
}
