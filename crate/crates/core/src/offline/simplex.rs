//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible, so no phase one is needed. Entering columns use
//! Dantzig's rule; after a run of degenerate pivots the solver switches to
//! Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 64;

/// A linear program in inequality form with sparse rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// `(sum_k coeff_k x_{var_k}) <= rhs`, one entry per constraint.
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One nonnegative multiplier per constraint row.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpProblem {
    /// Tableau entries the dense solver would allocate.
    pub fn dense_size(&self) -> usize {
        (self.rows.len() + 1) * (self.num_vars + self.rows.len() + 1)
    }
}

pub fn solve_dense(lp: &LpProblem) -> Result<LpSolution> {
    let n = lp.num_vars;
    let m = lp.rows.len();
    if lp.objective.len() != n {
        return Err(Error::invalid("objective length differs from the variable count"));
    }
    let width = n + m + 1;
    let mut t = vec![0.0f64; (m + 1) * width];
    for (r, (coeffs, rhs)) in lp.rows.iter().enumerate() {
        if !(*rhs >= 0.0) {
            return Err(Error::invalid(format!("row {r} has negative right-hand side {rhs}")));
        }
        let row = &mut t[r * width..(r + 1) * width];
        for &(k, a) in coeffs {
            if k >= n {
                return Err(Error::invalid(format!("row {r} names variable {k} of {n}")));
            }
            row[k] += a;
        }
        row[n + r] = 1.0;
        row[width - 1] = *rhs;
    }
    {
        let obj = &mut t[m * width..];
        for (k, &c) in lp.objective.iter().enumerate() {
            obj[k] = -c;
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_pivots = 50 * (n + m) + 10_000;
    let mut pivots = 0;
    let mut degenerate = 0;

    loop {
        let obj = &t[m * width..(m + 1) * width - 1];
        let bland = degenerate >= DEGENERATE_RUN;
        let entering = if bland {
            obj.iter().position(|&v| v < -PIVOT_TOL)
        } else {
            let mut best = None;
            let mut most = -PIVOT_TOL;
            for (k, &v) in obj.iter().enumerate() {
                if v < most {
                    most = v;
                    best = Some(k);
                }
            }
            best
        };
        let Some(q) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t[r * width + q];
            if a > PIVOT_TOL {
                let ratio = t[r * width + width - 1] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lv)) => {
                        if ratio < lv - 1e-12 || (ratio <= lv + 1e-12 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lv))
                        }
                    }
                };
            }
        }
        let Some((p, ratio)) = leave else {
            return Err(Error::Solver("linear program is unbounded".into()));
        };
        if ratio <= 1e-12 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        let piv = t[p * width + q];
        for v in &mut t[p * width..(p + 1) * width] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = t[p * width..(p + 1) * width].to_vec();
        for r in 0..=m {
            if r == p {
                continue;
            }
            let f = t[r * width + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut t[r * width..(r + 1) * width];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                if pv != 0.0 {
                    *v -= f * pv;
                }
            }
            row[q] = 0.0;
        }
        basis[p] = q;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("simplex exceeded {max_pivots} pivots")));
        }
    }

    let mut x = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[r * width + width - 1].max(0.0);
        }
    }
    let duals = (0..m).map(|r| t[m * width + n + r].max(0.0)).collect();
    Ok(LpSolution {
        x,
        objective: t[m * width + width - 1],
        duals,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_example() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![3.0, 5.0],
            rows: vec![
                (vec![(0, 1.0)], 4.0),
                (vec![(1, 2.0)], 12.0),
                (vec![(0, 3.0), (1, 2.0)], 18.0),
            ],
        };
        let s = solve_dense(&lp).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        // strong duality
        let dual: f64 = s.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual - 36.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_reported() {
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            rows: vec![(vec![(0, 1.0)], 1.0)],
        };
        assert!(matches!(solve_dense(&lp), Err(Error::Solver(_))));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example (converted to max form) has optimum 0.05.
        let lp = LpProblem {
            num_vars: 4,
            objective: vec![0.75, -150.0, 0.02, -6.0],
            rows: vec![
                (vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0),
                (vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0),
                (vec![(2, 1.0)], 1.0),
            ],
        };
        let s = solve_dense(&lp).unwrap();
        assert!((s.objective - 0.05).abs() < 1e-9);
    }
}
