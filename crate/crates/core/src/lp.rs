//! Small dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Only used on the tiny programs produced by feasible regions (tens of
//! variables), so the tableau is dense and reduced costs are recomputed
//! every iteration.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize cᵀx subject to rows, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn constrain(&mut self, coefficients: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        debug_assert_eq!(coefficients.len(), self.objective.len());
        self.constraints.push(Constraint {
            coefficients,
            sense,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        let m = self.constraints.len();
        let n_slack = self
            .constraints
            .iter()
            .filter(|c| c.sense != Sense::Eq)
            .count();

        // Normalize to nonnegative right-hand sides.
        let rows: Vec<Constraint> = self
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    Constraint {
                        coefficients: c.coefficients.iter().map(|v| -v).collect(),
                        sense: match c.sense {
                            Sense::Le => Sense::Ge,
                            Sense::Ge => Sense::Le,
                            Sense::Eq => Sense::Eq,
                        },
                        rhs: -c.rhs,
                    }
                } else {
                    c.clone()
                }
            })
            .collect();
        let n_art = rows.iter().filter(|c| c.sense != Sense::Le).count();
        let ncols = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut tableau = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0usize; m];
        let mut slack = n;
        let mut art = art_start;
        for (r, c) in rows.iter().enumerate() {
            tableau[r][..n].copy_from_slice(&c.coefficients);
            tableau[r][ncols] = c.rhs;
            match c.sense {
                Sense::Le => {
                    tableau[r][slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    tableau[r][slack] = -1.0;
                    slack += 1;
                    tableau[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Sense::Eq => {
                    tableau[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
        }

        // Phase 1: drive artificial variables to zero.
        if n_art > 0 {
            let mut cost = vec![0.0; ncols];
            for c in cost.iter_mut().skip(art_start) {
                *c = -1.0;
            }
            run_simplex(&mut tableau, &mut basis, &cost, ncols)?;
            let infeasibility: f64 = basis
                .iter()
                .enumerate()
                .filter(|&(_, &b)| b >= art_start)
                .map(|(r, _)| tableau[r][ncols])
                .sum();
            if infeasibility > FEAS_TOL {
                return Err(Error::Infeasible(format!(
                    "linear constraints cannot be satisfied (phase-one residual {infeasibility:e})"
                )));
            }
            // Pivot remaining artificial basics out, dropping redundant rows.
            let mut r = 0;
            while r < tableau.len() {
                if basis[r] >= art_start {
                    match (0..art_start).find(|&j| tableau[r][j].abs() > 1e-9) {
                        Some(j) => {
                            pivot(&mut tableau, &mut basis, r, j);
                            r += 1;
                        }
                        None => {
                            tableau.remove(r);
                            basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&self.objective);
        run_simplex(&mut tableau, &mut basis, &cost, art_start)?;

        let mut x = vec![0.0; n];
        for (r, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = tableau[r][ncols].max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, value })
    }
}

/// Primal simplex on a tableau already in canonical form for `basis`.
/// Only columns `< allowed` may enter.
fn run_simplex(
    tableau: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    allowed: usize,
) -> Result<()> {
    let rhs = tableau.first().map_or(0, |row| row.len() - 1);
    for _ in 0..MAX_PIVOTS {
        // Bland: lowest-index column with positive reduced cost.
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j]
                - basis
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| cost[b] * tableau[r][j])
                    .sum::<f64>();
            reduced > EPS
        });
        let Some(col) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in tableau.iter().enumerate() {
            if row[col] > EPS {
                let ratio = row[rhs] / row[col];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - EPS
                            || ((ratio - lratio).abs() <= EPS && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Invalid("linear program is unbounded".into()));
        };
        pivot(tableau, basis, row, col);
    }
    Err(Error::Invalid("simplex pivot limit reached".into()))
}

fn pivot(tableau: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = tableau[row][col];
    for v in tableau[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tableau[row].clone();
    for (r, other) in tableau.iter_mut().enumerate() {
        if r != row {
            let factor = other[col];
            if factor != 0.0 {
                for (v, pv) in other.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
    }
    basis[row] = col;
}
