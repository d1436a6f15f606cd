//! Two-phase exact simplex over big rationals.
//!
//! Feasibility questions about measure cones are boundary questions, so the
//! solver never rounds: every pivot is exact and Bland's rule guarantees
//! termination without perturbation. Problems here are tiny (tens of
//! variables), so a dense tableau is the right tool.

use num_traits::{One, Signed, Zero};

use crate::linalg::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

struct Tableau {
    a: Vec<Vec<Rat>>, // m x n, basis columns kept as identity
    b: Vec<Rat>,      // m, non-negative
    cost: Vec<Rat>,   // reduced costs, length n
    obj: Rat,         // objective value of the current basic solution
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.a[row][col].clone();
        for x in self.a[row].iter_mut() {
            *x = &*x / &inv;
        }
        self.b[row] = &self.b[row] / &inv;
        for r in 0..self.a.len() {
            if r != row && !self.a[r][col].is_zero() {
                let f = self.a[r][col].clone();
                for c in 0..self.a[r].len() {
                    let sub = &self.a[row][c] * &f;
                    self.a[r][c] = &self.a[r][c] - sub;
                }
                let sub = &self.b[row] * &f;
                self.b[r] = &self.b[r] - sub;
            }
        }
        if !self.cost[col].is_zero() {
            let f = self.cost[col].clone();
            for c in 0..self.cost.len() {
                let sub = &self.a[row][c] * &f;
                self.cost[c] = &self.cost[c] - sub;
            }
            let add = &self.b[row] * &f;
            self.obj = &self.obj + add;
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering column = least index with positive reduced
    /// cost; leaving row = least ratio, ties broken by least basis index.
    fn run(&mut self, allowed: usize) -> Result<(), ()> {
        loop {
            let Some(col) = (0..allowed).find(|&c| self.cost[c].is_positive()) else {
                return Ok(());
            };
            let mut best: Option<(Rat, usize, usize)> = None; // ratio, basis var, row
            for r in 0..self.a.len() {
                if self.a[r][col].is_positive() {
                    let ratio = &self.b[r] / &self.a[r][col];
                    let key = (ratio, self.basis[r], r);
                    best = match best {
                        None => Some(key),
                        Some(cur) => {
                            if (key.0.clone(), key.1) < (cur.0.clone(), cur.1) {
                                Some(key)
                            } else {
                                Some(cur)
                            }
                        }
                    };
                }
            }
            match best {
                Some((_, _, row)) => self.pivot(row, col),
                None => return Err(()), // unbounded in this column
            }
        }
    }
}

/// Maximizes `objective . x` subject to `constraints . x = rhs`, `x >= 0`.
pub fn maximize(objective: &[Rat], constraints: &[Vec<Rat>], rhs: &[Rat]) -> LpResult {
    let n = objective.len();
    let m = constraints.len();
    debug_assert!(constraints.iter().all(|r| r.len() == n));

    // normalize rows so rhs >= 0, then append the artificial identity
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut b: Vec<Rat> = Vec::with_capacity(m);
    for (row, r) in constraints.iter().zip(rhs) {
        if r.is_negative() {
            a.push(row.iter().map(|x| -x.clone()).collect());
            b.push(-r.clone());
        } else {
            a.push(row.clone());
            b.push(r.clone());
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..m {
            row.push(if i == j { Rat::one() } else { Rat::zero() });
        }
    }

    // phase 1: maximize -sum(artificials); reduced costs start at column sums
    let mut cost = vec![Rat::zero(); n + m];
    for row in &a {
        for (j, c) in cost.iter_mut().enumerate().take(n) {
            *c = &*c + &row[j];
        }
    }
    let mut obj = -b.iter().fold(Rat::zero(), |acc, x| acc + x);
    // artificial columns have reduced cost 0 in the initial basis
    let mut t = Tableau {
        a,
        b,
        cost,
        obj,
        basis: (n..n + m).collect(),
    };
    t.run(n).expect("phase 1 is bounded");
    if t.obj.is_negative() {
        return LpResult::Infeasible;
    }

    // drive artificials out of the basis; rows that cannot pivot are redundant
    let mut drop_rows = Vec::new();
    for r in 0..t.a.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&c| !t.a[r][c].is_zero()) {
                Some(c) => t.pivot(r, c),
                None => drop_rows.push(r),
            }
        }
    }
    for &r in drop_rows.iter().rev() {
        t.a.remove(r);
        t.b.remove(r);
        t.basis.remove(r);
    }
    for row in t.a.iter_mut() {
        row.truncate(n);
    }

    // phase 2: rebuild reduced costs from the real objective
    t.cost = objective.to_vec();
    obj = Rat::zero();
    for r in 0..t.a.len() {
        let bc = objective[t.basis[r]].clone();
        if !bc.is_zero() {
            for c in 0..n {
                let sub = &t.a[r][c] * &bc;
                t.cost[c] = &t.cost[c] - sub;
            }
            obj = obj + &t.b[r] * &bc;
        }
    }
    t.obj = obj;
    if t.run(n).is_err() {
        return LpResult::Unbounded;
    }

    let mut point = vec![Rat::zero(); n];
    for r in 0..t.a.len() {
        point[t.basis[r]] = t.b[r].clone();
    }
    LpResult::Optimal {
        value: t.obj.clone(),
        point,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, rat_frac};

    #[test]
    fn simple_max() {
        // max x0 s.t. x0 + x1 = 1 -> 1
        let r = maximize(
            &[rat(1), rat(0)],
            &[vec![rat(1), rat(1)]],
            &[rat(1)],
        );
        assert_eq!(
            r,
            LpResult::Optimal {
                value: rat(1),
                point: vec![rat(1), rat(0)]
            }
        );
    }

    #[test]
    fn infeasible_detected() {
        // x0 + x1 = -1 with x >= 0
        let r = maximize(&[rat(1), rat(1)], &[vec![rat(1), rat(1)]], &[rat(-1)]);
        assert_eq!(r, LpResult::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // max x0 s.t. x0 - x1 = 0
        let r = maximize(&[rat(1), rat(0)], &[vec![rat(1), rat(-1)]], &[rat(0)]);
        assert_eq!(r, LpResult::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let r = maximize(
            &[rat(1), rat(0)],
            &[vec![rat(1), rat(1)], vec![rat(2), rat(2)]],
            &[rat(1), rat(2)],
        );
        assert_eq!(
            r,
            LpResult::Optimal {
                value: rat(1),
                point: vec![rat(1), rat(0)]
            }
        );
    }

    #[test]
    fn fractional_optimum_exact() {
        // max x0 s.t. 3 x0 + 2 x1 = 1, x1 fixed share
        let r = maximize(
            &[rat(1), rat(0)],
            &[vec![rat(3), rat(2)]],
            &[rat(1)],
        );
        assert_eq!(
            r,
            LpResult::Optimal {
                value: rat_frac(1, 3),
                point: vec![rat_frac(1, 3), rat(0)]
            }
        );
    }
}
